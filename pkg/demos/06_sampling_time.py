"""Why 10 ms sampling fails on this arm.

The estimate feeds back on itself through the true inertia: the lumped
disturbance contains (M⁻¹ − M₀⁻¹)·u, and u contains the estimate. Per step the
estimate error is multiplied by I − (Ts/τ)·M₀·M(θ)⁻¹, whose spectral radius
must stay below one.
"""

import numpy as np

from dtude import ACTUAL, Scenario, run_closed_loop, stability
from dtude.errors import DivergenceError
from dtude.manipulator import nominal_mu

mu = nominal_mu(ACTUAL)
for ts in (0.01, 0.005, 0.0025, 0.001):
    rho, th2 = stability.estimator_coupling_radius(ACTUAL, mu, ts, 0.01)
    try:
        tr = run_closed_loop(Scenario(Ts=ts, substeps=max(1, round(ts / 0.001)), duration=5.0))
        outcome = f"completes, final |e| = {np.abs(tr.e[-1, [0, 2]]).round(3)}"
    except DivergenceError as exc:
        outcome = f"diverges at t = {exc.t:.2f} s"
    print(f"Ts = {ts:<7} radius {rho:.3f} (worst theta2 = {th2:.2f})  {outcome}")

# Keeping Ts = 0.01 works once tau is a little above 1.83·Ts.
for tau in (0.018, 0.0185, 0.02):
    print(f"Ts = 0.01, tau = {tau}: radius {stability.estimator_coupling_radius(ACTUAL, mu, 0.01, tau)[0]:.3f}")
