"""Check the three Schur conditions and bound the error ball.

The radius uses the largest one-step change of the lumped disturbance seen in
a simulation, then every sample outside that ball is checked for a falling
Lyapunov function.
"""

import numpy as np

from dtude import Scenario, run_closed_loop, simkern, stability

sc = Scenario(Ts=0.001, substeps=1, duration=10.0)
ucfg, ocfg = simkern.design_dt_ude(sc)
ed = stability.assemble(ucfg.sys, ucfg.Kd, ocfg.beta, sc.tau)
print(stability.check_conditions(ed, sc.Ts, sc.tau).format())

tr = run_closed_loop(sc)
eta = float(np.max(np.linalg.norm(np.diff(tr.Ld[:-1], axis=0), axis=1)))
cert = stability.convergence_radius(ed, eta)
xi = stability.error_state(tr)
bad, outside = stability.lyapunov_violations(cert.P, xi, cert.R)
print(f"p_max = {cert.p_max:.3g}, ||A|| = {cert.norm_A:.3g}, R = {cert.R:.3g}")
print(f"largest |xi| = {np.max(np.linalg.norm(xi, axis=1)):.3g}; {outside} samples outside R, {bad} violations")
# The ball is very loose: p_max grows like 1/(1 - rho^2) for poles near 1.
