"""Watch the disturbance-estimation error shrink on a linear error model.

With a constant matched disturbance the estimate error obeys a scalar
recursion with factor 1 − Ts/τ. τ = Ts is deadbeat; τ < Ts/2 blows up.
"""

import numpy as np

from dtude import ACTUAL, manipulator_system
from dtude.errors import DivergenceError
from dtude.simkern import run_linear_ude
from dtude.ude import UdeConfig, design_kd

sys = manipulator_system(ACTUAL, 0.01)
kd = design_kd(sys)
ld = sys.Gn @ np.array([4.0, -3.0])

for tau in (0.05, 0.02, 0.01, 0.004):
    cfg = UdeConfig(sys=sys, Kd=kd, tau=tau, allow_unstable_tau=True)
    try:
        out = run_linear_ude(cfg, ld, 12)
    except DivergenceError as exc:
        out = exc.trace
    err = np.linalg.norm(out["ld_err"], axis=1)
    print(f"tau = {tau:<6} factor {1 - sys.Ts / tau:+.2f}  |error|:", " ".join(f"{v:.1e}" for v in err[:8]))
