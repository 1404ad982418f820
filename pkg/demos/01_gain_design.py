"""Design the controller and observer gains for the two-link arm.

The controller gain puts each joint's closed-loop poles on the reference
model's poles; the observer poles sit ten times closer to the origin.
"""

import numpy as np

from dtude import ACTUAL, manipulator_system, matlib
from dtude.manipulator import JOINT_BLOCKS
from dtude.observer import design_beta
from dtude.ude import design_kd

np.set_printoptions(precision=4, suppress=True)

for ts in (0.01, 0.001):
    sys = manipulator_system(ACTUAL, ts)
    kd = design_kd(sys)
    beta = design_beta(sys)
    print(f"Ts = {ts}")
    print("  reference poles per joint:", [np.round(b.real, 6) for b in matlib.block_eigenvalues(sys.Fm, JOINT_BLOCKS)])
    print("  Kd =", kd[0, :2], kd[1, 2:])
    print("  beta =", beta[:2, 0], beta[2:, 1])
    print("  observer spectral radius:", round(matlib.spectral_radius(sys.Fn - beta @ sys.C), 6))

# The second observer entry scales like 1/Ts; the first barely moves.
