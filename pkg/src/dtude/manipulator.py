"""Two-link planar manipulator: inertia, Coriolis and gravity terms.

State vectors are ordered ``[θ₁, θ̇₁, θ₂, θ̇₂]`` (rad, rad/s); torques are
``[τ₁, τ₂]`` in N·m.
"""

from dataclasses import dataclass
from math import cos, isfinite, pi, sin

import numpy as np

from .errors import SingularityError


@dataclass(frozen=True)
class ManipulatorParams:
    m1: float
    m2: float
    l1: float
    l2: float
    g: float = 9.8

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "g"):
            v = getattr(self, name)
            if not (isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v}")


ACTUAL = ManipulatorParams(m1=2.0, m2=1.0, l1=2.0, l2=1.0)
UNCERTAIN = ManipulatorParams(m1=2.4, m2=1.3, l1=2.5, l2=1.2)

# Joint positions are the measured outputs.
OUTPUT_MATRIX = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])

# Stable reference model: two decoupled chains with poles at -1 and -2.
REFERENCE_A = np.array(
    [[0.0, 1.0, 0.0, 0.0], [-2.0, -3.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, -2.0, -3.0]]
)
REFERENCE_B = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])

# (state indices, input index) for the two single-input chains.
JOINT_BLOCKS = [((0, 1), 0), ((2, 3), 1)]


def reference_inputs(t):
    """Reference-model inputs r₁ = 5 sin t, r₂ = 5 sin 2t."""
    return np.array([5.0 * sin(t), 5.0 * sin(2.0 * t)])


def external_disturbance(x, t=0.0):
    """State-dependent acceleration disturbance [20 sin 2πθ₁, 10 sin 2πθ₂]."""
    return np.array([20.0 * sin(2.0 * pi * x[0]), 10.0 * sin(2.0 * pi * x[2])])


def _terms(p, th1, th2, dth1, dth2):
    c2, s2 = cos(th2), sin(th2)
    m11 = p.m1 * p.l1**2 + p.m2 * (p.l1**2 + p.l2**2 + 2.0 * p.l1 * p.l2 * c2)
    m12 = p.m2 * (p.l2**2 + p.l1 * p.l2 * c2)
    m22 = p.m2 * p.l2**2
    h = p.m2 * p.l1 * p.l2 * s2
    c1 = -h * dth2 * (2.0 * dth1 + dth2)
    cc2 = h * dth1**2
    s12 = sin(th1 + th2)
    k1 = (p.m1 + p.m2) * p.g * p.l1 * sin(th1) + p.m2 * p.g * p.l2 * s12
    k2 = p.m2 * p.g * p.l2 * s12
    return m11, m12, m22, c1, cc2, k1, k2


def eval_mck(p, x):
    """Inertia matrix M(θ), Coriolis vector C(θ, θ̇) and gravity vector K(θ)."""
    m11, m12, m22, c1, c2, k1, k2 = _terms(p, x[0], x[2], x[1], x[3])
    return np.array([[m11, m12], [m12, m22]]), np.array([c1, c2]), np.array([k1, k2])


def _accel(p, x, u, d):
    m11, m12, m22, c1, c2, k1, k2 = _terms(p, x[0], x[2], x[1], x[3])
    det = m11 * m22 - m12 * m12
    if not det > 1e-12 * m11 * m22:
        raise SingularityError(f"inertia matrix is singular (det={det:.3e})")
    f1 = u[0] - c1 - k1
    f2 = u[1] - c2 - k2
    a1 = (m22 * f1 - m12 * f2) / det + d[0]
    a2 = (m11 * f2 - m12 * f1) / det + d[1]
    return a1, a2


def forward_dynamics(p, x, u, d_ext=(0.0, 0.0)):
    """State derivative with θ̈ = M⁻¹(τ − C − K) + d′."""
    a1, a2 = _accel(p, x, u, d_ext)
    return np.array([x[1], a1, x[3], a2])


def nominal_mu(p):
    """Diagonal of M₀⁻¹: inverse diagonal of M(θ) with the cosine set to one."""
    return np.array([1.0 / (p.m1 * p.l1**2 + p.m2 * (p.l1 + p.l2) ** 2), 1.0 / (p.m2 * p.l2**2)])


def total_disturbance(p_actual, mu, x, u, d_ext=(0.0, 0.0)):
    """Total disturbance d = d′ − M⁻¹(C + K) + (M⁻¹ − M₀⁻¹)τ."""
    a1, a2 = _accel(p_actual, x, u, d_ext)
    return np.array([a1 - mu[0] * u[0], a2 - mu[1] * u[1]])


def nominal_input_matrix(p):
    """Double-integrator pair (A, B) with B carrying μ₁, μ₂ in rows 2 and 4."""
    mu = nominal_mu(p)
    a = np.zeros((4, 4))
    a[0, 1] = a[2, 3] = 1.0
    b = np.zeros((4, 2))
    b[1, 0], b[3, 1] = mu
    return a, b
