"""Comparison controllers: sliding mode, gravity-compensated PD, continuous-time UDE.

All three are continuous-time laws that read the true plant state. The
simulator evaluates them on its integration grid.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import matlib
from .manipulator import JOINT_BLOCKS, UNCERTAIN, eval_mck


def design_continuous_gain(a, b, a_m, blocks=None):
    """K with eig(A − B·K) equal to the per-block eigenvalues of ``a_m``."""
    blocks = JOINT_BLOCKS if blocks is None else blocks
    return matlib.place_poles(a, b, matlib.block_eigenvalues(a_m, blocks), blocks)


def reference_acceleration(a_m, b_m, xm, r):
    """Joint accelerations of the reference model (rows 2 and 4 of A_m·x_m + B_m·r)."""
    dx = a_m @ xm + b_m @ r
    return dx[[1, 3]]


def saturate(s, eps):
    """Boundary-layer saturation: s/‖s‖ outside the layer, s/ε inside."""
    s = np.asarray(s, dtype=float)
    ns = float(np.linalg.norm(s))
    if ns > eps:
        return s / ns
    return s / eps


@dataclass(frozen=True)
class SmcConfig:
    K: np.ndarray
    D_bounds: np.ndarray = field(default_factory=lambda: np.array([15.0, 10.0]))
    epsilon: float = 0.1
    KD_slide: float = 7.0
    uncertain_params: object = UNCERTAIN

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"boundary-layer width must be positive, got {self.epsilon}")
        if np.any(np.asarray(self.D_bounds) < 0):
            raise ValueError("uncertainty bounds must be non-negative")


def sliding_surface(e, kd):
    """Per-joint surfaces s_i = ė_i + K_D·e_i."""
    return np.array([e[1] + kd * e[0], e[3] + kd * e[2]])


def smc_parts(cfg, x, xm, ddtheta_m):
    """Return (feedback, feedforward, robust) torque components."""
    e = np.asarray(x) - np.asarray(xm)
    m, c, k = eval_mck(cfg.uncertain_params, x)
    tau_ff = m @ ddtheta_m + c + k
    s = sliding_surface(e, cfg.KD_slide)
    # Negative sign drives s toward zero for e = x − x_m.
    tau_d = -np.asarray(cfg.D_bounds) * saturate(s, cfg.epsilon)
    return -cfg.K @ e, tau_ff, tau_d


def smc_control(cfg, x, xm, ddtheta_m):
    fb, ff, rob = smc_parts(cfg, x, xm, ddtheta_m)
    return fb + ff + rob


@dataclass(frozen=True)
class PdConfig:
    KP: float = 1.0
    KD: float = 0.1
    params_for_gravity: object = UNCERTAIN


def pd_gravity_control(cfg, x, xm):
    """PD on joint errors (negative feedback) plus gravity compensation."""
    x = np.asarray(x)
    xm = np.asarray(xm)
    _, _, k = eval_mck(cfg.params_for_gravity, x)
    pos = x[[0, 2]] - xm[[0, 2]]
    vel = x[[1, 3]] - xm[[1, 3]]
    return -cfg.KP * pos - cfg.KD * vel + k


@dataclass(frozen=True)
class CtUdeConfig:
    K: np.ndarray
    A: np.ndarray
    B: np.ndarray
    tau: float = 0.01
    integral_accumulator: np.ndarray | None = None
    prev_error: np.ndarray | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.integral_accumulator is None:
            object.__setattr__(self, "integral_accumulator", np.zeros(np.shape(self.A)[0]))

    @property
    def B_pinv(self):
        return matlib.pinv(self.B)


def ct_ude_control(cfg, e, dt, b_pinv=None):
    """u = −K·e − (1/τ)·B⁺·(e − (A − B·K)·∫e dt), integral by the trapezoidal rule.

    The first call sets the integration origin; every later call adds
    ``dt·(e_prev + e)/2``. Returns ``(u, updated_cfg)``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    e = np.asarray(e, dtype=float)
    integral = cfg.integral_accumulator
    if cfg.prev_error is not None:
        integral = integral + 0.5 * dt * (cfg.prev_error + e)
    bp = cfg.B_pinv if b_pinv is None else b_pinv
    acl = cfg.A - cfg.B @ cfg.K
    u = -cfg.K @ e - (bp @ (e - acl @ integral)) / cfg.tau
    return u, replace(cfg, integral_accumulator=integral, prev_error=e)
