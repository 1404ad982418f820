"""Discrete-time uncertainty and disturbance estimator (UDE) control law.

The lumped disturbance is estimated through the first-order digital filter
``1 / (1 + τγ)`` with ``γ = (z − 1)/Ts``. Inverting that filter inside the
control loop turns the estimate into a running sum, which is what
:func:`control_step` keeps in ``UdeState.accumulator``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import matlib
from .errors import ProtocolError, StabilityError


@dataclass(frozen=True)
class UdeConfig:
    sys: object
    Kd: np.ndarray
    tau: float = 0.01
    allow_unstable_tau: bool = False
    Gn_pinv: np.ndarray = field(init=False, repr=False)
    Fc: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        kd = np.asarray(self.Kd, dtype=float)
        object.__setattr__(self, "Kd", kd)
        ts = self.sys.Ts
        if not self.tau > 0:
            raise StabilityError(f"filter parameter tau must be positive, got {self.tau}")
        if not self.tau > ts / 2 and not self.allow_unstable_tau:
            raise StabilityError(
                f"tau={self.tau} violates the estimator stability condition tau > Ts/2 = {ts / 2}; "
                f"|1 - Ts/tau| = {abs(1 - ts / self.tau):.4g} >= 1"
            )
        fc = self.sys.Fn - self.sys.Gn @ kd
        rho = matlib.spectral_radius(fc)
        if rho >= 1.0:
            raise StabilityError(f"Fn - Gn·Kd is not Schur (spectral radius {rho:.6g})")
        object.__setattr__(self, "Fc", fc)
        object.__setattr__(self, "Gn_pinv", matlib.pinv(self.sys.Gn))

    @property
    def gain(self):
        """Filter gain Ts/τ."""
        return self.sys.Ts / self.tau


@dataclass(frozen=True)
class UdeState:
    accumulator: np.ndarray
    prev_error: np.ndarray | None = None
    step_index: int = 0

    @classmethod
    def initial(cls, p):
        return cls(accumulator=np.zeros(p))


def design_kd(sys, targets=None, blocks=None):
    """Controller gain placing eig(Fn − Gn·Kd) at ``targets`` (default: eig(Fm) per block)."""
    from .manipulator import JOINT_BLOCKS

    blocks = JOINT_BLOCKS if blocks is None else blocks
    if targets is None:
        targets = matlib.block_eigenvalues(sys.Fm, blocks)
    for t in targets:
        if np.any(np.abs(np.asarray(t, dtype=complex)) >= 1.0):
            raise StabilityError(f"controller targets must lie inside the unit disk: {t}")
    return matlib.place_poles(sys.Fn, sys.Gn, targets, blocks)


def control_step(cfg, st, err, k=None):
    """One sample of the UDE law.

    Returns ``(u, new_state, u_d)``. At k = 0 the accumulator starts at
    ``−(Ts/τ)·Gn⁺·e(0)``; afterwards it moves by
    ``−(Ts/τ)·Gn⁺·(e(k) − Fc·e(k−1))``. The control is ``u = −Kd·e + u_d``.
    """
    if k is not None and k != st.step_index:
        raise ProtocolError(f"expected step {st.step_index}, got {k}")
    err = np.asarray(err, dtype=float)
    if st.step_index == 0:
        ud = -cfg.gain * (cfg.Gn_pinv @ err)
    else:
        if st.prev_error is None:
            raise ProtocolError("state at k >= 1 has no previous error")
        ud = st.accumulator - cfg.gain * (cfg.Gn_pinv @ (err - cfg.Fc @ st.prev_error))
    u = -cfg.Kd @ err + ud
    return u, UdeState(accumulator=ud, prev_error=err, step_index=st.step_index + 1), ud


def lumped_disturbance_estimate(cfg, u_d):
    """Estimated lumped disturbance ``−Gn·u_d``."""
    return -cfg.sys.Gn @ np.asarray(u_d, dtype=float)

