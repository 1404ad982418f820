"""Disturbance-aware discrete observer and the combined controller–observer step.

The observer is a Luenberger observer that also injects the recovered
disturbance estimate, so it reproduces the plant's disturbed dynamics rather
than the nominal ones. The controller runs on the auxiliary error
``ê = x̂ − x_m`` because the joint velocities are not measured.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import matlib, ude
from .errors import NumericalError, ProtocolError, StabilityError


@dataclass(frozen=True)
class ObserverConfig:
    sys: object
    beta: np.ndarray
    controller_radius: float | None = None
    Fo: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        object.__setattr__(self, "beta", beta)
        fo = self.sys.Fn - beta @ self.sys.C
        rho = matlib.spectral_radius(fo)
        if rho >= 1.0:
            raise StabilityError(f"Fn - beta·C is not Schur (spectral radius {rho:.6g})")
        if self.controller_radius is not None and not rho < self.controller_radius:
            warnings.warn(
                f"observer (radius {rho:.4g}) is not faster than the controller "
                f"(radius {self.controller_radius:.4g})",
                stacklevel=2,
            )
        object.__setattr__(self, "Fo", fo)


@dataclass(frozen=True)
class ObserverState:
    xhat: np.ndarray
    dhat: np.ndarray
    step_index: int = 0
    innovation: np.ndarray | None = None

    @classmethod
    def initial(cls, xhat0):
        xhat0 = np.array(xhat0, dtype=float)
        return cls(xhat=xhat0, dhat=np.zeros_like(xhat0))


def design_beta(sys, targets=None, blocks=None, scale=0.1):
    """Observer gain placing eig(Fn − β·C) at ``targets``.

    Defaults to ``scale`` times the per-block eigenvalues of Fm. Placement is
    done on the dual pair (Fnᵀ, Cᵀ). Targets on the unit circle are accepted
    here; :class:`ObserverConfig` is where a non-Schur observer is refused.
    """
    from .manipulator import JOINT_BLOCKS

    blocks = JOINT_BLOCKS if blocks is None else blocks
    if targets is None:
        targets = [scale * lam for lam in matlib.block_eigenvalues(sys.Fm, blocks)]
    for t in targets:
        if np.any(np.abs(np.asarray(t, dtype=complex)) > 1.0 + 1e-12):
            raise StabilityError(f"observer targets must lie in the closed unit disk: {t}")
    return matlib.place_poles(sys.Fn.T, sys.C.T, targets, blocks).T


def recover_dist_estimate(sys, u_d, xm, r):
    """Plant-disturbance estimate ``D̂_d = −Gn·u_d − (Fn − Fm)·x_m + Gm·r``."""
    return -sys.Gn @ u_d - (sys.Fn - sys.Fm) @ xm + sys.Gm @ r


def observer_step(ocfg, ost, u, dhat, y, k=None):
    """Advance to ``x̂(k+1) = Fn·x̂ + Gn·u + D̂_d + β·(y − C·x̂)``."""
    if k is not None and k != ost.step_index:
        raise ProtocolError(f"expected observer step {ost.step_index}, got {k}")
    s = ocfg.sys
    innov = np.asarray(y, dtype=float) - s.C @ ost.xhat
    xnext = s.Fn @ ost.xhat + s.Gn @ u + dhat + ocfg.beta @ innov
    return ObserverState(xhat=xnext, dhat=np.asarray(dhat, dtype=float), step_index=ost.step_index + 1, innovation=innov)


def controller_observer_step(ucfg, ust, ocfg, ost, xm, r, y, k=None, check_tol=1e-10):
    """One sample of the output-feedback loop.

    Forms ê(k), computes u(k) from the running-sum law, recovers D̂_d(k) from
    the updated u_d(k) and advances the observer. For k ≥ 1 the accumulator
    increment is compared with the innovation form
    ``−(Ts/τ)·Gn⁺·β·(y(k−1) − ŷ(k−1))``; the two agree whenever the sampled
    reference obeys ``x_m(k) = Fm·x_m(k−1) + Gm·r(k−1)``. A mismatch above
    ``check_tol`` (relative to the increment size) raises; pass ``None`` to
    only record the gap.

    Returns ``(u, ust, ost, diagnostics)``.
    """
    if ust.step_index != ost.step_index:
        raise ProtocolError(f"controller at step {ust.step_index}, observer at {ost.step_index}")
    xm = np.asarray(xm, dtype=float)
    r = np.asarray(r, dtype=float)
    ehat = ost.xhat - xm
    u, ust_next, ud = ude.control_step(ucfg, ust, ehat, k)

    gap = 0.0
    if ust.step_index > 0:
        general = ud - ust.accumulator
        simplified = -ucfg.gain * (ucfg.Gn_pinv @ (ocfg.beta @ ost.innovation))
        gap = float(np.max(np.abs(general - simplified)))
        scale = max(1.0, float(np.max(np.abs(general))), float(np.max(np.abs(simplified))))
        if check_tol is not None and gap > check_tol * scale:
            raise NumericalError(
                f"step {ust.step_index}: running-sum and innovation forms of the control law differ by {gap:.3e}"
            )

    dhat = recover_dist_estimate(ocfg.sys, ud, xm, r)
    ost_next = observer_step(ocfg, ost, u, dhat, y)
    diag = {
        "ehat": ehat,
        "innovation": ost_next.innovation,
        "u_d": ud,
        "dhat": dhat,
        "ldhat": ude.lumped_disturbance_estimate(ucfg, ud),
        "form_gap": gap,
    }
    return u, ust_next, ost_next, diag
