"""Zero-order-hold discretization and the discrete system record."""

from dataclasses import dataclass

import numpy as np

from . import matlib
from .errors import (
    ControllabilityError,
    DimensionError,
    ObservabilityError,
    StabilityError,
)


def zoh_discretize(a, b, ts):
    """Return ``F = exp(A·Ts)`` and ``G = ∫₀^Ts exp(Aθ)·B dθ``.

    Both come from one exponential of the augmented matrix ``[[A, B], [0, 0]]``.
    """
    if not ts > 0:
        raise ValueError(f"sampling time must be positive, got {ts}")
    a = matlib.as_matrix(a, "A")
    b = matlib.as_matrix(b, "B")
    n, p = b.shape
    if a.shape != (n, n):
        raise DimensionError(f"A is {a.shape} but B is {b.shape}")
    aug = np.zeros((n + p, n + p))
    aug[:n, :n] = a
    aug[:n, n:] = b
    e = matlib.expm(aug, ts)
    return e[:n, :n], e[:n, n:]


@dataclass(frozen=True)
class DiscreteSystem:
    Fn: np.ndarray
    Gn: np.ndarray
    C: np.ndarray
    Fm: np.ndarray
    Gm: np.ndarray
    Ts: float

    @property
    def n(self):
        return self.Fn.shape[0]

    @property
    def p(self):
        return self.Gn.shape[1]

    @property
    def q(self):
        return self.C.shape[0]


def observability_matrix(c, f):
    return matlib.controllability_matrix(np.asarray(f).T, np.asarray(c).T).T


def build_system(a, b, c, a_m, b_m, ts):
    """Discretize plant and reference model and check the structural assumptions."""
    c = matlib.as_matrix(c, "C")
    a_m = matlib.as_matrix(a_m, "A_m")
    fn, gn = zoh_discretize(a, b, ts)
    n, p = gn.shape
    if c.shape[1] != n:
        raise DimensionError(f"C has {c.shape[1]} columns, expected {n}")
    if a_m.shape != (n, n) or np.shape(b_m) != (n, p):
        raise DimensionError("reference model dimensions must match the plant")
    if np.max(np.real(matlib.eigenvalues(a_m))) >= 0:
        raise StabilityError("reference model A_m is not Hurwitz")
    fm, gm = zoh_discretize(a_m, b_m, ts)
    if matlib.numerical_rank(matlib.controllability_matrix(fn, gn)) < n:
        raise ControllabilityError("(F_n, G_n) is not controllable")
    if matlib.numerical_rank(observability_matrix(c, fn)) < n:
        raise ObservabilityError("(C, F_n) is not observable")
    rho = matlib.spectral_radius(fm)
    if rho >= 1.0:
        raise StabilityError(f"discrete reference model is not Schur (spectral radius {rho:.6g})")
    return DiscreteSystem(Fn=fn, Gn=gn, C=c, Fm=fm, Gm=gm, Ts=float(ts))


def manipulator_system(params, ts=0.01, a_m=None, b_m=None):
    """DiscreteSystem for the two-link arm with nominal model built from ``params``."""
    from .manipulator import OUTPUT_MATRIX, REFERENCE_A, REFERENCE_B, nominal_input_matrix

    a, b = nominal_input_matrix(params)
    return build_system(
        a,
        b,
        OUTPUT_MATRIX,
        REFERENCE_A if a_m is None else a_m,
        REFERENCE_B if b_m is None else b_m,
        ts,
    )


def matching_residual(gn, ld):
    """Relative size of the part of ``ld`` outside the column space of ``gn``."""
    ld = np.asarray(ld, dtype=float)
    proj = gn @ matlib.pinv(gn)
    resid = ld - ld @ proj.T
    num = np.linalg.norm(resid, axis=-1)
    den = np.linalg.norm(ld, axis=-1)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)
