"""Closed-loop error dynamics, Schur checks and the Lyapunov convergence ball."""

from dataclasses import dataclass
from math import sqrt

import numpy as np

from . import matlib
from .errors import StabilityError


@dataclass(frozen=True)
class ErrorDynamics:
    """Block upper-triangular map of ξ = [ê; e_SE; L̃_d]:

        [[Fc, βC, 0],
         [0,  Fo, I],
         [0,  0,  T]]   with T = (1 − Ts/τ)·I.
    """

    Acal: np.ndarray
    Fc: np.ndarray
    Fo: np.ndarray
    T: np.ndarray

    @property
    def n(self):
        return self.Fc.shape[0]


def assemble(sys, kd, beta, tau):
    n = sys.n
    fc = sys.Fn - sys.Gn @ kd
    fo = sys.Fn - beta @ sys.C
    t = (1.0 - sys.Ts / tau) * np.eye(n)
    z = np.zeros((n, n))
    acal = np.block([[fc, beta @ sys.C, z], [z, fo, np.eye(n)], [z, z, t]])
    return ErrorDynamics(Acal=acal, Fc=fc, Fo=fo, T=t)


@dataclass(frozen=True)
class Condition:
    name: str
    value: float
    passed: bool


@dataclass(frozen=True)
class StabilityReport:
    conditions: tuple

    @property
    def all_pass(self):
        return all(c.passed for c in self.conditions)

    def format(self):
        lines = [f"{c.name:<28s} {c.value:12.6f}  {'PASS' if c.passed else 'FAIL'}" for c in self.conditions]
        lines.append("all conditions PASS" if self.all_pass else "one or more conditions FAIL")
        return "\n".join(lines)


def check_conditions(ed, ts, tau):
    rc = matlib.spectral_radius(ed.Fc)
    ro = matlib.spectral_radius(ed.Fo)
    rt = abs(1.0 - ts / tau)
    return StabilityReport(
        conditions=(
            Condition("rho(Fn - Gn Kd) < 1", rc, rc < 1.0),
            Condition("rho(Fn - beta C) < 1", ro, ro < 1.0),
            Condition("|1 - Ts/tau| < 1", rt, rt < 1.0),
        )
    )


@dataclass(frozen=True)
class Certificate:
    P: np.ndarray
    p_max: float
    norm_A: float
    R: float
    residual: float


def convergence_radius(ed, eta_norm):
    """Lyapunov matrix P and the radius of the ball ξ converges to.

    ``R = ‖η‖·(‖𝒜‖·p_max + sqrt(‖𝒜‖²·p_max² + p_max))`` with ‖𝒜‖ the
    spectral norm and p_max the largest eigenvalue of P.
    """
    if eta_norm < 0:
        raise ValueError(f"eta_norm must be non-negative, got {eta_norm}")
    rho = matlib.spectral_radius(ed.Acal)
    if rho >= 1.0:
        raise StabilityError(f"error dynamics are not Schur (spectral radius {rho:.6g})")
    p = matlib.solve_dlyap(ed.Acal)
    p_max = float(np.max(np.linalg.eigvalsh(p)))
    na = matlib.spectral_norm(ed.Acal)
    r = eta_norm * (na * p_max + sqrt(na**2 * p_max**2 + p_max))
    a = ed.Acal
    resid = float(np.linalg.norm(a.T @ p @ a - p + np.eye(a.shape[0]), "fro"))
    return Certificate(P=p, p_max=p_max, norm_A=na, R=float(r), residual=resid)


def error_state(trace):
    """Stack ξ(k) = [ê; e_SE; L_d − L̂_d] for every sample with a defined L_d."""
    ld_err = trace.Ld - trace.Ldhat
    xi = np.hstack([trace.ehat, trace.e_se, ld_err])
    ok = np.all(np.isfinite(xi), axis=1)
    return xi[ok]


def eta_from_trace(ed, xi):
    """Per-step forcing ``η_k = ξ(k+1) − 𝒜·ξ(k)`` measured along a trace."""
    return xi[1:] - xi[:-1] @ ed.Acal.T


def lyapunov_violations(p, xi, radius):
    """Steps where ‖ξ(k)‖ > radius but V(k+1) − V(k) ≥ 0."""
    v = np.einsum("ki,ij,kj->k", xi, p, xi)
    dv = v[1:] - v[:-1]
    outside = np.linalg.norm(xi[:-1], axis=1) > radius
    return int(np.sum(outside & (dv >= 0))), int(np.sum(outside))


def estimator_coupling_radius(p_actual, mu, ts, tau, samples=721):
    """Worst-case spectral radius of ``I − (Ts/τ)·M₀·M(θ)⁻¹`` over θ₂.

    The lumped disturbance contains ``(M⁻¹ − M₀⁻¹)·τ``, so the estimate feeds
    back on itself through the true inertia. When this radius reaches 1 the
    disturbance estimate diverges even though every linear condition of
    :func:`check_conditions` may hold. Returns ``(radius, worst θ₂)``.
    """
    from .manipulator import eval_mck

    m0 = np.diag(1.0 / np.asarray(mu, dtype=float))
    alpha = ts / tau
    worst, worst_th = 0.0, 0.0
    for th2 in np.linspace(0.0, 2.0 * np.pi, samples):
        m, _, _ = eval_mck(p_actual, np.array([0.0, 0.0, th2, 0.0]))
        rho = matlib.spectral_radius(np.eye(2) - alpha * m0 @ np.linalg.inv(m))
        if rho > worst:
            worst, worst_th = rho, float(th2)
    return worst, worst_th
