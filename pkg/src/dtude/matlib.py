"""Dense linear-algebra kernels used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of real floats. Everything here
is a pure function of its inputs.
"""

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import (
    ControllabilityError,
    DimensionError,
    NumericalError,
    SingularityError,
    StabilityError,
)

# Gram matrices with a larger condition number are treated as rank deficient.
GRAM_COND_LIMIT = 1e12


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float array."""
    m = np.array(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(1, -1) if m.size else m.reshape(0, 0)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} has non-finite entries")
    return m


def _square(a, name="matrix"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def expm(a, scale=1.0):
    """Matrix exponential ``exp(a * scale)``."""
    m = _square(a, "expm argument")
    if not np.isfinite(scale):
        raise NumericalError("expm scale must be finite")
    return scipy.linalg.expm(m * float(scale))


def pinv(b):
    """Left pseudo-inverse ``(BᵀB)⁻¹Bᵀ`` of a full-column-rank matrix."""
    b = as_matrix(b, "pinv argument")
    gram = b.T @ b
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > GRAM_COND_LIMIT:
        raise SingularityError(
            f"pinv: Gram matrix BᵀB is singular to working precision "
            f"(condition estimate {cond:.3e} > {GRAM_COND_LIMIT:.0e})"
        )
    return np.linalg.solve(gram, b.T)


def eigenvalues(a):
    """All eigenvalues of a square matrix, with multiplicity."""
    m = _square(a, "eigenvalues argument")
    try:
        return np.linalg.eigvals(m).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration did not converge: {exc}") from exc


def spectral_radius(a):
    return float(np.max(np.abs(eigenvalues(a))))


def spectral_norm(a):
    """Induced 2-norm, from the largest eigenvalue of ``AᵀA``."""
    m = as_matrix(a)
    return float(np.sqrt(max(np.max(np.linalg.eigvalsh(m.T @ m)), 0.0)))


def spectrum_distance(actual, target):
    """Largest pairwise distance after optimally matching two eigenvalue sets."""
    actual = np.asarray(actual, dtype=complex).ravel()
    target = np.asarray(target, dtype=complex).ravel()
    if actual.size != target.size:
        raise DimensionError(f"cannot match {actual.size} eigenvalues against {target.size}")
    cost = np.abs(actual[:, None] - target[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()) if actual.size else 0.0


def solve_dlyap(a, q=None):
    """Solve ``AᵀPA − P = −Q`` (``Q = I`` by default) for symmetric positive-definite P.

    Uses the Kronecker form ``(Aᵀ⊗Aᵀ − I)·vec(P) = −vec(Q)`` and a dense LU
    solve, so it is meant for small matrices only.
    """
    a = _square(a, "Lyapunov matrix")
    n = a.shape[0]
    q = np.eye(n) if q is None else _square(q, "Q")
    rho = spectral_radius(a)
    if rho >= 1.0:
        raise StabilityError(f"solve_dlyap needs a Schur matrix, spectral radius is {rho:.6g}")
    lhs = np.kron(a.T, a.T) - np.eye(n * n)
    try:
        vec_p = np.linalg.solve(lhs, -q.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Kronecker system is singular: {exc}") from exc
    p = vec_p.reshape(n, n)
    p = 0.5 * (p + p.T)
    residual = np.linalg.norm(a.T @ p @ a - p + q, "fro")
    if residual > 1e-9 * max(1.0, np.linalg.norm(p, "fro")):
        raise NumericalError(f"Lyapunov residual too large: {residual:.3e}")
    if np.min(np.linalg.eigvalsh(p)) <= 0.0:
        raise NumericalError("Lyapunov solution is not positive definite")
    return p


def controllability_matrix(f, g):
    f = _square(f, "F")
    g = as_matrix(g, "G")
    cols = [g]
    for _ in range(f.shape[0] - 1):
        cols.append(f @ cols[-1])
    return np.hstack(cols)


def numerical_rank(m, rtol=1e-10):
    s = np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)
    return int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0


def _is_conjugate_closed(values, tol=1e-9):
    values = np.asarray(values, dtype=complex)
    return spectrum_distance(values, np.conj(values)) <= tol * max(1.0, np.max(np.abs(values), initial=0.0))


def _ackermann(f, g, targets, label):
    n = f.shape[0]
    wc = controllability_matrix(f, g)
    if numerical_rank(wc) < n:
        raise ControllabilityError(f"block {label} is not controllable")
    coeffs = np.real(np.poly(np.asarray(targets, dtype=complex)))
    phi = np.zeros_like(f)
    for c in coeffs:
        phi = phi @ f + c * np.eye(n)
    last = np.zeros(n)
    last[-1] = 1.0
    return np.linalg.solve(wc.T, last) @ phi


def place_poles(f, g, targets, blocks=None, tol=1e-8):
    """State-feedback gain K with eig(F − G·K) = targets.

    ``blocks`` partitions the system into single-input chains as a list of
    ``(state_indices, input_index)`` pairs; ``targets`` then holds one
    eigenvalue list per block. Without ``blocks`` the pair must itself be
    single-input and ``targets`` is a flat list. Each block gain comes from
    Ackermann's formula; the full closed-loop spectrum is checked afterwards.
    """
    f = _square(f, "F")
    g = as_matrix(g, "G")
    n, p = g.shape
    if f.shape[0] != n:
        raise DimensionError(f"F is {f.shape} but G has {n} rows")
    if blocks is None:
        if p != 1:
            raise DimensionError("multi-input pole placement needs a block partition")
        blocks = [(tuple(range(n)), 0)]
        targets = [list(targets)]
    if len(targets) != len(blocks):
        raise DimensionError(f"{len(blocks)} blocks but {len(targets)} target sets")

    k = np.zeros((p, n))
    for label, ((states, col), tgt) in enumerate(zip(blocks, targets)):
        states = list(states)
        tgt = np.asarray(tgt, dtype=complex).ravel()
        if tgt.size != len(states):
            raise DimensionError(f"block {label} has {len(states)} states but {tgt.size} targets")
        if not _is_conjugate_closed(tgt):
            raise ValueError(f"targets for block {label} are not closed under conjugation: {tgt}")
        fb = f[np.ix_(states, states)]
        gb = g[states, col : col + 1]
        k[col, states] = _ackermann(fb, gb, tgt, label)

    flat = np.concatenate([np.asarray(t, dtype=complex).ravel() for t in targets])
    if flat.size == n:
        err = spectrum_distance(eigenvalues(f - g @ k), flat)
        if err > tol:
            raise NumericalError(
                f"pole placement missed its targets by {err:.3e}; the block partition may not decouple (F, G)"
            )
    return k


def block_eigenvalues(f, blocks):
    """Eigenvalues of each diagonal block of ``f`` selected by ``blocks``."""
    f = _square(f)
    return [eigenvalues(f[np.ix_(list(s), list(s))]) for s, _ in blocks]
