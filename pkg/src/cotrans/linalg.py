"""Dense real matrix helpers: arithmetic, Jacobi SVD, numeric rank and subspace bases.

Matrices are plain ``numpy.ndarray`` objects of shape ``(d, d)`` and dtype
float64.  ``as_mat`` is the single entry point that enforces squareness and
finiteness; everything else assumes its output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SingularError

DEFAULT_RANK_TOL = 1e-8
DEFAULT_INVERSE_TOL = 1e-12

_EPS = np.finfo(float).eps


def as_mat(a, dim: int | None = None) -> np.ndarray:
    """Coerce ``a`` to a finite square float64 matrix, optionally of size ``dim``."""
    m = np.array(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise DimensionError(f"expected a {dim}x{dim} matrix, got {m.shape[0]}x{m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def identity(d: int) -> np.ndarray:
    return np.eye(d)


def zero(d: int) -> np.ndarray:
    return np.zeros((d, d))


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _same_dim(a, b)
    return a @ b


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _same_dim(a, b)
    return a + b


def sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _same_dim(a, b)
    return a - b


def svd(a, max_sweeps: int = 80) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-sided (Hestenes) Jacobi SVD.

    Returns ``(U, sigma, V)`` with ``a = U @ diag(sigma) @ V.T``, ``sigma``
    sorted descending and both ``U`` and ``V`` orthogonal.  Left singular
    vectors belonging to vanishing singular values are filled in by
    Gram-Schmidt against the canonical basis.
    """
    a = as_mat(a)
    d = a.shape[0]
    # columns held as Python float lists: far cheaper than numpy views at d <= 16
    w = a.T.tolist()
    v = np.eye(d).tolist()
    for _ in range(max_sweeps):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                wp = w[p]
                wq = w[q]
                alpha = beta = gamma = 0.0
                for x, y in zip(wp, wq):
                    alpha += x * x
                    beta += y * y
                    gamma += x * y
                if gamma == 0.0 or abs(gamma) <= _EPS * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                w[p] = [c * x - s * y for x, y in zip(wp, wq)]
                w[q] = [s * x + c * y for x, y in zip(wp, wq)]
                vp = v[p]
                vq = v[q]
                v[p] = [c * x - s * y for x, y in zip(vp, vq)]
                v[q] = [s * x + c * y for x, y in zip(vp, vq)]
        if not rotated:
            break

    wm = np.array(w).T
    vm = np.array(v).T
    sigma = np.sqrt(np.einsum("ij,ij->j", wm, wm))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    wm = wm[:, order]
    vm = vm[:, order]

    smax = sigma[0] if d else 0.0
    u = np.zeros((d, d))
    keep = sigma > max(smax * 1e-15, np.finfo(float).tiny)
    u[:, keep] = wm[:, keep] / sigma[keep]
    if not np.all(keep):
        u = _complete_basis(u, keep)
    return u, sigma, vm


def _complete_basis(u: np.ndarray, keep: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    basis = [u[:, j] for j in range(d) if keep[j]]
    out = u.copy()
    candidates = iter(np.eye(d))
    for j in range(d):
        if keep[j]:
            continue
        for e in candidates:
            x = e.copy()
            for _ in range(2):
                for b in basis:
                    x -= (b @ x) * b
            nx = np.linalg.norm(x)
            if nx > 1e-6:
                x /= nx
                basis.append(x)
                out[:, j] = x
                break
    return out


def singular_values(a) -> np.ndarray:
    return svd(a)[1]


def op_norm(a) -> float:
    """Spectral norm (largest singular value)."""
    return float(singular_values(a)[0])


@dataclass(frozen=True)
class RankInfo:
    rank: int
    threshold: float
    # log10 distance of the closest singular value to the threshold; < 1 is borderline
    gap_decades: float

    @property
    def borderline(self) -> bool:
        return self.gap_decades < 1.0


def rank_info(a, tol_rel: float = DEFAULT_RANK_TOL) -> RankInfo:
    sigma = singular_values(a)
    smax = float(sigma[0])
    if smax == 0.0:
        return RankInfo(0, 0.0, math.inf)
    thr = tol_rel * smax
    r = int(np.sum(sigma > thr))
    gaps = [abs(math.log10(s / thr)) for s in sigma if s > 0.0]
    return RankInfo(r, thr, min(gaps) if gaps else math.inf)


def rank_eps(a, tol_rel: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``tol_rel * sigma_max``."""
    if tol_rel <= 0:
        raise ValueError("tol_rel must be positive")
    return rank_info(a, tol_rel).rank


def try_inverse(a, tol: float = DEFAULT_INVERSE_TOL) -> np.ndarray:
    """Inverse via pivoted LU, refusing matrices with sigma_min < tol * sigma_max."""
    a = as_mat(a)
    sigma = singular_values(a)
    if sigma[0] == 0.0 or sigma[-1] < tol * sigma[0]:
        cond = math.inf if sigma[-1] == 0.0 else sigma[0] / sigma[-1]
        raise SingularError(f"matrix is singular at tolerance {tol:g} (condition {cond:.3g})")
    return np.linalg.solve(a, np.eye(a.shape[0]))


def condition_number(a) -> float:
    sigma = singular_values(a)
    return math.inf if sigma[-1] == 0.0 else float(sigma[0] / sigma[-1])


def _fix_signs(cols: np.ndarray) -> np.ndarray:
    # first component with |x| > 1e-12 is made positive
    out = cols.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a subspace of R^dim, stored column-wise."""

    dim: int
    rank: int
    columns: np.ndarray
    tol: float

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the span."""
        return self.columns @ self.columns.T


def image_basis(a, tol_rel: float = DEFAULT_RANK_TOL) -> SubspaceBasis:
    """Leading ``rank`` left singular vectors, sign-normalized."""
    u, sigma, _ = svd(a)
    d = u.shape[0]
    r = 0 if sigma[0] == 0.0 else int(np.sum(sigma > tol_rel * sigma[0]))
    return SubspaceBasis(d, r, _fix_signs(u[:, :r]), tol_rel)


def kernel_basis(a, tol_rel: float = DEFAULT_RANK_TOL) -> SubspaceBasis:
    """Trailing ``d - rank`` right singular vectors, sign-normalized."""
    _, sigma, v = svd(a)
    d = v.shape[0]
    r = 0 if sigma[0] == 0.0 else int(np.sum(sigma > tol_rel * sigma[0]))
    return SubspaceBasis(d, d - r, _fix_signs(v[:, r:]), tol_rel)


def is_idempotent(a, tol: float = 1e-10) -> tuple[bool, float]:
    """Return ``(a @ a ~= a, ||a @ a - a||_2)``."""
    a = as_mat(a)
    residual = op_norm(a @ a - a)
    return residual <= tol, residual


def kernel_mismatch(a, b, tol_rel: float = DEFAULT_RANK_TOL) -> float:
    """max(||a K_b||, ||b K_a||) relative to the larger norm; inf when ranks differ."""
    a = as_mat(a)
    b = as_mat(b, a.shape[0])
    ka = kernel_basis(a, tol_rel)
    kb = kernel_basis(b, tol_rel)
    if ka.rank != kb.rank:
        return math.inf
    if ka.rank == 0:
        return 0.0
    scale_a = max(1.0, op_norm(a))
    scale_b = max(1.0, op_norm(b))
    return max(
        float(np.linalg.norm(a @ kb.columns)) / scale_a,
        float(np.linalg.norm(b @ ka.columns)) / scale_b,
    )


def same_kernel(a, b, tol: float = 1e-9, tol_rel: float = DEFAULT_RANK_TOL) -> bool:
    """Equal numeric rank and each matrix annihilates the other's kernel basis.

    The annihilation residual is measured relative to ``max(1, ||a||)``.
    """
    return kernel_mismatch(a, b, tol_rel) <= tol


def fro(a: np.ndarray) -> float:
    return float(np.sqrt(np.einsum("ij,ij->", a, a)))
