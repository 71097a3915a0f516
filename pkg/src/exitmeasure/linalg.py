"""Dense small-matrix numerics: symmetric eigendecompositions, SVD,
symmetric square roots and rank-truncated pseudo-inverses.

Matrices here are plain float64 ``numpy.ndarray``s; sizes stay in the
hundreds, so LAPACK via numpy is the right tool.  Tests cross-check the
eigensolver against an independently written cyclic Jacobi sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EllipticityError, RankError, ValidationError


@dataclass(frozen=True, eq=False)
class SymEig:
    """Full spectrum of a symmetric matrix, eigenvalues descending,
    eigenvector columns orthonormal."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True, eq=False)
class TruncatedPseudoInverse:
    """Rank-r pseudo-inverse factors of a matrix B = U diag(s) V^T.

    ``apply(q)`` evaluates V_r diag(1/s_r) U_r^T q.  ``gap_warning`` is set
    when the singular values at the truncation index are too close to call
    the cut unambiguous.
    """

    rank_used: int
    u: np.ndarray
    inv_sigma: np.ndarray
    v: np.ndarray
    gap_warning: bool

    def apply(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return self.v[:, : self.rank_used] @ (self.inv_sigma * (self.u[:, : self.rank_used].T @ q))

    def as_matrix(self) -> np.ndarray:
        return self.v[:, : self.rank_used] @ (self.inv_sigma[:, None] * self.u[:, : self.rank_used].T)


def _require_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def sym_eig(a) -> SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Rejects non-square input, and asymmetry beyond 1e-12 relative.
    """
    a = _require_matrix(a, "A")
    n, m = a.shape
    if n != m:
        raise ValidationError(f"A must be square, got {n}x{m}")
    scale = np.max(np.abs(a)) or 1.0
    if np.max(np.abs(a - a.T)) > 1e-12 * scale:
        raise ValidationError("A is not symmetric to 1e-12 relative")
    w, v = np.linalg.eigh(a)
    return SymEig(w[::-1].copy(), v[:, ::-1].copy())


def svd(b):
    """Full SVD factors (U, s, V) with B = U diag(s) V^T, s descending."""
    b = _require_matrix(b, "B")
    u, s, vt = np.linalg.svd(b, full_matrices=True)
    return u, s, vt.T


def rank_tolerance(shape, s1: float) -> float:
    """Drop tolerance for singular values: max(m, n) * eps * s_max."""
    return max(shape) * np.finfo(float).eps * s1


def numerical_rank(s: np.ndarray, shape) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tolerance(shape, s[0])))


def tsvd_pinv(b, r: int, gap_rtol: float = 1e-12) -> TruncatedPseudoInverse:
    """Rank-r truncated pseudo-inverse of B.

    r must not exceed the numerical rank; on sigma_r ~ sigma_{r+1} the cut
    is still taken at r but flagged via ``gap_warning``.
    """
    b = _require_matrix(b, "B")
    u, s, v = svd(b)
    rank = numerical_rank(s, b.shape)
    if not 1 <= r <= rank:
        raise RankError(f"truncation level {r} outside 1..{rank} (numerical rank {rank})")
    gap_warning = bool(r < len(s) and (s[r - 1] - s[r]) <= gap_rtol * s[0])
    return TruncatedPseudoInverse(r, u, 1.0 / s[:r], v, gap_warning)


def sym_sqrt(k) -> np.ndarray:
    """Symmetric square root of a symmetric positive semi-definite matrix."""
    k = _require_matrix(k, "K")
    eig = sym_eig(k)
    w = eig.eigenvalues
    scale = abs(w[0]) if w.size else 0.0
    if np.any(w < -1e-10 * max(scale, 1.0)):
        raise EllipticityError(f"matrix is not PSD: smallest eigenvalue {w[-1]:.3e}")
    root = np.sqrt(np.maximum(w, 0.0))
    v = eig.eigenvectors
    return (v * root) @ v.T
