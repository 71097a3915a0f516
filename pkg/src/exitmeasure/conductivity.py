"""Constant anisotropic conductivity tensors.

Tensors are normalised so the largest eigenvalue is exactly 1: solutions of
div(K grad u) = 0 are invariant under scalar rescaling of K, and the
normalisation guarantees the ellipsoid step K^{1/2} (rho U) never leaves the
ball of radius rho, so walks stay inside the closed domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EllipticityError, ValidationError
from .linalg import sym_eig, sym_sqrt


@dataclass(frozen=True, eq=False)
class ConductivityTensor:
    k: np.ndarray  # normalised: largest eigenvalue 1
    k_sqrt: np.ndarray
    lambda_max_original: float  # scale divided out of the raw tensor

    @property
    def dimension(self) -> int:
        return self.k.shape[0]

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.k, np.eye(self.dimension)))


def make_tensor(raw) -> ConductivityTensor:
    """Validate a symmetric positive definite tensor and normalise it."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise ValidationError("conductivity tensor must be a square matrix")
    d = raw.shape[0]
    if d not in (2, 3):
        raise ValidationError(f"conductivity tensor must be 2x2 or 3x3, got {d}x{d}")
    eig = sym_eig(raw)
    lam_min, lam_max = eig.eigenvalues[-1], eig.eigenvalues[0]
    if lam_min <= 0.0:
        raise EllipticityError(f"tensor is not strictly elliptic: eigenvalue {lam_min:.6e}")
    if np.array_equal(raw, np.eye(d)):
        # keep the identity bit-exact so the ellipsoid step degenerates to
        # the plain sphere step
        return ConductivityTensor(np.eye(d), np.eye(d), 1.0)
    k = raw / lam_max
    return ConductivityTensor(k, sym_sqrt(k), float(lam_max))


def identity_tensor(d: int) -> ConductivityTensor:
    return make_tensor(np.eye(d))
