"""Spectral analysis of the estimated Gram operator and truncated-SVD
reconstructions of the inaccessible Dirichlet data.

The nodal reconstruction at truncation r is

    u_r = diag(sigma)^{-1/2} (diag(nu) A1 diag(sigma)^{-1/2})^{dagger,r} b_nu,
    b_nu = diag(nu) (u_D - A0 u_0),

whose span-projection form through the eigenpairs of Lambda_nu coincides
with it whenever the eigenvalue gap at r makes the truncation unambiguous
(``dual_form_check`` verifies the coincidence numerically).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, RankError, ValidationError
from .estimator import EstimatorBundle, MeasurementSet
from .linalg import numerical_rank, svd, sym_eig
from .rng import noise_uniform
from .weights import WeightFamily

# eigenfunction traces are emitted only above this relative eigenvalue:
# below it the lambda^{-1/2} scaling amplifies round-off past the
# orthonormality contract
TRACE_RTOL = 1e-6

# relative eigenvalue gap below which a truncation index is ambiguous
GAP_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class SpectralSolution:
    eigenvalues: np.ndarray  # (M_D,) descending
    eigenvectors: np.ndarray  # (M_D, M_D), columns
    gaps: np.ndarray  # (M_D - 1,) consecutive differences
    eigenfunction_traces: np.ndarray  # (k, M_1) values at the gamma1 anchors

    @property
    def n_traces(self) -> int:
        return self.eigenfunction_traces.shape[0]


def spectrum(bundle: EstimatorBundle, trace_rtol: float = TRACE_RTOL) -> SpectralSolution:
    """Eigenpairs of the Gram matrix with eigenfunction traces on gamma1.

    Trace j is lambda_j^{-1/2} sum_i nu_i [v_j]_i rho_i evaluated at the
    anchors; the traces are orthonormal in the sigma-weighted inner
    product by construction.
    """
    eig = sym_eig(bundle.lambda_nu)
    lam = eig.eigenvalues
    if lam[0] <= 0.0:
        raise DegenerateSpectrumError("estimated operator has no positive eigenvalues")
    k = int(np.count_nonzero(lam > trace_rtol * lam[0]))
    # rho_i(x_k) = a1[i, k] / sigma[k]; trace_j = lam_j^{-1/2} rho^T diag(nu) v_j
    rho = bundle.a1 / bundle.sigma1[None, :]
    traces = (rho.T @ (bundle.nu[:, None] * eig.eigenvectors[:, :k])) / np.sqrt(lam[:k])[None, :]
    return SpectralSolution(lam, eig.eigenvectors, -np.diff(lam), traces.T)


def trace_gram(sol: SpectralSolution, sigma1: np.ndarray) -> np.ndarray:
    """Gram matrix of the traces under <f, g> = sum_k sigma_k f_k g_k."""
    t = sol.eigenfunction_traces
    return (t * sigma1[None, :]) @ t.T


@dataclass(frozen=True, eq=False)
class TSVDFamily:
    r_values: np.ndarray  # (R,)
    solutions: np.ndarray  # (R, M_1) nodal values on gamma1
    interior_fit: np.ndarray  # (R, M_D) A1 u_r + A0 u0
    residuals: np.ndarray  # (R, M_D) |u_D - fit|
    gap_warnings: np.ndarray  # (R,) bool
    rank: int


def _scaled_matrix(bundle: EstimatorBundle):
    return (bundle.nu[:, None] * bundle.a1) / np.sqrt(bundle.sigma1)[None, :]


def _rhs(bundle: EstimatorBundle, meas: MeasurementSet) -> np.ndarray:
    b = meas.interior_values
    if meas.n_boundary:
        b = b - bundle.a0 @ meas.boundary_values
    return bundle.nu * b


def tsvd_family(bundle: EstimatorBundle, meas: MeasurementSet,
                fam1: WeightFamily, r_values) -> TSVDFamily:
    """Reconstructions at the gamma1 anchors for each truncation level."""
    if meas.n_interior != bundle.n_poles:
        raise ValidationError("measurement set does not match the bundle poles")
    if fam1.size != bundle.a1.shape[1]:
        raise ValidationError("gamma1 weight family does not match the bundle")
    r_values = np.atleast_1d(np.asarray(r_values, dtype=int))
    if r_values.size == 0:
        raise ValidationError("at least one truncation level required")
    m = _scaled_matrix(bundle)
    u, s, v = svd(m)
    rank = numerical_rank(s, m.shape)
    if rank == 0:
        raise RankError("estimated operator is numerically zero")
    if r_values.min() < 1 or r_values.max() > rank:
        raise RankError(
            f"truncation levels must lie in 1..{rank} (numerical rank {rank}), "
            f"got {r_values.tolist()}")
    b = _rhs(bundle, meas)
    lam = s**2
    inv_sqrt_sigma = 1.0 / np.sqrt(bundle.sigma1)
    coeffs = u.T @ b  # spectral coefficients of the right-hand side
    n_r = r_values.size
    sols = np.empty((n_r, fam1.size))
    fits = np.empty((n_r, bundle.n_poles))
    warns = np.zeros(n_r, dtype=bool)
    for i, r in enumerate(r_values):
        nodal = inv_sqrt_sigma * (v[:, :r] @ (coeffs[:r] / s[:r]))
        sols[i] = nodal
        fit = bundle.a1 @ nodal
        if meas.n_boundary:
            fit = fit + bundle.a0 @ meas.boundary_values
        fits[i] = fit
        gap = lam[r - 1] - (lam[r] if r < len(lam) else 0.0)
        warns[i] = gap < 1e-3 * lam[0]
    residuals = np.abs(meas.interior_values[None, :] - fits)
    return TSVDFamily(r_values, sols, fits, residuals, warns, rank)


def dual_form_check(bundle: EstimatorBundle, meas: MeasurementSet,
                    fam1: WeightFamily, r: int) -> float | None:
    """Largest discrepancy between the two equivalent reconstruction forms.

    The density form runs through the truncated pseudo-inverse of the Gram
    matrix and the estimated densities; the matrix form through the scaled
    exit-frequency matrix.  Returns None (with a warning) when the
    eigenvalue gap at r is too small for the truncation to be unambiguous.
    """
    m = _scaled_matrix(bundle)
    u, s, v = svd(m)
    rank = numerical_rank(s, m.shape)
    if not 1 <= r <= rank:
        raise RankError(f"truncation level {r} outside 1..{rank}")
    lam = s**2
    # the gap below the last level is the drop to zero
    gap = lam[r - 1] - (lam[r] if r < len(lam) else 0.0)
    if gap <= GAP_RTOL * lam[0]:
        warnings.warn(f"eigenvalue gap at r={r} below {GAP_RTOL} * lambda_1; "
                      "dual-form comparison skipped", stacklevel=2)
        return None
    b = _rhs(bundle, meas)
    # matrix form
    nodal_matrix = (1.0 / np.sqrt(bundle.sigma1)) * (v[:, :r] @ ((u[:, :r].T @ b) / s[:r]))
    # density form: w = (Lambda_nu)^dagger_r b, then sum_i nu_i w_i rho_i
    eig = sym_eig(bundle.lambda_nu)
    vv = eig.eigenvectors[:, :r]
    w = vv @ ((vv.T @ b) / eig.eigenvalues[:r])
    nodal_density = (bundle.a1.T @ (bundle.nu * w)) / bundle.sigma1
    return float(np.max(np.abs(nodal_matrix - nodal_density)))


def perturb_measurements(meas: MeasurementSet, delta: float, seed: int) -> MeasurementSet:
    """Additive uniform noise on [-delta, delta] applied to the interior
    values (the noise-robustness hook; delta = 0 returns the input)."""
    if delta == 0.0:
        return meas
    noise = delta * noise_uniform(seed, meas.n_interior)
    return meas.with_values(meas.interior_values + noise)
