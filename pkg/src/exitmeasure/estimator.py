"""Monte Carlo assembly of the exit-frequency matrices.

For each interior pole, N independent walks are run to the stopping shell;
each exit lands in exactly one weight cell of the full boundary partition,
feeding one row of A1 (inaccessible side) and A0 (accessible side).  The
symmetrised operator is the Gram matrix

    Lambda_nu = diag(nu) A1 diag(sigma)^-1 A1^T diag(nu),

whose spectrum drives the truncated-SVD inversion downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import backend
from .conductivity import ConductivityTensor
from .errors import ValidationError
from .geometry import Domain, dist_to_boundary
from .walk import WalkConfig
from .weights import WeightFamily


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    interior_points: np.ndarray  # (M_D, d), strictly inside the domain
    interior_values: np.ndarray  # (M_D,)
    nu: np.ndarray  # (M_D,), sum of squares 1
    boundary_points: np.ndarray  # (M_0, d) on gamma0
    boundary_values: np.ndarray  # (M_0,)

    @property
    def n_interior(self) -> int:
        return self.interior_points.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary_points.shape[0]

    def with_values(self, interior_values: np.ndarray) -> "MeasurementSet":
        return MeasurementSet(self.interior_points, np.asarray(interior_values, float),
                              self.nu, self.boundary_points, self.boundary_values)


def uniform_nu(m: int) -> np.ndarray:
    return np.full(m, 1.0 / np.sqrt(m))


def make_measurements(dom: Domain, interior_points, interior_values,
                      boundary_points=None, boundary_values=None,
                      nu=None, eps: float = 0.0) -> MeasurementSet:
    """Validated measurement set; nu defaults to the uniform scaling."""
    xd = np.atleast_2d(np.asarray(interior_points, dtype=float))
    ud = np.asarray(interior_values, dtype=float)
    if xd.shape[0] != ud.shape[0]:
        raise ValidationError("one interior value per interior point required")
    for i, p in enumerate(xd):
        if dist_to_boundary(dom, p) <= eps:
            raise ValidationError(
                f"interior point {i} at {p.tolist()} is not strictly inside "
                f"the domain (needs distance > {eps})")
    x0 = (np.zeros((0, dom.dimension)) if boundary_points is None
          else np.atleast_2d(np.asarray(boundary_points, dtype=float)))
    u0 = np.zeros(0) if boundary_values is None else np.asarray(boundary_values, dtype=float)
    if x0.shape[0] != u0.shape[0]:
        raise ValidationError("one boundary value per boundary point required")
    nu = uniform_nu(xd.shape[0]) if nu is None else np.asarray(nu, dtype=float)
    if nu.shape != (xd.shape[0],):
        raise ValidationError("nu must have one entry per interior point")
    if np.any(nu <= 0.0) or np.any(nu > 1.0):
        raise ValidationError("nu entries must lie in (0, 1]")
    if abs(np.sum(nu**2) - 1.0) > 1e-12:
        raise ValidationError("nu must satisfy sum(nu^2) = 1 to 1e-12")
    return MeasurementSet(xd, ud, nu, x0, u0)


@dataclass(frozen=True, eq=False)
class EstimatorBundle:
    a1: np.ndarray  # (M_D, M_1) exit frequencies into gamma1 cells
    a0: np.ndarray  # (M_D, M_0)
    sigma1: np.ndarray  # (M_1,) cell measures on gamma1
    lambda_nu: np.ndarray  # (M_D, M_D), symmetric PSD
    nu: np.ndarray
    n: int
    eps: float
    seed: int
    steps_mean: np.ndarray  # per pole
    steps_std: np.ndarray
    steps_max: np.ndarray
    idw_fallbacks: int = 0

    @property
    def n_poles(self) -> int:
        return self.a1.shape[0]

    def mu_gamma1(self) -> np.ndarray:
        """Estimated exit mass on the inaccessible side, per pole."""
        return self.a1.sum(axis=1)


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    pole_index: int | None  # None for the average over poles
    values: np.ndarray  # (M_1,), units 1 / surface measure


def _gram(a1: np.ndarray, sigma1: np.ndarray, nu: np.ndarray) -> np.ndarray:
    m = (nu[:, None] * a1) / np.sqrt(sigma1)[None, :]
    g = m @ m.T
    # mirror the upper triangle so the stored matrix is exactly symmetric
    iu = np.triu_indices(g.shape[0], k=1)
    g[(iu[1], iu[0])] = g[iu]
    return g


def mc_rem(dom: Domain, kt: ConductivityTensor, meas: MeasurementSet,
           fam1: WeightFamily, fam0: WeightFamily | None,
           cfg: WalkConfig, n: int, threads: int | None = None) -> EstimatorBundle:
    """Redistributed-exit-mass estimator: N walks per pole, one pass fills
    both matrices (each walk lands on exactly one side)."""
    if n < 1:
        raise ValidationError("replicate count must be >= 1")
    if kt.dimension != dom.dimension:
        raise ValidationError("conductivity dimension does not match the domain")
    if dom.gamma0 and fam0 is None:
        raise ValidationError("domain has accessible components but no gamma0 weights")
    if fam1.sigma is None:
        raise ValidationError("gamma1 weight family needs cell measures")
    if meas.n_boundary and fam0 is not None and meas.n_boundary != fam0.size:
        raise ValidationError("gamma0 weights must be anchored at the boundary "
                              "measurement points")
    for i, p in enumerate(meas.interior_points):
        if dist_to_boundary(dom, p) <= cfg.eps:
            raise ValidationError(f"pole {i} lies inside the stopping shell")

    side1 = backend.pack_side(fam1.anchors, dom.dimension, cfg.eps, fam1.kind,
                              fam1.idw_radii, fam1.idw_power)
    if fam0 is None:
        side0 = backend.pack_side(None, dom.dimension, cfg.eps)
    else:
        side0 = backend.pack_side(fam0.anchors, dom.dimension, cfg.eps, fam0.kind,
                                  fam0.idw_radii, fam0.idw_power)

    res = backend.run_accumulate(dom, kt.k_sqrt, meas.interior_points, cfg.seed,
                                 cfg.eps, cfg.max_steps, n, side0, side1, threads)
    a1 = res.raw1 / n
    a0 = res.raw0 / n
    mean = res.steps_sum / n
    var = np.maximum(res.steps_sq_sum / n - mean**2, 0.0)
    return EstimatorBundle(
        a1=a1, a0=a0, sigma1=fam1.sigma,
        lambda_nu=_gram(a1, fam1.sigma, meas.nu),
        nu=meas.nu.copy(), n=n, eps=cfg.eps, seed=cfg.seed,
        steps_mean=mean, steps_std=np.sqrt(var), steps_max=res.steps_max,
        idw_fallbacks=res.idw_fallbacks,
    )


def density(bundle: EstimatorBundle, pole_index: int) -> DensityEstimate:
    """Piecewise-constant exit density on the gamma1 cells for one pole."""
    if not 0 <= pole_index < bundle.n_poles:
        raise ValidationError(f"pole index {pole_index} out of range")
    return DensityEstimate(pole_index, bundle.a1[pole_index] / bundle.sigma1)


def averaged_density(bundle: EstimatorBundle) -> DensityEstimate:
    """Mean of the per-pole densities: the colour-map quantity."""
    return DensityEstimate(None, (bundle.a1 / bundle.sigma1[None, :]).mean(axis=0))


def save_bundle(bundle: EstimatorBundle, out_dir) -> None:
    """CSV pair (A0.csv, A1.csv; row per pole) plus a JSON sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, mat in (("A0", bundle.a0), ("A1", bundle.a1)):
        with open(out / f"{name}.csv", "w") as fh:
            fh.write(",".join(f"anchor{j}" for j in range(mat.shape[1])) + "\n")
            for row in mat:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    sidecar = {
        "n": bundle.n,
        "eps": bundle.eps,
        "seed": bundle.seed,
        "sigma": [float(s) for s in bundle.sigma1],
    }
    with open(out / "bundle.json", "w") as fh:
        json.dump(sidecar, fh, indent=1)
