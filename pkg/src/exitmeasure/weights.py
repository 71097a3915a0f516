"""Boundary weight families anchored at discrete boundary points.

Two kinds: extrinsic Voronoi indicators (the default: each shell point
belongs to its nearest anchor in ambient space, ties to the lowest index)
and inverse-distance weighting with compactly supported kernels.  A family
carries the per-cell surface measures sigma(omega_j), computed exactly for
uniformly spaced circle anchors and by dense boundary quadrature otherwise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ValidationError
from .geometry import BoundaryPointSet, Domain

_BIG = np.int64(2**62)


@dataclass(frozen=True, eq=False)
class WeightFamily:
    kind: str  # "voronoi" or "idw"
    anchors: BoundaryPointSet
    sigma: np.ndarray | None  # cell surface measures, sigma(omega_j) > 0
    idw_power: int = 2
    idw_radii: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.anchors)


def _block_measure(block) -> float:
    if block.kind == "circle":
        return 2.0 * np.pi * block.radius
    if block.kind == "square":
        return 8.0 * block.radius
    if block.kind == "sphere":
        return 4.0 * np.pi * block.radius**2
    raise ConfigurationError("cell measures need structured anchor blocks "
                             "(circle, square or sphere)")


def _block_samples(block, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint-style dense samples of one block's shape with their surface
    elements (offset half a step so samples never coincide with anchors)."""
    c = block.center
    r = block.radius
    if block.kind == "circle":
        ang = 2.0 * np.pi * (np.arange(q) + 0.5) / q
        pts = np.stack([c[0] + r * np.cos(ang), c[1] + r * np.sin(ang)], axis=1)
        return pts, np.full(q, 2.0 * np.pi * r / q)
    if block.kind == "square":
        from .geometry import square_arc_to_point

        s = 8.0 * r * (np.arange(q) + 0.5) / q
        pts = np.stack([c + square_arc_to_point(r, si) for si in s])
        return pts, np.full(q, 8.0 * r / q)
    # sphere: product grid uniform in (z, theta) is equal-area
    qz = max(int(np.ceil(np.sqrt(q / 2.0))), 4)
    qt = 2 * qz
    z = -r + 2.0 * r * (np.arange(qz) + 0.5) / qz
    th = 2.0 * np.pi * (np.arange(qt) + 0.5) / qt
    zz, tt = np.meshgrid(z, th, indexing="ij")
    rho = np.sqrt(np.maximum(r**2 - zz**2, 0.0))
    pts = np.stack([c[0] + rho * np.cos(tt), c[1] + rho * np.sin(tt), c[2] + zz],
                   axis=-1).reshape(-1, 3)
    return pts, np.full(pts.shape[0], 4.0 * np.pi * r**2 / pts.shape[0])


def nearest_anchor(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Index of the nearest anchor for each row of x; ties break to the
    lowest index.  Reference (brute force) rule for Voronoi assignment."""
    x = np.atleast_2d(x)
    winners = np.empty(x.shape[0], dtype=np.int64)
    # chunked to bound the distance matrix size
    step = max(1, 10_000_000 // max(points.shape[0], 1))
    for lo in range(0, x.shape[0], step):
        xc = x[lo:lo + step]
        d2 = ((xc[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
        m = d2.min(axis=1)
        idx = np.where(d2 == m[:, None], np.arange(points.shape[0]), _BIG)
        winners[lo:lo + step] = idx.min(axis=1)
    return winners


def _idw_base(fam: WeightFamily, x: np.ndarray) -> np.ndarray:
    r = np.sqrt(((x[:, None, :] - fam.anchors.points[None, :, :]) ** 2).sum(axis=2))
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.maximum(0.0, fam.idw_radii[None, :] - r) / (fam.idw_radii[None, :] * r)
    base[~np.isfinite(base)] = np.inf  # exact anchor hits
    return base, r


def eval_weights_batch(fam: WeightFamily, x: np.ndarray) -> np.ndarray:
    """Weight vectors (rows summing to one) at shell points x (n, d)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m = fam.size
    if fam.kind == "voronoi":
        out = np.zeros((x.shape[0], m))
        out[np.arange(x.shape[0]), nearest_anchor(fam.anchors.points, x)] = 1.0
        return out
    base, r = _idw_base(fam, x)
    w = base**fam.idw_power
    out = np.zeros((x.shape[0], m))
    at_anchor = r < 1e-14
    for i in range(x.shape[0]):
        hit = np.nonzero(at_anchor[i])[0]
        if hit.size:
            out[i, hit[0]] = 1.0
            continue
        total = w[i].sum()
        if total == 0.0 or not np.isfinite(total):
            # no support covers x; fall back to the Voronoi assignment
            warnings.warn("point outside all IDW supports; assigned to the "
                          "nearest anchor", stacklevel=2)
            out[i, int(np.argmin(r[i]))] = 1.0
        else:
            out[i] = w[i] / total
    return out


def eval_weights(fam: WeightFamily, x) -> np.ndarray:
    """Weights of all anchors at a single shell point."""
    return eval_weights_batch(fam, np.asarray(x, dtype=float)[None, :])[0]


def interpolate(fam: WeightFamily, nodal_values, x) -> float:
    """Weight-interpolant sum_i omega_i(x) f_i; for Voronoi the nearest
    nodal value."""
    nodal_values = np.asarray(nodal_values, dtype=float)
    if nodal_values.shape[0] != fam.size:
        raise ValidationError("one nodal value per anchor required")
    return float(eval_weights(fam, x) @ nodal_values)


def _uniform_circle_shortcut(anchors: BoundaryPointSet) -> bool:
    """True when every block is a full uniform circle and blocks are far
    enough apart that each circle's cells stay on its own circle."""
    blocks = anchors.blocks
    if not blocks or any(b.kind != "circle" or not b.uniform for b in blocks):
        return False
    max_spacing = max(2.0 * np.pi * b.radius / b.count for b in blocks)
    for i, a in enumerate(blocks):
        for b in blocks[i + 1:]:
            gap = np.linalg.norm(a.center - b.center) - a.radius - b.radius
            if gap <= max_spacing:
                return False
    return True


def cell_measures(anchors: BoundaryPointSet, dom: Domain | None = None,
                  kind: str = "voronoi", idw_radii: np.ndarray | None = None,
                  idw_power: int = 2, quadrature_factor: int = 100) -> np.ndarray:
    """Surface measure captured by each anchor's weight function.

    Voronoi cells of uniformly spaced circle anchors are exact quotients of
    the circumference; everything else integrates the weights over a dense
    midpoint sampling of the anchors' shapes (>= quadrature_factor samples
    per anchor).
    """
    m = len(anchors)
    sigma = np.zeros(m)
    if kind == "voronoi" and _uniform_circle_shortcut(anchors):
        for b in anchors.blocks:
            sigma[b.start:b.start + b.count] = _block_measure(b) / b.count
        return sigma
    fam = WeightFamily(kind, anchors, np.ones(m), idw_power, idw_radii)
    for b in anchors.blocks:
        q = max(quadrature_factor * b.count, 2000)
        pts, elem = _block_samples(b, q)
        for lo in range(0, pts.shape[0], 20_000):
            w = eval_weights_batch(fam, pts[lo:lo + 20_000])
            sigma += w.T @ elem[lo:lo + 20_000]
    bad = np.nonzero(sigma <= 0.0)[0]
    if bad.size:
        raise ConfigurationError(f"anchor {bad[0]} owns a zero-measure cell")
    return sigma


def _nearest_spacing(points: np.ndarray) -> np.ndarray:
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    return np.sqrt(d2.min(axis=1))


def idw_radii_for(anchors: BoundaryPointSet, radius_factor: float = 2.0) -> np.ndarray:
    """Support radii: radius_factor times the nearest-anchor spacing, capped
    just below the global minimum spacing so no anchor lies inside another
    anchor's support."""
    spacing = _nearest_spacing(anchors.points)
    return np.minimum(radius_factor * spacing, 0.999 * spacing.min())


def voronoi_family(anchors: BoundaryPointSet, dom: Domain | None = None,
                   with_sigma: bool = True) -> WeightFamily:
    sigma = cell_measures(anchors, dom, "voronoi") if with_sigma else None
    return WeightFamily("voronoi", anchors, sigma)


def idw_family(anchors: BoundaryPointSet, dom: Domain | None = None,
               power: int = 2, radius_factor: float = 2.0,
               with_sigma: bool = True) -> WeightFamily:
    if not 1 <= int(power) <= 8:
        raise ValidationError("idw power must be an integer in 1..8")
    radii = idw_radii_for(anchors, radius_factor)
    sigma = cell_measures(anchors, dom, "idw", radii, int(power)) if with_sigma else None
    return WeightFamily("idw", anchors, sigma, int(power), radii)


def make_family(kind: str, anchors: BoundaryPointSet, dom: Domain | None = None,
                idw_power: int = 2, idw_radius_factor: float = 2.0,
                with_sigma: bool = True) -> WeightFamily:
    if kind == "voronoi":
        return voronoi_family(anchors, dom, with_sigma)
    if kind == "idw":
        return idw_family(anchors, dom, idw_power, idw_radius_factor, with_sigma)
    raise ValidationError(f"unknown weight kind {kind!r}")
