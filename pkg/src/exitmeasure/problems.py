"""Benchmark problems: exact solutions, example configurations, analytic
oracles and error metrics.

The exact solutions are harmonic (or K-harmonic for the anisotropic one);
measurements are synthesised by evaluating them at the generated boundary
and interior points, so reconstructions can be compared against known
truth on the inaccessible side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .conductivity import ConductivityTensor, identity_tensor, make_tensor
from .errors import ConfigurationError, ValidationError
from .estimator import MeasurementSet, make_measurements, uniform_nu
from .geometry import (Domain, BoundaryPointSet, bauer_spiral, catalog,
                       circle_points, side_points, square_points)

# anisotropic benchmark tensor: K11=1, K12=K21=0.3, K22=0.4
ANISO_K = np.array([[1.0, 0.3], [0.3, 0.4]])


@dataclass(frozen=True, eq=False)
class ExactSolution:
    id: str
    dimension: int
    k_required: str  # "identity" or "anisotropic"
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.fn(pts)

    def tensor(self) -> ConductivityTensor:
        if self.k_required == "identity":
            return identity_tensor(self.dimension)
        return make_tensor(ANISO_K)


def _sol2d_1(p):
    return 0.75 * (1.0 - p[:, 0] ** 2) * p[:, 1] + 0.25 * p[:, 1] ** 3


def _sol2d_2(p):
    x, y = p[:, 0], p[:, 1]
    return -(x**3) / 3.0 - x**2 * y + x * y**2 + y**3 / 3.0


def _sol2d_3(p):
    return p[:, 0] ** 2 - p[:, 1] ** 2


# cubic that is harmonic for div(K grad u) with the anisotropic K above
_A4 = (2.0 * ANISO_K[1, 0] - ANISO_K[1, 1]) / (3.0 * ANISO_K[0, 0])
_B4 = (2.0 * ANISO_K[0, 1] - ANISO_K[0, 0]) / (3.0 * ANISO_K[1, 1])


def _sol2d_4(p):
    x, y = p[:, 0], p[:, 1]
    return _A4 * x**3 - x**2 * y + x * y**2 - _B4 * y**3


def _sol3d_1(p):
    return p[:, 0] * p[:, 1] + p[:, 1] ** 2 - p[:, 2] ** 2


def _sol3d_2(p):
    return 1.0 / np.sqrt(p[:, 0] ** 2 + p[:, 1] ** 2 + p[:, 2] ** 2)


def _sol3d_3(p):
    return 0.75 * (1.0 - p[:, 0] ** 2) * p[:, 1] + 0.25 * p[:, 1] ** 3


SOLUTIONS: dict[str, ExactSolution] = {
    s.id: s
    for s in (
        ExactSolution("sol2d_1", 2, "identity", _sol2d_1),
        ExactSolution("sol2d_2", 2, "identity", _sol2d_2),
        ExactSolution("sol2d_3", 2, "identity", _sol2d_3),
        ExactSolution("sol2d_4", 2, "anisotropic", _sol2d_4),
        ExactSolution("sol3d_1", 3, "identity", _sol3d_1),
        ExactSolution("sol3d_2", 3, "identity", _sol3d_2),
        ExactSolution("sol3d_3", 3, "identity", _sol3d_3),
    )
}


@dataclass(frozen=True, eq=False)
class GammaD:
    """The interior measurement locus: a closed curve or surface strictly
    inside the domain."""

    kind: str  # "circle", "square" or "sphere"
    center: tuple
    radius: float  # circle/sphere radius or square halfwidth

    def points(self, m: int) -> BoundaryPointSet:
        c = np.asarray(self.center, dtype=float)
        if self.kind == "circle":
            return circle_points(c, self.radius, m)
        if self.kind == "square":
            return square_points(c, self.radius, m)
        if self.kind == "sphere":
            return bauer_spiral(c, self.radius, m)
        raise ValidationError(f"unknown measurement locus kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class ExampleConfig:
    id: str
    domain_key: str
    domain_kw: dict
    m0: int
    m1_counts: tuple  # per gamma1 component, ascending component order
    md: int
    n_full: int
    n_desk: int
    eps: float
    gamma_d: GammaD

    @property
    def m1(self) -> int:
        return int(sum(self.m1_counts))

    def domain(self) -> Domain:
        return catalog(self.domain_key, **self.domain_kw)

    def gamma1_anchors(self, dom: Domain | None = None) -> BoundaryPointSet:
        dom = dom or self.domain()
        return side_points(dom, "gamma1", list(self.m1_counts))

    def gamma0_points(self, dom: Domain | None = None) -> BoundaryPointSet | None:
        if self.m0 == 0:
            return None
        dom = dom or self.domain()
        return side_points(dom, "gamma0", [self.m0])

    def interior_points(self) -> BoundaryPointSet:
        return self.gamma_d.points(self.md)


EXAMPLES: dict[str, ExampleConfig] = {
    c.id: c
    for c in (
        ExampleConfig("ex5_1", "square_hole", {}, 400, (50,), 40, 10**6, 10**5,
                      1e-7, GammaD("square", (0.0, 0.0), 0.95)),
        ExampleConfig("ex5_2", "annulus", {"hole_radius": 0.5}, 500, (100,), 100,
                      10**6, 10**5, 1e-10, GammaD("circle", (0.0, 0.0), 0.95)),
        ExampleConfig("ex5_3", "annulus", {"hole_radius": 0.2}, 500, (100,), 100,
                      10**6, 10**5, 1e-10, GammaD("circle", (0.0, 0.0), 0.95)),
        ExampleConfig("ex5_4", "disc_five_holes", {}, 500, (100,) * 5, 100,
                      10**6, 10**5, 1e-10, GammaD("circle", (0.0, 0.0), 0.95)),
        ExampleConfig("ex5_5", "square_hole", {"gamma0": ()}, 0, (400, 50), 40,
                      10**6, 10**5, 1e-10, GammaD("circle", (-0.5, 0.5), 0.3)),
        ExampleConfig("ex5_6", "shell3d", {}, 1000, (100,), 100, 10**5, 10**4,
                      1e-10, GammaD("sphere", (0.0, 0.0, 0.0), 0.95)),
        ExampleConfig("ex5_7", "shell3d", {"hole_center": (0.3, 0.0, 0.0)}, 1000,
                      (100,), 100, 10**5, 10**4, 1e-10,
                      GammaD("sphere", (0.0, 0.0, 0.0), 0.95)),
    )
}


def synthesize_measurements(cfg: ExampleConfig, sol: ExactSolution,
                            dom: Domain | None = None,
                            kt: ConductivityTensor | None = None) -> MeasurementSet:
    """Exact-solution traces at the generated measurement points, with the
    uniform scaling nu_i = 1 / sqrt(M_D)."""
    dom = dom or cfg.domain()
    if sol.dimension != dom.dimension:
        raise ConfigurationError(
            f"solution {sol.id} is {sol.dimension}D but the domain is {dom.dimension}D")
    if kt is not None:
        required = sol.tensor()
        if kt.k.shape != required.k.shape or not np.allclose(kt.k, required.k, atol=1e-12):
            raise ConfigurationError(
                f"solution {sol.id} requires the {sol.k_required} tensor")
    xd = cfg.interior_points().points
    x0set = cfg.gamma0_points(dom)
    if x0set is None:
        return make_measurements(dom, xd, sol(xd), nu=uniform_nu(cfg.md), eps=cfg.eps)
    return make_measurements(dom, xd, sol(xd), x0set.points, sol(x0set.points),
                             nu=uniform_nu(cfg.md), eps=cfg.eps)


def boundary_truth(cfg: ExampleConfig, sol: ExactSolution,
                   dom: Domain | None = None) -> np.ndarray:
    """The exact solution at the gamma1 anchors (the reference curve)."""
    return sol(cfg.gamma1_anchors(dom).points)


def reconstruction_error(truth: np.ndarray, solutions, sigma: np.ndarray):
    """Per-row (L2-relative, Linf) errors against the truth under the
    sigma-weighted norm; absolute L2 when the truth is zero.

    ``solutions`` is a (rows, M_1) array or a reconstruction family object
    exposing ``.solutions``.
    """
    truth = np.asarray(truth, dtype=float)
    if hasattr(solutions, "solutions"):
        solutions = solutions.solutions
    solutions = np.atleast_2d(np.asarray(solutions, dtype=float))
    if solutions.shape[1] != truth.shape[0] or sigma.shape[0] != truth.shape[0]:
        raise ValidationError("truth, solutions and sigma lengths must agree")
    tnorm = math.sqrt(float(np.sum(sigma * truth**2)))
    out = []
    for row in solutions:
        diff = row - truth
        l2 = math.sqrt(float(np.sum(sigma * diff**2)))
        out.append((l2 / tnorm if tnorm > 0.0 else l2, float(np.max(np.abs(diff)))))
    return out


def poisson_kernel_oracle(x, y) -> float:
    """Exit density of the unit ball (K = I) at boundary point y for an
    interior pole x: (1 - |x|^2) / (sigma(S) |x - y|^d)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x.shape[0]
    if d not in (2, 3):
        raise ValidationError("the kernel oracle covers d in {2, 3}")
    surf = 2.0 * np.pi if d == 2 else 4.0 * np.pi
    return float((1.0 - x @ x) / (surf * np.linalg.norm(x - y) ** d))


def annulus_hit_oracle(r0: float, r1: float, rho: float) -> float:
    """Probability that a plane Brownian path from radius rho hits the
    inner circle r1 before the outer circle r0 (radial harmonic ratio)."""
    if not (0.0 < r1 <= rho <= r0):
        raise ValidationError("pole radius must satisfy r1 <= rho <= r0")
    return math.log(r0 / rho) / math.log(r0 / r1)
