"""Benchmark domains: balls and axis-aligned squares minus spherical holes.

Every domain supplies an exact signed distance to its boundary (positive
inside), a partition of the boundary components into an accessible part
(gamma0) and an inaccessible part (gamma1), per-component surface measures,
nearest-component classification for points in the stopping shell, and
deterministic boundary point generators (uniform angles on circles, equal
arc length on squares, Bauer spiral on spheres).

Component ids: 0 is the outer boundary, 1..L are the holes in order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GeometryError, ValidationError

GAMMA0 = "gamma0"
GAMMA1 = "gamma1"


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ValidationError(f"ball radius must be positive, got {self.radius}")


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned cube [-h, h]^d shifted to ``center``."""

    center: np.ndarray
    halfwidth: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.halfwidth <= 0:
            raise ValidationError(f"box halfwidth must be positive, got {self.halfwidth}")


Shape = Ball | Box


@dataclass(frozen=True, eq=False)
class Domain:
    dimension: int
    outer: Shape
    holes: tuple[Ball, ...]
    gamma0: frozenset[int]  # component ids forming the accessible boundary

    def __post_init__(self):
        object.__setattr__(self, "gamma0", frozenset(self.gamma0))
        d = self.dimension
        if d not in (2, 3):
            raise ValidationError(f"dimension must be 2 or 3, got {d}")
        if self.outer.center.shape != (d,):
            raise ValidationError("outer shape dimension mismatch")
        for h in self.holes:
            if h.center.shape != (d,):
                raise ValidationError("hole dimension mismatch")
        bad = self.gamma0 - set(range(self.n_components))
        if bad:
            raise ValidationError(f"gamma0 references unknown components {sorted(bad)}")
        _check_hole_layout(self)

    @property
    def n_components(self) -> int:
        return 1 + len(self.holes)

    @property
    def gamma1(self) -> frozenset[int]:
        return frozenset(range(self.n_components)) - self.gamma0

    def side_of(self, component: int) -> str:
        return GAMMA0 if component in self.gamma0 else GAMMA1

    def measure(self, side: str) -> float:
        comps = self.gamma0 if side == GAMMA0 else self.gamma1
        return sum(surface_measure(self, c) for c in comps)


def _check_hole_layout(dom: Domain) -> None:
    # holes strictly inside the outer shape and pairwise disjoint
    for i, h in enumerate(dom.holes):
        if isinstance(dom.outer, Ball):
            gap = dom.outer.radius - (np.linalg.norm(h.center - dom.outer.center) + h.radius)
        else:
            gap = dom.outer.halfwidth - (np.max(np.abs(h.center - dom.outer.center)) + h.radius)
        if gap <= 0:
            raise ValidationError(f"hole {i + 1} is not strictly inside the outer boundary")
    for i in range(len(dom.holes)):
        for j in range(i + 1, len(dom.holes)):
            a, b = dom.holes[i], dom.holes[j]
            if np.linalg.norm(a.center - b.center) <= a.radius + b.radius:
                raise ValidationError(f"holes {i + 1} and {j + 1} overlap")


@dataclass(frozen=True, eq=False)
class AnchorBlock:
    """One structured run of anchors: all on a single shape, in order.

    ``kind`` is "circle" (uniform angles from angle 0, counterclockwise),
    "square" (equal arc length counterclockwise from the bottom-right
    corner), "sphere" (Bauer spiral) or "generic" (no structure assumed).
    ``uniform`` asserts the anchors follow the canonical generator layout
    exactly; only then may backends prune nearest-anchor searches.
    """

    kind: str
    start: int
    count: int
    component: int  # domain component id, -1 for virtual loci
    center: np.ndarray
    radius: float  # circle/sphere radius, or square halfwidth
    uniform: bool = True


@dataclass(frozen=True, eq=False)
class BoundaryPointSet:
    points: np.ndarray  # (M, d)
    component_ids: np.ndarray  # (M,)
    params: np.ndarray  # (M,) angle / arc length / polar angle
    blocks: tuple[AnchorBlock, ...] = field(default=())

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class ShellClassification:
    on_shell: bool
    side: str  # GAMMA0 or GAMMA1
    component: int
    projected_point: np.ndarray
    distance: float
    tie: bool = False


# ---------------------------------------------------------------------------
# distances


def _norm(v: np.ndarray) -> float:
    # explicit association, bit-compatible with the walk kernels
    t = v[0] * v[0] + v[1] * v[1]
    if v.shape[0] == 3:
        t = t + v[2] * v[2]
    return math.sqrt(t)


def _ball_signed(shape: Ball, x: np.ndarray) -> float:
    return shape.radius - _norm(x - shape.center)


def _box_signed(shape: Box, x: np.ndarray) -> float:
    q = np.abs(x - shape.center) - shape.halfwidth
    m = float(np.max(q))
    if m <= 0.0:
        return -m
    return -_norm(np.maximum(q, 0.0))


def dist_to_boundary(dom: Domain, x) -> float:
    """Signed Euclidean distance to the full boundary: positive inside."""
    x = np.asarray(x, dtype=float)
    if isinstance(dom.outer, Ball):
        sd = _ball_signed(dom.outer, x)
    else:
        sd = _box_signed(dom.outer, x)
    for h in dom.holes:
        sd = min(sd, _norm(x - h.center) - h.radius)
    return sd


def component_distances(dom: Domain, x) -> np.ndarray:
    """Unsigned distance from x to each boundary component."""
    x = np.asarray(x, dtype=float)
    out = np.empty(dom.n_components)
    if isinstance(dom.outer, Ball):
        out[0] = abs(_ball_signed(dom.outer, x))
    else:
        out[0] = abs(_box_signed(dom.outer, x))
    for i, h in enumerate(dom.holes):
        out[1 + i] = abs(_norm(x - h.center) - h.radius)
    return out


def project_to_component(dom: Domain, component: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if component == 0:
        shape = dom.outer
    else:
        shape = dom.holes[component - 1]
    if isinstance(shape, Ball):
        v = x - shape.center
        n = np.linalg.norm(v)
        if n == 0.0:
            v = np.zeros_like(x)
            v[0] = 1.0
            n = 1.0
        return shape.center + shape.radius * (v / n)
    # box: inside -> push to the nearest wall, outside -> clamp
    q = x - shape.center
    h = shape.halfwidth
    if np.max(np.abs(q)) < h:
        j = int(np.argmax(np.abs(q) - h))  # nearest wall, lowest index on ties
        p = x.copy()
        p[j] = shape.center[j] + (h if q[j] >= 0 else -h)
        return p
    return shape.center + np.clip(q, -h, h)


def classify_shell(dom: Domain, x, eps: float) -> ShellClassification:
    """Attribute a shell point to its nearest boundary component.

    Ties within 1e-14 are broken towards the lowest component id and
    flagged; for eps below half the smallest gap between components the
    winner is unambiguous.
    """
    x = np.asarray(x, dtype=float)
    dists = component_distances(dom, x)
    comp = int(np.argmin(dists))  # argmin takes the lowest index on ties
    tie = False
    if dom.n_components > 1:
        others = np.delete(dists, comp)
        tie = bool(np.min(others) - dists[comp] <= 1e-14)
    return ShellClassification(
        on_shell=bool(dists[comp] <= eps),
        side=dom.side_of(comp),
        component=comp,
        projected_point=project_to_component(dom, comp, x),
        distance=float(dists[comp]),
        tie=tie,
    )


# ---------------------------------------------------------------------------
# boundary point generators


def circle_points(center, radius: float, m: int, component: int = -1) -> BoundaryPointSet:
    """m points at angles 2*pi*k/m, counterclockwise from angle 0."""
    if m < 1:
        raise ValidationError("point count must be >= 1")
    center = np.asarray(center, dtype=float)
    ang = 2.0 * np.pi * np.arange(m) / m
    pts = np.stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)], axis=1)
    block = AnchorBlock("circle", 0, m, component, center, radius)
    return BoundaryPointSet(pts, np.full(m, component), ang, (block,))


def square_points(center, halfwidth: float, m: int, component: int = -1) -> BoundaryPointSet:
    """m points equally spaced in arc length, counterclockwise from the
    bottom-right corner."""
    if m < 1:
        raise ValidationError("point count must be >= 1")
    center = np.asarray(center, dtype=float)
    h = halfwidth
    s = (8.0 * h) * np.arange(m) / m
    pts = np.empty((m, 2))
    for i, si in enumerate(s):
        pts[i] = center + square_arc_to_point(h, si)
    block = AnchorBlock("square", 0, m, component, center, h)
    return BoundaryPointSet(pts, np.full(m, component), s, (block,))


def square_arc_to_point(h: float, s: float) -> np.ndarray:
    """Arc length s in [0, 8h) -> point on [-h,h]^2, start (h,-h), ccw."""
    s = s % (8.0 * h)
    if s < 2.0 * h:
        return np.array([h, -h + s])
    if s < 4.0 * h:
        return np.array([h - (s - 2.0 * h), h])
    if s < 6.0 * h:
        return np.array([-h, h - (s - 4.0 * h)])
    return np.array([-h + (s - 6.0 * h), -h])


def square_point_to_arc(h: float, p: np.ndarray) -> float:
    """Arc length of the point on [-h,h]^2 nearest to p (inverse of the
    generator on boundary points)."""
    x, y = float(p[0]), float(p[1])
    # decide the nearest edge by unsigned wall distances, lowest index wins
    dists = (abs(x - h), abs(y - h), abs(x + h), abs(y + h))  # r, t, l, b
    edge = int(np.argmin(dists))
    if edge == 0:
        return (np.clip(y, -h, h) + h) % (8.0 * h)
    if edge == 1:
        return 2.0 * h + (h - np.clip(x, -h, h))
    if edge == 2:
        return 4.0 * h + (h - np.clip(y, -h, h))
    return 6.0 * h + (np.clip(x, -h, h) + h)


def bauer_spiral(center, radius: float, m: int, component: int = -1) -> BoundaryPointSet:
    """m points on the Bauer spherical spiral of the given sphere.

    phi_k = arccos(1 - (2k-1)/m), theta_k = sqrt(m*pi) * phi_k, k = 1..m.
    """
    if m < 1:
        raise ValidationError("point count must be >= 1")
    center = np.asarray(center, dtype=float)
    k = np.arange(1, m + 1)
    phi = np.arccos(1.0 - (2.0 * k - 1.0) / m)
    theta = math.sqrt(m * np.pi) * phi
    pts = np.stack(
        [
            center[0] + radius * np.sin(phi) * np.cos(theta),
            center[1] + radius * np.sin(phi) * np.sin(theta),
            center[2] + radius * np.cos(phi),
        ],
        axis=1,
    )
    block = AnchorBlock("sphere", 0, m, component, center, radius)
    return BoundaryPointSet(pts, np.full(m, component), phi, (block,))


def concat_point_sets(sets: list[BoundaryPointSet]) -> BoundaryPointSet:
    pts = np.concatenate([s.points for s in sets], axis=0)
    ids = np.concatenate([s.component_ids for s in sets])
    par = np.concatenate([s.params for s in sets])
    blocks = []
    off = 0
    for s in sets:
        for b in s.blocks:
            blocks.append(replace(b, start=b.start + off))
        off += len(s)
    return BoundaryPointSet(pts, ids, par, tuple(blocks))


def boundary_points(dom: Domain, component: int, m: int) -> BoundaryPointSet:
    """m points on one boundary component of the domain."""
    if component < 0 or component >= dom.n_components:
        raise ValidationError(f"no boundary component {component}")
    shape = dom.outer if component == 0 else dom.holes[component - 1]
    if isinstance(shape, Ball):
        if dom.dimension == 2:
            return circle_points(shape.center, shape.radius, m, component)
        return bauer_spiral(shape.center, shape.radius, m, component)
    if dom.dimension != 2:
        raise GeometryError("box boundaries are only generated in 2D")
    return square_points(shape.center, shape.halfwidth, m, component)


def side_points(dom: Domain, side: str, counts) -> BoundaryPointSet:
    """Points on every component of one side, concatenated in component
    order.  ``counts`` is either a total split evenly or a per-component
    list."""
    comps = sorted(dom.gamma0 if side == GAMMA0 else dom.gamma1)
    if not comps:
        raise ValidationError(f"domain has no {side} components")
    if np.isscalar(counts):
        if counts % len(comps) != 0:
            raise ValidationError(
                f"{counts} points cannot be split evenly over {len(comps)} components"
            )
        counts = [counts // len(comps)] * len(comps)
    if len(counts) != len(comps):
        raise ValidationError("one point count per component required")
    return concat_point_sets([boundary_points(dom, c, m) for c, m in zip(comps, counts)])


def surface_measure(dom: Domain, component: int) -> float:
    shape = dom.outer if component == 0 else dom.holes[component - 1]
    if isinstance(shape, Ball):
        if dom.dimension == 2:
            return 2.0 * np.pi * shape.radius
        return 4.0 * np.pi * shape.radius**2
    if dom.dimension == 2:
        return 8.0 * shape.halfwidth
    return 24.0 * shape.halfwidth**2


# ---------------------------------------------------------------------------
# catalog


def make_domain(outer: Shape, holes=(), gamma0=(0,)) -> Domain:
    d = outer.center.shape[0]
    return Domain(d, outer, tuple(holes), frozenset(gamma0))


_FIVE_HOLE_ANGLES = 2.0 * np.pi * np.arange(5) / 5.0


def catalog(key: str, **kw) -> Domain:
    """Domains used by the bundled benchmark problems.

    disc             unit disc, whole boundary inaccessible
    square           [-1,1]^2, whole boundary inaccessible
    square_hole      [-1,1]^2 minus the disc of radius 0.2 at (0.5, 0)
    annulus          unit disc minus a concentric disc (hole_radius=0.5)
    disc_five_holes  unit disc minus five discs of radius 0.2 at radius 0.5
    ball3d           unit ball, whole boundary inaccessible
    shell3d          unit ball minus a ball (hole_radius=0.5,
                     hole_center=(0,0,0))
    Accessible side defaults to the outer component where a hole exists;
    pass gamma0=() to make everything inaccessible.
    """
    outer_radius = kw.pop("outer_radius", 1.0)
    if key == "disc":
        dom = make_domain(Ball(np.zeros(2), outer_radius), gamma0=kw.pop("gamma0", ()))
    elif key == "square":
        dom = make_domain(Box(np.zeros(2), kw.pop("halfwidth", 1.0)), gamma0=kw.pop("gamma0", ()))
    elif key == "square_hole":
        hole = Ball(np.asarray(kw.pop("hole_center", (0.5, 0.0))), kw.pop("hole_radius", 0.2))
        dom = make_domain(Box(np.zeros(2), kw.pop("halfwidth", 1.0)), [hole],
                          gamma0=kw.pop("gamma0", (0,)))
    elif key == "annulus":
        hole = Ball(np.zeros(2), kw.pop("hole_radius", 0.5))
        dom = make_domain(Ball(np.zeros(2), outer_radius), [hole], gamma0=kw.pop("gamma0", (0,)))
    elif key == "disc_five_holes":
        r = kw.pop("hole_radius", 0.2)
        rho = kw.pop("hole_orbit", 0.5)
        holes = [Ball(rho * np.array([np.cos(a), np.sin(a)]), r) for a in _FIVE_HOLE_ANGLES]
        dom = make_domain(Ball(np.zeros(2), outer_radius), holes, gamma0=kw.pop("gamma0", (0,)))
    elif key == "ball3d":
        dom = make_domain(Ball(np.zeros(3), outer_radius), gamma0=kw.pop("gamma0", ()))
    elif key == "shell3d":
        hole = Ball(np.asarray(kw.pop("hole_center", (0.0, 0.0, 0.0))), kw.pop("hole_radius", 0.5))
        dom = make_domain(Ball(np.zeros(3), outer_radius), [hole], gamma0=kw.pop("gamma0", (0,)))
    else:
        raise ValidationError(f"unknown domain key {key!r}")
    if kw:
        raise ValidationError(f"unused domain parameters: {sorted(kw)}")
    return dom
