"""The walk-on-ellipsoids chain and related helpers.

A walk jumps from x to x + dist(x, boundary) * K^{1/2} U with U uniform on
the unit sphere, and stops on entering the eps-shell of the boundary.  The
normalisation of K (largest eigenvalue 1) keeps every step inside the
closed domain.  ``run_walk`` is the scalar reference used by tests; bulk
simulation goes through the chunked backend kernels.

Directions are drawn by rejection from the unit square/disc pair so the
whole chain uses only IEEE-exact arithmetic; see rng.py for the stream
layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .conductivity import ConductivityTensor
from .errors import GeometryError, ValidationError, WalkBudgetError
from .geometry import Domain, ShellClassification, classify_shell, dist_to_boundary
from .rng import WalkStream


@dataclass(frozen=True)
class WalkConfig:
    eps: float
    max_steps: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValidationError("shell thickness eps must be positive")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1")


@dataclass(frozen=True, eq=False)
class ExitSample:
    exit_point: np.ndarray
    side: str  # geometry.GAMMA0 or geometry.GAMMA1
    component: int
    steps_taken: int


@dataclass(frozen=True, eq=False)
class CauchyTrace:
    """One accessible-boundary measurement pair: Dirichlet value u0 and
    conormal flux q0 at x0, plus the extrapolation step h."""

    x0: np.ndarray
    u0: float
    q0: float
    h: float

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValidationError("extrapolation step h must be positive")


def sample_unit_sphere(stream: WalkStream, d: int) -> np.ndarray:
    """Uniform direction on S^{d-1}, d in {2, 3}.

    Rejection from the unit disc: in 2D the accepted point is normalised,
    in 3D it is lifted by the area-preserving map
    (v1, v2) -> (2 v1 sqrt(1-s), 2 v2 sqrt(1-s), 1-2s), s = v1^2 + v2^2.
    """
    if d not in (2, 3):
        raise ValidationError("directions exist for d in {2, 3} only")
    while True:
        u0, u1 = stream.next_pair()
        v1 = 2.0 * u0 - 1.0
        v2 = 2.0 * u1 - 1.0
        s = v1 * v1 + v2 * v2
        if d == 2:
            if s <= 1.0 and s > 0.0:
                rs = math.sqrt(s)
                return np.array([v1 / rs, v2 / rs])
        else:
            if s < 1.0:
                f = 2.0 * math.sqrt(1.0 - s)
                return np.array([v1 * f, v2 * f, 1.0 - 2.0 * s])


def run_walk(dom: Domain, kt: ConductivityTensor, x, cfg: WalkConfig,
             pole_index: int = 0, replicate: int = 0) -> ExitSample:
    """One walk from x to the shell; scalar mirror of the batch kernels."""
    x = np.asarray(x, dtype=float).copy()
    d = dom.dimension
    ks = kt.k_sqrt
    stream = WalkStream(cfg.seed, pole_index, replicate)
    steps = 0
    while True:
        sd = dist_to_boundary(dom, x)
        if sd <= cfg.eps:
            break
        if steps >= cfg.max_steps:
            raise WalkBudgetError(pole_index, replicate, cfg.max_steps)
        u = sample_unit_sphere(stream, d)
        if d == 2:
            y0 = ks[0, 0] * u[0] + ks[0, 1] * u[1]
            y1 = ks[1, 0] * u[0] + ks[1, 1] * u[1]
            x[0] = x[0] + sd * y0
            x[1] = x[1] + sd * y1
        else:
            y0 = ks[0, 0] * u[0] + ks[0, 1] * u[1] + ks[0, 2] * u[2]
            y1 = ks[1, 0] * u[0] + ks[1, 1] * u[1] + ks[1, 2] * u[2]
            y2 = ks[2, 0] * u[0] + ks[2, 1] * u[1] + ks[2, 2] * u[2]
            x[0] = x[0] + sd * y0
            x[1] = x[1] + sd * y1
            x[2] = x[2] + sd * y2
        steps += 1
    shell: ShellClassification = classify_shell(dom, x, cfg.eps)
    return ExitSample(x, shell.side, shell.component, steps)


def batch_exits(dom: Domain, kt: ConductivityTensor, x, cfg: WalkConfig,
                n: int, pole_index: int = 0, threads: int | None = None):
    """Exit points, step counts and owning components for n walks from x."""
    return backend.run_exits(dom, kt.k_sqrt, np.asarray(x, dtype=float), pole_index,
                             cfg.seed, cfg.eps, cfg.max_steps, n, threads)


def mean_steps_profile(dom: Domain, kt: ConductivityTensor, x, eps_list,
                       n: int, seed: int = 0, max_steps: int = 1_000_000,
                       threads: int | None = None):
    """Mean step count (with standard error) per shell thickness.

    eps_list must be decreasing; each eps gets its own n walks.
    """
    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValidationError("eps_list must be strictly decreasing")
    out = []
    for j, eps in enumerate(eps_list):
        cfg = WalkConfig(eps=eps, max_steps=max_steps, seed=seed)
        _, steps, _ = batch_exits(dom, kt, x, cfg, n, pole_index=j, threads=threads)
        mean = float(steps.mean())
        stderr = float(steps.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        out.append((eps, mean, stderr))
    return out


def extrapolate_cauchy(trace: CauchyTrace, kt: ConductivityTensor, normal,
                       dom: Domain | None = None):
    """First-order interior extrapolation of accessible Cauchy data.

    Moves h * K n inward from x0 and transports the Dirichlet value with
    the conormal flux: u(x_D) ~ u0 - h q0, with O(h^2) error.
    """
    normal = np.asarray(normal, dtype=float)
    x_d = trace.x0 - trace.h * (kt.k @ normal)
    if dom is not None and dist_to_boundary(dom, x_d) <= 0.0:
        raise GeometryError(f"extrapolated point {x_d.tolist()} is not inside the domain")
    return x_d, trace.u0 - trace.h * trace.q0
