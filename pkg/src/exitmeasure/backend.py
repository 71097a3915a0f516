"""Backend selection and the deterministic chunk-parallel walk driver.

The compiled Cython kernel is used when importable; otherwise the numpy
fallback takes over.  ``EXITMEASURE_BACKEND=fallback`` forces the fallback,
``=compiled`` makes a missing extension an error.  Both implement the same
chunk contracts and produce bit-identical output.

Work is partitioned over (pole, replicate-chunk) tasks with a fixed chunk
size, and partial buffers are merged in task order, so results do not
depend on the number of worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, WalkBudgetError
from .geometry import Ball, BoundaryPointSet, Domain

_requested = os.environ.get("EXITMEASURE_BACKEND", "").lower()
if _requested in ("", "compiled"):
    try:
        from . import _kernel as _impl

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _fallback as _impl

        BACKEND = "fallback"
elif _requested in ("fallback", "python"):
    from . import _fallback as _impl

    BACKEND = "fallback"
else:
    raise ValidationError(f"unknown EXITMEASURE_BACKEND {_requested!r}")

# replicates per task; fixed so that results are independent of the worker
# count (changing it reorders the merge of fractional IDW weights)
CHUNK = 8192

_WEIGHT_KINDS = {"voronoi": 0, "idw": 1}


@dataclass(frozen=True, eq=False)
class GeomPack:
    gi: np.ndarray  # int64 [d, outer_kind, n_holes]
    gf: np.ndarray  # float64 [outer..., holes...]
    comp_side: np.ndarray  # int8 per component: 0 gamma0, 1 gamma1


@dataclass(frozen=True, eq=False)
class SidePack:
    anchors: np.ndarray  # (M, d) float64
    blk: np.ndarray  # (B, 3) int64: kind, start, count
    blkf: np.ndarray  # (B, 4) float64: cx, cy, cz, radius
    weights_kind: int
    idw_radii: np.ndarray
    idw_power: int

    @property
    def size(self) -> int:
        return self.anchors.shape[0]


def pack_geometry(dom: Domain) -> GeomPack:
    d = dom.dimension
    outer_kind = 0 if isinstance(dom.outer, Ball) else 1
    gi = np.array([d, outer_kind, len(dom.holes)], dtype=np.int64)
    parts = list(dom.outer.center)
    parts.append(dom.outer.radius if isinstance(dom.outer, Ball) else dom.outer.halfwidth)
    for h in dom.holes:
        parts.extend(h.center)
        parts.append(h.radius)
    gf = np.asarray(parts, dtype=np.float64)
    side = np.array([0 if dom.side_of(c) == "gamma0" else 1 for c in range(dom.n_components)],
                    dtype=np.int8)
    return GeomPack(gi, gf, side)


_BLOCK_KIND = {"generic": 0, "circle": 1, "square": 2, "sphere": 0}


def pack_side(anchors: BoundaryPointSet | None, d: int, eps: float,
              weights_kind: str = "voronoi",
              idw_radii: np.ndarray | None = None, idw_power: int = 2) -> SidePack:
    if anchors is None or len(anchors) == 0:
        return SidePack(np.zeros((0, d)), np.zeros((1, 3), dtype=np.int64),
                        np.zeros((1, 4)), 0, np.zeros(0), 2)
    pts = np.ascontiguousarray(anchors.points, dtype=np.float64)
    blocks = anchors.blocks or ()
    if not blocks:
        blocks = ()
    blk = []
    blkf = []
    covered = 0
    for b in blocks:
        kind = _BLOCK_KIND.get(b.kind, 0) if b.uniform else 0
        if kind == 2:
            # square pruning needs the stopping shell well inside a cell
            spacing = 8.0 * b.radius / b.count
            if eps > spacing / 16.0:
                kind = 0
        blk.append((kind, b.start, b.count))
        c3 = np.zeros(3)
        c3[: b.center.shape[0]] = b.center
        blkf.append((c3[0], c3[1], c3[2], b.radius))
        covered += b.count
    if covered != len(anchors):
        # unstructured leftovers: scan them brute force
        blk = [(0, 0, len(anchors))]
        blkf = [(0.0, 0.0, 0.0, 0.0)]
    wk = _WEIGHT_KINDS[weights_kind]
    if wk == 1:
        if idw_radii is None or idw_radii.shape[0] != len(anchors):
            raise ValidationError("idw radii must match the anchor count")
        radii = np.ascontiguousarray(idw_radii, dtype=np.float64)
    else:
        radii = np.zeros(0)
    return SidePack(pts, np.asarray(blk, dtype=np.int64),
                    np.asarray(blkf, dtype=np.float64), wk, radii, int(idw_power))


def _chunk_ranges(n: int):
    return [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


@dataclass(eq=False)
class AccumulateResult:
    raw0: np.ndarray  # (n_poles, M0) exit weight sums (not yet / N)
    raw1: np.ndarray
    steps_sum: np.ndarray  # (n_poles,) int64
    steps_sq_sum: np.ndarray
    steps_max: np.ndarray
    idw_fallbacks: int


def run_accumulate(dom: Domain, ksqrt: np.ndarray, poles: np.ndarray,
                   seed: int, eps: float, max_steps: int, n_rep: int,
                   side0: SidePack, side1: SidePack,
                   threads: int | None = None) -> AccumulateResult:
    """All (pole, replicate) walks, exit weights accumulated per pole row."""
    geom = pack_geometry(dom)
    ksqrt = np.ascontiguousarray(ksqrt, dtype=np.float64)
    poles = np.ascontiguousarray(poles, dtype=np.float64)
    n_poles = poles.shape[0]
    threads = threads or default_threads()
    ranges = _chunk_ranges(n_rep)

    def task(pole_idx: int, r0: int, r1: int):
        out0 = np.zeros(side0.size)
        out1 = np.zeros(side1.size)
        stats = _impl.accumulate_chunk(
            geom.gi, geom.gf, geom.comp_side, ksqrt, poles[pole_idx],
            pole_idx, r0, r1, seed, eps, max_steps,
            side0.anchors, side0.blk, side0.blkf, side0.weights_kind,
            side0.idw_radii, side0.idw_power,
            side1.anchors, side1.blk, side1.blkf, side1.weights_kind,
            side1.idw_radii, side1.idw_power,
            out0, out1)
        return out0, out1, stats

    jobs = [(i, r0, r1) for i in range(n_poles) for (r0, r1) in ranges]
    if threads == 1:
        results = [task(*j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(task, *j) for j in jobs]
            results = [f.result() for f in futures]

    res = AccumulateResult(
        raw0=np.zeros((n_poles, side0.size)),
        raw1=np.zeros((n_poles, side1.size)),
        steps_sum=np.zeros(n_poles, dtype=np.int64),
        steps_sq_sum=np.zeros(n_poles, dtype=np.int64),
        steps_max=np.zeros(n_poles, dtype=np.int64),
        idw_fallbacks=0,
    )
    # merge in job order: bitwise independent of the thread count
    for (i, _, _), (out0, out1, stats) in zip(jobs, results):
        ssum, ssq, smax, idw_fb, err = stats
        if err >= 0:
            raise WalkBudgetError(i, err, max_steps)
        res.raw0[i] += out0
        res.raw1[i] += out1
        res.steps_sum[i] += ssum
        res.steps_sq_sum[i] += ssq
        res.steps_max[i] = max(res.steps_max[i], smax)
        res.idw_fallbacks += idw_fb
    return res


def run_exits(dom: Domain, ksqrt: np.ndarray, pole_xy: np.ndarray, pole_index: int,
              seed: int, eps: float, max_steps: int, n_rep: int,
              threads: int | None = None):
    """Exit points, step counts and owning components for one pole."""
    geom = pack_geometry(dom)
    ksqrt = np.ascontiguousarray(ksqrt, dtype=np.float64)
    pole_xy = np.ascontiguousarray(pole_xy, dtype=np.float64)
    threads = threads or default_threads()
    ranges = _chunk_ranges(n_rep)

    def task(r0, r1):
        return _impl.walk_exits_chunk(geom.gi, geom.gf, geom.comp_side, ksqrt,
                                      pole_xy, pole_index, r0, r1, seed, eps, max_steps)

    if threads == 1 or len(ranges) == 1:
        results = [task(r0, r1) for r0, r1 in ranges]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(task, r0, r1) for r0, r1 in ranges]
            results = [f.result() for f in futures]
    for x, steps, comp, err in results:
        if err >= 0:
            raise WalkBudgetError(pole_index, err, max_steps)
    return (np.concatenate([r[0] for r in results], axis=0),
            np.concatenate([r[1] for r in results]),
            np.concatenate([r[2] for r in results]))
