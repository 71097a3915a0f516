"""Pure-numpy walk kernels, selected when the compiled extension is absent.

Every floating-point expression here is written with the same operand
association as the scalar loops in ``_kernel.pyx``: only IEEE-exact
operations (+, -, *, /, sqrt, abs, min/max, comparisons) touch the walk
state, so both backends produce bit-identical exits from the shared
counter-based streams.  (atan2 feeds only the candidate-window centre of
the nearest-anchor search, where a one-ulp discrepancy cannot change the
winner.)
"""

from __future__ import annotations

import numpy as np

from .rng import philox4x64, uniform01

_BIG_INDEX = np.int64(2**62)


# ---------------------------------------------------------------------------
# geometry evaluated on batches; gi = [d, outer_kind, n_holes],
# gf = [outer_center..., outer_param, (hole_center..., hole_radius)*]


def _outer_signed(gi, gf, x):
    d = int(gi[0])
    if gi[1] == 0:  # ball
        dx0 = x[:, 0] - gf[0]
        dx1 = x[:, 1] - gf[1]
        t = dx0 * dx0 + dx1 * dx1
        if d == 3:
            dx2 = x[:, 2] - gf[2]
            t = t + dx2 * dx2
        return gf[d] - np.sqrt(t)
    h = gf[d]
    q0 = np.abs(x[:, 0] - gf[0]) - h
    q1 = np.abs(x[:, 1] - gf[1]) - h
    m = np.maximum(q0, q1)
    t = np.maximum(q0, 0.0) * np.maximum(q0, 0.0) + np.maximum(q1, 0.0) * np.maximum(q1, 0.0)
    if d == 3:
        q2 = np.abs(x[:, 2] - gf[2]) - h
        m = np.maximum(m, q2)
        t = t + np.maximum(q2, 0.0) * np.maximum(q2, 0.0)
    with np.errstate(invalid="ignore"):
        return np.where(m <= 0.0, -m, -np.sqrt(t))


def _hole_dist(gi, gf, x, hole):
    d = int(gi[0])
    off = d + 1 + hole * (d + 1)
    dx0 = x[:, 0] - gf[off]
    dx1 = x[:, 1] - gf[off + 1]
    t = dx0 * dx0 + dx1 * dx1
    if d == 3:
        dx2 = x[:, 2] - gf[off + 2]
        t = t + dx2 * dx2
    return np.sqrt(t) - gf[off + d]


def _signed_dist(gi, gf, x):
    sd = _outer_signed(gi, gf, x)
    for hole in range(int(gi[2])):
        sd = np.minimum(sd, _hole_dist(gi, gf, x, hole))
    return sd


def _component_dists(gi, gf, x):
    cols = [np.abs(_outer_signed(gi, gf, x))]
    for hole in range(int(gi[2])):
        cols.append(np.abs(_hole_dist(gi, gf, x, hole)))
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# direction sampling: one Philox block per rejection trial, words 0 and 1


def _trial(seed, draws, reps, pole):
    zeros = np.zeros_like(draws)
    w0, w1, _, _ = philox4x64(seed, np.uint64(0), draws, zeros, reps, np.uint64(pole))
    return uniform01(w0), uniform01(w1)


def _sample_directions(d, seed, draw, reps, pole, out):
    """Fill ``out`` with uniform directions; ``draw`` is advanced in place."""
    need = np.arange(out.shape[0])
    while need.size:
        u0, u1 = _trial(seed, draw[need], reps[need], pole)
        with np.errstate(over="ignore"):
            draw[need] = draw[need] + np.uint64(1)
        v1 = 2.0 * u0 - 1.0
        v2 = 2.0 * u1 - 1.0
        s = v1 * v1 + v2 * v2
        if d == 2:
            acc = (s <= 1.0) & (s > 0.0)
            ai = need[acc]
            rs = np.sqrt(s[acc])
            out[ai, 0] = v1[acc] / rs
            out[ai, 1] = v2[acc] / rs
        else:
            acc = s < 1.0
            ai = need[acc]
            f = 2.0 * np.sqrt(1.0 - s[acc])
            out[ai, 0] = v1[acc] * f
            out[ai, 1] = v2[acc] * f
            out[ai, 2] = 1.0 - 2.0 * s[acc]
        need = need[~acc]


# ---------------------------------------------------------------------------
# the walk loop


def walk_exits_chunk(gi, gf, comp_side, ksqrt, pole_xy, pole_index,
                     rep_start, rep_end, seed, eps, max_steps):
    """Walk replicates [rep_start, rep_end) from one pole to the shell.

    Returns (exit_points, steps, component, err_replicate).
    """
    d = int(gi[0])
    n = int(rep_end - rep_start)
    x = np.tile(np.asarray(pole_xy, dtype=float), (n, 1))
    reps = np.arange(rep_start, rep_end, dtype=np.uint64)
    draw = np.zeros(n, dtype=np.uint64)
    steps = np.zeros(n, dtype=np.int64)
    seed = np.uint64(seed)
    pole_u = np.uint64(pole_index)
    err = -1

    alive = np.arange(n)
    while alive.size:
        xa = x[alive]
        sd = _signed_dist(gi, gf, xa)
        go = sd > eps
        alive = alive[go]
        if alive.size == 0:
            break
        over = steps[alive] >= max_steps
        if over.any():
            err = int(rep_start + alive[over][0])
            break
        sd = sd[go]
        u = np.empty((alive.size, d))
        dv = draw[alive]
        _sample_directions(d, seed, dv, reps[alive], pole_u, u)
        draw[alive] = dv
        if d == 2:
            y0 = ksqrt[0, 0] * u[:, 0] + ksqrt[0, 1] * u[:, 1]
            y1 = ksqrt[1, 0] * u[:, 0] + ksqrt[1, 1] * u[:, 1]
            x[alive, 0] = x[alive, 0] + sd * y0
            x[alive, 1] = x[alive, 1] + sd * y1
        else:
            y0 = ksqrt[0, 0] * u[:, 0] + ksqrt[0, 1] * u[:, 1] + ksqrt[0, 2] * u[:, 2]
            y1 = ksqrt[1, 0] * u[:, 0] + ksqrt[1, 1] * u[:, 1] + ksqrt[1, 2] * u[:, 2]
            y2 = ksqrt[2, 0] * u[:, 0] + ksqrt[2, 1] * u[:, 1] + ksqrt[2, 2] * u[:, 2]
            x[alive, 0] = x[alive, 0] + sd * y0
            x[alive, 1] = x[alive, 1] + sd * y1
            x[alive, 2] = x[alive, 2] + sd * y2
        steps[alive] += 1

    comp = np.argmin(_component_dists(gi, gf, x), axis=1).astype(np.int64)
    return x, steps, comp, err


# ---------------------------------------------------------------------------
# nearest-anchor assignment
#
# Per anchor block the scalar rule is: evaluate candidate anchors and keep
# the (distance^2, global index) lexicographic minimum.  Circle blocks prune
# candidates to a +-2 window around the polar-angle index, which contains
# the true minimiser and its ties for any query point; square blocks prune
# only within an eighth of the anchor spacing of the square (their own
# shell), and are scanned in full otherwise.


def _d2_to(anchors, x, cand):
    a = anchors[cand]
    dx0 = x[:, 0, None] - a[..., 0]
    dx1 = x[:, 1, None] - a[..., 1]
    t = dx0 * dx0 + dx1 * dx1
    if anchors.shape[1] == 3:
        dx2 = x[:, 2, None] - a[..., 2]
        t = t + dx2 * dx2
    return t


def _update_best(best_d2, best_gi, rows, x, anchors, cand):
    if rows.size == 0:
        return
    d2 = _d2_to(anchors, x[rows], cand)
    m = d2.min(axis=1)
    gi_masked = np.where(d2 == m[:, None], cand, _BIG_INDEX)
    g = gi_masked.min(axis=1)
    better = (m < best_d2[rows]) | ((m == best_d2[rows]) & (g < best_gi[rows]))
    upd = rows[better]
    best_d2[upd] = m[better]
    best_gi[upd] = g[better]


def _circle_candidates(blk_start, count, center, x):
    px = x[:, 0] - center[0]
    py = x[:, 1] - center[1]
    ang = np.arctan2(py, px)
    t = ang * (count / (2.0 * np.pi))
    k = np.floor(t + 0.5).astype(np.int64) % count
    offs = np.arange(-2, 3, dtype=np.int64)
    return blk_start + (k[:, None] + offs[None, :]) % count


def _square_arc(center, h, x):
    px = x[:, 0] - center[0]
    py = x[:, 1] - center[1]
    dists = np.stack([np.abs(px - h), np.abs(py - h), np.abs(px + h), np.abs(py + h)], axis=1)
    edge = np.argmin(dists, axis=1)
    cpx = np.clip(px, -h, h)
    cpy = np.clip(py, -h, h)
    s = np.choose(edge, [cpy + h, 2.0 * h + (h - cpx), 4.0 * h + (h - cpy), 6.0 * h + (cpx + h)])
    return s


def _square_signed(center, h, x):
    q0 = np.abs(x[:, 0] - center[0]) - h
    q1 = np.abs(x[:, 1] - center[1]) - h
    m = np.maximum(q0, q1)
    t = np.maximum(q0, 0.0) * np.maximum(q0, 0.0) + np.maximum(q1, 0.0) * np.maximum(q1, 0.0)
    with np.errstate(invalid="ignore"):
        return np.where(m <= 0.0, -m, -np.sqrt(t))


def assign_anchors(x, anchors, blk, blkf):
    """Lexicographic (distance^2, index) nearest anchor per exit point."""
    n = x.shape[0]
    best_d2 = np.full(n, np.inf)
    best_gi = np.full(n, _BIG_INDEX, dtype=np.int64)
    all_rows = np.arange(n)
    for b in range(blk.shape[0]):
        kind, start, count = int(blk[b, 0]), int(blk[b, 1]), int(blk[b, 2])
        center = blkf[b, :3]
        radius = blkf[b, 3]
        if kind == 1:  # circle, pruning valid everywhere
            cand = _circle_candidates(start, count, center, x)
            _update_best(best_d2, best_gi, all_rows, x, anchors, cand)
        elif kind == 2:  # square, pruning valid only in its own shell
            spacing = 8.0 * radius / count
            near = np.abs(_square_signed(center, radius, x)) <= 0.125 * spacing
            rows = all_rows[near]
            if rows.size:
                s = _square_arc(center, radius, x[rows])
                t = s * (count / (8.0 * radius))
                k = np.floor(t + 0.5).astype(np.int64) % count
                offs = np.arange(-2, 3, dtype=np.int64)
                cand = start + (k[:, None] + offs[None, :]) % count
                _update_best(best_d2, best_gi, rows, x, anchors, cand)
            rows = all_rows[~near]
            if rows.size:
                cand = np.broadcast_to(np.arange(start, start + count, dtype=np.int64),
                                       (rows.size, count))
                _update_best(best_d2, best_gi, rows, x, anchors, cand)
        else:  # brute force
            cand = np.broadcast_to(np.arange(start, start + count, dtype=np.int64), (n, count))
            _update_best(best_d2, best_gi, all_rows, x, anchors, cand)
    return best_gi


def _idw_accumulate(out, x, anchors, radii, power, winners):
    """Inverse-distance weights, renormalised per point; points missing all
    supports fall back to their Voronoi winner.  Returns the fallback count."""
    d2 = _d2_to(anchors, x, np.broadcast_to(np.arange(anchors.shape[0], dtype=np.int64),
                                            (x.shape[0], anchors.shape[0])))
    r = np.sqrt(d2)
    at_anchor = r < 1e-14
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.maximum(0.0, radii[None, :] - r) / (radii[None, :] * r)
    base[~np.isfinite(base)] = 0.0
    w = base.copy()
    for _ in range(power - 1):
        w = w * base
    # sequential row sums so the normaliser matches the scalar loop bitwise
    total = np.cumsum(w, axis=1)[:, -1]
    fallback = 0
    for i in range(x.shape[0]):
        hit = np.nonzero(at_anchor[i])[0]
        if hit.size:
            out[hit[0]] += 1.0
        elif total[i] == 0.0:
            out[winners[i]] += 1.0
            fallback += 1
        else:
            sup = np.nonzero(w[i])[0]
            out[sup] += w[i, sup] / total[i]
    return fallback


def accumulate_chunk(gi, gf, comp_side, ksqrt, pole_xy, pole_index,
                     rep_start, rep_end, seed, eps, max_steps,
                     anchors0, blk0, blkf0, wkind0, idw_radii0, idw_power0,
                     anchors1, blk1, blkf1, wkind1, idw_radii1, idw_power1,
                     out0, out1):
    """Run a replicate chunk and scatter exit weights into out0/out1.

    Returns (steps_sum, steps_sq_sum, steps_max, idw_fallbacks,
    err_replicate); err_replicate is -1 unless some walk exhausted its step
    budget, in which case the outputs are meaningless.
    """
    x, steps, comp, err = walk_exits_chunk(
        gi, gf, comp_side, ksqrt, pole_xy, pole_index,
        rep_start, rep_end, seed, eps, max_steps)
    if err >= 0:
        return 0, 0, 0, 0, err
    side = comp_side[comp]
    idw_fallbacks = 0
    for s, anchors, blk, blkf, wkind, radii, power, out in (
        (0, anchors0, blk0, blkf0, wkind0, idw_radii0, idw_power0, out0),
        (1, anchors1, blk1, blkf1, wkind1, idw_radii1, idw_power1, out1),
    ):
        mask = side == s
        if not mask.any():
            continue
        xs = x[mask]
        winners = assign_anchors(xs, anchors, blk, blkf)
        win_local = winners.astype(np.intp)
        if wkind == 0:
            np.add.at(out, win_local, 1.0)
        else:
            idw_fallbacks += _idw_accumulate(out, xs, anchors, radii, power, win_local)
    return (int(steps.sum()), int((steps * steps).sum()), int(steps.max()),
            idw_fallbacks, -1)
