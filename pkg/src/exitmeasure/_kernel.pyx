# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled walk kernels.

Scalar mirror of ``_fallback.py``: the same Philox4x64-10 streams, the same
IEEE-exact update arithmetic and the same lexicographic nearest-anchor rule,
so the two backends produce bit-identical results.  Hot loops run without
the GIL; the driver parallelises over (pole, replicate-chunk) tasks.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, fabs, floor, sqrt
from libc.stdint cimport int8_t, int64_t, uint64_t

cnp.import_array()

cdef double M_2PI = 6.283185307179586476925286766559
cdef double INV53 = 1.0 / 9007199254740992.0

cdef uint64_t PHILOX_M0 = 0xD2E7470EE14C6C93ULL
cdef uint64_t PHILOX_M1 = 0xCA5A826395121157ULL
cdef uint64_t PHILOX_W0 = 0x9E3779B97F4A7C15ULL
cdef uint64_t PHILOX_W1 = 0xBB67AE8584CAA73BULL
cdef uint64_t MASK32 = 0xFFFFFFFFULL

cdef int64_t BIG_INDEX = <int64_t>1 << 62


cdef inline uint64_t mulhi64(uint64_t a, uint64_t b) noexcept nogil:
    cdef uint64_t ah = a >> 32, al = a & MASK32
    cdef uint64_t bh = b >> 32, bl = b & MASK32
    cdef uint64_t t = ((al * bl) >> 32) + ((al * bh) & MASK32) + ((ah * bl) & MASK32)
    return ah * bh + ((al * bh) >> 32) + ((ah * bl) >> 32) + (t >> 32)


cdef inline void philox_block(uint64_t k0, uint64_t k1,
                              uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                              uint64_t* out) noexcept nogil:
    cdef uint64_t hi0, lo0, hi1, lo1, n0, n1, n2, n3
    cdef int r
    for r in range(10):
        hi0 = mulhi64(PHILOX_M0, c0)
        lo0 = PHILOX_M0 * c0
        hi1 = mulhi64(PHILOX_M1, c2)
        lo1 = PHILOX_M1 * c2
        n0 = hi1 ^ c1 ^ k0
        n1 = lo1
        n2 = hi0 ^ c3 ^ k1
        n3 = lo0
        c0 = n0; c1 = n1; c2 = n2; c3 = n3
        k0 = k0 + PHILOX_W0
        k1 = k1 + PHILOX_W1
    out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3


cdef inline void sample_direction(int d, uint64_t seed, uint64_t* draw,
                                  uint64_t rep, uint64_t pole, double* u) noexcept nogil:
    cdef uint64_t w[4]
    cdef double u0, u1, v1, v2, s, rs, f
    while True:
        philox_block(seed, 0ULL, draw[0], 0ULL, rep, pole, w)
        draw[0] = draw[0] + 1ULL
        u0 = <double>(w[0] >> 11) * INV53
        u1 = <double>(w[1] >> 11) * INV53
        v1 = 2.0 * u0 - 1.0
        v2 = 2.0 * u1 - 1.0
        s = v1 * v1 + v2 * v2
        if d == 2:
            if s <= 1.0 and s > 0.0:
                rs = sqrt(s)
                u[0] = v1 / rs
                u[1] = v2 / rs
                return
        else:
            if s < 1.0:
                f = 2.0 * sqrt(1.0 - s)
                u[0] = v1 * f
                u[1] = v2 * f
                u[2] = 1.0 - 2.0 * s
                return


# ---------------------------------------------------------------------------
# geometry: gi = [d, outer_kind, n_holes],
# gf = [outer_center..., outer_param, (hole_center..., hole_radius)*]


cdef inline double outer_signed_s(const int64_t* gi, const double* gf,
                                  const double* x) noexcept nogil:
    cdef int d = <int>gi[0]
    cdef double dx0, dx1, dx2, t, q0, q1, q2, m, h
    if gi[1] == 0:
        dx0 = x[0] - gf[0]
        dx1 = x[1] - gf[1]
        t = dx0 * dx0 + dx1 * dx1
        if d == 3:
            dx2 = x[2] - gf[2]
            t = t + dx2 * dx2
        return gf[d] - sqrt(t)
    h = gf[d]
    q0 = fabs(x[0] - gf[0]) - h
    q1 = fabs(x[1] - gf[1]) - h
    m = q0
    if q1 > m:
        m = q1
    t = (q0 if q0 > 0.0 else 0.0) * (q0 if q0 > 0.0 else 0.0) \
        + (q1 if q1 > 0.0 else 0.0) * (q1 if q1 > 0.0 else 0.0)
    if d == 3:
        q2 = fabs(x[2] - gf[2]) - h
        if q2 > m:
            m = q2
        t = t + (q2 if q2 > 0.0 else 0.0) * (q2 if q2 > 0.0 else 0.0)
    if m <= 0.0:
        return -m
    return -sqrt(t)


cdef inline double hole_dist_s(const int64_t* gi, const double* gf,
                               const double* x, int hole) noexcept nogil:
    cdef int d = <int>gi[0]
    cdef int off = d + 1 + hole * (d + 1)
    cdef double dx0 = x[0] - gf[off]
    cdef double dx1 = x[1] - gf[off + 1]
    cdef double t = dx0 * dx0 + dx1 * dx1
    cdef double dx2
    if d == 3:
        dx2 = x[2] - gf[off + 2]
        t = t + dx2 * dx2
    return sqrt(t) - gf[off + d]


cdef inline double signed_dist_s(const int64_t* gi, const double* gf,
                                 const double* x) noexcept nogil:
    cdef double sd = outer_signed_s(gi, gf, x)
    cdef double hd
    cdef int hole
    for hole in range(<int>gi[2]):
        hd = hole_dist_s(gi, gf, x, hole)
        if hd < sd:
            sd = hd
    return sd


cdef inline int owner_component(const int64_t* gi, const double* gf,
                                const double* x) noexcept nogil:
    cdef double best = fabs(outer_signed_s(gi, gf, x))
    cdef int comp = 0
    cdef double dd
    cdef int hole
    for hole in range(<int>gi[2]):
        dd = fabs(hole_dist_s(gi, gf, x, hole))
        if dd < best:
            best = dd
            comp = hole + 1
    return comp


# ---------------------------------------------------------------------------
# one walk


cdef inline int run_walk(const int64_t* gi, const double* gf,
                         const double* ksqrt, int d,
                         const double* pole_xy, uint64_t pole, uint64_t rep,
                         uint64_t seed, double eps, int64_t max_steps,
                         double* x, int64_t* steps_out) noexcept nogil:
    """Returns 0 on shell arrival (x holds the exit), 1 on budget overrun."""
    cdef double u[3]
    cdef double y0, y1, y2, sd
    cdef uint64_t draw = 0
    cdef int64_t steps = 0
    cdef int j
    for j in range(d):
        x[j] = pole_xy[j]
    while True:
        sd = signed_dist_s(gi, gf, x)
        if sd <= eps:
            steps_out[0] = steps
            return 0
        if steps >= max_steps:
            steps_out[0] = steps
            return 1
        sample_direction(d, seed, &draw, rep, pole, u)
        if d == 2:
            y0 = ksqrt[0] * u[0] + ksqrt[1] * u[1]
            y1 = ksqrt[2] * u[0] + ksqrt[3] * u[1]
            x[0] = x[0] + sd * y0
            x[1] = x[1] + sd * y1
        else:
            y0 = ksqrt[0] * u[0] + ksqrt[1] * u[1] + ksqrt[2] * u[2]
            y1 = ksqrt[3] * u[0] + ksqrt[4] * u[1] + ksqrt[5] * u[2]
            y2 = ksqrt[6] * u[0] + ksqrt[7] * u[1] + ksqrt[8] * u[2]
            x[0] = x[0] + sd * y0
            x[1] = x[1] + sd * y1
            x[2] = x[2] + sd * y2
        steps = steps + 1


# ---------------------------------------------------------------------------
# nearest-anchor assignment (see _fallback.assign_anchors for the contract)


cdef inline void lex_update(const double* x, int d,
                            const double[:, ::1] anchors, int64_t g,
                            double* best_d2, int64_t* best_gi) noexcept nogil:
    cdef double dx0 = x[0] - anchors[g, 0]
    cdef double dx1 = x[1] - anchors[g, 1]
    cdef double t = dx0 * dx0 + dx1 * dx1
    cdef double dx2
    if d == 3:
        dx2 = x[2] - anchors[g, 2]
        t = t + dx2 * dx2
    if t < best_d2[0] or (t == best_d2[0] and g < best_gi[0]):
        best_d2[0] = t
        best_gi[0] = g


cdef inline double square_signed_s(double cx, double cy, double h,
                                   const double* x) noexcept nogil:
    cdef double q0 = fabs(x[0] - cx) - h
    cdef double q1 = fabs(x[1] - cy) - h
    cdef double m = q0
    cdef double t
    if q1 > m:
        m = q1
    if m <= 0.0:
        return -m
    t = (q0 if q0 > 0.0 else 0.0) * (q0 if q0 > 0.0 else 0.0) \
        + (q1 if q1 > 0.0 else 0.0) * (q1 if q1 > 0.0 else 0.0)
    return -sqrt(t)


cdef inline double clamp(double v, double lo, double hi) noexcept nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef int64_t assign_anchor_s(const double* x, int d,
                             const double[:, ::1] anchors,
                             const int64_t[:, ::1] blk,
                             const double[:, ::1] blkf) noexcept nogil:
    cdef double best_d2 = 1e308
    cdef int64_t best_gi = BIG_INDEX
    cdef int b, off
    cdef int64_t kind, start, count, k, idx, g
    cdef double cx, cy, radius, px, py, ang, t, spacing, s, cpx, cpy
    cdef double dr, dt, dl, db, m
    cdef int edge
    for b in range(blk.shape[0]):
        kind = blk[b, 0]
        start = blk[b, 1]
        count = blk[b, 2]
        cx = blkf[b, 0]
        cy = blkf[b, 1]
        radius = blkf[b, 3]
        if kind == 1:  # circle
            px = x[0] - cx
            py = x[1] - cy
            ang = atan2(py, px)
            t = ang * (<double>count / M_2PI)
            k = <int64_t>floor(t + 0.5)
            k = k % count
            if k < 0:
                k += count
            for off in range(-2, 3):
                idx = (k + off) % count
                if idx < 0:
                    idx += count
                lex_update(x, d, anchors, start + idx, &best_d2, &best_gi)
        elif kind == 2:  # square
            spacing = 8.0 * radius / <double>count
            if fabs(square_signed_s(cx, cy, radius, x)) <= 0.125 * spacing:
                px = x[0] - cx
                py = x[1] - cy
                dr = fabs(px - radius)
                dt = fabs(py - radius)
                dl = fabs(px + radius)
                db = fabs(py + radius)
                edge = 0
                m = dr
                if dt < m:
                    m = dt
                    edge = 1
                if dl < m:
                    m = dl
                    edge = 2
                if db < m:
                    m = db
                    edge = 3
                cpx = clamp(px, -radius, radius)
                cpy = clamp(py, -radius, radius)
                if edge == 0:
                    s = cpy + radius
                elif edge == 1:
                    s = 2.0 * radius + (radius - cpx)
                elif edge == 2:
                    s = 4.0 * radius + (radius - cpy)
                else:
                    s = 6.0 * radius + (cpx + radius)
                t = s * (<double>count / (8.0 * radius))
                k = <int64_t>floor(t + 0.5)
                k = k % count
                if k < 0:
                    k += count
                for off in range(-2, 3):
                    idx = (k + off) % count
                    if idx < 0:
                        idx += count
                    lex_update(x, d, anchors, start + idx, &best_d2, &best_gi)
            else:
                for idx in range(count):
                    lex_update(x, d, anchors, start + idx, &best_d2, &best_gi)
        else:  # brute force
            for idx in range(count):
                lex_update(x, d, anchors, start + idx, &best_d2, &best_gi)
    return best_gi


cdef int64_t idw_accumulate_s(const double* x, int d,
                              const double[:, ::1] anchors,
                              const double[::1] radii, int power,
                              int64_t winner, double[::1] out) noexcept nogil:
    """Scatter IDW weights for one exit; returns 1 on Voronoi fallback."""
    cdef int64_t m = anchors.shape[0]
    cdef int64_t i
    cdef int q
    cdef double dx0, dx1, dx2, d2, r, base, w, total
    total = 0.0
    for i in range(m):
        dx0 = x[0] - anchors[i, 0]
        dx1 = x[1] - anchors[i, 1]
        d2 = dx0 * dx0 + dx1 * dx1
        if d == 3:
            dx2 = x[2] - anchors[i, 2]
            d2 = d2 + dx2 * dx2
        r = sqrt(d2)
        if r < 1e-14:
            out[i] += 1.0
            return 0
        base = radii[i] - r
        if base > 0.0:
            base = base / (radii[i] * r)
            w = base
            for q in range(power - 1):
                w = w * base
            total = total + w
    if total == 0.0:
        out[winner] += 1.0
        return 1
    for i in range(m):
        dx0 = x[0] - anchors[i, 0]
        dx1 = x[1] - anchors[i, 1]
        d2 = dx0 * dx0 + dx1 * dx1
        if d == 3:
            dx2 = x[2] - anchors[i, 2]
            d2 = d2 + dx2 * dx2
        r = sqrt(d2)
        base = radii[i] - r
        if base > 0.0:
            base = base / (radii[i] * r)
            w = base
            for q in range(power - 1):
                w = w * base
            out[i] += w / total
    return 0


# ---------------------------------------------------------------------------
# chunk entry points (same contracts as _fallback)


def walk_exits_chunk(int64_t[::1] gi, double[::1] gf, int8_t[::1] comp_side,
                     double[:, ::1] ksqrt, double[::1] pole_xy,
                     pole_index, rep_start, rep_end, seed,
                     double eps, max_steps):
    cdef int d = <int>gi[0]
    cdef int64_t rep0_i = <int64_t>rep_start
    cdef int64_t n = <int64_t>rep_end - rep0_i
    cdef uint64_t pole_u = <uint64_t>pole_index
    cdef uint64_t seed_u = <uint64_t>seed
    cdef uint64_t rep0 = <uint64_t>rep0_i
    cdef int64_t cap = <int64_t>max_steps
    x_arr = np.empty((n, d), dtype=np.float64)
    steps_arr = np.empty(n, dtype=np.int64)
    comp_arr = np.empty(n, dtype=np.int64)
    cdef double[:, ::1] x = x_arr
    cdef int64_t[::1] steps = steps_arr
    cdef int64_t[::1] comp = comp_arr
    cdef int64_t i, err = -1
    cdef int rc
    cdef double xw[3]
    cdef int64_t st
    cdef int j
    with nogil:
        for i in range(n):
            rc = run_walk(&gi[0], &gf[0], &ksqrt[0, 0], d, &pole_xy[0],
                          pole_u, rep0 + <uint64_t>i, seed_u, eps, cap, xw, &st)
            for j in range(d):
                x[i, j] = xw[j]
            steps[i] = st
            if rc != 0:
                err = rep0_i + i
                break
            comp[i] = owner_component(&gi[0], &gf[0], xw)
    if err >= 0:
        comp_arr[:] = 0
    return x_arr, steps_arr, comp_arr, int(err)


def accumulate_chunk(int64_t[::1] gi, double[::1] gf, int8_t[::1] comp_side,
                     double[:, ::1] ksqrt, double[::1] pole_xy,
                     pole_index, rep_start, rep_end, seed,
                     double eps, max_steps,
                     double[:, ::1] anchors0, int64_t[:, ::1] blk0, double[:, ::1] blkf0,
                     int wkind0, double[::1] idw_radii0, int idw_power0,
                     double[:, ::1] anchors1, int64_t[:, ::1] blk1, double[:, ::1] blkf1,
                     int wkind1, double[::1] idw_radii1, int idw_power1,
                     double[::1] out0, double[::1] out1):
    cdef int d = <int>gi[0]
    cdef int64_t rep0_i = <int64_t>rep_start
    cdef int64_t n = <int64_t>rep_end - rep0_i
    cdef uint64_t pole_u = <uint64_t>pole_index
    cdef uint64_t seed_u = <uint64_t>seed
    cdef uint64_t rep0 = <uint64_t>rep0_i
    cdef int64_t cap = <int64_t>max_steps
    cdef int64_t i, winner, err = -1
    cdef int64_t steps_sum = 0, steps_sq = 0, steps_max = 0, idw_fb = 0
    cdef int rc, comp, side
    cdef double xw[3]
    cdef int64_t st
    with nogil:
        for i in range(n):
            rc = run_walk(&gi[0], &gf[0], &ksqrt[0, 0], d, &pole_xy[0],
                          pole_u, rep0 + <uint64_t>i, seed_u, eps, cap, xw, &st)
            if rc != 0:
                err = rep0_i + i
                break
            steps_sum += st
            steps_sq += st * st
            if st > steps_max:
                steps_max = st
            comp = owner_component(&gi[0], &gf[0], xw)
            side = <int>comp_side[comp]
            if side == 0:
                winner = assign_anchor_s(xw, d, anchors0, blk0, blkf0)
                if wkind0 == 0:
                    out0[winner] += 1.0
                else:
                    idw_fb += idw_accumulate_s(xw, d, anchors0, idw_radii0,
                                               idw_power0, winner, out0)
            else:
                winner = assign_anchor_s(xw, d, anchors1, blk1, blkf1)
                if wkind1 == 0:
                    out1[winner] += 1.0
                else:
                    idw_fb += idw_accumulate_s(xw, d, anchors1, idw_radii1,
                                               idw_power1, winner, out1)
    if err >= 0:
        return 0, 0, 0, 0, int(err)
    return int(steps_sum), int(steps_sq), int(steps_max), int(idw_fb), -1
