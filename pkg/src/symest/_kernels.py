"""Compiled inner loops for likelihood scans, MLE refinement and adaptive search.

Every routine treats one problem at a time and accumulates record terms in
record order, so results are bit-identical however problems are batched.
"""

import math

import numba
import numpy as np

NEG_INF = -np.inf


@numba.njit(cache=True)
def log_prob(d, anti):
    pa = 0.25 * (1.0 - d)
    if pa < 0.0:
        pa = 0.0
    elif pa > 0.5:
        pa = 0.5
    p = pa if anti else 1.0 - pa
    if p <= 0.0:
        return NEG_INF
    return math.log(p)


@numba.njit(cache=True)
def dot(a0, a1, a2, b0, b1, b2):
    return a0 * b0 + a1 * b1 + a2 * b2


@numba.njit(cache=True)
def loglik(refs, anti, x0, x1, x2):
    acc = 0.0
    for k in range(refs.shape[0]):
        acc = acc + log_prob(dot(x0, x1, x2, refs[k, 0], refs[k, 1], refs[k, 2]), anti[k])
    return acc


@numba.njit(cache=True)
def add_record_scores(points, ref, anti, acc):
    """acc[g] += log p(points[g], ref) in place."""
    for g in range(points.shape[0]):
        d = dot(points[g, 0], points[g, 1], points[g, 2], ref[0], ref[1], ref[2])
        acc[g] = acc[g] + log_prob(d, anti)


@numba.njit(cache=True)
def grid_scores(points, refs, anti):
    out = np.zeros(points.shape[0])
    for k in range(refs.shape[0]):
        add_record_scores(points, refs[k], anti[k], out)
    return out


@numba.njit(cache=True)
def first_argmax(row):
    best = 0
    bv = row[0]
    for i in range(1, row.shape[0]):
        if row[i] > bv:
            bv = row[i]
            best = i
    return best


@numba.njit(cache=True)
def _tangent(n0, n1, n2):
    # u = helper x n with helper = x-hat near the z poles, z-hat elsewhere
    if abs(n2) > 0.9:
        u0, u1, u2 = 0.0, -n2, n1
    else:
        u0, u1, u2 = -n1, n0, 0.0
    un = math.sqrt(u0 * u0 + u1 * u1 + u2 * u2)
    u0, u1, u2 = u0 / un, u1 / un, u2 / un
    v0 = n1 * u2 - n2 * u1
    v1 = n2 * u0 - n0 * u2
    v2 = n0 * u1 - n1 * u0
    return u0, u1, u2, v0, v1, v2


@numba.njit(cache=True)
def _move(n0, n1, n2, t0, t1, t2, angle):
    c = math.cos(angle)
    s = math.sin(angle)
    m0 = c * n0 + s * t0
    m1 = c * n1 + s * t1
    m2 = c * n2 + s * t2
    mn = math.sqrt(m0 * m0 + m1 * m1 + m2 * m2)
    return m0 / mn, m1 / mn, m2 / mn


@numba.njit(cache=True)
def refine_one(refs, anti, start, f0, trust, min_step, max_iter):
    """Safeguarded Riemannian Newton ascent of the log-likelihood on the sphere.

    Takes the Newton step in the tangent plane when the projected Hessian is
    negative definite and a gradient step otherwise, capped at ``trust``;
    the step is halved until the value strictly increases. Stops when an
    accepted step is below ``min_step`` or no step down to ``min_step``
    improves. Returns (n0, n1, n2, f).
    """
    n0, n1, n2 = start[0], start[1], start[2]
    f = f0
    if not math.isfinite(f):
        return n0, n1, n2, f
    for _ in range(max_iter):
        g0 = 0.0
        g1 = 0.0
        g2 = 0.0
        h00 = 0.0
        h01 = 0.0
        h02 = 0.0
        h11 = 0.0
        h12 = 0.0
        h22 = 0.0
        for k in range(refs.shape[0]):
            r0, r1, r2 = refs[k, 0], refs[k, 1], refs[k, 2]
            d = dot(n0, n1, n2, r0, r1, r2)
            # d/dn log(alpha + beta d) = beta r / (alpha + beta d)
            if anti[k]:
                w = -1.0 / (1.0 - d)
            else:
                w = 1.0 / (3.0 + d)
            g0 += w * r0
            g1 += w * r1
            g2 += w * r2
            w2 = w * w
            h00 -= w2 * r0 * r0
            h01 -= w2 * r0 * r1
            h02 -= w2 * r0 * r2
            h11 -= w2 * r1 * r1
            h12 -= w2 * r1 * r2
            h22 -= w2 * r2 * r2
        lam = g0 * n0 + g1 * n1 + g2 * n2
        u0, u1, u2, v0, v1, v2 = _tangent(n0, n1, n2)
        gu = g0 * u0 + g1 * u1 + g2 * u2
        gv = g0 * v0 + g1 * v1 + g2 * v2
        gnorm = math.sqrt(gu * gu + gv * gv)
        if not math.isfinite(gnorm) or gnorm == 0.0:
            break
        hu0 = h00 * u0 + h01 * u1 + h02 * u2
        hu1 = h01 * u0 + h11 * u1 + h12 * u2
        hu2 = h02 * u0 + h12 * u1 + h22 * u2
        hv0 = h00 * v0 + h01 * v1 + h02 * v2
        hv1 = h01 * v0 + h11 * v1 + h12 * v2
        hv2 = h02 * v0 + h12 * v1 + h22 * v2
        huu = u0 * hu0 + u1 * hu1 + u2 * hu2 - lam
        huv = u0 * hv0 + u1 * hv1 + u2 * hv2
        hvv = v0 * hv0 + v1 * hv1 + v2 * hv2 - lam
        det = huu * hvv - huv * huv
        if huu < 0.0 and det > 0.0:
            xu = -(hvv * gu - huv * gv) / det
            xv = -(-huv * gu + huu * gv) / det
        else:
            xu = gu
            xv = gv
        length = math.sqrt(xu * xu + xv * xv)
        if not math.isfinite(length) or length == 0.0:
            break
        t0 = (xu * u0 + xv * v0) / length
        t1 = (xu * u1 + xv * v1) / length
        t2 = (xu * u2 + xv * v2) / length
        step = length if length < trust else trust
        accepted = False
        while step >= min_step:
            m0, m1, m2 = _move(n0, n1, n2, t0, t1, t2, step)
            fm = loglik(refs, anti, m0, m1, m2)
            if fm > f:
                n0, n1, n2, f = m0, m1, m2, fm
                accepted = True
                break
            step *= 0.5
        if not accepted or step < min_step * 16.0:
            break
    return n0, n1, n2, f


@numba.njit(cache=True)
def mle_one(refs, anti, points, trust, min_step, max_iter):
    scores = grid_scores(points, refs, anti)
    i = first_argmax(scores)
    return refine_one(refs, anti, points[i], scores[i], trust, min_step, max_iter)


@numba.njit(cache=True)
def refine_batch(refs, anti, starts, f0, trust, min_step, max_iter):
    b = starts.shape[0]
    out = np.empty((b, 3))
    fout = np.empty(b)
    for i in range(b):
        n0, n1, n2, f = refine_one(refs[i], anti[i], starts[i], f0[i], trust, min_step, max_iter)
        out[i, 0] = n0
        out[i, 1] = n1
        out[i, 2] = n2
        fout[i] = f
    return out, fout


@numba.njit(cache=True)
def outcome_tables(points, cands):
    """log p_a and log p_s of every grid point against every candidate, shape (C, M)."""
    c = cands.shape[0]
    m = points.shape[0]
    la = np.empty((c, m))
    ls = np.empty((c, m))
    for j in range(c):
        for g in range(m):
            d = dot(points[g, 0], points[g, 1], points[g, 2], cands[j, 0], cands[j, 1], cands[j, 2])
            la[j, g] = log_prob(d, True)
            ls[j, g] = log_prob(d, False)
    return la, ls


@numba.njit(cache=True)
def objective_value(c0, c1, c2, ea, es):
    return 0.5 + dot(c0, c1, c2, es[0] - ea[0], es[1] - ea[1], es[2] - ea[2]) / 24.0


@numba.njit(cache=True)
def hypothetical_estimate(hist_refs, hist_anti, hist_scores, table_row, cand, anti, points, trust, min_step, max_iter):
    """MLE after appending (anti, cand) to the history; grid scores = hist_scores + table_row."""
    k = hist_refs.shape[0]
    refs = np.empty((k + 1, 3))
    flags = np.empty(k + 1, dtype=np.bool_)
    for i in range(k):
        refs[i, 0] = hist_refs[i, 0]
        refs[i, 1] = hist_refs[i, 1]
        refs[i, 2] = hist_refs[i, 2]
        flags[i] = hist_anti[i]
    refs[k, 0] = cand[0]
    refs[k, 1] = cand[1]
    refs[k, 2] = cand[2]
    flags[k] = anti
    m = points.shape[0]
    best = 0
    bv = hist_scores[0] + table_row[0]
    for g in range(1, m):
        v = hist_scores[g] + table_row[g]
        if v > bv:
            bv = v
            best = g
    return refine_one(refs, flags, points[best], bv, trust, min_step, max_iter)


@numba.njit(cache=True)
def adaptive_objectives(hist_refs, hist_anti, points, cands, table_a, table_s, trust, min_step, max_iter):
    """Expected next-step fidelity for every candidate reference; returns (C,) values."""
    hist_scores = grid_scores(points, hist_refs, hist_anti)
    c = cands.shape[0]
    out = np.empty(c)
    ea = np.empty(3)
    es = np.empty(3)
    for j in range(c):
        a0, a1, a2, _ = hypothetical_estimate(
            hist_refs, hist_anti, hist_scores, table_a[j], cands[j], True, points, trust, min_step, max_iter
        )
        s0, s1, s2, _ = hypothetical_estimate(
            hist_refs, hist_anti, hist_scores, table_s[j], cands[j], False, points, trust, min_step, max_iter
        )
        ea[0], ea[1], ea[2] = a0, a1, a2
        es[0], es[1], es[2] = s0, s1, s2
        out[j] = objective_value(cands[j, 0], cands[j, 1], cands[j, 2], ea, es)
    return out


@numba.njit(cache=True)
def incremental_estimates(refs, anti, points, trust, min_step, max_iter):
    """Estimate after each prefix of the record list; shapes (n, 3) and (n,)."""
    n = refs.shape[0]
    est = np.empty((n, 3))
    vals = np.empty(n)
    scores = np.zeros(points.shape[0])
    for k in range(n):
        add_record_scores(points, refs[k], anti[k], scores)
        i = first_argmax(scores)
        e0, e1, e2, f = refine_one(refs[: k + 1], anti[: k + 1], points[i], scores[i], trust, min_step, max_iter)
        est[k, 0] = e0
        est[k, 1] = e1
        est[k, 2] = e2
        vals[k] = f
    return est, vals
