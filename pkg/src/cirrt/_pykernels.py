"""Pure-Python implementation of the numeric kernels.

Mirrors ``_ckernels.pyx`` function for function; used when the compiled
extension is unavailable or ``CIRRT_PURE_PYTHON`` is set.

Layouts shared by both backends:

* state: 9 floats ``(px, py, pz, vx, vy, vz, ax, ay, az)``
* coefficients: 18 floats, six per axis in descending powers of local time,
  ``(a0, a1, a2, acc0 / 2, vel0, pos0)``
* packed obstacles: ``(n, 7)`` array, see ``geometry.pack_obstacles``
"""

from __future__ import annotations

import math

import numpy as np

MIN_SEPARATION = 1e-9
FEASIBILITY_TOL = 1e-10
CROSSING_TOL = 1e-12
# f below this counts as free fall, where the angular rate bound is singular
MIN_THRUST = 1e-6

OK, INFEASIBLE, COLLIDING = 0, 1, 2


# --------------------------------------------------------------- polynomials


def _polyval(c, t):
    r = 0.0
    for a in c:
        r = r * t + a
    return r


def _polyder(c):
    n = len(c) - 1
    return [c[i] * (n - i) for i in range(n)]


def _polymul(p, q):
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _polysub(p, q):
    n = max(len(p), len(q))
    p = [0.0] * (n - len(p)) + list(p)
    q = [0.0] * (n - len(q)) + list(q)
    return [a - b for a, b in zip(p, q)]


def _bisect(c, lo, hi, flo, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = _polyval(c, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def real_roots(c, a, b, tol):
    """Real roots of ``c`` (descending coefficients) inside ``[a, b]``.

    Roots are isolated exactly: the critical points of ``c`` (found
    recursively) split ``[a, b]`` into monotone pieces, each holding at most
    one root, which is then bracketed and bisected down to ``tol``.
    Tangential (even multiplicity) roots may be missed; callers only use the
    roots as extremum candidates, where such points never matter.
    """
    k = 0
    while k < len(c) - 1 and c[k] == 0.0:
        k += 1
    c = c[k:]
    n = len(c) - 1
    if n < 1:
        return []
    if n == 1:
        r = -c[1] / c[0]
        return [r] if a <= r <= b else []
    if n == 2:
        qa, qb, qc = c
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            return []
        q = -0.5 * (qb + math.copysign(math.sqrt(disc), qb))
        cands = [q / qa, qc / q] if q != 0.0 else [0.0]
        return sorted(r for r in cands if a <= r <= b)
    pts = [a, *real_roots(_polyder(c), a, b, tol), b]
    roots = []
    lo, flo = a, _polyval(c, a)
    if flo == 0.0:
        roots.append(a)
    for hi in pts[1:]:
        fhi = _polyval(c, hi)
        if fhi == 0.0:
            roots.append(hi)
        elif flo != 0.0 and (flo < 0.0) != (fhi < 0.0):
            roots.append(_bisect(c, lo, hi, flo, tol))
        lo, flo = hi, fhi
    return roots


# ----------------------------------------------------------------- primitive


def solve_coeffs(s0, sf, T):
    """Minimum-jerk quintic coefficients joining ``s0`` to ``sf`` over ``T``."""
    T2 = T * T
    T3 = T2 * T
    T5 = T3 * T2
    out = []
    for i in range(3):
        p0, v0, a0 = s0[i], s0[3 + i], s0[6 + i]
        dp = sf[i] - p0 - v0 * T - 0.5 * a0 * T2
        dv = sf[3 + i] - v0 - a0 * T
        da = sf[6 + i] - a0
        alpha = (720.0 * dp - 360.0 * T * dv + 60.0 * T2 * da) / T5
        beta = (-360.0 * T * dp + 168.0 * T2 * dv - 24.0 * T3 * da) / T5
        gamma = (60.0 * T2 * dp - 24.0 * T3 * dv + 3.0 * T2 * T2 * da) / T5
        out += [alpha / 120.0, beta / 24.0, gamma / 6.0, 0.5 * a0, v0, p0]
    return tuple(out)


def jerk_cost(c, T):
    """Closed-form integral of the squared jerk norm over ``[0, T]``."""
    T2 = T * T
    T3 = T2 * T
    total = 0.0
    for i in range(3):
        A = 60.0 * c[6 * i]
        B = 24.0 * c[6 * i + 1]
        C = 6.0 * c[6 * i + 2]
        total += (
            A * A * T3 * T2 / 5.0
            + A * B * T2 * T2 / 2.0
            + (B * B + 2.0 * A * C) * T3 / 3.0
            + B * C * T2
            + C * C * T
        )
    return max(total, 0.0)


_DERIV_FACTORS = (
    (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    (5.0, 4.0, 3.0, 2.0, 1.0),
    (20.0, 12.0, 6.0, 2.0),
    (60.0, 24.0, 6.0),
)


def evaluate(c, tau, order):
    """Position (0), velocity, acceleration or jerk (3) at local time ``tau``."""
    f = _DERIV_FACTORS[order]
    out = []
    for i in range(3):
        r = 0.0
        for k, fk in enumerate(f):
            r = r * tau + fk * c[6 * i + k]
        out.append(r)
    return tuple(out)


def state_at(c, tau):
    return evaluate(c, tau, 0) + evaluate(c, tau, 1) + evaluate(c, tau, 2)


def _thrust_polys(c, gx, gy, gz):
    g = (gx, gy, gz)
    F = [0.0] * 7
    J = [0.0] * 5
    for i in range(3):
        a5, a4, a3, a2 = c[6 * i : 6 * i + 4]
        acc = [20.0 * a5, 12.0 * a4, 6.0 * a3, 2.0 * a2 - g[i]]
        jerk = [60.0 * a5, 24.0 * a4, 6.0 * a3]
        F = [x + y for x, y in zip(F, _polymul(acc, acc))]
        J = [x + y for x, y in zip(J, _polymul(jerk, jerk))]
    return F, J


def input_feasible(c, T, fmin, fmax, wmax, gx, gy, gz):
    """Thrust within ``[fmin, fmax]`` and ``||j|| / f <= wmax`` on ``[0, T]``."""
    F, J = _thrust_polys(c, gx, gy, gz)
    dF = _polyder(F)
    ts = [0.0, T, *real_roots(dF, 0.0, T, FEASIBILITY_TOL)]
    fvals = [_polyval(F, t) for t in ts]
    fsq_min, fsq_max = min(fvals), max(fvals)
    if fsq_min < MIN_THRUST * MIN_THRUST:
        return False
    if fsq_min < fmin * fmin or fsq_max > fmax * fmax:
        return False
    w2 = wmax * wmax
    dJ = _polyder(J)
    jsq_max = max(_polyval(J, t) for t in (0.0, T, *real_roots(dJ, 0.0, T, FEASIBILITY_TOL)))
    if jsq_max <= w2 * fsq_min:
        return True
    # exact maximum of ||j||^2 / f^2: stationary points solve J' F - J F' = 0
    N = _polysub(_polymul(dJ, F), _polymul(J, dF))
    for t in (0.0, T, *real_roots(N, 0.0, T, FEASIBILITY_TOL)):
        if _polyval(J, t) > w2 * _polyval(F, t):
            return False
    return True


# ----------------------------------------------------------------- collision


def _plane_poly(c, nx, ny, nz, off):
    d = [nx * c[k] + ny * c[6 + k] + nz * c[12 + k] for k in range(6)]
    d[5] -= off
    return d


def min_on_interval(c, nx, ny, nz, off, ta, tb):
    """Exact minimum of ``n . x(t) - off`` over ``[ta, tb]`` as ``(value, argmin)``."""
    d = _plane_poly(c, nx, ny, nz, off)
    best_t, best = ta, _polyval(d, ta)
    for t in (tb, *real_roots(_polyder(d), ta, tb, CROSSING_TOL)):
        v = _polyval(d, t)
        if v < best:
            best, best_t = v, t
    return best, best_t


def _position(c, t):
    return (
        ((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5],
        ((((c[6] * t + c[7]) * t + c[8]) * t + c[9]) * t + c[10]) * t + c[11],
        ((((c[12] * t + c[13]) * t + c[14]) * t + c[15]) * t + c[16]) * t + c[17],
    )


def _inside(ob, p):
    if ob[0] == 0.0:
        return ob[1] <= p[0] <= ob[4] and ob[2] <= p[1] <= ob[5] and ob[3] <= p[2] <= ob[6]
    dx, dy, dz = p[0] - ob[1], p[1] - ob[2], p[2] - ob[3]
    return dx * dx + dy * dy + dz * dz <= ob[4] * ob[4]


def _closest(ob, p):
    if ob[0] == 0.0:
        return tuple(min(max(p[i], ob[1 + i]), ob[4 + i]) for i in range(3))
    dx, dy, dz = p[0] - ob[1], p[1] - ob[2], p[2] - ob[3]
    s = ob[4] / math.sqrt(dx * dx + dy * dy + dz * dz)
    return (ob[1] + dx * s, ob[2] + dy * s, ob[3] + dz * s)


def _inside_normal(ob, p):
    """Outward normal of the surface nearest to an interior point."""
    if ob[0] == 0.0:
        best, normal = math.inf, (0.0, 0.0, 1.0)
        for i in range(3):
            e = [0.0, 0.0, 0.0]
            if p[i] - ob[1 + i] < best:
                best = p[i] - ob[1 + i]
                e[i] = -1.0
                normal = tuple(e)
            e = [0.0, 0.0, 0.0]
            if ob[4 + i] - p[i] < best:
                best = ob[4 + i] - p[i]
                e[i] = 1.0
                normal = tuple(e)
        return normal
    dx, dy, dz = p[0] - ob[1], p[1] - ob[2], p[2] - ob[3]
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    if n == 0.0:
        return (0.0, 0.0, 1.0)
    return (dx / n, dy / n, dz / n)


def _section(c, ob, ta, tb, thr, need_time):
    """Earliest hit ``(time, normal)`` of one obstacle on ``[ta, tb]``, or None."""
    xa = _position(c, ta)
    if _inside(ob, xa):
        return ta, _inside_normal(ob, xa)
    tm = 0.5 * (ta + tb)
    xm = _position(c, tm)
    if not need_time:
        xb = _position(c, tb)
        if _inside(ob, xb):
            return tb, _inside_normal(ob, xb)
    if _inside(ob, xm):
        gap = 0.0
    else:
        p = _closest(ob, xm)
        g = (xm[0] - p[0], xm[1] - p[1], xm[2] - p[2])
        gap = math.sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
    if gap < MIN_SEPARATION:
        if need_time:
            hit = _section(c, ob, ta, tm, thr, need_time)
            if hit is not None:
                return hit
        return tm, _inside_normal(ob, xm)
    n = (g[0] / gap, g[1] / gap, g[2] / gap)
    off = n[0] * p[0] + n[1] * p[1] + n[2] * p[2]
    dl = min_on_interval(c, n[0], n[1], n[2], off, ta, tm)[0]
    dr = min_on_interval(c, n[0], n[1], n[2], off, tm, tb)[0]
    if dl > 0.0 and dr > 0.0:
        return None
    if tb - ta < thr:
        return ta, n
    if dl <= 0.0:
        hit = _section(c, ob, ta, tm, thr, need_time)
        if hit is not None:
            return hit
    if dr <= 0.0:
        return _section(c, ob, tm, tb, thr, need_time)
    return None


def first_hit(c, ta, tb, obstacles, thr, need_time):
    """Collision query over local times ``[ta, tb]``.

    Returns ``(hit, time, obstacle_index, nx, ny, nz)``. With ``need_time``
    false the search stops at the first offending obstacle and ``time`` is
    not meaningful.
    """
    best = None
    if tb > ta:
        for i in range(obstacles.shape[0]):
            hit = _section(c, tuple(obstacles[i]), ta, tb, thr, need_time)
            if hit is None:
                continue
            if not need_time:
                return (True, hit[0], i, *hit[1])
            if best is None or hit[0] < best[0]:
                best = (hit[0], i, hit[1])
    if best is None:
        return (False, math.nan, -1, 0.0, 0.0, 0.0)
    return (True, best[0], best[1], *best[2])


def check_edge(s0, sf, T, fmin, fmax, wmax, gx, gy, gz, obstacles, thr, skip_start, skip_end):
    """Generate the primitive and classify it as OK, INFEASIBLE or COLLIDING."""
    c = solve_coeffs(s0, sf, T)
    if not input_feasible(c, T, fmin, fmax, wmax, gx, gy, gz):
        return INFEASIBLE
    if first_hit(c, skip_start, T - skip_end, obstacles, thr, False)[0]:
        return COLLIDING
    return OK


def batch_costs(S0, S1, T):
    """Jerk costs for many boundary-value pairs; arguments broadcast.

    ``S0`` and ``S1`` are ``(..., 9)`` state arrays, ``T`` the durations.
    """
    S0 = np.asarray(S0, dtype=float)
    S1 = np.asarray(S1, dtype=float)
    T = np.asarray(T, dtype=float)[..., None]
    T2 = T * T
    T3 = T2 * T
    T5 = T3 * T2
    p0, v0, a0 = S0[..., 0:3], S0[..., 3:6], S0[..., 6:9]
    dp = S1[..., 0:3] - p0 - v0 * T - 0.5 * a0 * T2
    dv = S1[..., 3:6] - v0 - a0 * T
    da = S1[..., 6:9] - a0
    alpha = (720.0 * dp - 360.0 * T * dv + 60.0 * T2 * da) / T5
    beta = (-360.0 * T * dp + 168.0 * T2 * dv - 24.0 * T3 * da) / T5
    gamma = (60.0 * T2 * dp - 24.0 * T3 * dv + 3.0 * T2 * T2 * da) / T5
    A = 60.0 * (alpha / 120.0)
    B = 24.0 * (beta / 24.0)
    C = 6.0 * (gamma / 6.0)
    per_axis = (
        A * A * T3 * T2 / 5.0
        + A * B * T2 * T2 / 2.0
        + (B * B + 2.0 * A * C) * T3 / 3.0
        + B * C * T2
        + C * C * T
    )
    return np.maximum(per_axis.sum(axis=-1), 0.0)


def costs_to_target(S0, s1, T):
    return batch_costs(S0, s1, T)


def costs_from_source(s0, S1, T):
    return batch_costs(s0, S1, T)


def screen(S0, S1, T, fmin, fmax, wmax, gx, gy, gz):
    """Generate, cost and feasibility-check many primitives in one call."""
    S0, S1, T = np.broadcast_arrays(np.asarray(S0, float), np.asarray(S1, float), np.asarray(T, float)[..., None])
    S0, S1, Tf = S0.reshape(-1, 9), S1.reshape(-1, 9), T[..., 0].reshape(-1)
    cost = np.empty(Tf.shape[0])
    ok = np.empty(Tf.shape[0], dtype=bool)
    for j in range(Tf.shape[0]):
        c = solve_coeffs(S0[j], S1[j], Tf[j])
        cost[j] = jerk_cost(c, Tf[j])
        ok[j] = input_feasible(c, Tf[j], fmin, fmax, wmax, gx, gy, gz)
    return cost, ok
