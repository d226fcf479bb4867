# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels; the API mirrors ``_pykernels`` exactly."""

from libc.math cimport sqrt, copysign, NAN, INFINITY

import numpy as np

cdef double MIN_SEPARATION = 1e-9
cdef double FEASIBILITY_TOL = 1e-10
cdef double CROSSING_TOL = 1e-12
cdef double MIN_THRUST = 1e-6

OK, INFEASIBLE, COLLIDING = 0, 1, 2

# polynomial degree ceiling: the angular-rate stationarity polynomial is degree 9
cdef enum:
    MAXC = 10
    MAXROOTS = 16


# --------------------------------------------------------------- polynomials


cdef inline double _polyval(const double* c, int n, double t) noexcept nogil:
    # n is the number of coefficients, descending powers
    cdef double r = 0.0
    cdef int i
    for i in range(n):
        r = r * t + c[i]
    return r


cdef double _bisect(const double* c, int n, double lo, double hi, double flo, double tol) noexcept nogil:
    cdef double mid, fm
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = _polyval(c, n, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo = mid
            flo = fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef int _real_roots(const double* cin, int n, double a, double b, double tol, double* out) noexcept nogil:
    """Roots of the polynomial with ``n`` coefficients in [a, b]; returns the count."""
    cdef double c[MAXC]
    cdef double d[MAXC]
    cdef double crit[MAXROOTS]
    cdef double pts[MAXROOTS + 2]
    cdef int k = 0, i, deg, ncrit, npts, nroots = 0
    cdef double r, qa, qb, qc, disc, q, r1, r2, lo, hi, flo, fhi
    while k < n - 1 and cin[k] == 0.0:
        k += 1
    n -= k
    for i in range(n):
        c[i] = cin[k + i]
    deg = n - 1
    if deg < 1:
        return 0
    if deg == 1:
        r = -c[1] / c[0]
        if a <= r <= b:
            out[0] = r
            return 1
        return 0
    if deg == 2:
        qa = c[0]
        qb = c[1]
        qc = c[2]
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            return 0
        q = -0.5 * (qb + copysign(sqrt(disc), qb))
        if q == 0.0:
            if a <= 0.0 <= b:
                out[0] = 0.0
                return 1
            return 0
        r1 = q / qa
        r2 = qc / q
        if r1 > r2:
            r1, r2 = r2, r1
        if a <= r1 <= b:
            out[nroots] = r1
            nroots += 1
        if a <= r2 <= b:
            out[nroots] = r2
            nroots += 1
        return nroots
    for i in range(deg):
        d[i] = c[i] * (deg - i)
    ncrit = _real_roots(d, deg, a, b, tol, crit)
    pts[0] = a
    for i in range(ncrit):
        pts[i + 1] = crit[i]
    pts[ncrit + 1] = b
    npts = ncrit + 2
    lo = a
    flo = _polyval(c, n, a)
    if flo == 0.0:
        out[nroots] = a
        nroots += 1
    for i in range(1, npts):
        hi = pts[i]
        fhi = _polyval(c, n, hi)
        if fhi == 0.0:
            out[nroots] = hi
            nroots += 1
        elif flo != 0.0 and (flo < 0.0) != (fhi < 0.0):
            out[nroots] = _bisect(c, n, lo, hi, flo, tol)
            nroots += 1
        lo = hi
        flo = fhi
    return nroots


def real_roots(c, double a, double b, double tol):
    cdef double buf[MAXC]
    cdef double out[MAXROOTS]
    cdef int n = len(c), i, m
    if n > MAXC:
        raise ValueError("polynomial degree too high")
    for i in range(n):
        buf[i] = c[i]
    m = _real_roots(buf, n, a, b, tol, out)
    return [out[i] for i in range(m)]


# ----------------------------------------------------------------- primitive


cdef inline void _load(object seq, double* dst, int n) except *:
    cdef int i
    for i in range(n):
        dst[i] = seq[i]


cdef void _solve(const double* s0, const double* sf, double T, double* c) noexcept nogil:
    cdef double T2 = T * T
    cdef double T3 = T2 * T
    cdef double T5 = T3 * T2
    cdef double p0, v0, a0, dp, dv, da, alpha, beta, gamma
    cdef int i
    for i in range(3):
        p0 = s0[i]
        v0 = s0[3 + i]
        a0 = s0[6 + i]
        dp = sf[i] - p0 - v0 * T - 0.5 * a0 * T2
        dv = sf[3 + i] - v0 - a0 * T
        da = sf[6 + i] - a0
        alpha = (720.0 * dp - 360.0 * T * dv + 60.0 * T2 * da) / T5
        beta = (-360.0 * T * dp + 168.0 * T2 * dv - 24.0 * T3 * da) / T5
        gamma = (60.0 * T2 * dp - 24.0 * T3 * dv + 3.0 * T2 * T2 * da) / T5
        c[6 * i] = alpha / 120.0
        c[6 * i + 1] = beta / 24.0
        c[6 * i + 2] = gamma / 6.0
        c[6 * i + 3] = 0.5 * a0
        c[6 * i + 4] = v0
        c[6 * i + 5] = p0


cdef double _cost(const double* c, double T) noexcept nogil:
    cdef double T2 = T * T
    cdef double T3 = T2 * T
    cdef double total = 0.0, A, B, C
    cdef int i
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
    return total if total > 0.0 else 0.0


def solve_coeffs(s0, sf, double T):
    cdef double a[9]
    cdef double b[9]
    cdef double c[18]
    _load(s0, a, 9)
    _load(sf, b, 9)
    _solve(a, b, T, c)
    return tuple([c[i] for i in range(18)])


def jerk_cost(coeffs, double T):
    cdef double c[18]
    _load(coeffs, c, 18)
    return _cost(c, T)


cdef double[4][6] _FACT = [
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [5.0, 4.0, 3.0, 2.0, 1.0, 0.0],
    [20.0, 12.0, 6.0, 2.0, 0.0, 0.0],
    [60.0, 24.0, 6.0, 0.0, 0.0, 0.0],
]


cdef inline double _eval_axis(const double* c, int axis, double tau, int order) noexcept nogil:
    cdef double r = 0.0
    cdef int k
    for k in range(6 - order):
        r = r * tau + _FACT[order][k] * c[6 * axis + k]
    return r


def evaluate(coeffs, double tau, int order):
    cdef double c[18]
    if order < 0 or order > 3:
        raise ValueError("order must be 0..3")
    _load(coeffs, c, 18)
    return (_eval_axis(c, 0, tau, order), _eval_axis(c, 1, tau, order), _eval_axis(c, 2, tau, order))


def state_at(coeffs, double tau):
    cdef double c[18]
    cdef int o, i
    _load(coeffs, c, 18)
    return tuple([_eval_axis(c, i, tau, o) for o in range(3) for i in range(3)])


cdef inline void _sq_add(const double* p, int n, double* acc) noexcept nogil:
    # acc += p * p, for p with n coefficients; acc has 2n - 1
    cdef int i, j
    for i in range(n):
        for j in range(n):
            acc[i + j] += p[i] * p[j]


cdef bint _feasible(const double* c, double T, double fmin, double fmax, double wmax,
                    const double* g) noexcept nogil:
    cdef double F[7]
    cdef double J[5]
    cdef double dF[6]
    cdef double dJ[4]
    cdef double N[10]
    cdef double acc[4]
    cdef double jerk[3]
    cdef double roots[MAXROOTS]
    cdef int i, j, m
    cdef double v, fsq_min, fsq_max, jsq_max, w2, t
    for i in range(7):
        F[i] = 0.0
    for i in range(5):
        J[i] = 0.0
    for i in range(3):
        acc[0] = 20.0 * c[6 * i]
        acc[1] = 12.0 * c[6 * i + 1]
        acc[2] = 6.0 * c[6 * i + 2]
        acc[3] = 2.0 * c[6 * i + 3] - g[i]
        jerk[0] = 60.0 * c[6 * i]
        jerk[1] = 24.0 * c[6 * i + 1]
        jerk[2] = 6.0 * c[6 * i + 2]
        _sq_add(acc, 4, F)
        _sq_add(jerk, 3, J)
    for i in range(6):
        dF[i] = F[i] * (6 - i)
    fsq_min = _polyval(F, 7, 0.0)
    fsq_max = fsq_min
    v = _polyval(F, 7, T)
    fsq_min = min(fsq_min, v)
    fsq_max = max(fsq_max, v)
    m = _real_roots(dF, 6, 0.0, T, FEASIBILITY_TOL, roots)
    for i in range(m):
        v = _polyval(F, 7, roots[i])
        fsq_min = min(fsq_min, v)
        fsq_max = max(fsq_max, v)
    if fsq_min < MIN_THRUST * MIN_THRUST:
        return False
    if fsq_min < fmin * fmin or fsq_max > fmax * fmax:
        return False
    w2 = wmax * wmax
    for i in range(4):
        dJ[i] = J[i] * (4 - i)
    jsq_max = max(_polyval(J, 5, 0.0), _polyval(J, 5, T))
    m = _real_roots(dJ, 4, 0.0, T, FEASIBILITY_TOL, roots)
    for i in range(m):
        jsq_max = max(jsq_max, _polyval(J, 5, roots[i]))
    if jsq_max <= w2 * fsq_min:
        return True
    # exact maximum of ||j||^2 / f^2: stationary points solve J' F - J F' = 0
    for i in range(10):
        N[i] = 0.0
    for i in range(4):
        for j in range(7):
            N[i + j] += dJ[i] * F[j]
    for i in range(5):
        for j in range(6):
            N[i + j] -= J[i] * dF[j]
    if _polyval(J, 5, 0.0) > w2 * _polyval(F, 7, 0.0):
        return False
    if _polyval(J, 5, T) > w2 * _polyval(F, 7, T):
        return False
    m = _real_roots(N, 10, 0.0, T, FEASIBILITY_TOL, roots)
    for i in range(m):
        t = roots[i]
        if _polyval(J, 5, t) > w2 * _polyval(F, 7, t):
            return False
    return True


def input_feasible(coeffs, double T, double fmin, double fmax, double wmax,
                   double gx, double gy, double gz):
    cdef double c[18]
    cdef double g[3]
    _load(coeffs, c, 18)
    g[0] = gx
    g[1] = gy
    g[2] = gz
    return _feasible(c, T, fmin, fmax, wmax, g)


# ----------------------------------------------------------------- collision


cdef void _minimum(const double* c, double nx, double ny, double nz, double off,
                   double ta, double tb, double* out_min, double* out_t) noexcept nogil:
    cdef double d[6]
    cdef double dd[5]
    cdef double roots[MAXROOTS]
    cdef int k, m
    cdef double best, best_t, v
    for k in range(6):
        d[k] = nx * c[k] + ny * c[6 + k] + nz * c[12 + k]
    d[5] -= off
    for k in range(5):
        dd[k] = d[k] * (5 - k)
    best_t = ta
    best = _polyval(d, 6, ta)
    v = _polyval(d, 6, tb)
    if v < best:
        best = v
        best_t = tb
    m = _real_roots(dd, 5, ta, tb, CROSSING_TOL, roots)
    for k in range(m):
        v = _polyval(d, 6, roots[k])
        if v < best:
            best = v
            best_t = roots[k]
    out_min[0] = best
    out_t[0] = best_t


def min_on_interval(coeffs, double nx, double ny, double nz, double off, double ta, double tb):
    cdef double c[18]
    cdef double mn, mt
    _load(coeffs, c, 18)
    _minimum(c, nx, ny, nz, off, ta, tb, &mn, &mt)
    return mn, mt


cdef inline void _position(const double* c, double t, double* p) noexcept nogil:
    p[0] = ((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]
    p[1] = ((((c[6] * t + c[7]) * t + c[8]) * t + c[9]) * t + c[10]) * t + c[11]
    p[2] = ((((c[12] * t + c[13]) * t + c[14]) * t + c[15]) * t + c[16]) * t + c[17]


cdef inline bint _inside(const double* ob, const double* p) noexcept nogil:
    cdef double dx, dy, dz
    if ob[0] == 0.0:
        return (ob[1] <= p[0] <= ob[4]) and (ob[2] <= p[1] <= ob[5]) and (ob[3] <= p[2] <= ob[6])
    dx = p[0] - ob[1]
    dy = p[1] - ob[2]
    dz = p[2] - ob[3]
    return dx * dx + dy * dy + dz * dz <= ob[4] * ob[4]


cdef inline void _closest(const double* ob, const double* p, double* q) noexcept nogil:
    cdef double dx, dy, dz, s
    cdef int i
    if ob[0] == 0.0:
        for i in range(3):
            q[i] = min(max(p[i], ob[1 + i]), ob[4 + i])
        return
    dx = p[0] - ob[1]
    dy = p[1] - ob[2]
    dz = p[2] - ob[3]
    s = ob[4] / sqrt(dx * dx + dy * dy + dz * dz)
    q[0] = ob[1] + dx * s
    q[1] = ob[2] + dy * s
    q[2] = ob[3] + dz * s


cdef void _inside_normal(const double* ob, const double* p, double* n) noexcept nogil:
    cdef double best = INFINITY, dx, dy, dz, r
    cdef int i
    n[0] = 0.0
    n[1] = 0.0
    n[2] = 1.0
    if ob[0] == 0.0:
        for i in range(3):
            if p[i] - ob[1 + i] < best:
                best = p[i] - ob[1 + i]
                n[0] = 0.0
                n[1] = 0.0
                n[2] = 0.0
                n[i] = -1.0
            if ob[4 + i] - p[i] < best:
                best = ob[4 + i] - p[i]
                n[0] = 0.0
                n[1] = 0.0
                n[2] = 0.0
                n[i] = 1.0
        return
    dx = p[0] - ob[1]
    dy = p[1] - ob[2]
    dz = p[2] - ob[3]
    r = sqrt(dx * dx + dy * dy + dz * dz)
    if r > 0.0:
        n[0] = dx / r
        n[1] = dy / r
        n[2] = dz / r


cdef bint _section(const double* c, const double* ob, double ta, double tb, double thr,
                   bint need_time, double* t_hit, double* n_hit) noexcept nogil:
    """Earliest hit of one obstacle on [ta, tb]; fills t_hit/n_hit when true."""
    cdef double xa[3]
    cdef double xm[3]
    cdef double xb[3]
    cdef double p[3]
    cdef double g[3]
    cdef double n[3]
    cdef double tm, gap, off, dl, dr, unused
    _position(c, ta, xa)
    if _inside(ob, xa):
        t_hit[0] = ta
        _inside_normal(ob, xa, n_hit)
        return True
    tm = 0.5 * (ta + tb)
    _position(c, tm, xm)
    if not need_time:
        _position(c, tb, xb)
        if _inside(ob, xb):
            t_hit[0] = tb
            _inside_normal(ob, xb, n_hit)
            return True
    if _inside(ob, xm):
        gap = 0.0
    else:
        _closest(ob, xm, p)
        g[0] = xm[0] - p[0]
        g[1] = xm[1] - p[1]
        g[2] = xm[2] - p[2]
        gap = sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
    if gap < MIN_SEPARATION:
        if need_time and _section(c, ob, ta, tm, thr, need_time, t_hit, n_hit):
            return True
        t_hit[0] = tm
        _inside_normal(ob, xm, n_hit)
        return True
    n[0] = g[0] / gap
    n[1] = g[1] / gap
    n[2] = g[2] / gap
    off = n[0] * p[0] + n[1] * p[1] + n[2] * p[2]
    _minimum(c, n[0], n[1], n[2], off, ta, tm, &dl, &unused)
    _minimum(c, n[0], n[1], n[2], off, tm, tb, &dr, &unused)
    if dl > 0.0 and dr > 0.0:
        return False
    if tb - ta < thr:
        t_hit[0] = ta
        n_hit[0] = n[0]
        n_hit[1] = n[1]
        n_hit[2] = n[2]
        return True
    if dl <= 0.0 and _section(c, ob, ta, tm, thr, need_time, t_hit, n_hit):
        return True
    if dr <= 0.0:
        return _section(c, ob, tm, tb, thr, need_time, t_hit, n_hit)
    return False


cdef int _first_hit(const double* c, double ta, double tb, const double[:, ::1] obs, double thr,
                    bint need_time, double* t_out, double* n_out) noexcept nogil:
    cdef int i, best = -1
    cdef double t, best_t = INFINITY
    cdef double n[3]
    if not tb > ta:
        return -1
    for i in range(obs.shape[0]):
        if not _section(c, &obs[i, 0], ta, tb, thr, need_time, &t, n):
            continue
        if best < 0 or t < best_t:
            best = i
            best_t = t
            n_out[0] = n[0]
            n_out[1] = n[1]
            n_out[2] = n[2]
            if not need_time:
                break
    t_out[0] = best_t
    return best


def first_hit(coeffs, double ta, double tb, const double[:, ::1] obstacles, double thr, bint need_time):
    cdef double c[18]
    cdef double n[3]
    cdef double t
    cdef int idx
    _load(coeffs, c, 18)
    idx = _first_hit(c, ta, tb, obstacles, thr, need_time, &t, n)
    if idx < 0:
        return (False, NAN, -1, 0.0, 0.0, 0.0)
    return (True, t, idx, n[0], n[1], n[2])


def check_edge(s0, sf, double T, double fmin, double fmax, double wmax,
               double gx, double gy, double gz, const double[:, ::1] obstacles,
               double thr, double skip_start, double skip_end):
    cdef double a[9]
    cdef double b[9]
    cdef double c[18]
    cdef double g[3]
    cdef double n[3]
    cdef double t
    _load(s0, a, 9)
    _load(sf, b, 9)
    _solve(a, b, T, c)
    g[0] = gx
    g[1] = gy
    g[2] = gz
    if not _feasible(c, T, fmin, fmax, wmax, g):
        return 1
    if _first_hit(c, skip_start, T - skip_end, obstacles, thr, False, &t, n) >= 0:
        return 2
    return 0


cdef void _batch(const double[:, ::1] S0, const double[:, ::1] S1, const double[::1] T,
                 bint single_src, bint single_dst, double[::1] out) noexcept nogil:
    cdef Py_ssize_t j, m = T.shape[0]
    cdef double c[18]
    for j in range(m):
        _solve(&S0[0 if single_src else j, 0], &S1[0 if single_dst else j, 0], T[j], c)
        out[j] = _cost(c, T[j])


def costs_to_target(S0, s1, T):
    """Costs of edges from each row of ``S0`` to the single state ``s1``."""
    S0 = np.ascontiguousarray(S0, dtype=np.float64)
    dst = np.ascontiguousarray(s1, dtype=np.float64).reshape(1, 9)
    T = np.ascontiguousarray(T, dtype=np.float64)
    out = np.empty(T.shape[0])
    _batch(S0, dst, T, False, True, out)
    return out


def costs_from_source(s0, S1, T):
    """Costs of edges from the single state ``s0`` to each row of ``S1``."""
    src = np.ascontiguousarray(s0, dtype=np.float64).reshape(1, 9)
    S1 = np.ascontiguousarray(S1, dtype=np.float64)
    T = np.ascontiguousarray(T, dtype=np.float64)
    out = np.empty(T.shape[0])
    _batch(src, S1, T, True, False, out)
    return out


def batch_costs(S0, S1, T):
    S0, S1, T = np.broadcast_arrays(np.asarray(S0, float), np.asarray(S1, float), np.asarray(T, float)[..., None])
    shape = T.shape[:-1]
    S0 = np.ascontiguousarray(S0.reshape(-1, 9))
    S1 = np.ascontiguousarray(S1.reshape(-1, 9))
    Tf = np.ascontiguousarray(T[..., 0].reshape(-1))
    out = np.empty(Tf.shape[0])
    _batch(S0, S1, Tf, False, False, out)
    return out.reshape(shape)


cdef void _screen(const double[:, ::1] S0, const double[:, ::1] S1, const double[::1] T,
                  double fmin, double fmax, double wmax, const double* g,
                  double[::1] cost, unsigned char[::1] ok) noexcept nogil:
    cdef Py_ssize_t j, m = T.shape[0]
    cdef double c[18]
    for j in range(m):
        _solve(&S0[j, 0], &S1[j, 0], T[j], c)
        cost[j] = _cost(c, T[j])
        ok[j] = _feasible(c, T[j], fmin, fmax, wmax, g)


def screen(S0, S1, T, double fmin, double fmax, double wmax, double gx, double gy, double gz):
    """Generate, cost and feasibility-check many primitives in one call."""
    S0, S1, T = np.broadcast_arrays(np.asarray(S0, float), np.asarray(S1, float), np.asarray(T, float)[..., None])
    S0 = np.ascontiguousarray(S0.reshape(-1, 9))
    S1 = np.ascontiguousarray(S1.reshape(-1, 9))
    Tf = np.ascontiguousarray(T[..., 0].reshape(-1))
    cost = np.empty(Tf.shape[0])
    ok = np.empty(Tf.shape[0], dtype=np.uint8)
    cdef double g[3]
    g[0] = gx
    g[1] = gy
    g[2] = gz
    _screen(S0, S1, Tf, fmin, fmax, wmax, g, cost, ok)
    return cost, ok.astype(bool)
