# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled generalised Pareto fitting kernel.

Keep in lockstep with ``_pure.py``: identical summation order and simplex
update rules, so the two backends return the same results.
"""

from libc.math cimport exp, fabs, log, INFINITY

BACKEND = "compiled"

cdef double _XI_EPS = 1e-8
cdef double _XI_FLOOR = -0.5


cdef double _nll(const double[::1] z, double sigma, double xi) nogil:
    cdef Py_ssize_t m = z.shape[0]
    cdef Py_ssize_t i
    cdef double s = 0.0
    cdef double c, w
    if sigma <= 0.0:
        return INFINITY
    if fabs(xi) < _XI_EPS:
        for i in range(m):
            s += z[i]
        return m * log(sigma) + s / sigma
    c = xi / sigma
    for i in range(m):
        w = 1.0 + c * z[i]
        if w <= 0.0:
            return INFINITY
        s += log(w)
    return m * log(sigma) + (1.0 + 1.0 / xi) * s


def gp_negloglik(const double[::1] z, double sigma, double xi):
    """Negative log-likelihood of excesses z under GP(sigma, xi)."""
    return _nll(z, sigma, xi)


cdef double _objective(const double[::1] z, double t0, double t1) nogil:
    if t1 <= _XI_FLOOR:
        return INFINITY
    return _nll(z, exp(t0), t1)


cdef void _sort3(double* px, double* py, double* pf) nogil:
    cdef int i, j
    cdef double t
    for i in range(2):
        for j in range(2 - i):
            if pf[j + 1] < pf[j]:
                t = pf[j]; pf[j] = pf[j + 1]; pf[j + 1] = t
                t = px[j]; px[j] = px[j + 1]; px[j + 1] = t
                t = py[j]; py[j] = py[j + 1]; py[j + 1] = t


cdef int _nm2(const double[::1] z, double ax, double ay, double step,
              int max_iter, double tol,
              double* out_x, double* out_y, double* out_f,
              int* out_converged) nogil:
    cdef double px[3]
    cdef double py[3]
    cdef double pf[3]
    cdef double s1, s2, size, cx, cy, rx, ry, fr, ex, ey, fe
    cdef double ox, oy, fo, ix, iy, fi
    cdef int it = 0
    cdef int converged = 0
    cdef int i, do_shrink

    px[0] = ax; px[1] = ax + step; px[2] = ax
    py[0] = ay; py[1] = ay; py[2] = ay + step
    for i in range(3):
        pf[i] = _objective(z, px[i], py[i])

    while it < max_iter:
        _sort3(px, py, pf)
        s1 = fabs(px[1] - px[0]) + fabs(py[1] - py[0])
        s2 = fabs(px[2] - px[0]) + fabs(py[2] - py[0])
        size = s1 if s1 > s2 else s2
        if size <= tol:
            converged = 1
            break

        cx = 0.5 * (px[0] + px[1])
        cy = 0.5 * (py[0] + py[1])
        rx = cx + (cx - px[2])
        ry = cy + (cy - py[2])
        fr = _objective(z, rx, ry)
        if fr < pf[0]:
            ex = cx + 2.0 * (cx - px[2])
            ey = cy + 2.0 * (cy - py[2])
            fe = _objective(z, ex, ey)
            if fe < fr:
                px[2] = ex; py[2] = ey; pf[2] = fe
            else:
                px[2] = rx; py[2] = ry; pf[2] = fr
        elif fr < pf[1]:
            px[2] = rx; py[2] = ry; pf[2] = fr
        else:
            do_shrink = 0
            if fr < pf[2]:
                ox = cx + 0.5 * (cx - px[2])
                oy = cy + 0.5 * (cy - py[2])
                fo = _objective(z, ox, oy)
                if fo <= fr:
                    px[2] = ox; py[2] = oy; pf[2] = fo
                else:
                    do_shrink = 1
            else:
                ix = cx - 0.5 * (cx - px[2])
                iy = cy - 0.5 * (cy - py[2])
                fi = _objective(z, ix, iy)
                if fi < pf[2]:
                    px[2] = ix; py[2] = iy; pf[2] = fi
                else:
                    do_shrink = 1
            if do_shrink:
                for i in range(1, 3):
                    px[i] = px[0] + 0.5 * (px[i] - px[0])
                    py[i] = py[0] + 0.5 * (py[i] - py[0])
                    pf[i] = _objective(z, px[i], py[i])
        it += 1

    _sort3(px, py, pf)
    out_x[0] = px[0]
    out_y[0] = py[0]
    out_f[0] = pf[0]
    out_converged[0] = converged
    return it


def gp_fit(const double[::1] z, int max_iter=500, double tol=1e-8):
    """Maximise the GP likelihood over (log sigma, xi) by simplex search.

    Returns (sigma, xi, negloglik, iterations, converged).
    """
    cdef Py_ssize_t m = z.shape[0]
    cdef Py_ssize_t i
    cdef double s = 0.0
    cdef double t0
    cdef double bx = 0.0, by = 0.0, bf = 0.0
    cdef int it1, it2, it3, conv = 0

    for i in range(m):
        s += z[i]
    t0 = log(s / m)

    it1 = _nm2(z, t0, 0.1, 0.1, max_iter, tol, &bx, &by, &bf, &conv)
    it2 = _nm2(z, bx, by, 1e-3, max_iter, tol, &bx, &by, &bf, &conv)
    it3 = _nm2(z, bx, by, 1e-5, max_iter, tol, &bx, &by, &bf, &conv)
    return exp(bx), by, bf, it1 + it2 + it3, bool(conv)
