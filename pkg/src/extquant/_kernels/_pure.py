"""Pure-Python fallback for the generalised Pareto fitting kernel.

Mirrors ``_core.pyx`` operation for operation (same summation order, same
simplex update rules) so both backends return the same results; the compiled
extension is just faster.
"""

import math

BACKEND = "pure"

_INF = float("inf")
_XI_EPS = 1e-8
_XI_FLOOR = -0.5


def gp_negloglik(z, sigma, xi):
    """Negative log-likelihood of excesses z under GP(sigma, xi).

    Returns +inf when sigma <= 0 or any excess falls outside the support.
    Switches to the exponential limit for |xi| < 1e-8.
    """
    if sigma <= 0.0:
        return _INF
    m = len(z)
    if abs(xi) < _XI_EPS:
        s = 0.0
        for i in range(m):
            s += z[i]
        return m * math.log(sigma) + s / sigma
    c = xi / sigma
    s = 0.0
    for i in range(m):
        w = 1.0 + c * z[i]
        if w <= 0.0:
            return _INF
        s += math.log(w)
    return m * math.log(sigma) + (1.0 + 1.0 / xi) * s


def _objective(z, t0, t1):
    # parameters are (log-scale, shape); shape is constrained above -0.5
    if t1 <= _XI_FLOOR:
        return _INF
    return gp_negloglik(z, math.exp(t0), t1)


def _nm2(z, ax, ay, step, max_iter, tol):
    """Nelder-Mead on the 2-d objective, axis-aligned start simplex."""
    px = [ax, ax + step, ax]
    py = [ay, ay, ay + step]
    pf = [_objective(z, px[i], py[i]) for i in range(3)]

    it = 0
    converged = False
    while it < max_iter:
        for i in range(2):
            for j in range(2 - i):
                if pf[j + 1] < pf[j]:
                    pf[j], pf[j + 1] = pf[j + 1], pf[j]
                    px[j], px[j + 1] = px[j + 1], px[j]
                    py[j], py[j + 1] = py[j + 1], py[j]
        s1 = abs(px[1] - px[0]) + abs(py[1] - py[0])
        s2 = abs(px[2] - px[0]) + abs(py[2] - py[0])
        size = s1 if s1 > s2 else s2
        if size <= tol:
            converged = True
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
                px[2], py[2], pf[2] = ex, ey, fe
            else:
                px[2], py[2], pf[2] = rx, ry, fr
        elif fr < pf[1]:
            px[2], py[2], pf[2] = rx, ry, fr
        else:
            shrink = False
            if fr < pf[2]:
                ox = cx + 0.5 * (cx - px[2])
                oy = cy + 0.5 * (cy - py[2])
                fo = _objective(z, ox, oy)
                if fo <= fr:
                    px[2], py[2], pf[2] = ox, oy, fo
                else:
                    shrink = True
            else:
                ix = cx - 0.5 * (cx - px[2])
                iy = cy - 0.5 * (cy - py[2])
                fi = _objective(z, ix, iy)
                if fi < pf[2]:
                    px[2], py[2], pf[2] = ix, iy, fi
                else:
                    shrink = True
            if shrink:
                for i in (1, 2):
                    px[i] = px[0] + 0.5 * (px[i] - px[0])
                    py[i] = py[0] + 0.5 * (py[i] - py[0])
                    pf[i] = _objective(z, px[i], py[i])
        it += 1

    for i in range(2):
        for j in range(2 - i):
            if pf[j + 1] < pf[j]:
                pf[j], pf[j + 1] = pf[j + 1], pf[j]
                px[j], px[j + 1] = px[j + 1], px[j]
                py[j], py[j + 1] = py[j + 1], py[j]
    return px[0], py[0], pf[0], it, converged


def gp_fit(z, max_iter=500, tol=1e-8):
    """Maximise the GP likelihood over (log sigma, xi) by simplex search.

    Starts from the moment-based point (log mean-excess, 0.1), then restarts
    twice with progressively smaller simplexes around the optimum to sharpen
    stationarity.

    Returns (sigma, xi, negloglik, iterations, converged).
    """
    m = len(z)
    s = 0.0
    for i in range(m):
        s += z[i]
    t0 = math.log(s / m)

    bx, by, bf, it1, _ = _nm2(z, t0, 0.1, 0.1, max_iter, tol)
    bx, by, bf, it2, _ = _nm2(z, bx, by, 1e-3, max_iter, tol)
    bx, by, bf, it3, converged = _nm2(z, bx, by, 1e-5, max_iter, tol)
    return math.exp(bx), by, bf, it1 + it2 + it3, converged
