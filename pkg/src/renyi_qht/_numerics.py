"""Scalar search helpers shared by the exponent and testing modules."""

import math

import numpy as np

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, lo, hi, n_grid=64, tol=1e-10, max_iter=200):
    """Maximize a unimodal scalar function on ``[lo, hi]``.

    A coarse scan on ``n_grid`` points brackets the maximizer, then golden
    section shrinks the bracket to width ``tol``. Endpoints are allowed to
    be the maximizer. Returns ``(x_best, f_best)``.
    """
    xs = np.linspace(lo, hi, n_grid)
    vals = np.array([f(x) for x in xs])
    k = int(np.argmax(vals))
    best_x, best_f = float(xs[k]), float(vals[k])
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, n_grid - 1)]

    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    for x, v in ((c, fc), (d, fd)):
        if v > best_f:
            best_x, best_f = float(x), float(v)
    return best_x, best_f


def golden_min(f, lo, hi, n_grid=64, tol=1e-10, max_iter=200):
    x, v = golden_max(lambda t: -f(t), lo, hi, n_grid=n_grid, tol=tol, max_iter=max_iter)
    return x, -v


def bisect_increasing(g, target, lo, hi, xtol=1e-12, max_iter=200):
    """Bracket ``target`` for a non-decreasing ``g``.

    Requires ``g(lo) <= target <= g(hi)``. Returns the final bracket
    ``(lo, hi)`` with ``g(lo) <= target <= g(hi)``.
    """
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        if g(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo, hi


def central_derivative(f, x, h=1e-5):
    """Central difference with one Richardson step (error O(h^4))."""
    d1 = (f(x + h) - f(x - h)) / (2.0 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4.0 * d2 - d1) / 3.0
