"""Golden-section minimization on the ray tau >= 0.

Both the quadrature objective R_p and the per-sample distance function are
convex in tau, so a doubling bracket followed by golden-section contraction
finds the minimizer without derivatives.
"""
from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
MAX_DOUBLINGS = 60


class BracketError(RuntimeError):
    """The objective kept decreasing through every doubling of the bracket."""


def bracket_ray(f, hi=1.0, max_doublings=MAX_DOUBLINGS):
    """Grow ``[0, hi]`` geometrically until ``f`` stops decreasing.

    Returns ``(0, hi)`` such that the minimizer of convex ``f`` on
    ``[0, inf)`` lies inside.
    """
    prev = f(hi)
    for _ in range(max_doublings):
        nxt = f(2.0 * hi)
        if nxt >= prev:
            return 0.0, 2.0 * hi
        hi *= 2.0
        prev = nxt
    raise BracketError(f"objective still decreasing at tau={hi:g}")


def golden_section(f, lo, hi, tol=1e-8):
    """Minimize unimodal scalar ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    # the minimizer may sit on the boundary (tau* = 0)
    f_lo = f(lo)
    if f_lo <= fx:
        return lo, f_lo
    return x, fx


def minimize_on_ray(f, tol=1e-8, max_doublings=MAX_DOUBLINGS):
    lo, hi = bracket_ray(f, max_doublings=max_doublings)
    return golden_section(f, lo, hi, tol)


def minimize_on_ray_batch(f, size, tol=1e-8, max_doublings=MAX_DOUBLINGS):
    """Vectorized :func:`minimize_on_ray` for ``size`` independent objectives.

    ``f`` maps an array of ``size`` taus to ``size`` objective values, entry
    ``j`` depending only on ``tau[j]``.
    """
    hi = np.ones(size)
    prev = f(hi)
    active = np.ones(size, dtype=bool)
    for _ in range(max_doublings):
        nxt = f(2.0 * hi)
        grow = active & (nxt < prev)
        # entries that just stopped decreasing keep the doubled endpoint
        hi = np.where(active, 2.0 * hi, hi)
        prev = np.where(grow, nxt, prev)
        active = grow
        if not active.any():
            break
    else:
        raise BracketError("objective still decreasing after maximum doublings")

    a = np.zeros(size)
    b = hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    # per-entry stopping keeps each result independent of its batch mates
    while True:
        live = (b - a) > tol
        if not live.any():
            break
        left = fc <= fd
        move_l = live & left
        move_r = live & ~left
        b = np.where(move_l, d, b)
        a = np.where(move_r, c, a)
        new_c = np.where(move_l, b - INV_PHI * (b - a), np.where(move_r, d, c))
        new_d = np.where(move_r, a + INV_PHI * (b - a), np.where(move_l, c, d))
        fnew = f(np.where(move_l, new_c, new_d))
        fc, fd = (np.where(move_l, fnew, np.where(move_r, fd, fc)),
                  np.where(move_r, fnew, np.where(move_l, fc, fd)))
        c, d = new_c, new_d
    x = 0.5 * (a + b)
    fx = f(x)
    f0 = f(np.zeros(size))
    at_zero = f0 <= fx
    return np.where(at_zero, 0.0, x), np.where(at_zero, f0, fx)
