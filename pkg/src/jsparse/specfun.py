"""Special functions and tail quadrature for the statistical-dimension formulas.

Densities are evaluated in log-space on top of the exponentially scaled
modified Bessel function, so ``nc * s`` far beyond 700 is harmless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "DEFAULT_QUAD",
    "log_gamma",
    "bessel_i_scaled",
    "chi_pdf",
    "noncentral_chi_pdf",
    "tail_expectation",
]

_LOG_SQRT_2_OVER_PI = 0.5 * math.log(2.0 / math.pi)


class QuadratureError(ArithmeticError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def bessel_i_scaled(v, z):
    """Return ``exp(-z) * I_v(z)``.

    Accepts scalars or arrays for ``z``; order must satisfy ``v >= -0.5``.
    Negative orders return ``inf`` at ``z = 0``.
    """
    if v < -0.5:
        raise ValueError(f"order must be >= -0.5, got {v!r}")
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise ValueError("bessel_i_scaled requires z >= 0")
    out = special.ive(v, z_arr)
    if v < 0:
        # I_v(0) diverges for -1 < v < 0
        out = np.where(z_arr == 0, np.inf, out)
    if out.ndim == 0:
        return float(out)
    return out


def _check_dof(l) -> int:
    if int(l) != l or l < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {l!r}")
    return int(l)


def _log_chi_pdf(s: np.ndarray, l: int) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return ((1.0 - 0.5 * l) * math.log(2.0) + (l - 1) * np.log(s)
                - 0.5 * s * s - math.lgamma(0.5 * l))


def chi_pdf(s, l):
    """Density of the Euclidean norm of an ``l``-dimensional standard Gaussian."""
    l = _check_dof(l)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("chi_pdf requires s >= 0")
    out = np.exp(_log_chi_pdf(s_arr, l))
    if l == 1:
        # s**0 at s == 0 is 1; log path gives 0 * -inf
        out = np.where(s_arr == 0, math.exp(_LOG_SQRT_2_OVER_PI), out)
    return float(out) if out.ndim == 0 else out


def noncentral_chi_pdf(s, l, nc):
    """Density of ``||g + mu||`` with ``g ~ N(0, I_l)`` and ``||mu|| = nc``."""
    l = _check_dof(l)
    if nc < 0:
        raise ValueError("noncentrality must be >= 0")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("noncentral_chi_pdf requires s >= 0")
    if nc == 0:
        return chi_pdf(s_arr if s_arr.ndim else float(s_arr), l)
    v = 0.5 * l - 1.0
    z = nc * s_arr
    with np.errstate(divide="ignore"):
        log_pdf = (math.log(nc) + 0.5 * l * (np.log(s_arr) - math.log(nc))
                   - 0.5 * (s_arr * s_arr + nc * nc)
                   + np.log(special.ive(v, z)) + z)
        out = np.exp(log_pdf)
    at_zero = s_arr == 0
    if np.any(at_zero):
        # limit s -> 0: only l == 1 keeps mass at the origin
        origin = math.exp(_LOG_SQRT_2_OVER_PI - 0.5 * nc * nc) if l == 1 else 0.0
        out = np.where(at_zero, origin, out)
    return float(out) if out.ndim == 0 else out


def tail_expectation(threshold: float, pdf: Callable, shift: float = 0.0,
                     quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Compute ``E[(S - threshold)_+^2]`` for a density ``pdf`` on ``[0, inf)``.

    ``shift`` is an upper bound on the mean of the density; it only places
    the initial truncation point. The integration range is then extended
    until the integrand falls below ``abs_tol * 1e-3``. Unit spread is
    assumed for the 12-sigma floor, which holds for chi and noncentral chi
    laws of any order.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")

    def integrand(t):
        d = t - threshold
        return d * d * pdf(t)

    cutoff = quad.abs_tol * 1e-3
    upper = threshold + shift + 12.0
    for _ in range(64):
        if integrand(upper) < cutoff:
            break
        upper += 4.0
    else:
        raise QuadratureError("integrand does not decay; cannot truncate")

    # split at the bulk of the density so quad sees the peak
    knots = sorted({threshold, max(threshold, shift), upper})
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        val, _ = _quad(integrand, a, b, quad)
        total += val
    return total


def _quad(fn, a, b, quad: QuadratureSpec):
    out = integrate.quad(fn, a, b, epsabs=quad.abs_tol, epsrel=quad.rel_tol,
                         limit=quad.max_subdivisions, full_output=True)
    val, err = out[0], out[1]
    if len(out) > 3:
        msg = out[3]
        # ier == 1: subdivision limit; other codes are roundoff warnings that
        # still leave an estimate, accept those if the error estimate is fine
        if "maximum number of subdivisions" in msg or err > max(quad.abs_tol, quad.rel_tol * abs(val)) * 1e3:
            raise QuadratureError(f"quadrature failed on [{a}, {b}]: {msg.strip()}")
    return val, err
