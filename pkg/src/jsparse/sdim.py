"""Statistical-dimension bounds for l2,1 minimization with a prior.

``r_p(tau)`` is the expected squared distance from an ``n x l`` Gaussian
matrix to ``tau`` times the subdifferential; its infimum ``psi_p`` upper
bounds the statistical dimension, and ``psi_p - xi_bar`` lower bounds it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import PriorGeometry
from .linesearch import minimize_on_ray
from .specfun import DEFAULT_QUAD, chi_pdf, noncentral_chi_pdf, tail_expectation


@dataclass(frozen=True)
class SdimBounds:
    psi_p: float
    lower: float
    tau_star: float
    xi_bar: float
    valid_lower: bool


@dataclass(frozen=True)
class KinematicThresholds:
    m_success: float
    m_failure: float
    eta: float
    a_eta: float


def t1(tau, geom: PriorGeometry):
    e1 = len(geom.partition.e1)
    lam = geom.lam
    tt = tau * tau
    return e1 * (geom.l + tt + tt * lam * lam) + 2.0 * tt * lam * geom.cos_sum


def _noncentral_tail(threshold, l, nc, quad):
    return tail_expectation(threshold, lambda t: noncentral_chi_pdf(t, l, nc),
                            shift=math.sqrt(l + nc * nc), quad=quad)


def t2(tau, geom: PriorGeometry, quad=DEFAULT_QUAD):
    count = len(geom.partition.e2)
    if count == 0:
        return 0.0
    return count * _noncentral_tail(tau * geom.lam, geom.l, tau, quad)


def t3(tau, geom: PriorGeometry, quad=DEFAULT_QUAD):
    count = len(geom.partition.e3)
    if count == 0:
        return 0.0
    return count * _noncentral_tail(tau, geom.l, tau * geom.lam, quad)


def t4(tau, geom: PriorGeometry, quad=DEFAULT_QUAD):
    count = len(geom.partition.e4)
    if count == 0:
        return 0.0
    l = geom.l
    return count * tail_expectation(tau * (1.0 + geom.lam), lambda t: chi_pdf(t, l),
                                    shift=math.sqrt(l), quad=quad)


def r_p(tau, geom: PriorGeometry, quad=DEFAULT_QUAD):
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return t1(tau, geom) + t2(tau, geom, quad) + t3(tau, geom, quad) + t4(tau, geom, quad)


def psi_p(geom: PriorGeometry, tau_tol=1e-8, quad=DEFAULT_QUAD):
    """Minimize ``r_p`` over ``tau >= 0``; returns ``(value, tau_star)``.

    With no support rows the infimum is approached only as tau grows without
    bound (provided wrong-support rows cannot dominate, i.e. ``lam < 1``), so
    ``(0.0, inf)`` is returned directly.
    """
    if tau_tol <= 0:
        raise ValueError("tau_tol must be positive")
    e1, e2, e3, _ = geom.partition.sizes
    if e1 + e2 == 0 and (e3 == 0 or geom.lam < 1):
        return 0.0, math.inf
    tau, value = minimize_on_ray(lambda t: r_p(t, geom, quad), tol=tau_tol)
    return float(value), float(tau)


def xi_bar(lam, n, k):
    """Worst-case gap ``2(1+lam)sqrt(n) / ((1-lam)sqrt(k))``; None when undefined."""
    if lam >= 1 or k == 0:
        return None
    return 2.0 * (1.0 + lam) * math.sqrt(n) / ((1.0 - lam) * math.sqrt(k))


def sdim_bounds(geom: PriorGeometry, n=None, k=None, tau_tol=1e-8, quad=DEFAULT_QUAD):
    n = geom.partition.n if n is None else n
    k = geom.partition.k if k is None else k
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"need n >= 1 and 0 <= k <= n, got n={n}, k={k}")
    value, tau_star = psi_p(geom, tau_tol, quad)
    gap = xi_bar(geom.lam, n, k)
    if gap is None:
        return SdimBounds(value, 0.0, tau_star, math.nan, False)
    return SdimBounds(value, max(0.0, value - gap), tau_star, gap, True)


def kinematic_thresholds(delta, n, l, eta=0.1):
    """Measurement counts bracketing the phase transition at tolerance ``eta``."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    a_eta = 8.0 * math.sqrt(math.log(4.0 / eta))
    half_width = a_eta * math.sqrt(n * l) / l
    center = delta / l
    return KinematicThresholds(center + half_width, center - half_width, eta, a_eta)


def baseline_sdim(n, k, l, tau_tol=1e-8, quad=DEFAULT_QUAD):
    """Prior-free value: ``inf_tau k(l + tau^2) + (n-k) E[(chi_l - tau)_+^2]``."""
    if not 0 <= k <= n or l < 1:
        raise ValueError("need 0 <= k <= n and l >= 1")
    if k == 0:
        return 0.0
    return psi_p(PriorGeometry.from_sizes(k, 0, 0, n - k, l, 0.0), tau_tol, quad)[0]
