"""Row partitions, subdifferential structure and a Monte-Carlo oracle.

Rows of the signal ``X0`` and prior ``W`` split into four cells according to
whether ``x0^i`` and ``x0^i - w^i`` vanish. Each cell has a closed-form
distance from a Gaussian row to the scaled subdifferential of
``||X||_{2,1} + lam * ||X - W||_{2,1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linesearch import minimize_on_ray_batch

CASES = ("E1", "E2", "E3", "E4")


@dataclass(frozen=True)
class SupportPartition:
    """Disjoint row index sets (0-based) covering ``range(n)``.

    e1: x != 0 and x != w;  e2: x != 0 and x == w;
    e3: x == 0 and w != 0;  e4: x == 0 and w == 0.
    """

    e1: tuple
    e2: tuple
    e3: tuple
    e4: tuple
    n: int

    def __post_init__(self):
        cells = [set(c) for c in (self.e1, self.e2, self.e3, self.e4)]
        if sum(len(c) for c in cells) != self.n or set().union(*cells) != set(range(self.n)):
            raise ValueError("partition cells must be disjoint and cover range(n)")

    @property
    def sizes(self):
        return len(self.e1), len(self.e2), len(self.e3), len(self.e4)

    @property
    def k(self):
        return len(self.e1) + len(self.e2)

    @classmethod
    def from_sizes(cls, e1, e2, e3, e4):
        """Synthetic partition with contiguous index blocks."""
        edges = np.cumsum([0, e1, e2, e3, e4])
        blocks = [tuple(range(edges[i], edges[i + 1])) for i in range(4)]
        return cls(*blocks, n=int(edges[-1]))


@dataclass(frozen=True)
class PriorGeometry:
    partition: SupportPartition
    cos_terms: np.ndarray
    lam: float
    l: int
    cos_spread: float = field(default=0.0, compare=False)

    def __post_init__(self):
        cos = np.asarray(self.cos_terms, dtype=float).reshape(-1)
        object.__setattr__(self, "cos_terms", cos)
        if cos.size != len(self.partition.e1):
            raise ValueError("need one cosine term per E1 row")
        if np.any(np.abs(cos) > 1 + 1e-12):
            raise ValueError("cosine terms must lie in [-1, 1]")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.l < 1:
            raise ValueError("l must be >= 1")

    @classmethod
    def from_signals(cls, x0, w, lam, row_zero_tol=1e-12):
        x0 = np.asarray(x0, dtype=float)
        part = partition_supports(x0, w, row_zero_tol)
        return cls(part, cos_terms(x0, w, part), float(lam), x0.shape[1])

    @classmethod
    def from_sizes(cls, e1, e2, e3, e4, l, lam, cos=1.0):
        """Geometry from cell sizes; ``cos`` is a scalar or one value per E1 row."""
        cos = np.broadcast_to(np.asarray(cos, dtype=float), (e1,)).copy()
        return cls(SupportPartition.from_sizes(e1, e2, e3, e4), cos, float(lam), int(l))

    @property
    def cos_sum(self):
        return float(self.cos_terms.sum())


def _row_norms(x):
    return np.sqrt(np.einsum("ij,ij->i", x, x))


def partition_supports(x0, w, row_zero_tol=1e-12):
    x0 = np.asarray(x0, dtype=float)
    w = np.asarray(w, dtype=float)
    if x0.shape != w.shape or x0.ndim != 2:
        raise ValueError(f"x0 {x0.shape} and w {w.shape} must be matching 2-D arrays")
    n = x0.shape[0]
    root_n = math.sqrt(n)
    x_scale = np.linalg.norm(x0) / root_n
    d_scale = max(np.linalg.norm(x0), np.linalg.norm(w)) / root_n
    in_x = _row_norms(x0) > row_zero_tol * x_scale
    in_d = _row_norms(x0 - w) > row_zero_tol * d_scale

    def idx(mask):
        return tuple(int(i) for i in np.flatnonzero(mask))

    return SupportPartition(idx(in_x & in_d), idx(in_x & ~in_d),
                            idx(~in_x & in_d), idx(~in_x & ~in_d), n)


def cos_terms(x0, w, partition):
    """Cosine between ``x0^i`` and ``x0^i - w^i`` for every E1 row."""
    x0 = np.asarray(x0, dtype=float)
    w = np.asarray(w, dtype=float)
    if x0.shape != w.shape:
        raise ValueError("x0 and w must have the same shape")
    rows = list(partition.e1)
    x = x0[rows]
    d = x - w[rows]
    cos = np.einsum("ij,ij->i", x, d) / (_row_norms(x) * _row_norms(d))
    return np.clip(cos, -1.0, 1.0)


def row_dist_sq(g_row, case, tau, geom, unit_x=None, unit_xw=None):
    """Squared distance from ``g_row`` to the ``tau``-scaled row subdifferential."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    g = np.asarray(g_row, dtype=float)
    lam = geom.lam
    if case in ("E1", "E2") and unit_x is None:
        raise ValueError(f"case {case} needs unit_x")
    if case in ("E1", "E3") and unit_xw is None:
        raise ValueError(f"case {case} needs unit_xw")
    if case == "E1":
        r = g - tau * (np.asarray(unit_x) + lam * np.asarray(unit_xw))
        return float(r @ r)
    if case == "E2":
        return max(np.linalg.norm(g - tau * np.asarray(unit_x)) - tau * lam, 0.0) ** 2
    if case == "E3":
        return max(np.linalg.norm(g - tau * lam * np.asarray(unit_xw)) - tau, 0.0) ** 2
    if case == "E4":
        return max(np.linalg.norm(g) - tau * (1.0 + lam), 0.0) ** 2
    raise ValueError(f"unknown case {case!r}")


class _DistanceSum:
    """Sum over rows of ``row_dist_sq`` for a batch of Gaussian draws.

    Every cell reduces to a few per-row scalars (``||g||^2`` and inner
    products with the fixed unit rows), so evaluating at a new tau is cheap.
    """

    def __init__(self, g, part, unit_x, unit_xw, lam):
        self.lam = lam
        e1, e2, e3, e4 = (list(c) for c in (part.e1, part.e2, part.e3, part.e4))
        gamma = unit_x[e1] + lam * unit_xw[e1]
        g1 = g[:, e1, :]
        self.q0 = np.einsum("bij,bij->b", g1, g1)
        self.q1 = np.einsum("bij,ij->b", g1, gamma)
        self.q2 = float(np.einsum("ij,ij->", gamma, gamma))
        g2 = g[:, e2, :]
        self.gg2 = np.einsum("bij,bij->bi", g2, g2)
        self.gu2 = np.einsum("bij,ij->bi", g2, unit_x[e2])
        g3 = g[:, e3, :]
        self.gg3 = np.einsum("bij,bij->bi", g3, g3)
        self.gu3 = np.einsum("bij,ij->bi", g3, unit_xw[e3])
        g4 = g[:, e4, :]
        self.r4 = np.sqrt(np.einsum("bij,bij->bi", g4, g4))

    def __call__(self, tau):
        lam = self.lam
        t = tau[:, None]
        total = self.q0 - 2.0 * tau * self.q1 + tau * tau * self.q2
        n2 = np.sqrt(np.maximum(self.gg2 - 2.0 * t * self.gu2 + t * t, 0.0))
        total = total + (np.maximum(n2 - t * lam, 0.0) ** 2).sum(axis=1)
        tl = t * lam
        n3 = np.sqrt(np.maximum(self.gg3 - 2.0 * tl * self.gu3 + tl * tl, 0.0))
        total = total + (np.maximum(n3 - t, 0.0) ** 2).sum(axis=1)
        total = total + (np.maximum(self.r4 - t * (1.0 + lam), 0.0) ** 2).sum(axis=1)
        return total


def _sample_gaussian(seed, index, shape):
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, index]).standard_normal(shape)


def mc_sdim_estimate(x0, w, lam, samples, seed, tau_tol=1e-8, row_zero_tol=1e-12,
                     chunk=1000):
    """Monte-Carlo estimate of the statistical dimension of the descent cone.

    For each Gaussian draw ``G`` the squared distance to the polar cone is
    ``min_tau sum_i row_dist_sq``; its sample mean is unbiased for the
    statistical dimension. Draw ``i`` is seeded from ``(seed, i)`` so the
    estimate does not depend on ``chunk``.

    Returns ``(estimate, std_error)``; the standard error is NaN for a
    single sample.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not 0 <= lam:
        raise ValueError("lambda must be nonnegative")
    x0 = np.asarray(x0, dtype=float)
    w = np.asarray(w, dtype=float)
    part = partition_supports(x0, w, row_zero_tol)
    if part.k == 0:
        # descent cone at the origin of a norm-like function is {0}
        return 0.0, 0.0

    n, l = x0.shape
    unit_x = np.zeros_like(x0)
    unit_xw = np.zeros_like(x0)
    rows = list(part.e1) + list(part.e2)
    unit_x[rows] = x0[rows] / _row_norms(x0[rows])[:, None]
    diff = x0 - w
    rows = list(part.e1) + list(part.e3)
    unit_xw[rows] = diff[rows] / _row_norms(diff[rows])[:, None]

    minima = np.empty(samples)
    for start in range(0, samples, chunk):
        stop = min(start + chunk, samples)
        g = np.stack([_sample_gaussian(seed, i, (n, l)) for i in range(start, stop)])
        objective = _DistanceSum(g, part, unit_x, unit_xw, lam)
        _, fmin = minimize_on_ray_batch(objective, stop - start, tol=tau_tol)
        minima[start:stop] = fmin
    estimate = float(minima.mean())
    if samples == 1:
        return estimate, float("nan")
    return estimate, float(minima.std(ddof=1) / math.sqrt(samples))
