"""Signal/prior generators and the seeded phase-transition trial protocol.

A trial draws ``X0``, ``W`` and ``A`` from a seed derived from
``(master_seed, m, trial_index)``, so trials can run in any order or in
parallel and still reproduce bit for bit. Configurations that differ only
in their prior share the same ``X0`` and ``A`` for a given trial key.
"""
from __future__ import annotations

import enum
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .geometry import PriorGeometry, SupportPartition
from .sdim import KinematicThresholds, SdimBounds, kinematic_thresholds, sdim_bounds
from .solver import SolverConfig, solve_ml1p

log = logging.getLogger(__name__)

MASK64 = 0xFFFFFFFFFFFFFFFF
THEORY_DRAWS = 100
THEORY_ETA = 0.1

# rng stream ids under one trial seed
_SIGNAL, _PRIOR, _MATRIX = 0, 1, 2


class PriorType(str, enum.Enum):
    TYPE1 = "Type1"  # w ~ N(0, I)
    TYPE2 = "Type2"  # w = sign(x)
    TYPE3 = "Type3"  # w = (mu + 3 sigma) sign(x)
    TYPE4 = "Type4"  # w = x


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 100
    k: int = 16
    l: int = 2
    k_w: int = 4
    wrong_supports: int = 0
    prior_type: PriorType = PriorType.TYPE4
    lam: float = 0.5
    m_range: tuple = None
    trials_per_m: int = 100
    success_tol: float = 1e-5
    master_seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "prior_type", PriorType(self.prior_type))
        except ValueError:
            raise ConfigError(f"unknown prior_type {self.prior_type!r}") from None
        if self.m_range is None:
            object.__setattr__(self, "m_range", (1, max(1, self.n // 2)))
        object.__setattr__(self, "m_range", tuple(int(v) for v in self.m_range))
        self.validate()

    def validate(self):
        for name in ("n", "k", "l", "k_w", "wrong_supports", "trials_per_m", "master_seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
        if self.n < 1 or self.l < 1:
            raise ConfigError("n and l must be >= 1")
        if not 0 <= self.k <= self.n:
            raise ConfigError("need 0 <= k <= n")
        if not 0 <= self.wrong_supports <= self.n - self.k:
            raise ConfigError("need 0 <= wrong_supports <= n - k")
        if not self.wrong_supports <= self.k_w <= self.k + self.wrong_supports:
            raise ConfigError("need wrong_supports <= k_w <= k + wrong_supports")
        if len(self.m_range) != 2:
            raise ConfigError("m_range must be [first, last]")
        lo, hi = self.m_range
        if not 1 <= lo <= hi <= self.n:
            raise ConfigError("m_range must satisfy 1 <= first <= last <= n")
        if self.trials_per_m < 0:
            raise ConfigError("trials_per_m must be >= 0")
        if not self.success_tol > 0:
            raise ConfigError("success_tol must be positive")
        if not self.lam >= 0:
            raise ConfigError("lambda must be nonnegative")

    @property
    def ms(self):
        return range(self.m_range[0], self.m_range[1] + 1)

    def to_dict(self):
        """JSON-ready mapping; the weight is keyed ``lambda``."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "prior_type":
                value = value.value
            elif f.name == "m_range":
                value = list(value)
            out["lambda" if f.name == "lam" else f.name] = value
        return out

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {("lambda" if f.name == "lam" else f.name): f.name for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {known[key]: value for key, value in data.items()}
        if "lam" in kwargs:
            lam = kwargs["lam"]
            if isinstance(lam, bool) or not isinstance(lam, (int, float)):
                raise ConfigError(f"lambda must be a number, got {lam!r}")
            kwargs["lam"] = float(lam)
        if "success_tol" in kwargs:
            kwargs["success_tol"] = float(kwargs["success_tol"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class SignalEnsemble:
    x0: np.ndarray
    support: tuple

    @property
    def n(self):
        return self.x0.shape[0]

    @property
    def l(self):
        return self.x0.shape[1]

    @property
    def k(self):
        return len(self.support)


@dataclass(frozen=True)
class PriorModel:
    w: np.ndarray
    support: tuple
    prior_type: PriorType
    wrong_rows: tuple = ()


@dataclass(frozen=True)
class TrialRecord:
    m: int
    trial_index: int
    success: bool
    residual: float
    solver_iterations: int
    seed_used: int
    converged: bool


@dataclass(frozen=True)
class RateRow:
    m: int
    trials: int
    successes: int

    @property
    def rate(self):
        return self.successes / self.trials if self.trials else 0.0


@dataclass
class SweepResult:
    config: ExperimentConfig
    rates: list
    theory: SdimBounds
    thresholds: KinematicThresholds
    geometry: PriorGeometry
    records: list = field(default_factory=list)

    def crossing(self, level=0.5):
        return crossing_m(self.rates, level)


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed, m, trial_index):
    """64-bit seed for one trial: splitmix64 folded over the trial key."""
    h = _splitmix64(master_seed & MASK64)
    h = _splitmix64(h ^ (m & MASK64))
    return _splitmix64(h ^ (trial_index & MASK64))


def _rng(seed, stream):
    return np.random.default_rng([seed & MASK64, stream])


def gen_joint_sparse(n, l, k, seed):
    if not 0 <= k <= n or l < 1:
        raise ValueError("need 0 <= k <= n and l >= 1")
    rng = np.random.default_rng(seed & MASK64)
    support = tuple(sorted(int(i) for i in rng.choice(n, size=k, replace=False)))
    x0 = np.zeros((n, l))
    x0[list(support)] = rng.standard_normal((k, l))
    return SignalEnsemble(x0, support)


def _prior_rows(x, prior_type, rng):
    if prior_type is PriorType.TYPE1:
        return rng.standard_normal(x.shape)
    if prior_type is PriorType.TYPE2:
        return np.sign(x)
    if prior_type is PriorType.TYPE3:
        # per-row mean and population standard deviation
        mu = x.mean(axis=1, keepdims=True)
        sigma = x.std(axis=1, keepdims=True)
        return (mu + 3.0 * sigma) * np.sign(x)
    return x.copy()


def gen_prior(ens: SignalEnsemble, prior_type, k_w, wrong_supports, seed):
    """Prior ``W`` with ``k_w - wrong_supports`` rows on the support and
    ``wrong_supports`` Gaussian rows off it."""
    prior_type = PriorType(prior_type)
    correct = k_w - wrong_supports
    off_support = np.setdiff1d(np.arange(ens.n), ens.support)
    if not 0 <= correct <= ens.k or not 0 <= wrong_supports <= off_support.size:
        raise ValueError("inconsistent k_w / wrong_supports for this signal")
    rng = np.random.default_rng(seed & MASK64)
    rows = np.sort(rng.choice(np.asarray(ens.support, dtype=int), size=correct, replace=False))
    wrong = np.sort(rng.choice(off_support, size=wrong_supports, replace=False))
    w = np.zeros_like(ens.x0)
    w[rows] = _prior_rows(ens.x0[rows], prior_type, rng)
    w[wrong] = rng.standard_normal((wrong_supports, ens.l))
    support = tuple(sorted(int(i) for i in np.concatenate([rows, wrong])))
    return PriorModel(w, support, prior_type, tuple(int(i) for i in wrong))


def gen_gaussian_matrix(m, n, seed):
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be >= 1")
    return np.random.default_rng(seed & MASK64).standard_normal((m, n))


def trial_instance(config: ExperimentConfig, m, trial_index):
    """``(seed, X0 ensemble, prior, A)`` for one trial key."""
    seed = trial_seed(config.master_seed, m, trial_index)
    ens = gen_joint_sparse(config.n, config.l, config.k, _stream_seed(seed, _SIGNAL))
    prior = gen_prior(ens, config.prior_type, config.k_w, config.wrong_supports,
                      _stream_seed(seed, _PRIOR))
    a = gen_gaussian_matrix(m, config.n, _stream_seed(seed, _MATRIX))
    return seed, ens, prior, a


def _stream_seed(seed, stream):
    return _splitmix64(seed ^ _splitmix64(stream + 1))


def run_trial(config: ExperimentConfig, m, trial_index, solver_cfg=None):
    if m not in config.ms:
        raise ValueError(f"m={m} outside m_range {config.m_range}")
    seed, ens, prior, a = trial_instance(config, m, trial_index)
    y = a @ ens.x0
    cfg = solver_cfg or SolverConfig(lam=config.lam)
    result = solve_ml1p(a, y, prior.w, cfg)
    residual = float(np.linalg.norm(result.x_hat - ens.x0))
    success = bool(result.converged and residual <= config.success_tol)
    if not result.converged:
        log.debug("m=%d trial=%d did not converge (%d iterations)", m, trial_index,
                  result.iterations)
    return TrialRecord(m, trial_index, success, residual, result.iterations, seed,
                       bool(result.converged))


def _run_block(args):
    config, m, solver_cfg = args
    return [run_trial(config, m, t, solver_cfg) for t in range(config.trials_per_m)]


def theory_geometry(config: ExperimentConfig, draws=THEORY_DRAWS):
    """Reference geometry for the theory overlay.

    Cell sizes are fixed by the config; cosine terms of random priors are
    averaged (position-wise after sorting) over ``draws`` seeded pairs, and
    the spread of their sum is kept on the geometry.
    """
    base = _splitmix64(config.master_seed ^ 0x7468656F7279)  # "theory"
    sizes = None
    cos_draws = []
    for d in range(draws):
        seed = _splitmix64(base ^ d)
        ens = gen_joint_sparse(config.n, config.l, config.k, _stream_seed(seed, _SIGNAL))
        prior = gen_prior(ens, config.prior_type, config.k_w, config.wrong_supports,
                          _stream_seed(seed, _PRIOR))
        geom = PriorGeometry.from_signals(ens.x0, prior.w, config.lam)
        if sizes is None:
            sizes = geom.partition.sizes
        elif geom.partition.sizes != sizes:
            raise RuntimeError("partition sizes vary across draws")
        cos_draws.append(np.sort(geom.cos_terms))
        if config.prior_type is PriorType.TYPE4 and config.wrong_supports == 0:
            break  # nothing random in the geometry
    cos = np.mean(cos_draws, axis=0) if sizes[0] else np.zeros(0)
    spread = float(np.std([c.sum() for c in cos_draws])) if sizes[0] else 0.0
    return PriorGeometry(SupportPartition.from_sizes(*sizes), cos, config.lam, config.l,
                         cos_spread=spread)


def theory_overlay(config: ExperimentConfig, eta=THEORY_ETA):
    geom = theory_geometry(config)
    bounds = sdim_bounds(geom, config.n, config.k)
    return geom, bounds, kinematic_thresholds(bounds.psi_p, config.n, config.l, eta)


def run_sweep(config: ExperimentConfig, parallelism=1, solver_cfg=None):
    """All trials for every m in range, aggregated with the theory overlay.

    ``parallelism`` 0 means one worker per CPU. Trials are keyed, so the
    result is identical for every worker count.
    """
    geom, bounds, thresholds = theory_overlay(config)
    rates, records = [], []
    if config.trials_per_m > 0:
        workers = (os.cpu_count() or 1) if parallelism == 0 else parallelism
        tasks = [(config, m, solver_cfg) for m in config.ms]
        if workers <= 1:
            blocks = map(_run_block, tasks)
        else:
            pool = ProcessPoolExecutor(max_workers=workers)
            blocks = pool.map(_run_block, tasks)
        try:
            for m, block in zip(config.ms, blocks):
                records.extend(block)
                rates.append(RateRow(m, len(block), sum(r.success for r in block)))
                log.info("m=%d success %d/%d", m, rates[-1].successes, len(block))
        finally:
            if workers > 1:
                pool.shutdown()
    return SweepResult(config, rates, bounds, thresholds, geom, records)


def crossing_m(rates, level=0.5):
    """First m whose empirical success rate exceeds ``level`` (None if never)."""
    for row in rates:
        if row.rate > level:
            return row.m
    return None


def config_replace(config: ExperimentConfig, **changes):
    data = asdict(config)
    data.update(changes)
    return ExperimentConfig(**data)
