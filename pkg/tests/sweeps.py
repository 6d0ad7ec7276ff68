"""Desk-scale sweeps shared by the acceptance and slow invariant tests."""
import functools
import time

from jsparse.experiments import ExperimentConfig, config_replace, run_sweep

MASTER_SEED = 2016
BASE = ExperimentConfig(n=100, k=16, trials_per_m=25, m_range=(1, 50), master_seed=MASTER_SEED)

CONFIGS = {
    "kw4": config_replace(BASE, l=2, k_w=4, prior_type="Type4"),
    "kw8": config_replace(BASE, l=2, k_w=8, prior_type="Type4"),
    **{f"type{i}": config_replace(BASE, l=5, k_w=8, prior_type=f"Type{i}") for i in range(1, 5)},
    **{f"wrong{w}": config_replace(BASE, l=5, k_w=8 + w, wrong_supports=w, prior_type="Type3")
       for w in (6, 12, 18, 24)},
    "baseline": config_replace(BASE, l=5, k_w=8, prior_type="Type3", lam=0.0),
}


@functools.lru_cache(maxsize=None)
def sweep(name):
    """(SweepResult, wall seconds); each named sweep runs once per session."""
    start = time.perf_counter()
    result = run_sweep(CONFIGS[name])
    return result, time.perf_counter() - start
