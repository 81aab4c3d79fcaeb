"""Synthetic experiments: the lower-bound sweep and a mixed-sparsity classifier.

Random streams come from numpy's PCG64 generator. Every trial draws from
its own ``SeedSequence(rng_seed, spawn_key=(...))``, so records do not
depend on execution order or on the number of worker processes.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .certify import InfeasibleRelaxation, lower_bound
from .model import ProblemInstance, SparsityMode, Status, support_of
from .oracle import OracleBudget, oracle_entry
from .relax import solve_bidual

log = logging.getLogger(__name__)

CSV_HEADER = ("trial", "sparsity", "multiplier", "bound", "truth", "ratio", "status", "ms")


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def trial_seed(base: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(base), spawn_key=tuple(int(k) for k in key))


def gen_instance(m: int, n: int, s: int, seed, M_multiplier: float = 1.0):
    """Gaussian ``A`` (m x n) and planted ``x0`` with ``s`` Gaussian nonzeros.

    Returns ``(instance, x0)``; the instance is entry-wise with
    ``b = A x0`` and ``M = M_multiplier * M0`` where ``M0 = ||x0||_inf``
    (``M0 = 1`` when ``s = 0``).
    """
    if not 0 <= s <= n:
        raise ValueError(f"sparsity {s} outside [0, {n}]")
    rng = _rng(seed)
    A = rng.standard_normal((m, n))
    x0 = np.zeros(n)
    pos = rng.choice(n, size=s, replace=False)
    x0[pos] = rng.standard_normal(s)
    M0 = float(np.max(np.abs(x0))) if s else 1.0
    inst = ProblemInstance.from_mode(A, A @ x0, SparsityMode.entry(), M=M_multiplier * M0)
    return inst, x0


@dataclass
class SweepConfig:
    m: int = 32
    n: int = 64
    sparsity_grid: Sequence[int] = (1, 4, 7, 10, 13, 16)
    M_multipliers: Sequence[float] = (1.0, 2.0, 5.0)
    trials: int = 50
    rng_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if any(s > self.n or s < 0 for s in self.sparsity_grid):
            raise ValueError("sparsity levels must lie in [0, n]")
        if any(mu <= 0 for mu in self.M_multipliers):
            raise ValueError("M multipliers must be positive")


@dataclass
class SweepRecord:
    trial: int
    sparsity: int
    multiplier: float
    bound: float
    truth: int
    ratio: float
    status: str
    ms: float
    # filled only when the exact oracle is run
    oracle_value: Optional[float] = None
    hypothesis_ok: Optional[bool] = None

    @property
    def planted_optimal(self) -> Optional[bool]:
        if self.oracle_value is None:
            return None
        return self.oracle_value == self.truth


def _sweep_trial(args):
    config, s, trial, timing, with_oracle = args
    inst, x0 = gen_instance(config.m, config.n, s, trial_seed(config.rng_seed, s, trial))
    M0 = inst.M
    oracle = None
    if with_oracle:
        oracle = oracle_entry(inst.with_M("conservative"), OracleBudget(max_entries=max(20, config.n)))
    out = []
    for mult in config.M_multipliers:
        t0 = time.perf_counter()
        try:
            cert = lower_bound(inst.with_M(mult * M0))
            bound, status = cert.bound, Status.OPTIMAL.value
        except InfeasibleRelaxation:
            bound, status = float("nan"), Status.INFEASIBLE.value
        except Exception as exc:  # per-record failures are data, not fatal
            log.warning("trial %d sparsity %d: %s", trial, s, exc)
            bound, status = float("nan"), "error"
        ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        ratio = bound / s if s else float("nan")
        rec = SweepRecord(trial, s, float(mult), bound, s, ratio, status, ms)
        if oracle is not None:
            rec.oracle_value = oracle.value
            rec.hypothesis_ok = bool(mult * M0 >= np.max(np.abs(oracle.witness_x)) * (1 - 1e-12))
        out.append(rec)
    return out


def run_sweep(config: SweepConfig, threads: int = 1, timing: bool = True, oracle: bool = False):
    """Bound every (sparsity, trial, multiplier) cell; records in canonical order.

    ``oracle=True`` also computes the exact l0 value of every instance
    (small ``n`` only) so soundness can be checked record by record.
    """
    tasks = [(config, s, t, timing, oracle) for s in config.sparsity_grid for t in range(config.trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_sweep_trial, tasks, chunksize=4))
    else:
        chunks = [_sweep_trial(t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (r.sparsity, r.trial, r.multiplier))
    return records


def summarize(records) -> dict:
    """Five-number summary (min, q25, median, q75, max) of the bound per cell."""
    cells = {}
    for r in records:
        cells.setdefault((r.sparsity, r.multiplier), []).append(r.bound)
    out = []
    for (s, mult), vals in sorted(cells.items()):
        v = np.array([x for x in vals if np.isfinite(x)])
        row = {"sparsity": s, "multiplier": mult, "count": int(v.size), "failures": len(vals) - int(v.size)}
        if v.size:
            q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
            row.update(zip(("min", "q25", "median", "q75", "max"), (float(x) for x in q)))
        out.append(row)
    return {"cells": out}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_csv(records, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])


def records_to_csv(records) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


@dataclass
class ClassifyConfig:
    K: int = 4
    d: int = 3
    m: int = 30
    rho: float = 0.1
    gamma: float = 0.01
    trials: int = 100
    rng_seed: int = 0
    block_energy_threshold: float = 1e-3
    # magnitude of dictionary entries; the cheap error term (gamma = 0.01)
    # only loses to a class explanation when atoms are large, as with raw pixels
    atom_scale: float = 10.0

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.K < 1 or self.d < 1 or self.m < 1 or self.trials < 1:
            raise ValueError("K, d, m and trials must be positive")


@dataclass
class ClassifyTrial:
    trial: int
    true_class: int
    predicted: int
    group_sparsity: int
    error_sparsity: int
    status: str


@dataclass
class ClassificationReport:
    accuracy: float
    mean_group_sparsity: float
    mean_error_sparsity: float
    failures: int
    trials: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def gen_dictionary(config: ClassifyConfig, rng) -> np.ndarray:
    return config.atom_scale * rng.standard_normal((config.m, config.K * config.d))


def classify_query(A: np.ndarray, b: np.ndarray, config: ClassifyConfig):
    """Solve the mixed relaxation and pick the class with the least residual.

    Returns ``(predicted, group_sparsity, error_sparsity, status)``.
    """
    K, d = config.K, config.d
    inst = ProblemInstance.mixed(A, b, [d] * K, config.gamma)
    sol = solve_bidual(inst)
    if sol.status is not Status.OPTIMAL:
        return -1, 0, 0, sol.status.value
    x, e = sol.x[: K * d], sol.x[K * d:]
    energy = np.linalg.norm(x.reshape(K, d), axis=1)
    active = np.flatnonzero(energy > config.block_energy_threshold)
    candidates = active if active.size else np.arange(K)
    resid = [np.linalg.norm(b - A[:, k * d:(k + 1) * d] @ x[k * d:(k + 1) * d]) for k in candidates]
    predicted = int(candidates[int(np.argmin(resid))])
    return predicted, int(active.size), int(np.count_nonzero(support_of(e))), Status.OPTIMAL.value


def _classify_trial(args):
    config, A, trial = args
    rng = _rng(trial_seed(config.rng_seed, 1, trial))
    m, d = config.m, config.d
    c = int(rng.integers(config.K))
    b = A[:, c * d:(c + 1) * d] @ rng.standard_normal(d)
    n_bad = int(round(config.rho * m))
    bad = rng.choice(m, size=n_bad, replace=False)
    scale = float(np.max(np.abs(b))) if m else 1.0
    b[bad] += scale * rng.uniform(-2.0, 2.0, size=n_bad)
    try:
        pred, gs, es, status = classify_query(A, b, config)
    except Exception as exc:
        log.warning("classification trial %d failed: %s", trial, exc)
        pred, gs, es, status = -1, 0, 0, "error"
    return ClassifyTrial(trial, c, pred, gs, es, status)


def run_classify(config: ClassifyConfig, threads: int = 1) -> ClassificationReport:
    """Synthetic sparsity-based classification with sparse corruption of the query."""
    A = gen_dictionary(config, _rng(trial_seed(config.rng_seed, 0)))
    tasks = [(config, A, t) for t in range(config.trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            trials = list(pool.map(_classify_trial, tasks, chunksize=4))
    else:
        trials = [_classify_trial(t) for t in tasks]
    ok = [t for t in trials if t.status == Status.OPTIMAL.value]
    correct = sum(t.predicted == t.true_class for t in trials)
    return ClassificationReport(
        accuracy=correct / len(trials),
        mean_group_sparsity=float(np.mean([t.group_sparsity for t in ok])) if ok else float("nan"),
        mean_error_sparsity=float(np.mean([t.error_sparsity for t in ok])) if ok else float("nan"),
        failures=len(trials) - len(ok),
        trials=trials,
    )
