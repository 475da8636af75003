"""Synthetic-data replication studies: generate from known truth, fit the
intransitive model and the transitive baseline, score both."""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import expit

from .complex import OperatorSet, build_operators
from .measures import credible_interval, global_intransitivity, posterior_mean
from .sampler import (ChainAbort, ComparisonData, Hyperparams, PosteriorDraws,
                      run_baseline_chain, run_chain)

log = logging.getLogger(__name__)

CP_LEVELS = (0.90, 0.95)
DETECTION_LEVELS = (0.50, 0.60, 0.70, 0.80, 0.90, 0.95, 0.99)
COMPONENTS = ("M", "grad", "curl")

# Published coverage tables, kept only for side-by-side rendering.
# key: (N, trials, sparsity) -> model -> (M90, M95, grad90, grad95, curl90, curl95, seconds)
REFERENCE_TABLES = {
    (10, "100", 0.5): {
        "BBT": (0.136, 0.162, 0.441, 0.506, None, None, 1.99),
        "ICBT": (0.678, 0.748, None, None, 0.554, 0.633, 1592.41),
        "BIBT": (0.886, 0.940, 0.880, 0.938, 0.871, 0.931, 1.34),
    },
    (10, "100", 1.0): {
        "BBT": (0.881, 0.937, 0.881, 0.937, None, None, 2.05),
        "ICBT": (0.708, 0.795, None, None, 0.786, 0.863, 1481.16),
        "BIBT": (0.930, 0.972, 0.886, 0.939, 1.0, 1.0, 1.35),
    },
    (20, "100", 0.5): {
        "BBT": (0.166, 0.196, 0.531, 0.611, None, None, 5.28),
        "ICBT": (0.805, 0.844, None, None, 0.792, 0.832, 18291.70),
        "BIBT": (0.872, 0.930, 0.872, 0.931, 0.867, 0.924, 38.24),
    },
    (10, "5-100", 0.5): {
        "BBT": (0.192, 0.225, 0.459, 0.533, None, None, 1.91),
        "ICBT": (0.625, 0.700, None, None, 0.525, 0.601, 1093.38),
        "BIBT": (0.875, 0.935, 0.861, 0.925, 0.856, 0.919, 1.93),
    },
}


@dataclass(frozen=True)
class SimConfig:
    n_entities: int = 10
    trials: int | tuple[int, int] = 100
    sparsity: float = 0.5
    score_scale: float = 1.0
    curl_scale: float = 1.0
    replications: int = 100
    master_seed: int = 0
    mcmc: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.n_entities < 3:
            raise ValueError("need at least 3 entities")
        if isinstance(self.trials, tuple):
            lo, hi = self.trials
            if lo < 1 or hi < lo:
                raise ValueError("trials range must satisfy 1 <= lo <= hi")
        elif self.trials < 0:
            raise ValueError("trials must be nonnegative")

    @property
    def trials_label(self) -> str:
        if isinstance(self.trials, tuple):
            return f"{self.trials[0]}-{self.trials[1]}"
        return str(self.trials)


@dataclass
class Truth:
    s: np.ndarray
    w: np.ndarray
    M_grad: np.ndarray
    M_curl: np.ndarray

    @property
    def M(self) -> np.ndarray:
        return self.M_grad + self.M_curl


def replication_seeds(master_seed: int, replication_id: int) -> list[np.random.SeedSequence]:
    """Independent streams for (data, bibt chain, baseline chain) of one replication."""
    return np.random.SeedSequence(master_seed, spawn_key=(replication_id,)).spawn(3)


def generate_synthetic(cfg: SimConfig, replication_id: int, ops: OperatorSet | None = None,
                       rng: np.random.Generator | None = None):
    ops = ops or build_operators(cfg.n_entities)
    if rng is None:
        rng = np.random.default_rng(replication_seeds(cfg.master_seed, replication_id)[0])
    N, K = cfg.n_entities, ops.K
    s = rng.normal(0.0, cfg.score_scale, N)
    s -= s.mean()
    w = np.zeros(K)
    n_active = math.ceil((1.0 - cfg.sparsity) * K - 1e-9)
    active = rng.choice(K, size=n_active, replace=False)
    w[np.sort(active)] = rng.normal(0.0, cfg.curl_scale, n_active)
    truth = Truth(s, w, ops.G @ s, ops.curl_basis @ w)
    n_edges = ops.index.n_edges
    if isinstance(cfg.trials, tuple):
        trials = rng.integers(cfg.trials[0], cfg.trials[1] + 1, n_edges)
    else:
        trials = np.full(n_edges, cfg.trials)
    wins = rng.binomial(trials, expit(truth.M))
    return truth, ComparisonData(N, wins, trials)


def compute_mse(truth: Truth, draws: PosteriorDraws, ops: OperatorSet | None = None):
    """(MSE_M, MSE_grad, MSE_curl) of posterior means, per edge."""
    if draws.M.shape[1] != truth.M.shape[0]:
        raise ValueError("draws and truth live on different graphs")
    n_edges = truth.M.shape[0]
    m_hat = posterior_mean(draws.M)
    grad_hat = posterior_mean(draws.M_grad)
    curl_hat = posterior_mean(draws.M_curl)
    return (
        float(np.sum((m_hat - truth.M) ** 2) / n_edges),
        float(np.sum((grad_hat - truth.M_grad) ** 2) / n_edges),
        float(np.sum((curl_hat - truth.M_curl) ** 2) / n_edges),
    )


def compute_recovery_accuracy(truth: Truth, draws: PosteriorDraws, return_zero_count=False):
    """Fraction of edges whose posterior-mean sign matches the truth.

    Edges with a true match-up of exactly zero can never match and count as
    failures; their number is returned too when ``return_zero_count``.
    """
    m_hat = posterior_mean(draws.M)
    acc = float(np.mean(m_hat * truth.M > 0))
    if return_zero_count:
        return acc, int(np.sum(truth.M == 0))
    return acc


def _f1(recall, precision):
    if recall is None or precision is None or recall + precision == 0:
        return None
    return 2 * recall * precision / (recall + precision)


def compute_detection(truth: Truth, draws: PosteriorDraws, alpha_levels=DETECTION_LEVELS,
                      zero_tol: float = 1e-12) -> dict:
    """Recall/precision/F1 of nonzero curl-flow detection per CI level.

    An edge is a true positive when its true curl flow is nonzero (beyond
    ``zero_tol``) and the level-alpha interval of its curl flow excludes 0.
    Undefined ratios are reported as ``None``.
    """
    positive = np.abs(truth.M_curl) > zero_tol
    out = {}
    for alpha in alpha_levels:
        lo, hi = credible_interval(draws.M_curl, alpha)
        detected = (lo > 0) | (hi < 0)
        hits = int(np.sum(positive & detected))
        recall = hits / positive.sum() if positive.any() else None
        precision = hits / detected.sum() if detected.any() else None
        out[float(alpha)] = {"recall": recall, "precision": precision,
                             "f1": _f1(recall, precision)}
    return out


def compute_coverage(truth: Truth, draws: PosteriorDraws, levels=CP_LEVELS) -> dict:
    """Share of edges whose equal-tailed CI contains the truth, per component."""
    pairs = {"M": (draws.M, truth.M), "grad": (draws.M_grad, truth.M_grad),
             "curl": (draws.M_curl, truth.M_curl)}
    out = {}
    for comp, (samples, true) in pairs.items():
        for level in levels:
            lo, hi = credible_interval(samples, level)
            out[(comp, float(level))] = float(np.mean((lo <= true) & (true <= hi)))
    return out


@dataclass
class ReplicationResult:
    replication: int
    model: str
    mse: dict | None = None
    accuracy: float | None = None
    detection: dict | None = None
    coverage: dict | None = None
    global_measure: float | None = None
    seconds: float = 0.0
    error: str | None = None


def score_fit(truth: Truth, draws: PosteriorDraws, replication: int,
              alpha_levels=DETECTION_LEVELS) -> ReplicationResult:
    mse = dict(zip(COMPONENTS, compute_mse(truth, draws)))
    return ReplicationResult(
        replication=replication,
        model=draws.model,
        mse=mse,
        accuracy=compute_recovery_accuracy(truth, draws),
        detection=compute_detection(truth, draws, alpha_levels) if draws.model == "bibt" else None,
        coverage=compute_coverage(truth, draws),
        global_measure=float(global_intransitivity(draws.M_grad, draws.M_curl).mean()),
        seconds=draws.wall_clock,
    )


def run_replication(cfg: SimConfig, replication_id: int, models=("bibt", "baseline"),
                    alpha_levels=DETECTION_LEVELS) -> list[ReplicationResult]:
    ops = build_operators(cfg.n_entities)
    data_seed, bibt_seed, base_seed = replication_seeds(cfg.master_seed, replication_id)
    truth, data = generate_synthetic(cfg, replication_id, ops, np.random.default_rng(data_seed))
    runners = {"bibt": (run_chain, bibt_seed), "baseline": (run_baseline_chain, base_seed)}
    results = []
    for model in models:
        fit, seed = runners[model]
        try:
            draws = fit(data, cfg.mcmc, ops, rng=np.random.default_rng(seed))
        except ChainAbort as exc:
            log.warning("replication %d (%s) aborted: %s", replication_id, model, exc)
            results.append(ReplicationResult(replication_id, model, error=str(exc)))
            continue
        results.append(score_fit(truth, draws, replication_id, alpha_levels))
    return results


def _mean_or_none(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


@dataclass
class StudyReport:
    config: SimConfig
    replications: list[ReplicationResult]
    wall_clock: float = 0.0

    def results_for(self, model: str) -> list[ReplicationResult]:
        return [r for r in self.replications if r.model == model and r.error is None]

    def averages(self, model: str) -> dict:
        """Replication means of every scalar metric for one model."""
        rows = self.results_for(model)
        if not rows:
            return {}
        out = {f"mse_{c}": _mean_or_none([r.mse[c] for r in rows]) for c in COMPONENTS}
        out["accuracy"] = _mean_or_none([r.accuracy for r in rows])
        out["global_measure"] = _mean_or_none([r.global_measure for r in rows])
        out["seconds"] = _mean_or_none([r.seconds for r in rows])
        for key in rows[0].coverage:
            comp, level = key
            out[f"cp{round(level * 100)}_{comp}"] = _mean_or_none([r.coverage[key] for r in rows])
        if rows[0].detection is not None:
            for alpha in rows[0].detection:
                for metric in ("recall", "precision", "f1"):
                    out[f"{metric}_{round(alpha * 100)}"] = _mean_or_none(
                        [r.detection[alpha][metric] for r in rows])
        out["n_ok"] = len(rows)
        return out

    def long_rows(self, include_timing: bool = False):
        """(replication, model, metric, component, level, value) tuples.

        Wall-clock rows are left out unless asked for, so the rows are a
        pure function of the configuration.
        """
        for r in self.replications:
            if r.error is not None:
                continue
            for comp in COMPONENTS:
                yield r.replication, r.model, "mse", comp, "", r.mse[comp]
            yield r.replication, r.model, "accuracy", "M", "", r.accuracy
            yield r.replication, r.model, "global_measure", "", "", r.global_measure
            for (comp, level), v in r.coverage.items():
                yield r.replication, r.model, "cp", comp, level, v
            for alpha, vals in (r.detection or {}).items():
                for metric in ("recall", "precision", "f1"):
                    yield r.replication, r.model, metric, "curl", alpha, vals[metric]
            if include_timing:
                yield r.replication, r.model, "seconds", "", "", r.seconds

    def reference(self) -> dict | None:
        key = (self.config.n_entities, self.config.trials_label, float(self.config.sparsity))
        return REFERENCE_TABLES.get(key)


def _replication_task(args):
    cfg, rep = args
    return run_replication(cfg, rep)


def run_study(cfg: SimConfig, jobs: int | None = 1) -> StudyReport:
    """Generate, fit and score every replication; aggregation order is fixed
    by replication id so the report does not depend on ``jobs``."""
    started = time.perf_counter()
    tasks = [(cfg, rep) for rep in range(cfg.replications)]
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_replication_task, tasks))
    else:
        chunks = [_replication_task(t) for t in tasks]
    results = [r for chunk in chunks for r in chunk]
    return StudyReport(cfg, results, time.perf_counter() - started)


def run_sweep(cfg: SimConfig, sparsities=(0.0, 0.25, 0.5, 0.75, 1.0), jobs: int | None = 1):
    """Studies over a sparsity grid; returns {sparsity: StudyReport}."""
    return {float(sp): run_study(replace(cfg, sparsity=float(sp)), jobs) for sp in sparsities}


def sweep_rows(reports: dict):
    """(sparsity, model, metric, value) rows of replication-averaged metrics,
    timings excluded."""
    for sparsity, report in reports.items():
        for model in ("bibt", "baseline"):
            for metric, value in report.averages(model).items():
                if metric != "seconds":
                    yield sparsity, model, metric, value


def config_dict(cfg: SimConfig) -> dict:
    d = asdict(cfg)
    d["trials"] = list(cfg.trials) if isinstance(cfg.trials, tuple) else cfg.trials
    return d
