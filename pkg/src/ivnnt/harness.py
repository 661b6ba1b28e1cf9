"""Monte Carlo study runner: repeated generate -> estimate cycles and summaries."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dgp import DgpConfig, DgpTruth, generate, solve_beta
from .domain import IDX, INDEX_NAMES, IVNNTError, PsiStatus
from .estimator import NaiveMode, g_estimate, instrument_strength, naive_estimates
from .variance import NONINFORMATIVE_UPPER, Excluded, NonFiniteEntry, sandwich

__all__ = [
    "StudyConfig",
    "StudySummary",
    "ReplicationResult",
    "run_study",
    "instrument_strength",
    "stream_seed",
]

_DEPENDS = {"ein": ("psi1",), "nne": ("psi0",), "nnt": ("psi0", "psi1")}


@dataclass(frozen=True)
class StudyConfig:
    dgp: DgpConfig
    sample_sizes: tuple[int, ...] = (500, 1000, 2000, 4000)
    replications: int = 1000
    ci_level: float = 0.95
    baseline_mode: str = "adjust_for_instrument"
    master_seed: int = 20240101

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise ValueError("sample sizes must be >= 1")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must lie in (0, 1)")
        NaiveMode(self.baseline_mode)


def stream_seed(master_seed: int, n: int, replication: int) -> np.random.SeedSequence:
    """Independent, reproducible stream for one (sample size, replication) pair."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(n), int(replication)))


@dataclass
class ReplicationResult:
    n: int
    replication: int
    status: str                       # ok | excluded | failed
    estimate: dict[str, float]
    ci: dict[str, tuple[float, float]]
    se: dict[str, float]
    index_status: dict[str, str]      # ok | no_solution | excluded | failed
    baseline: dict[str, float]
    instrument_wald: float
    bread_condition_number: float = float("nan")
    message: str = ""


def _nan_dict():
    return {k: float("nan") for k in INDEX_NAMES}


def run_replication(truth: DgpTruth, dgp: DgpConfig, n: int, replication: int,
                    master_seed: int, ci_level: float, baseline_mode: str) -> ReplicationResult:
    """One generate/estimate cycle. Failures are recorded, never raised."""
    seed = stream_seed(master_seed, n, replication)
    est, se = _nan_dict(), _nan_dict()
    ci = {k: (float("nan"), float("nan")) for k in INDEX_NAMES}
    base = _nan_dict()
    wald = float("nan")
    try:
        data = generate(truth, dgp, n, seed)
        wald = instrument_strength(data)
        nb = naive_estimates(data, baseline_mode)
        base = {"ein": nb.ein, "nne": nb.nne, "nnt": nb.nnt}
        fit = g_estimate(data, dgp.spec)
    except IVNNTError as exc:
        return ReplicationResult(n, replication, "failed", est, ci, se, {k: "failed" for k in INDEX_NAMES},
                                 base, wald, message=f"{type(exc).__name__}: {exc}")
    theta = fit.theta_hat
    solved = {"psi0": fit.psi0.status is PsiStatus.SOLVED, "psi1": fit.psi1.status is PsiStatus.SOLVED}
    status = {k: "ok" if all(solved[p] for p in _DEPENDS[k]) else "no_solution" for k in INDEX_NAMES}
    for k in INDEX_NAMES:
        est[k] = theta[k]
    try:
        sw = sandwich(data, theta, dgp.spec, ci_level)
    except (Excluded, NonFiniteEntry) as exc:
        cond = getattr(exc, "condition_number", float("nan"))
        status = {k: ("excluded" if v == "ok" else v) for k, v in status.items()}
        return ReplicationResult(n, replication, "excluded", est, ci, se, status, base, wald, cond, str(exc))
    for k in INDEX_NAMES:
        if status[k] == "ok":
            ci[k] = sw.index_ci(k)
            se[k] = float(sw.se[IDX[k]])
    return ReplicationResult(n, replication, "ok", est, ci, se, status, base, wald, sw.bread_condition_number)


@dataclass
class IndexSummary:
    n: int
    index: str
    truth: float
    replications: int
    n_evaluated: int
    n_excluded: int
    n_no_solution: int
    n_failed: int
    n_infinite: int
    coverage: float
    se_mc: float
    se_sandwich_mean: float
    avg_bias: float
    mean_estimate: float
    median_estimate: float
    pct_inf_ci: float
    pct_excluded: float
    mean_instrument_wald: float
    baseline_median: float
    baseline_n_infinite: int


@dataclass
class StudySummary:
    config: StudyConfig
    truth: DgpTruth
    rows: list[IndexSummary]
    replications: list[ReplicationResult] = field(repr=False)

    def row(self, n: int, index: str) -> IndexSummary:
        for r in self.rows:
            if r.n == n and r.index == index:
                return r
        raise KeyError((n, index))

    # -- serialisation ----------------------------------------------------
    def summary_csv(self) -> str:
        cols = list(IndexSummary.__dataclass_fields__)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in cols])
        return buf.getvalue()

    def estimates_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replication", "n", "index", "method", "estimate", "ci_lower", "ci_upper", "status"])
        for rep in self.replications:
            for k in INDEX_NAMES:
                lo, hi = rep.ci[k]
                w.writerow([rep.replication, rep.n, k, "iv", _fmt(rep.estimate[k]), _fmt(lo), _fmt(hi),
                            rep.index_status[k]])
                bstat = "failed" if rep.status == "failed" else "ok"
                w.writerow([rep.replication, rep.n, k, "baseline", _fmt(rep.baseline[k]), "", "", bstat])
        return buf.getvalue()

    def to_json(self) -> str:
        cfg = self.config
        payload = {
            "link": cfg.dgp.spec.link.value,
            "dgp": {k: v for k, v in asdict(cfg.dgp).items() if k != "spec"},
            "study": {
                "sample_sizes": list(cfg.sample_sizes),
                "replications": cfg.replications,
                "ci_level": cfg.ci_level,
                "baseline_mode": cfg.baseline_mode,
                "master_seed": cfg.master_seed,
            },
            "truth": self.truth.to_dict(),
            "summary": [{k: getattr(r, k) for k in IndexSummary.__dataclass_fields__} for r in self.rows],
        }
        return dumps(payload)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj) -> str:
    """JSON with full float precision; NaN -> null, +/-inf -> "inf"/"-inf"."""
    return json.dumps(_json_safe(obj), indent=2, allow_nan=False)


def _summarise(n, index, truth_value, reps: list[ReplicationResult]) -> IndexSummary:
    m = len(reps)
    stat = [r.index_status[index] for r in reps]
    ok = [r for r, s in zip(reps, stat) if s == "ok"]
    est = np.array([r.estimate[index] for r in ok])
    fin = est[np.isfinite(est)]
    covered = sum(1 for r in ok if r.ci[index][0] <= truth_value <= r.ci[index][1])
    upper = np.array([r.ci[index][1] for r in ok])
    ses = np.array([r.se[index] for r in ok])
    ses = ses[np.isfinite(ses)]
    walds = np.array([r.instrument_wald for r in reps])
    walds = walds[np.isfinite(walds)]
    base = np.array([r.baseline[index] for r in reps if r.status != "failed"])
    nan = float("nan")
    return IndexSummary(
        n=n,
        index=index,
        truth=truth_value,
        replications=m,
        n_evaluated=len(ok),
        n_excluded=stat.count("excluded"),
        n_no_solution=stat.count("no_solution"),
        n_failed=stat.count("failed"),
        n_infinite=int(np.sum(np.isinf(est))),
        coverage=covered / len(ok) if ok else nan,
        se_mc=float(np.std(fin, ddof=1)) if fin.size > 1 else nan,
        se_sandwich_mean=float(np.mean(ses)) if ses.size else nan,
        avg_bias=float(np.mean(np.abs(fin - truth_value))) if fin.size else nan,
        mean_estimate=float(np.mean(fin)) if fin.size else nan,
        median_estimate=float(np.median(est)) if est.size else nan,
        pct_inf_ci=float(np.mean(upper > NONINFORMATIVE_UPPER)) if ok else nan,
        pct_excluded=stat.count("excluded") / m,
        mean_instrument_wald=float(np.mean(walds)) if walds.size else nan,
        baseline_median=float(np.median(base)) if base.size else nan,
        baseline_n_infinite=int(np.sum(np.isinf(base))),
    )


def _run_chunk(args):
    truth, dgp, n, reps, master_seed, level, mode = args
    return [run_replication(truth, dgp, n, r, master_seed, level, mode) for r in reps]


def run_study(config: StudyConfig, truth: DgpTruth | None = None, workers: int = 1,
              progress=None) -> StudySummary:
    """Run every replication for every sample size and aggregate.

    Output is identical for any ``workers`` value: each replication has its
    own seed stream and results are aggregated in replication order.
    """
    if truth is None:
        truth = solve_beta(config.dgp)
    tasks = []
    chunk = 50
    for n in config.sample_sizes:
        for start in range(0, config.replications, chunk):
            reps = range(start, min(start + chunk, config.replications))
            tasks.append((truth, config.dgp, n, reps, config.master_seed, config.ci_level,
                          config.baseline_mode))
    results: list[ReplicationResult] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, tasks):
                results.extend(part)
                if progress:
                    progress(len(results))
    else:
        for t in tasks:
            results.extend(_run_chunk(t))
            if progress:
                progress(len(results))
    truths = {"ein": truth.ein_true, "nne": truth.nne_true, "nnt": truth.nnt_true}
    rows = []
    for n in config.sample_sizes:
        reps = [r for r in results if r.n == n]
        rows.extend(_summarise(n, k, truths[k], reps) for k in INDEX_NAMES)
    return StudySummary(config, truth, rows, results)
