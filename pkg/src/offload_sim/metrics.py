"""Evaluation metrics over finished runs, cross-run aggregation and CSV output."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .core_model import JOULES_PER_MWH, HostId, JobRecord, Outcome, deadline_met

Z95 = 1.96

RUNS_COLUMNS = (
    "scenario",
    "strategy",
    "lambda",
    "deadline",
    "seed",
    "energy_mwh_per_job",
    "mean_time_s",
    "qos",
    "offload_ratio",
    "est_error",
    "jobs_released",
    "jobs_completed",
)


def _completed(records: Iterable[JobRecord]) -> List[JobRecord]:
    return [r for r in records if r.outcome is Outcome.COMPLETED]


def energy_per_job(ledger, records: Sequence[JobRecord]) -> Optional[float]:
    """Energy of every host, idle time included, per completed job, in mWh."""
    done = len(_completed(records))
    if done == 0:
        return None
    return ledger.total() / JOULES_PER_MWH / done


def qos(records: Sequence[JobRecord]) -> Optional[float]:
    """Fraction of released jobs that completed by their deadline."""
    if not records:
        return None
    return sum(1 for r in _completed(records) if deadline_met(r)) / len(records)


def mean_completion_time(records: Sequence[JobRecord]) -> Optional[float]:
    done = _completed(records)
    if not done:
        return None
    return sum(r.completion_span for r in done) / len(done)


def relative_error(estimate: float, actual: float) -> float:
    """(actual - estimate) / actual: negative when the estimate was pessimistic."""
    return (actual - estimate) / actual


def estimation_error(records: Sequence[JobRecord]) -> Optional[float]:
    """Mean signed relative error of the decision-time T estimate against the
    release-to-completion span."""
    errs = [
        relative_error(r.estimate_at_decision.total_time, r.completion_span)
        for r in _completed(records)
        if r.estimate_at_decision is not None and r.completion_span > 0
    ]
    if not errs:
        return None
    return sum(errs) / len(errs)


def flow_matrix(records: Sequence[JobRecord]) -> Dict[Tuple[HostId, HostId], int]:
    return dict(Counter((r.spec.origin, r.executor) for r in _completed(records)))


def per_device_share(flows: Dict[Tuple[HostId, HostId], int], hosts: Sequence[HostId] = ()) -> Dict[HostId, float]:
    total = sum(flows.values())
    counts: Dict[HostId, int] = {h: 0 for h in hosts}
    for (_, executor), n in flows.items():
        counts[executor] = counts.get(executor, 0) + n
    if total == 0:
        return {h: 0.0 for h in counts}
    return {h: n / total for h, n in counts.items()}


def offload_ratio(flows: Dict[Tuple[HostId, HostId], int]) -> Optional[float]:
    total = sum(flows.values())
    if total == 0:
        return None
    local = sum(n for (o, e), n in flows.items() if o == e)
    return 1.0 - local / total


@dataclass
class RunMetrics:
    scenario: str
    strategy: str
    lam: float
    deadline: float
    seed: int
    energy_per_job: Optional[float]
    mean_completion_time: Optional[float]
    qos: Optional[float]
    offload_ratio: Optional[float]
    per_device_share: Dict[HostId, float]
    flow_matrix: Dict[Tuple[HostId, HostId], int]
    mean_relative_estimation_error: Optional[float]
    jobs_released: int = 0
    jobs_completed: int = 0
    extra: Dict[str, float] = field(default_factory=dict)

    def row(self) -> Dict[str, object]:
        return {
            "scenario": self.scenario,
            "strategy": self.strategy,
            "lambda": self.lam,
            "deadline": self.deadline,
            "seed": self.seed,
            "energy_mwh_per_job": self.energy_per_job,
            "mean_time_s": self.mean_completion_time,
            "qos": self.qos,
            "offload_ratio": self.offload_ratio,
            "est_error": self.mean_relative_estimation_error,
            "jobs_released": self.jobs_released,
            "jobs_completed": self.jobs_completed,
        }


def compute_metrics(result, scenario: Optional[str] = None) -> RunMetrics:
    cfg = result.config
    records = result.records
    flows = flow_matrix(records)
    return RunMetrics(
        scenario=scenario or cfg.name,
        strategy=cfg.strategy,
        lam=cfg.lam,
        deadline=cfg.deadline,
        seed=result.seed,
        energy_per_job=energy_per_job(result.ledger, records),
        mean_completion_time=mean_completion_time(records),
        qos=qos(records),
        offload_ratio=offload_ratio(flows),
        per_device_share=per_device_share(flows, [h.host for h in cfg.workers]),
        flow_matrix=flows,
        mean_relative_estimation_error=estimation_error(records),
        jobs_released=len(records),
        jobs_completed=len(_completed(records)),
    )


@dataclass(frozen=True)
class Summary:
    mean: float
    half_width: float
    n: int


def mean_ci(values: Sequence[float]) -> Summary:
    """Mean and 95% gaussian half-width 1.96 * s / sqrt(n) (sample std)."""
    vals = [v for v in values if v is not None]
    n = len(vals)
    if n == 0:
        return Summary(math.nan, math.nan, 0)
    mean = sum(vals) / n
    if n < 2:
        return Summary(mean, math.nan, n)
    var = sum((v - mean) ** 2 for v in vals) / (n - 1)
    return Summary(mean, Z95 * math.sqrt(var) / math.sqrt(n), n)


AGGREGATED = (
    "energy_per_job",
    "mean_completion_time",
    "qos",
    "offload_ratio",
    "mean_relative_estimation_error",
)


def aggregate(runs: Sequence[RunMetrics]) -> Dict[str, Summary]:
    if len(runs) < 2:
        raise ValueError("aggregate needs at least two runs")
    out = {name: mean_ci([getattr(r, name) for r in runs]) for name in AGGREGATED}
    hosts = sorted({h for r in runs for h in r.per_device_share})
    for h in hosts:
        out[f"share:{h}"] = mean_ci([r.per_device_share.get(h, 0.0) for r in runs])
    return out


# -- CSV ---------------------------------------------------------------------


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6g}"
    return str(value)


def write_runs_csv(path, runs: Sequence[RunMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUNS_COLUMNS)
        for r in runs:
            row = r.row()
            w.writerow([fmt(row[c]) for c in RUNS_COLUMNS])


def write_flows_csv(path, runs: Sequence[RunMetrics]) -> None:
    """Job counts per (origin, executor), summed over the runs of each scenario/strategy cell."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("scenario", "origin", "executor", "count"))
        for key, flows in _group(runs, lambda r: r.flow_matrix, _sum_counts):
            for (o, e), n in sorted(flows.items()):
                w.writerow((key, o, e, n))


def write_shares_csv(path, runs: Sequence[RunMetrics]) -> None:
    """Per-host fraction of completed jobs, pooled over the runs of each cell."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("scenario", "host", "fraction"))
        for key, flows in _group(runs, lambda r: r.flow_matrix, _sum_counts):
            hosts = sorted({h for r in runs if cell_key(r) == key for h in r.per_device_share})
            for h, frac in sorted(per_device_share(flows, hosts).items()):
                w.writerow((key, h, fmt(float(frac))))


def cell_key(r: RunMetrics) -> str:
    return f"{r.scenario}/{r.strategy}/l={fmt(float(r.lam))}/d={fmt(float(r.deadline))}"


def _sum_counts(items):
    total: Counter = Counter()
    for flows in items:
        total.update(flows)
    return dict(total)


def _group(runs, getter, combine):
    keys: List[str] = []
    buckets: Dict[str, list] = {}
    for r in runs:
        k = cell_key(r)
        if k not in buckets:
            keys.append(k)
            buckets[k] = []
        buckets[k].append(getter(r))
    return [(k, combine(buckets[k])) for k in keys]
