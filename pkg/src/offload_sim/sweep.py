"""Grid sweeps over (lambda, deadline, strategy) with repeated seeded runs."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import ScenarioConfig, validate
from .metrics import RunMetrics, compute_metrics, write_flows_csv, write_runs_csv, write_shares_csv
from .sim_engine import run

log = logging.getLogger(__name__)

THREADS_ENV = "OFFLOAD_SIM_THREADS"


@dataclass(frozen=True)
class Cell:
    index: int  # position of (lam, deadline) in the grid; strategy does not count
    lam: float
    deadline: float
    strategy: str


def grid_cells(lambdas: Sequence[float], deadlines: Sequence[float], strategies: Sequence[str]) -> List[Cell]:
    """Every (lambda, d <= lambda, strategy) combination, in input order."""
    cells = []
    index = 0
    for lam in lambdas:
        for d in deadlines:
            if d > lam:
                continue
            cells.extend(Cell(index, float(lam), float(d), s) for s in strategies)
            index += 1
    return cells


def cell_seed(master: int, cell_index: int, rep: int) -> int:
    """Workload seed of one repetition; shared by every strategy of the cell."""
    return int(np.random.SeedSequence([master, cell_index, rep]).generate_state(1, dtype=np.uint32)[0])


def max_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
    return os.cpu_count() or 1


def _one(task: Tuple[ScenarioConfig, int]) -> RunMetrics:
    cfg, seed = task
    return compute_metrics(run(cfg, seed))


def run_tasks(tasks: Sequence[Tuple[ScenarioConfig, int]], workers: Optional[int] = None) -> List[RunMetrics]:
    """Run (config, seed) pairs, in parallel when allowed; results keep input order."""
    workers = min(workers or max_workers(), len(tasks)) if tasks else 1
    if workers <= 1:
        return [_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one, tasks, chunksize=1))


def repetitions(cfg: ScenarioConfig, reps: Optional[int] = None, master_seed: Optional[int] = None, cell_index: int = 0):
    """The (config, seed) tasks of a single cell."""
    master = cfg.seed if master_seed is None else master_seed
    n = cfg.repetitions if reps is None else reps
    return [(cfg, cell_seed(master, cell_index, r)) for r in range(n)]


def sweep(
    base: ScenarioConfig,
    lambdas: Sequence[float],
    deadlines: Sequence[float],
    strategies: Sequence[str],
    reps: Optional[int] = None,
    master_seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> List[RunMetrics]:
    """Run every grid cell ``reps`` times; rows come back in grid order."""
    tasks = []
    for cell in grid_cells(lambdas, deadlines, strategies):
        cfg = validate(base.replace(lam=cell.lam, deadline=cell.deadline, strategy=cell.strategy))
        tasks.extend(repetitions(cfg, reps, master_seed, cell.index))
    log.info("sweep: %d runs", len(tasks))
    return run_tasks(tasks, workers)


def write_outputs(out_dir, runs: Sequence[RunMetrics]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_runs_csv(out / "runs.csv", runs)
    write_flows_csv(out / "flows.csv", runs)
    write_shares_csv(out / "shares.csv", runs)
    return out
