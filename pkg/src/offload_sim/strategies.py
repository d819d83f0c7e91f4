"""Offloading strategies: pure functions from a decision-time view to an executor."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Union

from .core_model import CostEstimate, HostId, JobSpec
from .estimation import View, full_estimate


class Fallback(enum.Enum):
    TMIN = "tmin"
    CANCEL = "cancel"


@dataclass(frozen=True)
class Local:
    name = "local"


@dataclass(frozen=True)
class Server:
    host: HostId
    name = "server"


@dataclass(frozen=True)
class TMin:
    name = "tmin"


@dataclass(frozen=True)
class EMin:
    name = "emin"


@dataclass(frozen=True)
class Hybrid:
    fallback: Fallback = Fallback.TMIN
    name = "hybrid"


@dataclass(frozen=True)
class Balanced:
    fallback: Fallback = Fallback.TMIN
    name = "balanced"


@dataclass(frozen=True)
class LocalFirst:
    inner: "Strategy"

    @property
    def name(self) -> str:
        return f"lf:{self.inner.name}"


Strategy = Union[Local, Server, TMin, EMin, Hybrid, Balanced, LocalFirst]

STRATEGY_NAMES = (
    "local",
    "server",
    "tmin",
    "emin",
    "hybrid",
    "balanced",
    "lf:tmin",
    "lf:hybrid",
    "lf:balanced",
)


def parse_strategy(
    name: str, server: Optional[HostId] = None, fallback: Union[str, Fallback] = "tmin"
) -> Strategy:
    """Build a Strategy from its config name.

    ``server:<host>`` names the SERVER target inline; otherwise ``server``
    must be passed.
    """
    fb = Fallback(fallback) if isinstance(fallback, str) else fallback
    key = name.strip().lower()
    if key.startswith("server:"):
        key, server = "server", name.split(":", 1)[1].strip()
    if key.startswith("lf:"):
        inner = key[3:]
        if inner not in ("tmin", "hybrid", "balanced"):
            raise ValueError(f"unknown strategy {name!r}")
        return LocalFirst(parse_strategy(inner, fallback=fb))
    if key == "local":
        return Local()
    if key == "server":
        if not server:
            raise ValueError("server strategy needs a target host")
        return Server(server)
    if key == "tmin":
        return TMin()
    if key == "emin":
        return EMin()
    if key == "hybrid":
        return Hybrid(fb)
    if key == "balanced":
        return Balanced(fb)
    raise ValueError(f"unknown strategy {name!r}; expected one of {', '.join(STRATEGY_NAMES)}")


@dataclass(frozen=True)
class Decision:
    executor: Optional[HostId]  # None means cancelled
    estimate: Optional[CostEstimate]
    feasible_set: FrozenSet[HostId]
    estimates: Dict[HostId, CostEstimate]

    @property
    def cancelled(self) -> bool:
        return self.executor is None


def _argmin(estimates: Dict[HostId, CostEstimate], hosts, key) -> HostId:
    # ties go to the lowest host id
    return min(hosts, key=lambda h: (key(estimates[h]), h))


def _time(e: CostEstimate) -> float:
    return e.total_time


def _energy(e: CostEstimate) -> float:
    return e.total_energy


def _choose(strategy: Strategy, spec: JobSpec, view: View, estimates, feasible, rng) -> Optional[HostId]:
    if isinstance(strategy, Local):
        return spec.origin
    if isinstance(strategy, Server):
        return strategy.host
    if isinstance(strategy, TMin):
        return _argmin(estimates, estimates, _time)
    if isinstance(strategy, EMin):
        return _argmin(estimates, estimates, _energy)
    if isinstance(strategy, (Hybrid, Balanced)):
        if not feasible:
            if strategy.fallback is Fallback.CANCEL:
                return None
            return _argmin(estimates, estimates, _time)
        if isinstance(strategy, Hybrid):
            return _argmin(estimates, feasible, _energy)
        ordered = sorted(feasible)
        return ordered[int(rng.integers(len(ordered)))]
    if isinstance(strategy, LocalFirst):
        local = estimates.get(spec.origin)
        if local is not None and local.total_time <= spec.relative_deadline:
            return spec.origin
        return _choose(strategy.inner, spec, view, estimates, feasible, rng)
    raise TypeError(f"not a strategy: {strategy!r}")


def decide(strategy: Strategy, spec: JobSpec, view: View, rng=None) -> Decision:
    """Pick the executor for ``spec`` from the hosts in ``view.workers``.

    Only Balanced draws from ``rng`` (a numpy Generator).
    """
    estimates = {h: full_estimate(spec, spec.origin, h, view) for h in view.workers}
    feasible = frozenset(h for h, e in estimates.items() if e.total_time <= spec.relative_deadline)
    executor = _choose(strategy, spec, view, estimates, feasible, rng)
    if executor is None:
        return Decision(None, None, feasible, estimates)
    est = estimates.get(executor)
    if est is None:
        est = full_estimate(spec, spec.origin, executor, view)
    return Decision(executor, est, feasible, estimates)
