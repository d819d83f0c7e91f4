"""Discrete-event simulation of job release, offloading, execution and return."""

from __future__ import annotations

import enum
import heapq
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ScenarioConfig
from .core_model import (
    DEFAULT_INPUT_SIZE,
    DEFAULT_OUTPUT_SIZE,
    DeviceProfile,
    HostId,
    JobRecord,
    JobSpec,
    Outcome,
    link_rate,
)
from .estimation import JobEvent, NoEstimate, Profiler, View
from .strategies import decide
from .worker import WorkerQueue

log = logging.getLogger(__name__)

REGIMES = ("idle", "compute", "upload", "download")

# stream tags for seeding; the workload streams never depend on the strategy
_ARRIVALS, _JITTER, _BALANCED = 0, 1, 2


class EventKind(enum.IntEnum):
    JOB_RELEASE = 0
    TRANSFER_IN_DONE = 1
    EXEC_END = 2
    TRANSFER_OUT_DONE = 3
    DISSEMINATION_TICK = 4
    SIM_END = 5


@dataclass(order=True)
class Event:
    time: float
    seq: int
    kind: EventKind = field(compare=False)
    payload: object = field(compare=False, default=None)


class EventQueue:
    def __init__(self):
        self._heap: List[Event] = []
        self._seq = itertools.count()
        self.now = 0.0

    def schedule(self, time: float, kind: EventKind, payload=None) -> Event:
        if time < self.now:
            raise ValueError(f"cannot schedule {kind.name} at {time} < now {self.now}")
        ev = Event(time, next(self._seq), kind, payload)
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> Event:
        ev = heapq.heappop(self._heap)
        self.now = ev.time
        return ev

    def __len__(self) -> int:
        return len(self._heap)


# -- energy ------------------------------------------------------------------


class EnergyLedger:
    """Per-host energy by regime, accrued over intervals that tile [0, end].

    When several regimes overlap (e.g. computing while uploading), power is
    the idle draw plus each active regime's increment over idle.
    """

    def __init__(self, profiles: Sequence[DeviceProfile]):
        self.profiles = {p.host: p for p in profiles}
        self.joules: Dict[HostId, Dict[str, float]] = {p.host: dict.fromkeys(REGIMES, 0.0) for p in profiles}
        self.intervals: Dict[HostId, List[Tuple[float, float, frozenset]]] = {p.host: [] for p in profiles}
        self._since = {p.host: 0.0 for p in profiles}
        self._state = {p.host: frozenset() for p in profiles}
        self.end: Optional[float] = None

    def power(self, host: HostId, active: frozenset) -> float:
        prof = self.profiles[host]
        return prof.p_idle + sum(prof.power(r) - prof.p_idle for r in active)

    def state(self, host: HostId) -> frozenset:
        return self._state[host]

    def update(self, host: HostId, now: float, active: frozenset) -> None:
        if active == self._state[host]:
            return
        self._accrue(host, now)
        self._state[host] = active

    def _accrue(self, host: HostId, now: float) -> None:
        start = self._since[host]
        dt = now - start
        if dt < 0:
            raise ValueError("ledger time went backwards")
        active = self._state[host]
        prof = self.profiles[host]
        bucket = self.joules[host]
        if not active:
            bucket["idle"] += prof.p_idle * dt
        else:
            share = prof.p_idle * dt / len(active)
            for r in active:
                bucket[r] += (prof.power(r) - prof.p_idle) * dt + share
        if dt > 0:
            self.intervals[host].append((start, now, active))
        self._since[host] = now

    def close(self, end: float) -> None:
        for host in self.profiles:
            self._accrue(host, end)
        self.end = end

    def host_total(self, host: HostId) -> float:
        return sum(self.joules[host].values())

    def total(self) -> float:
        return sum(self.host_total(h) for h in self.profiles)

    def covered(self, host: HostId) -> float:
        return sum(b - a for a, b, _ in self.intervals[host])


# -- workload ----------------------------------------------------------------


def generate_arrivals(lam: float, duration: float, rng: np.random.Generator) -> List[float]:
    """Release times of a Poisson process with mean gap ``lam`` on [0, duration)."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    if duration <= 0:
        raise ValueError("duration must be > 0")
    times = []
    # draw in blocks; the sequence is the same as drawing one at a time
    t = 0.0
    block = max(16, int(2 * duration / lam) + 16)
    while True:
        gaps = rng.exponential(lam, size=block)
        for g in gaps:
            t += g
            if t >= duration:
                return times
            times.append(t)


def generate_workload(
    generators: Sequence[HostId],
    lam: float,
    deadline: float,
    duration: float,
    seed: int,
    input_size: float = DEFAULT_INPUT_SIZE,
    output_size: float = DEFAULT_OUTPUT_SIZE,
) -> Dict[HostId, List[JobSpec]]:
    """Independent Poisson job streams per generator, each with its own seed stream.

    Job ids are unique across generators and ordered by release time.
    """
    raw = []
    for idx, host in enumerate(generators):
        arrivals = generate_arrivals(lam, duration, np.random.default_rng([seed, idx, _ARRIVALS]))
        jitter = np.random.default_rng([seed, idx, _JITTER]).uniform(-1.0, 1.0, size=len(arrivals))
        raw.extend((t, idx, host, float(u)) for t, u in zip(arrivals, jitter))
    raw.sort(key=lambda r: (r[0], r[1]))
    out: Dict[HostId, List[JobSpec]] = {h: [] for h in generators}
    for job_id, (t, _, host, u) in enumerate(raw):
        out[host].append(JobSpec(job_id, host, float(t), deadline, input_size, output_size, u))
    return out


# -- transfers ---------------------------------------------------------------


@dataclass
class _Transfer:
    job_id: int
    src: HostId
    dst: HostId
    nbytes: float
    start: float
    kind: EventKind
    remaining_bits: float = 0.0
    rate: float = 0.0
    last: float = 0.0
    version: int = 0


@dataclass
class _Live:
    spec: JobSpec
    executor: HostId
    decision_time: float
    estimate: object
    duration: float
    transfer_in_done: Optional[float] = None
    exec_start: Optional[float] = None
    exec_end: Optional[float] = None


@dataclass(frozen=True)
class TraceEntry:
    time: float
    kind: str
    host: Optional[HostId]
    job: Optional[int]


@dataclass(frozen=True)
class RunResult:
    config: ScenarioConfig
    seed: int
    records: Tuple[JobRecord, ...]
    ledger: EnergyLedger
    trace: Tuple[TraceEntry, ...]
    end_time: float
    released: int = 0
    final_estimates: Dict[HostId, Dict[str, Optional[float]]] = field(default_factory=dict)

    def write_trace(self, path) -> None:
        with open(path, "w") as fh:
            for e in self.trace:
                fh.write(json.dumps({"time": e.time, "kind": e.kind, "host": e.host, "job": e.job}) + "\n")


class Simulator:
    def __init__(self, config: ScenarioConfig, seed: Optional[int] = None):
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.strategy = config.strategy_obj()
        self.profiles: Dict[HostId, DeviceProfile] = {p.host: p for p in config.hosts}
        self.worker_ids = tuple(sorted(p.host for p in config.hosts if p.role.executes))
        self.profilers = {
            p.host: Profiler.seeded(p, config.hosts, config.window) for p in config.hosts
        }
        self.workers = {h: WorkerQueue(h) for h in self.worker_ids}
        self.views: Dict[HostId, Dict[HostId, object]] = {h: {} for h in self.profiles}
        self.ledger = EnergyLedger(config.hosts)
        self.queue = EventQueue()
        self.records: Dict[int, JobRecord] = {}
        self.live: Dict[int, _Live] = {}
        self.trace: List[TraceEntry] = []
        self.transfers: Dict[Tuple[int, EventKind], _Transfer] = {}
        self.n_up = dict.fromkeys(self.profiles, 0)
        self.n_down = dict.fromkeys(self.profiles, 0)
        self.outstanding = 0
        self.released = 0
        self.draining = False
        self.end_time: Optional[float] = None
        gen_ids = [p.host for p in config.hosts if p.role.generates]
        self._balanced_rng = {
            h: np.random.default_rng([self.seed, i, _BALANCED]) for i, h in enumerate(gen_ids)
        }
        self.workload = generate_workload(
            gen_ids,
            config.lam,
            config.deadline,
            config.duration,
            self.seed,
            config.input_size,
            config.output_size,
        )

    # -- driver --

    def run(self) -> RunResult:
        for jobs in self.workload.values():
            for spec in jobs:
                self.queue.schedule(spec.release_time, EventKind.JOB_RELEASE, spec)
        self.disseminate(0.0)
        if self.config.dissemination_period > 0:
            self.queue.schedule(self.config.dissemination_period, EventKind.DISSEMINATION_TICK)
        self.queue.schedule(self.config.duration, EventKind.SIM_END)
        handlers = {
            EventKind.JOB_RELEASE: self._on_release,
            EventKind.TRANSFER_IN_DONE: self._on_transfer_done,
            EventKind.TRANSFER_OUT_DONE: self._on_transfer_done,
            EventKind.EXEC_END: self._on_exec_end,
            EventKind.DISSEMINATION_TICK: self._on_tick,
            EventKind.SIM_END: self._on_sim_end,
        }
        while self.end_time is None:
            ev = self.queue.pop()
            handlers[ev.kind](ev)
        self.ledger.close(self.end_time)
        records = tuple(self.records[k] for k in sorted(self.records))
        finals = {
            h: {
                "te_avg": p.te.value_or_none(),
                "pc_avg": p.pc.value_or_none(),
                "pu_avg": p.pu.value_or_none(),
                "pd_avg": p.pd.value_or_none(),
            }
            for h, p in self.profilers.items()
        }
        return RunResult(
            self.config, self.seed, records, self.ledger, tuple(self.trace), self.end_time, self.released, finals
        )

    def _log(self, kind: str, host=None, job=None) -> None:
        self.trace.append(TraceEntry(self.queue.now, kind, host, job))

    # -- state dissemination --

    def disseminate(self, now: float) -> None:
        snaps = {h: p.snapshot(now) for h, p in self.profilers.items()}
        for viewer in self.views:
            view = self.views[viewer]
            for h, s in snaps.items():
                if h != viewer:
                    view[h] = s
        for h in self.profilers:
            self._sample_power(h)

    def _on_tick(self, ev: Event) -> None:
        self._log("tick")
        self.disseminate(ev.time)
        if not self.draining or self.outstanding > 0:
            self.queue.schedule(ev.time + self.config.dissemination_period, EventKind.DISSEMINATION_TICK)

    def build_view(self, origin: HostId, now: float) -> View:
        if self.config.dissemination_period == 0:
            snaps = {h: p.snapshot(now) for h, p in self.profilers.items()}
        else:
            snaps = dict(self.views[origin])
            snaps[origin] = self.profilers[origin].snapshot(now)
        return View(
            origin=origin,
            now=now,
            snapshots=snaps,
            links=self.profilers[origin].links(),
            workers=self.worker_ids,
            corrected_tc=self.config.corrected_tc,
        )

    # -- energy / power bookkeeping --

    def _refresh(self, host: HostId) -> None:
        prof = self.profilers[host]
        prof.flags.uploading = self.n_up[host] > 0
        prof.flags.downloading = self.n_down[host] > 0
        active = frozenset(
            r
            for r, on in (
                ("compute", prof.flags.computing),
                ("upload", prof.flags.uploading),
                ("download", prof.flags.downloading),
            )
            if on
        )
        changed = active != self.ledger.state(host)
        self.ledger.update(host, self.queue.now, active)
        if changed:
            self._sample_power(host)

    def _sample_power(self, host: HostId) -> None:
        prof = self.profilers[host]
        prof.on_power_sample(self.ledger.power(host, self.ledger.state(host)), prof.flags)

    # -- job lifecycle --

    def _on_release(self, ev: Event) -> None:
        spec: JobSpec = ev.payload
        now = ev.time
        self.released += 1
        self._log("release", spec.origin, spec.id)
        view = self.build_view(spec.origin, now)
        try:
            decision = decide(self.strategy, spec, view, self._balanced_rng[spec.origin])
        except NoEstimate as exc:
            raise RuntimeError(f"job {spec.id}: {exc}") from exc
        if decision.cancelled:
            self._log("cancel", spec.origin, spec.id)
            self.records[spec.id] = JobRecord(spec, None, now, Outcome.CANCELLED)
            return
        hE = decision.executor
        duration = self.profiles[hE].exec_time(spec.jitter_draw)
        self.live[spec.id] = _Live(spec, hE, now, decision.estimate, duration)
        self.outstanding += 1
        if hE == spec.origin:
            self.live[spec.id].transfer_in_done = now
            self._enqueue(spec.id, hE, now)
        else:
            self.profilers[hE].announce_incoming()
            self._start_transfer(spec.id, spec.origin, hE, spec.input_size, EventKind.TRANSFER_IN_DONE)

    def _enqueue(self, job_id: int, host: HostId, now: float) -> None:
        self._log("queued", host, job_id)
        self._apply_worker_events(host, self.workers[host].enqueue(job_id, self.live[job_id].duration, now))

    def _apply_worker_events(self, host: HostId, events) -> None:
        prof = self.profilers[host]
        for kind, job_id, t in events:
            prof.on_job_event(kind, job_id, t)
            if kind is JobEvent.STARTED:
                live = self.live[job_id]
                live.exec_start = t
                self._log("started", host, job_id)
                self.queue.schedule(t + live.duration, EventKind.EXEC_END, host)
        self._refresh(host)

    def _on_exec_end(self, ev: Event) -> None:
        host: HostId = ev.payload
        job_id, events = self.workers[host].complete_current(ev.time)
        self._log("ended", host, job_id)
        live = self.live[job_id]
        live.exec_end = ev.time
        self._apply_worker_events(host, events)
        if host == live.spec.origin:
            self._complete(job_id, ev.time)
        else:
            self._start_transfer(job_id, host, live.spec.origin, live.spec.output_size, EventKind.TRANSFER_OUT_DONE)

    def _complete(self, job_id: int, now: float) -> None:
        live = self.live.pop(job_id)
        self.records[job_id] = JobRecord(
            spec=live.spec,
            executor=live.executor,
            decision_time=live.decision_time,
            outcome=Outcome.COMPLETED,
            estimate_at_decision=live.estimate,
            transfer_in_done=live.transfer_in_done,
            exec_start=live.exec_start,
            exec_end=live.exec_end,
            completion_time=now,
        )
        self._log("completed", live.spec.origin, job_id)
        self.outstanding -= 1
        if self.draining and self.outstanding == 0:
            self.end_time = now

    def _on_sim_end(self, ev: Event) -> None:
        self._log("sim_end")
        self.draining = True
        if self.outstanding == 0:
            self.end_time = ev.time

    # -- network --

    def _start_transfer(self, job_id, src, dst, nbytes, kind) -> None:
        now = self.queue.now
        tr = _Transfer(job_id, src, dst, nbytes, now, kind, remaining_bits=8.0 * nbytes, last=now)
        self.transfers[(job_id, kind)] = tr
        self.n_up[src] += 1
        self.n_down[dst] += 1
        self._log("transfer_in" if kind is EventKind.TRANSFER_IN_DONE else "transfer_out", src, job_id)
        self._refresh(src)
        self._refresh(dst)
        if self.config.contention_mode == "fair":
            self._reschedule_transfers()
        else:
            tr.rate = link_rate(self.profiles[src], self.profiles[dst])
            self.queue.schedule(now + tr.remaining_bits / tr.rate, kind, tr)

    def _reschedule_transfers(self) -> None:
        now = self.queue.now
        for tr in self.transfers.values():
            tr.remaining_bits = max(tr.remaining_bits - tr.rate * (now - tr.last), 0.0)
            tr.last = now
        for tr in self.transfers.values():
            src, dst = self.profiles[tr.src], self.profiles[tr.dst]
            rate = min(src.uplink_bw / self.n_up[tr.src], dst.downlink_bw / self.n_down[tr.dst])
            if rate != tr.rate:
                tr.rate = rate
                tr.version += 1
                self.queue.schedule(now + tr.remaining_bits / rate, tr.kind, (tr, tr.version))

    def _on_transfer_done(self, ev: Event) -> None:
        payload = ev.payload
        if isinstance(payload, tuple):
            tr, version = payload
            if version != tr.version or (tr.job_id, tr.kind) not in self.transfers:
                return  # superseded by a rate change
        else:
            tr = payload
        now = ev.time
        del self.transfers[(tr.job_id, tr.kind)]
        self.n_up[tr.src] -= 1
        self.n_down[tr.dst] -= 1
        self._refresh(tr.src)
        self._refresh(tr.dst)
        elapsed = now - tr.start
        live = self.live[tr.job_id]
        origin = self.profilers[live.spec.origin]
        if tr.kind is EventKind.TRANSFER_IN_DONE:
            if tr.nbytes > 0:
                origin.observe_upload(tr.dst, elapsed / tr.nbytes)
            live.transfer_in_done = now
            self._log("arrived", tr.dst, tr.job_id)
            self.profilers[tr.dst].accept_incoming()
            self._enqueue(tr.job_id, tr.dst, now)
        else:
            if tr.nbytes > 0:
                origin.observe_download(tr.src, elapsed / tr.nbytes)
            self._complete(tr.job_id, now)
        if self.config.contention_mode == "fair":
            self._reschedule_transfers()


def run(config: ScenarioConfig, seed: Optional[int] = None) -> RunResult:
    return Simulator(config, seed).run()


def check_run(result: RunResult, tol: float = 1e-9) -> List[str]:
    """Structural invariants of a finished run; returns a list of violations."""
    problems = []
    cfg = result.config
    n_released = result.released
    for rec in result.records:
        if not rec.lifecycle_ok():
            problems.append(f"job {rec.spec.id}: lifecycle out of order")
    completed = [r for r in result.records if r.outcome is Outcome.COMPLETED]
    cancelled = [r for r in result.records if r.outcome is Outcome.CANCELLED]
    if len(completed) + len(cancelled) != n_released:
        problems.append("job conservation violated")
    ids = [r.spec.id for r in result.records]
    if len(set(ids)) != len(ids):
        problems.append("duplicate job records")
    for host in cfg.host_ids:
        covered = result.ledger.covered(host)
        if not math.isclose(covered, result.end_time, rel_tol=0, abs_tol=tol):
            problems.append(f"{host}: ledger covers {covered} of {result.end_time}")
        ivs = result.ledger.intervals[host]
        if ivs and (ivs[0][0] != 0.0 or any(a[1] != b[0] for a, b in zip(ivs, ivs[1:]))):
            problems.append(f"{host}: ledger intervals do not tile")
    return problems
