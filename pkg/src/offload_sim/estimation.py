"""Per-host profiler: moving averages and cost estimates."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

from .core_model import (
    CostEstimate,
    DeviceProfile,
    HostId,
    HostSnapshot,
    JobSpec,
    LinkEstimate,
    link_rate,
)

DEFAULT_WINDOW = 10


class NoEstimate(LookupError):
    """Raised when an estimator has no data to answer with."""


class MovingAverage:
    def __init__(self, window: int = DEFAULT_WINDOW):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self.samples: deque = deque(maxlen=window)

    def push(self, value: float) -> None:
        self.samples.append(float(value))

    def value(self) -> float:
        if not self.samples:
            raise NoEstimate("moving average has no samples")
        return sum(self.samples) / len(self.samples)

    def value_or_none(self) -> Optional[float]:
        return self.value() if self.samples else None

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class PowerFlags:
    computing: bool = False
    uploading: bool = False
    downloading: bool = False

    def single(self) -> Optional[str]:
        """Name of the only active flag, or None when zero or several are set."""
        active = [
            name
            for name, on in (
                ("compute", self.computing),
                ("upload", self.uploading),
                ("download", self.downloading),
            )
            if on
        ]
        return active[0] if len(active) == 1 else None


class JobEvent(enum.Enum):
    QUEUED = "queued"
    STARTED = "started"
    ENDED = "ended"


# -- pure estimators ---------------------------------------------------------


def estimate_compute_time(
    snapshot: HostSnapshot, now: Optional[float] = None, corrected: bool = False
) -> float:
    """(n + 1) * TE for the candidate host.

    With ``corrected`` the time the running job has already spent executing
    is subtracted (capped at one TE).
    """
    if snapshot.te_avg is None:
        raise NoEstimate(f"no execution-time estimate for {snapshot.host}")
    tc = (snapshot.queue_length + 1) * snapshot.te_avg
    if corrected and snapshot.running_since is not None and snapshot.queue_length > 0:
        ref = snapshot.snapshot_time if now is None else now
        elapsed = min(max(ref - snapshot.running_since, 0.0), snapshot.te_avg)
        tc -= elapsed
    return tc


def estimate_transfer_times(link: Optional[LinkEstimate], spec: JobSpec, candidate: HostId):
    if candidate == spec.origin:
        return 0.0, 0.0
    if link is None:
        raise NoEstimate(f"no link estimate {spec.origin} -> {candidate}")
    return link.ul_time_per_byte * spec.input_size, link.dl_time_per_byte * spec.output_size


def estimate_energy(
    t_in: float,
    t_exec: float,
    t_out: float,
    origin: HostSnapshot,
    candidate: HostSnapshot,
):
    """Energy of input transfer, execution and output transfer, in joules.

    ``t_exec`` is the effective execution time TE, not the queue-inclusive TC.
    Transfers are charged on both ends of the link.
    """
    if candidate.pc_avg is None:
        raise NoEstimate(f"no compute power estimate for {candidate.host}")
    e_compute = t_exec * candidate.pc_avg
    if origin.host == candidate.host:
        return 0.0, e_compute, 0.0
    needed = (origin.pu_avg, origin.pd_avg, candidate.pu_avg, candidate.pd_avg)
    if any(p is None for p in needed):
        raise NoEstimate(f"missing transfer power estimates for {origin.host}/{candidate.host}")
    e_in = t_in * (origin.pu_avg + candidate.pd_avg)
    e_out = t_out * (origin.pd_avg + candidate.pu_avg)
    return e_in, e_compute, e_out


@dataclass
class View:
    """What the origin host knows at decision time."""

    origin: HostId
    now: float
    snapshots: Mapping[HostId, HostSnapshot]
    links: Mapping[HostId, LinkEstimate] = field(default_factory=dict)
    workers: tuple = ()
    corrected_tc: bool = False


def full_estimate(spec: JobSpec, origin: HostId, candidate: HostId, view: View) -> CostEstimate:
    try:
        cand = view.snapshots[candidate]
        orig = view.snapshots[origin]
    except KeyError as exc:
        raise NoEstimate(f"host {exc.args[0]} missing from view") from None
    t_compute = estimate_compute_time(cand, view.now, view.corrected_tc)
    t_in, t_out = estimate_transfer_times(view.links.get(candidate), spec, candidate)
    e_in, e_compute, e_out = estimate_energy(t_in, cand.te_avg, t_out, orig, cand)
    return CostEstimate(t_in, t_compute, t_out, e_in, e_compute, e_out)


# -- stateful profiler -------------------------------------------------------


class Profiler:
    """Moving-average state kept by one host about itself and its links."""

    def __init__(self, host: HostId, window: int = DEFAULT_WINDOW):
        self.host = host
        self.window = window
        self.queue_length = 0
        self.incoming = 0
        self.running_since: Optional[float] = None
        self._started: Dict[int, float] = {}
        self.te = MovingAverage(window)
        self.pc = MovingAverage(window)
        self.pu = MovingAverage(window)
        self.pd = MovingAverage(window)
        self.flags = PowerFlags()
        self.ul: Dict[HostId, MovingAverage] = {}
        self.dl: Dict[HostId, MovingAverage] = {}

    @classmethod
    def seeded(cls, profile: DeviceProfile, peers, window: int = DEFAULT_WINDOW) -> "Profiler":
        """Profiler warmed with one calibration sample per estimator.

        ``peers`` are the DeviceProfiles of every other host; their link
        estimates start from the nominal interface rates.
        """
        prof = cls(profile.host, window)
        if profile.role.executes:
            prof.te.push(profile.exec_time_mean)
            prof.pc.push(profile.p_compute)
        prof.pu.push(profile.p_upload)
        prof.pd.push(profile.p_download)
        for peer in peers:
            if peer.host == profile.host:
                continue
            prof.observe_upload(peer.host, 8.0 / link_rate(profile, peer))
            prof.observe_download(peer.host, 8.0 / link_rate(peer, profile))
        return prof

    def on_job_event(self, event: JobEvent, job_id: int, time: float) -> None:
        if event is JobEvent.QUEUED:
            self.queue_length += 1
        elif event is JobEvent.STARTED:
            assert job_id not in self._started, f"job {job_id} started twice"
            assert not self.flags.computing, "worker is not one-at-a-time"
            self._started[job_id] = time
            self.running_since = time
            self.flags.computing = True
        elif event is JobEvent.ENDED:
            assert job_id in self._started, f"job {job_id} ended without starting"
            assert self.queue_length > 0
            self.te.push(time - self._started.pop(job_id))
            self.queue_length -= 1
            self.running_since = None
            self.flags.computing = False

    def announce_incoming(self) -> None:
        """A peer has started sending a job here; it counts toward the queue from now."""
        self.incoming += 1

    def accept_incoming(self) -> None:
        """The announced job arrived and is about to be queued by the worker."""
        assert self.incoming > 0, "no incoming job was announced"
        self.incoming -= 1

    @property
    def assigned(self) -> int:
        """Jobs committed to this host: queued, running, or still in transit."""
        return self.queue_length + self.incoming

    def on_power_sample(self, watts: float, flags: Optional[PowerFlags] = None) -> None:
        regime = (flags or self.flags).single()
        if regime == "compute":
            self.pc.push(watts)
        elif regime == "upload":
            self.pu.push(watts)
        elif regime == "download":
            self.pd.push(watts)

    def observe_upload(self, peer: HostId, seconds_per_byte: float) -> None:
        self.ul.setdefault(peer, MovingAverage(self.window)).push(seconds_per_byte)

    def observe_download(self, peer: HostId, seconds_per_byte: float) -> None:
        self.dl.setdefault(peer, MovingAverage(self.window)).push(seconds_per_byte)

    def snapshot(self, now: float) -> HostSnapshot:
        return HostSnapshot(
            host=self.host,
            queue_length=self.assigned,
            te_avg=self.te.value_or_none(),
            pc_avg=self.pc.value_or_none(),
            pu_avg=self.pu.value_or_none(),
            pd_avg=self.pd.value_or_none(),
            snapshot_time=now,
            running_since=self.running_since,
        )

    def link_to(self, peer: HostId) -> LinkEstimate:
        if peer not in self.ul or peer not in self.dl:
            raise NoEstimate(f"no link estimate {self.host} -> {peer}")
        return LinkEstimate(self.host, peer, self.ul[peer].value(), self.dl[peer].value())

    def links(self) -> Dict[HostId, LinkEstimate]:
        return {peer: self.link_to(peer) for peer in self.ul if peer in self.dl}
