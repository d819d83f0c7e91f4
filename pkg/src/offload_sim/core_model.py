"""Domain types shared by the estimator, strategies, worker and simulator."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

HostId = str

JOULES_PER_MWH = 3.6
DEFAULT_INPUT_SIZE = 2.2e6  # bytes
DEFAULT_OUTPUT_SIZE = 4096  # bytes


class Role(enum.Enum):
    GENERATOR = "generator"
    WORKER = "worker"
    BOTH = "both"

    @property
    def generates(self) -> bool:
        return self in (Role.GENERATOR, Role.BOTH)

    @property
    def executes(self) -> bool:
        return self in (Role.WORKER, Role.BOTH)


class Outcome(enum.Enum):
    COMPLETED = "completed"
    CANCELLED = "cancelled"


@dataclass(frozen=True)
class JobSpec:
    id: int
    origin: HostId
    release_time: float
    relative_deadline: float
    input_size: float = DEFAULT_INPUT_SIZE
    output_size: float = DEFAULT_OUTPUT_SIZE
    # uniform draw in [-1, 1] scaling the executor's jitter; fixed per job so
    # that every strategy sees the same workload
    jitter_draw: float = 0.0

    def __post_init__(self):
        if self.relative_deadline <= 0:
            raise ValueError(f"job {self.id}: relative_deadline must be > 0")
        if self.input_size <= 0:
            raise ValueError(f"job {self.id}: input_size must be > 0")
        if self.output_size < 0:
            raise ValueError(f"job {self.id}: output_size must be >= 0")

    @property
    def absolute_deadline(self) -> float:
        return self.release_time + self.relative_deadline


@dataclass(frozen=True)
class CostEstimate:
    t_in: float
    t_compute: float
    t_out: float
    e_in: float
    e_compute: float
    e_out: float

    @property
    def total_time(self) -> float:
        return self.t_in + self.t_compute + self.t_out

    @property
    def total_energy(self) -> float:
        return self.e_in + self.e_compute + self.e_out


@dataclass(frozen=True)
class JobRecord:
    spec: JobSpec
    executor: Optional[HostId]
    decision_time: float
    outcome: Outcome
    estimate_at_decision: Optional[CostEstimate] = None
    transfer_in_done: Optional[float] = None
    exec_start: Optional[float] = None
    exec_end: Optional[float] = None
    completion_time: Optional[float] = None

    @property
    def offloaded(self) -> bool:
        return self.executor is not None and self.executor != self.spec.origin

    @property
    def completion_span(self) -> float:
        assert self.completion_time is not None
        return self.completion_time - self.spec.release_time

    def lifecycle_ok(self) -> bool:
        """Check that timestamps are ordered release <= decision <= ... <= completion."""
        stamps = [
            self.spec.release_time,
            self.decision_time,
            self.transfer_in_done,
            self.exec_start,
            self.exec_end,
            self.completion_time,
        ]
        present = [s for s in stamps if s is not None]
        if any(b < a for a, b in zip(present, present[1:])):
            return False
        if self.outcome is Outcome.COMPLETED and len(present) != len(stamps):
            return False
        if self.outcome is Outcome.COMPLETED and not self.offloaded:
            # local jobs have no network stages
            if self.transfer_in_done != self.decision_time:
                return False
            if self.completion_time != self.exec_end:
                return False
        return True


def deadline_met(record: JobRecord) -> bool:
    if record.outcome is not Outcome.COMPLETED or record.completion_time is None:
        raise ValueError(f"job {record.spec.id} did not complete")
    return record.completion_time <= record.spec.release_time + record.spec.relative_deadline


@dataclass(frozen=True)
class DeviceProfile:
    """Ground-truth parameters of one host.

    Powers are in watts, bandwidths in bits per second and
    ``exec_time_mean`` in seconds per job.
    """

    host: HostId
    p_idle: float
    p_compute: float
    p_upload: float
    p_download: float
    exec_time_mean: float
    uplink_bw: float
    downlink_bw: float
    role: Role = Role.BOTH
    exec_time_jitter: float = 0.1

    def __post_init__(self):
        powers = (self.p_idle, self.p_compute, self.p_upload, self.p_download)
        if min(powers) <= 0:
            raise ValueError(f"{self.host}: powers must be > 0")
        if self.p_compute < self.p_idle:
            raise ValueError(f"{self.host}: p_compute must be >= p_idle")
        if self.uplink_bw <= 0 or self.downlink_bw <= 0:
            raise ValueError(f"{self.host}: bandwidths must be > 0")
        if self.exec_time_mean <= 0:
            raise ValueError(f"{self.host}: exec_time_mean must be > 0")
        if not 0 <= self.exec_time_jitter < 1:
            raise ValueError(f"{self.host}: exec_time_jitter must be in [0, 1)")

    def exec_time(self, jitter_draw: float) -> float:
        return self.exec_time_mean * (1.0 + self.exec_time_jitter * jitter_draw)

    def power(self, regime: str) -> float:
        return {
            "idle": self.p_idle,
            "compute": self.p_compute,
            "upload": self.p_upload,
            "download": self.p_download,
        }[regime]


@dataclass(frozen=True)
class HostSnapshot:
    """State of one host as published to its peers."""

    host: HostId
    queue_length: int
    te_avg: Optional[float]
    pc_avg: Optional[float]
    pu_avg: Optional[float]
    pd_avg: Optional[float]
    snapshot_time: float
    # start time of the job running at snapshot time, if any
    running_since: Optional[float] = None

    def __post_init__(self):
        if self.queue_length < 0:
            raise ValueError("queue_length must be >= 0")


@dataclass(frozen=True)
class LinkEstimate:
    """Seconds per byte for uploading to / downloading from a peer."""

    src: HostId
    dst: HostId
    ul_time_per_byte: float
    dl_time_per_byte: float

    def __post_init__(self):
        if self.ul_time_per_byte <= 0 or self.dl_time_per_byte <= 0:
            raise ValueError("link time-per-byte values must be > 0")


def link_rate(sender: DeviceProfile, receiver: DeviceProfile) -> float:
    """Effective bits/s of a transfer: the slower of the two interfaces."""
    return min(sender.uplink_bw, receiver.downlink_bw)
