"""FIFO, non-preemptive, one-at-a-time job executor."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

from .core_model import HostId
from .estimation import JobEvent

Emitted = Tuple[JobEvent, Any, float]


@dataclass
class _Slot:
    job: Any
    duration: float
    start: float = 0.0

    @property
    def end(self) -> float:
        return self.start + self.duration


class WorkerQueue:
    def __init__(self, host: HostId):
        self.host = host
        self.running: Optional[_Slot] = None
        self.pending: deque = deque()

    def __len__(self) -> int:
        return len(self.pending) + (1 if self.running is not None else 0)

    @property
    def idle(self) -> bool:
        return self.running is None

    @property
    def running_end(self) -> Optional[float]:
        return None if self.running is None else self.running.end

    def enqueue(self, job, duration: float, now: float) -> List[Emitted]:
        """Append ``job``; start it right away if the worker is idle."""
        if duration < 0:
            raise ValueError("duration must be >= 0")
        self.pending.append(_Slot(job, duration))
        events: List[Emitted] = [(JobEvent.QUEUED, job, now)]
        if self.running is None:
            events.append(self._start_next(now))
        return events

    def complete_current(self, now: float) -> Tuple[Any, List[Emitted]]:
        assert self.running is not None, f"{self.host}: no running job to complete"
        assert abs(now - self.running.end) <= 1e-9 * max(1.0, abs(now)), "completion off schedule"
        done = self.running.job
        self.running = None
        events: List[Emitted] = [(JobEvent.ENDED, done, now)]
        if self.pending:
            events.append(self._start_next(now))
        return done, events

    def _start_next(self, now: float) -> Emitted:
        slot = self.pending.popleft()
        slot.start = now
        self.running = slot
        return (JobEvent.STARTED, slot.job, now)

    def projected_ends(self, now: float) -> List[Tuple[Any, float]]:
        """Termination times t + d1 + ... + di of the running and pending jobs."""
        out = []
        t = now
        if self.running is not None:
            t = self.running.end
            out.append((self.running.job, t))
        for slot in self.pending:
            t += slot.duration
            out.append((slot.job, t))
        return out
