"""Link budget, loss derating, and store-and-forward transfer scheduling.

Loss is modeled as a deterministic goodput derating (idealized ARQ), not
per-packet sampling, so delivered volumes are seed-stable. Byte counts are
integers throughout; partial deliveries floor to whole bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .orbit import ContactWindow

UP = "up"
DOWN = "down"

KIND_RESULT = "result-message"
KIND_TILE = "image-tile"
KIND_COMMAND = "command"

# Result messages embody completed work at a tiny fraction of tile cost and
# go first; commands beat bulk tiles; FIFO within a kind.
KIND_PRIORITY = {KIND_RESULT: 0, KIND_COMMAND: 1, KIND_TILE: 2}


@dataclass(frozen=True)
class LinkSpec:
    uplink_mbps: float
    downlink_mbps: float
    loss_prob: float = 0.0
    per_pass_overhead_s: float = 10.0

    def __post_init__(self):
        if not self.uplink_mbps > 0 or not self.downlink_mbps > 0:
            raise ValueError("link rates must be > 0")
        if not 0.0 <= self.loss_prob < 1.0:
            raise ValueError("loss_prob must be in [0, 1)")
        if self.per_pass_overhead_s < 0:
            raise ValueError("per_pass_overhead_s must be >= 0")


@dataclass(frozen=True)
class TransferJob:
    id: str
    direction: str
    payload_bytes: int
    created_s: float
    kind: str

    def __post_init__(self):
        if self.direction not in (UP, DOWN):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.kind not in KIND_PRIORITY:
            raise ValueError(f"unknown job kind {self.kind!r}")
        if not self.payload_bytes > 0:
            raise ValueError("payload_bytes must be > 0")


@dataclass(frozen=True)
class TransferRecord:
    job_id: str
    window: ContactWindow
    start_s: float
    end_s: float
    delivered_bytes: int


def goodput_mbps(link: LinkSpec, direction: str) -> float:
    """Effective rate after loss derating: rate * (1 - loss_prob)."""
    rate = link.uplink_mbps if direction == UP else link.downlink_mbps
    return rate * (1.0 - link.loss_prob)


def transfer_time_s(payload_bytes: float, goodput: float) -> float:
    """Seconds to move payload_bytes at goodput megabits/s."""
    if not goodput > 0:
        raise ValueError("goodput must be > 0")
    if not payload_bytes > 0:
        raise ValueError("payload_bytes must be > 0")
    return payload_bytes * 8.0 / (goodput * 1e6)


def _bytes_per_s(link: LinkSpec, direction: str) -> float:
    return goodput_mbps(link, direction) * 1e6 / 8.0


def schedule(queue: list[TransferJob], windows: list[ContactWindow],
             link: LinkSpec) -> tuple[list[TransferRecord], list[TransferJob]]:
    """Serve queued jobs inside contact windows, store-and-forward style.

    Jobs are served in (kind priority, created_s, queue order) order; a job
    may span multiple windows with byte-granular carryover; nothing moves
    outside a window or during the per-pass overhead at each window start.
    Up and down directions are independent channels. Returns the transfer
    records plus the residual queue (undelivered jobs, payload reduced to
    the remaining bytes).
    """
    records: list[TransferRecord] = []
    residual: list[TransferJob] = []

    for direction in (DOWN, UP):
        jobs = [j for j in queue if j.direction == direction]
        if not jobs:
            continue
        remaining = {id(j): j.payload_bytes for j in jobs}
        order = {id(j): i for i, j in enumerate(jobs)}
        rate = _bytes_per_s(link, direction)

        for window in windows:
            t = window.start_s + link.per_pass_overhead_s
            while t < window.end_s:
                ready = [j for j in jobs if remaining[id(j)] > 0 and j.created_s <= t]
                if not ready:
                    pending = [j.created_s for j in jobs
                               if remaining[id(j)] > 0 and j.created_s > t]
                    if pending and min(pending) < window.end_s:
                        t = min(pending)
                        continue
                    break
                job = min(ready, key=lambda j: (KIND_PRIORITY[j.kind], j.created_s, order[id(j)]))
                rem = remaining[id(job)]
                full_end = t + rem * 8.0 / (goodput_mbps(link, direction) * 1e6)
                if full_end <= window.end_s:
                    delivered, t_end = rem, full_end
                else:
                    delivered = int(math.floor((window.end_s - t) * rate + 1e-9))
                    delivered = min(delivered, rem)
                    t_end = window.end_s
                if delivered <= 0:
                    break
                records.append(TransferRecord(job.id, window, t, t_end, delivered))
                remaining[id(job)] -= delivered
                t = t_end

        for job in jobs:
            if remaining[id(job)] > 0:
                residual.append(replace(job, payload_bytes=remaining[id(job)]))

    return records, residual
