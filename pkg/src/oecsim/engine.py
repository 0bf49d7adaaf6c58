"""Deterministic discrete-event simulation of the capture-to-downlink loop.

One run walks the full pipeline: periodic frame capture, tiling, redundancy
filtering, sequential onboard detection, confidence-gated routing, buffering
with overflow, window-gated store-and-forward transfer, and energy accrual.
Onboard processing happens anytime; only transfers are gated by contact
windows.

Events are processed in (time, kind rank, sequence) order with the fixed
tie ranking contact_start < tile_ready < transfer_progress < contact_end <
capture, which pins down the whole run given (scenario, seed).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from typing import Any, Optional

from . import mapeval
from .detection import ROUTE_IMAGE, detect, route
from .energy import EnergyLedger, Subsystem, constant_power_ledger, fractions
from .imaging import Tile, filter_redundant, generate_corpus, split_frame
from .link import (DOWN, KIND_PRIORITY, KIND_RESULT, KIND_TILE, LinkSpec,
                   TransferRecord, goodput_mbps)
from .orbit import ContactWindow, contact_windows
from .rng import RngStreams, derive_seed
from .scenario import Scenario

# Tie ranks for simultaneous events.
_CONTACT_START = 0
_TILE_READY = 1
_TRANSFER_PROGRESS = 2
_CONTACT_END = 3
_CAPTURE = 4
_SIM_END = 5

_KIND_NAMES = {
    _CONTACT_START: "contact_start",
    _TILE_READY: "tile_ready",
    _TRANSFER_PROGRESS: "transfer_progress",
    _CONTACT_END: "contact_end",
    _CAPTURE: "capture",
    _SIM_END: "sim_end",
}

SWEEPABLE_PARAMETERS = (
    "policy.confidence_threshold",
    "policy.aggregation",
    "link.loss_prob",
    "link.uplink_mbps",
    "link.downlink_mbps",
    "link.per_pass_overhead_s",
    "filter.cloud_threshold",
    "filter.min_object_area_px",
    "corpus.tile_px",
    "corpus.redundant_fraction",
    "orbit.altitude_km",
    "orbit.inclination_deg",
    "sim.capture_period_s",
    "sim.buffer_capacity_bytes",
)


@dataclass
class _Job:
    seq: int
    kind: str
    payload_bytes: int
    created_s: float
    tile_uid: Optional[str]
    remaining: int

    @property
    def job_id(self) -> str:
        return f"{self.kind}:{self.seq}"


@dataclass(frozen=True)
class Report:
    """Everything one run produces; serialized by reportfile.report_document."""

    data: dict[str, Any]
    accuracy: dict[str, Any]
    filter_rate: float
    energy: dict[str, Any]
    windows: tuple[ContactWindow, ...]
    transfer_records: tuple[TransferRecord, ...]
    event_counts: dict[str, int]
    timeline: tuple[dict[str, Any], ...]
    offloaded_tile_uids: tuple[str, ...]


def _usable_windows(windows: list[ContactWindow], link: LinkSpec,
                    horizon_s: float) -> list[tuple[float, float, ContactWindow]]:
    """Clip the per-pass overhead, clamp to the horizon, and serialize
    overlapping passes (a single radio cannot use two stations at once)."""
    usable = []
    prev_end = 0.0
    for w in sorted(windows, key=lambda w: (w.start_s, w.station_id)):
        start = max(w.start_s + link.per_pass_overhead_s, prev_end)
        end = min(w.end_s, horizon_s)
        if start < end:
            usable.append((start, end, w))
            prev_end = end
    return usable


def run(scenario: Scenario) -> Report:
    """Simulate one scenario end to end and assemble its report."""
    streams = RngStreams(scenario.seed)
    frames = generate_corpus(scenario.corpus, scenario.seed)

    all_windows: list[ContactWindow] = []
    for station in scenario.stations:
        all_windows.extend(contact_windows(
            scenario.orbit, station, scenario.horizon_s,
            scenario.coarse_step_s, sat_id=scenario.sat_id))
    all_windows.sort(key=lambda w: (w.start_s, w.station_id))
    usable = _usable_windows(all_windows, scenario.link, scenario.horizon_s)

    heap: list[tuple[float, int, int, Any]] = []
    seq_counter = 0

    def push(t: float, rank: int, payload: Any = None):
        nonlocal seq_counter
        heapq.heappush(heap, (t, rank, seq_counter, payload))
        seq_counter += 1

    # Captures start one period in; frames beyond the horizon are never taken.
    n_captures = min(len(frames), int(scenario.horizon_s // scenario.capture_period_s))
    for k in range(n_captures):
        push((k + 1) * scenario.capture_period_s, _CAPTURE, k)
    for start, end, w in usable:
        push(start, _CONTACT_START, (start, end, w))
        push(end, _CONTACT_END, (start, end, w))
    push(scenario.horizon_s, _SIM_END)

    # Byte accounting (exact integers).
    bytes_raw = 0
    bytes_filtered_out = 0
    bytes_resolved_as_results = 0
    bytes_tiles_downlinked = 0
    bytes_result_delivered = 0
    bytes_result_created = 0
    bytes_dropped = 0

    # Pipeline state.
    detect_free_s = 0.0
    detect_busy_s = 0.0
    pending_tiles: list[Tile] = []   # kept tiles that never finished detection
    kept_tiles: list[Tile] = []
    onboard_dets: dict[str, list] = {}
    offloaded: list[str] = []
    routed_uids: list[str] = []
    filter_total = 0
    filter_discarded = 0

    buffer: list[_Job] = []
    buffer_bytes = 0
    job_seq = 0
    active: Optional[dict[str, Any]] = None   # job, start_s, window, token
    current_window: Optional[tuple[float, float, ContactWindow]] = None
    transfer_token = 0
    records: list[TransferRecord] = []
    comm_busy_s = 0.0

    rate_bps = goodput_mbps(scenario.link, DOWN) * 1e6 / 8.0
    event_counts = {name: 0 for name in _KIND_NAMES.values()}
    timeline: list[dict[str, Any]] = []

    def note(t: float, kind: int, detail: str):
        event_counts[_KIND_NAMES[kind]] += 1
        if scenario.record_timeline:
            timeline.append({"t": t, "kind": _KIND_NAMES[kind], "detail": detail})

    def pick_job(now: float) -> Optional[_Job]:
        ready = [j for j in buffer if j.remaining > 0 and j.created_s <= now]
        if not ready:
            return None
        return min(ready, key=lambda j: (KIND_PRIORITY[j.kind], j.created_s, j.seq))

    def try_start(now: float):
        nonlocal active, transfer_token
        if active is not None or current_window is None:
            return
        start_u, end_u, w = current_window
        if now < start_u or now >= end_u:
            return
        job = pick_job(now)
        if job is None:
            return
        transfer_token += 1
        full_end = now + job.remaining * 8.0 / (goodput_mbps(scenario.link, DOWN) * 1e6)
        active = {"job": job, "start": now, "window": w, "token": transfer_token}
        if full_end <= end_u:
            push(full_end, _TRANSFER_PROGRESS, transfer_token)

    def deliver(job: _Job, amount: int, start: float, end: float, w: ContactWindow):
        nonlocal bytes_tiles_downlinked, bytes_result_delivered, buffer_bytes, comm_busy_s
        records.append(TransferRecord(job.job_id, w, start, end, amount))
        job.remaining -= amount
        buffer_bytes -= amount
        comm_busy_s += end - start
        if job.kind == KIND_TILE:
            bytes_tiles_downlinked += amount
        else:
            bytes_result_delivered += amount

    def close_active(now: float):
        """Partial delivery up to now (window end or horizon)."""
        nonlocal active
        if active is None:
            return
        job = active["job"]
        dur = now - active["start"]
        amount = min(job.remaining, int(math.floor(dur * rate_bps + 1e-9)))
        if amount > 0:
            deliver(job, amount, active["start"], now, active["window"])
        if job.remaining == 0:
            buffer.remove(job)
        active = None

    def admit(job: _Job, now: float):
        """Buffer admission with oldest-image-first overflow dropping."""
        nonlocal buffer_bytes, bytes_dropped
        buffer.append(job)
        buffer_bytes += job.remaining
        while buffer_bytes > scenario.buffer_capacity_bytes:
            victims = [j for j in buffer
                       if j.kind == KIND_TILE and j.remaining > 0
                       and not (active is not None and active["job"] is j)]
            if not victims:
                break  # result messages are never dropped
            victim = min(victims, key=lambda j: (j.created_s, j.seq))
            bytes_dropped += victim.remaining
            buffer_bytes -= victim.remaining
            victim.remaining = 0
            buffer.remove(victim)

    while heap:
        t, rank, _, payload = heapq.heappop(heap)
        if t > scenario.horizon_s:
            break

        if rank == _CAPTURE:
            k = payload
            frame = replace(frames[k], capture_s=t)
            tiles = split_frame(frame, scenario.corpus.tile_px)
            bytes_raw += sum(tile.payload_bytes for tile in tiles)
            result = filter_redundant(tiles, scenario.filter)
            bytes_filtered_out += sum(tile.payload_bytes for tile in result.discarded)
            filter_total += len(tiles)
            filter_discarded += len(result.discarded)
            kept_tiles.extend(result.kept)
            for tile in result.kept:
                start = max(detect_free_s, t)
                done = start + scenario.onboard_profile.latency_s_per_tile
                detect_free_s = done
                if start >= scenario.horizon_s:
                    pending_tiles.append(tile)
                    continue
                detect_busy_s += min(done, scenario.horizon_s) - start
                if done <= scenario.horizon_s:
                    push(done, _TILE_READY, tile)
                else:
                    pending_tiles.append(tile)
            note(t, _CAPTURE, frame.id)

        elif rank == _TILE_READY:
            tile: Tile = payload
            rng = streams.substream("detect", tile.uid)
            dets = detect(scenario.onboard_profile, tile, rng)
            onboard_dets[tile.uid] = dets
            routed_uids.append(tile.uid)
            decision = route(tile, dets, scenario.policy)
            job_seq += 1
            if decision.send_results:
                bytes_resolved_as_results += tile.payload_bytes
                bytes_result_created += decision.payload_bytes
                job = _Job(job_seq, KIND_RESULT, decision.payload_bytes, t,
                           tile.uid, decision.payload_bytes)
            else:
                offloaded.append(tile.uid)
                job = _Job(job_seq, KIND_TILE, decision.payload_bytes, t,
                           tile.uid, decision.payload_bytes)
            admit(job, t)
            try_start(t)
            note(t, _TILE_READY, tile.uid)

        elif rank == _CONTACT_START:
            current_window = payload
            try_start(t)
            note(t, _CONTACT_START, payload[2].station_id)

        elif rank == _TRANSFER_PROGRESS:
            token = payload
            if active is not None and active["token"] == token:
                job = active["job"]
                deliver(job, job.remaining, active["start"], t, active["window"])
                buffer.remove(job)
                active = None
                try_start(t)
            note(t, _TRANSFER_PROGRESS, "")

        elif rank == _CONTACT_END:
            close_active(t)
            current_window = None
            note(t, _CONTACT_END, payload[2].station_id)

        elif rank == _SIM_END:
            close_active(t)
            note(t, _SIM_END, "")
            break

    # Residual buffers: raw tile bytes stay in the conservation identity,
    # undelivered result messages are tracked separately.
    bytes_tiles_buffered = sum(j.remaining for j in buffer if j.kind == KIND_TILE)
    bytes_tiles_buffered += sum(tile.payload_bytes for tile in pending_tiles)
    bytes_result_pending = sum(j.remaining for j in buffer if j.kind == KIND_RESULT)

    returned = bytes_result_delivered + bytes_tiles_downlinked
    data = {
        "bytes_raw": bytes_raw,
        "bytes_filtered_out": bytes_filtered_out,
        "bytes_resolved_as_results": bytes_resolved_as_results,
        "bytes_result_msgs": bytes_result_delivered,
        "bytes_result_msgs_created": bytes_result_created,
        "bytes_result_msgs_pending": bytes_result_pending,
        "bytes_tiles_downlinked": bytes_tiles_downlinked,
        "bytes_buffered_at_end": bytes_tiles_buffered,
        "bytes_dropped": bytes_dropped,
        "reduction_fraction": (1.0 - returned / bytes_raw) if bytes_raw > 0 else None,
    }

    accuracy = _accuracy_block(kept_tiles, onboard_dets, offloaded, routed_uids,
                               scenario, streams)
    filter_rate = filter_discarded / filter_total if filter_total else 0.0
    energy = _energy_block(scenario, detect_busy_s, comm_busy_s, len(routed_uids))

    return Report(
        data=data,
        accuracy=accuracy,
        filter_rate=filter_rate,
        energy=energy,
        windows=tuple(all_windows),
        transfer_records=tuple(records),
        event_counts=event_counts,
        timeline=tuple(timeline),
        offloaded_tile_uids=tuple(sorted(offloaded)),
    )


def _accuracy_block(kept_tiles, onboard_dets, offloaded, routed_uids,
                    scenario: Scenario, streams: RngStreams) -> dict[str, Any]:
    """Policy-level accuracy: what the ground knows under each routing.

    Offloaded tiles count with their ground re-detections regardless of
    delivery timing; the transfer layer decides when data arrives, the
    routing policy decides what the final predictions are.
    """
    gt = mapeval.gt_from_tiles(kept_tiles)
    n_gt = sum(len(v) for v in gt.values())
    processed = set(routed_uids)
    if n_gt == 0 or not processed:
        return {
            "defined": False,
            "onboard_only_map": None,
            "collaborative_map": None,
            "relative_gain": None,
            "offload_fraction": None,
        }

    tiles_by_uid = {tile.uid: tile for tile in kept_tiles}
    onboard_preds = dict(onboard_dets)
    collab_dets = dict(onboard_dets)
    for uid in offloaded:
        rng = streams.substream("detect", uid)
        collab_dets[uid] = detect(scenario.ground_profile, tiles_by_uid[uid], rng)

    onboard_map = mapeval.evaluate_map(
        gt, mapeval.preds_from_detections(onboard_preds)).map
    collab_map = mapeval.evaluate_map(
        gt, mapeval.preds_from_detections(collab_dets)).map
    gain = (collab_map - onboard_map) / onboard_map if onboard_map > 0 else None
    return {
        "defined": True,
        "onboard_only_map": onboard_map,
        "collaborative_map": collab_map,
        "relative_gain": gain,
        "offload_fraction": len(offloaded) / len(processed),
    }


def _energy_block(scenario: Scenario, detect_busy_s: float, comm_busy_s: float,
                  n_detected_tiles: int) -> dict[str, Any]:
    """Flat-average ledger plus the duty-cycled compute/comm readings.

    When the power profile enables duty_cycle, the duty readings become the
    primary ledger entries for compute and comm.
    """
    p = scenario.power
    horizon = scenario.horizon_s
    ledger = constant_power_ledger(p, horizon)

    if scenario.onboard_profile.energy_j_per_tile > 0:
        compute_active_j = n_detected_tiles * scenario.onboard_profile.energy_j_per_tile
    else:
        compute_active_j = p.compute_active_w * detect_busy_s
    compute_duty_j = compute_active_j + p.compute_idle_w * (horizon - detect_busy_s)
    comm_duty_j = (p.comm_active_w * comm_busy_s
                   + p.comm_idle_w * (horizon - comm_busy_s))

    if p.duty_cycle:
        ledger.joules[Subsystem.COMPUTE] = compute_duty_j
        ledger.joules[Subsystem.COMM] = comm_duty_j

    frac = fractions(ledger)
    return {
        "joules": {s.value: ledger.joules[s] for s in Subsystem},
        "total_j": frac.total_j,
        "fractions": {s.value: f for s, f in frac.fractions.items()},
        "payloads_over_total": frac.payloads_over_total,
        "compute_over_payloads": frac.compute_over_payloads,
        "compute_over_total": frac.compute_over_total,
        "payloads_children_j": frac.payloads_children_j,
        "rail_discrepancy_w": p.rail_discrepancy_w,
        "duty_cycle_enabled": p.duty_cycle,
        "duty_readings": {
            "compute_j": compute_duty_j,
            "comm_j": comm_duty_j,
            "compute_busy_s": detect_busy_s,
            "comm_busy_s": comm_busy_s,
            "compute_average_w": compute_duty_j / horizon,
        },
    }


def compare_accuracy(scenario: Scenario) -> tuple[float | None, float | None, float | None]:
    """(onboard_only_map, collaborative_map, relative_gain).

    Runs the pipeline twice on identical per-tile substreams: once with the
    confidence threshold forced to 0 (nothing offloads) and once as given.
    """
    never_offload = replace(scenario,
                            policy=replace(scenario.policy, confidence_threshold=0.0))
    base = run(never_offload)
    collab = run(scenario)
    onboard_map = base.accuracy["collaborative_map"]
    collab_map = collab.accuracy["collaborative_map"]
    if onboard_map is None or collab_map is None:
        return onboard_map, collab_map, None
    if onboard_map == 0:
        return onboard_map, collab_map, None
    return onboard_map, collab_map, (collab_map - onboard_map) / onboard_map


def _apply_parameter(scenario: Scenario, parameter: str, value) -> Scenario:
    if parameter not in SWEEPABLE_PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; "
                         f"allowed: {', '.join(SWEEPABLE_PARAMETERS)}")
    section, key = parameter.split(".", 1)
    if section == "sim":
        return replace(scenario, **{key: value})
    target = getattr(scenario, section)
    return replace(scenario, **{section: replace(target, **{key: value})})


def sweep(base_scenario: Scenario, parameter: str, values,
          max_workers: int = 1) -> list[tuple[Any, Report]]:
    """Independent runs over parameter values, one derived seed per value.

    Results come back in input order regardless of max_workers; runs share
    nothing, so thread count cannot change any report.
    """
    scenarios = []
    for i, value in enumerate(values):
        scn = _apply_parameter(base_scenario, parameter, value)
        scn = replace(scn, seed=derive_seed(base_scenario.seed, f"sweep:{parameter}", i))
        scenarios.append(scn)

    if max_workers <= 1 or len(scenarios) <= 1:
        reports = [run(s) for s in scenarios]
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            reports = list(pool.map(run, scenarios))
    return list(zip(list(values), reports))
