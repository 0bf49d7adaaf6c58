"""Scenario model, YAML loading with exhaustive validation, and presets.

A scenario file has top-level sections orbit, stations, link, corpus,
detectors, policy, filter, power, sim. Unknown keys are rejected, missing
keys without a default are rejected, and every violation is reported at
once (no partial loads). The bundled `baoyun_default` scenario is the
annotated schema reference.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .detection import DetectorProfile, RoutingPolicy
from .energy import PowerProfile, Subsystem
from .imaging import CorpusSpec, FilterPolicy
from .link import LinkSpec
from .orbit import GroundStation, OrbitSpec

SCENARIO_DIR_ENV = "OECSIM_SCENARIOS"
_BUNDLED_DIR = Path(__file__).parent / "scenarios"


class ScenarioError(ValueError):
    """Validation failure listing every violated field."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("scenario validation failed:\n" +
                         "\n".join(f"  - {p}" for p in self.problems))


@dataclass(frozen=True)
class Scenario:
    orbit: OrbitSpec
    stations: tuple[GroundStation, ...]
    link: LinkSpec
    corpus: CorpusSpec
    onboard_profile: DetectorProfile
    ground_profile: DetectorProfile
    policy: RoutingPolicy
    filter: FilterPolicy
    power: PowerProfile
    capture_period_s: float
    horizon_s: float
    buffer_capacity_bytes: int
    seed: int
    sat_id: str = "baoyun"
    coarse_step_s: float = 30.0
    record_timeline: bool = False

    def __post_init__(self):
        if not self.horizon_s > 0:
            raise ValueError("horizon_s must be > 0")
        if not self.capture_period_s > 0:
            raise ValueError("capture_period_s must be > 0")
        if self.buffer_capacity_bytes <= 0:
            raise ValueError("buffer_capacity_bytes must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if not self.stations:
            raise ValueError("at least one ground station is required")


_REQUIRED = object()


def _check_section(data: dict, name: str, schema: dict, problems: list[str]) -> dict:
    """Pull known keys out of one section, recording every violation."""
    out = {}
    if not isinstance(data, dict):
        problems.append(f"{name}: expected a mapping")
        return out
    for key in data:
        if key not in schema:
            problems.append(f"{name}.{key}: unknown key")
    for key, (default, check) in schema.items():
        if key in data:
            value = data[key]
            err = check(value) if check else None
            if err:
                problems.append(f"{name}.{key}: {err}")
            else:
                out[key] = value
        elif default is _REQUIRED:
            problems.append(f"{name}.{key}: missing required key")
        else:
            out[key] = default
    return out


def _num(lo=None, hi=None, lo_open=False, hi_open=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return "expected a number"
        if lo is not None and (v <= lo if lo_open else v < lo):
            return f"must be {'>' if lo_open else '>='} {lo}"
        if hi is not None and (v >= hi if hi_open else v > hi):
            return f"must be {'<' if hi_open else '<='} {hi}"
        return None
    return check


def _integer(lo=None):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            return "expected an integer"
        if lo is not None and v < lo:
            return f"must be >= {lo}"
        return None
    return check


def _string(v):
    return None if isinstance(v, str) and v else "expected a non-empty string"


def _boolean(v):
    return None if isinstance(v, bool) else "expected a boolean"


def _pair(check_each):
    def check(v):
        if not isinstance(v, (list, tuple)) or len(v) != 2:
            return "expected a pair [a, b]"
        for item in v:
            err = check_each(item)
            if err:
                return err
        return None
    return check


def _recall(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return None if 0.0 <= v <= 1.0 else "must be in [0, 1]"
    if isinstance(v, (list, tuple)) and v:
        for item in v:
            if not isinstance(item, (int, float)) or not 0.0 <= item <= 1.0:
                return "recall entries must be numbers in [0, 1]"
        return None
    return "expected a number or list of numbers in [0, 1]"


_ORBIT_SCHEMA = {
    "altitude_km": (_REQUIRED, _num(lo=0, lo_open=True)),
    "inclination_deg": (97.4, _num(0, 180)),
    "raan_deg": (0.0, _num()),
    "phase_deg": (0.0, _num()),
    "epoch_s": (0.0, _num()),
}

_STATION_SCHEMA = {
    "id": (_REQUIRED, _string),
    "lat_deg": (_REQUIRED, _num(-90, 90)),
    "lon_deg": (_REQUIRED, _num(-180, 180)),
    "min_elevation_deg": (10.0, _num(0, 90, hi_open=True)),
}

_LINK_SCHEMA = {
    "uplink_mbps": (0.5, _num(lo=0, lo_open=True)),
    "downlink_mbps": (40.0, _num(lo=0, lo_open=True)),
    "loss_prob": (0.0, _num(0, 1, hi_open=True)),
    "per_pass_overhead_s": (10.0, _num(0)),
}

_CORPUS_SCHEMA = {
    "num_frames": (_REQUIRED, _integer(1)),
    "frame_px": (2048, _integer(1)),
    "tile_px": (512, _integer(1)),
    "bytes_per_px": (3, _integer(1)),
    "redundant_fraction": (_REQUIRED, _num(0, 1)),
    "objects_per_nonredundant_tile": (2.0, _num(lo=0, lo_open=True)),
    "num_classes": (8, _integer(1)),
    "cloudy_share": (0.7, _num(0, 1)),
    "cloudy_cloud_range": ((0.6, 1.0), _pair(_num(0, 1))),
    "clear_cloud_range": ((0.0, 0.3), _pair(_num(0, 1))),
    "min_object_px": (12.0, _num(lo=0, lo_open=True)),
    "max_object_px": (48.0, _num(lo=0, lo_open=True)),
}

_DETECTOR_SCHEMA = {
    "name": (_REQUIRED, _string),
    "recall": (_REQUIRED, _recall),
    "fp_rate": (_REQUIRED, _num(0)),
    "loc_noise_px": (0.0, _num(0)),
    "conf_tp": (_REQUIRED, _pair(_num(0))),
    "conf_fp": (_REQUIRED, _pair(_num(0))),
    "latency_s_per_tile": (0.5, _num(0)),
    "energy_j_per_tile": (0.0, _num(0)),
    "num_classes": (8, _integer(1)),
}

_POLICY_SCHEMA = {
    "confidence_threshold": (_REQUIRED, _num(0, 1)),
    "aggregation": ("max", lambda v: None if v in ("max", "mean")
                    else "must be 'max' or 'mean'"),
    "result_bytes_per_det": (64, _integer(0)),
    "result_header_bytes": (256, _integer(0)),
    "result_cap_bytes": (65536, _integer(0)),
}

_FILTER_SCHEMA = {
    "cloud_threshold": (0.5, _num(0, 1)),
    "drop_empty": (True, _boolean),
    "min_object_area_px": (1.0, _num(0)),
}

_POWER_SCHEMA = {
    "electrical_w": (1.47, _num(0)),
    "propulsion_w": (7.00, _num(0)),
    "guidance_w": (5.43, _num(0)),
    "avionics_w": (4.81, _num(0)),
    "comm_w": (5.43, _num(0)),
    "payloads_rail_w": (26.93, _num(0)),
    "camera_w": (0.09, _num(0)),
    "occultation_w": (6.26, _num(0)),
    "tribology_w": (5.68, _num(0)),
    "mems_w": (0.95, _num(0)),
    "adsbs_w": (6.12, _num(0)),
    "compute_w": (8.78, _num(0)),
    "compute_idle_w": (2.0, _num(0)),
    "compute_active_w": (8.78, _num(0)),
    "comm_idle_w": (5.43, _num(0)),
    "comm_active_w": (5.43, _num(0)),
    "duty_cycle": (False, _boolean),
}

_SIM_SCHEMA = {
    "sat_id": ("baoyun", _string),
    "horizon_s": (_REQUIRED, _num(lo=0, lo_open=True)),
    "capture_period_s": (_REQUIRED, _num(lo=0, lo_open=True)),
    "buffer_capacity_bytes": (_REQUIRED, _integer(1)),
    "seed": (_REQUIRED, _integer(0)),
    "coarse_step_s": (30.0, _num(lo=0, lo_open=True)),
    "record_timeline": (False, _boolean),
}

_SECTIONS = ("orbit", "stations", "link", "corpus", "detectors",
             "policy", "filter", "power", "sim")


def _detector_from(values: dict) -> DetectorProfile:
    recall = values["recall"]
    if isinstance(recall, list):
        recall = tuple(recall)
    return DetectorProfile(
        name=values["name"], recall=recall, fp_rate=values["fp_rate"],
        loc_noise_px=values["loc_noise_px"],
        conf_tp=tuple(values["conf_tp"]), conf_fp=tuple(values["conf_fp"]),
        latency_s_per_tile=values["latency_s_per_tile"],
        energy_j_per_tile=values["energy_j_per_tile"],
        num_classes=values["num_classes"])


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a validated Scenario, reporting every violation at once."""
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise ScenarioError(["document: expected a mapping of sections"])
    for key in doc:
        if key not in _SECTIONS:
            problems.append(f"{key}: unknown section")
    for section in _SECTIONS:
        if section not in doc:
            problems.append(f"{section}: missing section")
    if problems:
        raise ScenarioError(problems)

    orbit_v = _check_section(doc["orbit"], "orbit", _ORBIT_SCHEMA, problems)
    stations_raw = doc["stations"]
    stations_v = []
    if not isinstance(stations_raw, list) or not stations_raw:
        problems.append("stations: expected a non-empty list")
    else:
        for i, st in enumerate(stations_raw):
            stations_v.append(_check_section(st, f"stations[{i}]", _STATION_SCHEMA, problems))
    link_v = _check_section(doc["link"], "link", _LINK_SCHEMA, problems)
    corpus_v = _check_section(doc["corpus"], "corpus", _CORPUS_SCHEMA, problems)

    detectors_raw = doc["detectors"]
    det_v = {}
    if not isinstance(detectors_raw, dict):
        problems.append("detectors: expected a mapping with onboard and ground")
    else:
        for key in detectors_raw:
            if key not in ("onboard", "ground"):
                problems.append(f"detectors.{key}: unknown key")
        for role in ("onboard", "ground"):
            if role not in detectors_raw:
                problems.append(f"detectors.{role}: missing required key")
            else:
                det_v[role] = _check_section(detectors_raw[role],
                                             f"detectors.{role}", _DETECTOR_SCHEMA, problems)

    policy_v = _check_section(doc["policy"], "policy", _POLICY_SCHEMA, problems)
    filter_v = _check_section(doc["filter"], "filter", _FILTER_SCHEMA, problems)
    power_v = _check_section(doc["power"], "power", _POWER_SCHEMA, problems)
    sim_v = _check_section(doc["sim"], "sim", _SIM_SCHEMA, problems)

    if "tile_px" in corpus_v and "frame_px" in corpus_v:
        if corpus_v["tile_px"] > corpus_v["frame_px"]:
            problems.append("corpus.tile_px: must be <= corpus.frame_px")
    if "min_object_px" in corpus_v and "max_object_px" in corpus_v:
        if corpus_v["min_object_px"] > corpus_v["max_object_px"]:
            problems.append("corpus.min_object_px: must be <= corpus.max_object_px")
    if problems:
        raise ScenarioError(problems)

    try:
        scenario = Scenario(
            orbit=OrbitSpec(**orbit_v),
            stations=tuple(GroundStation(**sv) for sv in stations_v),
            link=LinkSpec(**link_v),
            corpus=CorpusSpec(**{k: (tuple(v) if isinstance(v, list) else v)
                                 for k, v in corpus_v.items()}),
            onboard_profile=_detector_from(det_v["onboard"]),
            ground_profile=_detector_from(det_v["ground"]),
            policy=RoutingPolicy(**policy_v),
            filter=FilterPolicy(**filter_v),
            power=PowerProfile(
                bus_w={
                    Subsystem.ELECTRICAL: power_v["electrical_w"],
                    Subsystem.PROPULSION: power_v["propulsion_w"],
                    Subsystem.GUIDANCE: power_v["guidance_w"],
                    Subsystem.AVIONICS: power_v["avionics_w"],
                    Subsystem.COMM: power_v["comm_w"],
                },
                payloads_rail_w=power_v["payloads_rail_w"],
                children_w={
                    Subsystem.CAMERA: power_v["camera_w"],
                    Subsystem.OCCULTATION: power_v["occultation_w"],
                    Subsystem.TRIBOLOGY: power_v["tribology_w"],
                    Subsystem.MEMS: power_v["mems_w"],
                    Subsystem.ADSBS: power_v["adsbs_w"],
                    Subsystem.COMPUTE: power_v["compute_w"],
                },
                compute_idle_w=power_v["compute_idle_w"],
                compute_active_w=power_v["compute_active_w"],
                comm_idle_w=power_v["comm_idle_w"],
                comm_active_w=power_v["comm_active_w"],
                duty_cycle=power_v["duty_cycle"],
            ),
            capture_period_s=sim_v["capture_period_s"],
            horizon_s=sim_v["horizon_s"],
            buffer_capacity_bytes=sim_v["buffer_capacity_bytes"],
            seed=sim_v["seed"],
            sat_id=sim_v["sat_id"],
            coarse_step_s=sim_v["coarse_step_s"],
            record_timeline=sim_v["record_timeline"],
        )
    except ValueError as exc:
        raise ScenarioError([str(exc)]) from exc
    return scenario


def scenario_to_dict(s: Scenario) -> dict:
    """Fully resolved scenario document; round-trips through scenario_from_dict."""
    def detector(p: DetectorProfile) -> dict:
        return {
            "name": p.name,
            "recall": list(p.recall) if isinstance(p.recall, tuple) else p.recall,
            "fp_rate": p.fp_rate,
            "loc_noise_px": p.loc_noise_px,
            "conf_tp": list(p.conf_tp),
            "conf_fp": list(p.conf_fp),
            "latency_s_per_tile": p.latency_s_per_tile,
            "energy_j_per_tile": p.energy_j_per_tile,
            "num_classes": p.num_classes,
        }

    return {
        "orbit": {
            "altitude_km": s.orbit.altitude_km,
            "inclination_deg": s.orbit.inclination_deg,
            "raan_deg": s.orbit.raan_deg,
            "phase_deg": s.orbit.phase_deg,
            "epoch_s": s.orbit.epoch_s,
        },
        "stations": [{
            "id": st.id,
            "lat_deg": st.lat_deg,
            "lon_deg": st.lon_deg,
            "min_elevation_deg": st.min_elevation_deg,
        } for st in s.stations],
        "link": {
            "uplink_mbps": s.link.uplink_mbps,
            "downlink_mbps": s.link.downlink_mbps,
            "loss_prob": s.link.loss_prob,
            "per_pass_overhead_s": s.link.per_pass_overhead_s,
        },
        "corpus": {
            "num_frames": s.corpus.num_frames,
            "frame_px": s.corpus.frame_px,
            "tile_px": s.corpus.tile_px,
            "bytes_per_px": s.corpus.bytes_per_px,
            "redundant_fraction": s.corpus.redundant_fraction,
            "objects_per_nonredundant_tile": s.corpus.objects_per_nonredundant_tile,
            "num_classes": s.corpus.num_classes,
            "cloudy_share": s.corpus.cloudy_share,
            "cloudy_cloud_range": list(s.corpus.cloudy_cloud_range),
            "clear_cloud_range": list(s.corpus.clear_cloud_range),
            "min_object_px": s.corpus.min_object_px,
            "max_object_px": s.corpus.max_object_px,
        },
        "detectors": {
            "onboard": detector(s.onboard_profile),
            "ground": detector(s.ground_profile),
        },
        "policy": {
            "confidence_threshold": s.policy.confidence_threshold,
            "aggregation": s.policy.aggregation,
            "result_bytes_per_det": s.policy.result_bytes_per_det,
            "result_header_bytes": s.policy.result_header_bytes,
            "result_cap_bytes": s.policy.result_cap_bytes,
        },
        "filter": {
            "cloud_threshold": s.filter.cloud_threshold,
            "drop_empty": s.filter.drop_empty,
            "min_object_area_px": s.filter.min_object_area_px,
        },
        "power": {
            "electrical_w": s.power.bus_w[Subsystem.ELECTRICAL],
            "propulsion_w": s.power.bus_w[Subsystem.PROPULSION],
            "guidance_w": s.power.bus_w[Subsystem.GUIDANCE],
            "avionics_w": s.power.bus_w[Subsystem.AVIONICS],
            "comm_w": s.power.bus_w[Subsystem.COMM],
            "payloads_rail_w": s.power.payloads_rail_w,
            "camera_w": s.power.children_w[Subsystem.CAMERA],
            "occultation_w": s.power.children_w[Subsystem.OCCULTATION],
            "tribology_w": s.power.children_w[Subsystem.TRIBOLOGY],
            "mems_w": s.power.children_w[Subsystem.MEMS],
            "adsbs_w": s.power.children_w[Subsystem.ADSBS],
            "compute_w": s.power.children_w[Subsystem.COMPUTE],
            "compute_idle_w": s.power.compute_idle_w,
            "compute_active_w": s.power.compute_active_w,
            "comm_idle_w": s.power.comm_idle_w,
            "comm_active_w": s.power.comm_active_w,
            "duty_cycle": s.power.duty_cycle,
        },
        "sim": {
            "sat_id": s.sat_id,
            "horizon_s": s.horizon_s,
            "capture_period_s": s.capture_period_s,
            "buffer_capacity_bytes": s.buffer_capacity_bytes,
            "seed": s.seed,
            "coarse_step_s": s.coarse_step_s,
            "record_timeline": s.record_timeline,
        },
    }


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return scenario_from_dict(doc)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(scenario_to_dict(scenario), fh, sort_keys=False)


def bundled_scenario_path(name: str) -> Path:
    return _BUNDLED_DIR / f"{name}.yaml"


def resolve_scenario_path(arg: str) -> Path:
    """Resolve a CLI scenario argument: literal path, then $OECSIM_SCENARIOS
    directory, then the bundled presets."""
    p = Path(arg)
    if p.exists():
        return p
    env_dir = os.environ.get(SCENARIO_DIR_ENV)
    candidates = []
    if env_dir:
        candidates += [Path(env_dir) / arg, Path(env_dir) / f"{arg}.yaml"]
    candidates += [bundled_scenario_path(arg)]
    for c in candidates:
        if c.exists():
            return c
    raise FileNotFoundError(f"scenario not found: {arg}")


def baoyun_default() -> Scenario:
    """The bundled default scenario."""
    return load_scenario(bundled_scenario_path("baoyun_default"))
