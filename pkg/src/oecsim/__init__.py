"""oecsim: deterministic simulation of satellite-ground collaborative inference.

The library covers circular-orbit contact windows, store-and-forward link
scheduling, synthetic Earth-observation corpora with onboard redundancy
filtering, stochastic detector profiles with confidence-gated offloading,
exact mAP evaluation, per-subsystem energy accounting, and a discrete-event
engine that ties the loop together.
"""

__version__ = "0.1.0"

from .calibrate import CalibrationError, CalibrationResult, calibrate_profiles
from .detection import Detection, DetectorProfile, RouteDecision, RoutingPolicy, detect, route, tile_confidence
from .energy import EnergyLedger, PowerProfile, Subsystem, accrue, fractions
from .engine import Report, compare_accuracy, run, sweep
from .imaging import (CorpusSpec, FilterPolicy, GroundTruthObject, ImageFrame,
                      Tile, dota_v1_like, dota_v2_like, filter_redundant,
                      generate_corpus, load_corpus, save_corpus, split_frame)
from .link import LinkSpec, TransferJob, TransferRecord, goodput_mbps, schedule, transfer_time_s
from .mapeval import MapResult, evaluate_map, iou
from .orbit import (ContactWindow, GroundStation, OrbitSpec, contact_windows,
                    elevation_deg, orbital_period, propagate)
from .rng import RngStreams
from .scenario import Scenario, ScenarioError, baoyun_default, load_scenario, save_scenario

__all__ = [
    "__version__",
    "CalibrationError", "CalibrationResult", "calibrate_profiles",
    "Detection", "DetectorProfile", "RouteDecision", "RoutingPolicy",
    "detect", "route", "tile_confidence",
    "EnergyLedger", "PowerProfile", "Subsystem", "accrue", "fractions",
    "Report", "compare_accuracy", "run", "sweep",
    "CorpusSpec", "FilterPolicy", "GroundTruthObject", "ImageFrame", "Tile",
    "dota_v1_like", "dota_v2_like", "filter_redundant", "generate_corpus",
    "load_corpus", "save_corpus", "split_frame",
    "LinkSpec", "TransferJob", "TransferRecord", "goodput_mbps", "schedule",
    "transfer_time_s",
    "MapResult", "evaluate_map", "iou",
    "ContactWindow", "GroundStation", "OrbitSpec", "contact_windows",
    "elevation_deg", "orbital_period", "propagate",
    "RngStreams",
    "Scenario", "ScenarioError", "baoyun_default", "load_scenario", "save_scenario",
]
