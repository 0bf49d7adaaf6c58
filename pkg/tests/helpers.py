"""Shared test fixtures: random scenarios and a dense window-finding oracle."""
import numpy as np

from oecsim.detection import DetectorProfile, RoutingPolicy
from oecsim.energy import PowerProfile
from oecsim.imaging import CorpusSpec, FilterPolicy
from oecsim.link import LinkSpec
from oecsim.orbit import GroundStation, OrbitSpec, elevation_deg, propagate
from oecsim.scenario import Scenario


def make_random_scenario(seed: int) -> Scenario:
    """Small randomized scenario for conservation/determinism sweeps."""
    rng = np.random.default_rng(seed)
    tile_px = int(rng.choice([64, 128, 256]))
    frame_px = tile_px * int(rng.integers(2, 5))
    num_classes = int(rng.integers(1, 5))
    onboard = DetectorProfile(
        name="ob", recall=float(rng.uniform(0.1, 0.9)),
        fp_rate=float(rng.uniform(0.0, 0.8)),
        loc_noise_px=float(rng.uniform(0.0, 4.0)),
        conf_tp=(float(rng.uniform(2, 8)), float(rng.uniform(1, 4))),
        conf_fp=(2.0, float(rng.uniform(4, 9))),
        latency_s_per_tile=float(rng.uniform(0.05, 1.0)),
        num_classes=num_classes)
    ground = DetectorProfile(
        name="gd", recall=float(rng.uniform(0.3, 0.95)),
        fp_rate=float(rng.uniform(0.0, 0.3)),
        loc_noise_px=1.0,
        conf_tp=(8.0, 2.0), conf_fp=(2.0, 8.0),
        latency_s_per_tile=0.05, num_classes=num_classes)
    return Scenario(
        orbit=OrbitSpec(altitude_km=float(rng.uniform(400, 800)),
                        inclination_deg=float(rng.uniform(20, 110)),
                        raan_deg=float(rng.uniform(0, 360)),
                        phase_deg=float(rng.uniform(0, 360))),
        stations=(GroundStation("gs", float(rng.uniform(-60, 60)),
                                float(rng.uniform(-180, 180)),
                                float(rng.uniform(5, 25))),),
        link=LinkSpec(uplink_mbps=float(rng.uniform(0.1, 1.0)),
                      downlink_mbps=float(rng.uniform(0.5, 60.0)),
                      loss_prob=float(rng.uniform(0.0, 0.9)),
                      per_pass_overhead_s=float(rng.uniform(0.0, 20.0))),
        corpus=CorpusSpec(num_frames=int(rng.integers(3, 10)),
                          frame_px=frame_px, tile_px=tile_px,
                          bytes_per_px=int(rng.integers(1, 4)),
                          redundant_fraction=float(rng.uniform(0.0, 1.0)),
                          objects_per_nonredundant_tile=float(rng.uniform(1.0, 3.0)),
                          num_classes=num_classes),
        onboard_profile=onboard,
        ground_profile=ground,
        policy=RoutingPolicy(confidence_threshold=float(rng.uniform(0.0, 1.0))),
        filter=FilterPolicy(cloud_threshold=float(rng.uniform(0.3, 0.8)),
                            drop_empty=bool(rng.uniform() < 0.9)),
        power=PowerProfile(duty_cycle=bool(rng.uniform() < 0.5)),
        capture_period_s=float(rng.uniform(120, 900)),
        horizon_s=float(rng.uniform(3600, 14400)),
        buffer_capacity_bytes=int(rng.integers(1, 60)) * 1_000_000,
        seed=int(rng.integers(0, 10_000)),
    )


def dense_windows(orbit: OrbitSpec, station: GroundStation, horizon_s: float,
                  step_s: float = 1.0, refine_tol_s: float = 0.01):
    """Window oracle: dense sampling plus its own boundary refinement.

    Returns a list of (start_s, end_s) with boundaries refined to
    refine_tol_s by repeated halving of the bracketing sample interval.
    """
    n = int(np.ceil(horizon_s / step_s))
    times = np.minimum(np.arange(n + 1) * step_s, horizon_s)
    elev = np.atleast_1d(elevation_deg(station, propagate(orbit, times)))
    above = elev >= station.min_elevation_deg

    def refine(lo, hi):
        above_hi = (elevation_deg(station, propagate(orbit, hi))
                    >= station.min_elevation_deg)
        while hi - lo > refine_tol_s:
            mid = 0.5 * (lo + hi)
            mid_above = (elevation_deg(station, propagate(orbit, mid))
                         >= station.min_elevation_deg)
            if mid_above == above_hi:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    windows = []
    open_t = None
    for i in range(len(times)):
        if above[i] and open_t is None:
            open_t = 0.0 if i == 0 else refine(float(times[i - 1]), float(times[i]))
        elif not above[i] and open_t is not None:
            windows.append((open_t, refine(float(times[i - 1]), float(times[i]))))
            open_t = None
    if open_t is not None:
        windows.append((open_t, float(horizon_s)))
    return windows
