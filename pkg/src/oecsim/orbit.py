"""Circular-orbit propagation and ground-station visibility.

Two-body circular orbit around a spherical Earth with uniform rotation.
Good to a few seconds on pass boundaries, which is all the downstream data
and energy accounting needs; no J2, drag, or light-time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

R_EARTH_KM = 6371.0
MU_KM3_S2 = 398600.4418
SIDEREAL_DAY_S = 86164.0905
EARTH_ROT_RAD_S = 2.0 * math.pi / SIDEREAL_DAY_S

DEFAULT_COARSE_STEP_S = 30.0
REFINE_TOL_S = 0.1


@dataclass(frozen=True)
class OrbitSpec:
    """Circular orbit: altitude plus plane orientation and initial phase.

    Angles are normalized on construction: raan/phase into [0, 360).
    """

    altitude_km: float
    inclination_deg: float = 97.4
    raan_deg: float = 0.0
    phase_deg: float = 0.0
    epoch_s: float = 0.0

    def __post_init__(self):
        if not self.altitude_km > 0:
            raise ValueError("altitude_km must be > 0")
        if not 0.0 <= self.inclination_deg <= 180.0:
            raise ValueError("inclination_deg must be in [0, 180]")
        object.__setattr__(self, "raan_deg", self.raan_deg % 360.0)
        object.__setattr__(self, "phase_deg", self.phase_deg % 360.0)

    @property
    def semimajor_km(self) -> float:
        return R_EARTH_KM + self.altitude_km

    @property
    def period_s(self) -> float:
        return orbital_period(self.altitude_km)


@dataclass(frozen=True)
class GroundStation:
    id: str
    lat_deg: float
    lon_deg: float
    min_elevation_deg: float = 10.0

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError("lat_deg must be in [-90, 90]")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError("lon_deg must be in [-180, 180]")
        if not 0.0 <= self.min_elevation_deg < 90.0:
            raise ValueError("min_elevation_deg must be in [0, 90)")


@dataclass(frozen=True)
class ContactWindow:
    """Interval during which a satellite-station pair can transfer data."""

    sat_id: str
    station_id: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError("window start_s must be < end_s")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def orbital_period(altitude_km: float) -> float:
    """Keplerian period 2*pi*sqrt(a^3/mu) for a circular orbit, seconds."""
    if not altitude_km > 0:
        raise ValueError("altitude_km must be > 0")
    a = R_EARTH_KM + altitude_km
    return 2.0 * math.pi * math.sqrt(a**3 / MU_KM3_S2)


def propagate_inertial(orbit: OrbitSpec, t) -> np.ndarray:
    """Inertial-frame position (km) at time t (scalar or array of seconds)."""
    t = np.asarray(t, dtype=float)
    a = orbit.semimajor_km
    n = 2.0 * math.pi / orbit.period_s
    u = math.radians(orbit.phase_deg) + n * (t - orbit.epoch_s)

    inc = math.radians(orbit.inclination_deg)
    raan = math.radians(orbit.raan_deg)
    # In-plane basis: p points at the ascending node, q 90 deg ahead in-plane.
    p = np.array([math.cos(raan), math.sin(raan), 0.0])
    q = np.array([-math.sin(raan) * math.cos(inc),
                  math.cos(raan) * math.cos(inc),
                  math.sin(inc)])
    pos = a * (np.multiply.outer(np.cos(u), p) + np.multiply.outer(np.sin(u), q))
    return pos


def propagate(orbit: OrbitSpec, t) -> np.ndarray:
    """Earth-fixed position (km) at time t.

    Rotates the inertial position by the uniform Earth rotation angle; the
    two frames coincide at t = 0. Accepts scalar t -> shape (3,) or an
    array of times -> shape (n, 3).
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    eci = propagate_inertial(orbit, t_arr)
    theta = EARTH_ROT_RAD_S * t_arr
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    x = eci[..., 0] * cos_t + eci[..., 1] * sin_t
    y = -eci[..., 0] * sin_t + eci[..., 1] * cos_t
    ecef = np.stack([x, y, eci[..., 2]], axis=-1)
    return ecef


def station_ecef(station: GroundStation) -> np.ndarray:
    """Earth-fixed position (km) of a sea-level station on the sphere."""
    lat = math.radians(station.lat_deg)
    lon = math.radians(station.lon_deg)
    return R_EARTH_KM * np.array([
        math.cos(lat) * math.cos(lon),
        math.cos(lat) * math.sin(lon),
        math.sin(lat),
    ])


def elevation_deg(station: GroundStation, sat_pos) -> np.ndarray | float:
    """Elevation of the satellite above the station's horizon plane, degrees.

    Negative below the horizon. Raises if the satellite position lies on or
    inside the Earth sphere.
    """
    pos = np.asarray(sat_pos, dtype=float)
    r = np.linalg.norm(pos, axis=-1)
    if np.any(r <= R_EARTH_KM):
        raise ValueError("satellite position is inside the Earth")
    up = station_ecef(station) / R_EARTH_KM
    d = pos - R_EARTH_KM * up
    sin_el = (d @ up) / np.linalg.norm(d, axis=-1)
    el = np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))
    return float(el) if el.ndim == 0 else el


def _bisect_crossing(f, lo: float, hi: float, tol: float) -> float:
    """Locate the sign change of f in (lo, hi) to within tol seconds."""
    f_hi_above = f(hi) >= 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (f(mid) >= 0.0) == f_hi_above:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _refine_peak(f, lo: float, hi: float, tol: float = 0.5) -> tuple[float, float]:
    """Golden-section maximize f on [lo, hi]; returns (t_peak, f(t_peak))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    t = 0.5 * (a + b)
    return t, f(t)


def contact_windows(orbit: OrbitSpec, station: GroundStation, horizon_s: float,
                    coarse_step_s: float = DEFAULT_COARSE_STEP_S,
                    sat_id: str = "sat") -> list[ContactWindow]:
    """All maximal intervals in [0, horizon_s] with elevation >= the mask.

    Coarse scan at coarse_step_s, boundaries refined by bisection to 0.1 s.
    Sub-step humps (a pass that rises above the mask and sets again between
    two coarse samples) are recovered by refining coarse local maxima.
    """
    if not horizon_s > 0:
        raise ValueError("horizon_s must be > 0")
    if not coarse_step_s > 0:
        raise ValueError("coarse_step_s must be > 0")

    n = int(math.ceil(horizon_s / coarse_step_s))
    times = np.minimum(np.arange(n + 1) * coarse_step_s, horizon_s)
    if len(times) >= 2 and times[-1] == times[-2]:
        times = times[:-1]
    elev = elevation_deg(station, propagate(orbit, times))
    elev = np.atleast_1d(elev)
    mask = station.min_elevation_deg
    above = elev >= mask

    def margin(t: float) -> float:
        return elevation_deg(station, propagate(orbit, t)) - mask

    # (time, opens) crossing events from coarse sign changes.
    events: list[tuple[float, bool]] = []
    for i in range(len(times) - 1):
        if above[i] != above[i + 1]:
            t = _bisect_crossing(margin, float(times[i]), float(times[i + 1]), REFINE_TOL_S)
            events.append((t, bool(above[i + 1])))

    # Below-mask local maxima can hide a short window between two samples.
    for i in range(1, len(times) - 1):
        if above[i - 1] or above[i] or above[i + 1]:
            continue
        if elev[i] > elev[i - 1] and elev[i] >= elev[i + 1]:
            t_peak, m_peak = _refine_peak(margin, float(times[i - 1]), float(times[i + 1]))
            if m_peak >= 0.0:
                t_open = _bisect_crossing(margin, float(times[i - 1]), t_peak, REFINE_TOL_S)
                t_close = _bisect_crossing(margin, t_peak, float(times[i + 1]), REFINE_TOL_S)
                events.append((t_open, True))
                events.append((t_close, False))

    events.sort(key=lambda e: e[0])
    windows: list[ContactWindow] = []
    open_t = 0.0 if above[0] else None
    for t, opens in events:
        if opens:
            if open_t is None:
                open_t = t
        else:
            if open_t is not None and t - open_t > 1e-6:
                windows.append(ContactWindow(sat_id, station.id, open_t, t))
            open_t = None
    if open_t is not None and horizon_s - open_t > 1e-6:
        windows.append(ContactWindow(sat_id, station.id, open_t, float(horizon_s)))
    return windows
