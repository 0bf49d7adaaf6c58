"""Per-subsystem power accounting.

The ledger tracks joules for the five bus subsystems, the payloads power
rail, and the six payload instruments. The default profile carries the
Baoyun platform figures; note its payload children sum to 27.88 W while the
payloads rail is specified as 26.93 W. The 0.95 W discrepancy is reported
as-is rather than reconciled.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Subsystem(str, Enum):
    ELECTRICAL = "electrical"
    PROPULSION = "propulsion"
    GUIDANCE = "guidance"
    AVIONICS = "avionics"
    COMM = "comm"
    PAYLOADS = "payloads"  # aggregate rail
    CAMERA = "camera"
    OCCULTATION = "occultation"
    TRIBOLOGY = "tribology"
    MEMS = "mems"
    ADSBS = "adsbs"
    COMPUTE = "compute"


BUS_SUBSYSTEMS = (Subsystem.ELECTRICAL, Subsystem.PROPULSION, Subsystem.GUIDANCE,
                  Subsystem.AVIONICS, Subsystem.COMM)
PAYLOAD_CHILDREN = (Subsystem.CAMERA, Subsystem.OCCULTATION, Subsystem.TRIBOLOGY,
                    Subsystem.MEMS, Subsystem.ADSBS, Subsystem.COMPUTE)
TOP_LEVEL = BUS_SUBSYSTEMS + (Subsystem.PAYLOADS,)


@dataclass(frozen=True)
class PowerProfile:
    """Average subsystem powers, with idle/active pairs for compute and comm.

    duty_cycle selects whether the ledger charges compute and comm at their
    idle/active pairs (active while working) instead of the flat averages.
    """

    bus_w: dict[Subsystem, float] = field(default_factory=lambda: {
        Subsystem.ELECTRICAL: 1.47,
        Subsystem.PROPULSION: 7.00,
        Subsystem.GUIDANCE: 5.43,
        Subsystem.AVIONICS: 4.81,
        Subsystem.COMM: 5.43,
    })
    payloads_rail_w: float = 26.93
    children_w: dict[Subsystem, float] = field(default_factory=lambda: {
        Subsystem.CAMERA: 0.09,
        Subsystem.OCCULTATION: 6.26,
        Subsystem.TRIBOLOGY: 5.68,
        Subsystem.MEMS: 0.95,
        Subsystem.ADSBS: 6.12,
        Subsystem.COMPUTE: 8.78,
    })
    compute_idle_w: float = 2.0
    compute_active_w: float = 8.78
    comm_idle_w: float = 5.43
    comm_active_w: float = 5.43
    duty_cycle: bool = False

    def __post_init__(self):
        for name, value in self.all_watts().items():
            if value < 0:
                raise ValueError(f"negative power for {name}")

    def all_watts(self) -> dict[str, float]:
        out = {s.value: w for s, w in self.bus_w.items()}
        out["payloads"] = self.payloads_rail_w
        out.update({s.value: w for s, w in self.children_w.items()})
        out.update({
            "compute_idle": self.compute_idle_w,
            "compute_active": self.compute_active_w,
            "comm_idle": self.comm_idle_w,
            "comm_active": self.comm_active_w,
        })
        return out

    @property
    def children_sum_w(self) -> float:
        return sum(self.children_w.values())

    @property
    def rail_discrepancy_w(self) -> float:
        """Children sum minus the payloads rail figure (0.95 W by default)."""
        return self.children_sum_w - self.payloads_rail_w


@dataclass
class EnergyLedger:
    """Accumulated joules per subsystem over simulated time."""

    joules: dict[Subsystem, float] = field(
        default_factory=lambda: {s: 0.0 for s in Subsystem})
    total_elapsed_s: float = 0.0

    def accrue(self, subsystem: Subsystem, watts: float, duration_s: float) -> "EnergyLedger":
        if watts < 0 or duration_s < 0:
            raise ValueError("watts and duration_s must be >= 0")
        self.joules[subsystem] += watts * duration_s
        return self

    @property
    def payloads_children_j(self) -> float:
        return sum(self.joules[c] for c in PAYLOAD_CHILDREN)

    @property
    def payloads_j(self) -> float:
        """Rail joules when accrued; otherwise the children sum."""
        rail = self.joules[Subsystem.PAYLOADS]
        return rail if rail > 0 else self.payloads_children_j

    @property
    def total_j(self) -> float:
        return sum(self.joules[s] for s in BUS_SUBSYSTEMS) + self.payloads_j


@dataclass(frozen=True)
class EnergyFractions:
    fractions: dict[Subsystem, float]
    payloads_over_total: float
    compute_over_payloads: float
    compute_over_total: float
    total_j: float
    payloads_j: float
    payloads_children_j: float
    discrepancy_j: float


def accrue(ledger: EnergyLedger, subsystem: Subsystem, watts: float,
           duration_s: float) -> EnergyLedger:
    """joules[subsystem] += watts * duration_s."""
    return ledger.accrue(subsystem, watts, duration_s)


def fractions(ledger: EnergyLedger) -> EnergyFractions:
    """Per-subsystem energy shares plus the three named payload/compute ratios."""
    total = ledger.total_j
    if not total > 0:
        raise ValueError("fractions undefined for a ledger with zero total energy")
    shares = {s: ledger.joules[s] / total for s in Subsystem if s != Subsystem.PAYLOADS}
    shares[Subsystem.PAYLOADS] = ledger.payloads_j / total
    payloads = ledger.payloads_j
    compute = ledger.joules[Subsystem.COMPUTE]
    return EnergyFractions(
        fractions=shares,
        payloads_over_total=payloads / total,
        compute_over_payloads=compute / payloads if payloads > 0 else 0.0,
        compute_over_total=compute / total,
        total_j=total,
        payloads_j=ledger.payloads_j,
        payloads_children_j=ledger.payloads_children_j,
        discrepancy_j=ledger.payloads_children_j - ledger.payloads_j,
    )


def constant_power_ledger(profile: PowerProfile, duration_s: float) -> EnergyLedger:
    """Every subsystem held at its flat average power for duration_s."""
    ledger = EnergyLedger(total_elapsed_s=duration_s)
    for s, w in profile.bus_w.items():
        ledger.accrue(s, w, duration_s)
    ledger.accrue(Subsystem.PAYLOADS, profile.payloads_rail_w, duration_s)
    for s, w in profile.children_w.items():
        ledger.accrue(s, w, duration_s)
    return ledger
