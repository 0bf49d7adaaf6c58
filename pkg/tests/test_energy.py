import pytest

from oecsim.energy import (BUS_SUBSYSTEMS, PAYLOAD_CHILDREN, EnergyLedger,
                           PowerProfile, Subsystem, accrue,
                           constant_power_ledger, fractions)


def test_accrue_raspberry_pi_hour():
    ledger = EnergyLedger()
    accrue(ledger, Subsystem.COMPUTE, 8.78, 1000.0)
    assert ledger.joules[Subsystem.COMPUTE] == pytest.approx(8780.0)


def test_accrue_zero_watts_noop():
    ledger = EnergyLedger()
    accrue(ledger, Subsystem.COMM, 0.0, 12345.0)
    assert ledger.joules[Subsystem.COMM] == 0.0


def test_accrue_additive():
    a = EnergyLedger()
    accrue(a, Subsystem.CAMERA, 5.0, 1.0)
    accrue(a, Subsystem.CAMERA, 5.0, 1.0)
    b = EnergyLedger()
    accrue(b, Subsystem.CAMERA, 10.0, 1.0)
    assert a.joules[Subsystem.CAMERA] == b.joules[Subsystem.CAMERA]


def test_accrue_rejects_negative():
    ledger = EnergyLedger()
    with pytest.raises(ValueError):
        accrue(ledger, Subsystem.COMM, -1.0, 10.0)
    with pytest.raises(ValueError):
        accrue(ledger, Subsystem.COMM, 1.0, -10.0)


def test_fractions_zero_total_rejected():
    with pytest.raises(ValueError):
        fractions(EnergyLedger())


def test_platform_ratios_from_constant_powers():
    # The three named ratios with all subsystems at their flat averages.
    for duration in (1.0, 3600.0, 86400.0):
        frac = fractions(constant_power_ledger(PowerProfile(), duration))
        assert frac.payloads_over_total == pytest.approx(26.93 / 51.07, abs=1e-12)
        assert frac.compute_over_payloads == pytest.approx(8.78 / 26.93, abs=1e-12)
        assert frac.compute_over_total == pytest.approx(8.78 / 51.07, abs=1e-12)


def test_platform_ratios_match_rounded_figures():
    frac = fractions(constant_power_ledger(PowerProfile(), 1000.0))
    assert abs(frac.payloads_over_total - 0.53) <= 0.007
    assert abs(frac.compute_over_payloads - 0.33) <= 0.007
    assert abs(frac.compute_over_total - 0.17) <= 0.007


def test_top_level_fractions_sum_to_one():
    frac = fractions(constant_power_ledger(PowerProfile(), 777.0))
    total = sum(frac.fractions[s] for s in BUS_SUBSYSTEMS) + frac.fractions[Subsystem.PAYLOADS]
    assert total == pytest.approx(1.0, abs=1e-12)


def test_fractions_scale_invariant():
    f1 = fractions(constant_power_ledger(PowerProfile(), 100.0))
    f2 = fractions(constant_power_ledger(PowerProfile(), 100.0 * 17.3))
    for s in Subsystem:
        assert f1.fractions[s] == pytest.approx(f2.fractions[s], abs=1e-12)
    assert f1.compute_over_total == pytest.approx(f2.compute_over_total, abs=1e-12)


def test_children_aggregate_without_rail():
    # When the payloads rail is not separately metered the aggregate is the
    # exact child sum.
    ledger = EnergyLedger()
    profile = PowerProfile()
    for child, watts in profile.children_w.items():
        accrue(ledger, child, watts, 10.0)
    for bus, watts in profile.bus_w.items():
        accrue(ledger, bus, watts, 10.0)
    assert ledger.payloads_j == ledger.payloads_children_j
    frac = fractions(ledger)
    assert frac.discrepancy_j == 0.0


def test_rail_discrepancy_reported():
    profile = PowerProfile()
    assert profile.children_sum_w == pytest.approx(27.88)
    assert profile.rail_discrepancy_w == pytest.approx(0.95)
    frac = fractions(constant_power_ledger(profile, 100.0))
    # 0.95 W over 100 s, reported rather than reconciled.
    assert frac.discrepancy_j == pytest.approx(95.0)


def test_power_profile_validation():
    with pytest.raises(ValueError):
        PowerProfile(payloads_rail_w=-1.0)
    with pytest.raises(ValueError):
        PowerProfile(compute_idle_w=-0.5)


def test_payload_children_enumeration():
    assert set(PAYLOAD_CHILDREN) == {
        Subsystem.CAMERA, Subsystem.OCCULTATION, Subsystem.TRIBOLOGY,
        Subsystem.MEMS, Subsystem.ADSBS, Subsystem.COMPUTE}
    assert len(BUS_SUBSYSTEMS) == 5
