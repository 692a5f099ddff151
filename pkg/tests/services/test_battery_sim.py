import math

import numpy as np
import pytest

from src.config.presets import DEFAULT_LINK, DEFAULT_BLOCKLENGTH, URLLC_CONSTRAINTS, EBCH128_MODEL
from src.domain.errors import DomainError, ValidationError
from src.domain.models import BatteryState, LinkBudget, SimResult
from src.services.battery_sim import (
    BatterySimulator,
    alpha_from_battery,
    codeword_log,
    compare_policies,
    energy_efficiency,
    tx_power_watts,
    weight_for_battery,
)
from src.services.moop import reference_pair

N = DEFAULT_BLOCKLENGTH
EPS = URLLC_CONSTRAINTS.eps_m


def make_sim(r_s: float = 0.5, grid_step_db: float = 0.01, **kwargs) -> BatterySimulator:
    return BatterySimulator(
        ref=reference_pair(N, r_s, EPS),
        constraints=URLLC_CONSTRAINTS,
        model=EBCH128_MODEL,
        link=DEFAULT_LINK,
        grid_step_db=grid_step_db,
        **kwargs,
    )


@pytest.fixture(scope="module")
def sim_05():
    return make_sim(0.5)


# -------------------------
# Link budget and weight
# -------------------------

def test_tx_power_reference_point():
    assert tx_power_watts(0.0, DEFAULT_LINK) == pytest.approx(1e-7)


def test_tx_power_doubles_with_three_db():
    base = tx_power_watts(5.0, DEFAULT_LINK)
    assert tx_power_watts(5.0 + 10.0 * math.log10(2.0), DEFAULT_LINK) == pytest.approx(2.0 * base)


def test_tx_power_at_reference_distance():
    near = LinkBudget(distance_m=1.0)
    # rho + noise + PL(1 m) = 0 - 110 + 30 dBm
    assert tx_power_watts(0.0, near) == pytest.approx(1e-11)


def test_tx_power_scales_with_distance_exponent():
    far = LinkBudget(distance_m=200.0, pathloss_exponent=3.0)
    near = LinkBudget(distance_m=100.0, pathloss_exponent=3.0)
    assert tx_power_watts(2.0, far) == pytest.approx(8.0 * tx_power_watts(2.0, near))


def test_alpha_from_battery_values():
    assert alpha_from_battery(0.0) == 0.0
    assert alpha_from_battery(1.0) == pytest.approx(0.2)
    with pytest.raises(DomainError):
        alpha_from_battery(1.5)


def test_formula_weight_is_the_default():
    assert weight_for_battery(0.0) == 0.0
    assert weight_for_battery(1.0) == pytest.approx(0.2)
    assert weight_for_battery(0.5) == pytest.approx(0.1)


def test_unit_weight_spans_unit_interval():
    assert weight_for_battery(1.0, alpha_scale="unit") == pytest.approx(1.0)
    assert weight_for_battery(0.5, alpha_scale="unit") == pytest.approx(0.5)


def test_percent_scale():
    assert weight_for_battery(0.01, t_scale="percent") == pytest.approx(0.2)
    assert weight_for_battery(1.0, alpha_scale="unit", t_scale="percent") == pytest.approx(1.0)


def test_weight_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        weight_for_battery(0.5, alpha_scale="log")
    with pytest.raises(DomainError):
        weight_for_battery(-0.1)


def test_weight_is_monotone():
    ts = np.linspace(0.0, 1.0, 101)
    weights = [weight_for_battery(t) for t in ts]
    assert all(b > a for a, b in zip(weights, weights[1:]))


# -------------------------
# Trajectories
# -------------------------

def test_efficiency_of_empty_run():
    battery = BatteryState.full(1.0)
    empty = SimResult(
        policy="fixed1", n=N, r_s=0.5, total_transmissions=0, total_info_bits=0.0,
        steps=(), efficiency_bits_per_joule=0.0, remaining_joules=battery.capacity_joules,
        capacity_joules=battery.capacity_joules,
    )
    assert energy_efficiency(empty, battery) == 0.0


def test_full_power_policy_closed_form(sim_05):
    battery = BatteryState.full(1.0)
    result = sim_05.run("fixed1", battery)
    end = sim_05.boundary.end
    energy = tx_power_watts(end.snr_db, DEFAULT_LINK) * N * URLLC_CONSTRAINTS.T_s

    assert len(result.steps) == 1
    assert result.total_transmissions == pytest.approx(3600.0 / energy, abs=1.0)
    assert result.efficiency_bits_per_joule == pytest.approx(N * 0.5 * result.total_transmissions / 3600.0)
    assert energy_efficiency(result, battery) == pytest.approx(result.efficiency_bits_per_joule)


def test_first_codeword_uses_full_battery_weight(sim_05):
    for policy in ("theta1", "thetainf"):
        result = sim_05.run(policy, BatteryState.full(1.0))
        assert result.steps[0].t == 1.0
        assert result.steps[0].alpha == pytest.approx(alpha_from_battery(1.0))


def test_weighted_sum_switches_once(sim_05):
    result = sim_05.run("theta1", BatteryState.full(1.0))
    assert len(result.steps) == 2
    first, second = result.steps
    assert first.delta_r == 0.0
    assert first.snr_db == pytest.approx(sim_05.boundary.end.snr_db)
    assert second.snr_db == pytest.approx(sim_05.boundary.ref.rho_s_db)
    assert second.t == pytest.approx(0.5, abs=1e-6)


def test_chebyshev_lowers_power_gradually(sim_05):
    result = sim_05.run("thetainf", BatteryState.full(1.0))
    powers = [s.snr_db for s in result.steps]
    assert all(b <= a for a, b in zip(powers, powers[1:]))
    assert len(set(powers)) >= 10


def test_chebyshev_rate_falls_with_battery(sim_05):
    levels = np.linspace(1.0, 0.05, 12)
    rates = [sim_05.boundary.points[sim_05.select("thetainf", float(t))].rate for t in levels]
    assert all(b <= a for a, b in zip(rates, rates[1:]))
    assert len(set(rates)) >= 10
    assert rates[0] <= 0.5
    assert rates[-1] >= 0.5 - sim_05.boundary.delta_r_s_min


def test_energy_is_conserved(sim_05):
    battery = BatteryState.full(1.0)
    for policy in ("theta1", "thetainf", "fixed0", "fixed1"):
        result = sim_05.run(policy, battery)
        assert result.energy_used_j + result.remaining_joules == pytest.approx(battery.capacity_joules, rel=1e-9)
        assert sum(s.codewords for s in result.steps) == result.total_transmissions


def test_run_lengths_match_codeword_loop():
    sim = make_sim(0.5, grid_step_db=0.05)
    energy_end = tx_power_watts(sim.boundary.end.snr_db, DEFAULT_LINK) * N * URLLC_CONSTRAINTS.T_s
    capacity = 3000 * energy_end
    battery = BatteryState(capacity_joules=capacity, remaining_joules=capacity)

    result = sim.run("thetainf", battery)

    remaining = capacity
    count = 0
    while True:
        idx = sim.select("thetainf", remaining / capacity)
        p = sim.boundary.points[idx]
        energy = tx_power_watts(p.snr_db, DEFAULT_LINK) * N * URLLC_CONSTRAINTS.T_s
        if remaining < energy:
            break
        remaining -= energy
        count += 1

    assert abs(result.total_transmissions - count) <= 1


def test_codeword_log_has_one_row_per_transmission():
    sim = make_sim(0.5, grid_step_db=0.05)
    battery = BatteryState.full(1e-10)
    result = sim.run("thetainf", battery)
    rows = list(codeword_log(result))

    assert result.total_transmissions > 1000
    assert len(rows) == result.total_transmissions
    assert [r.index for r in rows] == list(range(len(rows)))
    assert math.fsum(r.energy_j for r in rows) == pytest.approx(result.energy_used_j, rel=1e-9)
    assert all(b.t <= a.t for a, b in zip(rows, rows[1:]))
    for r in rows[:: max(len(rows) // 50, 1)]:
        assert r.alpha == pytest.approx(weight_for_battery(r.t))


def test_unknown_policy(sim_05):
    with pytest.raises(ValidationError):
        sim_05.run("greedy", BatteryState.full(1.0))


# -------------------------
# Policy comparison
# -------------------------

def test_compare_policies_against_full_power():
    rows = compare_policies(
        [0.5],
        n=N,
        constraints=URLLC_CONSTRAINTS,
        model=EBCH128_MODEL,
        link=DEFAULT_LINK,
        capacity_wh=1.0,
        policies=("theta1", "fixed1"),
    )
    by_policy = {r.policy: r for r in rows}
    assert by_policy["fixed1"].ratio_to_full_power == 1.0
    assert 1.15 <= by_policy["theta1"].ratio_to_full_power <= 1.45


@pytest.mark.slow
def test_adaptive_policies_outlast_full_power():
    rates = [round(r, 1) for r in np.arange(0.3, 0.95, 0.1)]
    rows = compare_policies(
        rates,
        n=N,
        constraints=URLLC_CONSTRAINTS,
        model=EBCH128_MODEL,
        link=DEFAULT_LINK,
        capacity_wh=1.0,
        policies=("theta1", "thetainf", "fixed0", "fixed1"),
    )
    table = {(r.r_s, r.policy): r for r in rows}
    for r_s in rates:
        full = table[(r_s, "fixed1")].transmissions
        lowest = table[(r_s, "fixed0")].transmissions
        for policy in ("theta1", "thetainf"):
            assert full <= table[(r_s, policy)].transmissions <= lowest
        assert (
            table[(r_s, "thetainf")].efficiency_bits_per_joule
            >= table[(r_s, "theta1")].efficiency_bits_per_joule
        )
