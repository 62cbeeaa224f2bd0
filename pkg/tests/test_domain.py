"""Domain model: travel metric, validation, ledger accounting, schedule
invariants, and canonical hashing.

The hop metric is cross-checked against networkx as an independent oracle.
"""

from __future__ import annotations

import dataclasses

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evdispatch.domain import (
    CapacityError, Facility, Region, ResourceLedger, ScenarioConfig, Schedule,
    Session, UNREACHABLE, config_to_dict, hops, instance_hash,
    recompute_ledger, schedule_violations, validate,
)
from evdispatch.harness import generate_scenario

from conftest import build_mini_config


# ---------------------------------------------------------------------------
# Travel metric
# ---------------------------------------------------------------------------


def _nx_oracle(config):
    g = nx.Graph()
    g.add_nodes_from(range(len(config.regions)))
    g.add_edges_from(config.edges)
    return dict(nx.all_pairs_shortest_path_length(g))


def test_hops_matches_networkx_on_desk_grid(desk_instance):
    config, _ = desk_instance
    oracle = _nx_oracle(config)
    n = len(config.regions)
    for a in range(n):
        for b in range(n):
            expected = oracle[a].get(b)
            got = hops(a, b, config)
            if expected is None:
                assert got is UNREACHABLE
            else:
                assert got == expected


def test_hops_unreachable_sentinel():
    # islands 2 and 3 carry no demand, so the config is still valid
    config = build_mini_config(
        regions=(
            Region(id=0, pickup_value=0.0, vehicle_limit=(4,) * 6, facility_id=0),
            Region(id=1, pickup_value=10.0, vehicle_limit=(4,) * 6),
            Region(id=2, pickup_value=0.0, vehicle_limit=(4,) * 6),
            Region(id=3, pickup_value=0.0, vehicle_limit=(4,) * 6),
        ),
        edges=((0, 1), (2, 3)),
    )
    assert validate(config) == []
    assert hops(0, 2, config) is UNREACHABLE
    assert hops(2, 3, config) == 1
    assert not UNREACHABLE
    assert repr(UNREACHABLE) == "Unreachable"
    with pytest.raises(ValueError):
        hops(0, 99, config)


@st.composite
def _random_graph_config(draw):
    n = draw(st.integers(min_value=1, max_value=7))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    edges = tuple(p for p in pairs if draw(st.booleans()))
    return build_mini_config(
        regions=tuple(Region(id=i, pickup_value=0.0, vehicle_limit=(1,) * 6)
                      for i in range(n)),
        edges=edges,
        facilities=(),
    )


@settings(max_examples=60, deadline=None)
@given(_random_graph_config(), st.data())
def test_hops_is_a_metric(config, data):
    n = len(config.regions)
    a = data.draw(st.integers(0, n - 1))
    b = data.draw(st.integers(0, n - 1))
    c = data.draw(st.integers(0, n - 1))
    assert hops(a, a, config) == 0
    ab, ba = hops(a, b, config), hops(b, a, config)
    assert ab == ba or (ab is UNREACHABLE and ba is UNREACHABLE)
    ac, cb = hops(a, c, config), hops(c, b, config)
    if ac is not UNREACHABLE and cb is not UNREACHABLE:
        assert ab is not UNREACHABLE and ab <= ac + cb
    oracle = _nx_oracle(config)
    expected = oracle[a].get(b)
    assert (ab is UNREACHABLE) == (expected is None)
    if expected is not None:
        assert ab == expected


# ---------------------------------------------------------------------------
# Config validation
# ---------------------------------------------------------------------------


def test_presets_validate_clean(desk_instance, tiny_instance):
    for config in (desk_instance[0], tiny_instance[0]):
        assert validate(config) == []


def test_validate_catches_trace_length_mismatch(mini_config):
    bad = dataclasses.replace(
        mini_config,
        out_of_service_penalty=(0.4,) * 5)
    assert any(v.field == "out_of_service_penalty" for v in validate(bad))


def test_validate_catches_nonpositive_grid_price(mini_config):
    fac = dataclasses.replace(mini_config.facilities[0], grid_price=(0.0,) * 6)
    bad = dataclasses.replace(mini_config, facilities=(fac,))
    assert any(v.field == "grid_price" for v in validate(bad))


def test_validate_catches_increment_not_dividing_capacity(mini_config):
    bad = dataclasses.replace(mini_config, charge_increment=3.0)
    assert any(v.field == "charge_increment" for v in validate(bad))


def test_validate_catches_disconnected_demand(mini_config):
    bad = build_mini_config(
        regions=(
            Region(id=0, pickup_value=0.0, vehicle_limit=(4,) * 6, facility_id=0),
            Region(id=1, pickup_value=10.0, vehicle_limit=(4,) * 6),
            Region(id=2, pickup_value=5.0, vehicle_limit=(4,) * 6),
        ),
        edges=((0, 1),),
    )
    assert any("not connected" in v.message for v in validate(bad))


def test_validate_catches_facility_region_mismatch(mini_config):
    fac = dataclasses.replace(mini_config.facilities[0], region_id=1)
    bad = dataclasses.replace(mini_config, facilities=(fac,))
    assert any(v.field == "facility_id" for v in validate(bad))


def test_validate_catches_bad_horizon(mini_config):
    bad = dataclasses.replace(mini_config, horizon=0)
    out = validate(bad)
    assert len(out) == 1 and out[0].field == "horizon"


# ---------------------------------------------------------------------------
# Resource ledger
# ---------------------------------------------------------------------------


def test_ledger_apply_and_violations(mini_config, mini_charge):
    ledger = ResourceLedger.zero(mini_config)
    assert ledger.fits(mini_charge, mini_config)
    ledger.apply(mini_charge, sign=1)
    assert ledger.y_c[0][0][1] == 1
    assert ledger.y_e[0][0][1] == pytest.approx(5.0)
    assert ledger.y_g[0][1] == pytest.approx(5.0)
    assert ledger.y_o[0] == 1 and ledger.y_o[2] == 1 and ledger.y_o[3] == 0
    assert ledger.y_d[1][2] == 1
    assert ledger.violations(mini_config) == []
    ledger.apply(mini_charge, sign=-1)
    assert ledger.equals(ResourceLedger.zero(mini_config))


def test_ledger_detects_cable_overflow(mini_config, mini_charge):
    ledger = ResourceLedger.zero(mini_config)
    for _ in range(2):
        assert ledger.fits(mini_charge, mini_config)
        ledger.apply(mini_charge, sign=1)
    # both cables of the single EVSE are now taken in slot 2
    assert not ledger.fits(mini_charge, mini_config)
    ledger.apply(mini_charge, sign=1)
    fields = {v.field for v in ledger.violations(mini_config)}
    assert "y_c" in fields
    with pytest.raises(CapacityError):
        ledger.assert_capacity(mini_config)


def test_ledger_detects_generation_overflow(mini_config, mini_charge):
    # shrink the grid so two 5 kWh draws exceed delta + mu = 8
    fac = dataclasses.replace(mini_config.facilities[0], grid_limit=(8.0,) * 6)
    config = dataclasses.replace(mini_config, facilities=(fac,))
    ledger = ResourceLedger.zero(config)
    ledger.apply(mini_charge, sign=1)
    assert not ledger.fits(mini_charge, config)
    ledger.apply(mini_charge, sign=1)
    assert any(v.field == "y_g" for v in ledger.violations(config))


def test_recompute_ledger_strict_raises_on_breach(mini_config, mini_charge):
    from evdispatch.domain import DispatchDecision
    decisions = [DispatchDecision(session_id=i, schedule=mini_charge, utility=1.0)
                 for i in range(3)]
    with pytest.raises(CapacityError):
        recompute_ledger(decisions, mini_config, strict=True)
    ledger = recompute_ledger(decisions, mini_config)
    assert ledger.y_c[0][0][1] == 3


# ---------------------------------------------------------------------------
# Schedule invariants
# ---------------------------------------------------------------------------


def test_hand_schedules_are_clean(mini_config, mini_session, mini_rebalance,
                                  mini_charge):
    assert schedule_violations(mini_rebalance, mini_config, mini_session) == []
    assert schedule_violations(mini_charge, mini_config, mini_session) == []
    assert mini_charge.charging and not mini_rebalance.charging
    assert list(mini_charge.out_of_service_slots) == [1, 2, 3]
    assert mini_charge.energy_total == pytest.approx(5.0)


def test_schedule_violations_catch_tampering(mini_config, mini_session,
                                             mini_charge):
    wrong_soc = dataclasses.replace(mini_charge, final_soc=0.9)
    assert any("final_soc" in v for v in
               schedule_violations(wrong_soc, mini_config, mini_session))

    gap = dataclasses.replace(mini_charge, cable_slots=(2, 4),
                              energy_slots=((2, 5.0),), t_plus=5)
    assert any("contiguous" in v for v in
               schedule_violations(gap, mini_config, mini_session))

    no_cable = dataclasses.replace(mini_charge, energy_slots=((3, 5.0),))
    assert any("without a cable" in v for v in
               schedule_violations(no_cable, mini_config, mini_session))

    hot = dataclasses.replace(mini_charge, energy_slots=((2, 11.0),))
    assert any("per-slot energy" in v for v in
               schedule_violations(hot, mini_config, mini_session))

    late = dataclasses.replace(mini_charge, t_plus=9)
    assert any("t_plus" in v for v in
               schedule_violations(late, mini_config, mini_session))

    id_mismatch = dataclasses.replace(mini_charge, session_id=7)
    assert any("session id" in v for v in
               schedule_violations(id_mismatch, mini_config, mini_session))


def test_schedule_violations_allow_two_rates_only(mini_config):
    # 5 + 5 + 2.5 toward a 12.5 target reads as rate 5 plus one remainder
    config = build_mini_config(battery_capacity=15.0, charge_increment=2.5)
    session = Session(id=0, t_minus=1, origin_region=1, soc=0.1)
    s = Schedule(session_id=0, t_minus=1, facility_id=0, evse_index=0,
                 t_arrival=2, cable_slots=(2, 3, 4),
                 energy_slots=((2, 5.0), (3, 5.0), (4, 2.5)),
                 dest_region=1, t_plus=5, hops_total=2,
                 final_soc=(1.5 - 1.0 + 12.5 - 1.0) / 15.0, value=0.0)
    out = schedule_violations(s, config, session)
    assert out == []

    two_partials = dataclasses.replace(
        s, energy_slots=((2, 5.0), (3, 4.0), (4, 3.5)))
    out = schedule_violations(two_partials, config, session)
    assert any("partial-rate" in v for v in out)


def test_rebalance_with_charging_fields_is_flagged(mini_config, mini_session,
                                                   mini_rebalance):
    bad = dataclasses.replace(mini_rebalance, cable_slots=(1,))
    assert any("without a facility" in v for v in
               schedule_violations(bad, mini_config, mini_session))


def test_battery_trajectory_is_replayed(mini_config):
    # 0.05 soc = 0.5 kWh cannot cover the one-hop ride to the facility
    s = Schedule(session_id=0, t_minus=1, facility_id=0, evse_index=0,
                 t_arrival=2, cable_slots=(2,), energy_slots=((2, 5.0),),
                 dest_region=1, t_plus=3, hops_total=2, final_soc=0.35,
                 value=0.0)
    session = Session(id=0, t_minus=1, origin_region=1, soc=0.05)
    out = schedule_violations(s, mini_config, session)
    assert any("below 0" in v for v in out)


# ---------------------------------------------------------------------------
# Canonical hashing
# ---------------------------------------------------------------------------


def test_instance_hash_is_stable_and_sensitive(tiny_instance):
    config, sessions = tiny_instance
    h1 = instance_hash(config, sessions)
    h2 = instance_hash(config, list(sessions))
    assert h1 == h2 and len(h1) == 64
    bumped = (dataclasses.replace(sessions[0], soc=sessions[0].soc / 2),
              *sessions[1:])
    assert instance_hash(config, bumped) != h1
    other = dataclasses.replace(config, soc_value_slope=config.soc_value_slope + 0.1)
    assert instance_hash(other, sessions) != h1


def test_config_to_dict_round_trips_through_generator(tiny_instance):
    config, _ = tiny_instance
    from evdispatch.harness import config_from_dict
    assert config_from_dict(config_to_dict(config)) == config
