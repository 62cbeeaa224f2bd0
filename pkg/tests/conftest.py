"""Shared fixtures: generated preset instances plus a hand-built two-region
instance whose round numbers keep expected values computable by hand."""

from __future__ import annotations

import pytest

from evdispatch import harness, pricing
from evdispatch.domain import Facility, Region, ScenarioConfig, Session


def build_mini_config(**overrides) -> ScenarioConfig:
    """Two regions, one facility, constant traces.

    psi = 2*1 + 2 + 1 + 1 = 6. Region 1 is the only demand region
    (pickup value 10); the facility sits in region 0 one hop away.
    """
    T = 6
    base = dict(
        horizon=T,
        regions=(
            Region(id=0, pickup_value=0.0, vehicle_limit=(4,) * T, facility_id=0),
            Region(id=1, pickup_value=10.0, vehicle_limit=(4,) * T),
        ),
        edges=((0, 1),),
        facilities=(
            Facility(id=0, region_id=0, evse_count=1, cables_per_evse=2,
                     evse_energy_limit=10.0, solar=(0.0,) * T, solar_cap=0.0,
                     grid_price=(0.2,) * T, grid_limit=(10.0,) * T),
        ),
        out_of_service_cap=(4,) * T,
        out_of_service_penalty=(0.4,) * T,
        battery_capacity=10.0,
        charge_increment=5.0,
        per_hop_energy=1.0,
        per_hop_value_penalty=0.5,
        soc_value_slope=0.5,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


@pytest.fixture
def mini_config() -> ScenarioConfig:
    return build_mini_config()


@pytest.fixture
def mini_bounds(mini_config):
    return pricing.estimate_bounds(mini_config)


@pytest.fixture
def mini_session() -> Session:
    return Session(id=0, t_minus=1, origin_region=1, soc=0.5)


@pytest.fixture
def mini_rebalance(mini_session):
    """Stay at the demand region: value 0.5*5 + 10 = 12.5."""
    from evdispatch.domain import Schedule
    return Schedule(session_id=0, t_minus=1, facility_id=None, evse_index=None,
                    t_arrival=None, cable_slots=(), energy_slots=(),
                    dest_region=1, t_plus=1, hops_total=0, final_soc=0.5,
                    value=12.5)


@pytest.fixture
def mini_charge(mini_session):
    """Hop to the facility, add 5 kWh in slot 2, return to region 1.

    Arrives with 4 kWh, leaves with 9, lands with 8: value
    0.5*8 + 10 - 0.5*2 = 13. Out of service over slots 1..3.
    """
    from evdispatch.domain import Schedule
    return Schedule(session_id=0, t_minus=1, facility_id=0, evse_index=0,
                    t_arrival=2, cable_slots=(2,), energy_slots=((2, 5.0),),
                    dest_region=1, t_plus=3, hops_total=2, final_soc=0.8,
                    value=13.0)


@pytest.fixture(scope="session")
def tiny_instance():
    return harness.generate_scenario(1, "tiny")


@pytest.fixture(scope="session")
def desk_instance():
    return harness.generate_scenario(1, "desk")
