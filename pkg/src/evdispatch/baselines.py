"""Threshold charging baselines.

A threshold policy never looks at prices. A vehicle above the state of
charge threshold takes the most valuable reachable pickup immediately;
a vehicle below it drives to the nearest facility, charges to full at the
maximum rate in back-to-back slots (waiting a bounded number of slots
when the facility is busy), and only then takes a pickup. Capacity is
respected by construction, value is whatever falls out.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

from .domain import (
    DispatchDecision, ResourceLedger, RunReport, ScenarioConfig, Schedule,
    Session, UNREACHABLE, hops, instance_hash, validate,
)
from .dispatcher import peak_utilization
from .economics import primal_increment
from .pricing import psi as compute_psi


def _dest_order(config: ScenarioConfig, anchor: int) -> List[Tuple[int, int]]:
    """(hops, dest) pairs reachable from anchor, best pickup value first,
    ties to the closer then lower-id region."""
    order = []
    for dest, region in enumerate(config.regions):
        h2 = hops(anchor, dest, config)
        if h2 is UNREACHABLE:
            continue
        order.append((-region.pickup_value, h2, dest))
    order.sort()
    return [(h2, dest) for _, h2, dest in order]


def _rebalance(session: Session, config: ScenarioConfig,
               ledger: ResourceLedger) -> Optional[Schedule]:
    """Most valuable reachable pickup with a free arrival slot, if any."""
    T = config.horizon
    cap = config.battery_capacity
    energy0 = session.soc * cap
    for h2, dest in _dest_order(config, session.origin_region):
        t_plus = session.t_minus + h2
        final = energy0 - h2 * config.per_hop_energy
        if t_plus > T or final < 0:
            continue
        value = (config.soc_value_slope * final
                 + config.regions[dest].pickup_value
                 - config.per_hop_value_penalty * h2)
        s = Schedule(session_id=session.id, t_minus=session.t_minus,
                     facility_id=None, evse_index=None, t_arrival=None,
                     cable_slots=(), energy_slots=(), dest_region=dest,
                     t_plus=t_plus, hops_total=h2, final_soc=final / cap,
                     value=value)
        if ledger.fits(s, config):
            return s
    return None


def _charge_then_go(session: Session, config: ScenarioConfig,
                    ledger: ResourceLedger, patience: int) -> Optional[Schedule]:
    """Charge to full at the nearest facility, then the best pickup.

    Tries start delays of 0..patience slots and EVSEs in index order;
    gives up (depot) when nothing fits.
    """
    T = config.horizon
    cap = config.battery_capacity
    e_hop = config.per_hop_energy
    energy0 = session.soc * cap

    nearest = None
    for fac in config.facilities:
        h1 = hops(session.origin_region, fac.region_id, config)
        if h1 is UNREACHABLE:
            continue
        if energy0 - h1 * e_hop < 0 or session.t_minus + h1 > T:
            continue
        if nearest is None or h1 < nearest[0]:
            nearest = (h1, fac)
    if nearest is None:
        return None
    h1, fac = nearest

    t_arr = session.t_minus + h1
    arrival_energy = energy0 - h1 * e_hop
    target = cap - arrival_energy
    rate = fac.evse_energy_limit
    k = max(1, math.ceil(target / rate - 1e-12))
    # full rate first, the remainder in the last slot
    amounts = [rate] * (k - 1) + [target - (k - 1) * rate]
    dests = _dest_order(config, fac.region_id)

    for wait in range(patience + 1):
        start = t_arr + wait
        done = start + k - 1
        if done > T:
            break
        for m in range(fac.evse_count):
            for h2, dest in dests:
                t_plus = done + h2
                final = cap - h2 * e_hop
                if t_plus > T or final < 0:
                    continue
                value = (config.soc_value_slope * final
                         + config.regions[dest].pickup_value
                         - config.per_hop_value_penalty * (h1 + h2))
                s = Schedule(
                    session_id=session.id, t_minus=session.t_minus,
                    facility_id=fac.id, evse_index=m, t_arrival=t_arr,
                    cable_slots=tuple(range(t_arr, done + 1)),
                    energy_slots=tuple(zip(range(start, done + 1), amounts)),
                    dest_region=dest, t_plus=t_plus, hops_total=h1 + h2,
                    final_soc=final / cap, value=value)
                if ledger.fits(s, config):
                    return s
    return None


def threshold_dispatch(session: Session, config: ScenarioConfig,
                       ledger: ResourceLedger, threshold: float,
                       patience: int = 4) -> Optional[Schedule]:
    """One session under the threshold policy; None means depot."""
    if session.t_minus >= config.horizon:
        return None
    if session.soc >= threshold:
        return _rebalance(session, config, ledger)
    return _charge_then_go(session, config, ledger, patience)


def run_threshold(sessions: Sequence[Session], config: ScenarioConfig,
                  threshold: float = 0.5, patience: int = 4) -> RunReport:
    """Run a threshold baseline over an ordered session stream.

    The recorded utility of a decision is the raw schedule value; the
    baseline has no prices and no dual trajectory.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold {threshold} outside (0, 1)")
    if patience < 0:
        raise ValueError("patience must be >= 0")
    problems = validate(config)
    if problems:
        raise ValueError("invalid config: " + "; ".join(str(p) for p in problems[:5]))

    ledger = ResourceLedger.zero(config)
    decisions: List[DispatchDecision] = []
    primal = [0.0]
    last_t = 1
    for session in sessions:
        if session.t_minus < last_t:
            raise ValueError(f"session {session.id} arrives out of order "
                             f"({session.t_minus} < {last_t})")
        last_t = session.t_minus
        schedule = threshold_dispatch(session, config, ledger, threshold, patience)
        if schedule is None:
            decisions.append(DispatchDecision(session_id=session.id,
                                              schedule=None, utility=0.0))
            primal.append(primal[-1])
            continue
        gain = primal_increment(ledger, schedule, config)
        ledger.apply(schedule, sign=1)
        decisions.append(DispatchDecision(session_id=session.id,
                                          schedule=schedule,
                                          utility=schedule.value))
        primal.append(primal[-1] + gain)

    return RunReport(
        algorithm=f"threshold-{int(round(threshold * 100))}",
        instance_hash=instance_hash(config, sessions),
        psi=compute_psi(config),
        bounds=None,
        alphas=None,
        decisions=tuple(decisions),
        primal_trajectory=tuple(primal),
        dual_trajectory=None,
        welfare=primal[-1],
        peak_utilization=peak_utilization(ledger, config),
    )
