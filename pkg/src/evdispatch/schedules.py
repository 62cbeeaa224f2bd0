"""Candidate schedule generation for one between-ride session.

The dispatcher never enumerates every conceivable plan. For each session
it considers a bounded family of tuples (facility, charge target,
destination, start offset) plus pure rebalances, ranks them by analytic
value, and only builds the top candidates into full schedules. Charging
slots inside a tuple's dwell window are placed greedily on the cheapest
posted marginal energy price, so the candidate set adapts to current load
without exhaustive search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from . import pricing
from .constants import MONEY_ATOL
from .domain import (
    ResourceLedger, ScenarioConfig, Schedule, Session, UNREACHABLE, hops,
)
from .pricing import PriceBounds


@dataclass(frozen=True)
class GenerationPolicy:
    """Knobs bounding the candidate enumeration.

    Attributes
    ----------
    max_candidate_facilities:
        How many nearest facilities to consider per session.
    charge_targets:
        Allowed charge amounts in kWh, multiples of charge_increment;
        None means every multiple up to the battery capacity.
    charge_rate:
        Per-vehicle kWh drawn per charging slot; None means each
        facility's fair share, its EVSE energy budget divided by the
        cables that can draw from it at once.
    max_start_offset:
        Latest allowed charging start, in slots after facility arrival.
        Offset w widens the dwell window to k + w slots, within which the
        k charging slots are chosen greedily by posted price.
    max_candidates_total:
        Hard cap on charging candidates per session. Pure rebalances are
        always all included; they are the cheap fallback moves and cost
        nothing to build.
    dest_hop_radius:
        Maximum hops from the route anchor to a destination; None means
        the whole graph.
    """

    max_candidate_facilities: int = 8
    charge_targets: Optional[Tuple[float, ...]] = None
    charge_rate: Optional[float] = None
    max_start_offset: int = 4
    max_candidates_total: int = 24
    dest_hop_radius: Optional[int] = None


DEFAULT_POLICY = GenerationPolicy()


def validate_policy(policy: GenerationPolicy, config: ScenarioConfig) -> List[str]:
    out = []
    if policy.max_candidate_facilities < 1:
        out.append("max_candidate_facilities must be >= 1")
    if policy.max_candidates_total < 1:
        out.append("max_candidates_total must be >= 1")
    if policy.max_start_offset < 0:
        out.append("max_start_offset must be >= 0")
    if policy.dest_hop_radius is not None and policy.dest_hop_radius < 0:
        out.append("dest_hop_radius must be >= 0 when set")
    if policy.charge_rate is not None and policy.charge_rate <= 0:
        out.append("charge_rate must be positive when set")
    if policy.charge_targets is not None:
        inc = config.charge_increment
        for target in policy.charge_targets:
            k = round(target / inc)
            if k < 1 or abs(k * inc - target) > MONEY_ATOL:
                out.append(f"charge target {target} is not a positive multiple of {inc}")
    return out


def schedule_value(schedule: Schedule, config: ScenarioConfig) -> float:
    """v_js: stored-energy value plus destination value minus hop penalty."""
    stored = schedule.final_soc * config.battery_capacity
    return (config.soc_value_slope * stored
            + config.regions[schedule.dest_region].pickup_value
            - config.per_hop_value_penalty * schedule.hops_total)


def _targets(config: ScenarioConfig, policy: GenerationPolicy) -> Tuple[float, ...]:
    if policy.charge_targets is not None:
        return tuple(sorted(policy.charge_targets))
    return pricing.default_charge_targets(config)


def feasible_schedules(session: Session, config: ScenarioConfig,
                       ledger: ResourceLedger, bounds: PriceBounds, psi_: int,
                       policy: GenerationPolicy = DEFAULT_POLICY) -> List[Schedule]:
    """Candidate schedules for a session against the current ledger.

    Deterministic in its inputs. Sessions arriving in the final slot get
    no candidates: there is no slot left to complete any move. Every
    reachable pure rebalance is included; charging plans are capped at
    max_candidates_total, best analytic value first. The combined list is
    sorted by descending value with a canonical tie-break.
    """
    T = config.horizon
    if not (1 <= session.t_minus <= T):
        raise ValueError(f"session {session.id} starts outside the horizon")
    if session.t_minus >= T:
        return []

    cap = config.battery_capacity
    e_hop = config.per_hop_energy
    pen = config.per_hop_value_penalty
    slope = config.soc_value_slope
    energy0 = session.soc * cap
    t0 = session.t_minus
    radius = policy.dest_hop_radius

    # ---- enumerate analytic tuples (kind, value, canonical key) ----
    # charge tuple: (v, f, target, dest, h1, h2, k)
    # rebalance tuple: (v, None, 0, dest, 0, h2, 0)
    tuples = []

    for dest in range(len(config.regions)):
        h2 = hops(session.origin_region, dest, config)
        if h2 is UNREACHABLE:
            continue
        if radius is not None and h2 > radius:
            continue
        if energy0 - h2 * e_hop < -MONEY_ATOL:
            continue
        t_plus = t0 + h2
        if t_plus > T:
            continue
        final = energy0 - h2 * e_hop
        v = slope * final + config.regions[dest].pickup_value - pen * h2
        tuples.append((v, -1, 0.0, dest, 0, h2, 0))

    facs = []
    for fac in config.facilities:
        h1 = hops(session.origin_region, fac.region_id, config)
        if h1 is UNREACHABLE:
            continue
        if energy0 - h1 * e_hop < -MONEY_ATOL:
            continue
        if t0 + h1 > T:
            continue
        facs.append((h1, fac.id))
    facs.sort()
    facs = facs[:policy.max_candidate_facilities]

    targets = _targets(config, policy)
    for h1, fid in facs:
        fac = config.facilities[fid]
        arrival_energy = energy0 - h1 * e_hop
        headroom = cap - arrival_energy
        t_arr = t0 + h1
        rate = pricing.effective_charge_rate(fac, policy.charge_rate)
        for target in targets:
            if target > headroom + MONEY_ATOL:
                break
            k = math.ceil(target / rate - 1e-12)
            if t_arr + k - 1 > T:
                continue
            for dest in range(len(config.regions)):
                h2 = hops(fac.region_id, dest, config)
                if h2 is UNREACHABLE:
                    continue
                if radius is not None and h2 > radius:
                    continue
                final = arrival_energy + target - h2 * e_hop
                if final < -MONEY_ATOL:
                    continue
                if t_arr + k - 1 + h2 > T:
                    continue
                v = slope * final + config.regions[dest].pickup_value - pen * (h1 + h2)
                tuples.append((v, fid, target, dest, h1, h2, k))

    # descending value; canonical tuple key for ties
    tuples.sort(key=lambda tup: (-tup[0], tup[1], tup[2], tup[3]))

    # ---- build the tuples into schedules ----
    out: List[Schedule] = []
    seen = set()
    built_charges = 0
    for v, fid, target, dest, h1, h2, k in tuples:
        if fid < 0:
            t_plus = t0 + h2
            final = (energy0 - h2 * e_hop) / cap
            s = Schedule(session_id=session.id, t_minus=t0, facility_id=None,
                         evse_index=None, t_arrival=None, cable_slots=(),
                         energy_slots=(), dest_region=dest, t_plus=t_plus,
                         hops_total=h2, final_soc=final, value=v)
            key = (-1, -1, (), dest, t_plus)
            if key not in seen:
                seen.add(key)
                out.append(s)
            continue
        if built_charges >= policy.max_candidates_total:
            continue
        fac = config.facilities[fid]
        t_arr = t0 + h1
        rate = pricing.effective_charge_rate(fac, policy.charge_rate)
        for w in range(policy.max_start_offset + 1):
            if built_charges >= policy.max_candidates_total:
                break
            hi = min(T - h2, t_arr + k - 1 + w)
            window = list(range(t_arr, hi + 1))
            if len(window) < k:
                continue
            evse = _pick_evse(fid, fac, window, ledger, bounds, psi_, config)
            chosen = _pick_slots(fid, evse, fac, window, k, ledger, bounds, psi_)
            energy_slots = _assign_energy(chosen, target, rate, fid, evse, fac,
                                          ledger, bounds, psi_)
            last = chosen[-1]
            t_plus = last + h2
            final = (energy0 - h1 * e_hop + target - h2 * e_hop) / cap
            key = (fid, evse, tuple(energy_slots), dest, t_plus)
            if key in seen:
                continue
            seen.add(key)
            built_charges += 1
            out.append(Schedule(
                session_id=session.id, t_minus=t0, facility_id=fid,
                evse_index=evse, t_arrival=t_arr,
                cable_slots=tuple(range(t_arr, last + 1)),
                energy_slots=tuple(energy_slots), dest_region=dest,
                t_plus=t_plus, hops_total=h1 + h2, final_soc=final, value=v))
    out.sort(key=_candidate_key)
    return out


def _candidate_key(s: Schedule):
    """Descending value, then a canonical structural tie-break."""
    return (-s.value,
            -1 if s.facility_id is None else s.facility_id,
            -1 if s.evse_index is None else s.evse_index,
            s.energy_slots, s.dest_region, s.t_plus)


def _pick_evse(fid: int, fac, window: Sequence[int], ledger: ResourceLedger,
               bounds: PriceBounds, psi_: int, config: ScenarioConfig) -> int:
    """EVSE with the cheapest summed posted cable price over the window."""
    best_m, best_cost = 0, math.inf
    for m in range(fac.evse_count):
        cost = 0.0
        for t in window:
            y = ledger.y_c[fid][m][t - 1]
            # beyond-capacity slots keep the ceiling price; ranking only
            y = min(y, fac.cables_per_evse)
            cost += pricing.price_cable(y, fac.cables_per_evse, bounds, psi_)
        if cost < best_cost - 1e-15:
            best_m, best_cost = m, cost
    return best_m


def _pick_slots(fid: int, m: int, fac, window: Sequence[int], k: int,
                ledger: ResourceLedger, bounds: PriceBounds, psi_: int) -> List[int]:
    """k slots with the cheapest posted energy plus generation price,
    ties to the earlier slot, returned in chronological order."""
    priced = []
    for t in window:
        ye = min(ledger.y_e[fid][m][t - 1], fac.evse_energy_limit)
        p = pricing.price_energy(ye, fac.evse_energy_limit, bounds, psi_)
        delta, mu = fac.solar[t - 1], fac.grid_limit[t - 1]
        cap_g = delta + mu
        if cap_g > 0:
            yg = min(ledger.y_g[fid][t - 1], cap_g)
            p += pricing.price_generation(yg, delta, mu, fac.grid_price[t - 1],
                                          bounds, psi_)
        else:
            p = math.inf
        priced.append((p, t))
    priced.sort()
    chosen = sorted(t for _, t in priced[:k])
    return chosen


def _assign_energy(chosen: Sequence[int], target: float, rate: float, fid: int,
                   m: int, fac, ledger: ResourceLedger, bounds: PriceBounds,
                   psi_: int) -> List[Tuple[int, float]]:
    """Full rate on the cheaper slots, the remainder on the dearest one."""
    k = len(chosen)
    rem = target - (k - 1) * rate
    if k == 1:
        return [(chosen[0], min(target, rate))]
    worst_t, worst_p = chosen[0], -math.inf
    for t in chosen:
        ye = min(ledger.y_e[fid][m][t - 1], fac.evse_energy_limit)
        p = pricing.price_energy(ye, fac.evse_energy_limit, bounds, psi_)
        delta, mu = fac.solar[t - 1], fac.grid_limit[t - 1]
        if delta + mu > 0:
            yg = min(ledger.y_g[fid][t - 1], delta + mu)
            p += pricing.price_generation(yg, delta, mu, fac.grid_price[t - 1],
                                          bounds, psi_)
        if p > worst_p + 1e-15:
            worst_t, worst_p = t, p
    return [(t, rem if t == worst_t else rate) for t in chosen]
