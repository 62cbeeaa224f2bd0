"""Offline reference solvers: a fast analytic upper bound and exact search.

Welfare decomposes as the sum of schedule values minus generation cost
minus the out-of-service penalty, and the penalty itself decomposes per
session over its service window. Dropping the (nonnegative) generation
cost and giving every session its best conceivable plan independently of
capacity therefore yields a true upper bound on any feasible assignment,
online or offline, priced or threshold-driven.

The exact solver is a depth-first search over explicit per-session
candidate sets (typically captured from an online run) and is only
intended for small instances; it refuses search spaces past a hard limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

from . import pricing
from .constants import MONEY_ATOL
from .domain import (
    ScenarioConfig, Schedule, Session, ResourceLedger, UNREACHABLE, hops,
)
from .economics import primal_increment


def _phi_prefix(config: ScenarioConfig) -> List[float]:
    """prefix[t] = sum of the out-of-service penalty over slots 1..t."""
    prefix = [0.0]
    for phi in config.out_of_service_penalty:
        prefix.append(prefix[-1] + phi)
    return prefix


def _span_penalty(prefix: List[float], lo: int, hi: int) -> float:
    return prefix[hi] - prefix[lo - 1]


def _net_value(schedule: Schedule, prefix: List[float]) -> float:
    """Schedule value minus its unavoidable out-of-service penalty."""
    return schedule.value - _span_penalty(prefix, schedule.t_minus, schedule.t_plus)


def session_upper_bound(session: Session, config: ScenarioConfig,
                        charge_targets: Optional[Sequence[float]] = None,
                        candidates: Sequence[Schedule] = (),
                        ) -> float:
    """Best conceivable welfare contribution of one session.

    Enumerates every reachable (facility, charge target, destination)
    triple plus pure rebalances, charges energy nothing, and assumes the
    shortest possible service window, so every actual plan any solver in
    this package can pick is dominated. Charge targets cover the policy
    multiples and a charge-to-full amount per facility. Explicit
    candidate schedules, when given, join the maximization as-is.
    """
    T = config.horizon
    t0 = session.t_minus
    if not (1 <= t0 <= T):
        raise ValueError(f"session {session.id} starts outside the horizon")
    prefix = _phi_prefix(config)
    best = 0.0
    for s in candidates:
        best = max(best, _net_value(s, prefix))
    if t0 >= T:
        return best

    cap = config.battery_capacity
    e_hop = config.per_hop_energy
    pen = config.per_hop_value_penalty
    slope = config.soc_value_slope
    energy0 = session.soc * cap
    targets = (tuple(sorted(charge_targets)) if charge_targets is not None
               else pricing.default_charge_targets(config))

    for dest in range(len(config.regions)):
        h2 = hops(session.origin_region, dest, config)
        if h2 is UNREACHABLE or t0 + h2 > T:
            continue
        final = energy0 - h2 * e_hop
        if final < -MONEY_ATOL:
            continue
        net = (slope * final + config.regions[dest].pickup_value - pen * h2
               - _span_penalty(prefix, t0, t0 + h2))
        best = max(best, net)

    for fac in config.facilities:
        h1 = hops(session.origin_region, fac.region_id, config)
        if h1 is UNREACHABLE or t0 + h1 > T:
            continue
        arrival_energy = energy0 - h1 * e_hop
        if arrival_energy < -MONEY_ATOL:
            continue
        headroom = cap - arrival_energy
        fac_targets = [x for x in targets if x <= headroom + MONEY_ATOL]
        if headroom > MONEY_ATOL and not any(abs(x - headroom) <= MONEY_ATOL
                                             for x in fac_targets):
            fac_targets.append(headroom)
        t_arr = t0 + h1
        rate = fac.evse_energy_limit
        for target in fac_targets:
            k = max(1, math.ceil(target / rate - 1e-12))
            t_done = t_arr + k - 1
            if t_done > T:
                continue
            for dest in range(len(config.regions)):
                h2 = hops(fac.region_id, dest, config)
                if h2 is UNREACHABLE or t_done + h2 > T:
                    continue
                final = arrival_energy + target - h2 * e_hop
                if final < -MONEY_ATOL:
                    continue
                net = (slope * final + config.regions[dest].pickup_value
                       - pen * (h1 + h2)
                       - _span_penalty(prefix, t0, t_done + h2))
                best = max(best, net)
    return best


def upper_bound(sessions: Sequence[Session], config: ScenarioConfig,
                charge_targets: Optional[Sequence[float]] = None,
                candidate_sets: Optional[Mapping[int, Sequence[Schedule]]] = None,
                ) -> float:
    """Capacity-free welfare upper bound for a whole session stream."""
    total = 0.0
    for session in sessions:
        extra = candidate_sets.get(session.id, ()) if candidate_sets else ()
        total += session_upper_bound(session, config, charge_targets, extra)
    return total


# ---------------------------------------------------------------------------
# Exact search over explicit candidate sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OfflineResult:
    """Optimal assignment over the given candidate sets.

    ``assignment`` holds one entry per session in input order, None for
    the depot. ``welfare`` equals primal_objective of that assignment.
    """

    welfare: float
    assignment: Tuple[Optional[Schedule], ...]
    nodes_explored: int
    search_space: int


def search_space_size(sessions: Sequence[Session],
                      candidate_sets: Mapping[int, Sequence[Schedule]]) -> int:
    """Product over sessions of (candidate count + 1)."""
    size = 1
    for session in sessions:
        size *= len(candidate_sets.get(session.id, ())) + 1
    return size


def exact_offline(sessions: Sequence[Session], config: ScenarioConfig,
                  candidate_sets: Mapping[int, Sequence[Schedule]],
                  space_limit: int = 10_000_000) -> OfflineResult:
    """Exhaustive optimum over per-session candidate sets.

    Every session independently picks one of its candidates or the depot,
    subject to the shared capacities; the search maximizes total welfare
    exactly. Branch-and-bound: candidates whose value cannot beat their
    own service-window penalty are dropped (they can never help a maximum),
    and subtrees are cut with per-session bound suffix sums.

    Raises ValueError when the raw search space exceeds ``space_limit``.
    """
    size = search_space_size(sessions, candidate_sets)
    if size > space_limit:
        raise ValueError(
            f"refusing exact search: {size} assignments exceeds the limit "
            f"of {space_limit}; capture fewer candidates or fewer sessions")

    prefix = _phi_prefix(config)
    n = len(sessions)

    # per session: positive-net candidates in descending net order
    options: List[List[Tuple[float, Schedule]]] = []
    for session in sessions:
        netted = []
        for idx, s in enumerate(candidate_sets.get(session.id, ())):
            net = _net_value(s, prefix)
            # a plan that cannot beat its own window penalty never helps
            if net > 0.0:
                netted.append((-net, idx, s))
        netted.sort(key=lambda item: (item[0], item[1]))
        options.append([(-neg, s) for neg, _, s in netted])

    suffix = [0.0] * (n + 1)
    for j in range(n - 1, -1, -1):
        best_here = options[j][0][0] if options[j] else 0.0
        suffix[j] = suffix[j + 1] + best_here

    ledger = ResourceLedger.zero(config)
    current: List[Optional[Schedule]] = [None] * n
    best_assignment: List[Optional[Schedule]] = [None] * n
    best_welfare = 0.0
    nodes = 0

    def search(j: int, acc: float) -> None:
        nonlocal best_welfare, nodes
        nodes += 1
        if acc + suffix[j] <= best_welfare + 1e-12:
            return
        if j == n:
            best_welfare = acc
            best_assignment[:] = current
            return
        for _, schedule in options[j]:
            if not ledger.fits(schedule, config):
                continue
            gain = primal_increment(ledger, schedule, config)
            ledger.apply(schedule, sign=1)
            current[j] = schedule
            search(j + 1, acc + gain)
            current[j] = None
            ledger.apply(schedule, sign=-1)
        # depot branch
        search(j + 1, acc)

    search(0, 0.0)
    return OfflineResult(welfare=best_welfare,
                         assignment=tuple(best_assignment),
                         nodes_explored=nodes,
                         search_space=size)
