"""Shared data types, instance validation, and the region travel model.

Time is discrete. Slots are 1-based in all data: a slot index t runs over
1..T, and per-slot traces (tuples of length T) are indexed with t - 1.
Regions and facilities are identified by their position in the config
lists, so ``config.regions[r].id == r`` always holds for a valid instance.

Every type in this module is immutable value data except ResourceLedger,
which is the single mutable accumulator shared by the online dispatcher,
the baselines, and the offline solvers.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from typing import Optional, Tuple, List, Sequence, TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from .pricing import PriceBounds, Alphas

from .constants import MONEY_ATOL


# ---------------------------------------------------------------------------
# Sentinels
# ---------------------------------------------------------------------------


class _UnreachableType:
    """Explicit result for a region pair with no connecting path."""

    _instance: Optional["_UnreachableType"] = None

    def __new__(cls) -> "_UnreachableType":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Unreachable"

    def __bool__(self) -> bool:
        return False


#: Singleton returned by :func:`hops` for disconnected pairs.
UNREACHABLE = _UnreachableType()


# ---------------------------------------------------------------------------
# Static instance description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """One service region, a node of the undirected hop graph.

    Attributes
    ----------
    id:
        Position of this region in ``ScenarioConfig.regions``.
    pickup_value:
        Dollar value v_d of delivering a pickup-ready vehicle here.
    vehicle_limit:
        Per-slot cap on vehicle arrivals, one entry per slot. Arrivals,
        not occupancy: the cap binds on the number of schedules whose
        destination arrival lands in the slot.
    facility_id:
        Id of the charging facility located in this region, if any.
    """

    id: int
    pickup_value: float
    vehicle_limit: Tuple[int, ...]
    facility_id: Optional[int] = None


@dataclass(frozen=True)
class Facility:
    """A charging facility hosting identical single-output multi-cable EVSEs.

    Each of the ``evse_count`` EVSEs offers ``cables_per_evse`` cables that
    share one per-slot energy budget ``evse_energy_limit``. Facility-level
    energy is free while the solar trace covers it and costs the grid price
    beyond, up to the per-slot grid limit.

    Attributes
    ----------
    id:
        Position of this facility in ``ScenarioConfig.facilities``.
    region_id:
        Region in which the facility sits.
    evse_count:
        Number of EVSEs (M).
    cables_per_evse:
        Cables per EVSE (C); at most C vehicles connect simultaneously.
    evse_energy_limit:
        Shared per-slot energy budget of one EVSE (E), in kWh.
    solar:
        Free on-site generation per slot, in kWh, one entry per slot.
    solar_cap:
        Nameplate cap on the solar trace; 0 <= solar[t] <= solar_cap.
    grid_price:
        Grid energy price per slot, in dollars per kWh, strictly positive.
    grid_limit:
        Purchasable grid energy per slot, in kWh, nonnegative.
    """

    id: int
    region_id: int
    evse_count: int
    cables_per_evse: int
    evse_energy_limit: float
    solar: Tuple[float, ...]
    solar_cap: float
    grid_price: Tuple[float, ...]
    grid_limit: Tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    """Full static description of one simulated instance.

    Attributes
    ----------
    horizon:
        Number of slots T, at least 1.
    regions:
        All regions; position equals id.
    edges:
        Undirected hop-graph edges as (a, b) region-id pairs. One hop
        costs one slot of travel time and ``per_hop_energy`` of battery.
    facilities:
        All charging facilities; position equals id.
    out_of_service_cap:
        Fleet-wide cap I(t) on vehicles that may be out of service in a
        slot, one entry per slot.
    out_of_service_penalty:
        Virtual cost phi(t) per vehicle-slot out of service, in dollars.
    battery_capacity:
        Usable battery size of every vehicle, in kWh.
    charge_increment:
        Granularity of charge targets, in kWh; divides battery_capacity.
    per_hop_energy:
        Battery drain per hop traveled, in kWh.
    per_hop_value_penalty:
        Dollar penalty per hop traveled in a schedule's value.
    soc_value_slope:
        Dollars per kWh of final stored energy in a schedule's value.
    rng_seed:
        Seed recorded by the generator that produced the instance.
    """

    horizon: int
    regions: Tuple[Region, ...]
    edges: Tuple[Tuple[int, int], ...]
    facilities: Tuple[Facility, ...]
    out_of_service_cap: Tuple[int, ...]
    out_of_service_penalty: Tuple[float, ...]
    battery_capacity: float
    charge_increment: float
    per_hop_energy: float
    per_hop_value_penalty: float
    soc_value_slope: float
    rng_seed: int = 0


@dataclass(frozen=True)
class Session:
    """A between-ride event: one idle vehicle awaiting dispatch.

    Attributes
    ----------
    id:
        Unique nonnegative integer; the online stream is ordered by
        nondecreasing start slot, ties by id.
    t_minus:
        Drop-off slot at which the vehicle becomes available (1..T).
    origin_region:
        Region of the drop-off.
    soc:
        State of charge at drop-off as a fraction of battery_capacity.
    """

    id: int
    t_minus: int
    origin_region: int
    soc: float


# ---------------------------------------------------------------------------
# Plans and decisions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """One feasible charging/pickup plan for a session.

    The vehicle leaves its origin at ``t_minus``, optionally travels to a
    facility (arriving at ``t_arrival``), holds one cable from arrival
    through its last charging slot, and then travels to ``dest_region``,
    arriving at ``t_plus``. The out-of-service indicator is 1 exactly on
    [t_minus, t_plus].

    Attributes
    ----------
    session_id:
        Owning session.
    t_minus:
        Inception slot, copied from the session.
    facility_id / evse_index:
        Charging location, or both None for a pure rebalance.
    t_arrival:
        Slot of arrival at the facility; None without charging.
    cable_slots:
        Slots with the cable indicator set, contiguous from t_arrival
        through the last charging slot; empty without charging.
    energy_slots:
        (slot, kwh) pairs with positive energy drawn; kwh is the full
        per-slot rate except for one final remainder slot.
    dest_region:
        Destination region d+.
    t_plus:
        Arrival slot at the destination; d+ is counted in this slot only.
    hops_total:
        Hops traveled origin -> (facility ->) destination.
    final_soc:
        State of charge on arrival, fraction of battery_capacity.
    value:
        Schedule value v_js in dollars.
    """

    session_id: int
    t_minus: int
    facility_id: Optional[int]
    evse_index: Optional[int]
    t_arrival: Optional[int]
    cable_slots: Tuple[int, ...]
    energy_slots: Tuple[Tuple[int, float], ...]
    dest_region: int
    t_plus: int
    hops_total: int
    final_soc: float
    value: float

    @property
    def charging(self) -> bool:
        return self.facility_id is not None

    @property
    def out_of_service_slots(self) -> range:
        """Slots with o(t) = 1, inclusive on both ends."""
        return range(self.t_minus, self.t_plus + 1)

    @property
    def energy_total(self) -> float:
        return sum(e for _, e in self.energy_slots)


@dataclass(frozen=True)
class PriceBreakdown:
    """Per-family payment components of one utility evaluation."""

    destination: float = 0.0
    out_of_service: float = 0.0
    cable: float = 0.0
    energy: float = 0.0
    generation: float = 0.0

    @property
    def total(self) -> float:
        return (self.destination + self.out_of_service + self.cable
                + self.energy + self.generation)


@dataclass(frozen=True)
class DispatchDecision:
    """Outcome for one session: a chosen schedule or the depot.

    Depot implies utility 0 and no ledger change. For the online
    dispatcher ``utility`` is the price-based utility of the chosen
    schedule; threshold baselines ignore prices and record the raw
    schedule value instead.
    """

    session_id: int
    schedule: Optional[Schedule]
    utility: float
    breakdown: PriceBreakdown = PriceBreakdown()

    @property
    def is_depot(self) -> bool:
        return self.schedule is None


@dataclass
class RunReport:
    """Result of one simulated run.

    Trajectories have length J + 1 with P[0] = D[0] = 0. The dual
    trajectory is stored shifted by its base value (the sum of conjugates
    at empty-ledger prices), so differences are exact dual increments and
    the end value still dominates the primal end value. Baseline runs
    carry no dual trajectory.
    """

    algorithm: str
    instance_hash: str
    psi: int
    bounds: Optional["PriceBounds"]
    alphas: Optional["Alphas"]
    decisions: Tuple[DispatchDecision, ...]
    primal_trajectory: Tuple[float, ...]
    dual_trajectory: Optional[Tuple[float, ...]]
    welfare: float
    peak_utilization: dict

    @property
    def accepted(self) -> int:
        return sum(1 for d in self.decisions if not d.is_depot)


# ---------------------------------------------------------------------------
# Resource ledger
# ---------------------------------------------------------------------------


class CapacityError(AssertionError):
    """A ledger update breached a hard capacity invariant."""


class ResourceLedger:
    """Running allocation counts per resource and slot.

    Fields (all indexed with t - 1 on the slot axis):

    - ``y_c[f][m][t]``: cables in use on EVSE m of facility f
    - ``y_e[f][m][t]``: energy drawn from EVSE m of facility f, kWh
    - ``y_g[f][t]``: energy generated at facility f, kWh
    - ``y_o[t]``: vehicles out of service
    - ``y_d[d][t]``: vehicle arrivals in region d

    ``y_g[f][t]`` always equals the sum of ``y_e[f][m][t]`` over m.
    """

    __slots__ = ("y_c", "y_e", "y_g", "y_o", "y_d")

    def __init__(self, y_c, y_e, y_g, y_o, y_d) -> None:
        self.y_c = y_c
        self.y_e = y_e
        self.y_g = y_g
        self.y_o = y_o
        self.y_d = y_d

    @classmethod
    def zero(cls, config: ScenarioConfig) -> "ResourceLedger":
        T = config.horizon
        y_c = [[[0] * T for _ in range(f.evse_count)] for f in config.facilities]
        y_e = [[[0.0] * T for _ in range(f.evse_count)] for f in config.facilities]
        y_g = [[0.0] * T for _ in config.facilities]
        y_o = [0] * T
        y_d = [[0] * T for _ in config.regions]
        return cls(y_c, y_e, y_g, y_o, y_d)

    def copy(self) -> "ResourceLedger":
        return ResourceLedger(
            [[col[:] for col in fac] for fac in self.y_c],
            [[col[:] for col in fac] for fac in self.y_e],
            [col[:] for col in self.y_g],
            self.y_o[:],
            [col[:] for col in self.y_d],
        )

    def apply(self, schedule: Schedule, sign: int = 1) -> None:
        """Add (sign=+1) or remove (sign=-1) one schedule's demands."""
        if schedule.charging:
            f = schedule.facility_id
            m = schedule.evse_index
            for t in schedule.cable_slots:
                self.y_c[f][m][t - 1] += sign
            for t, e in schedule.energy_slots:
                self.y_e[f][m][t - 1] += sign * e
                self.y_g[f][t - 1] += sign * e
        for t in schedule.out_of_service_slots:
            self.y_o[t - 1] += sign
        self.y_d[schedule.dest_region][schedule.t_plus - 1] += sign

    def fits(self, schedule: Schedule, config: ScenarioConfig) -> bool:
        """True when applying the schedule breaches no capacity."""
        if schedule.charging:
            f = schedule.facility_id
            m = schedule.evse_index
            fac = config.facilities[f]
            for t in schedule.cable_slots:
                if self.y_c[f][m][t - 1] + 1 > fac.cables_per_evse:
                    return False
            for t, e in schedule.energy_slots:
                if self.y_e[f][m][t - 1] + e > fac.evse_energy_limit + MONEY_ATOL:
                    return False
                cap = fac.solar[t - 1] + fac.grid_limit[t - 1]
                if self.y_g[f][t - 1] + e > cap + MONEY_ATOL:
                    return False
        for t in schedule.out_of_service_slots:
            if self.y_o[t - 1] + 1 > config.out_of_service_cap[t - 1]:
                return False
        d, tp = schedule.dest_region, schedule.t_plus
        if self.y_d[d][tp - 1] + 1 > config.regions[d].vehicle_limit[tp - 1]:
            return False
        return True

    def violations(self, config: ScenarioConfig) -> List["Violation"]:
        """All capacity breaches in the current counts."""
        out: List[Violation] = []
        T = config.horizon
        for f, fac in enumerate(config.facilities):
            for m in range(fac.evse_count):
                for t in range(T):
                    if self.y_c[f][m][t] > fac.cables_per_evse:
                        out.append(Violation("y_c", f"facility {f} evse {m} slot {t + 1}",
                                             f"{self.y_c[f][m][t]} > C={fac.cables_per_evse}"))
                    if self.y_e[f][m][t] > fac.evse_energy_limit + MONEY_ATOL:
                        out.append(Violation("y_e", f"facility {f} evse {m} slot {t + 1}",
                                             f"{self.y_e[f][m][t]} > E={fac.evse_energy_limit}"))
            for t in range(T):
                cap = fac.solar[t] + fac.grid_limit[t]
                if self.y_g[f][t] > cap + MONEY_ATOL:
                    out.append(Violation("y_g", f"facility {f} slot {t + 1}",
                                         f"{self.y_g[f][t]} > delta+mu={cap}"))
                drawn = sum(self.y_e[f][m][t] for m in range(fac.evse_count))
                if abs(self.y_g[f][t] - drawn) > MONEY_ATOL:
                    out.append(Violation("y_g", f"facility {f} slot {t + 1}",
                                         "generation does not match summed EVSE energy"))
        for t in range(T):
            if self.y_o[t] > config.out_of_service_cap[t]:
                out.append(Violation("y_o", f"slot {t + 1}",
                                     f"{self.y_o[t]} > I={config.out_of_service_cap[t]}"))
        for d, region in enumerate(config.regions):
            for t in range(T):
                if self.y_d[d][t] > region.vehicle_limit[t]:
                    out.append(Violation("y_d", f"region {d} slot {t + 1}",
                                         f"{self.y_d[d][t]} > Omega={region.vehicle_limit[t]}"))
        return out

    def assert_capacity(self, config: ScenarioConfig) -> None:
        vs = self.violations(config)
        if vs:
            raise CapacityError("; ".join(str(v) for v in vs[:5]))

    def equals(self, other: "ResourceLedger") -> bool:
        return (self.y_c == other.y_c
                and all(all(abs(a - b) <= MONEY_ATOL for a, b in zip(ca, cb))
                        for fa, fb in zip(self.y_e, other.y_e)
                        for ca, cb in zip(fa, fb))
                and all(abs(a - b) <= MONEY_ATOL for fa, fb in zip(self.y_g, other.y_g)
                        for a, b in zip(fa, fb))
                and self.y_o == other.y_o
                and self.y_d == other.y_d)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One named invariant breach; data, not an exception."""

    field: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.field} at {self.where}: {self.message}"


def validate(config: ScenarioConfig) -> List[Violation]:
    """Check every static invariant; an empty list means a valid instance."""
    out: List[Violation] = []
    T = config.horizon
    if T < 1:
        out.append(Violation("horizon", "config", f"T={T} < 1"))
        return out

    n = len(config.regions)
    for i, r in enumerate(config.regions):
        if r.id != i:
            out.append(Violation("region.id", f"position {i}", f"id {r.id} != position"))
        if r.pickup_value < 0:
            out.append(Violation("pickup_value", f"region {i}", f"{r.pickup_value} < 0"))
        if len(r.vehicle_limit) != T:
            out.append(Violation("vehicle_limit", f"region {i}",
                                 f"trace length {len(r.vehicle_limit)} != T={T}"))
        else:
            for t, om in enumerate(r.vehicle_limit):
                if om < 0:
                    out.append(Violation("vehicle_limit", f"region {i} slot {t + 1}",
                                         f"Omega={om} < 0"))
        if r.facility_id is not None:
            if not (0 <= r.facility_id < len(config.facilities)):
                out.append(Violation("facility_id", f"region {i}", f"{r.facility_id} unknown"))
            elif config.facilities[r.facility_id].region_id != i:
                out.append(Violation("facility_id", f"region {i}",
                                     "facility does not point back at region"))

    for i, f in enumerate(config.facilities):
        if f.id != i:
            out.append(Violation("facility.id", f"position {i}", f"id {f.id} != position"))
        if not (0 <= f.region_id < n):
            out.append(Violation("region_id", f"facility {i}", f"{f.region_id} unknown"))
        if f.evse_count < 1:
            out.append(Violation("evse_count", f"facility {i}", f"M={f.evse_count} < 1"))
        if f.cables_per_evse < 1:
            out.append(Violation("cables_per_evse", f"facility {i}", f"C={f.cables_per_evse} < 1"))
        if f.evse_energy_limit <= 0:
            out.append(Violation("evse_energy_limit", f"facility {i}",
                                 f"E={f.evse_energy_limit} <= 0"))
        for name, trace in (("solar", f.solar), ("grid_price", f.grid_price),
                            ("grid_limit", f.grid_limit)):
            if len(trace) != T:
                out.append(Violation(name, f"facility {i}",
                                     f"trace length {len(trace)} != T={T}"))
        for t, v in enumerate(f.solar[:T]):
            if not (0 <= v <= f.solar_cap + MONEY_ATOL):
                out.append(Violation("solar", f"facility {i} slot {t + 1}",
                                     f"delta={v} outside [0, {f.solar_cap}]"))
        for t, v in enumerate(f.grid_price[:T]):
            if v <= 0:
                out.append(Violation("grid_price", f"facility {i} slot {t + 1}", f"pi={v} <= 0"))
        for t, v in enumerate(f.grid_limit[:T]):
            if v < 0:
                out.append(Violation("grid_limit", f"facility {i} slot {t + 1}", f"mu={v} < 0"))

    if len(config.out_of_service_cap) != T:
        out.append(Violation("out_of_service_cap", "config", "trace length != T"))
    else:
        for t, v in enumerate(config.out_of_service_cap):
            if v < 1:
                out.append(Violation("out_of_service_cap", f"slot {t + 1}", f"I={v} < 1"))
    if len(config.out_of_service_penalty) != T:
        out.append(Violation("out_of_service_penalty", "config", "trace length != T"))
    else:
        for t, v in enumerate(config.out_of_service_penalty):
            if v < 0:
                out.append(Violation("out_of_service_penalty", f"slot {t + 1}", f"phi={v} < 0"))

    if config.battery_capacity <= 0:
        out.append(Violation("battery_capacity", "config",
                             f"{config.battery_capacity} <= 0"))
    inc = config.charge_increment
    if inc <= 0:
        out.append(Violation("charge_increment", "config", f"{inc} <= 0"))
    elif config.battery_capacity > 0:
        k = round(config.battery_capacity / inc)
        if k < 1 or abs(k * inc - config.battery_capacity) > MONEY_ATOL:
            out.append(Violation("charge_increment", "config",
                                 f"{inc} does not divide capacity {config.battery_capacity}"))
    if config.per_hop_energy < 0:
        out.append(Violation("per_hop_energy", "config", "< 0"))
    if config.per_hop_value_penalty < 0:
        out.append(Violation("per_hop_value_penalty", "config", "< 0"))
    if config.soc_value_slope < 0:
        out.append(Violation("soc_value_slope", "config", "< 0"))

    for a, b in config.edges:
        if not (0 <= a < n and 0 <= b < n):
            out.append(Violation("edges", f"({a}, {b})", "unknown region id"))
        elif a == b:
            out.append(Violation("edges", f"({a}, {b})", "self loop"))

    # positive-demand regions must sit in one connected component
    demand = [r.id for r in config.regions if r.pickup_value > 0]
    if demand and not out:
        table = _hop_table(config)
        root = demand[0]
        for d in demand[1:]:
            if table[root][d] < 0:
                out.append(Violation("edges", f"regions {root} and {d}",
                                     "positive-demand regions not connected"))
    return out


# ---------------------------------------------------------------------------
# Travel model
# ---------------------------------------------------------------------------


@lru_cache(maxsize=128)
def _hop_table(config: ScenarioConfig) -> Tuple[Tuple[int, ...], ...]:
    """All-pairs shortest hop counts by BFS; -1 marks unreachable."""
    n = len(config.regions)
    adj: List[List[int]] = [[] for _ in range(n)]
    for a, b in config.edges:
        if 0 <= a < n and 0 <= b < n and a != b:
            adj[a].append(b)
            adj[b].append(a)
    rows = []
    for src in range(n):
        dist = [-1] * n
        dist[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        rows.append(tuple(dist))
    return tuple(rows)


def hops(origin: int, dest: int, config: ScenarioConfig):
    """Shortest-path hop count between two regions.

    Returns 0 when origin equals dest and the UNREACHABLE sentinel when no
    path exists. Symmetric in its arguments.
    """
    n = len(config.regions)
    if not (0 <= origin < n and 0 <= dest < n):
        raise ValueError(f"unknown region pair ({origin}, {dest})")
    d = _hop_table(config)[origin][dest]
    return UNREACHABLE if d < 0 else d


# ---------------------------------------------------------------------------
# Ledger reconstruction
# ---------------------------------------------------------------------------


def recompute_ledger(decisions: Sequence[DispatchDecision], config: ScenarioConfig,
                     strict: bool = False) -> ResourceLedger:
    """Rebuild the ledger by summing each chosen schedule's indicators.

    With strict=True a capacity breach raises CapacityError instead of
    being returned silently inside the ledger; either way nothing is
    clamped.
    """
    ledger = ResourceLedger.zero(config)
    for decision in decisions:
        if decision.schedule is not None:
            ledger.apply(decision.schedule, sign=1)
    if strict:
        ledger.assert_capacity(config)
    return ledger


# ---------------------------------------------------------------------------
# Schedule invariants
# ---------------------------------------------------------------------------


def schedule_violations(schedule: Schedule, config: ScenarioConfig,
                        session: Optional[Session] = None) -> List[str]:
    """Check one schedule against the domain invariants; [] when clean."""
    out: List[str] = []
    T = config.horizon
    cap = config.battery_capacity
    if not (1 <= schedule.t_minus <= T):
        out.append(f"t_minus {schedule.t_minus} outside 1..{T}")
    if not (schedule.t_minus <= schedule.t_plus <= T):
        out.append(f"t_plus {schedule.t_plus} outside t_minus..{T}")
    if not (0 <= schedule.dest_region < len(config.regions)):
        out.append(f"unknown destination {schedule.dest_region}")
    if not (-MONEY_ATOL <= schedule.final_soc * cap <= cap + MONEY_ATOL):
        out.append(f"final stored energy {schedule.final_soc * cap} outside [0, {cap}]")

    if schedule.charging:
        fac = config.facilities[schedule.facility_id]
        if not (0 <= schedule.evse_index < fac.evse_count):
            out.append(f"unknown EVSE {schedule.evse_index}")
        if schedule.t_arrival is None:
            out.append("charging schedule without arrival slot")
        else:
            lo, hi = schedule.t_arrival, max(schedule.cable_slots or (schedule.t_arrival,))
            if tuple(schedule.cable_slots) != tuple(range(lo, hi + 1)):
                out.append("cable slots not contiguous from arrival")
            if not (schedule.t_minus <= lo and hi <= schedule.t_plus):
                out.append("cable held outside the out-of-service window")
        cable_set = set(schedule.cable_slots)
        limit = fac.evse_energy_limit
        for t, e in schedule.energy_slots:
            if t not in cable_set:
                out.append(f"energy in slot {t} without a cable")
            if not (0 < e <= limit + MONEY_ATOL):
                out.append(f"per-slot energy {e} outside (0, {limit}]")
        if schedule.energy_slots:
            # every slot draws the plan's rate except one final remainder
            rate = max(e for _, e in schedule.energy_slots)
            full = [e for _, e in schedule.energy_slots
                    if abs(e - rate) <= MONEY_ATOL]
            if len(schedule.energy_slots) - len(full) > 1:
                out.append("more than one partial-rate slot")
    else:
        if schedule.cable_slots or schedule.energy_slots:
            out.append("cable or energy indicators without a facility")

    if session is not None:
        if session.id != schedule.session_id:
            out.append("session id mismatch")
        if session.t_minus != schedule.t_minus:
            out.append("t_minus does not match session")
        # replay the stored-energy trajectory hop by hop
        energy = session.soc * cap
        if schedule.charging:
            h1 = hops(session.origin_region, config.facilities[schedule.facility_id].region_id,
                      config)
            if h1 is UNREACHABLE:
                out.append("facility unreachable")
            else:
                energy -= h1 * config.per_hop_energy
                if energy < -MONEY_ATOL:
                    out.append("battery below 0 en route to facility")
                energy += schedule.energy_total
                if energy > cap + MONEY_ATOL:
                    out.append("battery above capacity after charging")
                h2 = hops(config.facilities[schedule.facility_id].region_id,
                          schedule.dest_region, config)
                if h2 is UNREACHABLE:
                    out.append("destination unreachable")
                else:
                    energy -= h2 * config.per_hop_energy
        else:
            h2 = hops(session.origin_region, schedule.dest_region, config)
            if h2 is UNREACHABLE:
                out.append("destination unreachable")
            else:
                energy -= h2 * config.per_hop_energy
        if energy < -MONEY_ATOL:
            out.append("battery below 0 on arrival")
        if abs(energy - schedule.final_soc * cap) > 1e-6:
            out.append("final_soc does not match replayed trajectory")
    return out


# ---------------------------------------------------------------------------
# Canonical serialization and hashing
# ---------------------------------------------------------------------------


def config_to_dict(config: ScenarioConfig) -> dict:
    """Plain-dict form of a config, suitable for canonical JSON."""
    return {
        "horizon": config.horizon,
        "regions": [
            {"id": r.id, "pickup_value": r.pickup_value,
             "vehicle_limit": list(r.vehicle_limit), "facility_id": r.facility_id}
            for r in config.regions
        ],
        "edges": [list(e) for e in config.edges],
        "facilities": [
            {"id": f.id, "region_id": f.region_id, "evse_count": f.evse_count,
             "cables_per_evse": f.cables_per_evse,
             "evse_energy_limit": f.evse_energy_limit,
             "solar": list(f.solar), "solar_cap": f.solar_cap,
             "grid_price": list(f.grid_price), "grid_limit": list(f.grid_limit)}
            for f in config.facilities
        ],
        "out_of_service_cap": list(config.out_of_service_cap),
        "out_of_service_penalty": list(config.out_of_service_penalty),
        "battery_capacity": config.battery_capacity,
        "charge_increment": config.charge_increment,
        "per_hop_energy": config.per_hop_energy,
        "per_hop_value_penalty": config.per_hop_value_penalty,
        "soc_value_slope": config.soc_value_slope,
        "rng_seed": config.rng_seed,
    }


def instance_hash(config: ScenarioConfig, sessions: Sequence[Session]) -> str:
    """Stable sha256 over the canonical JSON of (config, session stream)."""
    payload = {
        "config": config_to_dict(config),
        "sessions": [[s.id, s.t_minus, s.origin_region, s.soc] for s in sessions],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
