"""Scenario generation, file IO, trace ingestion, and run comparison.

Everything here is plumbing around the core library: deterministic
synthetic instances (grid-graph regions, diurnal solar, two-tier
time-of-use prices, Poisson arrivals), JSON/CSV round-trips for configs,
session streams and run reports, and the comparison table that lines up
algorithms against the offline bounds.

All randomness flows from one seeded generator, and every artifact is
written with canonical key order, so equal seeds give equal bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import MONEY_ATOL
from .domain import (
    Facility, Region, RunReport, ScenarioConfig, Schedule, Session,
    config_to_dict, validate,
)


# ---------------------------------------------------------------------------
# Synthetic scenario generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for the synthetic instance generator.

    Regions form a grid_rows x grid_cols grid with unit-hop edges.
    Facilities are placed in distinct random regions. Solar follows a
    clipped sine over the 06:00-18:00 daylight window, grid prices a
    two-tier time-of-use step, and the out-of-service penalty is twice
    the peak price throughout. Arrivals are Poisson per slot.
    """

    horizon: int = 96
    grid_rows: int = 4
    grid_cols: int = 4
    facility_count: int = 2
    evse_per_facility: int = 3
    cables_per_evse: int = 4
    evse_energy_limit: float = 20.0
    battery_capacity: float = 50.0
    charge_increment: float = 12.5
    per_hop_energy: float = 1.0
    per_hop_value_penalty: float = 0.5
    soc_value_slope: float = 0.5
    pickup_values: Tuple[float, ...] = (15.0, 10.0, 5.0)
    vehicle_limit: int = 40
    out_of_service_cap: int = 80
    offpeak_price: float = 0.15
    peak_price: float = 0.45
    peak_hours: Tuple[float, float] = (16.0, 21.0)
    solar_peak: float = 6.0
    grid_limit: float = 12.0
    arrival_rate: float = 3.2
    soc_choices: Tuple[float, ...] = (0.25, 0.50, 0.75)
    max_sessions: Optional[int] = None


#: Ready-made parameter sets: a fast desk scale, a minimal scale suited
#: to exhaustive offline search, and the full evaluation scale.
PRESETS: Dict[str, GeneratorParams] = {
    "desk": GeneratorParams(),
    "tiny": GeneratorParams(
        horizon=12, grid_rows=2, grid_cols=2, facility_count=1,
        evse_per_facility=1, cables_per_evse=2, evse_energy_limit=10.0,
        battery_capacity=15.0, charge_increment=5.0, per_hop_energy=1.0,
        per_hop_value_penalty=0.5, soc_value_slope=0.5, vehicle_limit=1,
        out_of_service_cap=3, offpeak_price=0.2, peak_price=0.2,
        solar_peak=0.0, grid_limit=10.0, arrival_rate=0.5, max_sessions=6),
    "full": GeneratorParams(
        horizon=96, grid_rows=2, grid_cols=23, facility_count=8,
        evse_per_facility=10, cables_per_evse=4, evse_energy_limit=20.0,
        battery_capacity=50.0, charge_increment=12.5, vehicle_limit=40,
        out_of_service_cap=200, solar_peak=40.0, grid_limit=120.0,
        arrival_rate=10.0),
}


def validate_params(params: GeneratorParams) -> List[str]:
    out = []
    if params.horizon < 1:
        out.append("horizon must be >= 1")
    if params.grid_rows < 1 or params.grid_cols < 1:
        out.append("grid dimensions must be >= 1")
    n = params.grid_rows * params.grid_cols
    if not (1 <= params.facility_count <= n):
        out.append(f"facility_count must be in 1..{n}")
    if params.arrival_rate < 0:
        out.append("arrival_rate must be >= 0")
    if min(params.pickup_values, default=0.0) < 0 or not params.pickup_values:
        out.append("pickup_values must be nonempty and nonnegative")
    if max(params.pickup_values, default=0.0) <= 0:
        out.append("at least one pickup value must be positive")
    if not all(0.0 <= s <= 1.0 for s in params.soc_choices):
        out.append("soc_choices must lie in [0, 1]")
    if params.offpeak_price <= 0 or params.peak_price <= 0:
        out.append("prices must be positive")
    if params.max_sessions is not None and params.max_sessions < 0:
        out.append("max_sessions must be >= 0 when set")
    return out


def _grid_edges(rows: int, cols: int) -> Tuple[Tuple[int, int], ...]:
    edges = []
    for i in range(rows):
        for j in range(cols):
            r = i * cols + j
            if j + 1 < cols:
                edges.append((r, r + 1))
            if i + 1 < rows:
                edges.append((r, r + cols))
    return tuple(edges)


def _slot_hour(t: int, horizon: int) -> float:
    """Clock hour at the midpoint of slot t, mapping the horizon to 24h."""
    return (t - 0.5) * 24.0 / horizon


def generate_scenario(seed: int, params: Union[str, GeneratorParams] = "desk",
                      ) -> Tuple[ScenarioConfig, Tuple[Session, ...]]:
    """Deterministic synthetic instance from one seed.

    Same seed and params give the identical config and session stream,
    bit for bit.
    """
    if isinstance(params, str):
        try:
            params = PRESETS[params]
        except KeyError:
            raise ValueError(f"unknown preset {params!r}; "
                             f"choose from {sorted(PRESETS)}") from None
    problems = validate_params(params)
    if problems:
        raise ValueError("invalid generator params: " + "; ".join(problems))

    rng = np.random.default_rng(seed)
    T = params.horizon
    n = params.grid_rows * params.grid_cols

    facility_regions = sorted(int(r) for r in rng.choice(
        n, size=params.facility_count, replace=False))
    region_to_facility = {r: f for f, r in enumerate(facility_regions)}
    values = [float(v) for v in rng.choice(params.pickup_values, size=n)]

    regions = tuple(
        Region(id=d, pickup_value=values[d],
               vehicle_limit=(params.vehicle_limit,) * T,
               facility_id=region_to_facility.get(d))
        for d in range(n))

    phi = 2.0 * max(params.peak_price, params.offpeak_price)
    lo_h, hi_h = params.peak_hours
    prices = tuple(
        params.peak_price if lo_h <= _slot_hour(t, T) < hi_h else params.offpeak_price
        for t in range(1, T + 1))
    solar_cap = params.solar_peak * 1.15

    facilities = []
    for f, r in enumerate(facility_regions):
        shape = [max(0.0, math.sin(math.pi * (_slot_hour(t, T) - 6.0) / 12.0))
                 for t in range(1, T + 1)]
        noise = rng.uniform(0.85, 1.15, size=T)
        solar = tuple(
            min(solar_cap, max(0.0, params.solar_peak * s * float(x)))
            for s, x in zip(shape, noise))
        facilities.append(Facility(
            id=f, region_id=r, evse_count=params.evse_per_facility,
            cables_per_evse=params.cables_per_evse,
            evse_energy_limit=params.evse_energy_limit,
            solar=solar, solar_cap=solar_cap,
            grid_price=prices, grid_limit=(params.grid_limit,) * T))

    config = ScenarioConfig(
        horizon=T, regions=regions, edges=_grid_edges(params.grid_rows, params.grid_cols),
        facilities=tuple(facilities),
        out_of_service_cap=(params.out_of_service_cap,) * T,
        out_of_service_penalty=(phi,) * T,
        battery_capacity=params.battery_capacity,
        charge_increment=params.charge_increment,
        per_hop_energy=params.per_hop_energy,
        per_hop_value_penalty=params.per_hop_value_penalty,
        soc_value_slope=params.soc_value_slope,
        rng_seed=seed)
    bad = validate(config)
    if bad:
        raise RuntimeError("generator produced an invalid config: "
                           + "; ".join(str(v) for v in bad[:3]))

    sessions: List[Session] = []
    sid = 0
    for t in range(1, T + 1):
        count = int(rng.poisson(params.arrival_rate))
        for _ in range(count):
            origin = int(rng.integers(0, n))
            soc = float(rng.choice(params.soc_choices))
            if params.max_sessions is None or sid < params.max_sessions:
                sessions.append(Session(id=sid, t_minus=t,
                                        origin_region=origin, soc=soc))
            sid += 1
    return config, tuple(sessions)


# ---------------------------------------------------------------------------
# Config / session / report round-trips
# ---------------------------------------------------------------------------


def config_from_dict(d: Mapping) -> ScenarioConfig:
    """Inverse of config_to_dict."""
    return ScenarioConfig(
        horizon=int(d["horizon"]),
        regions=tuple(
            Region(id=int(r["id"]), pickup_value=float(r["pickup_value"]),
                   vehicle_limit=tuple(int(x) for x in r["vehicle_limit"]),
                   facility_id=None if r["facility_id"] is None else int(r["facility_id"]))
            for r in d["regions"]),
        edges=tuple((int(a), int(b)) for a, b in d["edges"]),
        facilities=tuple(
            Facility(id=int(f["id"]), region_id=int(f["region_id"]),
                     evse_count=int(f["evse_count"]),
                     cables_per_evse=int(f["cables_per_evse"]),
                     evse_energy_limit=float(f["evse_energy_limit"]),
                     solar=tuple(float(x) for x in f["solar"]),
                     solar_cap=float(f["solar_cap"]),
                     grid_price=tuple(float(x) for x in f["grid_price"]),
                     grid_limit=tuple(float(x) for x in f["grid_limit"]))
            for f in d["facilities"]),
        out_of_service_cap=tuple(int(x) for x in d["out_of_service_cap"]),
        out_of_service_penalty=tuple(float(x) for x in d["out_of_service_penalty"]),
        battery_capacity=float(d["battery_capacity"]),
        charge_increment=float(d["charge_increment"]),
        per_hop_energy=float(d["per_hop_energy"]),
        per_hop_value_penalty=float(d["per_hop_value_penalty"]),
        soc_value_slope=float(d["soc_value_slope"]),
        rng_seed=int(d.get("rng_seed", 0)))


def _dump_json(payload, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_config(config: ScenarioConfig, path: str) -> None:
    _dump_json(config_to_dict(config), path)


def read_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        config = config_from_dict(json.load(fh))
    problems = validate(config)
    if problems:
        raise ValueError(f"{path}: invalid config: "
                         + "; ".join(str(p) for p in problems[:5]))
    return config


def write_sessions(sessions: Sequence[Session], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "t_minus", "origin_region", "soc"])
        for s in sessions:
            writer.writerow([s.id, s.t_minus, s.origin_region, repr(s.soc)])


def read_sessions(path: str) -> Tuple[Session, ...]:
    sessions = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for i, row in enumerate(reader, start=2):
            try:
                sessions.append(Session(
                    id=int(row["id"]), t_minus=int(row["t_minus"]),
                    origin_region=int(row["origin_region"]), soc=float(row["soc"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: row {i}: {exc}") from None
    return tuple(sessions)


def schedule_to_dict(s: Schedule) -> dict:
    return {
        "session_id": s.session_id, "t_minus": s.t_minus,
        "facility_id": s.facility_id, "evse_index": s.evse_index,
        "t_arrival": s.t_arrival, "cable_slots": list(s.cable_slots),
        "energy_slots": [[t, e] for t, e in s.energy_slots],
        "dest_region": s.dest_region, "t_plus": s.t_plus,
        "hops_total": s.hops_total, "final_soc": s.final_soc,
        "value": s.value,
    }


def report_to_dict(report: RunReport) -> dict:
    return {
        "algorithm": report.algorithm,
        "instance_hash": report.instance_hash,
        "psi": report.psi,
        "bounds": None if report.bounds is None else {
            k: getattr(report.bounds, k)
            for k in ("L_c", "U_c", "L_e", "U_e", "L_g", "U_g",
                      "L_d", "U_d", "L_o", "U_o")},
        "alphas": None if report.alphas is None else report.alphas.as_dict(),
        "welfare": report.welfare,
        "accepted": report.accepted,
        "primal_trajectory": list(report.primal_trajectory),
        "dual_trajectory": (None if report.dual_trajectory is None
                            else list(report.dual_trajectory)),
        "peak_utilization": dict(report.peak_utilization),
        "decisions": [
            {"session_id": d.session_id, "utility": d.utility,
             "schedule": None if d.schedule is None else schedule_to_dict(d.schedule),
             "breakdown": {
                 "destination": d.breakdown.destination,
                 "out_of_service": d.breakdown.out_of_service,
                 "cable": d.breakdown.cable,
                 "energy": d.breakdown.energy,
                 "generation": d.breakdown.generation}}
            for d in report.decisions],
    }


def write_report(report: RunReport, path: str) -> None:
    _dump_json(report_to_dict(report), path)


def schedule_from_dict(d: Mapping) -> Schedule:
    return Schedule(
        session_id=int(d["session_id"]), t_minus=int(d["t_minus"]),
        facility_id=None if d["facility_id"] is None else int(d["facility_id"]),
        evse_index=None if d["evse_index"] is None else int(d["evse_index"]),
        t_arrival=None if d["t_arrival"] is None else int(d["t_arrival"]),
        cable_slots=tuple(int(t) for t in d["cable_slots"]),
        energy_slots=tuple((int(t), float(e)) for t, e in d["energy_slots"]),
        dest_region=int(d["dest_region"]), t_plus=int(d["t_plus"]),
        hops_total=int(d["hops_total"]), final_soc=float(d["final_soc"]),
        value=float(d["value"]))


def report_from_dict(d: Mapping) -> RunReport:
    """Inverse of report_to_dict."""
    from .domain import DispatchDecision, PriceBreakdown
    from .pricing import Alphas, PriceBounds

    alphas_d = d["alphas"]
    return RunReport(
        algorithm=d["algorithm"],
        instance_hash=d["instance_hash"],
        psi=int(d["psi"]),
        bounds=None if d["bounds"] is None else PriceBounds(**d["bounds"]),
        alphas=None if alphas_d is None else Alphas(
            a1=alphas_d["a1"], a2=alphas_d["a2"], a3=alphas_d["a3"],
            a4=alphas_d["a4"], a5=alphas_d["a5"]),
        decisions=tuple(
            DispatchDecision(
                session_id=int(x["session_id"]), utility=float(x["utility"]),
                schedule=(None if x["schedule"] is None
                          else schedule_from_dict(x["schedule"])),
                breakdown=PriceBreakdown(**x["breakdown"]))
            for x in d["decisions"]),
        primal_trajectory=tuple(float(x) for x in d["primal_trajectory"]),
        dual_trajectory=(None if d["dual_trajectory"] is None
                         else tuple(float(x) for x in d["dual_trajectory"])),
        welfare=float(d["welfare"]),
        peak_utilization=dict(d["peak_utilization"]))


def read_report(path: str) -> RunReport:
    with open(path, "r", encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def write_decisions_csv(report: RunReport, path: str) -> None:
    """One row per session: what the algorithm did with it."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["session_id", "action", "utility", "value",
                         "facility_id", "evse_index", "t_arrival", "t_plus",
                         "dest_region", "energy_kwh", "hops", "final_soc"])
        for d in report.decisions:
            s = d.schedule
            if s is None:
                writer.writerow([d.session_id, "depot", repr(d.utility),
                                 "", "", "", "", "", "", "", "", ""])
                continue
            action = "charge" if s.charging else "rebalance"
            writer.writerow([
                d.session_id, action, repr(d.utility), repr(s.value),
                "" if s.facility_id is None else s.facility_id,
                "" if s.evse_index is None else s.evse_index,
                "" if s.t_arrival is None else s.t_arrival,
                s.t_plus, s.dest_region, repr(s.energy_total),
                s.hops_total, repr(s.final_soc)])


# ---------------------------------------------------------------------------
# CSV trace ingestion
# ---------------------------------------------------------------------------


def _read_trace_csv(path: str, facility_count: int, horizon: int,
                    kind: str) -> List[List[Optional[float]]]:
    """Parse a (slot, value) or (facility, slot, value) CSV into per-
    facility traces, with row-numbered errors for every malformed cell."""
    per_fac: List[List[Optional[float]]] = [[None] * horizon
                                            for _ in range(facility_count)]
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    start = 0
    if rows:
        try:
            [float(x) for x in rows[0]]
        except ValueError:
            start = 1  # header row
    width = None
    for i in range(start, len(rows)):
        row = [c for c in rows[i]]
        rownum = i + 1
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) not in (2, 3):
            raise ValueError(f"{path}: row {rownum}: expected 2 or 3 columns, "
                             f"got {len(row)}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValueError(f"{path}: row {rownum}: mixed column counts")
        try:
            nums = [float(c) for c in row]
        except ValueError as exc:
            raise ValueError(f"{path}: row {rownum}: {exc}") from None
        if any(math.isnan(x) for x in nums):
            raise ValueError(f"{path}: row {rownum}: NaN {kind} value")
        if width == 3:
            fac, slot, value = int(nums[0]), int(nums[1]), nums[2]
            targets = [fac]
        else:
            slot, value = int(nums[0]), nums[1]
            targets = list(range(facility_count))
            fac = None
        if not (1 <= slot <= horizon):
            raise ValueError(f"{path}: row {rownum}: slot {slot} outside 1..{horizon}")
        for f in targets:
            if not (0 <= f < facility_count):
                raise ValueError(f"{path}: row {rownum}: unknown facility {f}")
            if per_fac[f][slot - 1] is not None:
                raise ValueError(f"{path}: row {rownum}: duplicate entry for "
                                 f"facility {f} slot {slot}")
            per_fac[f][slot - 1] = value
    for f in range(facility_count):
        have = sum(1 for x in per_fac[f] if x is not None)
        if have != horizon:
            raise ValueError(f"{path}: facility {f}: expected {horizon} rows, "
                             f"got {have}")
    return per_fac


def ingest_traces(price_csv: Optional[str], solar_csv: Optional[str],
                  config: ScenarioConfig) -> ScenarioConfig:
    """Replace grid-price and solar traces from CSV files.

    Each file holds either (slot, value) rows applied to every facility
    or (facility, slot, value) rows, one entry per facility and slot.
    Prices must be positive, solar within [0, solar_cap]; all errors
    carry the offending row number.
    """
    F = len(config.facilities)
    T = config.horizon
    facilities = list(config.facilities)

    if price_csv is not None:
        traces = _read_trace_csv(price_csv, F, T, "price")
        for f in range(F):
            for t, v in enumerate(traces[f]):
                if v <= 0:
                    raise ValueError(f"{price_csv}: facility {f} slot {t + 1}: "
                                     f"price {v} must be positive")
            facilities[f] = replace(facilities[f], grid_price=tuple(traces[f]))
    if solar_csv is not None:
        traces = _read_trace_csv(solar_csv, F, T, "solar")
        for f in range(F):
            cap = facilities[f].solar_cap
            for t, v in enumerate(traces[f]):
                if v < 0 or v > cap + MONEY_ATOL:
                    raise ValueError(f"{solar_csv}: facility {f} slot {t + 1}: "
                                     f"solar {v} outside [0, {cap}]")
            facilities[f] = replace(facilities[f], solar=tuple(traces[f]))
    return replace(config, facilities=tuple(facilities))


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    algorithm: str
    welfare: float
    accepted: int
    ratio_to_ub: Optional[float]
    ratio_to_opt: Optional[float]


@dataclass(frozen=True)
class ComparisonTable:
    """Welfare of several runs of one instance against the offline bounds."""

    instance_hash: str
    rows: Tuple[ComparisonRow, ...]
    upper_bound: float
    opt: Optional[float]
    alpha: Optional[float]
    ratio_guarantee_met: Optional[bool]


def compare(reports: Sequence[RunReport], ub: float,
            opt: Optional[float] = None,
            alpha: Optional[float] = None) -> ComparisonTable:
    """Line up runs of one instance against the upper bound.

    Refuses mixed instances and treats any welfare above the upper bound
    as a hard contradiction. When an exact optimum is supplied, checks
    alpha * (online welfare) >= opt; alpha defaults to the online run's
    own worst-family value.
    """
    if not reports:
        raise ValueError("no reports to compare")
    hashes = {r.instance_hash for r in reports}
    if len(hashes) != 1:
        raise ValueError(f"reports mix {len(hashes)} different instances; "
                         "compare requires a single instance")
    for r in reports:
        if r.welfare > ub + MONEY_ATOL:
            raise ValueError(
                f"upper bound violated: {r.algorithm} welfare {r.welfare} "
                f"exceeds the bound {ub}")
    if opt is not None and opt > ub + MONEY_ATOL:
        raise ValueError(f"upper bound violated: optimum {opt} exceeds {ub}")

    if alpha is None:
        for r in reports:
            if r.algorithm == "online" and r.alphas is not None:
                alpha = r.alphas.alpha
                break

    rows = tuple(
        ComparisonRow(
            algorithm=r.algorithm, welfare=r.welfare, accepted=r.accepted,
            ratio_to_ub=(r.welfare / ub) if ub > 0 else None,
            ratio_to_opt=(r.welfare / opt) if opt else None)
        for r in reports)

    met: Optional[bool] = None
    if opt is not None and alpha is not None:
        online = [r for r in reports if r.algorithm == "online"]
        if online:
            met = alpha * online[0].welfare >= opt - MONEY_ATOL
    return ComparisonTable(instance_hash=reports[0].instance_hash, rows=rows,
                           upper_bound=ub, opt=opt, alpha=alpha,
                           ratio_guarantee_met=met)


def write_comparison(table: ComparisonTable, csv_path: str,
                     plot_json_path: Optional[str] = None) -> None:
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm", "welfare", "accepted",
                         "ratio_to_ub", "ratio_to_opt"])
        for row in table.rows:
            writer.writerow([
                row.algorithm, repr(row.welfare), row.accepted,
                "" if row.ratio_to_ub is None else repr(row.ratio_to_ub),
                "" if row.ratio_to_opt is None else repr(row.ratio_to_opt)])
    if plot_json_path is not None:
        _dump_json({
            "instance_hash": table.instance_hash,
            "upper_bound": table.upper_bound,
            "opt": table.opt,
            "alpha": table.alpha,
            "ratio_guarantee_met": table.ratio_guarantee_met,
            "series": [
                {"algorithm": row.algorithm, "welfare": row.welfare,
                 "ratio_to_ub": row.ratio_to_ub}
                for row in table.rows],
        }, plot_json_path)


# ---------------------------------------------------------------------------
# Experiment orchestration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """A batch of runs: one instance source, several algorithms, N seeds.

    ``algorithms`` entries: "online", "threshold-25", "threshold-50",
    "threshold-75". Repetition r uses seed + r when generating.
    """

    out_dir: str
    seed: Optional[int] = None
    preset: str = "desk"
    config_path: Optional[str] = None
    sessions_path: Optional[str] = None
    algorithms: Tuple[str, ...] = ("online",)
    repetitions: int = 1

    def problems(self) -> List[str]:
        out = []
        if self.repetitions < 1:
            out.append("repetitions must be >= 1")
        file_source = self.config_path is not None and self.sessions_path is not None
        if self.seed is None and not file_source:
            out.append("need either a seed or config+sessions paths")
        for path in (self.config_path, self.sessions_path):
            if path is not None and not os.path.exists(path):
                out.append(f"missing file {path}")
        if file_source and self.repetitions != 1:
            out.append("file-based instances support exactly 1 repetition")
        for a in self.algorithms:
            if a != "online" and not a.startswith("threshold-"):
                out.append(f"unknown algorithm {a!r}")
        return out


def run_experiment(spec: ExperimentSpec) -> List[str]:
    """Execute the spec; returns the paths written (reports then CSVs)."""
    from .baselines import run_threshold
    from .dispatcher import run_online

    problems = spec.problems()
    if problems:
        raise ValueError("invalid experiment spec: " + "; ".join(problems))
    os.makedirs(spec.out_dir, exist_ok=True)
    written: List[str] = []
    for rep in range(spec.repetitions):
        if spec.config_path is not None and spec.sessions_path is not None:
            config = read_config(spec.config_path)
            sessions = read_sessions(spec.sessions_path)
            stem = os.path.splitext(os.path.basename(spec.config_path))[0]
        else:
            config, sessions = generate_scenario(spec.seed + rep, spec.preset)
            stem = f"seed{spec.seed + rep}"
        for algorithm in spec.algorithms:
            if algorithm == "online":
                report = run_online(sessions, config)
            else:
                pct = int(algorithm.split("-", 1)[1])
                report = run_threshold(sessions, config, threshold=pct / 100.0)
            base = os.path.join(spec.out_dir, f"{stem}-{algorithm}")
            write_report(report, base + "-report.json")
            write_decisions_csv(report, base + "-decisions.csv")
            written.extend([base + "-report.json", base + "-decisions.csv"])
    return written
