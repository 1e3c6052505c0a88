"""Time-slotted rollout of the three planning policies over scenarios.

A rollout produces a Trace: per-slot energies, placements, battery levels,
and overload flags.  Infeasible slots are data, not failures: the
simulator falls back to a best-effort policy (all MBSs on, drones placed
greedily at the highest-load sites their batteries allow) and keeps going,
so outage statistics remain observable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import energy, problems, solar, solver
from .scenario import Scenario


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    macro_j: float
    mbs_j: float
    drones_j: float
    mbs_on: tuple[int, ...]
    sites: tuple[int, ...]
    powered: tuple[int, ...]
    batteries_j: tuple[float, ...]      # at end of slot
    consumed_j: tuple[float, ...]
    harvested_j: tuple[float, ...]
    charged_j: tuple[float, ...]
    phi_w: tuple[float, ...]
    overload: bool
    fallback: bool

    @property
    def total_j(self) -> float:
        return self.macro_j + self.mbs_j + self.drones_j

    @property
    def active_mbs(self) -> int:
        return int(sum(self.mbs_on))

    @property
    def active_drones(self) -> int:
        return int(sum(1 for s, on in zip(self.sites, self.powered) if on and s != 0))


@dataclass(frozen=True)
class Trace:
    case: str
    seed: int
    start_batteries_j: tuple[float, ...]
    records: tuple[SlotRecord, ...]

    @property
    def total_j(self) -> float:
        return float(sum(r.total_j for r in self.records))

    @property
    def overload_slots(self) -> int:
        return int(sum(1 for r in self.records if r.overload))


def _overloaded(scenario: Scenario, b: int, mbs_on, sites, powered) -> bool:
    """Capacity identity on realized decisions: demand exceeds macro
    capacity plus what the active small cells absorb."""
    served = sum(scenario.mbs_load(b, k)
                 for k in range(scenario.topology.m_count) if mbs_on[k])
    served += sum(scenario.site_load(b, s)
                  for s, on in zip(sites, powered) if on and s != 0)
    return scenario.users.users(b) > scenario.topology.macro_max_users + served + 1e-9


def _record_slot(scenario, b, mbs_on, sites, powered, prev, batteries, phi_col,
                 fallback):
    """Account one slot and step the batteries; returns (record, new_batteries)."""
    p = scenario.params
    net = energy.network_slot_energy(scenario, b, mbs_on, sites, prev, phi_col,
                                     powered)
    rows = list(net.drone_slots)
    for l in range(scenario.drone_count):
        if not powered[l]:
            headroom = max(0.0, p.battery_capacity_j - batteries[l])
            rows[l] = energy.SlotEnergy(
                0.0, min(p.harvest_eff * phi_col[l] * p.slot_s, headroom), 0.0)
    new_batt = []
    for l, row in enumerate(rows):
        stepped = energy.battery_step(
            energy.Battery(batteries[l], p.battery_capacity_j), row)
        new_batt.append(stepped.level_j)
    record = SlotRecord(
        slot=b,
        macro_j=net.macro_j, mbs_j=net.mbs_j, drones_j=net.drones_j,
        mbs_on=tuple(int(v) for v in mbs_on),
        sites=tuple(int(s) for s in sites),
        powered=tuple(int(v) for v in powered),
        batteries_j=tuple(new_batt),
        consumed_j=tuple(r.consumed_j for r in rows),
        harvested_j=tuple(r.harvested_j for r in rows),
        charged_j=tuple(r.charged_j for r in rows),
        phi_w=tuple(float(v) for v in phi_col),
        overload=_overloaded(scenario, b, mbs_on, sites, powered),
        fallback=fallback)
    return record, new_batt


def _fallback_slot(scenario: Scenario, b: int, prev, batteries, phi_col):
    """Best-effort decisions for a slot the optimizer could not serve.

    All MBSs switch on; drones go greedily to the highest-load sites their
    batteries allow; leftovers return to (or stay at) the station, or shut
    down in place when not even that is battery-feasible.
    """
    p = scenario.params
    d = scenario.drone_count
    z = scenario.topology.z_count
    costs = problems.slot_costs(scenario, b)
    cap = p.battery_capacity_j

    def feasible(l, j, i):
        e = costs.trans_cost[j, i]
        gain = p.harvest_eff * phi_col[l] * p.slot_s + costs.charge_part[j, i]
        return e <= batteries[l] + 1e-9 and batteries[l] + gain <= cap + 1e-9

    order = sorted(range(1, z + 1), key=lambda i: (-costs.site_loads[i], i))
    blocked: set[int] = set()
    for _ in range(z + 1):
        sites = [-1] * d
        powered = [1] * d
        for site in order:
            if site in blocked:
                continue
            ready = [l for l in range(d)
                     if sites[l] < 0 and feasible(l, prev[l], site)]
            if ready:
                pick = max(ready, key=lambda l: (batteries[l], -l))
                sites[pick] = site
        assigned = {s for s in sites if s > 0}
        conflict = None
        for l in range(d):
            if sites[l] >= 0:
                continue
            if feasible(l, prev[l], 0):
                sites[l] = 0
            elif prev[l] not in assigned and feasible(l, prev[l], prev[l]):
                sites[l] = prev[l]
                assigned.add(prev[l])
            elif prev[l] in assigned and prev[l] != 0:
                conflict = prev[l]   # a drained drone holds a wanted site
                break
            else:
                sites[l] = prev[l]
                powered[l] = 0
        if conflict is None:
            return [True] * scenario.topology.m_count, sites, powered
        blocked.add(conflict)
    raise AssertionError("fallback placement failed to converge")


def rollout_zero(scenario: Scenario, seed: int,
                 time_limit_s: float = 300.0) -> Trace:
    """Myopic policy: re-plan at the start of every slot with the realized
    received power of that slot only."""
    phi = solar.sample_matrix(scenario.re, solar.named_rng(seed, "phi"))
    return _rollout_zero_with_phi(scenario, seed, phi, time_limit_s)


def _rollout_zero_with_phi(scenario, seed, phi, time_limit_s, case="zero"):
    d = scenario.drone_count
    prev = [0] * d
    batteries = list(scenario.initial_batteries_j)
    records = []
    for b in range(1, scenario.horizon + 1):
        phi_col = phi[:, b - 1]
        bilp, vm = problems.build_zero(scenario, b, prev, batteries, phi_col)
        report = solver.branch_and_bound(bilp, time_limit_s=time_limit_s,
                                         varmap=vm)
        if report.bits is not None:
            sched = problems.decode(report.bits, vm, scenario, bilp)
            mbs_on = sched.mbs_on[0]
            sites = [int(s) for s in sched.sites[0]]
            powered = [1] * d
            fallback = False
        else:
            mbs_on, sites, powered = _fallback_slot(scenario, b, prev,
                                                    batteries, phi_col)
            fallback = True
        record, batteries = _record_slot(scenario, b, mbs_on, sites, powered,
                                         prev, batteries, phi_col, fallback)
        records.append(record)
        prev = [s if on else prev[l]
                for l, (s, on) in enumerate(zip(sites, powered))]
    return Trace(case, seed, tuple(scenario.initial_batteries_j), tuple(records))


def _trace_from_schedule(scenario, sched, phi, case, seed,
                         fallback=False) -> Trace:
    d = scenario.drone_count
    prev = list(sched.start_sites)
    batteries = list(scenario.initial_batteries_j)
    records = []
    for idx, b in enumerate(sched.slots):
        sites = [int(s) for s in sched.sites[idx]]
        record, batteries = _record_slot(
            scenario, b, sched.mbs_on[idx], sites, [1] * d, prev, batteries,
            phi[:, idx], fallback)
        records.append(record)
        prev = sites
    return Trace(case, seed, tuple(scenario.initial_batteries_j), tuple(records))


def _fallback_horizon(scenario, phi, case, seed) -> Trace:
    d = scenario.drone_count
    prev = [0] * d
    batteries = list(scenario.initial_batteries_j)
    records = []
    for b in range(1, scenario.horizon + 1):
        phi_col = phi[:, b - 1]
        mbs_on, sites, powered = _fallback_slot(scenario, b, prev, batteries,
                                                phi_col)
        record, batteries = _record_slot(scenario, b, mbs_on, sites, powered,
                                         prev, batteries, phi_col, True)
        records.append(record)
        prev = [s if on else prev[l]
                for l, (s, on) in enumerate(zip(sites, powered))]
    return Trace(case, seed, tuple(scenario.initial_batteries_j), tuple(records))


def rollout_perfect(scenario: Scenario, phi, seed: int = 0,
                    time_limit_s: float = 300.0) -> Trace:
    """Plan the whole horizon against a known received-power matrix."""
    phi = np.asarray(phi, dtype=float)
    bilp, vm = problems.build_perfect(scenario, phi)
    report = solver.branch_and_bound(bilp, time_limit_s=time_limit_s, varmap=vm)
    if report.bits is None:
        return _fallback_horizon(scenario, phi, "perfect", seed)
    sched = problems.decode(report.bits, vm, scenario, bilp)
    return _trace_from_schedule(scenario, sched, phi, "perfect", seed)


def rollout_partial(scenario: Scenario, tree, phi_real, seed: int = 0,
                    time_limit_s: float = 300.0, case: str = "partial") -> Trace:
    """Two-stage policy: commit the MBS plan against the scenario tree,
    then re-optimize the drone placements once the received power is
    realized (recourse with the first stage fixed)."""
    phi_real = np.asarray(phi_real, dtype=float)
    bilp, vm = problems.build_partial(scenario, tree)
    report = solver.branch_and_bound(bilp, time_limit_s=time_limit_s, varmap=vm)
    if report.bits is None:
        return _fallback_horizon(scenario, phi_real, case, seed)
    fixed_pi = np.zeros((scenario.horizon, scenario.topology.m_count), dtype=int)
    for b in range(scenario.horizon):
        for k in range(scenario.topology.m_count):
            fixed_pi[b, k] = int(report.bits[vm.pi(b, k)])
    rec_bilp, rec_vm = problems.build_perfect(scenario, phi_real,
                                              fixed_mbs=fixed_pi)
    rec = solver.branch_and_bound(rec_bilp, time_limit_s=time_limit_s,
                                  varmap=rec_vm)
    if rec.bits is None:
        return _fallback_horizon(scenario, phi_real, case, seed)
    sched = problems.decode(rec.bits, rec_vm, scenario, rec_bilp)
    return _trace_from_schedule(scenario, sched, phi_real, case, seed)


def make_tree(scenario: Scenario, seed: int, tree_cap: int = solar.DEFAULT_TREE_CAP,
              sampled: int = 8):
    """Scenario tree for the partial case: the full two-point product tree
    when it fits under the cap, otherwise a sampled subset (labeled SAA)."""
    re = scenario.re
    if re.uncertainty is None:
        return solar.discretize(re, 1)
    if re.uncertainty[0] == "two_point":
        cells = re.d_count * re.b_count
        if 2 ** cells <= tree_cap:
            return solar.discretize(re, 2, cap=tree_cap)
    return solar.sample_tree(re, sampled, solar.named_rng(seed, "tree"))


@dataclass(frozen=True)
class CaseSummary:
    case: str
    seeds: int
    mean_total_j: float
    std_total_j: float
    mean_overload_slots: float
    total_overload_slots: int
    mean_active_drones: float


@dataclass(frozen=True)
class ComparisonReport:
    summaries: tuple[CaseSummary, ...]
    traces: tuple[Trace, ...]


def run_case(scenario: Scenario, case: str, seed: int,
             time_limit_s: float = 300.0, tree_cap: int = solar.DEFAULT_TREE_CAP,
             sampled: int = 8) -> Trace:
    phi = solar.sample_matrix(scenario.re, solar.named_rng(seed, "phi"))
    if case == "zero":
        return _rollout_zero_with_phi(scenario, seed, phi, time_limit_s)
    if case == "perfect":
        return rollout_perfect(scenario, phi, seed, time_limit_s)
    if case == "partial":
        tree = make_tree(scenario, seed, tree_cap, sampled)
        return rollout_partial(scenario, tree, phi, seed, time_limit_s)
    raise ValueError(f"unknown case {case!r}")


def compare(scenario: Scenario, cases, seeds, time_limit_s: float = 300.0,
            tree_cap: int = solar.DEFAULT_TREE_CAP,
            sampled: int = 8) -> ComparisonReport:
    """Paired rollouts (same seed, same realization) across cases."""
    traces = []
    for case in cases:
        for seed in seeds:
            traces.append(run_case(scenario, case, seed, time_limit_s,
                                   tree_cap, sampled))
    summaries = []
    for case in cases:
        own = [t for t in traces if t.case == case]
        totals = np.array([t.total_j for t in own])
        overloads = np.array([t.overload_slots for t in own])
        active = np.array([r.active_drones for t in own for r in t.records])
        summaries.append(CaseSummary(
            case, len(own), float(totals.mean()), float(totals.std()),
            float(overloads.mean()), int(overloads.sum()),
            float(active.mean()) if active.size else 0.0))
    return ComparisonReport(tuple(summaries), tuple(traces))


# ---------------------------------------------------------------------------
# CSV emission (fixed column order; byte-stable for fixed inputs)


def write_trace_csv(traces, path, drone_count: int) -> None:
    header = ["case", "seed", "slot", "E0_J", "EM_J", "ED_J", "Etot_J",
              "overload", "active_mbs", "active_drones"]
    header += [f"battery_{l + 1}_J" for l in range(drone_count)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in traces:
            for r in t.records:
                row = [t.case, t.seed, r.slot,
                       f"{r.macro_j:.6f}", f"{r.mbs_j:.6f}",
                       f"{r.drones_j:.6f}", f"{r.total_j:.6f}",
                       int(r.overload), r.active_mbs, r.active_drones]
                row += [f"{v:.6f}" for v in r.batteries_j]
                writer.writerow(row)


def write_placement_csv(traces, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case", "seed", "slot", "drone", "site", "powered"])
        for t in traces:
            for r in t.records:
                for l, (site, on) in enumerate(zip(r.sites, r.powered)):
                    writer.writerow([t.case, t.seed, r.slot, l + 1, site, on])


def write_summary_csv(report: ComparisonReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case", "seeds", "mean_total_J", "std_total_J",
                         "mean_overload_slots", "total_overload_slots",
                         "mean_active_drones"])
        for s in report.summaries:
            writer.writerow([s.case, s.seeds, f"{s.mean_total_j:.6f}",
                             f"{s.std_total_j:.6f}",
                             f"{s.mean_overload_slots:.6f}",
                             s.total_overload_slots,
                             f"{s.mean_active_drones:.6f}"])
