"""Binary linear programs for the three knowledge regimes, plus decoding.

The builders translate a scenario into generic binary linear programs over
the MBS on/off bits, the one-hot drone placement bits, and (for horizon
problems) the transition product bits that linearize consecutive-slot
placement products.  ``decode`` converts solver bit-vectors back into
validated schedules and cross-checks the objective against an independent
energy recomputation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import energy
from .errors import (BatteryOverflow, BatteryUnderflow, InconsistentSolution,
                     ValidationError)
from .scenario import Scenario
from .solar import TreeScenario

# Transitions that cannot be flown within one slot get this consumption so
# that any battery row forbids them without changing the row structure.
BIG_COST_J = 1e15


@dataclass(frozen=True)
class LinearRow:
    name: str
    cols: np.ndarray
    vals: np.ndarray
    sense: str            # one of '<=', '>=', '=='
    rhs: float
    # machine-readable identity, e.g. ("draw", w, l, b); used by repair logic
    tag: tuple = ()

    def value(self, bits) -> float:
        return float(np.dot(self.vals, np.asarray(bits)[self.cols]))

    def violation(self, bits) -> float:
        v = self.value(bits)
        if self.sense == "<=":
            return max(0.0, v - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - v)
        return abs(v - self.rhs)


@dataclass(frozen=True)
class Bilp:
    """Minimize cost . x + offset over binary x subject to linear rows."""

    cost: np.ndarray
    offset_j: float
    rows: tuple[LinearRow, ...]
    names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.cost.size

    def objective(self, bits) -> float:
        return float(np.dot(self.cost, np.asarray(bits, dtype=float))) + self.offset_j

    def matrix(self):
        """Cached (A, senses, rhs) view; safe because the instance is frozen."""
        cached = getattr(self, "_matrix", None)
        if cached is None:
            cached = self.to_matrix()
            object.__setattr__(self, "_matrix", cached)
        return cached

    def violations(self, bits) -> np.ndarray:
        """Nonnegative violation per row for a candidate bit-vector."""
        a, senses, rhs = self.matrix()
        if a.shape[0] == 0:
            return np.zeros(0)
        resid = a @ np.asarray(bits, dtype=float) - rhs
        return np.where(senses == "==", np.abs(resid), np.maximum(resid, 0.0))

    def max_violation(self, bits) -> float:
        v = self.violations(bits)
        return float(v.max()) if v.size else 0.0

    def feasible(self, bits, tol: float = 1e-9) -> bool:
        return self.max_violation(bits) <= tol

    def to_matrix(self):
        """Rows as (A, senses, rhs) with senses '<=' or '==' ('>=' negated)."""
        n_rows = len(self.rows)
        data, indices, indptr = [], [], [0]
        senses = np.empty(n_rows, dtype="<U2")
        rhs = np.empty(n_rows)
        for r, row in enumerate(self.rows):
            flip = -1.0 if row.sense == ">=" else 1.0
            data.append(flip * row.vals)
            indices.append(row.cols)
            indptr.append(indptr[-1] + row.cols.size)
            senses[r] = "==" if row.sense == "==" else "<="
            rhs[r] = flip * row.rhs
        if n_rows == 0:
            return sp.csr_matrix((0, self.n)), senses, rhs
        a = sp.csr_matrix(
            (np.concatenate(data), np.concatenate(indices), np.array(indptr)),
            shape=(n_rows, self.n))
        return a, senses, rhs


@dataclass(frozen=True)
class VarMap:
    """Index layout of one program plus the context needed to decode it.

    The physical per-slot transition tables (consumption and charging, in
    Joules, indexed previous x current site) ride along so that solvers can
    bound and repair battery feasibility without rebuilding the scenario.
    """

    kind: str                         # 'zero' | 'perfect' | 'partial'
    m_count: int
    d_count: int
    z_count: int
    b_eff: int
    w_count: int = 1
    slot0: int = 1                    # absolute 1-based slot of local index 0
    prev_sites: tuple[int, ...] = ()
    batteries_j: tuple[float, ...] = ()
    phi: tuple = ()                   # one (D, b_eff) matrix per scenario
    probs: tuple[float, ...] = (1.0,)
    has_zeta: bool = False
    capacity_j: float = 0.0
    trans_cost: tuple = ()            # per local slot: (S, S) consumption
    charge_part: tuple = ()           # per local slot: (S, S) charging
    harvest_scale: float = 0.0        # Joules harvested per Watt received

    @property
    def sites(self) -> int:
        return self.z_count + 1

    @property
    def eps_block(self) -> int:
        return self.b_eff * self.d_count * self.sites

    @property
    def zeta_block(self) -> int:
        return self.b_eff * self.d_count * self.sites ** 2 if self.has_zeta else 0

    @property
    def n_vars(self) -> int:
        return (self.b_eff * self.m_count
                + self.w_count * (self.eps_block + self.zeta_block))

    def pi(self, b: int, k: int) -> int:
        return b * self.m_count + k

    def _w_base(self, w: int) -> int:
        return self.b_eff * self.m_count + w * (self.eps_block + self.zeta_block)

    def eps(self, b: int, l: int, i: int, w: int = 0) -> int:
        return self._w_base(w) + (b * self.d_count + l) * self.sites + i

    def zeta(self, b: int, l: int, j: int, i: int, w: int = 0) -> int:
        return (self._w_base(w) + self.eps_block
                + ((b * self.d_count + l) * self.sites + j) * self.sites + i)

    def var_names(self) -> tuple[str, ...]:
        names = [""] * self.n_vars
        for b in range(self.b_eff):
            slot = self.slot0 + b
            for k in range(self.m_count):
                names[self.pi(b, k)] = f"pi_{slot}_{k + 1}"
        for w in range(self.w_count):
            prefix = f"w{w + 1}_" if self.w_count > 1 else ""
            for b in range(self.b_eff):
                slot = self.slot0 + b
                for l in range(self.d_count):
                    for i in range(self.sites):
                        names[self.eps(b, l, i, w)] = f"{prefix}eps_{slot}_{l + 1}_{i}"
                    if self.has_zeta:
                        for j in range(self.sites):
                            for i in range(self.sites):
                                names[self.zeta(b, l, j, i, w)] = \
                                    f"{prefix}zeta_{slot}_{l + 1}_{j}_{i}"
        return tuple(names)


# ---------------------------------------------------------------------------
# slot cost tables


@dataclass(frozen=True)
class SlotCosts:
    """Linear objective/constraint coefficients for one slot, in Joules."""

    pi_cost: np.ndarray          # (M,) MBS activation cost net of macro savings
    eps_offload: np.ndarray      # (Z+1,) macro savings per occupied serving site
    trans_cost: np.ndarray       # (Z+1, Z+1) drone consumption, prev x cur
    charge_part: np.ndarray      # (Z+1, Z+1) charging energy, prev x cur
    mbs_loads: np.ndarray        # (M,) capped users per active MBS
    site_loads: np.ndarray       # (Z+1,) capped users per occupied site
    const_j: float               # decision-independent slot energy


def slot_costs(scenario: Scenario, b: int) -> SlotCosts:
    """Coefficient tables for 1-based slot ``b``; received power enters
    only through constraint right-hand sides, never the objective."""
    p = scenario.params
    t_slot = p.slot_s
    macro_pu, mbs_pu, site_pu = energy.per_user_radiated_w(scenario)
    um = scenario.mbs_loads(b)
    ud = scenario.site_loads(b)
    n = scenario.topology.z_count + 1

    pi_cost = (t_slot * (p.alpha_mbs * mbs_pu * um + p.beta_mbs_w - p.gamma_mbs_w)
               - t_slot * p.alpha_macro * macro_pu * um)
    eps_offload = -t_slot * p.alpha_macro * macro_pu * ud

    serve_w = np.zeros(n)
    serve_w[1:] = (p.alpha_drone * site_pu[1:] * ud[1:] + p.beta_drone_w
                   + p.hw_idle_w)
    fly_w = energy.flying_power_w(p) + p.gamma_drone_w

    trans_cost = np.empty((n, n))
    charge_part = np.zeros((n, n))
    for j in range(n):
        for i in range(n):
            if j == i:
                if i == 0:
                    trans_cost[j, i] = p.gamma_drone_w * t_slot
                    charge_part[j, i] = p.charge_power_w * t_slot
                else:
                    trans_cost[j, i] = serve_w[i] * t_slot
                continue
            t_fly = scenario.site_distance_m[j, i] / p.drone_speed_mps
            if t_fly >= t_slot:
                trans_cost[j, i] = BIG_COST_J
                continue
            t_rest = t_slot - t_fly
            if i == 0:
                trans_cost[j, i] = fly_w * t_fly + p.gamma_drone_w * t_rest
                charge_part[j, i] = p.charge_power_w * t_rest
            else:
                trans_cost[j, i] = fly_w * t_fly + serve_w[i] * t_rest

    const_j = (t_slot * (p.alpha_macro * macro_pu * scenario.users.users(b)
                         + p.beta_macro_w)
               + scenario.topology.m_count * p.gamma_mbs_w * t_slot)
    return SlotCosts(pi_cost, eps_offload, trans_cost, charge_part,
                     um, ud, const_j)


def harvest_matrix(scenario: Scenario, costs: SlotCosts, phi_lb: float) -> np.ndarray:
    """Harvest-plus-charge energy per (prev, cur) transition for one drone."""
    return scenario.params.harvest_eff * phi_lb * scenario.params.slot_s \
        + costs.charge_part


# ---------------------------------------------------------------------------
# builders


def build_zero(scenario: Scenario, slot_b: int, prev_sites, batteries_j,
               phi_b) -> tuple[Bilp, VarMap]:
    """Single-slot program given the previous placement and battery state.

    ``phi_b`` is the received power per drone during this slot (the only
    renewable information available in the zero-knowledge regime).
    """
    m, d = scenario.topology.m_count, scenario.drone_count
    z = scenario.topology.z_count
    costs = slot_costs(scenario, slot_b)
    cap_j = scenario.params.battery_capacity_j
    vm = VarMap("zero", m, d, z, 1, slot0=slot_b,
                prev_sites=tuple(int(s) for s in prev_sites),
                batteries_j=tuple(float(v) for v in batteries_j),
                phi=(np.asarray(phi_b, dtype=float).reshape(d, 1),),
                capacity_j=cap_j,
                trans_cost=(costs.trans_cost,),
                charge_part=(costs.charge_part,),
                harvest_scale=scenario.params.harvest_eff * scenario.params.slot_s)

    cost = np.zeros(vm.n_vars)
    for k in range(m):
        cost[vm.pi(0, k)] = costs.pi_cost[k]
    for l in range(d):
        jp = vm.prev_sites[l]
        for i in range(z + 1):
            cost[vm.eps(0, l, i)] = costs.trans_cost[jp, i] + costs.eps_offload[i]

    rows = []
    for l in range(d):
        jp = vm.prev_sites[l]
        cols = np.array([vm.eps(0, l, i) for i in range(z + 1)])
        rows.append(LinearRow(f"draw_d{l + 1}_b{slot_b}", cols,
                              costs.trans_cost[jp].copy(), "<=", vm.batteries_j[l],
                              ("draw", 0, l, 0)))
    for l in range(d):
        jp = vm.prev_sites[l]
        harv = harvest_matrix(scenario, costs, float(vm.phi[0][l, 0]))
        cols = np.array([vm.eps(0, l, i) for i in range(z + 1)])
        rows.append(LinearRow(f"store_d{l + 1}_b{slot_b}", cols,
                              harv[jp].copy(), "<=", cap_j - vm.batteries_j[l],
                              ("store", 0, l, 0)))
    for l in range(d):
        cols = np.array([vm.eps(0, l, i) for i in range(z + 1)])
        rows.append(LinearRow(f"onehot_d{l + 1}_b{slot_b}", cols,
                              np.ones(z + 1), "==", 1.0, ("onehot", 0, l, 0)))
    for i in range(1, z + 1):
        cols = np.array([vm.eps(0, l, i) for l in range(d)])
        rows.append(LinearRow(f"excl_i{i}_b{slot_b}", cols, np.ones(d), "<=", 1.0,
                              ("excl", 0, i, 0)))
    rows.append(_capacity_row(scenario, vm, costs, 0, 0, slot_b))

    bilp = Bilp(cost, costs.const_j, tuple(rows), vm.var_names())
    return bilp, vm


def _capacity_row(scenario, vm, costs, b, w, slot) -> LinearRow:
    cols, vals = [], []
    for k in range(vm.m_count):
        cols.append(vm.pi(b, k))
        vals.append(-costs.mbs_loads[k])
    for l in range(vm.d_count):
        for i in range(1, vm.z_count + 1):
            cols.append(vm.eps(b, l, i, w))
            vals.append(-costs.site_loads[i])
    prefix = f"w{w + 1}_" if vm.w_count > 1 else ""
    rhs = scenario.topology.macro_max_users - scenario.users.users(slot)
    return LinearRow(f"{prefix}cap_b{slot}", np.array(cols, dtype=int),
                     np.array(vals), "<=", rhs, ("cap", w, b))


def build_perfect(scenario: Scenario, phi, fixed_mbs=None) -> tuple[Bilp, VarMap]:
    """Full-horizon program with a known received-power matrix ``phi``.

    ``fixed_mbs`` optionally pins the MBS bits (used for second-stage
    recourse); it appends equality rows without touching the base layout.
    """
    phi = np.asarray(phi, dtype=float)
    return _build_horizon(scenario, [TreeScenario(phi, 1.0)], fixed_mbs)


def build_partial(scenario: Scenario, tree: list[TreeScenario],
                  fixed_mbs=None) -> tuple[Bilp, VarMap]:
    """Two-stage program: shared MBS bits, per-scenario placements.

    A one-scenario tree degenerates to the perfect-knowledge program.
    """
    total = sum(s.prob for s in tree)
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"tree probabilities sum to {total!r}")
    return _build_horizon(scenario, list(tree), fixed_mbs)


def _build_horizon(scenario, tree, fixed_mbs):
    m, d = scenario.topology.m_count, scenario.drone_count
    z = scenario.topology.z_count
    b_count = scenario.horizon
    n_w = len(tree)
    n_sites = z + 1
    by_slot = [slot_costs(scenario, b + 1) for b in range(b_count)]
    cap_j = scenario.params.battery_capacity_j
    vm = VarMap("perfect" if n_w == 1 else "partial", m, d, z, b_count,
                w_count=n_w, slot0=1,
                prev_sites=(0,) * d,
                batteries_j=tuple(scenario.initial_batteries_j),
                phi=tuple(np.asarray(s.phi_w, dtype=float) for s in tree),
                probs=tuple(float(s.prob) for s in tree),
                has_zeta=True,
                capacity_j=cap_j,
                trans_cost=tuple(c.trans_cost for c in by_slot),
                charge_part=tuple(c.charge_part for c in by_slot),
                harvest_scale=scenario.params.harvest_eff * scenario.params.slot_s)

    cost = np.zeros(vm.n_vars)
    offset = 0.0
    for b, costs in enumerate(by_slot):
        offset += costs.const_j
        for k in range(m):
            cost[vm.pi(b, k)] = costs.pi_cost[k]
        for w in range(n_w):
            prob = vm.probs[w]
            for l in range(d):
                for i in range(n_sites):
                    cost[vm.eps(b, l, i, w)] = prob * costs.eps_offload[i]
                for j in range(n_sites):
                    for i in range(n_sites):
                        cost[vm.zeta(b, l, j, i, w)] = prob * costs.trans_cost[j, i]

    rows = []
    for w in range(n_w):
        prefix = f"w{w + 1}_" if n_w > 1 else ""
        harv = [
            [harvest_matrix(scenario, by_slot[b], float(vm.phi[w][l, b]))
             for b in range(b_count)]
            for l in range(d)
        ]
        zeta_cols = {
            (b, l): np.array([vm.zeta(b, l, j, i, w)
                              for j in range(n_sites) for i in range(n_sites)])
            for b in range(b_count) for l in range(d)
        }
        for l in range(d):
            for b in range(b_count):
                cols, vals = [], []
                for t in range(b + 1):
                    coef = by_slot[t].trans_cost.ravel()
                    if t < b:
                        coef = coef - harv[l][t].ravel()
                    cols.append(zeta_cols[(t, l)])
                    vals.append(coef)
                rows.append(LinearRow(
                    f"{prefix}draw_d{l + 1}_b{b + 1}", np.concatenate(cols),
                    np.concatenate(vals), "<=", vm.batteries_j[l],
                    ("draw", w, l, b)))
        for l in range(d):
            for b in range(b_count):
                cols, vals = [], []
                for t in range(b + 1):
                    coef = harv[l][t].ravel()
                    if t < b:
                        coef = coef - by_slot[t].trans_cost.ravel()
                    cols.append(zeta_cols[(t, l)])
                    vals.append(coef)
                rows.append(LinearRow(
                    f"{prefix}store_d{l + 1}_b{b + 1}", np.concatenate(cols),
                    np.concatenate(vals), "<=", cap_j - vm.batteries_j[l],
                    ("store", w, l, b)))
        for l in range(d):
            for b in range(b_count):
                cols = np.array([vm.eps(b, l, i, w) for i in range(n_sites)])
                rows.append(LinearRow(f"{prefix}onehot_d{l + 1}_b{b + 1}",
                                      cols, np.ones(n_sites), "==", 1.0,
                                      ("onehot", w, l, b)))
        for i in range(1, n_sites):
            for b in range(b_count):
                cols = np.array([vm.eps(b, l, i, w) for l in range(d)])
                rows.append(LinearRow(f"{prefix}excl_i{i}_b{b + 1}",
                                      cols, np.ones(d), "<=", 1.0,
                                      ("excl", w, i, b)))
        for b in range(b_count):
            rows.append(_capacity_row(scenario, vm, by_slot[b], b, w, b + 1))
        rows.extend(_linearization_rows(vm, w))

    if fixed_mbs is not None:
        fixed_mbs = np.asarray(fixed_mbs)
        for b in range(b_count):
            for k in range(m):
                rows.append(LinearRow(
                    f"fix_pi_{b + 1}_{k + 1}", np.array([vm.pi(b, k)]),
                    np.ones(1), "==", float(fixed_mbs[b, k]), ("fix", b, k)))

    bilp = Bilp(cost, offset, tuple(rows), vm.var_names())
    return bilp, vm


def _linearization_rows(vm: VarMap, w: int) -> list[LinearRow]:
    """Product-consistency triplets; slot 1 anchors to the initial placement."""
    rows = []
    n_sites = vm.sites
    prefix = f"w{w + 1}_" if vm.w_count > 1 else ""
    for b in range(vm.b_eff):
        for l in range(vm.d_count):
            init = vm.prev_sites[l]
            for j in range(n_sites):
                for i in range(n_sites):
                    zc = vm.zeta(b, l, j, i, w)
                    ec = vm.eps(b, l, i, w)
                    stem = f"{prefix}lin_d{l + 1}_b{b + 1}_{j}_{i}"
                    rows.append(LinearRow(
                        f"{stem}_cur", np.array([zc, ec]),
                        np.array([1.0, -1.0]), "<=", 0.0,
                        ("lin", w, l, b, j, i, 0)))
                    if b == 0:
                        prev_val = 1.0 if j == init else 0.0
                        rows.append(LinearRow(
                            f"{stem}_prev", np.array([zc]), np.ones(1),
                            "<=", prev_val, ("lin", w, l, b, j, i, 1)))
                        rows.append(LinearRow(
                            f"{stem}_and", np.array([zc, ec]),
                            np.array([-1.0, 1.0]), "<=", 1.0 - prev_val,
                            ("lin", w, l, b, j, i, 2)))
                    else:
                        ep = vm.eps(b - 1, l, j, w)
                        rows.append(LinearRow(
                            f"{stem}_prev", np.array([zc, ep]),
                            np.array([1.0, -1.0]), "<=", 0.0,
                            ("lin", w, l, b, j, i, 1)))
                        rows.append(LinearRow(
                            f"{stem}_and", np.array([zc, ep, ec]),
                            np.array([-1.0, 1.0, 1.0]), "<=", 1.0,
                            ("lin", w, l, b, j, i, 2)))
    return rows


# ---------------------------------------------------------------------------
# decoding


@dataclass(frozen=True)
class Schedule:
    """Decoded, re-validated decisions with the recomputed energy ledger."""

    slots: tuple[int, ...]            # absolute 1-based slot numbers
    mbs_on: np.ndarray                # (B_eff, M) bool
    sites: np.ndarray                 # (B_eff, D) int
    start_sites: tuple[int, ...]
    batteries_j: np.ndarray           # (B_eff + 1, D), start plus slot ends
    drone_rows: tuple                 # per slot: tuple of SlotEnergy per drone
    macro_j: np.ndarray
    mbs_j: np.ndarray
    drones_j: np.ndarray
    total_j: float

    def transitions(self, b: int) -> list[tuple[int, int]]:
        prev = self.start_sites if b == 0 else self.sites[b - 1]
        return list(zip(prev, self.sites[b]))


def decode(bits, vm: VarMap, scenario: Scenario, bilp: Bilp = None,
           which: int = 0) -> Schedule:
    """Turn solver bits into a Schedule, re-validating every invariant.

    Raises InconsistentSolution when the bits violate placement one-hot,
    site exclusivity, transition-product consistency, or battery bounds.
    When ``bilp`` is given, the energy ledger recomputed here must match
    the program objective to a relative 1e-6, else the same error is
    raised (solver bug trap).  For multi-scenario programs the schedule of
    scenario ``which`` is returned; the objective check covers all of them.
    """
    bits = np.asarray(bits)
    if bits.size != vm.n_vars:
        raise InconsistentSolution(f"expected {vm.n_vars} bits, got {bits.size}")
    if not np.all((bits == 0) | (bits == 1)):
        raise InconsistentSolution("solution vector is not binary")

    schedules = [_decode_one(bits, vm, scenario, w) for w in range(vm.w_count)]
    if bilp is not None:
        expected = sum(p * s.total_j for p, s in zip(vm.probs, schedules))
        obj = bilp.objective(bits)
        if abs(obj - expected) > 1e-6 * max(1.0, abs(obj)):
            raise InconsistentSolution(
                f"objective {obj:.6f} J disagrees with recomputed ledger "
                f"{expected:.6f} J")
    return schedules[which]


def _decode_one(bits, vm: VarMap, scenario: Scenario, w: int) -> Schedule:
    d, z, m = vm.d_count, vm.z_count, vm.m_count
    n_sites = z + 1
    mbs_on = np.zeros((vm.b_eff, m), dtype=bool)
    sites = np.zeros((vm.b_eff, d), dtype=int)
    for b in range(vm.b_eff):
        for k in range(m):
            mbs_on[b, k] = bits[vm.pi(b, k)] == 1
        for l in range(d):
            chosen = [i for i in range(n_sites) if bits[vm.eps(b, l, i, w)] == 1]
            if len(chosen) != 1:
                raise InconsistentSolution(
                    f"drone {l + 1} occupies {len(chosen)} sites in slot {b + vm.slot0}")
            sites[b, l] = chosen[0]
        for i in range(1, n_sites):
            if int((sites[b] == i).sum()) > 1:
                raise InconsistentSolution(
                    f"site {i} hosts multiple drones in slot {b + vm.slot0}")
    if vm.has_zeta:
        prev = np.array(vm.prev_sites)
        for b in range(vm.b_eff):
            for l in range(d):
                for j in range(n_sites):
                    for i in range(n_sites):
                        want = 1 if (prev[l] == j and sites[b, l] == i) else 0
                        if bits[vm.zeta(b, l, j, i, w)] != want:
                            raise InconsistentSolution(
                                f"transition bit ({j}->{i}) of drone {l + 1} slot "
                                f"{b + vm.slot0} disagrees with placements")
            prev = sites[b]

    batteries = np.zeros((vm.b_eff + 1, d))
    batteries[0] = vm.batteries_j
    macro_j = np.zeros(vm.b_eff)
    mbs_j = np.zeros(vm.b_eff)
    drones_j = np.zeros(vm.b_eff)
    drone_rows = []
    prev = np.array(vm.prev_sites)
    cap = scenario.params.battery_capacity_j
    for b in range(vm.b_eff):
        slot = vm.slot0 + b
        net = energy.network_slot_energy(scenario, slot, mbs_on[b], sites[b],
                                         prev, vm.phi[w][:, b])
        macro_j[b], mbs_j[b], drones_j[b] = net.macro_j, net.mbs_j, net.drones_j
        drone_rows.append(net.drone_slots)
        for l, row in enumerate(net.drone_slots):
            try:
                nxt = energy.battery_step(energy.Battery(batteries[b, l], cap), row)
            except (BatteryUnderflow, BatteryOverflow) as exc:
                raise InconsistentSolution(
                    f"drone {l + 1} slot {slot}: {exc}") from exc
            batteries[b + 1, l] = nxt.level_j
        prev = sites[b]

    total = float(macro_j.sum() + mbs_j.sum() + drones_j.sum())
    return Schedule(tuple(range(vm.slot0, vm.slot0 + vm.b_eff)), mbs_on, sites,
                    vm.prev_sites, batteries, tuple(drone_rows),
                    macro_j, mbs_j, drones_j, total)
