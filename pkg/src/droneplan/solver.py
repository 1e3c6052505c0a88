"""Exact and heuristic solvers for the binary linear programs.

* :func:`brute_force` enumerates every bit-vector (test oracle, n <= 25).
* :func:`solve_lp` relaxes the binaries to [0, 1], keeps the one-hot rows
  explicit, dualizes everything else, and drives the multipliers with a
  diminishing-step subgradient ascent.  It always returns a valid lower
  bound on the binary optimum.
* :func:`branch_and_bound` is a best-first exact search.  Its node bound
  is the larger of the subgradient dual bound and a per-drone
  min-cost-path bound that honors the one-hot/transition structure.
* :func:`relaxed_heuristic` rounds the relaxed point group-wise and
  repairs battery violations by rerouting the offending drones to the
  charging station.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import RepairFailed, TooLarge
from .problems import Bilp, VarMap

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
CAP_EXCEEDED = "cap_exceeded"

ROW_TOL = 1e-9          # absolute feasibility tolerance on row residuals
PRUNE_TOL = 1e-9        # prune nodes with bound >= incumbent - PRUNE_TOL
BRUTE_FORCE_CAP = 25


@dataclass(frozen=True)
class SolveReport:
    status: str
    objective_j: float | None
    bits: np.ndarray | None
    gap: float = 0.0
    nodes: int = 0
    wall_time_s: float = 0.0
    dual_bound_j: float | None = None


@dataclass
class LpState:
    """Result of the subgradient relaxation."""

    x: np.ndarray               # ergodic primal point in [0, 1]^n
    lambdas: np.ndarray         # multipliers of the dualized rows
    step0: float
    iterations: int
    dual_bound: float


# ---------------------------------------------------------------------------
# brute force oracle


def brute_force(p: Bilp) -> SolveReport:
    """Exhaustive enumeration; ties break to the lexicographically
    smallest bit-vector."""
    n = p.n
    if n > BRUTE_FORCE_CAP:
        raise TooLarge(f"{n} binaries exceed the enumeration cap {BRUTE_FORCE_CAP}")
    start = time.perf_counter()
    a, senses, rhs = p.to_matrix()
    a = a.toarray()
    is_eq = senses == "=="
    shifts = np.arange(n - 1, -1, -1)
    best_obj = None
    best_bits = None
    chunk = 1 << 16
    for lo in range(0, 1 << n, chunk):
        hi = min(lo + chunk, 1 << n)
        idx = np.arange(lo, hi, dtype=np.int64)
        x = ((idx[:, None] >> shifts) & 1).astype(float)
        lhs = x @ a.T
        ok = np.ones(hi - lo, dtype=bool)
        if a.shape[0]:
            ok &= np.all(lhs[:, ~is_eq] <= rhs[~is_eq] + ROW_TOL, axis=1)
            ok &= np.all(np.abs(lhs[:, is_eq] - rhs[is_eq]) <= ROW_TOL, axis=1)
        if not ok.any():
            continue
        obj = x[ok] @ p.cost
        pos = int(np.argmin(obj))
        cand = float(obj[pos])
        if best_obj is None or cand < best_obj:
            best_obj = cand
            best_bits = x[ok][pos].astype(np.int8)
    wall = time.perf_counter() - start
    if best_obj is None:
        return SolveReport(INFEASIBLE, None, None, wall_time_s=wall)
    return SolveReport(OPTIMAL, best_obj + p.offset_j, best_bits,
                       wall_time_s=wall, dual_bound_j=best_obj + p.offset_j)


# ---------------------------------------------------------------------------
# Lagrangian relaxation


@dataclass
class _Structure:
    """Cached decomposition of a Bilp for the subgradient solver."""

    groups: list[np.ndarray]          # disjoint one-hot index groups
    in_group: np.ndarray              # bool per variable
    a_dual: sp.csr_matrix             # normalized dualized rows
    rhs_dual: np.ndarray
    eq_dual: np.ndarray               # bool: dualized row is an equality
    a_dual_t: sp.csr_matrix


def _decompose(p: Bilp) -> _Structure:
    groups = []
    in_group = np.zeros(p.n, dtype=bool)
    group_rows = set()
    for r, row in enumerate(p.rows):
        if (row.sense == "==" and row.rhs == 1.0 and np.all(row.vals == 1.0)
                and not in_group[row.cols].any()):
            groups.append(row.cols.copy())
            in_group[row.cols] = True
            group_rows.add(r)
    data, indices, indptr, rhs, eq = [], [], [0], [], []
    for r, row in enumerate(p.rows):
        if r in group_rows:
            continue
        flip = -1.0 if row.sense == ">=" else 1.0
        norm = float(np.linalg.norm(row.vals)) or 1.0
        data.append(flip * row.vals / norm)
        indices.append(row.cols)
        indptr.append(indptr[-1] + row.cols.size)
        rhs.append(flip * row.rhs / norm)
        eq.append(row.sense == "==")
    if data:
        a = sp.csr_matrix((np.concatenate(data), np.concatenate(indices),
                           np.array(indptr)), shape=(len(rhs), p.n))
    else:
        a = sp.csr_matrix((0, p.n))
    return _Structure(groups, in_group, a, np.array(rhs), np.array(eq, dtype=bool),
                      a.T.tocsr())


def _subproblem(cost_eff, st: _Structure, fixed) -> tuple[float, np.ndarray] | None:
    """Minimize ``cost_eff . x`` over the box plus one-hot groups.

    ``fixed`` holds -1 for free variables, else the pinned bit.  Returns
    ``None`` when a group has no admissible member.
    """
    x = np.where(fixed == 1, 1.0, 0.0)
    free = fixed < 0
    value = float(cost_eff[fixed == 1].sum())
    take = free & ~st.in_group & (cost_eff < 0.0)
    x[take] = 1.0
    value += float(cost_eff[take].sum())
    for grp in st.groups:
        sub_fixed = fixed[grp]
        if (sub_fixed == 1).any():
            continue  # already counted through the fixed mass
        open_members = grp[sub_fixed < 0]
        if open_members.size == 0:
            return None
        local = cost_eff[open_members]
        pick = open_members[int(np.argmin(local))]
        x[pick] = 1.0
        value += float(local.min())
    return value, x


def solve_lp(p: Bilp, fixed=None, lam0=None, max_iter: int = 5000,
             patience: int = 50, tol: float = 1e-6,
             structure: _Structure = None) -> LpState:
    """Subgradient ascent on the Lagrangian dual of the relaxed program.

    Stops when the best dual bound improves by less than ``tol`` relative
    over ``patience`` iterations, or at ``max_iter``.  The returned bound
    never exceeds the binary optimum; ``x`` is the step-weighted average
    of the subproblem minimizers, a fractional point suitable for
    rounding.
    """
    st = structure if structure is not None else _decompose(p)
    if fixed is None:
        fixed = np.full(p.n, -1, dtype=np.int8)
    n_dual = st.rhs_dual.size
    lam = np.zeros(n_dual) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    best = -np.inf
    x_sum = np.zeros(p.n)
    w_sum = 0.0
    last_gain = 0
    step0 = 1.0
    r = 0
    for r in range(1, max_iter + 1):
        cost_eff = p.cost + (st.a_dual_t @ lam if n_dual else 0.0)
        sub = _subproblem(cost_eff, st, fixed)
        if sub is None:
            return LpState(np.zeros(p.n), lam, step0, r, np.inf)
        value, x = sub
        bound = value - float(lam @ st.rhs_dual) if n_dual else value
        if bound > best + tol * max(1.0, abs(best)):
            best = max(best, bound)
            last_gain = r
        else:
            best = max(best, bound)
        step = step0 / np.sqrt(r)
        x_sum += step * x
        w_sum += step
        if n_dual == 0:
            break
        slack = st.a_dual @ x - st.rhs_dual
        if np.max(np.abs(slack)) < 1e-12:
            break
        lam += step * slack
        np.maximum(lam, 0.0, out=lam, where=~st.eq_dual)
        if r - last_gain >= patience:
            break
    x_avg = x_sum / w_sum if w_sum else x_sum
    np.clip(x_avg, 0.0, 1.0, out=x_avg)
    x_avg[fixed == 0] = 0.0
    x_avg[fixed == 1] = 1.0
    return LpState(x_avg, lam, step0, r, best + p.offset_j)


# ---------------------------------------------------------------------------
# structural path bound


def _drone_slices(p: Bilp, vm: VarMap):
    """Objective coefficient views per (scenario, drone): eps (B, S) and
    zeta (B, S, S)."""
    s = vm.sites
    out = []
    for w in range(vm.w_count):
        per_l = []
        for l in range(vm.d_count):
            eps = np.empty((vm.b_eff, s))
            zeta = np.empty((vm.b_eff, s, s)) if vm.has_zeta else None
            for b in range(vm.b_eff):
                e0 = vm.eps(b, l, 0, w)
                eps[b] = p.cost[e0:e0 + s]
                if vm.has_zeta:
                    z0 = vm.zeta(b, l, 0, 0, w)
                    zeta[b] = p.cost[z0:z0 + s * s].reshape(s, s)
            per_l.append((eps, zeta))
        out.append(per_l)
    return out


def structural_bound(p: Bilp, vm: VarMap, fixed, slices) -> float:
    """Lower bound from independent MBS sign picks plus per-drone
    battery-feasible min-cost site paths consistent with the node fixings.

    Only the inter-drone coupling rows (site exclusivity, macro capacity)
    are relaxed, so the bound is exact whenever those are slack; an
    infinite value proves node infeasibility.
    """
    total = p.offset_j
    for b in range(vm.b_eff):
        for k in range(vm.m_count):
            idx = vm.pi(b, k)
            c = p.cost[idx]
            total += c * fixed[idx] if fixed[idx] >= 0 else min(0.0, c)
    for w in range(vm.w_count):
        for l in range(vm.d_count):
            best = _drone_path_cost(p, vm, fixed, slices, w, l)
            if best == np.inf:
                return np.inf
            total += best
    return total


def _drone_path_cost(p: Bilp, vm: VarMap, fixed, slices, w: int, l: int) -> float:
    """Min objective share of one drone over battery-feasible site paths.

    Label-setting over (slot, site) with Pareto dominance on
    (cost down, stored energy up); the draw and storage constraints are
    enforced transition by transition.
    """
    s = vm.sites
    eps_c, zeta_c = slices[w][l]
    cap = vm.capacity_j
    hscale = vm.harvest_scale
    # labels per site: list of (cost, battery at slot start), Pareto-pruned
    labels: list[list[tuple[float, float]]] = [[] for _ in range(s)]
    labels[vm.prev_sites[l]].append((0.0, float(vm.batteries_j[l])))
    for b in range(vm.b_eff):
        idx0 = vm.eps(b, l, 0, w)
        fx = fixed[idx0:idx0 + s]
        cost_tab = vm.trans_cost[b]
        harv_row = hscale * float(vm.phi[w][l, b])
        charge_tab = vm.charge_part[b]
        nxt: list[list[tuple[float, float]]] = [[] for _ in range(s)]
        for j in range(s):
            if not labels[j]:
                continue
            for i in range(s):
                if fx[i] == 0:
                    continue
                e_need = cost_tab[j, i]
                gain = harv_row + charge_tab[j, i]
                obj = (zeta_c[b][j, i] if vm.has_zeta else 0.0) + eps_c[b][i]
                bucket = nxt[i]
                for c_old, level in labels[j]:
                    if e_need > level + 1e-9 or level + gain > cap + 1e-9:
                        continue
                    bucket.append((c_old + obj, level + gain - e_need))
        if (fx == 1).any():
            keep = int(np.argmax(fx == 1))
            for i in range(s):
                if i != keep:
                    nxt[i] = []
        any_label = False
        for i in range(s):
            nxt[i] = _pareto(nxt[i])
            any_label = any_label or bool(nxt[i])
        if not any_label:
            return np.inf
        labels = nxt
    return min(c for bucket in labels for c, _ in bucket)


def _pareto(bucket: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Keep labels not dominated in (cost, battery); sorted by cost."""
    if len(bucket) <= 1:
        return bucket
    bucket.sort(key=lambda cb: (cb[0], -cb[1]))
    kept = []
    best_level = -np.inf
    for cost, level in bucket:
        if level > best_level + 1e-12:
            kept.append((cost, level))
            best_level = level
    return kept


# ---------------------------------------------------------------------------
# rounding and repair


def round_and_repair(x_frac, p: Bilp, vm: VarMap, max_rounds: int = None):
    """One-hot-preserving rounding of a fractional point plus feasibility
    repair.  Returns a feasible bit-vector or raises RepairFailed.

    Placements round group-wise to the largest fractional site still
    available; MBS bits round at one half and then obey any pin rows;
    transition bits are recomputed as exact placement products.  Battery
    violations send the offending drone to the charging station for the
    offending slot; capacity violations switch on further MBSs in
    fractional-value order.
    """
    x_frac = np.asarray(x_frac, dtype=float)
    s = vm.sites
    pi = np.zeros((vm.b_eff, vm.m_count), dtype=np.int8)
    for b in range(vm.b_eff):
        for k in range(vm.m_count):
            pi[b, k] = 1 if x_frac[vm.pi(b, k)] >= 0.5 else 0
    for row in p.rows:
        if row.tag and row.tag[0] == "fix":
            _, b, k = row.tag
            pi[b, k] = int(row.rhs)

    sites = np.zeros((vm.w_count, vm.b_eff, vm.d_count), dtype=int)
    for w in range(vm.w_count):
        for b in range(vm.b_eff):
            taken = set()
            for l in range(vm.d_count):
                idx0 = vm.eps(b, l, 0, w)
                vals = x_frac[idx0:idx0 + s]
                order = np.lexsort((np.arange(s), -vals))
                pick = 0
                for i in order:
                    if i == 0 or i not in taken:
                        pick = int(i)
                        break
                sites[w, b, l] = pick
                if pick != 0:
                    taken.add(pick)

    if max_rounds is None:
        max_rounds = vm.w_count * vm.d_count * vm.b_eff * 2 + vm.b_eff * vm.m_count + 8
    station_tries: dict[tuple, int] = {}
    for _ in range(max_rounds):
        bits = _assemble_bits(pi, sites, vm)
        viol = p.violations(bits)
        bad_idx = np.flatnonzero(viol > ROW_TOL)
        if bad_idx.size == 0:
            return bits
        bad = [p.rows[r] for r in bad_idx]
        battery = [row for row in bad if row.tag and row.tag[0] in ("draw", "store")]
        if battery:
            _, w, l, b = battery[0].tag
            key = (w, l, b)
            tries = station_tries.get(key, 0)
            station_tries[key] = tries + 1
            if tries == 0 and sites[w, b, l] != 0:
                sites[w, b, l] = 0
                continue
            if tries == 1:
                # already at the station: storage cap forces the drone out
                moved = _move_to_best_free_site(x_frac, sites, vm, w, b, l)
                if moved:
                    continue
            raise RepairFailed(
                f"no battery-feasible placement for drone {l + 1}, slot "
                f"{vm.slot0 + b}, scenario {w + 1}")
        cap = [row for row in bad if row.tag and row.tag[0] == "cap"]
        if cap:
            _, w, b = cap[0].tag
            off = [k for k in range(vm.m_count) if pi[b, k] == 0]
            if not off:
                raise RepairFailed(
                    f"capacity still violated in slot {vm.slot0 + b} with every MBS on")
            off.sort(key=lambda k: (-x_frac[vm.pi(b, k)], k))
            pi[b, off[0]] = 1
            continue
        raise RepairFailed(f"cannot repair violated row {bad[0].name}")
    raise RepairFailed("repair loop exceeded its round budget")


def _move_to_best_free_site(x_frac, sites, vm, w, b, l) -> bool:
    s = vm.sites
    taken = {int(sites[w, b, ll]) for ll in range(vm.d_count) if ll != l}
    idx0 = vm.eps(b, l, 0, w)
    vals = x_frac[idx0:idx0 + s]
    order = np.lexsort((np.arange(s), -vals))
    for i in order:
        i = int(i)
        if i != 0 and i not in taken and i != sites[w, b, l]:
            sites[w, b, l] = i
            return True
    return False


def _assemble_bits(pi, sites, vm: VarMap) -> np.ndarray:
    bits = np.zeros(vm.n_vars, dtype=np.int8)
    for b in range(vm.b_eff):
        for k in range(vm.m_count):
            bits[vm.pi(b, k)] = pi[b, k]
    for w in range(vm.w_count):
        prev = list(vm.prev_sites)
        for b in range(vm.b_eff):
            for l in range(vm.d_count):
                cur = int(sites[w, b, l])
                bits[vm.eps(b, l, cur, w)] = 1
                if vm.has_zeta:
                    bits[vm.zeta(b, l, prev[l], cur, w)] = 1
            prev = [int(sites[w, b, l]) for l in range(vm.d_count)]
    return bits


def relaxed_heuristic(p: Bilp, vm: VarMap, max_iter: int = 5000,
                      patience: int = 50) -> SolveReport:
    """Relax, subgradient-solve, round, repair; reports the gap against
    the dual bound.  Raises RepairFailed when no repair exists."""
    start = time.perf_counter()
    state = solve_lp(p, max_iter=max_iter, patience=patience)
    bits = round_and_repair(state.x, p, vm)
    obj = p.objective(bits)
    gap = (obj - state.dual_bound) / max(1.0, abs(obj))
    return SolveReport(FEASIBLE, obj, bits, gap=max(0.0, gap),
                       wall_time_s=time.perf_counter() - start,
                       dual_bound_j=state.dual_bound)


# ---------------------------------------------------------------------------
# branch and bound


def _propagate(p: Bilp, st: _Structure, fixed) -> bool:
    """Cheap fixed-point propagation; returns False on proven infeasibility."""
    changed = True
    while changed:
        changed = False
        for grp in st.groups:
            vals = fixed[grp]
            ones = grp[vals == 1]
            if ones.size > 1:
                return False
            if ones.size == 1:
                others = grp[(vals != 1) & (vals != 0)]
                if others.size:
                    fixed[others] = 0
                    changed = True
                continue
            free = grp[vals < 0]
            if free.size == 0:
                return False
            if free.size == 1 and (vals == 0).sum() == grp.size - 1:
                fixed[free[0]] = 1
                changed = True
        for row in p.rows:
            if not row.tag or row.tag[0] not in ("excl", "fix"):
                continue
            vals = fixed[row.cols]
            if row.tag[0] == "fix":
                want = int(row.rhs)
                if vals[0] >= 0 and vals[0] != want:
                    return False
                if vals[0] < 0:
                    fixed[row.cols[0]] = want
                    changed = True
                continue
            if (vals == 1).sum() > row.rhs + ROW_TOL:
                return False
            if (vals == 1).sum() == int(row.rhs):
                free_cols = row.cols[vals < 0]
                if free_cols.size:
                    fixed[free_cols] = 0
                    changed = True
    return True


def branch_and_bound(p: Bilp, time_limit_s: float = 300.0,
                     varmap: VarMap = None,
                     node_lp_iters: int = 220,
                     root_lp_iters: int = 1200) -> SolveReport:
    """Best-first exact search with dual/structural bounds.

    Branches on the most fractional placement or status bit (ties to the
    lowest index); equal bounds pop in insertion order, so runs are
    deterministic.  Returns Optimal when the tree is exhausted,
    Feasible(gap) on timeout with an incumbent, CapExceeded on timeout
    without one.
    """
    start = time.perf_counter()
    st = _decompose(p)
    slices = _drone_slices(p, varmap) if varmap is not None else None
    branchable = np.ones(p.n, dtype=bool)
    if varmap is not None and varmap.has_zeta:
        # transition bits are implied by placements; never branch on them
        base = varmap.b_eff * varmap.m_count
        block = varmap.eps_block + varmap.zeta_block
        for w in range(varmap.w_count):
            z0 = base + w * block + varmap.eps_block
            branchable[z0:z0 + varmap.zeta_block] = False

    fixed0 = np.full(p.n, -1, dtype=np.int8)
    if not _propagate(p, st, fixed0):
        return SolveReport(INFEASIBLE, None, None,
                           wall_time_s=time.perf_counter() - start)

    incumbent_obj = np.inf
    incumbent_bits = None
    nodes = 0
    counter = 0
    heap: list = []

    def timed_out() -> bool:
        return time_limit_s is not None and time.perf_counter() - start > time_limit_s

    def node_bound(fixed, lam0, iters, cutoff=np.inf):
        sb = -np.inf
        if slices is not None:
            sb = structural_bound(p, varmap, fixed, slices)
            if sb == np.inf or sb >= cutoff:
                return sb, None, None
        state = solve_lp(p, fixed=fixed, lam0=lam0, max_iter=iters,
                         patience=30, structure=st)
        return max(sb, state.dual_bound), state, state.lambdas.astype(np.float32)

    def try_incumbent(bits):
        nonlocal incumbent_obj, incumbent_bits
        if bits is None or not p.feasible(bits, ROW_TOL):
            return
        obj = p.objective(bits)
        if obj < incumbent_obj:
            incumbent_obj = obj
            incumbent_bits = np.asarray(bits, dtype=np.int8).copy()

    bound0, state0, lam0 = node_bound(fixed0, None, root_lp_iters)
    if bound0 == np.inf:
        return SolveReport(INFEASIBLE, None, None,
                           wall_time_s=time.perf_counter() - start)
    if varmap is not None:
        try:
            try_incumbent(round_and_repair(state0.x, p, varmap))
        except RepairFailed:
            pass
    else:
        try_incumbent(_completion_bits(state0.x, p, varmap, fixed0, st))
    root_dual = bound0
    heapq.heappush(heap, (bound0, counter, fixed0, lam0, state0.x))
    counter += 1

    while heap:
        if timed_out():
            break
        bound, _, fixed, lam, x_frac = heapq.heappop(heap)
        if bound >= incumbent_obj - PRUNE_TOL:
            continue
        nodes += 1
        if nodes % 40 == 0:
            try_incumbent(_completion_bits(x_frac, p, varmap, fixed, st))
        frac = np.abs(np.asarray(x_frac) - 0.5)
        frac[~branchable] = np.inf
        frac[fixed >= 0] = np.inf
        var = int(np.argmin(frac))
        if frac[var] == np.inf:
            # nothing left to branch on: placements fully determined
            try_incumbent(_completion_bits(x_frac, p, varmap, fixed, st))
            continue
        first = 1 if x_frac[var] >= 0.5 else 0
        for value in (first, 1 - first):
            child = fixed.copy()
            child[var] = value
            if not _propagate(p, st, child):
                continue
            if not np.any(child < 0):
                bits = np.where(child == 1, 1, 0).astype(np.int8)
                try_incumbent(bits)
                continue
            cbound, cstate, clam = node_bound(child, lam, node_lp_iters,
                                              cutoff=incumbent_obj - PRUNE_TOL)
            if cstate is None or cbound >= incumbent_obj - PRUNE_TOL:
                continue
            heapq.heappush(heap, (cbound, counter, child, clam, cstate.x))
            counter += 1

    wall = time.perf_counter() - start
    if heap and timed_out():
        if incumbent_bits is None:
            return SolveReport(CAP_EXCEEDED, None, None, nodes=nodes,
                               wall_time_s=wall, dual_bound_j=root_dual)
        lowest = min(min(b for b, *_ in heap), incumbent_obj)
        gap = (incumbent_obj - lowest) / max(1.0, abs(incumbent_obj))
        return SolveReport(FEASIBLE, incumbent_obj, incumbent_bits, gap=gap,
                           nodes=nodes, wall_time_s=wall, dual_bound_j=lowest)
    if incumbent_bits is None:
        return SolveReport(INFEASIBLE, None, None, nodes=nodes, wall_time_s=wall)
    return SolveReport(OPTIMAL, incumbent_obj, incumbent_bits, nodes=nodes,
                       wall_time_s=wall, dual_bound_j=incumbent_obj)


def _completion_bits(x_frac, p: Bilp, vm: VarMap | None, fixed, st: _Structure):
    """Deterministic completion of a node into a candidate bit-vector."""
    if vm is not None:
        x = np.asarray(x_frac, dtype=float).copy()
        x[fixed == 0] = 0.0
        x[fixed == 1] = 1.0
        try:
            return round_and_repair(x, p, vm, max_rounds=vm.d_count * vm.b_eff + 4)
        except RepairFailed:
            return None
    bits = np.where(fixed == 1, 1, 0).astype(np.int8)
    free = fixed < 0
    bits[free & (np.asarray(x_frac) >= 0.5)] = 1
    return bits
