"""Network topology, user demand model, system constants, and scenario ingestion.

All quantities are stored in SI units internally (meters, seconds, Joules,
Watts).  Scenario files may use kJ / minutes via unit-suffixed keys; the
loader converts at ingestion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InfeasibleTrip, ParseError, UnknownCell, ValidationError
from .solar import REProcess

TABULATED_GRID_STEP_M = 5.0


@dataclass(frozen=True)
class GeoPoint:
    """A 3D position: planar coordinates plus altitude, in meters."""

    x_m: float
    y_m: float
    h_m: float = 0.0


@dataclass(frozen=True)
class MicroCell:
    position: GeoPoint
    radius_m: float
    max_users: float


@dataclass(frozen=True)
class Topology:
    """Macro cell, micro cells, and the candidate drone sites.

    ``drone_sites[0]`` is always the charging station at the origin; sites
    1..Z are the serving locations.
    """

    macro_position: GeoPoint
    macro_radius_m: float
    macro_max_users: float
    mbs: tuple[MicroCell, ...]
    drone_sites: tuple[GeoPoint, ...]
    drone_coverage_radius_m: float
    drone_max_users: float

    @property
    def m_count(self) -> int:
        return len(self.mbs)

    @property
    def z_count(self) -> int:
        """Number of serving sites (excludes the charging station)."""
        return len(self.drone_sites) - 1


@dataclass(frozen=True)
class UserModel:
    """Per-slot user totals plus the spatial distribution of users.

    kind:
      * ``uniform``        users uniform over the macro disk
      * ``fixed_per_site`` a fixed fraction of users in every micro cell /
                           drone site footprint (``mbs_fraction`` per MBS,
                           ``site_fraction`` per serving site)
      * ``tabulated``      density sampled on a uniform grid covering the
                           macro bounding square, one grid per slot or one
                           shared grid
    """

    users_per_slot: tuple[float, ...]
    kind: str = "uniform"
    mbs_fraction: float = 0.0
    site_fraction: float = 0.0
    density: np.ndarray | None = field(default=None, compare=False)

    def users(self, b: int) -> float:
        """Total users during 1-based slot ``b``."""
        return self.users_per_slot[b - 1]


@dataclass(frozen=True)
class SystemParams:
    """Radio, power, and drone constants.

    Defaults are the standard operating values used throughout; any field
    can be overridden from the scenario file.
    """

    wavelength_m: float = 0.125
    excess_loss_los_db: float = 1.0
    excess_loss_nlos_db: float = 12.0
    los_curve_a: float = 9.6          # environment constant in the LoS S-curve
    los_curve_b: float = 0.29
    p_min_dbm: float = -70.0
    # linear BS power model: active power = alpha * radiated + beta; idle = gamma
    alpha_macro: float = 4.7
    beta_macro_w: float = 130.0
    gamma_macro_w: float = 130.0      # unused: the macro BS is never idled
    alpha_mbs: float = 2.6
    beta_mbs_w: float = 56.0
    gamma_mbs_w: float = 39.0
    alpha_drone: float = 4.0
    beta_drone_w: float = 6.8
    gamma_drone_w: float = 2.9
    slot_s: float = 600.0
    drone_speed_mps: float = 15.0
    max_speed_mps: float = 15.0
    mass_kg: float = 0.75
    gravity_mps2: float = 9.81
    air_density_kgm3: float = 1.225
    rotor_radius_m: float = 0.2
    rotor_count: int = 4
    hw_idle_w: float = 0.5            # hardware draw when static
    hw_full_w: float = 5.0            # hardware draw at max speed
    charge_power_w: float = 10.0
    harvest_eff: float = 0.6
    battery_capacity_j: float = 10_000.0


@dataclass(frozen=True)
class Scenario:
    """A fully validated problem instance, immutable after load.

    Derived coverage tables are precomputed at construction; instances are
    safe to share across concurrent solver / simulator workers.
    """

    topology: Topology
    users: UserModel
    params: SystemParams
    horizon: int
    drone_count: int
    initial_batteries_j: tuple[float, ...]
    re: REProcess
    warnings: tuple[str, ...] = ()
    defaulted: tuple[str, ...] = ()
    # derived tables, filled in __post_init__
    site_distance_m: np.ndarray = field(init=False, compare=False, repr=False)
    mass_site: np.ndarray = field(init=False, compare=False, repr=False)
    mass_mbs: np.ndarray = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _validate_scenario(self)
        sites = self.topology.drone_sites
        n = len(sites)
        dist = np.zeros((n, n))
        for j in range(n):
            for i in range(j + 1, n):
                dist[j, i] = dist[i, j] = distance(sites[j], sites[i])
        object.__setattr__(self, "site_distance_m", dist)
        ms, mm = _coverage_masses(self.topology, self.users)
        object.__setattr__(self, "mass_site", ms)
        object.__setattr__(self, "mass_mbs", mm)
        fresh = [w for w in _late_warnings(self) if w not in self.warnings]
        object.__setattr__(self, "warnings", self.warnings + tuple(fresh))

    # -- geometry ---------------------------------------------------------

    def flight_time_s(self, j: int, i: int) -> float:
        """Trip duration between sites ``j`` and ``i`` at the cruise speed.

        Raises InfeasibleTrip when the trip does not fit within one slot
        (the pair is unusable for a single-slot transition).
        """
        t = travel_time_s(self.site_distance_m[j, i], self.params.drone_speed_mps)
        if t >= self.params.slot_s:
            raise InfeasibleTrip(
                f"trip {j}->{i} takes {t:.1f} s >= slot length {self.params.slot_s:.1f} s")
        return t

    def trip_fits(self, j: int, i: int) -> bool:
        d = self.site_distance_m[j, i]
        return d / self.params.drone_speed_mps < self.params.slot_s

    # -- demand -----------------------------------------------------------

    def site_load(self, b: int, i: int) -> float:
        """Users served by a drone at site ``i`` during slot ``b`` (capped)."""
        if i == 0:
            return 0.0
        kind = self.users.kind
        mass = self.mass_site[i] if kind != "tabulated" else self._tab_mass_site(b)[i]
        return min(self.users.users(b) * mass, self.topology.drone_max_users)

    def mbs_load(self, b: int, k: int) -> float:
        """Users served by active MBS ``k`` during slot ``b`` (capped)."""
        kind = self.users.kind
        mass = self.mass_mbs[k] if kind != "tabulated" else self._tab_mass_mbs(b)[k]
        return min(self.users.users(b) * mass, self.topology.mbs[k].max_users)

    def site_loads(self, b: int) -> np.ndarray:
        return np.array([self.site_load(b, i) for i in range(self.topology.z_count + 1)])

    def mbs_loads(self, b: int) -> np.ndarray:
        return np.array([self.mbs_load(b, k) for k in range(self.topology.m_count)])

    def _tab_mass_site(self, b: int) -> np.ndarray:
        return self.mass_site[min(b - 1, self.mass_site.shape[0] - 1)]

    def _tab_mass_mbs(self, b: int) -> np.ndarray:
        return self.mass_mbs[min(b - 1, self.mass_mbs.shape[0] - 1)]


def distance(a: GeoPoint, b: GeoPoint) -> float:
    """3D Euclidean distance in meters."""
    return math.sqrt((a.x_m - b.x_m) ** 2 + (a.y_m - b.y_m) ** 2 + (a.h_m - b.h_m) ** 2)


def travel_time_s(distance_m: float, speed_mps: float) -> float:
    if speed_mps <= 0:
        raise ValidationError("speed must be positive")
    return distance_m / speed_mps


def users_served(scenario: Scenario, cell, b: int,
                 mbs_on=None, drone_sites_active=()) -> float:
    """Expected users served by ``cell`` during slot ``b``.

    ``cell`` is ``"macro"``, ``("mbs", k)``, or ``("site", i)``.  The macro
    count depends on the active set: priority goes to micro cells and
    drones, and the leftover (clamped at zero, capped at the macro
    capacity) stays on the macro BS.  Users inside both an MBS cell and a
    drone-site footprint are attributed to the site footprint.
    """
    if cell == "macro":
        off = 0.0
        if mbs_on is not None:
            off += sum(scenario.mbs_load(b, k)
                       for k in range(scenario.topology.m_count) if mbs_on[k])
        off += sum(scenario.site_load(b, i) for i in drone_sites_active if i != 0)
        rest = scenario.users.users(b) - off
        return max(0.0, min(rest, scenario.topology.macro_max_users))
    tag, idx = cell
    if tag == "mbs":
        if not 0 <= idx < scenario.topology.m_count:
            raise UnknownCell(f"no MBS {idx}")
        return scenario.mbs_load(b, idx)
    if tag == "site":
        if not 0 <= idx <= scenario.topology.z_count:
            raise UnknownCell(f"no drone site {idx}")
        return scenario.site_load(b, idx)
    raise UnknownCell(f"unknown cell {cell!r}")


# ---------------------------------------------------------------------------
# coverage masses


def disk_overlap_area(c1: GeoPoint, r1: float, c2: GeoPoint, r2: float) -> float:
    """Planar intersection area of two disks (altitudes ignored)."""
    d = math.hypot(c1.x_m - c2.x_m, c1.y_m - c2.y_m)
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        r = min(r1, r2)
        return math.pi * r * r
    a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    tri = 0.5 * math.sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    return a1 + a2 - tri


def _coverage_masses(top: Topology, users: UserModel):
    """Probability mass of every serving footprint under the user pdf.

    Returns ``(mass_site, mass_mbs)``.  For the tabulated kind both are
    2D with a leading per-slot axis.  MBS masses exclude the drone-site
    footprints they overlap, so the per-cell loads stay independent of
    drone placement.
    """
    z = top.z_count
    m = top.m_count
    if users.kind == "fixed_per_site":
        mass_site = np.zeros(z + 1)
        mass_site[1:] = users.site_fraction
        mass_mbs = np.full(m, users.mbs_fraction)
        return mass_site, mass_mbs
    if users.kind == "uniform":
        macro_area = math.pi * top.macro_radius_m ** 2
        mass_site = np.zeros(z + 1)
        for i in range(1, z + 1):
            mass_site[i] = disk_overlap_area(
                top.macro_position, top.macro_radius_m,
                top.drone_sites[i], top.drone_coverage_radius_m) / macro_area
        mass_mbs = np.zeros(m)
        for k, cell in enumerate(top.mbs):
            inside = disk_overlap_area(top.macro_position, top.macro_radius_m,
                                       cell.position, cell.radius_m)
            carved = sum(disk_overlap_area(cell.position, cell.radius_m,
                                           top.drone_sites[i], top.drone_coverage_radius_m)
                         for i in range(1, z + 1))
            mass_mbs[k] = max(0.0, (inside - carved) / macro_area)
        return mass_site, mass_mbs
    if users.kind == "tabulated":
        return _tabulated_masses(top, users)
    raise ValidationError(f"unknown user distribution kind {users.kind!r}")


def _tabulated_masses(top: Topology, users: UserModel):
    """Midpoint-rule integration of a tabulated density on a fixed-step grid."""
    density = users.density
    if density.ndim == 2:
        density = density[None, :, :]
    n_slots = density.shape[0]
    r0 = top.macro_radius_m
    step = TABULATED_GRID_STEP_M
    axis = np.arange(-r0 + step / 2, r0, step)
    gx, gy = np.meshgrid(axis, axis, indexing="xy")
    da = step * step
    in_macro = (gx - top.macro_position.x_m) ** 2 + (gy - top.macro_position.y_m) ** 2 \
        <= r0 ** 2
    z = top.z_count
    in_site = np.zeros((z + 1,) + gx.shape, dtype=bool)
    for i in range(1, z + 1):
        s = top.drone_sites[i]
        in_site[i] = (gx - s.x_m) ** 2 + (gy - s.y_m) ** 2 <= top.drone_coverage_radius_m ** 2
    any_site = in_site.any(axis=0)
    mass_site = np.zeros((n_slots, z + 1))
    mass_mbs = np.zeros((n_slots, top.m_count))
    ny, nx = density.shape[1], density.shape[2]
    # map each grid midpoint to the nearest tabulated sample
    iy = np.clip(((gy + r0) / (2 * r0) * ny).astype(int), 0, ny - 1)
    ix = np.clip(((gx + r0) / (2 * r0) * nx).astype(int), 0, nx - 1)
    for s_idx in range(n_slots):
        f = density[s_idx][iy, ix]
        total = float((f * in_macro).sum() * da)
        if abs(total - 1.0) > 1e-6:
            raise ValidationError(
                f"tabulated pdf integrates to {total:.8f} over the macro area, not 1")
        f = f / total
        for i in range(1, z + 1):
            mass_site[s_idx, i] = float((f * (in_site[i] & in_macro)).sum() * da)
        for k, cell in enumerate(top.mbs):
            in_m = (gx - cell.position.x_m) ** 2 + (gy - cell.position.y_m) ** 2 \
                <= cell.radius_m ** 2
            mask = in_m & in_macro & ~any_site
            mass_mbs[s_idx, k] = float((f * mask).sum() * da)
    return mass_site, mass_mbs


# ---------------------------------------------------------------------------
# validation


def _validate_scenario(s: Scenario) -> None:
    top, p = s.topology, s.params
    if s.horizon < 1:
        raise ValidationError("horizon must be at least one slot")
    if s.drone_count < 0:
        raise ValidationError("drone count must be nonnegative")
    if len(s.initial_batteries_j) != s.drone_count:
        raise ValidationError("one initial battery level per drone is required")
    if not top.drone_sites:
        raise ValidationError("drone_sites must include the charging station")
    st = top.drone_sites[0]
    if (st.x_m, st.y_m, st.h_m) != (0.0, 0.0, 0.0):
        raise ValidationError("site 0 must be the charging station at the origin")
    for i, site in enumerate(top.drone_sites):
        if site.h_m < 0:
            raise ValidationError(f"site {i} has negative altitude")
        if math.hypot(site.x_m, site.y_m) > top.macro_radius_m + 1e-9:
            raise ValidationError(f"site {i} lies outside the macro radius")
    for k, cell in enumerate(top.mbs):
        if math.hypot(cell.position.x_m, cell.position.y_m) > top.macro_radius_m + 1e-9:
            raise ValidationError(f"MBS {k} lies outside the macro radius")
    micro_min = min((c.max_users for c in top.mbs), default=top.macro_max_users)
    if not (top.drone_max_users <= micro_min <= top.macro_max_users):
        raise ValidationError("capacities must satisfy drone <= micro <= macro")
    if any(u < 0 for u in s.users.users_per_slot):
        raise ValidationError("per-slot user counts must be nonnegative")
    if len(s.users.users_per_slot) != s.horizon:
        raise ValidationError("users_per_slot length must equal the horizon")
    if s.users.kind == "fixed_per_site":
        total = top.m_count * s.users.mbs_fraction + top.z_count * s.users.site_fraction
        if s.users.mbs_fraction < 0 or s.users.site_fraction < 0 or total > 1 + 1e-12:
            raise ValidationError("fixed_per_site fractions must be nonnegative and sum to <= 1")
    if s.users.kind == "tabulated" and s.users.density is None:
        raise ValidationError("tabulated user model requires a density grid")
    _validate_params(p)
    for level in s.initial_batteries_j:
        if not 0 <= level <= p.battery_capacity_j:
            raise ValidationError("initial battery level outside [0, capacity]")
    if s.re.phi_mean_w.shape != (s.drone_count, s.horizon):
        raise ValidationError("renewable mean matrix must be (drones, horizon)")


def _validate_params(p: SystemParams) -> None:
    positive = [
        ("wavelength_m", p.wavelength_m), ("slot_s", p.slot_s),
        ("drone_speed_mps", p.drone_speed_mps), ("max_speed_mps", p.max_speed_mps),
        ("mass_kg", p.mass_kg), ("gravity_mps2", p.gravity_mps2),
        ("air_density_kgm3", p.air_density_kgm3), ("rotor_radius_m", p.rotor_radius_m),
        ("rotor_count", p.rotor_count), ("battery_capacity_j", p.battery_capacity_j),
    ]
    for name, value in positive:
        if value <= 0:
            raise ValidationError(f"{name} must be strictly positive")
    if p.drone_speed_mps > p.max_speed_mps:
        raise ValidationError("drone_speed_mps exceeds max_speed_mps")
    if not 0 < p.harvest_eff <= 1:
        raise ValidationError("harvest_eff must be in (0, 1]")
    if p.hw_full_w < p.hw_idle_w:
        raise ValidationError("hw_full_w must be >= hw_idle_w")
    # the macro BS is never idled, so its idle draw may equal beta
    for name, alpha, beta, gamma, strict in [
            ("macro", p.alpha_macro, p.beta_macro_w, p.gamma_macro_w, False),
            ("mbs", p.alpha_mbs, p.beta_mbs_w, p.gamma_mbs_w, True),
            ("drone", p.alpha_drone, p.beta_drone_w, p.gamma_drone_w, True)]:
        if alpha < 1:
            raise ValidationError(f"{name} power scale must be >= 1")
        if beta <= 0 or gamma < 0:
            raise ValidationError(f"{name} power profile must have beta > 0, gamma >= 0")
        if strict and beta <= gamma:
            raise ValidationError(f"{name} active offset power must exceed idle power")


def _late_warnings(s: Scenario) -> list[str]:
    from .energy import flying_power_w  # local import to keep the module DAG acyclic

    warnings = []
    p = s.params
    if s.topology.z_count:
        far = float(s.site_distance_m[0, 1:].max())
        if flying_power_w(p) * far / p.drone_speed_mps > p.battery_capacity_j:
            warnings.append(
                "battery capacity cannot cover a return trip from the farthest site")
    n = len(s.topology.drone_sites)
    for j in range(n):
        for i in range(n):
            if not s.trip_fits(j, i):
                warnings.append(f"site pair ({j},{i}) is unreachable within one slot")
    return warnings


# ---------------------------------------------------------------------------
# construction and ingestion

_PARAM_KEYS = {
    "wavelength_m": "wavelength_m",
    "excess_loss_los_db": "excess_loss_los_db",
    "excess_loss_nlos_db": "excess_loss_nlos_db",
    "los_curve_a": "los_curve_a",
    "los_curve_b": "los_curve_b",
    "p_min_dbm": "p_min_dbm",
    "alpha_macro": "alpha_macro",
    "beta_macro_w": "beta_macro_w",
    "gamma_macro_w": "gamma_macro_w",
    "alpha_mbs": "alpha_mbs",
    "beta_mbs_w": "beta_mbs_w",
    "gamma_mbs_w": "gamma_mbs_w",
    "alpha_drone": "alpha_drone",
    "beta_drone_w": "beta_drone_w",
    "gamma_drone_w": "gamma_drone_w",
    "drone_speed_mps": "drone_speed_mps",
    "max_speed_mps": "max_speed_mps",
    "mass_kg": "mass_kg",
    "gravity_mps2": "gravity_mps2",
    "air_density_kgm3": "air_density_kgm3",
    "rotor_radius_m": "rotor_radius_m",
    "rotor_count": "rotor_count",
    "hw_idle_w": "hw_idle_w",
    "hw_full_w": "hw_full_w",
    "charge_power_w": "charge_power_w",
    "harvest_eff": "harvest_eff",
}


def make_scenario(*, horizon, users_per_slot, drone_count, drone_sites,
                  mbs=(), macro_radius_m=1000.0, macro_max_users=130.0,
                  drone_coverage_radius_m=150.0, drone_max_users=10.0,
                  mbs_radius_m=250.0, mbs_max_users=20.0,
                  initial_battery_j=6000.0, params=None, user_kind="uniform",
                  mbs_fraction=0.0, site_fraction=0.0, density=None,
                  phi_mean_w=0.0, uncertainty=None,
                  warnings=(), defaulted=()) -> Scenario:
    """Programmatic scenario constructor used by presets and tests.

    ``drone_sites`` lists the Z serving sites; the charging station at the
    origin is prepended automatically.  ``mbs`` is a list of (x, y) pairs.
    """
    params = params or SystemParams()
    sites = (GeoPoint(0.0, 0.0, 0.0),) + tuple(
        p if isinstance(p, GeoPoint) else GeoPoint(*p) for p in drone_sites)
    cells = tuple(
        c if isinstance(c, MicroCell) else
        MicroCell(GeoPoint(c[0], c[1], 0.0), mbs_radius_m, mbs_max_users)
        for c in mbs)
    top = Topology(GeoPoint(0.0, 0.0, 0.0), macro_radius_m, macro_max_users,
                   cells, sites, drone_coverage_radius_m, drone_max_users)
    if np.isscalar(users_per_slot):
        users_per_slot = (float(users_per_slot),) * horizon
    users = UserModel(tuple(float(u) for u in users_per_slot), user_kind,
                      mbs_fraction, site_fraction,
                      None if density is None else np.asarray(density, dtype=float))
    if np.isscalar(initial_battery_j):
        batteries = (float(initial_battery_j),) * drone_count
    else:
        batteries = tuple(float(v) for v in initial_battery_j)
    phi = np.asarray(phi_mean_w, dtype=float)
    if phi.ndim == 0:
        phi = np.full((drone_count, horizon), float(phi))
    re = REProcess(phi_mean_w=phi, uncertainty=uncertainty)
    return Scenario(top, users, params, horizon, drone_count, batteries, re,
                    tuple(warnings), tuple(defaulted))


def baseline_scenario(horizon=20, users_per_slot=140.0, drone_count=6) -> Scenario:
    """The default operating instance: 4 micro cells, 16 sites at 60 m."""
    grid = [-600.0, -200.0, 200.0, 600.0]
    sites = [(x, y, 60.0) for y in grid for x in grid]
    cells = [(500.0, 0.0), (0.0, 500.0), (-500.0, 0.0), (0.0, -500.0)]
    return make_scenario(
        horizon=horizon, users_per_slot=users_per_slot, drone_count=drone_count,
        drone_sites=sites, mbs=cells, phi_mean_w=2.0,
        uncertainty=("gamma", 1.0, 2.0))


def load_scenario(path) -> Scenario:
    """Load, convert, and validate a JSON scenario file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> Scenario:
    try:
        return _build_from_dict(raw)
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed scenario: missing or bad field {exc}") from exc


def _build_from_dict(raw: dict) -> Scenario:
    defaulted = []
    params = SystemParams()
    raw_params = raw.get("params", {})
    overrides = {}
    for key, attr in _PARAM_KEYS.items():
        if key in raw_params:
            overrides[attr] = raw_params[key]
    if "slot_minutes" in raw_params:
        overrides["slot_s"] = float(raw_params["slot_minutes"]) * 60.0
    elif "slot_s" in raw_params:
        overrides["slot_s"] = float(raw_params["slot_s"])
    if "battery_capacity_kj" in raw_params:
        overrides["battery_capacity_j"] = float(raw_params["battery_capacity_kj"]) * 1e3
    elif "battery_capacity_j" in raw_params:
        overrides["battery_capacity_j"] = float(raw_params["battery_capacity_j"])
    if "air_density_kgm3" not in raw_params:
        defaulted.append("air_density_kgm3")
    if "hw_full_w" not in raw_params:
        defaulted.append("hw_full_w")
    params = replace(params, **overrides)

    horizon = int(raw["horizon_slots"])
    users_raw = raw["users_per_slot"]
    if np.isscalar(users_raw):
        users_per_slot = (float(users_raw),) * horizon
    else:
        users_per_slot = tuple(float(u) for u in users_raw)

    macro = raw.get("macro", {})
    drones = raw.get("drones", {})
    dist = raw.get("user_distribution", {"kind": "uniform"})
    density = None
    if dist.get("kind") == "tabulated":
        density = np.asarray(dist["density"], dtype=float)

    mbs_cells = []
    for cell in raw.get("mbs", []):
        mbs_cells.append(MicroCell(
            GeoPoint(float(cell["x_m"]), float(cell["y_m"]), 0.0),
            float(cell.get("radius_m", 250.0)),
            float(cell.get("max_users", 20.0))))

    sites = [(float(s["x_m"]), float(s["y_m"]), float(s.get("h_m", 0.0)))
             for s in raw.get("drone_sites", [])]

    drone_count = int(drones.get("count", 0))
    if "initial_energy_kj" in drones:
        init = drones["initial_energy_kj"]
        initial = ([v * 1e3 for v in init] if isinstance(init, list)
                   else float(init) * 1e3)
    else:
        initial = drones.get("initial_energy_j", 6000.0)

    re_raw = raw.get("renewable", {})
    uncertainty = None
    unc_raw = re_raw.get("uncertainty", {"kind": "none"})
    kind = unc_raw.get("kind", "none")
    if kind == "gamma":
        uncertainty = ("gamma", float(unc_raw["shape"]), float(unc_raw["scale"]))
    elif kind == "two_point":
        uncertainty = ("two_point", float(unc_raw["deviation_pct"]) / 100.0)
    elif kind != "none":
        raise ParseError(f"unknown uncertainty kind {kind!r}")
    phi_mean = re_raw.get("mean_w", 0.0)
    if kind == "gamma" and "mean_w" not in re_raw:
        phi_mean = float(unc_raw["shape"]) * float(unc_raw["scale"])
    if not np.isscalar(phi_mean):
        phi_mean = np.asarray(phi_mean, dtype=float)

    return make_scenario(
        horizon=horizon,
        users_per_slot=users_per_slot,
        drone_count=drone_count,
        drone_sites=sites,
        mbs=mbs_cells,
        macro_radius_m=float(macro.get("radius_m", 1000.0)),
        macro_max_users=float(macro.get("max_users", 130.0)),
        drone_coverage_radius_m=float(drones.get("coverage_radius_m", 150.0)),
        drone_max_users=float(drones.get("max_users", 10.0)),
        initial_battery_j=initial,
        params=params,
        user_kind=dist.get("kind", "uniform"),
        mbs_fraction=float(dist.get("mbs_fraction", 0.0)),
        site_fraction=float(dist.get("site_fraction", 0.0)),
        density=density,
        phi_mean_w=phi_mean,
        uncertainty=uncertainty,
        defaulted=tuple(defaulted),
    )
