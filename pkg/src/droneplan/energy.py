"""Power and energy accounting for every BS class and for the drones.

Slot energies follow the four-way case split on (previous site, current
site): move-and-serve, stay-and-serve, return-to-station, stay-at-station.
Harvested energy accrues at the efficiency-weighted received power over the
whole slot in all four cases; charging applies only at the station.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import channel
from .errors import BatteryOverflow, BatteryUnderflow, DomainError
from .scenario import Scenario, SystemParams

# float guard for feasibility checks on battery transitions, in Joules
BATTERY_SLACK_J = 1e-6


@dataclass(frozen=True)
class PowerProfile:
    """Linear BS supply model: active = scale * radiated + offset; idle draw."""

    scale: float          # multiplies the radiated power
    offset_w: float       # constant active-site power
    idle_w: float         # standby power when switched off

    def __post_init__(self):
        if self.scale < 1 or self.offset_w <= 0 or self.idle_w < 0:
            raise DomainError("power profile requires scale >= 1, offset > 0, idle >= 0")


def macro_profile(p: SystemParams) -> PowerProfile:
    return PowerProfile(p.alpha_macro, p.beta_macro_w, p.gamma_macro_w)


def mbs_profile(p: SystemParams) -> PowerProfile:
    return PowerProfile(p.alpha_mbs, p.beta_mbs_w, p.gamma_mbs_w)


def drone_profile(p: SystemParams) -> PowerProfile:
    return PowerProfile(p.alpha_drone, p.beta_drone_w, p.gamma_drone_w)


@dataclass(frozen=True)
class Battery:
    level_j: float
    capacity_j: float

    def __post_init__(self):
        if not -BATTERY_SLACK_J <= self.level_j <= self.capacity_j + BATTERY_SLACK_J:
            raise DomainError(
                f"battery level {self.level_j} outside [0, {self.capacity_j}]")


@dataclass(frozen=True)
class SlotEnergy:
    consumed_j: float
    harvested_j: float
    charged_j: float

    def __post_init__(self):
        if min(self.consumed_j, self.harvested_j, self.charged_j) < 0:
            raise DomainError("slot energies must be nonnegative")


def radiated_power_w(users: float, pl_linear: float, p_min_dbm: float) -> float:
    """Total radiated power needed to reach ``users`` at the receive floor.

    The per-user transmit power is the receive floor (converted to Watts)
    times the linear average path-loss factor.
    """
    if users < 0:
        raise DomainError("user count must be nonnegative")
    return users * channel.dbm_to_watt(p_min_dbm) * pl_linear


def bs_power_w(profile: PowerProfile, active: bool, radiated_w: float) -> float:
    """Supply power of one BS given its state and radiated power."""
    if radiated_w < 0:
        raise DomainError("radiated power must be nonnegative")
    if not active:
        return profile.idle_w
    return profile.scale * radiated_w + profile.offset_w


def hover_power_w(p: SystemParams) -> float:
    """Induced power to keep the airframe aloft."""
    thrust = p.mass_kg * p.gravity_mps2
    return math.sqrt(thrust ** 3 /
                     (2.0 * math.pi * p.rotor_radius_m ** 2 * p.rotor_count
                      * p.air_density_kgm3))


def hardware_power_w(p: SystemParams, moving: bool) -> float:
    """Avionics/hardware draw: speed-interpolated in motion, floor when static."""
    if not moving:
        return p.hw_idle_w
    return (p.hw_full_w - p.hw_idle_w) / p.max_speed_mps * p.drone_speed_mps + p.hw_idle_w


def flying_power_w(p: SystemParams) -> float:
    return hover_power_w(p) + hardware_power_w(p, moving=True)


def drone_bs_power_w(scenario: Scenario, b: int, site: int) -> float:
    """Supply power of the BS payload while serving users at a site."""
    if site == 0:
        return 0.0
    pl = channel.cell_pl_linear(("site", site), scenario.topology, scenario.params)
    radiated = radiated_power_w(scenario.site_load(b, site), pl, scenario.params.p_min_dbm)
    return bs_power_w(drone_profile(scenario.params), True, radiated)


def slot_energy(scenario: Scenario, prev_site: int, cur_site: int, b: int,
                phi_w: float) -> SlotEnergy:
    """Consumed / harvested / charged energy of one drone over slot ``b``.

    ``prev_site`` is where the drone ended slot ``b - 1``.  Raises
    InfeasibleTrip when the leg cannot be flown within one slot.
    """
    p = scenario.params
    t_slot = p.slot_s
    harvested = p.harvest_eff * phi_w * t_slot
    if prev_site == cur_site:
        if cur_site == 0:
            consumed = p.gamma_drone_w * t_slot
            charged = p.charge_power_w * t_slot
        else:
            consumed = (drone_bs_power_w(scenario, b, cur_site) + p.hw_idle_w) * t_slot
            charged = 0.0
        return SlotEnergy(consumed, harvested, charged)
    t_fly = scenario.flight_time_s(prev_site, cur_site)
    t_rest = t_slot - t_fly
    fly = (flying_power_w(p) + p.gamma_drone_w) * t_fly
    if cur_site == 0:
        consumed = fly + p.gamma_drone_w * t_rest
        charged = p.charge_power_w * t_rest
    else:
        consumed = fly + (drone_bs_power_w(scenario, b, cur_site) + p.hw_idle_w) * t_rest
        charged = 0.0
    return SlotEnergy(consumed, harvested, charged)


def battery_step(battery: Battery, e: SlotEnergy) -> Battery:
    """Advance one slot, enforcing the draw and storage constraints.

    The draw constraint requires the slot's consumption to fit in the
    stored energy; the storage constraint requires the incoming harvest
    plus charge to fit under the capacity.  Together they keep the level
    within [0, capacity] at every slot boundary.
    """
    if e.consumed_j > battery.level_j + BATTERY_SLACK_J:
        raise BatteryUnderflow(
            f"consuming {e.consumed_j:.3f} J exceeds stored {battery.level_j:.3f} J")
    incoming = e.harvested_j + e.charged_j
    if battery.level_j + incoming > battery.capacity_j + BATTERY_SLACK_J:
        raise BatteryOverflow(
            f"stored {battery.level_j:.3f} J plus incoming {incoming:.3f} J "
            f"exceeds capacity {battery.capacity_j:.3f} J")
    level = battery.level_j + incoming - e.consumed_j
    level = min(max(level, 0.0), battery.capacity_j)
    return replace(battery, level_j=level)


@dataclass(frozen=True)
class NetworkSlotEnergy:
    """Per-class network energy during one slot, in Joules."""

    macro_j: float
    mbs_j: float
    drones_j: float
    drone_slots: tuple[SlotEnergy, ...]

    @property
    def total_j(self) -> float:
        return self.macro_j + self.mbs_j + self.drones_j


def network_slot_energy(scenario: Scenario, b: int, mbs_on, sites, prev_sites,
                        phi_col, powered=None) -> NetworkSlotEnergy:
    """Total network energy for slot ``b`` under the given decisions.

    ``sites``/``prev_sites`` give each drone's current and previous site
    index; ``phi_col`` the received power per drone.  ``powered`` marks
    drones that are shut down in place (no consumption, no served users);
    planner output never contains such drones, only simulator fallbacks.
    """
    p = scenario.params
    top = scenario.topology
    if powered is None:
        powered = [True] * len(sites)

    serving = [s for s, on in zip(sites, powered) if on and s != 0]
    macro_users = scenario.users.users(b) \
        - sum(scenario.mbs_load(b, k) for k in range(top.m_count) if mbs_on[k]) \
        - sum(scenario.site_load(b, s) for s in serving)
    macro_users = max(0.0, min(macro_users, top.macro_max_users))
    pl0 = channel.cell_pl_linear("macro", top, p)
    macro_j = bs_power_w(macro_profile(p), True,
                         radiated_power_w(macro_users, pl0, p.p_min_dbm)) * p.slot_s

    mbs_j = 0.0
    for k in range(top.m_count):
        if mbs_on[k]:
            plk = channel.cell_pl_linear(("mbs", k), top, p)
            radiated = radiated_power_w(scenario.mbs_load(b, k), plk, p.p_min_dbm)
            mbs_j += bs_power_w(mbs_profile(p), True, radiated) * p.slot_s
        else:
            mbs_j += bs_power_w(mbs_profile(p), False, 0.0) * p.slot_s

    drone_slots = []
    for l, (j_prev, i_cur) in enumerate(zip(prev_sites, sites)):
        if powered[l]:
            drone_slots.append(slot_energy(scenario, j_prev, i_cur, b, phi_col[l]))
        else:
            drone_slots.append(SlotEnergy(0.0, p.harvest_eff * phi_col[l] * p.slot_s, 0.0))
    drones_j = sum(e.consumed_j for e in drone_slots)
    return NetworkSlotEnergy(macro_j, mbs_j, drones_j, tuple(drone_slots))


def per_user_radiated_w(scenario: Scenario) -> tuple[float, np.ndarray, np.ndarray]:
    """Per-served-user radiated power of the macro, each MBS, and each site."""
    p, top = scenario.params, scenario.topology
    unit = channel.dbm_to_watt(p.p_min_dbm)
    macro = unit * channel.cell_pl_linear("macro", top, p)
    mbs = np.array([unit * channel.cell_pl_linear(("mbs", k), top, p)
                    for k in range(top.m_count)])
    sites = np.zeros(top.z_count + 1)
    for i in range(1, top.z_count + 1):
        sites[i] = unit * channel.cell_pl_linear(("site", i), top, p)
    return macro, mbs, sites
