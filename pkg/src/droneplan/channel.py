"""Average path-loss models for ground-to-ground and air-to-ground links.

Ground links see the NLoS free-space-plus-excess loss; air links mix the
LoS and NLoS losses with an elevation-dependent LoS probability.  All
functions are pure and freely concurrent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, UnknownCell
from .scenario import SystemParams, Topology


@dataclass(frozen=True)
class LinkGeometry:
    """Average transmitter-user distance and, for air links, elevation."""

    distance_m: float
    elevation_deg: float = 0.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0:
        raise DomainError("linear value must be positive")
    return 10.0 * math.log10(value)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _free_space_db(distance_m: float, wavelength_m: float) -> float:
    if distance_m <= 0:
        raise DomainError("distance must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance_m / wavelength_m)


def pl_nlos(distance_m: float, params: SystemParams = SystemParams()) -> float:
    """Average NLoS path loss in dB."""
    return _free_space_db(distance_m, params.wavelength_m) + params.excess_loss_nlos_db


def pl_los(distance_m: float, params: SystemParams = SystemParams()) -> float:
    """Average LoS path loss in dB."""
    return _free_space_db(distance_m, params.wavelength_m) + params.excess_loss_los_db


def p_los(elevation_deg: float, params: SystemParams = SystemParams()) -> float:
    """LoS probability for an air-to-ground link, strictly increasing in angle."""
    if not 0.0 <= elevation_deg <= 90.0:
        raise DomainError("elevation angle must be within [0, 90] degrees")
    a, b = params.los_curve_a, params.los_curve_b
    return 1.0 / (1.0 + a * math.exp(-b * (elevation_deg - a)))


def pl_air_avg(geom: LinkGeometry, params: SystemParams = SystemParams()) -> float:
    """Probability-weighted mix of LoS and NLoS losses, in dB."""
    p = p_los(geom.elevation_deg, params)
    return p * pl_los(geom.distance_m, params) + (1.0 - p) * pl_nlos(geom.distance_m, params)


def link_geometry(cell, topology: Topology) -> LinkGeometry:
    """Average link geometry of a cell.

    Ground cells use the mean distance to a uniform user in the coverage
    disk (two thirds of the radius).  Drone sites use the slant distance to
    that mean horizontal radius and the matching elevation angle.
    """
    if cell == "macro":
        return LinkGeometry(2.0 * topology.macro_radius_m / 3.0)
    tag, idx = cell
    if tag == "mbs":
        if not 0 <= idx < topology.m_count:
            raise UnknownCell(f"no MBS {idx}")
        return LinkGeometry(2.0 * topology.mbs[idx].radius_m / 3.0)
    if tag == "site":
        if not 1 <= idx <= topology.z_count:
            raise UnknownCell(f"no serving site {idx}")
        h = topology.drone_sites[idx].h_m
        r_mean = 2.0 * topology.drone_coverage_radius_m / 3.0
        return LinkGeometry(math.hypot(h, r_mean), math.degrees(math.atan2(h, r_mean)))
    raise UnknownCell(f"unknown cell {cell!r}")


def cell_pl_linear(cell, topology: Topology, params: SystemParams) -> float:
    """Average path loss of a cell as a linear power factor."""
    geom = link_geometry(cell, topology)
    if cell == "macro" or cell[0] == "mbs":
        return db_to_linear(pl_nlos(geom.distance_m, params))
    return db_to_linear(pl_air_avg(geom, params))
