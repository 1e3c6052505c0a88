"""Energy-aware planning of solar-powered drone base stations in a HetNet.

The package plans, over a slotted horizon, where battery/solar powered
drone small cells should fly and which micro base stations can sleep, so
that total network energy is minimized.  Three planning policies are
provided that differ in how much is known about future solar generation,
plus an exact branch-and-bound solver, a subgradient-relaxation heuristic,
and a rollout simulator with CSV reporting.
"""

from .channel import LinkGeometry, link_geometry, p_los, pl_air_avg, pl_los, pl_nlos
from .energy import (Battery, NetworkSlotEnergy, PowerProfile, SlotEnergy,
                     battery_step, bs_power_w, hardware_power_w, hover_power_w,
                     network_slot_energy, radiated_power_w, slot_energy)
from .errors import (BatteryOverflow, BatteryUnderflow, DomainError,
                     DronePlanError, InconsistentSolution, InfeasibleTrip,
                     ParseError, RepairFailed, TooLarge, TreeTooLarge,
                     UnknownCell, ValidationError)
from .lp_io import read_lp, write_lp
from .problems import (Bilp, LinearRow, Schedule, VarMap, build_partial,
                       build_perfect, build_zero, decode)
from .scenario import (GeoPoint, MicroCell, Scenario, SystemParams, Topology,
                       UserModel, baseline_scenario, distance, load_scenario,
                       make_scenario, travel_time_s, users_served)
from .sim import (ComparisonReport, Trace, compare, make_tree, rollout_partial,
                  rollout_perfect, rollout_zero, run_case)
from .solar import (REProcess, TreeScenario, discretize, named_rng, sample,
                    sample_matrix, sample_tree, tree_expectation)
from .solver import (LpState, SolveReport, branch_and_bound, brute_force,
                     relaxed_heuristic, round_and_repair, solve_lp)

__version__ = "0.1.0"
