//! Non-preemptive mixed-criticality match-up scheduling of F-shaped tasks
//! on a single machine.
//!
//! A permutation of tasks is turned into a schedule by left-shifting; the
//! static schedule is executed with the skip policy in [`runtime`]. Exact
//! solvers exist for two and three criticality levels, built on the
//! covering-block view of a schedule.

pub mod covering2;
pub mod covering3;
pub mod error;
pub mod generate;
pub mod lp;
pub mod model;
pub mod options;
pub mod oracle;
pub mod runtime;
pub mod schedule;
pub mod shaping;
pub mod transforms;

pub use covering2::{
    block_length, export_lp_mc2, objective_mc2, rebuild_schedule_mc2, solve_mc2, CoveringBlockInfo, Mc2Covering,
    Mc2Solution,
};
pub use covering3::{
    bottom_up, check_optimality_conditions, export_lp_mc3, great_block_length, objective_mc3, rebuild_schedule_mc3,
    solve_mc3, BottomUpResult, Certificate, LoSlot, Mc3Covering, Mc3Solution, OptimalityConditions,
};
pub use error::{Error, Result};
pub use generate::{generate, GeneratorConfig};
pub use model::{FShape, Instance, Permutation, Schedule, TaskId, Time};
pub use options::{relative_gap, SolveOptions};
pub use oracle::{brute_force_assignments_mc2, brute_force_optimum, brute_force_optimum_with_cap};
pub use runtime::{sample_scenario, simulate, Execution, ExecutionTrace, Scenario, TraceRecord};
pub use schedule::{check_feasibility, cmax, critical_path, left_shift, makespan, CriticalPath, Violation};
pub use shaping::{derive_fshape, ConfidenceLevels, Derivation, DiscreteDistribution};
pub use transforms::{
    lcf, level_sum_lower_bound, level_sums, restrict, restriction_lower_bounds, Direction, RestrictionBounds,
    RestrictionKind,
};
