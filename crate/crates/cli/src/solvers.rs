//! Uniform front end over the library solvers.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use mcmu::{
    bottom_up, brute_force_optimum, lcf, level_sum_lower_bound, relative_gap, solve_mc2, solve_mc3,
    Certificate, Instance, Permutation, Result, SolveOptions, Time,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolverKind {
    Lcf,
    Mc2,
    BottomUp,
    Mc3,
    Oracle,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Lcf,
        SolverKind::Mc2,
        SolverKind::BottomUp,
        SolverKind::Mc3,
        SolverKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Lcf => "lcf",
            SolverKind::Mc2 => "mc2",
            SolverKind::BottomUp => "bottomup",
            SolverKind::Mc3 => "mc3",
            SolverKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown solver `{s}` (expected lcf, mc2, bottomup, mc3 or oracle)"))
    }
}

/// What every solver reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub permutation: Permutation,
    pub makespan: Time,
    /// Best proven lower bound.
    pub lower_bound: Time,
    /// The makespan is proven optimal.
    pub optimal: bool,
    /// The time limit stopped the search before it finished.
    pub timed_out: bool,
    pub certificate: Option<Certificate>,
    pub elapsed: Duration,
}

impl Outcome {
    /// Relative gap in percent, `None` when optimal.
    pub fn gap_pct(&self) -> Option<f64> {
        (!self.optimal).then(|| 100.0 * relative_gap(self.makespan, self.lower_bound))
    }
}

pub fn run(kind: SolverKind, instance: &Instance, opts: &SolveOptions) -> Result<Outcome> {
    let start = Instant::now();
    let mut out = match kind {
        SolverKind::Lcf => {
            let (permutation, makespan) = lcf(instance);
            let lower_bound = level_sum_lower_bound(instance);
            Outcome {
                permutation,
                makespan,
                lower_bound,
                optimal: makespan == lower_bound,
                timed_out: false,
                certificate: None,
                elapsed: Duration::ZERO,
            }
        }
        SolverKind::Mc2 => {
            let sol = solve_mc2(instance, opts)?;
            Outcome {
                permutation: mcmu::rebuild_schedule_mc2(instance, &sol.covering)?,
                makespan: sol.makespan,
                lower_bound: sol.lower_bound,
                optimal: sol.optimal,
                timed_out: !sol.optimal,
                certificate: None,
                elapsed: sol.elapsed,
            }
        }
        SolverKind::BottomUp => {
            let r = bottom_up(instance, opts)?;
            let lower_bound = r.lb_minus.max(r.lb_plus.unwrap_or(0));
            Outcome {
                permutation: r.permutation,
                makespan: r.makespan,
                lower_bound,
                optimal: r.certificate.is_some() || r.makespan == lower_bound,
                timed_out: r.timed_out,
                certificate: Some(r.certificate),
                elapsed: r.elapsed,
            }
        }
        SolverKind::Mc3 => {
            // bottom-up gives the incumbent and bounds the search starts from
            let warm = bottom_up(instance, opts)?;
            let rest = SolveOptions {
                time_limit: opts.time_limit.map(|l| l.saturating_sub(warm.elapsed)),
                ..*opts
            };
            let sol = solve_mc3(instance, &rest, Some(&warm))?;
            Outcome {
                permutation: mcmu::rebuild_schedule_mc3(instance, &sol.covering)?,
                makespan: sol.makespan,
                lower_bound: sol.lower_bound,
                optimal: sol.optimal,
                timed_out: !sol.optimal,
                certificate: None,
                elapsed: Duration::ZERO,
            }
        }
        SolverKind::Oracle => {
            let (permutation, makespan) = brute_force_optimum(instance)?;
            Outcome {
                permutation,
                makespan,
                lower_bound: makespan,
                optimal: true,
                timed_out: false,
                certificate: None,
                elapsed: Duration::ZERO,
            }
        }
    };
    out.elapsed = start.elapsed();
    Ok(out)
}
