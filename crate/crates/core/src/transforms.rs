//! Level restrictions, the least-criticality-first order and level-sum bounds.

use crate::error::Result;
use crate::model::{FShape, Instance, Permutation, Time};
use crate::schedule::cmax;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Keep levels `1..=min(h, X)`.
    Minus,
    /// Drop tasks with `X < h`, keep levels `h..=X`.
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestrictionKind {
    pub h: usize,
    pub direction: Direction,
}

impl RestrictionKind {
    pub fn minus(h: usize) -> Self {
        assert!(h >= 1, "restriction level must be at least 1");
        RestrictionKind {
            h,
            direction: Direction::Minus,
        }
    }

    pub fn plus(h: usize) -> Self {
        assert!(h >= 1, "restriction level must be at least 1");
        RestrictionKind {
            h,
            direction: Direction::Plus,
        }
    }
}

/// Cuts levels off every task. Task ids are preserved.
pub fn restrict(instance: &Instance, kind: RestrictionKind) -> Instance {
    let h = kind.h;
    let tasks = instance
        .tasks()
        .iter()
        .filter_map(|t| {
            let x = t.criticality();
            let proc = match kind.direction {
                Direction::Minus => t.proc()[..h.min(x)].to_vec(),
                Direction::Plus if x >= h => t.proc()[h - 1..].to_vec(),
                Direction::Plus => return None,
            };
            // a contiguous slice of a strictly increasing vector stays valid
            Some(FShape::new(t.id(), proc).expect("restriction of a valid shape"))
        })
        .collect();
    Instance::new(tasks).expect("ids stay distinct")
}

/// Least criticality first: ascending criticality, ties by ascending id.
/// The makespan is the sum of every task's top-level time.
pub fn lcf(instance: &Instance) -> (Permutation, Time) {
    let mut tasks: Vec<&FShape> = instance.tasks().iter().collect();
    tasks.sort_by_key(|t| (t.criticality(), t.id()));
    let perm = Permutation::new(tasks.iter().map(|t| t.id()).collect()).expect("distinct ids");
    let makespan = tasks.iter().map(|t| t.top()).sum();
    debug_assert_eq!(cmax(instance, &perm).ok(), Some(makespan));
    (perm, makespan)
}

/// Per-level work sums `sum_{X_i >= l} p_i(l)` for `l = 1..=L` (index 0 is level 1).
pub fn level_sums(instance: &Instance) -> Vec<Time> {
    let mut sums = vec![0; instance.max_criticality()];
    for t in instance.tasks() {
        for (l, &p) in t.proc().iter().enumerate() {
            sums[l] += p;
        }
    }
    sums
}

/// Largest per-level work sum; never exceeds the optimal makespan.
pub fn level_sum_lower_bound(instance: &Instance) -> Time {
    level_sums(instance).into_iter().max().unwrap_or(0)
}

/// Optimal makespans of the `2-` and `2+` restrictions of an instance with
/// at most three levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestrictionBounds {
    pub minus: Time,
    pub plus: Time,
}

impl RestrictionBounds {
    pub fn best(&self) -> Time {
        self.minus.max(self.plus)
    }
}

/// Evaluates both restriction bounds with a caller-supplied two-level solver.
///
/// The solver must return a value that is a valid lower bound for its
/// input (its optimum when solved exactly).
pub fn restriction_lower_bounds<F>(instance: &Instance, mut mc2_solver: F) -> Result<RestrictionBounds>
where
    F: FnMut(&Instance) -> Result<Time>,
{
    instance.ensure_max_criticality(3)?;
    let minus = mc2_solver(&restrict(instance, RestrictionKind::minus(2)))?;
    let plus = mc2_solver(&restrict(instance, RestrictionKind::plus(2)))?;
    Ok(RestrictionBounds { minus, plus })
}
