//! Schedule semantics: left-shifting, makespan, feasibility and critical paths.
//!
//! Two tasks `i` and `j` may not overlap on their highest common level
//! `min(X_i, X_j)`: either `s_i + p_i(min) <= s_j` or the symmetric
//! condition holds.

use crate::error::{Error, Result};
use crate::model::{Instance, Permutation, Schedule, TaskId, Time};

/// Left-shifted start times for an order of instance indices, indexed by
/// instance index.
///
/// `frontier[l]` holds the earliest start of a task of criticality `l` given
/// the tasks placed so far, i.e. `max_j s_j + p_j(min(X_j, l))`.
pub(crate) fn left_shift_indices(instance: &Instance, order: &[usize]) -> Vec<Time> {
    let tasks = instance.tasks();
    let levels = instance.max_criticality();
    let mut frontier = vec![0; levels + 1];
    let mut starts = vec![0; tasks.len()];
    for &k in order {
        let t = &tasks[k];
        let s = frontier[t.criticality()];
        starts[k] = s;
        for (l, f) in frontier.iter_mut().enumerate().skip(1) {
            let end = s + t.p(l.min(t.criticality()));
            if end > *f {
                *f = end;
            }
        }
    }
    starts
}

/// Makespan of the left-shifted schedule of an index order.
pub(crate) fn cmax_indices(instance: &Instance, order: &[usize]) -> Time {
    let starts = left_shift_indices(instance, order);
    order
        .iter()
        .map(|&k| starts[k] + instance.tasks()[k].top())
        .max()
        .unwrap_or(0)
}

/// Earliest-start schedule for the given task order.
pub fn left_shift(instance: &Instance, perm: &Permutation) -> Result<Schedule> {
    let order = perm.to_indices(instance)?;
    let starts = left_shift_indices(instance, &order);
    let mut sched = Schedule::new();
    for (k, t) in instance.tasks().iter().enumerate() {
        sched.set(t.id(), starts[k]);
    }
    Ok(sched)
}

/// `max_i s_i + p_i(X_i)`.
pub fn makespan(instance: &Instance, sched: &Schedule) -> Result<Time> {
    let starts = sched.resolve(instance)?;
    Ok(instance
        .tasks()
        .iter()
        .zip(&starts)
        .map(|(t, &s)| s + t.top())
        .max()
        .unwrap_or(0))
}

/// Makespan of the left-shifted schedule of `perm`.
pub fn cmax(instance: &Instance, perm: &Permutation) -> Result<Time> {
    let order = perm.to_indices(instance)?;
    Ok(cmax_indices(instance, &order))
}

/// A pair of tasks violating the pairwise disjunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub first: TaskId,
    pub second: TaskId,
    pub level: usize,
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Infeasible {
            first: v.first,
            second: v.second,
            level: v.level,
        }
    }
}

/// Returns `Ok(None)` when feasible, otherwise the first violating pair in
/// instance order together with the level at which they overlap.
pub fn check_feasibility(instance: &Instance, sched: &Schedule) -> Result<Option<Violation>> {
    let starts = sched.resolve(instance)?;
    let tasks = instance.tasks();
    for i in 0..tasks.len() {
        for j in i + 1..tasks.len() {
            let level = tasks[i].criticality().min(tasks[j].criticality());
            let (si, sj) = (starts[i], starts[j]);
            if si + tasks[i].p(level) > sj && sj + tasks[j].p(level) > si {
                return Ok(Some(Violation {
                    first: tasks[i].id(),
                    second: tasks[j].id(),
                    level,
                }));
            }
        }
    }
    Ok(None)
}

/// Chain of `(task, level)` pairs tiling `[0, Cmax]` in a left-shifted schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalPath {
    pub entries: Vec<(TaskId, usize)>,
}

impl CriticalPath {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of the entries' processing times at their levels.
    pub fn length(&self, instance: &Instance) -> Result<Time> {
        self.entries
            .iter()
            .map(|&(id, l)| Ok(instance.task(id)?.p(l)))
            .sum()
    }

    pub fn max_level(&self) -> usize {
        self.entries.iter().map(|&(_, l)| l).max().unwrap_or(0)
    }
}

/// One critical path of the left-shifted schedule of `perm`.
///
/// Walks backwards from the task finishing at the makespan, at each step
/// taking the predecessor whose completion (at the common level) equals the
/// current start. Ties go to the largest task id.
pub fn critical_path(instance: &Instance, perm: &Permutation) -> Result<CriticalPath> {
    let order = perm.to_indices(instance)?;
    let tasks = instance.tasks();
    let starts = left_shift_indices(instance, &order);
    let Some(cmax) = order.iter().map(|&k| starts[k] + tasks[k].top()).max() else {
        return Ok(CriticalPath { entries: vec![] });
    };

    let mut pos = order
        .iter()
        .enumerate()
        .filter(|&(_, &k)| starts[k] + tasks[k].top() == cmax)
        .max_by_key(|&(_, &k)| tasks[k].id())
        .map(|(p, _)| p)
        .expect("non-empty");
    let mut level = tasks[order[pos]].criticality();
    let mut rev = vec![(tasks[order[pos]].id(), level)];

    while starts[order[pos]] > 0 {
        let k = order[pos];
        let s = starts[k];
        let xk = tasks[k].criticality();
        let (p, l) = order[..pos]
            .iter()
            .enumerate()
            .filter_map(|(p, &j)| {
                let l = tasks[j].criticality().min(xk);
                (starts[j] + tasks[j].p(l) == s).then_some((p, l))
            })
            .max_by_key(|&(p, _)| tasks[order[p]].id())
            .expect("left-shifted start is realised by some predecessor");
        pos = p;
        level = l;
        rev.push((tasks[order[pos]].id(), level));
    }
    rev.reverse();
    Ok(CriticalPath { entries: rev })
}

/// Tight-link view of a left-shifted schedule, used to reason about all
/// critical paths rather than a canonical one.
pub(crate) struct TightGraph {
    pub starts: Vec<Time>,
    pub cmax: Time,
    /// For each position in the order: tight predecessors as `(position, level)`.
    pub preds: Vec<Vec<(usize, usize)>>,
}

impl TightGraph {
    pub fn build(instance: &Instance, order: &[usize]) -> Self {
        let tasks = instance.tasks();
        let starts = left_shift_indices(instance, order);
        let cmax = order
            .iter()
            .map(|&k| starts[k] + tasks[k].top())
            .max()
            .unwrap_or(0);
        let preds = (0..order.len())
            .map(|pos| {
                let k = order[pos];
                let xk = tasks[k].criticality();
                (0..pos)
                    .filter_map(|p| {
                        let j = order[p];
                        let l = tasks[j].criticality().min(xk);
                        (starts[j] + tasks[j].p(l) == starts[k]).then_some((p, l))
                    })
                    .collect()
            })
            .collect();
        TightGraph {
            starts,
            cmax,
            preds,
        }
    }

    /// Whether some critical path uses only levels `<= max_level`.
    pub fn has_path_within(&self, instance: &Instance, order: &[usize], max_level: usize) -> bool {
        let tasks = instance.tasks();
        let mut reach = vec![false; order.len()];
        for pos in 0..order.len() {
            let k = order[pos];
            reach[pos] = self.starts[k] == 0
                || self.preds[pos]
                    .iter()
                    .any(|&(p, l)| l <= max_level && reach[p]);
        }
        order.iter().enumerate().any(|(pos, &k)| {
            reach[pos]
                && tasks[k].criticality() <= max_level
                && self.starts[k] + tasks[k].top() == self.cmax
        })
    }
}
