//! Brute-force ground truth for small instances.
//!
//! These routines share no code with the solvers beyond the data model: the
//! permutation oracle keeps its own left-shift frontier and the assignment
//! oracle its own block arithmetic.

use crate::error::{Error, Result};
use crate::model::{Instance, Permutation, Time};

/// Default task-count cap of [`brute_force_optimum`].
pub const DEFAULT_ORACLE_CAP: usize = 9;

/// Caps of [`brute_force_assignments_mc2`].
pub const MAX_ASSIGNMENT_LO: usize = 12;
pub const MAX_ASSIGNMENT_HI: usize = 6;

/// Minimum makespan over all permutations, with the lexicographically
/// smallest optimal permutation (comparing task ids position by position).
pub fn brute_force_optimum(instance: &Instance) -> Result<(Permutation, Time)> {
    brute_force_optimum_with_cap(instance, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_optimum_with_cap(instance: &Instance, cap: usize) -> Result<(Permutation, Time)> {
    let n = instance.len();
    if n > cap {
        return Err(Error::TooLarge(format!(
            "permutation oracle is limited to {cap} tasks, got {n}"
        )));
    }
    let tasks = instance.tasks();
    let mut ids: Vec<usize> = (0..n).collect();
    ids.sort_by_key(|&k| tasks[k].id());
    let levels = instance.max_criticality();
    let proc: Vec<Vec<Time>> = ids.iter().map(|&k| tasks[k].proc().to_vec()).collect();
    // twin[k]: an earlier task (in id order) with the same shape
    let twin: Vec<Option<usize>> = (0..n)
        .map(|k| (0..k).rev().find(|&j| proc[j] == proc[k]))
        .collect();

    let mut dfs = Dfs {
        proc: &proc,
        twin: &twin,
        levels,
        used: vec![false; n],
        order: Vec::with_capacity(n),
        frontier: vec![0; levels + 1],
        remaining: vec![0; levels + 1],
        best: Time::MAX,
        best_order: Vec::new(),
    };
    for p in &proc {
        for (l, &t) in p.iter().enumerate() {
            dfs.remaining[l + 1] += t;
        }
    }
    dfs.go();
    if n == 0 {
        return Ok((Permutation::new(Vec::new())?, 0));
    }
    let perm = Permutation::new(dfs.best_order.iter().map(|&k| tasks[ids[k]].id()).collect())?;
    Ok((perm, dfs.best))
}

struct Dfs<'a> {
    proc: &'a [Vec<Time>],
    twin: &'a [Option<usize>],
    levels: usize,
    used: Vec<bool>,
    order: Vec<usize>,
    /// `frontier[l]`: latest end so far of any task at level `min(X, l)`.
    frontier: Vec<Time>,
    /// `remaining[l]`: level-`l` work of unplaced tasks that have level `l`.
    remaining: Vec<Time>,
    best: Time,
    best_order: Vec<usize>,
}

impl Dfs<'_> {
    fn go(&mut self) {
        let n = self.proc.len();
        if self.order.len() == n {
            let c = self.frontier[self.levels];
            if c < self.best {
                self.best = c;
                self.best_order.clone_from(&self.order);
            }
            return;
        }
        let bound = (1..=self.levels)
            .map(|l| self.frontier[l] + self.remaining[l])
            .max()
            .unwrap_or(0);
        if bound >= self.best {
            return;
        }
        for k in 0..n {
            if self.used[k] || self.twin[k].is_some_and(|j| !self.used[j]) {
                continue;
            }
            let p = &self.proc[k];
            let x = p.len();
            let s = self.frontier[x];
            let saved = self.frontier.clone();
            for l in 1..=self.levels {
                let end = s + p[l.min(x) - 1];
                if end > self.frontier[l] {
                    self.frontier[l] = end;
                }
            }
            for (l, &t) in p.iter().enumerate() {
                self.remaining[l + 1] -= t;
            }
            self.used[k] = true;
            self.order.push(k);
            self.go();
            self.order.pop();
            self.used[k] = false;
            for (l, &t) in p.iter().enumerate() {
                self.remaining[l + 1] += t;
            }
            self.frontier = saved;
        }
    }
}

/// Minimum over every Lo-to-(Hi or uncovered) assignment of the block
/// objective, for instances with at most two levels.
pub fn brute_force_assignments_mc2(instance: &Instance) -> Result<Time> {
    let tasks = instance.tasks();
    if let Some(t) = tasks.iter().find(|t| t.criticality() > 2) {
        return Err(Error::CriticalityTooHigh {
            task: t.id(),
            criticality: t.criticality(),
            max: 2,
        });
    }
    let his: Vec<(Time, Time)> = tasks
        .iter()
        .filter(|t| t.criticality() == 2)
        .map(|t| (t.p(1), t.p(2)))
        .collect();
    let los: Vec<Time> = tasks
        .iter()
        .filter(|t| t.criticality() == 1)
        .map(|t| t.p(1))
        .collect();
    if los.len() > MAX_ASSIGNMENT_LO || his.len() > MAX_ASSIGNMENT_HI {
        return Err(Error::TooLarge(format!(
            "assignment oracle is limited to {MAX_ASSIGNMENT_LO} Lo- and {MAX_ASSIGNMENT_HI} Hi-tasks, got {} and {}",
            los.len(),
            his.len()
        )));
    }
    let mut loads: Vec<Time> = his.iter().map(|&(a, _)| a).collect();
    let mut best = Time::MAX;
    enumerate(&his, &los, 0, &mut loads, 0, &mut best);
    Ok(best)
}

fn enumerate(his: &[(Time, Time)], los: &[Time], k: usize, loads: &mut [Time], uncovered: Time, best: &mut Time) {
    let value: Time = uncovered
        + his
            .iter()
            .zip(loads.iter())
            .map(|(&(_, b), &load)| load.max(b))
            .sum::<Time>();
    // adding work never shrinks a block
    if value >= *best {
        return;
    }
    if k == los.len() {
        *best = value;
        return;
    }
    enumerate(his, los, k + 1, loads, uncovered + los[k], best);
    for h in 0..his.len() {
        loads[h] += los[k];
        enumerate(his, los, k + 1, loads, uncovered, best);
        loads[h] -= los[k];
    }
}
