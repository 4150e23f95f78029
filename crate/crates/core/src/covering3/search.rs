//! Branch-and-bound over nested coverings.
//!
//! Hi-tasks are placed first (free or into a Great-task), then Lo-tasks
//! (uncovered, direct under a Great-task, or into a Hi-block). The running
//! total `T` is the objective restricted to the blocks built so far; every
//! block length is monotone and 1-Lipschitz in what is added to it, so `T`
//! never decreases and the room each container can still absorb bounds the
//! rest.
//!
//! A Great-task of length `len` is tracked through two slacks:
//! `u = len - p(1) - sum P - D` (room for direct Lo work) and
//! `v = len - p(2) - sum P` (room for Hi-block growth, together with `u`).
//! A Hi-block keeps `r = p(2) - p(1) - nested load`.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use super::{objective_mc3, BottomUpResult, LoSlot, Mc3Covering};
use crate::covering2::solve_mc2;
use crate::error::Result;
use crate::model::{Instance, TaskId, Time};
use crate::options::{relative_gap, Deadline, SolveOptions};
use crate::transforms::{level_sum_lower_bound, restrict, RestrictionKind};

#[derive(Debug, Clone)]
pub struct Mc3Solution {
    pub covering: Mc3Covering,
    pub makespan: Time,
    /// Proven lower bound; equals `makespan` when `optimal`.
    pub lower_bound: Time,
    pub optimal: bool,
    pub elapsed: Duration,
    pub nodes: u64,
}

impl Mc3Solution {
    pub fn gap(&self) -> f64 {
        relative_gap(self.makespan, self.lower_bound)
    }
}

const MEMO_LIMIT: usize = 1 << 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Uncovered,
    Direct(usize),
    Hi(usize),
}

struct Problem {
    greats: Vec<usize>,
    g_a: Vec<i64>,
    g_b: Vec<i64>,
    g_c: Vec<i64>,
    his: Vec<usize>,
    h_a: Vec<i64>,
    h_b: Vec<i64>,
    /// Suffix sums over the Hi order.
    h_suffix_a: Vec<i64>,
    h_suffix_b: Vec<i64>,
    los: Vec<usize>,
    sizes: Vec<i64>,
    suffix: Vec<i64>,
}

impl Problem {
    fn new(instance: &Instance) -> Self {
        let tasks = instance.tasks();
        let p = |k: usize, l: usize| tasks[k].p(l) as i64;
        let greats = instance.indices_with_criticality(3);
        let mut his = instance.indices_with_criticality(2);
        his.sort_by_key(|&k| (std::cmp::Reverse(tasks[k].p(2)), tasks[k].id()));
        let mut los = instance.indices_with_criticality(1);
        los.sort_by_key(|&k| (std::cmp::Reverse(tasks[k].p(1)), tasks[k].id()));
        let suffix_of = |v: &[i64]| {
            let mut s = vec![0; v.len() + 1];
            for k in (0..v.len()).rev() {
                s[k] = s[k + 1] + v[k];
            }
            s
        };
        let h_a: Vec<i64> = his.iter().map(|&k| p(k, 1)).collect();
        let h_b: Vec<i64> = his.iter().map(|&k| p(k, 2)).collect();
        let sizes: Vec<i64> = los.iter().map(|&k| p(k, 1)).collect();
        Problem {
            g_a: greats.iter().map(|&k| p(k, 1)).collect(),
            g_b: greats.iter().map(|&k| p(k, 2)).collect(),
            g_c: greats.iter().map(|&k| p(k, 3)).collect(),
            greats,
            h_suffix_a: suffix_of(&h_a),
            h_suffix_b: suffix_of(&h_b),
            h_a,
            h_b,
            his,
            suffix: suffix_of(&sizes),
            sizes,
            los,
        }
    }
}

/// Undo record for one placement.
struct Saved {
    t: i64,
    great: Option<(usize, i64, i64)>,
    hi: Option<(usize, i64)>,
}

struct Search<'a> {
    prob: &'a Problem,
    t: i64,
    g_u: Vec<i64>,
    g_v: Vec<i64>,
    g_his: Vec<Vec<usize>>,
    /// Placed Hi-tasks: the Great-task index holding them.
    h_great: Vec<Option<usize>>,
    h_res: Vec<i64>,
    lo_slot: Vec<Slot>,
    best: Option<(Vec<Option<usize>>, Vec<Slot>)>,
    best_t: i64,
    /// An incumbent exists outside `best`.
    warm: bool,
    target: i64,
    memo: HashMap<Vec<i64>, i64>,
    deadline: Deadline,
    nodes: u64,
    aborted: bool,
}

impl Search<'_> {
    fn open(&self, g: usize) -> bool {
        self.g_u[g].min(self.g_v[g]) > 0
    }

    /// Hi-blocks whose growth lands fully in the objective: free ones and
    /// those inside Great-tasks that can no longer absorb anything.
    fn in_pool(&self, h: usize) -> bool {
        match self.h_great[h] {
            None => true,
            Some(g) => !self.open(g),
        }
    }

    fn great_sig(&self, g: usize) -> Option<Vec<i64>> {
        let (u, v) = (self.g_u[g], self.g_v[g]);
        if u == 0 {
            return None;
        }
        if v == 0 {
            return Some(vec![u, 0]);
        }
        let mut nested: Vec<i64> = self.g_his[g]
            .iter()
            .map(|&h| self.h_res[h])
            .filter(|&r| r > 0)
            .collect();
        nested.sort_unstable();
        let mut sig = vec![u, v];
        sig.extend(nested);
        Some(sig)
    }

    fn placed_his(&self, step: usize) -> usize {
        step.min(self.prob.his.len())
    }

    fn memo_key(&self, step: usize) -> Vec<i64> {
        let placed = self.placed_his(step);
        let mut pool: Vec<i64> = (0..placed)
            .filter(|&h| self.in_pool(h))
            .map(|h| self.h_res[h])
            .filter(|&r| r > 0)
            .collect();
        pool.sort_unstable();
        let mut sigs: Vec<Vec<i64>> = (0..self.prob.greats.len())
            .filter_map(|g| self.great_sig(g))
            .collect();
        sigs.sort_unstable();
        let mut key = vec![step as i64, pool.len() as i64];
        key.extend(pool);
        for s in sigs {
            key.push(s.len() as i64);
            key.extend(s);
        }
        key
    }

    /// Total absorption room and the most a single Lo-task can absorb.
    fn room(&self, step: usize) -> (i64, i64) {
        let placed = self.placed_his(step);
        let mut total = 0;
        let mut single = 0;
        for h in 0..placed {
            let r = self.h_res[h].max(0);
            if self.in_pool(h) {
                total += r;
                single = single.max(r);
            }
        }
        for g in 0..self.prob.greats.len() {
            let u = self.g_u[g];
            total += u;
            single = single.max(u);
            if self.open(g) {
                let m = u.min(self.g_v[g]);
                for &h in &self.g_his[g] {
                    let r = self.h_res[h].max(0);
                    total += r;
                    single = single.max(r + m);
                }
            }
        }
        (total, single)
    }

    fn bound(&self, step: usize) -> i64 {
        let prob = self.prob;
        let nh = prob.his.len();
        let (room, single) = self.room(step);
        if step < nh {
            let slack: i64 = (0..prob.greats.len())
                .filter(|&g| self.open(g))
                .map(|g| self.g_u[g].min(self.g_v[g]))
                .sum();
            let hi_growth = (prob.h_suffix_b[step] - slack).max(0);
            let absorbed = self.t - room + prob.h_suffix_a[step] + prob.suffix[0];
            (self.t + hi_growth).max(absorbed)
        } else {
            let k = step - nh;
            let big = k + prob.sizes[k..].partition_point(|&p| p > single);
            let capped = (big - k) as i64 * single + prob.suffix[big];
            self.t + (prob.suffix[k] - room.min(capped)).max(0)
        }
    }

    fn run(&mut self, step: usize) {
        self.nodes += 1;
        if self.nodes & 0x3ff == 0 && (self.warm || self.best.is_some()) && self.deadline.expired() {
            self.aborted = true;
        }
        if self.aborted || self.best_t <= self.target {
            return;
        }
        let prob = self.prob;
        let nh = prob.his.len();
        if step == nh + prob.los.len() {
            if self.t < self.best_t {
                self.best_t = self.t;
                self.best = Some((self.h_great.clone(), self.lo_slot.clone()));
            }
            return;
        }
        if self.bound(step) >= self.best_t {
            return;
        }
        let key = self.memo_key(step);
        let full = self.memo.len() >= MEMO_LIMIT;
        match self.memo.entry(key) {
            Entry::Occupied(mut e) => {
                if *e.get() <= self.t {
                    return;
                }
                e.insert(self.t);
            }
            Entry::Vacant(e) => {
                if !full {
                    e.insert(self.t);
                }
            }
        }

        if step < nh {
            for choice in self.hi_children(step) {
                let saved = self.place_hi(step, choice);
                self.run(step + 1);
                self.undo_hi(step, choice, saved);
                if self.aborted || self.best_t <= self.target {
                    return;
                }
            }
        } else {
            let k = step - nh;
            for slot in self.lo_children(prob.sizes[k]) {
                let saved = self.place_lo(k, slot);
                self.run(step + 1);
                self.undo_lo(k, saved);
                if self.aborted || self.best_t <= self.target {
                    return;
                }
            }
        }
    }

    /// A Hi-task goes into an open Great-task whenever one exists: moving a
    /// free block into one never lengthens the schedule. Great-tasks with
    /// the same signature are interchangeable.
    fn hi_children(&self, h: usize) -> Vec<Option<usize>> {
        let b = self.prob.h_b[h];
        let mut seen: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        for g in 0..self.prob.greats.len() {
            if self.open(g) {
                seen.entry(self.great_sig(g).expect("open")).or_insert(g);
            }
        }
        if seen.is_empty() {
            return vec![None];
        }
        let mut kids: Vec<(i64, i64, usize)> = seen
            .into_values()
            .map(|g| {
                let m = self.g_u[g].min(self.g_v[g]);
                ((b - m).max(0), m, g)
            })
            .collect();
        kids.sort_unstable();
        kids.into_iter().map(|(_, _, g)| Some(g)).collect()
    }

    fn place_hi(&mut self, h: usize, choice: Option<usize>) -> Saved {
        let b = self.prob.h_b[h];
        let mut saved = Saved {
            t: self.t,
            great: None,
            hi: None,
        };
        self.h_res[h] = b - self.prob.h_a[h];
        self.h_great[h] = choice;
        match choice {
            None => self.t += b,
            Some(g) => {
                saved.great = Some((g, self.g_u[g], self.g_v[g]));
                self.grow_great(g, b);
                self.g_his[g].push(h);
            }
        }
        saved
    }

    fn undo_hi(&mut self, h: usize, choice: Option<usize>, saved: Saved) {
        if let Some(g) = choice {
            self.g_his[g].pop();
        }
        self.h_great[h] = None;
        self.restore(saved);
    }

    /// Adds `dp` to the Hi-block total of Great-task `g`.
    fn grow_great(&mut self, g: usize, dp: i64) {
        let m = self.g_u[g].min(self.g_v[g]);
        let dl = (dp - m).max(0);
        self.g_u[g] += dl - dp;
        self.g_v[g] += dl - dp;
        self.t += dl;
    }

    fn restore(&mut self, saved: Saved) {
        self.t = saved.t;
        if let Some((g, u, v)) = saved.great {
            self.g_u[g] = u;
            self.g_v[g] = v;
        }
        if let Some((h, r)) = saved.hi {
            self.h_res[h] = r;
        }
    }

    fn cost(&self, slot: Slot, p: i64) -> i64 {
        match slot {
            Slot::Uncovered => p,
            Slot::Direct(g) => (p - self.g_u[g]).max(0),
            Slot::Hi(h) => {
                let dp = (p - self.h_res[h].max(0)).max(0);
                match self.h_great[h] {
                    Some(g) if self.open(g) => (dp - self.g_u[g].min(self.g_v[g])).max(0),
                    _ => dp,
                }
            }
        }
    }

    /// One child per class of equivalent slots, cheapest first, best fit
    /// among equally cheap ones. A pooled Hi-block with room exactly `p` is
    /// taken alone; slots that can absorb nothing are only used when no
    /// other slot exists, and then all of them are equivalent to leaving the
    /// task uncovered.
    fn lo_children(&self, p: i64) -> Vec<Slot> {
        let placed = self.prob.his.len();
        let mut classes: BTreeMap<Vec<i64>, (Slot, i64)> = BTreeMap::new();
        for h in 0..placed {
            let r = self.h_res[h];
            if r <= 0 {
                continue;
            }
            if self.in_pool(h) {
                if r == p {
                    return vec![Slot::Hi(h)];
                }
                classes.entry(vec![0, r]).or_insert((Slot::Hi(h), r));
            }
        }
        for g in 0..self.prob.greats.len() {
            let Some(sig) = self.great_sig(g) else {
                continue;
            };
            let mut key = vec![1];
            key.extend(&sig);
            classes.entry(key).or_insert((Slot::Direct(g), self.g_u[g]));
            if self.open(g) {
                let m = self.g_u[g].min(self.g_v[g]);
                for &h in &self.g_his[g] {
                    // a saturated Hi-block is worse than the direct slot
                    let r = self.h_res[h];
                    if r <= 0 {
                        continue;
                    }
                    let mut key = vec![2, r];
                    key.extend(&sig);
                    classes.entry(key).or_insert((Slot::Hi(h), r + m));
                }
            }
        }
        if classes.is_empty() {
            return vec![Slot::Uncovered];
        }
        let mut kids: Vec<(i64, i64, Slot)> = classes
            .into_values()
            .map(|(slot, room)| (self.cost(slot, p), room, slot))
            .collect();
        kids.sort_by_key(|&(c, room, _)| (c, room));
        kids.into_iter().map(|(_, _, s)| s).collect()
    }

    fn place_lo(&mut self, k: usize, slot: Slot) -> Saved {
        let p = self.prob.sizes[k];
        let mut saved = Saved {
            t: self.t,
            great: None,
            hi: None,
        };
        self.lo_slot[k] = slot;
        match slot {
            Slot::Uncovered => self.t += p,
            Slot::Direct(g) => {
                saved.great = Some((g, self.g_u[g], self.g_v[g]));
                let dl = (p - self.g_u[g]).max(0);
                self.g_u[g] += dl - p;
                self.g_v[g] += dl;
                self.t += dl;
            }
            Slot::Hi(h) => {
                saved.hi = Some((h, self.h_res[h]));
                let dp = (p - self.h_res[h].max(0)).max(0);
                self.h_res[h] -= p;
                match self.h_great[h] {
                    Some(g) => {
                        saved.great = Some((g, self.g_u[g], self.g_v[g]));
                        self.grow_great(g, dp);
                    }
                    None => self.t += dp,
                }
            }
        }
        saved
    }

    fn undo_lo(&mut self, k: usize, saved: Saved) {
        self.lo_slot[k] = Slot::Uncovered;
        self.restore(saved);
    }
}

fn to_covering(
    instance: &Instance,
    prob: &Problem,
    h_great: &[Option<usize>],
    lo_slot: &[Slot],
) -> Result<Mc3Covering> {
    let tasks = instance.tasks();
    let gid = |g: usize| tasks[prob.greats[g]].id();
    let hid = |h: usize| tasks[prob.his[h]].id();
    let hi_assign: BTreeMap<TaskId, Option<TaskId>> = h_great
        .iter()
        .enumerate()
        .map(|(h, g)| (hid(h), g.map(gid)))
        .collect();
    let lo_assign: BTreeMap<TaskId, LoSlot> = lo_slot
        .iter()
        .enumerate()
        .map(|(k, slot)| {
            let s = match *slot {
                Slot::Uncovered => (None, None),
                Slot::Direct(g) => (Some(gid(g)), None),
                Slot::Hi(h) => (h_great[h].map(gid), Some(hid(h))),
            };
            (tasks[prob.los[k]].id(), s)
        })
        .collect();
    Mc3Covering::new(instance, lo_assign, hi_assign)
}

/// Solves an instance with at most three levels by branch-and-bound over
/// nested coverings.
///
/// A warm start supplies the incumbent and the lower bound
/// `max(lb-, lb+, level sums)`; `lb+` is computed here when the warm start
/// does not carry it. With no time limit the result is optimal and
/// deterministic.
pub fn solve_mc3(
    instance: &Instance,
    opts: &SolveOptions,
    warm_start: Option<&BottomUpResult>,
) -> Result<Mc3Solution> {
    instance.ensure_max_criticality(3)?;
    let start = Instant::now();
    let deadline = Deadline::new(start, opts.time_limit);
    let prob = Problem::new(instance);

    let mut target = level_sum_lower_bound(instance) as i64;
    let mut best_t = i64::MAX;
    let mut warm_cov = None;
    if let Some(w) = warm_start {
        target = target.max(w.lb_minus as i64);
        let lb_plus = match w.lb_plus {
            Some(lb) => lb,
            None => {
                let plus = restrict(instance, RestrictionKind::plus(2));
                let sub = SolveOptions {
                    time_limit: deadline.remaining(),
                    ..*opts
                };
                solve_mc2(&plus, &sub)?.lower_bound
            }
        };
        target = target.max(lb_plus as i64);
        best_t = objective_mc3(instance, &w.covering)? as i64;
        warm_cov = Some(w.covering.clone());
    }

    let ng = prob.greats.len();
    let mut search = Search {
        prob: &prob,
        t: prob.g_c.iter().sum(),
        g_u: (0..ng).map(|g| prob.g_c[g] - prob.g_a[g]).collect(),
        g_v: (0..ng).map(|g| prob.g_c[g] - prob.g_b[g]).collect(),
        g_his: vec![Vec::new(); ng],
        h_great: vec![None; prob.his.len()],
        h_res: vec![0; prob.his.len()],
        lo_slot: vec![Slot::Uncovered; prob.los.len()],
        best: None,
        best_t,
        warm: warm_cov.is_some(),
        target,
        memo: HashMap::new(),
        deadline,
        nodes: 0,
        aborted: false,
    };
    if search.best_t > target {
        search.run(0);
    }

    let covering = match (search.best.take(), warm_cov) {
        (Some((h_great, lo_slot)), _) => to_covering(instance, &prob, &h_great, &lo_slot)?,
        (None, Some(cov)) => cov,
        (None, None) => unreachable!("the search finishes its first dive"),
    };
    let makespan = objective_mc3(instance, &covering)?;
    debug_assert_eq!(makespan as i64, search.best_t);
    let optimal = !search.aborted;
    let lower_bound = if optimal {
        makespan
    } else {
        (target as Time).min(makespan)
    };
    Ok(Mc3Solution {
        covering,
        makespan,
        lower_bound,
        optimal,
        elapsed: start.elapsed(),
        nodes: search.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering2::solve_mc2;

    fn solve(inst: &Instance) -> Mc3Solution {
        solve_mc3(inst, &SolveOptions::default(), None).unwrap()
    }

    #[test]
    fn single_great_covers_lo() {
        let inst = Instance::from_shapes([(1u32, vec![2, 5, 8]), (2, vec![4])]).unwrap();
        let sol = solve(&inst);
        assert_eq!(sol.makespan, 8);
        assert!(sol.optimal);
        assert_eq!(sol.covering.lo_assign[&TaskId(2)], (Some(TaskId(1)), None));
    }

    #[test]
    fn two_level_instances_match_mc2() {
        let inst = Instance::from_shapes([
            (1u32, vec![2, 5]),
            (2, vec![3, 4]),
            (3, vec![3]),
            (4, vec![2]),
            (5, vec![1]),
        ])
        .unwrap();
        let two = solve_mc2(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(solve(&inst).makespan, two.makespan);
    }

    #[test]
    fn empty_and_lo_only() {
        assert_eq!(solve(&Instance::new(vec![]).unwrap()).makespan, 0);
        let los = Instance::from_shapes([(1u32, vec![3]), (2, vec![4])]).unwrap();
        assert_eq!(solve(&los).makespan, 7);
    }

    #[test]
    fn rejects_four_levels() {
        let inst = Instance::from_shapes([(1u32, vec![1, 2, 3, 4])]).unwrap();
        assert!(solve_mc3(&inst, &SolveOptions::default(), None).is_err());
    }
}
