//! Exact solver for two criticality levels.
//!
//! Every optimal schedule of a two-level instance can be described by which
//! Lo-task sits under which Hi-task: a Hi-task `i` together with the Lo-tasks
//! it covers forms a block of length `max(p_i(1) + sum p_j(1), p_i(2))`, and
//! blocks (plus uncovered Lo-tasks) can be concatenated in any order. The
//! makespan is therefore the sum of block lengths plus the uncovered work.
//!
//! Writing `cap_i = p_i(2) - p_i(1)` for the room under a Hi-task, the
//! makespan equals `sum p(2)[Hi] + sum p(1)[Lo] - sum_i min(load_i, cap_i)`,
//! so the search maximizes the useful fill of the blocks. That view drives
//! the branch-and-bound below: Lo-tasks are placed largest first, bins with
//! the same residual room are interchangeable, and the fractional fill
//! `min(sum residual, sum min(p, largest residual))` bounds every node.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lp::{LpModel, Row, Sense};
use crate::model::{FShape, Instance, Permutation, TaskId, Time};
use crate::options::{relative_gap, Deadline, SolveOptions};
use crate::transforms::level_sum_lower_bound;

/// Assignment of Lo-tasks to covering Hi-tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mc2Covering {
    /// Every Lo-task id, mapped to its covering Hi-task or `None` when uncovered.
    pub assign: BTreeMap<TaskId, Option<TaskId>>,
    /// Every Hi-task id with its block length.
    pub block_lengths: BTreeMap<TaskId, Time>,
}

/// Summary of one covering block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringBlockInfo {
    pub hi_task: TaskId,
    pub covered: BTreeSet<TaskId>,
    pub length: Time,
    /// The covered Lo-tasks stretch the block beyond the Hi-task's top level.
    pub saturated: bool,
    /// The block length equals the Hi-task's top level.
    pub fully_covering: bool,
}

/// `max(p_hi(1) + sum p_lo(1), p_hi(2))`.
pub fn block_length<'a, I>(hi: &FShape, lo_set: I) -> Result<Time>
where
    I: IntoIterator<Item = &'a FShape>,
{
    if hi.criticality() != 2 {
        return Err(Error::InvalidCovering(format!(
            "block leader {} has criticality {}, expected 2",
            hi.id(),
            hi.criticality()
        )));
    }
    let mut sum = hi.p(1);
    for lo in lo_set {
        if lo.criticality() != 1 {
            return Err(Error::InvalidCovering(format!(
                "covered task {} has criticality {}, expected 1",
                lo.id(),
                lo.criticality()
            )));
        }
        sum += lo.p(1);
    }
    Ok(sum.max(hi.p(2)))
}

impl Mc2Covering {
    /// Validates the assignment and computes block lengths.
    ///
    /// Lo-tasks missing from `assign` are treated as uncovered.
    pub fn new(instance: &Instance, mut assign: BTreeMap<TaskId, Option<TaskId>>) -> Result<Self> {
        instance.ensure_max_criticality(2)?;
        for (&lo, &hi) in &assign {
            if instance.task(lo)?.criticality() != 1 {
                return Err(Error::InvalidCovering(format!("{lo} is not a Lo-task")));
            }
            if let Some(hi) = hi {
                if instance.task(hi)?.criticality() != 2 {
                    return Err(Error::InvalidCovering(format!("{hi} is not a Hi-task")));
                }
            }
        }
        for t in instance.tasks().iter().filter(|t| t.criticality() == 1) {
            assign.entry(t.id()).or_insert(None);
        }
        let mut loads: BTreeMap<TaskId, Time> = instance
            .tasks()
            .iter()
            .filter(|t| t.criticality() == 2)
            .map(|t| (t.id(), t.p(1)))
            .collect();
        for (&lo, hi) in &assign {
            if let Some(hi) = hi {
                *loads.get_mut(hi).expect("checked above") += instance.task(lo)?.p(1);
            }
        }
        let block_lengths = loads
            .into_iter()
            .map(|(id, load)| Ok((id, load.max(instance.task(id)?.p(2)))))
            .collect::<Result<_>>()?;
        Ok(Mc2Covering {
            assign,
            block_lengths,
        })
    }

    /// Reads the blocks off a left-shifted order: Lo-tasks before the first
    /// Hi-task are uncovered, every other Lo-task belongs to the latest Hi-task.
    pub fn from_permutation(instance: &Instance, perm: &Permutation) -> Result<Self> {
        instance.ensure_max_criticality(2)?;
        let order = perm.to_indices(instance)?;
        let mut current = None;
        let mut assign = BTreeMap::new();
        for k in order {
            let t = &instance.tasks()[k];
            match t.criticality() {
                2 => current = Some(t.id()),
                _ => {
                    assign.insert(t.id(), current);
                }
            }
        }
        Mc2Covering::new(instance, assign)
    }

    pub fn blocks(&self, instance: &Instance) -> Result<Vec<CoveringBlockInfo>> {
        let mut covered: BTreeMap<TaskId, BTreeSet<TaskId>> = self
            .block_lengths
            .keys()
            .map(|&id| (id, BTreeSet::new()))
            .collect();
        for (&lo, hi) in &self.assign {
            if let Some(hi) = hi {
                covered
                    .get_mut(hi)
                    .ok_or_else(|| Error::InvalidCovering(format!("unknown block {hi}")))?
                    .insert(lo);
            }
        }
        covered
            .into_iter()
            .map(|(hi, covered)| {
                let leader = instance.task(hi)?;
                let lo: Vec<&FShape> = covered
                    .iter()
                    .map(|&id| instance.task(id))
                    .collect::<Result<_>>()?;
                let length = block_length(leader, lo)?;
                Ok(CoveringBlockInfo {
                    hi_task: hi,
                    covered,
                    length,
                    saturated: length > leader.p(2),
                    fully_covering: length == leader.p(2),
                })
            })
            .collect()
    }

    pub fn uncovered(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.assign
            .iter()
            .filter(|(_, hi)| hi.is_none())
            .map(|(&lo, _)| lo)
    }
}

/// Sum of block lengths plus the uncovered Lo work, recomputed from the assignment.
pub fn objective_mc2(instance: &Instance, cov: &Mc2Covering) -> Result<Time> {
    let blocks: Time = cov.blocks(instance)?.iter().map(|b| b.length).sum();
    let uncovered = cov
        .uncovered()
        .map(|id| Ok(instance.task(id)?.p(1)))
        .sum::<Result<Time>>()?;
    Ok(blocks + uncovered)
}

/// Task order realizing a covering.
///
/// Uncovered Lo-tasks go first so that no block accidentally covers them,
/// then each block in ascending Hi id: the Hi-task followed by its Lo-tasks
/// in ascending id.
pub fn rebuild_schedule_mc2(instance: &Instance, cov: &Mc2Covering) -> Result<Permutation> {
    let mut order: Vec<TaskId> = cov.uncovered().collect();
    for block in cov.blocks(instance)? {
        order.push(block.hi_task);
        order.extend(block.covered.iter().copied());
    }
    let perm = Permutation::new(order)?;
    perm.to_indices(instance)?;
    Ok(perm)
}

/// Outcome of [`solve_mc2`].
#[derive(Debug, Clone)]
pub struct Mc2Solution {
    pub covering: Mc2Covering,
    pub makespan: Time,
    /// Proven lower bound; equals `makespan` when `optimal`.
    pub lower_bound: Time,
    pub optimal: bool,
    pub elapsed: Duration,
    pub nodes: u64,
}

impl Mc2Solution {
    /// Relative gap between the incumbent and the proven bound.
    pub fn gap(&self) -> f64 {
        relative_gap(self.makespan, self.lower_bound)
    }
}

const MEMO_LIMIT: usize = 1 << 19;
const GREEDY_RESTARTS: usize = 16;

/// Residual-room bins for the fill search. Bin `k` is the Hi-task `his[k]`.
struct FillProblem {
    /// Lo-task instance indices, largest `p(1)` first (ties by id).
    los: Vec<usize>,
    sizes: Vec<i64>,
    /// `sizes[k..].sum()`.
    suffix: Vec<i64>,
    caps: Vec<i64>,
}

impl FillProblem {
    fn new(instance: &Instance, his: &[usize], los: &[usize]) -> Self {
        let tasks = instance.tasks();
        let mut los = los.to_vec();
        los.sort_by_key(|&k| (std::cmp::Reverse(tasks[k].p(1)), tasks[k].id()));
        let sizes: Vec<i64> = los.iter().map(|&k| tasks[k].p(1) as i64).collect();
        let mut suffix = vec![0; sizes.len() + 1];
        for k in (0..sizes.len()).rev() {
            suffix[k] = suffix[k + 1] + sizes[k];
        }
        let caps = his
            .iter()
            .map(|&k| (tasks[k].p(2) - tasks[k].p(1)) as i64)
            .collect();
        FillProblem {
            los,
            sizes,
            suffix,
            caps,
        }
    }

    /// Upper bound on the fill the items from `k` on can add.
    fn remaining_bound(&self, k: usize, residual: &[i64]) -> i64 {
        let mut room = 0;
        let mut rmax = 0;
        for &r in residual {
            if r > 0 {
                room += r;
                rmax = rmax.max(r);
            }
        }
        if room == 0 {
            return 0;
        }
        // items are sorted descending: the first `big` of them exceed rmax
        let big = k + self.sizes[k..].partition_point(|&p| p > rmax);
        let capped = (big - k) as i64 * rmax + self.suffix[big];
        room.min(capped)
    }

    fn fill_of(&self, assign: &[Option<usize>]) -> i64 {
        let mut load = vec![0; self.caps.len()];
        for (k, a) in assign.iter().enumerate() {
            if let Some(b) = a {
                load[*b] += self.sizes[k];
            }
        }
        load.iter().zip(&self.caps).map(|(l, c)| *l.min(c)).sum()
    }

    /// Best-fit decreasing; with `noise`, sometimes takes the second choice.
    fn greedy(&self, rng: Option<&mut ChaCha8Rng>) -> Vec<Option<usize>> {
        let mut rng = rng;
        let mut residual = self.caps.clone();
        let mut assign = vec![None; self.sizes.len()];
        if residual.is_empty() {
            return assign;
        }
        for (k, &p) in self.sizes.iter().enumerate() {
            // rank bins: fitting bins by smallest residual, then others by largest residual
            let mut ranked: Vec<usize> = (0..residual.len()).collect();
            ranked.sort_by_key(|&b| {
                let r = residual[b];
                if r >= p {
                    (0, r, b)
                } else {
                    (1, -r, b)
                }
            });
            let second = ranked.len() > 1 && rng.as_deref_mut().is_some_and(|r| r.gen_bool(0.25));
            let pick = if second { ranked[1] } else { ranked[0] };
            residual[pick] -= p;
            assign[k] = Some(pick);
        }
        assign
    }
}

struct FillSearch<'a> {
    prob: &'a FillProblem,
    residual: Vec<i64>,
    current: Vec<Option<usize>>,
    best: Vec<Option<usize>>,
    best_fill: i64,
    target: i64,
    memo: HashMap<(u32, Vec<i64>), i64>,
    deadline: Deadline,
    nodes: u64,
    aborted: bool,
}

impl FillSearch<'_> {
    fn run(&mut self, k: usize, fill: i64) {
        self.nodes += 1;
        if self.nodes & 0x3ff == 0 && self.deadline.expired() {
            self.aborted = true;
        }
        if self.aborted || self.best_fill >= self.target {
            return;
        }
        let prob = self.prob;
        if k == prob.sizes.len() {
            if fill > self.best_fill {
                self.best_fill = fill;
                self.best.clone_from(&self.current);
            }
            return;
        }
        if fill + prob.remaining_bound(k, &self.residual) <= self.best_fill {
            return;
        }

        let mut key: Vec<i64> = self.residual.iter().copied().filter(|&r| r > 0).collect();
        key.sort_unstable();
        let full = self.memo.len() >= MEMO_LIMIT;
        match self.memo.entry((k as u32, key)) {
            Entry::Occupied(mut e) => {
                if *e.get() >= fill {
                    return;
                }
                e.insert(fill);
            }
            Entry::Vacant(e) => {
                if !full {
                    e.insert(fill);
                }
            }
        }

        let p = prob.sizes[k];
        for b in self.children(p) {
            let gain = p.min(self.residual[b].max(0));
            self.residual[b] -= p;
            self.current[k] = Some(b);
            self.run(k + 1, fill + gain);
            self.residual[b] += p;
            if self.aborted || self.best_fill >= self.target {
                return;
            }
        }
        self.current[k] = None;
    }

    /// One bin per distinct positive residual, largest first, then one
    /// saturated bin. A bin whose residual equals the item exactly dominates.
    fn children(&self, p: i64) -> Vec<usize> {
        if let Some(b) = self.residual.iter().position(|&r| r == p) {
            return vec![b];
        }
        let mut by_residual: BTreeMap<i64, usize> = BTreeMap::new();
        let mut saturated = None;
        for (b, &r) in self.residual.iter().enumerate() {
            if r > 0 {
                by_residual.entry(r).or_insert(b);
            } else if saturated.is_none() {
                saturated = Some(b);
            }
        }
        by_residual.values().rev().copied().chain(saturated).collect()
    }
}

/// Solves a two-level instance by branch-and-bound over Lo-to-Hi assignments.
///
/// With no time limit the result is optimal and deterministic. When the
/// limit expires the best assignment found is returned together with the
/// root bound.
pub fn solve_mc2(instance: &Instance, opts: &SolveOptions) -> Result<Mc2Solution> {
    instance.ensure_max_criticality(2)?;
    let start = Instant::now();
    let tasks = instance.tasks();
    let his = instance.indices_with_criticality(2);
    let los = instance.indices_with_criticality(1);
    let prob = FillProblem::new(instance, &his, &los);

    let base: i64 = his.iter().map(|&k| tasks[k].p(2) as i64).sum::<i64>() + prob.suffix[0];
    let root_bound = prob.remaining_bound(0, &prob.caps);

    let mut best = prob.greedy(None);
    let mut best_fill = prob.fill_of(&best);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..GREEDY_RESTARTS {
        if best_fill >= root_bound {
            break;
        }
        let cand = prob.greedy(Some(&mut rng));
        let fill = prob.fill_of(&cand);
        if fill > best_fill {
            best_fill = fill;
            best = cand;
        }
    }

    let mut search = FillSearch {
        prob: &prob,
        residual: prob.caps.clone(),
        current: vec![None; prob.sizes.len()],
        best,
        best_fill,
        target: root_bound,
        memo: HashMap::new(),
        deadline: Deadline::new(start, opts.time_limit),
        nodes: 0,
        aborted: false,
    };
    if search.best_fill < root_bound && !his.is_empty() {
        search.run(0, 0);
    }

    let makespan = (base - search.best_fill) as Time;
    let optimal = !search.aborted;
    let lower_bound = if optimal {
        makespan
    } else {
        ((base - root_bound) as Time).max(level_sum_lower_bound(instance))
    };
    debug_assert!(lower_bound <= makespan);

    let assign = search
        .best
        .iter()
        .enumerate()
        .map(|(k, b)| (tasks[prob.los[k]].id(), b.map(|b| tasks[his[b]].id())))
        .collect();
    let covering = Mc2Covering::new(instance, assign)?;
    debug_assert_eq!(objective_mc2(instance, &covering).ok(), Some(makespan));

    Ok(Mc2Solution {
        covering,
        makespan,
        lower_bound,
        optimal,
        elapsed: start.elapsed(),
        nodes: search.nodes,
    })
}

/// The covering model as an integer program in LP format: minimize the block
/// lengths plus uncovered work subject to the two block-length envelopes and
/// at most one cover per Lo-task.
pub fn export_lp_mc2(instance: &Instance) -> Result<String> {
    Ok(lp_model_mc2(instance)?.to_lp_string())
}

pub(crate) fn lp_model_mc2(instance: &Instance) -> Result<LpModel> {
    instance.ensure_max_criticality(2)?;
    let his: Vec<&FShape> = instance.tasks().iter().filter(|t| t.criticality() == 2).collect();
    let los: Vec<&FShape> = instance.tasks().iter().filter(|t| t.criticality() == 1).collect();
    let b = |i: &FShape| format!("B_{}", i.id());
    let x = |i: &FShape, j: &FShape| format!("x_{}_{}", i.id(), j.id());

    let mut m = LpModel {
        comment: vec![
            "covering model, two criticality levels".into(),
            format!("{} Hi-tasks, {} Lo-tasks", his.len(), los.len()),
        ],
        ..Default::default()
    };
    m.objective_constant = los.iter().map(|j| j.p(1) as i64).sum();
    for i in &his {
        m.objective.push((1, b(i)));
    }
    for i in &his {
        for j in &los {
            m.objective.push((-(j.p(1) as i64), x(i, j)));
        }
    }
    for i in &his {
        let mut terms = vec![(1, b(i))];
        terms.extend(los.iter().map(|j| (-(j.p(1) as i64), x(i, j))));
        m.rows.push(Row {
            name: format!("c2_{}", i.id()),
            terms,
            sense: Sense::Ge,
            rhs: i.p(1) as i64,
        });
    }
    for i in &his {
        m.rows.push(Row {
            name: format!("c3_{}", i.id()),
            terms: vec![(1, b(i))],
            sense: Sense::Ge,
            rhs: i.p(2) as i64,
        });
    }
    if !his.is_empty() {
        for j in &los {
            m.rows.push(Row {
                name: format!("c4_{}", j.id()),
                terms: his.iter().map(|i| (1, x(i, j))).collect(),
                sense: Sense::Le,
                rhs: 1,
            });
        }
    }
    m.generals = his.iter().map(|i| b(i)).collect();
    m.binaries = his
        .iter()
        .flat_map(|i| los.iter().map(move |j| x(i, j)))
        .collect();
    Ok(m)
}
