//! Two-stage heuristic for three levels built on the exact two-level solver.
//!
//! Stage 1 solves the `2-` restriction, which fixes the blocks formed at
//! levels 1 and 2 and gives `lb-`. Stage 2 turns those blocks into a new
//! two-level instance in which Great-led blocks may cover the others at
//! level 3, and solves it again.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use super::{objective_mc3, rebuild_schedule_mc3, LoSlot, Mc3Covering};
use crate::covering2::solve_mc2;
use crate::error::Result;
use crate::model::{FShape, Instance, Permutation, TaskId, Time};
use crate::options::{Deadline, SolveOptions};
use crate::schedule::{left_shift_indices, TightGraph};
use crate::transforms::{restrict, RestrictionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Certificate {
    None,
    /// Some critical path uses levels 1 and 2 only, and the makespan equals `lb-`.
    CriticalPathLevels12,
    /// Every Lo-task lies within level 2 of a more critical task, and the
    /// makespan equals `lb+`.
    AllLoFullyCovered,
}

impl Certificate {
    pub fn is_some(&self) -> bool {
        *self != Certificate::None
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Certificate::None => "none",
            Certificate::CriticalPathLevels12 => "critical_path_levels_1_2",
            Certificate::AllLoFullyCovered => "all_lo_fully_covered",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BottomUpResult {
    pub permutation: Permutation,
    pub makespan: Time,
    /// Lower bound from stage 1; the `2-` optimum unless stage 1 timed out.
    pub lb_minus: Time,
    /// Lower bound from the `2+` restriction, when it was computed.
    pub lb_plus: Option<Time>,
    pub certificate: Certificate,
    pub covering: Mc3Covering,
    /// A stage hit the time limit, so `lb_minus` may be weaker than the optimum.
    pub timed_out: bool,
    pub elapsed: Duration,
}

/// Which sufficient optimality conditions hold for a left-shifted order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimalityConditions {
    /// Some critical path runs through levels 1 and 2 only.
    pub critical_path_levels_1_2: bool,
    /// Every Lo-task starts no earlier than the level-1 end and finishes no
    /// later than the level-2 end of some task of criticality at least 2.
    pub all_lo_fully_covered: bool,
}

impl OptimalityConditions {
    pub fn any(&self) -> bool {
        self.critical_path_levels_1_2 || self.all_lo_fully_covered
    }
}

/// Checks both conditions on `left_shift(perm)`. Condition 1 searches over
/// all critical paths, not only the canonical one.
pub fn check_optimality_conditions(instance: &Instance, perm: &Permutation) -> Result<OptimalityConditions> {
    let order = perm.to_indices(instance)?;
    let graph = TightGraph::build(instance, &order);
    let critical_path_levels_1_2 = graph.has_path_within(instance, &order, 2);

    let tasks = instance.tasks();
    let starts = left_shift_indices(instance, &order);
    let all_lo_fully_covered = tasks.iter().enumerate().all(|(k, lo)| {
        lo.criticality() != 1
            || tasks.iter().enumerate().any(|(i, t)| {
                t.criticality() >= 2
                    && starts[i] + t.p(1) <= starts[k]
                    && starts[k] + lo.p(1) <= starts[i] + t.p(2)
            })
    });
    Ok(OptimalityConditions {
        critical_path_levels_1_2,
        all_lo_fully_covered,
    })
}

/// One stage-1 block: a Hi- or Great-task with the Lo-tasks it covers.
struct Block {
    leader: TaskId,
    length: Time,
    members: Vec<TaskId>,
}

/// Runs both stages and composes a covering of the original instance.
///
/// Lo-tasks left uncovered by stage 1 are added to the block whose length
/// grows least (ties to the lowest leader id); with no blocks they enter
/// stage 2 as Lo-tasks themselves. A certificate is issued only when a
/// sufficient condition holds and the makespan meets the matching proven
/// lower bound.
pub fn bottom_up(instance: &Instance, opts: &SolveOptions) -> Result<BottomUpResult> {
    instance.ensure_max_criticality(3)?;
    let start = Instant::now();
    let deadline = Deadline::new(start, opts.time_limit);
    let sub = |deadline: &Deadline| SolveOptions {
        time_limit: deadline.remaining(),
        ..*opts
    };

    let minus = restrict(instance, RestrictionKind::minus(2));
    let stage1 = solve_mc2(&minus, &sub(&deadline))?;
    let mut timed_out = !stage1.optimal;
    let lb_minus = stage1.lower_bound;

    let mut blocks: Vec<Block> = stage1
        .covering
        .blocks(&minus)?
        .into_iter()
        .map(|b| Block {
            leader: b.hi_task,
            length: b.length,
            members: b.covered.into_iter().collect(),
        })
        .collect();
    let mut pass_through = Vec::new();
    for lo in stage1.covering.uncovered() {
        let p = instance.task(lo)?.p(1);
        let mut pick: Option<(Time, usize)> = None;
        for (b, block) in blocks.iter().enumerate() {
            let leader = minus.task(block.leader)?;
            let level1: Time = leader.p(1)
                + block
                    .members
                    .iter()
                    .map(|&m| Ok(instance.task(m)?.p(1)))
                    .sum::<Result<Time>>()?;
            let grown = (level1 + p).max(leader.p(2));
            let inc = grown - block.length;
            if pick.is_none_or(|(best, _)| inc < best) {
                pick = Some((inc, b));
            }
        }
        match pick {
            Some((inc, b)) => {
                blocks[b].length += inc;
                blocks[b].members.push(lo);
            }
            None => pass_through.push(lo),
        }
    }

    let mut constant = 0;
    let mut stage2_tasks = Vec::new();
    for block in &blocks {
        let leader = instance.task(block.leader)?;
        if leader.criticality() == 3 {
            if block.length < leader.p(3) {
                stage2_tasks.push(FShape::new(block.leader, vec![block.length, leader.p(3)])?);
            } else {
                constant += block.length;
            }
        } else {
            stage2_tasks.push(FShape::new(block.leader, vec![block.length])?);
        }
    }
    for &lo in &pass_through {
        stage2_tasks.push(FShape::new(lo, vec![instance.task(lo)?.p(1)])?);
    }
    let stage2_instance = Instance::new(stage2_tasks)?;
    let stage2 = solve_mc2(&stage2_instance, &sub(&deadline))?;
    timed_out |= !stage2.optimal;
    let cover2 = &stage2.covering.assign;

    let mut hi_assign: BTreeMap<TaskId, Option<TaskId>> = BTreeMap::new();
    let mut lo_assign: BTreeMap<TaskId, LoSlot> = BTreeMap::new();
    for block in &blocks {
        if instance.task(block.leader)?.criticality() == 2 {
            hi_assign.insert(block.leader, cover2.get(&block.leader).copied().flatten());
        }
    }
    for block in &blocks {
        let slot = if instance.task(block.leader)?.criticality() == 3 {
            (Some(block.leader), None)
        } else {
            (hi_assign[&block.leader], Some(block.leader))
        };
        for &m in &block.members {
            lo_assign.insert(m, slot);
        }
    }
    for &lo in &pass_through {
        lo_assign.insert(lo, (cover2.get(&lo).copied().flatten(), None));
    }
    let covering = Mc3Covering::new(instance, lo_assign, hi_assign)?;
    let makespan = objective_mc3(instance, &covering)?;
    debug_assert!(makespan <= stage2.makespan + constant);
    let permutation = rebuild_schedule_mc3(instance, &covering)?;

    let conditions = check_optimality_conditions(instance, &permutation)?;
    let mut certificate = Certificate::None;
    let mut lb_plus = None;
    if conditions.critical_path_levels_1_2 && makespan == lb_minus {
        certificate = Certificate::CriticalPathLevels12;
    } else if conditions.all_lo_fully_covered {
        let plus = restrict(instance, RestrictionKind::plus(2));
        let sol = solve_mc2(&plus, &sub(&deadline))?;
        timed_out |= !sol.optimal;
        lb_plus = Some(sol.lower_bound);
        if makespan == sol.lower_bound {
            certificate = Certificate::AllLoFullyCovered;
        }
    }

    Ok(BottomUpResult {
        permutation,
        makespan,
        lb_minus,
        lb_plus,
        certificate,
        covering,
        timed_out,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::cmax;

    #[test]
    fn conditions_on_small_orders() {
        let los = Instance::from_shapes([(1u32, vec![3]), (2, vec![4])]).unwrap();
        let c = check_optimality_conditions(&los, &Permutation::identity(&los)).unwrap();
        assert!(c.critical_path_levels_1_2);

        let great = Instance::from_shapes([(1u32, vec![2, 5, 8])]).unwrap();
        let c = check_optimality_conditions(&great, &Permutation::identity(&great)).unwrap();
        assert!(!c.critical_path_levels_1_2);
        assert!(c.all_lo_fully_covered);
    }

    #[test]
    fn no_great_tasks_matches_mc2() {
        let inst = Instance::from_shapes([
            (1u32, vec![2, 5]),
            (2, vec![3, 4]),
            (3, vec![3]),
            (4, vec![2]),
            (5, vec![1]),
        ])
        .unwrap();
        let r = bottom_up(&inst, &SolveOptions::default()).unwrap();
        let two = solve_mc2(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(r.makespan, two.makespan);
        assert_eq!(r.lb_minus, two.makespan);
        assert!(r.certificate.is_some());
        assert_eq!(cmax(&inst, &r.permutation).unwrap(), r.makespan);
    }

    #[test]
    fn fully_covered_by_greats() {
        // everything fits under level 2 of the two Great-tasks
        let inst = Instance::from_shapes([
            (1u32, vec![2, 9, 12]),
            (2, vec![3, 10, 11]),
            (3, vec![4]),
            (4, vec![5]),
            (5, vec![1, 3]),
        ])
        .unwrap();
        let r = bottom_up(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(r.makespan, 23);
        assert_eq!(r.certificate, Certificate::AllLoFullyCovered);
        assert_eq!(r.lb_plus, Some(23));
        assert_eq!(cmax(&inst, &r.permutation).unwrap(), 23);
    }

    #[test]
    fn pass_through_lo_tasks() {
        let inst = Instance::from_shapes([(1u32, vec![4]), (2, vec![3])]).unwrap();
        let r = bottom_up(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(r.makespan, 7);
        assert_eq!(r.certificate, Certificate::CriticalPathLevels12);
    }
}
