//! Match-up execution of a static schedule under a realized scenario.
//!
//! Tasks are visited in start order. A task runs only if its start is not
//! earlier than the realized end of every task that actually ran before it;
//! otherwise it is skipped. A skipped task never blocks anything.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, Schedule, TaskId, Time};
use crate::schedule::check_feasibility;

/// Realized criticality level per task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub realized: BTreeMap<TaskId, usize>,
}

impl Scenario {
    /// Checks that every task has exactly one level within `1..=X`.
    pub fn new(instance: &Instance, realized: BTreeMap<TaskId, usize>) -> Result<Self> {
        for (&id, &level) in &realized {
            let t = instance.task(id)?;
            if level == 0 || level > t.criticality() {
                return Err(Error::InvalidLevel {
                    task: id,
                    level,
                    criticality: t.criticality(),
                });
            }
        }
        for id in instance.ids() {
            if !realized.contains_key(&id) {
                return Err(Error::MissingTask(id));
            }
        }
        Ok(Scenario { realized })
    }

    /// Every task runs at its best-case level.
    pub fn nominal(instance: &Instance) -> Self {
        Scenario {
            realized: instance.ids().map(|id| (id, 1)).collect(),
        }
    }

    pub fn level(&self, id: TaskId) -> Result<usize> {
        self.realized.get(&id).copied().ok_or(Error::MissingTask(id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Execution {
    pub task: TaskId,
    pub start: Time,
    pub end: Time,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionTrace {
    /// In start order.
    pub executed: Vec<Execution>,
    pub skipped: BTreeSet<TaskId>,
}

/// One row of a trace export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub task: TaskId,
    pub start: Time,
    /// Realized end for executed tasks; for skipped tasks the end they would
    /// have had at their realized level.
    pub end: Time,
    pub executed: bool,
}

impl ExecutionTrace {
    pub fn is_skipped(&self, id: TaskId) -> bool {
        self.skipped.contains(&id)
    }

    pub fn last_completion(&self) -> Time {
        self.executed.iter().map(|e| e.end).max().unwrap_or(0)
    }

    /// Flat record stream in start order, executed and skipped tasks interleaved.
    pub fn records(
        &self,
        instance: &Instance,
        sched: &Schedule,
        scen: &Scenario,
    ) -> Result<Vec<TraceRecord>> {
        let mut out: Vec<TraceRecord> = self
            .executed
            .iter()
            .map(|e| TraceRecord {
                task: e.task,
                start: e.start,
                end: e.end,
                executed: true,
            })
            .collect();
        for &id in &self.skipped {
            let start = sched.start(id)?;
            let end = start + instance.task(id)?.p(scen.level(id)?);
            out.push(TraceRecord {
                task: id,
                start,
                end,
                executed: false,
            });
        }
        out.sort_by_key(|r| (r.start, r.task));
        Ok(out)
    }
}

/// Runs `sched` under scenario `scen`. The schedule must be feasible.
pub fn simulate(instance: &Instance, sched: &Schedule, scen: &Scenario) -> Result<ExecutionTrace> {
    if let Some(v) = check_feasibility(instance, sched)? {
        return Err(v.into());
    }
    let starts = sched.resolve(instance)?;
    let mut order: Vec<usize> = (0..instance.len()).collect();
    order.sort_by_key(|&k| (starts[k], instance.tasks()[k].id()));

    let mut trace = ExecutionTrace::default();
    let mut busy_until = 0;
    for k in order {
        let t = &instance.tasks()[k];
        let level = scen.level(t.id())?;
        if level == 0 || level > t.criticality() {
            return Err(Error::InvalidLevel {
                task: t.id(),
                level,
                criticality: t.criticality(),
            });
        }
        let s = starts[k];
        if s >= busy_until {
            let end = s + t.p(level);
            trace.executed.push(Execution {
                task: t.id(),
                start: s,
                end,
            });
            busy_until = end;
        } else {
            trace.skipped.insert(t.id());
        }
    }
    Ok(trace)
}

/// Draws a realized level for every task independently.
///
/// `level_probabilities[id][l - 1]` is the probability that task `id` runs
/// at level `l`; each vector must have exactly `X` entries summing to 1.
pub fn sample_scenario(
    instance: &Instance,
    level_probabilities: &BTreeMap<TaskId, Vec<f64>>,
    seed: u64,
) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut realized = BTreeMap::new();
    for t in instance.tasks() {
        let probs = level_probabilities
            .get(&t.id())
            .ok_or(Error::MissingTask(t.id()))?;
        validate_level_probabilities(t.id(), t.criticality(), probs)?;
        let level = if t.criticality() == 1 {
            1
        } else {
            let dist = WeightedIndex::new(probs)
                .map_err(|e| Error::InvalidProbabilities(format!("task {}: {e}", t.id())))?;
            dist.sample(&mut rng) + 1
        };
        realized.insert(t.id(), level);
    }
    Ok(Scenario { realized })
}

pub(crate) fn validate_level_probabilities(id: TaskId, criticality: usize, probs: &[f64]) -> Result<()> {
    if probs.len() != criticality {
        return Err(Error::InvalidProbabilities(format!(
            "task {id}: expected {criticality} entries, got {}",
            probs.len()
        )));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidProbabilities(format!(
            "task {id}: entries must be finite and non-negative"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbabilities(format!(
            "task {id}: entries sum to {sum}, expected 1"
        )));
    }
    Ok(())
}
