//! Task, instance and schedule types.
//!
//! Times are natural numbers throughout. A task of criticality `X` carries
//! `X` strictly increasing processing times, one per criticality level; level
//! indices are 1-based to match the usual notation `p(1) < ... < p(X)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// Processing and start times.
pub type Time = u64;

/// Opaque task identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for TaskId {
    fn from(v: u32) -> Self {
        TaskId(v)
    }
}

/// A mixed-criticality task with one processing time per criticality level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FShape {
    id: TaskId,
    proc: Vec<Time>,
}

impl FShape {
    /// Builds a task; its criticality is the length of `proc`.
    pub fn new(id: impl Into<TaskId>, proc: Vec<Time>) -> Result<Self> {
        let id = id.into();
        if proc.is_empty() {
            return Err(Error::EmptyShape(id));
        }
        if proc[0] == 0 {
            return Err(Error::ZeroProcessingTime { task: id, level: 1 });
        }
        for (k, w) in proc.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::NotIncreasing {
                    task: id,
                    level: k + 2,
                });
            }
        }
        Ok(FShape { id, proc })
    }

    pub fn id(&self) -> TaskId {
        self.id
    }

    pub fn criticality(&self) -> usize {
        self.proc.len()
    }

    /// Processing time at `level` (1-based). Panics if the level exceeds the criticality.
    #[inline]
    pub fn p(&self, level: usize) -> Time {
        self.proc[level - 1]
    }

    /// Processing time at the task's own top level (its WCET).
    #[inline]
    pub fn top(&self) -> Time {
        *self.proc.last().expect("non-empty by construction")
    }

    pub fn proc(&self) -> &[Time] {
        &self.proc
    }
}

/// A set of tasks with distinct ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    tasks: Vec<FShape>,
    index: HashMap<TaskId, usize>,
    max_criticality: usize,
}

impl Instance {
    pub fn new(tasks: Vec<FShape>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tasks.len());
        for (k, t) in tasks.iter().enumerate() {
            if index.insert(t.id(), k).is_some() {
                return Err(Error::DuplicateTask(t.id()));
            }
        }
        let max_criticality = tasks.iter().map(FShape::criticality).max().unwrap_or(0);
        Ok(Instance {
            tasks,
            index,
            max_criticality,
        })
    }

    /// Convenience constructor from `(id, proc)` pairs.
    pub fn from_shapes<I, T>(shapes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, Vec<Time>)>,
        T: Into<TaskId>,
    {
        let tasks = shapes
            .into_iter()
            .map(|(id, proc)| FShape::new(id, proc))
            .collect::<Result<Vec<_>>>()?;
        Instance::new(tasks)
    }

    pub fn tasks(&self) -> &[FShape] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Highest criticality present (0 for an empty instance).
    pub fn max_criticality(&self) -> usize {
        self.max_criticality
    }

    pub fn index_of(&self, id: TaskId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownTask(id))
    }

    pub fn task(&self, id: TaskId) -> Result<&FShape> {
        Ok(&self.tasks[self.index_of(id)?])
    }

    pub fn ids(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.tasks.iter().map(FShape::id)
    }

    /// Task indices of a given criticality, in instance order.
    pub fn indices_with_criticality(&self, x: usize) -> Vec<usize> {
        (0..self.tasks.len())
            .filter(|&k| self.tasks[k].criticality() == x)
            .collect()
    }

    pub(crate) fn ensure_max_criticality(&self, max: usize) -> Result<()> {
        match self.tasks.iter().find(|t| t.criticality() > max) {
            Some(t) => Err(Error::CriticalityTooHigh {
                task: t.id(),
                criticality: t.criticality(),
                max,
            }),
            None => Ok(()),
        }
    }
}

/// A task order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    order: Vec<TaskId>,
}

impl Permutation {
    /// Rejects repeated ids; coverage of a particular instance is checked on use.
    pub fn new(order: Vec<TaskId>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(order.len());
        for &id in &order {
            if !seen.insert(id) {
                return Err(Error::DuplicateTask(id));
            }
        }
        Ok(Permutation { order })
    }

    /// The identity order of an instance.
    pub fn identity(instance: &Instance) -> Self {
        Permutation {
            order: instance.ids().collect(),
        }
    }

    pub fn order(&self) -> &[TaskId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Resolves the order to instance indices, checking it is a bijection.
    pub fn to_indices(&self, instance: &Instance) -> Result<Vec<usize>> {
        if self.order.len() != instance.len() {
            // report the first offending id when there is one
            for &id in &self.order {
                instance.index_of(id)?;
            }
            return Err(Error::PermutationSize {
                expected: instance.len(),
                actual: self.order.len(),
            });
        }
        self.order.iter().map(|&id| instance.index_of(id)).collect()
    }
}

impl From<Permutation> for Vec<TaskId> {
    fn from(p: Permutation) -> Self {
        p.order
    }
}

/// Start times per task. May be infeasible until checked.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schedule {
    pub starts: BTreeMap<TaskId, Time>,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn start(&self, id: TaskId) -> Result<Time> {
        self.starts.get(&id).copied().ok_or(Error::MissingTask(id))
    }

    pub fn set(&mut self, id: TaskId, start: Time) {
        self.starts.insert(id, start);
    }

    /// Start times in instance-index order.
    pub(crate) fn resolve(&self, instance: &Instance) -> Result<Vec<Time>> {
        instance.tasks().iter().map(|t| self.start(t.id())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_invariants() {
        assert!(FShape::new(1, vec![3, 6]).is_ok());
        assert_eq!(FShape::new(1, vec![]), Err(Error::EmptyShape(TaskId(1))));
        assert!(matches!(
            FShape::new(1, vec![0, 2]),
            Err(Error::ZeroProcessingTime { level: 1, .. })
        ));
        assert!(matches!(
            FShape::new(1, vec![3, 3]),
            Err(Error::NotIncreasing { level: 2, .. })
        ));
        assert!(matches!(
            FShape::new(1, vec![2, 5, 4]),
            Err(Error::NotIncreasing { level: 3, .. })
        ));
    }

    #[test]
    fn instance_rejects_duplicates() {
        let err = Instance::from_shapes([(1u32, vec![1]), (1, vec![2])]).unwrap_err();
        assert_eq!(err, Error::DuplicateTask(TaskId(1)));
    }

    #[test]
    fn max_criticality_tracks_tasks() {
        let inst = Instance::from_shapes([(1u32, vec![1]), (2, vec![1, 2, 3])]).unwrap();
        assert_eq!(inst.max_criticality(), 3);
        assert_eq!(Instance::new(vec![]).unwrap().max_criticality(), 0);
    }

    #[test]
    fn permutation_resolution() {
        let inst = Instance::from_shapes([(1u32, vec![1]), (2, vec![2])]).unwrap();
        let p = Permutation::new(vec![TaskId(2), TaskId(1)]).unwrap();
        assert_eq!(p.to_indices(&inst).unwrap(), vec![1, 0]);
        let bad = Permutation::new(vec![TaskId(2), TaskId(7)]).unwrap();
        assert_eq!(bad.to_indices(&inst), Err(Error::UnknownTask(TaskId(7))));
        let short = Permutation::new(vec![TaskId(2)]).unwrap();
        assert!(matches!(
            short.to_indices(&inst),
            Err(Error::PermutationSize { .. })
        ));
        assert!(Permutation::new(vec![TaskId(1), TaskId(1)]).is_err());
    }
}
