use std::time::{Duration, Instant};

/// Limits shared by the exact solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveOptions {
    /// Wall-clock budget; `None` searches to proven optimality.
    pub time_limit: Option<Duration>,
    /// Seeds the randomized restarts of the initial heuristic.
    pub seed: u64,
}

impl SolveOptions {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Cheap deadline check for search loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Deadline {
    at: Option<Instant>,
}

impl Deadline {
    pub fn new(start: Instant, limit: Option<Duration>) -> Self {
        Deadline {
            at: limit.map(|l| start + l),
        }
    }

    pub fn expired(&self) -> bool {
        self.at.is_some_and(|t| Instant::now() >= t)
    }

    /// Time left, if limited.
    pub fn remaining(&self) -> Option<Duration> {
        self.at.map(|t| t.saturating_duration_since(Instant::now()))
    }
}

/// Relative optimality gap `(ub - lb) / ub`, zero for an empty objective.
pub fn relative_gap(upper: u64, lower: u64) -> f64 {
    if upper == 0 || lower >= upper {
        0.0
    } else {
        (upper - lower) as f64 / upper as f64
    }
}
