use thiserror::Error;

use crate::model::TaskId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("task {0}: processing-time vector is empty")]
    EmptyShape(TaskId),

    #[error("task {task}: processing time at level {level} must be at least 1")]
    ZeroProcessingTime { task: TaskId, level: usize },

    #[error("task {task}: processing times must strictly increase (level {level})")]
    NotIncreasing { task: TaskId, level: usize },

    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),

    #[error("unknown task id {0}")]
    UnknownTask(TaskId),

    #[error("task {0} is missing")]
    MissingTask(TaskId),

    #[error("permutation does not cover the instance: expected {expected} tasks, got {actual}")]
    PermutationSize { expected: usize, actual: usize },

    #[error("schedule is infeasible: tasks {first} and {second} overlap at level {level}")]
    Infeasible {
        first: TaskId,
        second: TaskId,
        level: usize,
    },

    #[error("task {task} has criticality {criticality}, solver supports at most {max}")]
    CriticalityTooHigh {
        task: TaskId,
        criticality: usize,
        max: usize,
    },

    #[error("task {task}: level {level} outside 1..={criticality}")]
    InvalidLevel {
        task: TaskId,
        level: usize,
        criticality: usize,
    },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid confidence levels: {0}")]
    InvalidConfidence(String),

    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid covering: {0}")]
    InvalidCovering(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
