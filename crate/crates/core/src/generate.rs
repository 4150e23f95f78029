//! Seeded random instances.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{FShape, Instance, Time};
use crate::shaping::PROBABILITY_TOLERANCE;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub max_criticality: usize,
    /// Probability of each criticality `1..=max_criticality`.
    pub criticality_split: Vec<f64>,
    /// Inclusive range of `p(1)`.
    pub p1_range: (Time, Time),
    /// Inclusive range of `p(l+1) - p(l)`, one per added level.
    pub prolongation_ranges: Vec<(Time, Time)>,
    pub seed: u64,
}

impl GeneratorConfig {
    /// Two levels, criticalities uniform, `p(1)` in `1..=11`, prolongation in `1..=10`.
    pub fn mc2(n: usize, seed: u64) -> Self {
        GeneratorConfig {
            n,
            max_criticality: 2,
            criticality_split: vec![0.5, 0.5],
            p1_range: (1, 11),
            prolongation_ranges: vec![(1, 10)],
            seed,
        }
    }

    /// Three levels, criticalities uniform, `p(1)` in `1..=11`, both
    /// prolongations in `1..=10`.
    pub fn mc3(n: usize, seed: u64) -> Self {
        GeneratorConfig {
            n,
            max_criticality: 3,
            criticality_split: vec![1.0 / 3.0; 3],
            p1_range: (1, 11),
            prolongation_ranges: vec![(1, 10), (1, 10)],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.max_criticality == 0 {
            return bad("max_criticality must be at least 1".into());
        }
        if self.criticality_split.len() != self.max_criticality {
            return bad(format!(
                "criticality split has {} entries, expected {}",
                self.criticality_split.len(),
                self.max_criticality
            ));
        }
        if self.criticality_split.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return bad("criticality split must be non-negative".into());
        }
        let total: f64 = self.criticality_split.iter().sum();
        if (total - 1.0).abs() > 1e3 * PROBABILITY_TOLERANCE {
            return bad(format!("criticality split sums to {total}, expected 1"));
        }
        if self.prolongation_ranges.len() + 1 < self.max_criticality {
            return bad(format!(
                "{} prolongation ranges given, {} needed",
                self.prolongation_ranges.len(),
                self.max_criticality - 1
            ));
        }
        for &(lo, hi) in std::iter::once(&self.p1_range).chain(&self.prolongation_ranges) {
            if lo < 1 || lo > hi {
                return bad(format!("range ({lo}, {hi}) must satisfy 1 <= lo <= hi"));
            }
        }
        Ok(())
    }
}

/// Draws `n` tasks with ids `1..=n`: the criticality from the split, `p(1)`
/// uniformly from its range and every further level as the previous one
/// plus a uniform prolongation. The same config always gives the same
/// instance.
pub fn generate(config: &GeneratorConfig) -> Result<Instance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let split = WeightedIndex::new(&config.criticality_split)
        .map_err(|e| Error::InvalidConfig(format!("criticality split: {e}")))?;
    let tasks = (1..=config.n)
        .map(|id| {
            let x = split.sample(&mut rng) + 1;
            let mut proc = Vec::with_capacity(x);
            proc.push(rng.gen_range(config.p1_range.0..=config.p1_range.1));
            for &(lo, hi) in &config.prolongation_ranges[..x - 1] {
                let prev = *proc.last().expect("non-empty");
                proc.push(prev + rng.gen_range(lo..=hi));
            }
            FShape::new(id as u32, proc)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(tasks)
}
