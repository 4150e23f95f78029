//! F-shapes from discrete processing-time distributions.
//!
//! The processing time at level `l` is the `c_l`-quantile of the task's
//! distribution, using the smallest support point whose CDF reaches `c_l`.

use crate::error::{Error, Result};
use crate::model::{FShape, TaskId, Time};

/// Slack used when comparing accumulated probabilities.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<Time>,
    mass: Vec<f64>,
    cdf: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<Time>, mass: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() != mass.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} support points but {} masses",
                support.len(),
                mass.len()
            )));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDistribution(
                "support must be strictly increasing".into(),
            ));
        }
        if mass.iter().any(|&m| !m.is_finite() || m <= 0.0) {
            return Err(Error::InvalidDistribution(
                "masses must be finite and positive".into(),
            ));
        }
        let cdf: Vec<f64> = mass
            .iter()
            .scan(0.0, |acc, &m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        let total = *cdf.last().unwrap();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(DiscreteDistribution { support, mass, cdf })
    }

    /// Builds a distribution from `(time, probability)` pairs in any order.
    pub fn from_pairs(pairs: &[(Time, f64)]) -> Result<Self> {
        let mut pairs = pairs.to_vec();
        pairs.sort_by_key(|&(t, _)| t);
        let (support, mass) = pairs.into_iter().unzip();
        Self::new(support, mass)
    }

    pub fn support(&self) -> &[Time] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `Pr[T <= t]`.
    pub fn cdf(&self, t: Time) -> f64 {
        match self.support.partition_point(|&s| s <= t) {
            0 => 0.0,
            k => self.cdf[k - 1],
        }
    }

    /// Smallest support value `t` with `CDF(t) >= c`, for `c` in `(0, 1]`.
    pub fn quantile(&self, c: f64) -> Result<Time> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidConfidence(format!(
                "confidence {c} outside (0, 1]"
            )));
        }
        let k = self
            .cdf
            .iter()
            .position(|&f| f >= c - PROBABILITY_TOLERANCE)
            .unwrap_or(self.support.len() - 1);
        Ok(self.support[k])
    }
}

/// Strictly increasing confidence levels `0 < c_1 < ... < c_L <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceLevels {
    levels: Vec<f64>,
}

impl ConfidenceLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidConfidence("no levels given".into()));
        }
        if levels.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return Err(Error::InvalidConfidence(
                "levels must lie in (0, 1]".into(),
            ));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfidence(
                "levels must be strictly increasing".into(),
            ));
        }
        Ok(ConfidenceLevels { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Result of deriving an F-shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub shape: FShape,
    /// Criticality asked for.
    pub requested: usize,
    /// Raw quantiles before duplicates were merged.
    pub quantiles: Vec<Time>,
}

impl Derivation {
    /// Whether equal quantiles forced a lower criticality than requested.
    pub fn collapsed(&self) -> bool {
        self.shape.criticality() < self.requested
    }
}

/// Takes the quantiles at `c_1..c_X` and merges equal consecutive values, so
/// the returned shape may have a lower criticality than `criticality`.
pub fn derive_fshape(
    id: impl Into<TaskId>,
    dist: &DiscreteDistribution,
    levels: &ConfidenceLevels,
    criticality: usize,
) -> Result<Derivation> {
    if criticality == 0 || criticality > levels.len() {
        return Err(Error::InvalidConfidence(format!(
            "criticality {criticality} needs levels 1..={criticality}, only {} given",
            levels.len()
        )));
    }
    let quantiles = levels.levels()[..criticality]
        .iter()
        .map(|&c| dist.quantile(c))
        .collect::<Result<Vec<_>>>()?;
    let mut proc = quantiles.clone();
    // quantiles are monotone in c, so equal values are adjacent
    proc.dedup();
    Ok(Derivation {
        shape: FShape::new(id, proc)?,
        requested: criticality,
        quantiles,
    })
}
