//! Empirical checks of the two global-convergence conditions for a random
//! search: the best-fitness sequence never increases, and the probability
//! that the best point lies in the optimality region `{x : f(x) < θ + ε}`
//! accumulates toward one.
//!
//! The second condition cannot be verified on a finite budget. What is
//! estimated here is the finite-horizon hit fraction over independent
//! replicas, which is evidence for the limit and never a proof of it.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::engine::{self, read_records, write_records, BaParams, RunTrace, SwarmState};
use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::parallel;

/// Optimality region definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceTarget {
    /// Essential infimum of the objective; `-inf` switches to the `level` branch.
    pub theta: f64,
    pub epsilon: f64,
    /// Threshold used only when `theta` is `-inf`; must be negative.
    pub level: Option<f64>,
}

impl Default for ConvergenceTarget {
    fn default() -> Self {
        Self {
            theta: 0.0,
            epsilon: 1e-2,
            level: None,
        }
    }
}

impl ConvergenceTarget {
    pub fn new(theta: f64, epsilon: f64) -> Self {
        Self {
            theta,
            epsilon,
            level: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.theta.is_nan() || self.theta == f64::INFINITY {
            return Err(Error::invalid(
                "theta",
                format!("must be finite or -inf, got {}", self.theta),
            ));
        }
        if self.theta == f64::NEG_INFINITY {
            match self.level {
                Some(lv) if lv < 0.0 => {}
                _ => {
                    return Err(Error::invalid(
                        "level",
                        "unbounded objectives need a negative level",
                    ))
                }
            }
        }
        Ok(())
    }

    /// Whether a fitness value lies in the optimality region.
    pub fn hits(&self, fitness: f64) -> bool {
        if self.theta == f64::NEG_INFINITY {
            self.level.is_some_and(|lv| fitness < lv)
        } else {
            fitness < self.theta + self.epsilon
        }
    }
}

/// Outcome of [`check_monotone`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Pass,
    /// `index` is the first position whose value exceeds its predecessor.
    Fail {
        index: usize,
    },
}

impl Monotonicity {
    pub fn passed(self) -> bool {
        self == Monotonicity::Pass
    }
}

pub fn check_monotone_values(values: &[f64]) -> Monotonicity {
    match values.windows(2).position(|w| !(w[1] <= w[0])) {
        Some(i) => Monotonicity::Fail { index: i + 1 },
        None => Monotonicity::Pass,
    }
}

/// Checks that the trace's best-fitness column never increases.
pub fn check_monotone(trace: &RunTrace) -> Monotonicity {
    check_monotone_values(&trace.best_fitness_column())
}

/// Whether the swarm's tracked best lies in the optimality region.
pub fn optimal_state_hit(swarm: &SwarmState, target: &ConvergenceTarget) -> bool {
    target.hits(swarm.best_fitness)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub t: u64,
    pub hit_fraction: f64,
}

pub const CURVE_HEADER: &str = "t,hit_fraction";

#[derive(Debug, Clone, PartialEq)]
pub struct HitProbabilityCurve {
    pub records: Vec<HitRecord>,
    pub replicas: usize,
    /// Per replica, the first iteration whose best fitness hits the target.
    pub first_hits: Vec<Option<u64>>,
    pub target: ConvergenceTarget,
}

impl HitProbabilityCurve {
    /// Builds the curve from the best-fitness columns of each replica.
    pub fn from_best_columns(columns: &[Vec<f64>], target: ConvergenceTarget) -> Self {
        let replicas = columns.len();
        let first_hits: Vec<Option<u64>> = columns
            .iter()
            .map(|col| col.iter().position(|&f| target.hits(f)).map(|t| t as u64))
            .collect();
        let len = columns.iter().map(Vec::len).min().unwrap_or(0);
        let records = (0..len)
            .map(|t| {
                let hits = columns.iter().filter(|col| target.hits(col[t])).count();
                HitRecord {
                    t: t as u64,
                    hit_fraction: hits as f64 / replicas as f64,
                }
            })
            .collect();
        Self {
            records,
            replicas,
            first_hits,
            target,
        }
    }

    pub fn final_fraction(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.hit_fraction)
    }

    /// Median first-hit iteration, counting replicas that never hit as
    /// later than any finite iteration. `None` when the median replica never hit.
    pub fn median_first_hit(&self) -> Option<u64> {
        let mut hits: Vec<u64> = self
            .first_hits
            .iter()
            .map(|h| h.unwrap_or(u64::MAX))
            .collect();
        if hits.is_empty() {
            return None;
        }
        hits.sort_unstable();
        let mid = hits[(hits.len() - 1) / 2];
        (mid != u64::MAX).then_some(mid)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].hit_fraction >= w[0].hit_fraction)
    }

    /// One-line summary: replicas, epsilon, theta, final fraction, median first hit.
    pub fn summary_line(&self) -> String {
        let median = self
            .median_first_hit()
            .map_or_else(|| "never".to_string(), |t| t.to_string());
        format!(
            "replicas={} epsilon={} theta={} final_hit_fraction={} median_first_hit={}",
            self.replicas,
            self.target.epsilon,
            self.target.theta,
            self.final_fraction(),
            median
        )
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_records(&self.records, writer)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<HitRecord>> {
        read_records(reader, CURVE_HEADER)
    }
}

/// Runs `replicas` independent engine runs seeded `params.seed + i` and
/// records, per iteration, the fraction whose best fitness hits the target.
pub fn estimate_hit_probability(
    spec: &ObjectiveSpec,
    params: &BaParams,
    target: &ConvergenceTarget,
    replicas: usize,
) -> Result<HitProbabilityCurve> {
    if replicas == 0 {
        return Err(Error::invalid("replicas", "must be at least 1"));
    }
    target.validate()?;
    params.validate()?;
    let columns = parallel::try_map_indexed(replicas, |i| {
        let p = params.clone().with_seed(params.seed.wrapping_add(i as u64));
        engine::run(spec, &p).map(|trace| trace.best_fitness_column())
    })?;
    Ok(HitProbabilityCurve::from_best_columns(&columns, *target))
}
