//! The standard bat algorithm.
//!
//! Each iteration every bat draws a frequency, pulls its velocity toward the
//! swarm best `p` and proposes `x + v`. With probability `1 - r_i` the proposal
//! is replaced by a loudness-scaled random walk around `p`. A proposal that
//! passes the loudness gate and does not worsen the bat's fitness is accepted,
//! after which the bat gets quieter and its pulse rate grows. The swarm best is
//! replaced only by a strictly better proposal.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;

pub type EngineRng = ChaCha8Rng;

/// Random source used by every engine run, seeded deterministically.
pub fn seeded_rng(seed: u64) -> EngineRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tunables of the bat algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaParams {
    /// Lower end of the frequency range.
    pub f_min: f64,
    /// Upper end of the frequency range.
    pub f_max: f64,
    /// Inertia weight on the previous velocity.
    pub omega: f64,
    /// Loudness decay factor, `0 < alpha < 1`.
    pub alpha: f64,
    /// Pulse-rate growth constant, `gamma > 0`.
    pub gamma: f64,
    /// Initial loudness.
    pub a0: f64,
    /// Asymptotic pulse rate.
    pub r0: f64,
    /// Population size.
    pub n: usize,
    /// Iteration budget.
    pub t_max: usize,
    /// Componentwise velocity limit; `None` uses the width of the search box.
    pub v_clamp: Option<f64>,
    pub seed: u64,
}

impl Default for BaParams {
    fn default() -> Self {
        Self {
            f_min: 0.0,
            f_max: 2.0,
            omega: 0.9,
            alpha: 0.9,
            gamma: 0.9,
            a0: 1.0,
            r0: 0.5,
            n: 12,
            t_max: 500,
            v_clamp: None,
            seed: 1,
        }
    }
}

impl BaParams {
    /// Sets the frequency range and inertia from the reduced-model pair
    /// `(m, l)`: frequencies span `[0, m]` (or `[m, 0]` for negative `m`) and
    /// `omega = l`.
    pub fn with_dynamics(mut self, m: f64, l: f64) -> Self {
        (self.f_min, self.f_max) = if m >= 0.0 { (0.0, m) } else { (m, 0.0) };
        self.omega = l;
        self
    }

    /// `(m, l) = (2, 0.5)`, inside the stability triangle.
    pub fn stable_reference() -> Self {
        Self::default().with_dynamics(2.0, 0.5)
    }

    /// `(m, l) = (-3, 4)`, outside the stability triangle.
    pub fn unstable_reference() -> Self {
        Self::default().with_dynamics(-3.0, 4.0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("f_min", self.f_min),
            ("f_max", self.f_max),
            ("omega", self.omega),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("a0", self.a0),
            ("r0", self.r0),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.f_min > self.f_max {
            return Err(Error::invalid(
                "f_min",
                format!("f_min {} exceeds f_max {}", self.f_min, self.f_max),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid(
                "gamma",
                format!("must be positive, got {}", self.gamma),
            ));
        }
        if self.a0 < 0.0 {
            return Err(Error::invalid(
                "a0",
                format!("must be nonnegative, got {}", self.a0),
            ));
        }
        if !(0.0..=1.0).contains(&self.r0) {
            return Err(Error::invalid(
                "r0",
                format!("must lie in [0, 1], got {}", self.r0),
            ));
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "population must be at least 1"));
        }
        if self.t_max == 0 {
            return Err(Error::invalid(
                "t_max",
                "iteration budget must be at least 1",
            ));
        }
        if let Some(c) = self.v_clamp {
            if !(c >= 0.0) {
                return Err(Error::invalid(
                    "v_clamp",
                    format!("must be nonnegative, got {c}"),
                ));
            }
        }
        Ok(())
    }

    /// Velocity limit for a given search box.
    pub fn velocity_limit(&self, spec: &ObjectiveSpec) -> f64 {
        self.v_clamp.unwrap_or_else(|| spec.width())
    }

    /// Pulse rate after an acceptance at iteration `t`.
    pub fn pulse_rate_at(&self, t: u64) -> f64 {
        self.r0 * (1.0 - (-self.gamma * t as f64).exp())
    }
}

/// One bat.
#[derive(Debug, Clone, PartialEq)]
pub struct BatState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Objective value at `position` (non-finite values are stored as `+inf`).
    pub fitness: f64,
    pub loudness: f64,
    pub pulse_rate: f64,
    /// Number of accepted moves so far.
    pub accepted: u32,
    /// Iteration of the last accepted move.
    pub last_accept: Option<u64>,
}

/// The bat group plus the best position ever evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub bats: Vec<BatState>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub iteration: u64,
}

impl SwarmState {
    pub fn mean_loudness(&self) -> f64 {
        mean(self.bats.iter().map(|b| b.loudness))
    }

    pub fn mean_pulse_rate(&self) -> f64 {
        mean(self.bats.iter().map(|b| b.pulse_rate))
    }

    pub fn mean_fitness(&self) -> f64 {
        mean(self.bats.iter().map(|b| b.fitness))
    }

    pub fn record(&self) -> TraceRecord {
        TraceRecord {
            iteration: self.iteration,
            best_fitness: self.best_fitness,
            mean_fitness: self.mean_fitness(),
            mean_loudness: self.mean_loudness(),
            mean_pulse_rate: self.mean_pulse_rate(),
        }
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

fn sanitize(f: f64) -> f64 {
    if !f.is_finite() {
        f64::INFINITY
    } else {
        f
    }
}

fn evaluate<R: Rng + ?Sized>(spec: &ObjectiveSpec, x: &[f64], rng: &mut R) -> Result<f64> {
    spec.evaluate(x, rng).map(sanitize)
}

/// Builds the initial swarm: uniform positions in the box, zero velocity,
/// loudness `a0` and pulse rate 0.
pub fn init_swarm<R: Rng + ?Sized>(
    spec: &ObjectiveSpec,
    params: &BaParams,
    rng: &mut R,
) -> Result<SwarmState> {
    params.validate()?;
    spec.validate()?;
    let mut bats = Vec::with_capacity(params.n);
    for _ in 0..params.n {
        let position: Vec<f64> = (0..spec.dimension)
            .map(|_| rng.gen_range(spec.lower_bound..=spec.upper_bound))
            .collect();
        let fitness = evaluate(spec, &position, rng)?;
        bats.push(BatState {
            position,
            velocity: vec![0.0; spec.dimension],
            fitness,
            loudness: params.a0,
            pulse_rate: params.pulse_rate_at(0),
            accepted: 0,
            last_accept: None,
        });
    }
    let mut best = 0;
    for (i, bat) in bats.iter().enumerate().skip(1) {
        if bat.fitness < bats[best].fitness {
            best = i;
        }
    }
    Ok(SwarmState {
        best_position: bats[best].position.clone(),
        best_fitness: bats[best].fitness,
        bats,
        iteration: 0,
    })
}

/// Maps a uniform `beta` in `[0, 1]` onto the frequency range.
pub fn frequency_from_beta(params: &BaParams, beta: f64) -> f64 {
    params.f_min + (params.f_max - params.f_min) * beta
}

pub fn draw_frequency<R: Rng + ?Sized>(params: &BaParams, rng: &mut R) -> f64 {
    frequency_from_beta(params, rng.gen::<f64>())
}

/// `omega * v + (p - x) * freq`, clamped componentwise to `[-v_clamp, v_clamp]`.
pub fn update_velocity(
    v: &[f64],
    x: &[f64],
    p: &[f64],
    omega: f64,
    freq: f64,
    v_clamp: f64,
) -> Result<Vec<f64>> {
    if x.len() != v.len() || p.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            actual: if x.len() != v.len() { x.len() } else { p.len() },
        });
    }
    Ok(v.iter()
        .zip(x)
        .zip(p)
        .map(|((vi, xi), pi)| (omega * vi + (pi - xi) * freq).clamp(-v_clamp, v_clamp))
        .collect())
}

/// `x + v_next`, clamped to the search box.
pub fn update_position(x: &[f64], v_next: &[f64], spec: &ObjectiveSpec) -> Vec<f64> {
    debug_assert_eq!(x.len(), v_next.len());
    x.iter()
        .zip(v_next)
        .map(|(xi, vi)| (xi + vi).clamp(spec.lower_bound, spec.upper_bound))
        .collect()
}

/// Random walk of step `mean_loudness` around `x_old`, one uniform
/// `eps in [-1, 1]` per component.
pub fn local_search<R: Rng + ?Sized>(
    x_old: &[f64],
    mean_loudness: f64,
    spec: &ObjectiveSpec,
    rng: &mut R,
) -> Vec<f64> {
    let eps: Vec<f64> = (0..x_old.len())
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect();
    local_search_with(x_old, mean_loudness, &eps, spec)
}

/// [`local_search`] with the perturbations supplied.
pub fn local_search_with(
    x_old: &[f64],
    mean_loudness: f64,
    eps: &[f64],
    spec: &ObjectiveSpec,
) -> Vec<f64> {
    x_old
        .iter()
        .zip(eps)
        .map(|(x, e)| (x + e * mean_loudness).clamp(spec.lower_bound, spec.upper_bound))
        .collect()
}

/// Loudness decays geometrically; pulse rate follows the closed form in `t`.
pub fn update_loudness_and_rate(bat: &mut BatState, params: &BaParams, t: u64) {
    bat.loudness *= params.alpha;
    bat.pulse_rate = params.pulse_rate_at(t);
    bat.accepted += 1;
    bat.last_accept = Some(t);
}

/// Greedy best update: the candidate wins only if strictly better.
pub fn maybe_update_best<P>(p_old: P, f_old: f64, candidate: P, f_cand: f64) -> Result<(P, f64)> {
    if f_old.is_nan() || f_cand.is_nan() {
        return Err(Error::NanFitness);
    }
    if f_cand < f_old {
        Ok((candidate, f_cand))
    } else {
        Ok((p_old, f_old))
    }
}

/// Advances the swarm by one iteration.
pub fn step<R: Rng + ?Sized>(
    swarm: &mut SwarmState,
    spec: &ObjectiveSpec,
    params: &BaParams,
    rng: &mut R,
) -> Result<()> {
    let t = swarm.iteration;
    let v_clamp = params.velocity_limit(spec);
    let mean_loudness = swarm.mean_loudness();

    for i in 0..swarm.bats.len() {
        let freq = draw_frequency(params, rng);
        let bat = &swarm.bats[i];
        let velocity = update_velocity(
            &bat.velocity,
            &bat.position,
            &swarm.best_position,
            params.omega,
            freq,
            v_clamp,
        )?;
        let mut candidate = update_position(&bat.position, &velocity, spec);
        if rng.gen::<f64>() > bat.pulse_rate {
            candidate = local_search(&swarm.best_position, mean_loudness, spec, rng);
        }
        let f_cand = evaluate(spec, &candidate, rng)?;

        let bat = &mut swarm.bats[i];
        bat.velocity = velocity;
        let gate = rng.gen::<f64>();
        if gate < bat.loudness && f_cand <= bat.fitness {
            bat.position.clone_from(&candidate);
            bat.fitness = f_cand;
            update_loudness_and_rate(bat, params, t);
        }

        let p_old = std::mem::take(&mut swarm.best_position);
        (swarm.best_position, swarm.best_fitness) =
            maybe_update_best(p_old, swarm.best_fitness, candidate, f_cand)?;
    }
    swarm.iteration += 1;
    Ok(())
}

/// One row of a run trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub mean_loudness: f64,
    pub mean_pulse_rate: f64,
}

/// Per-iteration history of a run plus its final best.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

pub const TRACE_HEADER: &str = "iteration,best_fitness,mean_fitness,mean_loudness,mean_pulse_rate";

impl RunTrace {
    pub fn best_fitness_column(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_fitness).collect()
    }

    pub fn initial_best(&self) -> f64 {
        self.records[0].best_fitness
    }

    /// Ratio of the starting best fitness to the final one.
    pub fn improvement_factor(&self) -> f64 {
        self.initial_best() / self.best_fitness
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_records(&self.records, writer)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Parses the trace records back; the final-best summary is not part of the CSV.
    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<TraceRecord>> {
        read_records(reader, TRACE_HEADER)
    }
}

pub(crate) fn write_records<T: Serialize, W: Write>(records: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_records<T: for<'de> Deserialize<'de>, R: Read>(
    reader: R,
    header: &str,
) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(reader);
    let found = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(Error::CsvFormat(format!(
            "expected header `{header}`, found `{found}`"
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Runs `t_max` iterations from a fresh swarm seeded by `params.seed`.
pub fn run(spec: &ObjectiveSpec, params: &BaParams) -> Result<RunTrace> {
    let mut rng = seeded_rng(params.seed);
    run_with(spec, params, &mut rng, |_| {})
}

/// Like [`run`] with an explicit random source and a hook called with the
/// swarm after initialization and after every step.
pub fn run_with<R: Rng + ?Sized>(
    spec: &ObjectiveSpec,
    params: &BaParams,
    rng: &mut R,
    mut observe: impl FnMut(&SwarmState),
) -> Result<RunTrace> {
    let mut swarm = init_swarm(spec, params, rng)?;
    let mut records = Vec::with_capacity(params.t_max + 1);
    records.push(swarm.record());
    observe(&swarm);
    for _ in 0..params.t_max {
        step(&mut swarm, spec, params, rng)?;
        records.push(swarm.record());
        observe(&swarm);
    }
    Ok(RunTrace {
        records,
        best_position: swarm.best_position,
        best_fitness: swarm.best_fitness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Objective;

    fn sphere(d: usize) -> ObjectiveSpec {
        Objective::Sphere.spec(d)
    }

    #[test]
    fn frequency_endpoints_and_midpoint() {
        let p = BaParams {
            f_min: 0.0,
            f_max: 2.0,
            ..Default::default()
        };
        assert_eq!(frequency_from_beta(&p, 0.0), 0.0);
        assert_eq!(frequency_from_beta(&p, 1.0), 2.0);
        assert_eq!(frequency_from_beta(&p, 0.5), 1.0);
    }

    #[test]
    fn velocity_update_cases() {
        assert_eq!(
            update_velocity(&[0.0], &[1.0], &[1.0], 0.9, 1.3, 10.0).unwrap(),
            vec![0.0]
        );
        assert_eq!(
            update_velocity(&[2.0], &[0.0], &[1.0], 0.5, 2.0, 10.0).unwrap(),
            vec![3.0]
        );
        assert_eq!(
            update_velocity(&[2.0], &[0.0], &[1.0], 0.5, 2.0, 2.5).unwrap(),
            vec![2.5]
        );
        assert_eq!(
            update_velocity(&[-4.0], &[3.0], &[-7.0], 0.25, 0.0, 10.0).unwrap(),
            vec![-1.0]
        );
        assert!(matches!(
            update_velocity(&[0.0, 0.0], &[0.0], &[0.0, 0.0], 1.0, 1.0, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn position_update_cases() {
        let s = sphere(1);
        assert_eq!(update_position(&[1.5], &[0.0], &s), vec![1.5]);
        assert_eq!(update_position(&[5.0], &[1.0], &s), vec![5.12]);
        assert_eq!(update_position(&[1.0], &[-2.0], &s), vec![-1.0]);
    }

    #[test]
    fn local_search_cases() {
        let s = sphere(3);
        let mut rng = seeded_rng(3);
        assert_eq!(
            local_search(&[0.1, 0.2, 0.3], 0.0, &s, &mut rng),
            vec![0.1, 0.2, 0.3]
        );
        assert_eq!(
            local_search_with(&[0.0], 1.0, &[0.5], &sphere(1)),
            vec![0.5]
        );
        for _ in 0..200 {
            let y = local_search(&[1.0, -2.0, 0.0], 0.3, &s, &mut rng);
            assert!(y
                .iter()
                .zip([1.0, -2.0, 0.0])
                .all(|(a, b)| (a - b).abs() <= 0.3));
        }
    }

    #[test]
    fn loudness_and_rate_schedule() {
        let params = BaParams {
            alpha: 0.9,
            r0: 0.5,
            gamma: 0.9,
            ..Default::default()
        };
        let mut bat = BatState {
            position: vec![0.0],
            velocity: vec![0.0],
            fitness: 0.0,
            loudness: 1.0,
            pulse_rate: 0.0,
            accepted: 0,
            last_accept: None,
        };
        update_loudness_and_rate(&mut bat, &params, 0);
        assert_eq!(bat.loudness, 0.9);
        assert_eq!(bat.pulse_rate, 0.0);
        let mut prev = 0.0;
        for t in 1..60 {
            let r = params.pulse_rate_at(t);
            assert!(r >= prev && r <= 0.5);
            prev = r;
        }
        assert!((prev - 0.5).abs() < 1e-12);
    }

    #[test]
    fn best_update_is_strict() {
        let (p, f) = maybe_update_best(vec![1.0], 2.0, vec![0.0], 2.0).unwrap();
        assert_eq!((p, f), (vec![1.0], 2.0));
        let (p, f) = maybe_update_best(vec![1.0], 2.0, vec![0.0], 1.0).unwrap();
        assert_eq!((p, f), (vec![0.0], 1.0));
        let (p, _) = maybe_update_best(vec![1.0], 2.0, vec![1.0], 1.0).unwrap();
        assert_eq!(p, vec![1.0]);
        assert!(matches!(
            maybe_update_best(&[1.0], 2.0, &[0.0], f64::NAN),
            Err(Error::NanFitness)
        ));
    }

    #[test]
    fn init_swarm_shape() {
        let spec = sphere(30);
        let params = BaParams::default();
        let swarm = init_swarm(&spec, &params, &mut seeded_rng(5)).unwrap();
        assert_eq!(swarm.bats.len(), 12);
        for b in &swarm.bats {
            assert!(b.position.iter().all(|x| x.abs() <= 5.12));
            assert!(b.velocity.iter().all(|&v| v == 0.0));
            assert_eq!(b.pulse_rate, 0.0);
            assert_eq!(b.loudness, 1.0);
        }
        let min = swarm
            .bats
            .iter()
            .map(|b| b.fitness)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(swarm.best_fitness, min);
    }

    #[test]
    fn singleton_swarm_best_is_the_bat() {
        let params = BaParams {
            n: 1,
            ..Default::default()
        };
        let swarm = init_swarm(&sphere(4), &params, &mut seeded_rng(0)).unwrap();
        assert_eq!(swarm.best_position, swarm.bats[0].position);
    }

    #[test]
    fn bat_at_minimizer_stays_put() {
        let spec = sphere(3);
        // Zero frequency, no local search (r0 = 1 with huge gamma), zero velocity.
        let params = BaParams {
            f_min: 0.0,
            f_max: 0.0,
            r0: 1.0,
            gamma: 1e9,
            n: 1,
            ..Default::default()
        };
        let bat = BatState {
            position: vec![0.0; 3],
            velocity: vec![0.0; 3],
            fitness: 0.0,
            loudness: 1.0,
            pulse_rate: 1.0,
            accepted: 0,
            last_accept: None,
        };
        let mut swarm = SwarmState {
            bats: vec![bat],
            best_position: vec![0.0; 3],
            best_fitness: 0.0,
            iteration: 1,
        };
        step(&mut swarm, &spec, &params, &mut seeded_rng(9)).unwrap();
        assert_eq!(swarm.bats[0].position, vec![0.0; 3]);
        assert_eq!(swarm.best_position, vec![0.0; 3]);
        assert_eq!(swarm.iteration, 2);
    }

    #[test]
    fn run_record_counts() {
        let params = BaParams {
            t_max: 1,
            ..Default::default()
        };
        assert_eq!(run(&sphere(5), &params).unwrap().records.len(), 2);
        let params = BaParams::stable_reference();
        let trace = run(&sphere(30), &params).unwrap();
        assert_eq!(trace.records.len(), 501);
        assert!(trace
            .records
            .windows(2)
            .all(|w| w[1].best_fitness <= w[0].best_fitness));
    }

    #[test]
    fn validation_rejects_bad_params() {
        let ok = BaParams::default();
        assert!(ok.validate().is_ok());
        for bad in [
            BaParams {
                t_max: 0,
                ..ok.clone()
            },
            BaParams { n: 0, ..ok.clone() },
            BaParams {
                alpha: 1.0,
                ..ok.clone()
            },
            BaParams {
                gamma: 0.0,
                ..ok.clone()
            },
            BaParams {
                f_min: 3.0,
                ..ok.clone()
            },
            BaParams {
                v_clamp: Some(-1.0),
                ..ok.clone()
            },
            BaParams {
                omega: f64::NAN,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn dynamics_mapping() {
        let p = BaParams::unstable_reference();
        assert_eq!((p.f_min, p.f_max, p.omega), (-3.0, 0.0, 4.0));
        assert!(p.validate().is_ok());
        let p = BaParams::stable_reference();
        assert_eq!((p.f_min, p.f_max, p.omega), (0.0, 2.0, 0.5));
    }

    #[test]
    fn csv_header_is_exact() {
        let trace = run(
            &sphere(2),
            &BaParams {
                t_max: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let csv = trace.to_csv_string();
        assert_eq!(csv.lines().next().unwrap(), TRACE_HEADER);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,"));
    }
}
