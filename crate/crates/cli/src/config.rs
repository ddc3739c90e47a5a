//! Experiment configuration: JSON config file, command-line flags and the
//! resolved per-command settings.
//!
//! Resolution order is defaults, then the config file, then flags. Inside
//! each layer the `(m, l)` shorthand is applied before explicit
//! `f_min`/`f_max`/`omega`. The resolved settings are written back in the
//! config-file schema as the run manifest, so `--config manifest.json`
//! reproduces a run.

use std::fs;
use std::path::{Path, PathBuf};

use batstab::convergence::ConvergenceTarget;
use batstab::dynamics::DynamicParams;
use batstab::engine::BaParams;
use batstab::objective::{Objective, ObjectiveSpec};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub target: TargetSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_clamp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of consecutive seeds for the benchmark suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonFlags {
    /// JSON config file (sections: engine, dynamics, target, output)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads for fan-out work
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EngineFlags {
    /// Benchmark name (case-insensitive)
    #[arg(long, value_name = "NAME")]
    pub objective: Option<String>,
    #[arg(long)]
    pub dimension: Option<usize>,
    /// Population size
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    /// Mean-frequency scale: frequencies span [0, m]
    #[arg(long)]
    pub m: Option<f64>,
    /// Velocity weight, sets omega
    #[arg(long)]
    pub l: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "f-min")]
    pub f_min: Option<f64>,
    #[arg(long = "f-max")]
    pub f_max: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DynamicsFlags {
    #[arg(long)]
    pub l: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    /// Attraction point
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long = "k-max")]
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridFlags {
    #[arg(long = "l-min")]
    pub l_min: Option<f64>,
    #[arg(long = "l-max")]
    pub l_max: Option<f64>,
    #[arg(long = "m-min")]
    pub m_min: Option<f64>,
    #[arg(long = "m-max")]
    pub m_max: Option<f64>,
    /// Grid spacing
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TargetFlags {
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
}

impl EngineFlags {
    fn section(&self) -> EngineSection {
        EngineSection {
            objective: self.objective.clone(),
            dimension: self.dimension,
            n: self.n,
            t_max: self.t_max,
            m: self.m,
            l: self.l,
            f_min: self.f_min,
            f_max: self.f_max,
            omega: self.omega,
            alpha: self.alpha,
            gamma: self.gamma,
            ..Default::default()
        }
    }
}

fn validation(e: batstab::Error) -> CliError {
    CliError::Validation(e.to_string())
}

/// Loads the config file named in `common`, checking its `command` tag.
pub fn load_layer(common: &CommonFlags, command: &str) -> Result<ConfigFile, CliError> {
    let Some(path) = &common.config else {
        return Ok(ConfigFile::default());
    };
    let file = ConfigFile::load(path)?;
    if let Some(tag) = &file.command {
        if tag != command {
            return Err(CliError::Validation(format!(
                "config {} is for `{tag}`, not `{command}`",
                path.display()
            )));
        }
    }
    Ok(file)
}

fn apply_engine(params: &mut BaParams, s: &EngineSection) {
    if let Some(m) = s.m {
        *params = params.clone().with_dynamics(m, params.omega);
    }
    if let Some(l) = s.l {
        params.omega = l;
    }
    let BaParams {
        f_min,
        f_max,
        omega,
        alpha,
        gamma,
        a0,
        r0,
        n,
        t_max,
        v_clamp,
        seed,
    } = params;
    set(f_min, s.f_min);
    set(f_max, s.f_max);
    set(omega, s.omega);
    set(alpha, s.alpha);
    set(gamma, s.gamma);
    set(a0, s.a0);
    set(r0, s.r0);
    set(n, s.n);
    set(t_max, s.t_max);
    set(seed, s.seed);
    if s.v_clamp.is_some() {
        *v_clamp = s.v_clamp;
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
}

const DEFAULT_OUT: &str = "out";

fn run_settings(file: &ConfigFile, common: &CommonFlags) -> Result<RunSettings, CliError> {
    let jobs = common.jobs.or(file.jobs);
    if jobs == Some(0) {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    let out_dir = common
        .out
        .clone()
        .or_else(|| file.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(RunSettings { out_dir, jobs })
}

/// Engine settings resolved from all layers.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineSettings {
    pub objective: Objective,
    pub dimension: usize,
    pub params: BaParams,
}

impl EngineSettings {
    pub fn spec(&self) -> ObjectiveSpec {
        self.objective.spec(self.dimension)
    }

    fn section(&self) -> EngineSection {
        let p = &self.params;
        EngineSection {
            objective: Some(self.objective.name().to_string()),
            dimension: Some(self.dimension),
            n: Some(p.n),
            t_max: Some(p.t_max),
            f_min: Some(p.f_min),
            f_max: Some(p.f_max),
            omega: Some(p.omega),
            alpha: Some(p.alpha),
            gamma: Some(p.gamma),
            a0: Some(p.a0),
            r0: Some(p.r0),
            v_clamp: p.v_clamp,
            seed: Some(p.seed),
            ..Default::default()
        }
    }
}

fn resolve_engine(
    defaults: EngineSettings,
    file: &EngineSection,
    flags: &EngineFlags,
    seed: Option<u64>,
) -> Result<EngineSettings, CliError> {
    let mut out = defaults;
    let flag_section = EngineSection {
        seed,
        ..flags.section()
    };
    for layer in [file, &flag_section] {
        apply_engine(&mut out.params, layer);
        if let Some(name) = &layer.objective {
            out.objective = name.parse().map_err(validation)?;
        }
        set(&mut out.dimension, layer.dimension);
    }
    out.params.validate().map_err(validation)?;
    out.spec().validate().map_err(validation)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub engine: EngineSettings,
    pub run: RunSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSuiteConfig {
    pub dimension: usize,
    pub params: BaParams,
    pub seeds: usize,
    pub run: RunSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionConfig {
    pub l_range: (f64, f64),
    pub m_range: (f64, f64),
    pub step: f64,
    pub run: RunSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub params: DynamicParams,
    pub x0: f64,
    pub v0: f64,
    pub k_max: usize,
    pub run: RunSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitprobConfig {
    pub engine: EngineSettings,
    pub target: ConvergenceTarget,
    pub replicas: usize,
    pub run: RunSettings,
}

impl OptimizeConfig {
    pub const COMMAND: &'static str = "optimize";

    pub fn resolve(common: &CommonFlags, engine: &EngineFlags) -> Result<Self, CliError> {
        let file = load_layer(common, Self::COMMAND)?;
        let defaults = EngineSettings {
            objective: Objective::Sphere,
            dimension: batstab::objective::DEFAULT_DIMENSION,
            params: BaParams::default(),
        };
        Ok(Self {
            engine: resolve_engine(defaults, &file.engine, engine, common.seed)?,
            run: run_settings(&file, common)?,
        })
    }

    pub fn manifest(&self) -> ConfigFile {
        manifest(Self::COMMAND, &self.run, |f| {
            f.engine = self.engine.section()
        })
    }
}

impl BenchSuiteConfig {
    pub const COMMAND: &'static str = "bench-suite";
    pub const DEFAULT_SEEDS: usize = 20;

    pub fn resolve(
        common: &CommonFlags,
        engine: &EngineFlags,
        seeds: Option<usize>,
    ) -> Result<Self, CliError> {
        let file = load_layer(common, Self::COMMAND)?;
        if engine.objective.is_some() || file.engine.objective.is_some() {
            return Err(CliError::Validation(
                "bench-suite always runs the full suite; drop `objective`".into(),
            ));
        }
        let defaults = EngineSettings {
            objective: Objective::Sphere,
            dimension: batstab::objective::DEFAULT_DIMENSION,
            params: BaParams::stable_reference(),
        };
        let engine_settings = resolve_engine(defaults, &file.engine, engine, common.seed)?;
        let seeds = seeds.or(file.engine.seeds).unwrap_or(Self::DEFAULT_SEEDS);
        if seeds == 0 {
            return Err(CliError::Validation("--seeds must be at least 1".into()));
        }
        Ok(Self {
            dimension: engine_settings.dimension,
            params: engine_settings.params,
            seeds,
            run: run_settings(&file, common)?,
        })
    }

    pub fn manifest(&self) -> ConfigFile {
        manifest(Self::COMMAND, &self.run, |f| {
            let settings = EngineSettings {
                objective: Objective::Sphere,
                dimension: self.dimension,
                params: self.params.clone(),
            };
            f.engine = EngineSection {
                objective: None,
                seeds: Some(self.seeds),
                ..settings.section()
            };
        })
    }
}

impl RegionConfig {
    pub const COMMAND: &'static str = "stability-region";

    pub fn resolve(common: &CommonFlags, grid: &GridFlags) -> Result<Self, CliError> {
        let file = load_layer(common, Self::COMMAND)?;
        let d = &file.dynamics;
        let pick =
            |flag: Option<f64>, cfg: Option<f64>, default: f64| flag.or(cfg).unwrap_or(default);
        let l_range = (
            pick(grid.l_min, d.l_min, -2.0),
            pick(grid.l_max, d.l_max, 2.0),
        );
        let m_range = (
            pick(grid.m_min, d.m_min, -1.0),
            pick(grid.m_max, d.m_max, 5.0),
        );
        let step = pick(grid.step, d.step, 0.01);
        if !(step > 0.0) || !step.is_finite() {
            return Err(CliError::Validation(format!(
                "step must be positive, got {step}"
            )));
        }
        for (name, (lo, hi)) in [("l", l_range), ("m", m_range)] {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(CliError::Validation(format!(
                    "{name} range [{lo}, {hi}] is degenerate"
                )));
            }
        }
        Ok(Self {
            l_range,
            m_range,
            step,
            run: run_settings(&file, common)?,
        })
    }

    pub fn manifest(&self) -> ConfigFile {
        manifest(Self::COMMAND, &self.run, |f| {
            f.dynamics = DynamicsSection {
                l_min: Some(self.l_range.0),
                l_max: Some(self.l_range.1),
                m_min: Some(self.m_range.0),
                m_max: Some(self.m_range.1),
                step: Some(self.step),
                ..Default::default()
            }
        })
    }
}

impl TraceConfig {
    pub const COMMAND: &'static str = "dynamic-trace";

    pub fn resolve(common: &CommonFlags, flags: &DynamicsFlags) -> Result<Self, CliError> {
        let file = load_layer(common, Self::COMMAND)?;
        let d = &file.dynamics;
        let pick =
            |flag: Option<f64>, cfg: Option<f64>, default: f64| flag.or(cfg).unwrap_or(default);
        let params = DynamicParams::reduced(
            pick(flags.l, d.l, 0.5),
            pick(flags.m, d.m, 2.0),
            pick(flags.p, d.p, 1.0),
        );
        params.validate().map_err(validation)?;
        let x0 = pick(flags.x0, d.x0, 0.0);
        let v0 = pick(flags.v0, d.v0, 0.0);
        if !x0.is_finite() || !v0.is_finite() {
            return Err(CliError::Validation("x0 and v0 must be finite".into()));
        }
        let k_max = flags.k_max.or(d.k_max).unwrap_or(200);
        if k_max == 0 {
            return Err(CliError::Validation("--k-max must be at least 1".into()));
        }
        Ok(Self {
            params,
            x0,
            v0,
            k_max,
            run: run_settings(&file, common)?,
        })
    }

    pub fn manifest(&self) -> ConfigFile {
        manifest(Self::COMMAND, &self.run, |f| {
            f.dynamics = DynamicsSection {
                l: Some(self.params.l),
                m: Some(self.params.m),
                p: Some(self.params.p),
                x0: Some(self.x0),
                v0: Some(self.v0),
                k_max: Some(self.k_max),
                ..Default::default()
            }
        })
    }
}

impl HitprobConfig {
    pub const COMMAND: &'static str = "hitprob";

    pub fn resolve(
        common: &CommonFlags,
        engine: &EngineFlags,
        target: &TargetFlags,
    ) -> Result<Self, CliError> {
        let file = load_layer(common, Self::COMMAND)?;
        let defaults = EngineSettings {
            objective: Objective::Sphere,
            dimension: 2,
            params: BaParams::stable_reference(),
        };
        let engine = resolve_engine(defaults, &file.engine, engine, common.seed)?;
        let conv = ConvergenceTarget {
            theta: file.target.theta.unwrap_or(0.0),
            epsilon: target.epsilon.or(file.target.epsilon).unwrap_or(1e-2),
            level: None,
        };
        conv.validate().map_err(validation)?;
        let replicas = target.replicas.or(file.target.replicas).unwrap_or(200);
        if replicas == 0 {
            return Err(CliError::Validation("--replicas must be at least 1".into()));
        }
        Ok(Self {
            engine,
            target: conv,
            replicas,
            run: run_settings(&file, common)?,
        })
    }

    pub fn manifest(&self) -> ConfigFile {
        manifest(Self::COMMAND, &self.run, |f| {
            f.engine = self.engine.section();
            f.target = TargetSection {
                theta: Some(self.target.theta),
                epsilon: Some(self.target.epsilon),
                replicas: Some(self.replicas),
            };
        })
    }
}

fn manifest(command: &str, run: &RunSettings, fill: impl FnOnce(&mut ConfigFile)) -> ConfigFile {
    let mut file = ConfigFile {
        command: Some(command.to_string()),
        output: OutputSection {
            dir: Some(run.out_dir.clone()),
        },
        jobs: run.jobs,
        ..Default::default()
    };
    fill(&mut file);
    file
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<ConfigFile>(r#"{"engine": {"n": 3, "bogus": 1}}"#);
        assert!(err.is_err());
        let err = serde_json::from_str::<ConfigFile>(r#"{"extra": {}}"#);
        assert!(err.is_err());
        let ok: ConfigFile =
            serde_json::from_str(r#"{"engine": {"n": 3}, "output": {"dir": "x"}}"#).unwrap();
        assert_eq!(ok.engine.n, Some(3));
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file = EngineSection {
            n: Some(20),
            t_max: Some(50),
            m: Some(1.0),
            ..Default::default()
        };
        let flags = EngineFlags {
            n: Some(7),
            l: Some(0.25),
            ..Default::default()
        };
        let defaults = EngineSettings {
            objective: Objective::Sphere,
            dimension: 30,
            params: BaParams::default(),
        };
        let s = resolve_engine(defaults, &file, &flags, Some(99)).unwrap();
        assert_eq!(s.params.n, 7);
        assert_eq!(s.params.t_max, 50);
        assert_eq!(
            (s.params.f_min, s.params.f_max, s.params.omega),
            (0.0, 1.0, 0.25)
        );
        assert_eq!(s.params.seed, 99);
        assert_eq!(s.params.alpha, BaParams::default().alpha);
    }

    #[test]
    fn zero_budget_is_a_validation_error() {
        let flags = EngineFlags {
            t_max: Some(0),
            ..Default::default()
        };
        let err = OptimizeConfig::resolve(&CommonFlags::default(), &flags).unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
    }

    #[test]
    fn unknown_objective_is_a_validation_error() {
        let flags = EngineFlags {
            objective: Some("ackley".into()),
            ..Default::default()
        };
        assert!(matches!(
            OptimizeConfig::resolve(&CommonFlags::default(), &flags),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn region_step_must_be_positive() {
        let grid = GridFlags {
            step: Some(0.0),
            ..Default::default()
        };
        assert!(matches!(
            RegionConfig::resolve(&CommonFlags::default(), &grid),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn manifest_reloads_to_same_settings() {
        let flags = EngineFlags {
            objective: Some("rastrigin".into()),
            m: Some(-3.0),
            l: Some(4.0),
            ..Default::default()
        };
        let cfg = OptimizeConfig::resolve(&CommonFlags::default(), &flags).unwrap();
        let dir = std::env::temp_dir().join(format!("batstab-manifest-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("manifest.json");
        std::fs::write(&path, cfg.manifest().to_json()).unwrap();
        let common = CommonFlags {
            config: Some(path),
            ..Default::default()
        };
        let again = OptimizeConfig::resolve(&common, &EngineFlags::default()).unwrap();
        assert_eq!(again, cfg);
        assert!(matches!(
            load_layer(&common, "hitprob"),
            Err(CliError::Validation(_))
        ));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
