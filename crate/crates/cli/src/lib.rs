//! `batstab` command-line front end.
//!
//! Every subcommand writes its CSV artifacts plus a `manifest.json` holding
//! the fully resolved settings into the output directory. Feeding the
//! manifest back through `--config` reproduces the CSVs byte for byte.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use batstab::convergence::{check_monotone, estimate_hit_probability};
use batstab::dynamics::{
    iterate_trajectory, rasterize_region, region_verdict, Verdict, CONVERGENCE_TOL,
    DIVERGENCE_BOUND,
};
use batstab::engine::{run, RunTrace};
use batstab::objective::Objective;
use batstab::parallel::{try_map_indexed, with_jobs};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

pub use config::ConfigFile;
pub use error::CliError;

use config::{
    BenchSuiteConfig, CommonFlags, DynamicsFlags, EngineFlags, GridFlags, HitprobConfig,
    OptimizeConfig, RegionConfig, RunSettings, TargetFlags, TraceConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "batstab",
    version,
    about = "Bat algorithm experiments and stability analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single optimizer run: trace CSV and JSON summary
    #[command(allow_negative_numbers = true)]
    Optimize {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// All nine benchmarks over several seeds
    #[command(allow_negative_numbers = true)]
    BenchSuite {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        engine: EngineFlags,
        /// Number of consecutive seeds starting at --seed
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Rasterize the (l, m) stability region
    #[command(allow_negative_numbers = true)]
    StabilityRegion {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Iterate the reduced (x, v) system
    #[command(allow_negative_numbers = true)]
    DynamicTrace {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        dynamics: DynamicsFlags,
    },
    /// Estimate the probability of reaching the optimality region
    #[command(allow_negative_numbers = true)]
    Hitprob {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        engine: EngineFlags,
        #[command(flatten)]
        target: TargetFlags,
    },
}

/// Resolves and runs one subcommand, returning the text to print on success.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Optimize { common, engine } => {
            cmd_optimize(&OptimizeConfig::resolve(common, engine)?)
        }
        Command::BenchSuite {
            common,
            engine,
            seeds,
        } => cmd_bench_suite(&BenchSuiteConfig::resolve(common, engine, *seeds)?),
        Command::StabilityRegion { common, grid } => {
            cmd_stability_region(&RegionConfig::resolve(common, grid)?)
        }
        Command::DynamicTrace { common, dynamics } => {
            cmd_dynamic_trace(&TraceConfig::resolve(common, dynamics)?)
        }
        Command::Hitprob {
            common,
            engine,
            target,
        } => cmd_hitprob(&HitprobConfig::resolve(common, engine, target)?),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run_args<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Validation(e.to_string()))?;
    execute(&cli)
}

fn prepare_out_dir(run: &RunSettings) -> Result<(), CliError> {
    fs::create_dir_all(&run.out_dir).map_err(|e| {
        CliError::Validation(format!(
            "cannot create output directory {}: {e}",
            run.out_dir.display()
        ))
    })?;
    let probe = run.out_dir.join(".batstab-write-test");
    File::create(&probe)
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| {
            CliError::Validation(format!(
                "output directory {} is not writable: {e}",
                run.out_dir.display()
            ))
        })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_manifest(run: &RunSettings, manifest: &ConfigFile) -> Result<(), CliError> {
    fs::write(run.out_dir.join("manifest.json"), manifest.to_json())?;
    Ok(())
}

fn write_trace(path: &Path, trace: &RunTrace) -> Result<(), CliError> {
    let mut w = create(path)?;
    trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn cmd_optimize(cfg: &OptimizeConfig) -> Result<String, CliError> {
    prepare_out_dir(&cfg.run)?;
    let spec = cfg.engine.spec();
    let started = Instant::now();
    let trace = with_jobs(cfg.run.jobs, || run(&spec, &cfg.engine.params))??;
    let wall_time = started.elapsed().as_secs_f64();

    write_trace(&cfg.run.out_dir.join("trace.csv"), &trace)?;
    let monotone = check_monotone(&trace).passed();
    write_json(
        &cfg.run.out_dir.join("summary.json"),
        &json!({
            "objective": spec.name(),
            "dimension": spec.dimension,
            "seed": cfg.engine.params.seed,
            "initial_best_fitness": trace.initial_best(),
            "final_best_fitness": trace.best_fitness,
            "improvement_factor": trace.improvement_factor(),
            "best_position": trace.best_position,
            "monotone": monotone,
            "wall_time_s": wall_time,
        }),
    )?;
    write_manifest(&cfg.run, &cfg.manifest())?;
    if !monotone {
        return Err(CliError::Runtime("best-fitness sequence increased".into()));
    }
    Ok(format!(
        "{} D={} seed={}: best {} after {} iterations ({:.3}s)",
        spec.name(),
        spec.dimension,
        cfg.engine.params.seed,
        trace.best_fitness,
        cfg.engine.params.t_max,
        wall_time
    ))
}

#[derive(Debug, Clone, Serialize)]
struct AggregateRow {
    function: &'static str,
    median_final_best: f64,
    median_improvement_factor: f64,
}

pub fn cmd_bench_suite(cfg: &BenchSuiteConfig) -> Result<String, CliError> {
    prepare_out_dir(&cfg.run)?;
    let traces_dir = cfg.run.out_dir.join("traces");
    fs::create_dir_all(&traces_dir)?;

    let functions = Objective::ALL;
    let seeds = cfg.seeds;
    let seed_of = |s: usize| cfg.params.seed.wrapping_add(s as u64);
    let traces = with_jobs(cfg.run.jobs, || {
        try_map_indexed(functions.len() * seeds, |i| {
            let spec = functions[i / seeds].spec(cfg.dimension);
            run(&spec, &cfg.params.clone().with_seed(seed_of(i % seeds)))
        })
    })??;

    let mut rows = Vec::with_capacity(functions.len());
    for (fi, objective) in functions.iter().enumerate() {
        let group = &traces[fi * seeds..(fi + 1) * seeds];
        for (s, trace) in group.iter().enumerate() {
            if let batstab::Monotonicity::Fail { index } = check_monotone(trace) {
                return Err(CliError::Runtime(format!(
                    "{objective} seed {}: best fitness increased at iteration {index}",
                    seed_of(s)
                )));
            }
            let name = format!("{}_seed{}.csv", objective.name().to_lowercase(), seed_of(s));
            write_trace(&traces_dir.join(name), trace)?;
        }
        let finals: Vec<f64> = group.iter().map(|t| t.best_fitness).collect();
        let factors: Vec<f64> = group.iter().map(RunTrace::improvement_factor).collect();
        rows.push(AggregateRow {
            function: objective.name(),
            median_final_best: median(&finals),
            median_improvement_factor: median(&factors),
        });
    }

    let mut w = csv_writer(&cfg.run.out_dir.join("aggregate.csv"))?;
    for row in &rows {
        w.serialize(row)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.flush()?;
    write_manifest(&cfg.run, &cfg.manifest())?;

    let mut report = format!(
        "{:<12} {:>18} {:>18}\n",
        "function", "median final", "median factor"
    );
    for r in &rows {
        report += &format!(
            "{:<12} {:>18.6e} {:>18.6e}\n",
            r.function, r.median_final_best, r.median_improvement_factor
        );
    }
    Ok(report.trim_end().to_string())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub fn cmd_stability_region(cfg: &RegionConfig) -> Result<String, CliError> {
    prepare_out_dir(&cfg.run)?;
    let raster = with_jobs(cfg.run.jobs, || {
        rasterize_region(cfg.l_range, cfg.m_range, cfg.step)
    })??;
    let mut w = create(&cfg.run.out_dir.join("region.csv"))?;
    raster.write_csv(&mut w)?;
    w.flush()?;

    let count = |v: Verdict| raster.cells.iter().filter(|c| c.verdict == v).count();
    let (stable, marginal, unstable) = (
        count(Verdict::Stable),
        count(Verdict::Marginal),
        count(Verdict::Unstable),
    );
    write_json(
        &cfg.run.out_dir.join("summary.json"),
        &json!({
            "cells": raster.cells.len(),
            "l_values": raster.l_values.len(),
            "m_values": raster.m_values.len(),
            "stable": stable,
            "marginal": marginal,
            "unstable": unstable,
        }),
    )?;
    write_manifest(&cfg.run, &cfg.manifest())?;
    Ok(format!(
        "{} cells: {stable} stable, {marginal} marginal, {unstable} unstable",
        raster.cells.len()
    ))
}

pub fn cmd_dynamic_trace(cfg: &TraceConfig) -> Result<String, CliError> {
    prepare_out_dir(&cfg.run)?;
    let trajectory = iterate_trajectory(&cfg.params, cfg.x0, cfg.v0, cfg.k_max)?;
    let mut w = create(&cfg.run.out_dir.join("trajectory.csv"))?;
    trajectory.write_csv(&mut w)?;
    w.flush()?;

    let report = region_verdict(cfg.params.l, cfg.params.m);
    let converged_at = trajectory.convergence_index(CONVERGENCE_TOL);
    let diverged = trajectory.diverges(DIVERGENCE_BOUND);
    let eigen: Vec<_> = report
        .eigenvalues
        .iter()
        .map(|z| json!({ "magnitude": z.norm(), "phase": z.arg() }))
        .collect();
    write_json(
        &cfg.run.out_dir.join("summary.json"),
        &json!({
            "l": cfg.params.l,
            "m": cfg.params.m,
            "p": cfg.params.p,
            "verdict": report.verdict,
            "spectral_radius": report.spectral_radius,
            "eigenvalues": eigen,
            "converged_at": converged_at,
            "diverged": diverged,
            "escaped_at": trajectory.escape_index(DIVERGENCE_BOUND),
            "overflowed": trajectory.diverged,
        }),
    )?;
    write_manifest(&cfg.run, &cfg.manifest())?;
    let outcome = match (converged_at, diverged) {
        (Some(k), _) => format!("converged at k={k}"),
        (None, true) => "diverged".to_string(),
        (None, false) => format!("no convergence within k={}", cfg.k_max),
    };
    Ok(format!(
        "l={} m={}: {} (spectral radius {:.6}); {outcome}",
        cfg.params.l, cfg.params.m, report.verdict, report.spectral_radius
    ))
}

pub fn cmd_hitprob(cfg: &HitprobConfig) -> Result<String, CliError> {
    prepare_out_dir(&cfg.run)?;
    let spec = cfg.engine.spec();
    let curve = with_jobs(cfg.run.jobs, || {
        estimate_hit_probability(&spec, &cfg.engine.params, &cfg.target, cfg.replicas)
    })??;
    let mut w = create(&cfg.run.out_dir.join("hit_curve.csv"))?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    write_json(
        &cfg.run.out_dir.join("summary.json"),
        &json!({
            "replicas": curve.replicas,
            "epsilon": cfg.target.epsilon,
            "theta": cfg.target.theta,
            "final_hit_fraction": curve.final_fraction(),
            "median_first_hit": curve.median_first_hit(),
            "first_hits": curve.first_hits,
        }),
    )?;
    write_manifest(&cfg.run, &cfg.manifest())?;
    Ok(curve.summary_line())
}
