//! Pilot runs used to freeze the regression thresholds in the acceptance suite.
//!
//! cargo run --release -p batstab --example calibrate

use batstab::convergence::{estimate_hit_probability, ConvergenceTarget};
use batstab::engine::{run, BaParams};
use batstab::objective::Objective;
use batstab::parallel::map_indexed;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn improvement_factors(base: &BaParams, seeds: u64) -> Vec<f64> {
    let spec = Objective::Sphere.spec(30);
    map_indexed(seeds as usize, |i| {
        let trace = run(&spec, &base.clone().with_seed(i as u64 + 1)).unwrap();
        trace.improvement_factor()
    })
}

fn main() {
    for (label, params) in [
        ("stable (m=2, l=0.5)", BaParams::stable_reference()),
        ("unstable (m=-3, l=4)", BaParams::unstable_reference()),
    ] {
        let f = improvement_factors(&params, 20);
        let min = f.iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "{label}: median improvement {:.4e}, min {:.4e}",
            median(f),
            min
        );
    }

    let spec = Objective::Sphere.spec(2);
    let curve = estimate_hit_probability(
        &spec,
        &BaParams::stable_reference(),
        &ConvergenceTarget::new(0.0, 1e-2),
        200,
    )
    .unwrap();
    println!("hit probability, sphere D=2: {}", curve.summary_line());
    let curve = estimate_hit_probability(
        &spec,
        &BaParams::unstable_reference(),
        &ConvergenceTarget::new(0.0, 1e-2),
        200,
    )
    .unwrap();
    println!(
        "hit probability, sphere D=2, unstable: {}",
        curve.summary_line()
    );
}
