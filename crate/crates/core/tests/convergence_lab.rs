use batstab::convergence::{estimate_hit_probability, ConvergenceTarget, HitProbabilityCurve};
use batstab::engine::{run, BaParams};
use batstab::objective::Objective;
use batstab::parallel::with_jobs;

#[test]
fn curve_is_independent_of_execution_order() {
    let spec = Objective::Rastrigin.spec(2);
    let params = BaParams {
        t_max: 80,
        ..BaParams::stable_reference()
    };
    let target = ConvergenceTarget::new(0.0, 0.5);
    let serial = with_jobs(Some(1), || {
        estimate_hit_probability(&spec, &params, &target, 24)
    })
    .unwrap()
    .unwrap();
    let pooled = with_jobs(Some(4), || {
        estimate_hit_probability(&spec, &params, &target, 24)
    })
    .unwrap()
    .unwrap();
    assert_eq!(serial, pooled);

    let mut columns: Vec<Vec<f64>> = (0..24u64)
        .map(|i| {
            run(&spec, &params.clone().with_seed(params.seed + i))
                .unwrap()
                .best_fitness_column()
        })
        .collect();
    columns.reverse();
    let reversed = HitProbabilityCurve::from_best_columns(&columns, target);
    assert_eq!(reversed.records, serial.records);
}

#[test]
fn hit_curve_is_monotone_and_bounded() {
    for objective in [Objective::Sphere, Objective::Griewank, Objective::Step] {
        let spec = objective.spec(3);
        let params = BaParams {
            t_max: 100,
            ..BaParams::stable_reference()
        };
        let c = estimate_hit_probability(&spec, &params, &ConvergenceTarget::new(0.0, 0.1), 30)
            .unwrap();
        assert!(c.is_non_decreasing());
        assert!(c
            .records
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.hit_fraction)));
        assert_eq!(c.records.len(), 101);
    }
}

#[test]
fn curve_csv_round_trip() {
    let spec = Objective::Sphere.spec(2);
    let params = BaParams {
        t_max: 30,
        ..BaParams::stable_reference()
    };
    let c =
        estimate_hit_probability(&spec, &params, &ConvergenceTarget::new(0.0, 0.05), 7).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    assert!(buf.starts_with(b"t,hit_fraction\n"));
    assert_eq!(
        HitProbabilityCurve::read_csv(buf.as_slice()).unwrap(),
        c.records
    );
}

#[test]
fn stable_parameters_hit_more_often_than_unstable_ones() {
    // Paired comparison at equal budget and seeds on a harder low-D instance.
    let spec = Objective::Sphere.spec(5);
    let target = ConvergenceTarget::new(0.0, 1e-4);
    let budget = |p: BaParams| BaParams { t_max: 60, ..p };
    let stable =
        estimate_hit_probability(&spec, &budget(BaParams::stable_reference()), &target, 100)
            .unwrap();
    let unstable =
        estimate_hit_probability(&spec, &budget(BaParams::unstable_reference()), &target, 100)
            .unwrap();
    let area = |c: &HitProbabilityCurve| c.records.iter().map(|r| r.hit_fraction).sum::<f64>();
    assert!(
        area(&stable) > area(&unstable),
        "{} vs {}",
        area(&stable),
        area(&unstable)
    );
}
