use dnls_core::experiment::{blowup_experiment, ExperimentConfig, TRACK_HEADER};
use dnls_core::grid::Grid;
use dnls_core::pde::StopReason;
use dnls_core::profile::build_profile;

fn coarse() -> ExperimentConfig {
    ExperimentConfig {
        nodes_per_lambda: 150.0,
        domain_lambdas: 40.0,
        dt0: 8e-3,
        record_every: 50,
        ..Default::default()
    }
}

#[test]
fn coarse_run_is_consistent() {
    let coeffs = build_profile(2, 1.0, Grid::new(20.0, 0.01).unwrap()).unwrap();
    let r = blowup_experiment(&coeffs, &coarse()).unwrap();
    let s = &r.summary;
    assert_eq!(s.stop, StopReason::Domain);
    assert!(r.rows.len() > 10);
    let first = r.rows[0];
    assert!((first.lambda / s.lambda1 - 1.0).abs() < 1e-6);
    assert!((first.lambda_ode / s.lambda1 - 1.0).abs() < 1e-12);
    assert!((first.t - s.t1).abs() < 1e-18);
    for w in r.rows.windows(2) {
        assert!(w[1].t < w[0].t);
        assert!(w[1].s < w[0].s);
    }
    assert!(s.shrink_factor > 1.5);
    assert!(s.max_eps_h1 < 0.1);
    assert!(s.exponent > 0.0 && s.exponent < 1.5);
    assert_eq!(
        TRACK_HEADER.split(',').count(),
        first.csv_line().split(',').count()
    );
}

#[test]
fn coarse_run_is_deterministic() {
    let coeffs = build_profile(1, 1.0, Grid::new(20.0, 0.01).unwrap()).unwrap();
    let cfg = ExperimentConfig {
        domain_lambdas: 30.0,
        ..coarse()
    };
    let a = blowup_experiment(&coeffs, &cfg).unwrap();
    let b = blowup_experiment(&coeffs, &cfg).unwrap();
    let lines = |r: &dnls_core::experiment::ExperimentResult| {
        r.rows.iter().map(|x| x.csv_line()).collect::<Vec<_>>()
    };
    assert_eq!(lines(&a), lines(&b));
}
