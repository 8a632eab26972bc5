use proptest::prelude::*;

use radiflow::config::{ExperimentKind, RunConfig};
use radiflow::AppError;

fn kind() -> impl Strategy<Value = ExperimentKind> {
    prop_oneof![
        Just(ExperimentKind::NonEq),
        Just(ExperimentKind::Degen),
        Just(ExperimentKind::Poisson),
        Just(ExperimentKind::ModPressure),
    ]
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(
        eps in 1e-4f64..1.0,
        ell in 1e-3f64..10.0,
        ell_s in 0.0f64..100.0,
        mu in 0.1f64..5.0,
        c in proptest::array::uniform4(-2.0f64..2.0),
        k in kind(),
        first in 0.05f64..1.0,
        ratio in 0.1f64..0.9,
        rungs in 1usize..6,
        steps in 1usize..200,
        seed in any::<u64>(),
    ) {
        let mut cfg = RunConfig::default();
        cfg.params.eps = eps;
        cfg.params.ell = ell;
        cfg.params.ell_s = ell_s;
        cfg.params.mu = mu;
        cfg.params.c = c;
        cfg.solver.dt = 0.01;
        cfg.solver.t_end = 0.01 * steps as f64;
        cfg.experiment.kind = k;
        cfg.experiment.eps_ladder = (0..rungs).map(|i| first * ratio.powi(i as i32)).collect();
        cfg.experiment.seed = seed;
        let back = RunConfig::parse(&cfg.serialize()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn unknown_key_reports_line() {
    let err = RunConfig::parse("params.eps = 0.2\n\nparams.bogus = 1\n").unwrap_err();
    match err {
        AppError::Schema { key, line, .. } => {
            assert_eq!(key, "params.bogus");
            assert_eq!(line, 3);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn out_of_range_value_is_a_schema_error_on_its_line() {
    let err = RunConfig::parse("grid.n = 32\nparams.eps = 1.5\n").unwrap_err();
    assert_eq!(err.exit_code(), 1);
    match err {
        AppError::Schema { key, line, .. } => {
            assert_eq!(key, "params.eps");
            assert_eq!(line, 2);
        }
        other => panic!("unexpected {other:?}"),
    }
}
