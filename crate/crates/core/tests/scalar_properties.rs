mod common;

use kiss_control::model::{BoundaryCondition, Status};
use kiss_control::oracle::{self, GridSpec, MARGINAL_BAND_FACTOR};
use kiss_control::scalar::{
    min_mortality, min_zone_width, scalar_verdict, top_eigenvalue_scalar, ScalarCriterionInput,
};
use kiss_control::model::SpectralMethod;
use proptest::prelude::*;

fn top(input: &ScalarCriterionInput) -> f64 {
    top_eigenvalue_scalar(input).unwrap().top_eigenvalue
}

fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdict_matches_oracle_sign(input in common::scalar_input()) {
        let verdict = scalar_verdict(&input).unwrap();
        let report = oracle::top_eigenvalue_fd(&input.to_layout(), &GridSpec::default()).unwrap();
        prop_assume!(report.top_eigenvalue.abs() > MARGINAL_BAND_FACTOR * report.error_estimate);
        prop_assume!(verdict.status != Status::Marginal);
        let expected = if report.top_eigenvalue < 0.0 { Status::Eradication } else { Status::Survival };
        prop_assert_eq!(verdict.status, expected, "E = {}", report.top_eigenvalue);
    }

    #[test]
    fn top_eigenvalue_monotone(input in common::scalar_input()) {
        let mu: Vec<f64> = (0..5).map(|k| top(&input.with_mu(input.mu * (1.0 + 0.5 * k as f64)))).collect();
        prop_assert!(nonincreasing(&mu), "{mu:?}");
        let lambda: Vec<f64> = (0..5)
            .map(|k| top(&ScalarCriterionInput { lambda: input.lambda * (1.0 + 0.5 * k as f64), ..input.clone() }))
            .rev()
            .collect();
        prop_assert!(nonincreasing(&lambda), "{lambda:?}");
        let width: Vec<f64> = (0..5)
            .map(|k| top(&ScalarCriterionInput { big_r: input.big_r * (1.0 + 0.25 * k as f64), ..input.clone() }))
            .rev()
            .collect();
        prop_assert!(nonincreasing(&width), "{width:?}");
    }

    #[test]
    fn dirichlet_below_periodic(input in common::scalar_input()) {
        let grid = GridSpec::default();
        let at = |bc| oracle::top_eigenvalue_fd(&ScalarCriterionInput { bc, ..input.clone() }.to_layout(), &grid).unwrap();
        let d = at(BoundaryCondition::Dirichlet).top_eigenvalue;
        let p = at(BoundaryCondition::Periodic).top_eigenvalue;
        prop_assert!(d <= p + 1e-6, "dirichlet {d} periodic {p}");
    }

    #[test]
    fn dispersion_root_agrees_with_oracle(input in common::scalar_input()) {
        let report = top_eigenvalue_scalar(&input).unwrap();
        prop_assume!(report.method == SpectralMethod::DispersionRoot);
        let fd = oracle::top_eigenvalue_fd(&input.to_layout(), &GridSpec::default()).unwrap();
        prop_assert!(
            (fd.top_eigenvalue - report.top_eigenvalue).abs() <= 10.0 * fd.error_estimate.max(1e-12),
            "root {} fd {} err {}", report.top_eigenvalue, fd.top_eigenvalue, fd.error_estimate
        );
    }

    #[test]
    fn min_mortality_is_a_crossing(input in common::scalar_input()) {
        let Ok(mu) = min_mortality(&input) else { return Ok(()) };
        prop_assume!(mu > 0.0);
        prop_assert_eq!(scalar_verdict(&input.with_mu(mu * (1.0 + 1e-6))).unwrap().status, Status::Eradication);
        prop_assert_ne!(scalar_verdict(&input.with_mu(mu * (1.0 - 1e-6))).unwrap().status, Status::Eradication);
    }

    #[test]
    fn min_zone_width_is_a_crossing(input in common::scalar_input()) {
        let Ok(r) = min_zone_width(&input) else { return Ok(()) };
        prop_assume!(r > 0.0);
        prop_assert_eq!(scalar_verdict(&input.with_r(r * (1.0 + 1e-6))).unwrap().status, Status::Eradication);
        prop_assert_ne!(scalar_verdict(&input.with_r(r * (1.0 - 1e-6))).unwrap().status, Status::Eradication);
    }
}
