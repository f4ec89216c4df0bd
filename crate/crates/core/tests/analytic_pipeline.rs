use qthermo::analytic::{analytic_qfi, AnalyticParams};
use qthermo::bath::{BathLabel, BathSpec, SpectralDensity};
use qthermo::dynamics::TimeGrid;
use qthermo::liouvillian::{ApproximationVariant, InitialState, ModelForm, SystemSpec};
use qthermo::metrology::{transient_qfi, EstimationTarget, Parameter, ProbeSetup};
use qthermo::Qubit;

fn sup_relative(numeric: &[f64], exact: &[f64]) -> f64 {
    let scale = exact.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let diff = numeric
        .iter()
        .zip(exact)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    diff / scale
}

#[test]
fn numeric_qfi_matches_closed_form() {
    let sd = SpectralDensity::default();
    for (beta, mu) in [(1.0, 0.01), (1.0, 0.02), (1.0, 0.03), (0.1, 0.01)] {
        let bath = BathSpec::new(BathLabel::Common, beta, mu, 0.0, sd).unwrap();
        let setup = ProbeSetup::new(
            SystemSpec::single(1.0, bath, InitialState::Ground),
            ApproximationVariant::default(),
            ModelForm::Auto,
            EstimationTarget::new(Parameter::BetaCommon, Qubit::First),
        )
        .unwrap();
        let p = AnalyticParams::new(1.0, beta, mu, &sd).unwrap();
        let grid = TimeGrid::linear(0.0, 10.0 / p.total_rate(), 201).unwrap();
        let series = transient_qfi(&setup, &grid).unwrap();
        let exact: Vec<f64> = series.times.iter().map(|t| analytic_qfi(&p, *t)).collect();
        let err = sup_relative(&series.values, &exact);
        assert!(err < 1e-5, "beta {beta}, mu {mu}: {err:e}");
    }
}
