//! Named end-to-end checks against closed forms and the published figures.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::analytic::{analytic_qfi, steady_qfi as thermal_qfi, AnalyticParams};
use crate::bath::{gamma_rate, BathLabel, BathSpec, SpectralDensity};
use crate::dynamics::{evolve, TimeGrid};
use crate::error::{Error, Result};
use crate::liouvillian::{slowest_relaxation_rate, ApproximationVariant, InitialState, ModelForm, SystemSpec};
use crate::metrology::{qfi_2x2, qfi_spectral, steady_qfi, transient_qfi, EstimationTarget, Parameter, ProbeSetup, QfiSeries};
use crate::operators::{c, CMatrix, DensityMatrix, Qubit, POSITIVITY_TOL};

use super::config::{Scenario, ScenarioKind};

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../../configs/", $name, ".toml")))),*]
    };
}

/// The shipped figure configurations, by name.
pub const BUNDLED: &[(&str, &str)] = bundled!(
    "fig2a_mu001", "fig2a_mu002", "fig2a_mu003", "fig2b", "fig2c",
    "fig3a", "fig3a_inset", "fig3b", "fig3b_inset", "fig4",
    "fig5a_l1", "fig5a_l2", "fig5a_inset",
    "fig6a_k1e-4", "fig6a_k1e-3", "fig6a_k1e-2", "fig6b",
    "fig7a_common", "fig7a_l1", "fig7a_l2", "fig7b_common", "fig7b_l1", "fig7b_l2",
    "fig8a", "fig8b", "fig9a", "fig9b",
    "fig10a_common", "fig10a_l1", "fig10a_l2", "fig10b_l1_k1e-2", "fig10b_l1_k1e-1", "fig10b_l2_k1e-2",
    "fig11a", "fig11b",
);

pub fn bundled(name: &str) -> Result<Scenario> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("no bundled scenario `{name}`")))?;
    Scenario::parse(text)
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub criterion: u8,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn(&Context) -> Result<(bool, String)>;

pub struct Check {
    pub name: &'static str,
    pub criterion: u8,
    pub description: &'static str,
    run: CheckFn,
}

/// Transient runs shared between checks.
#[derive(Default)]
pub struct Context {
    cache: Mutex<HashMap<String, Arc<QfiSeries>>>,
}

impl Context {
    fn transient(&self, s: &Scenario) -> Result<Arc<QfiSeries>> {
        self.transient_on(s, &s.time_grid()?)
    }

    fn transient_on(&self, s: &Scenario, grid: &TimeGrid) -> Result<Arc<QfiSeries>> {
        let key = format!("{}|{:?}|{:?}|{:?}|{:?}", s.name, s.setup.variant, s.setup.spec, s.setup.target, grid);
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let series = Arc::new(transient_qfi(&s.setup, grid)?);
        self.cache.lock().expect("cache lock").insert(key, series.clone());
        Ok(series)
    }

    fn cached(&self) -> Vec<(String, Arc<QfiSeries>)> {
        let mut v: Vec<_> = self
            .cache
            .lock()
            .expect("cache lock")
            .iter()
            .map(|(k, s)| (k.clone(), s.clone()))
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }
}

pub fn checks() -> Vec<Check> {
    vec![
        Check { name: "analytic_oracle", criterion: 1, description: "single-qubit pipeline QFI matches the closed form", run: analytic_oracle },
        Check { name: "steady_qfi", criterion: 2, description: "steady single-qubit QFI matches the thermal value", run: steady_single },
        Check { name: "thermalization", criterion: 3, description: "single bath relaxes to the Gibbs state", run: thermalization },
        Check { name: "secular_dichotomy", criterion: 4, description: "partial vs full secular at large and small detuning", run: secular_dichotomy },
        Check { name: "unified_vs_redfield", criterion: 5, description: "unified and Redfield coefficients agree at small detuning", run: unified_vs_redfield },
        Check { name: "heatmap_regions", criterion: 6, description: "cold local baths raise the steady QFI for beta_c", run: heatmap_regions },
        Check { name: "remote_sensing", criterion: 7, description: "hot local bath is visible through the other qubit", run: remote_sensing },
        Check { name: "lamb_shift_ablation", criterion: 8, description: "remote sensing collapses without the Lamb shift", run: lamb_shift_ablation },
        Check { name: "coupled_enhancement", criterion: 9, description: "direct coupling raises and advances the QFI peak", run: coupled_enhancement },
        Check { name: "steady_coupled", criterion: 10, description: "steady remote QFI for beta_l1 with k = 0.1", run: steady_coupled },
        Check { name: "dephasing", criterion: 11, description: "dephasing never increases the QFI", run: dephasing },
        Check { name: "detailed_balance", criterion: 12, description: "rates satisfy detailed balance", run: detailed_balance },
        Check { name: "properties", criterion: 12, description: "trace, Hermiticity, positivity and QFI identities on transient runs", run: properties },
    ]
}

/// Run every check whose name contains `filter`. The property check runs
/// last so that it sees the transient runs of the other checks.
pub fn run_checks(filter: Option<&str>) -> Vec<CheckOutcome> {
    let ctx = Context::default();
    let selected: Vec<Check> = checks()
        .into_iter()
        .filter(|c| filter.is_none_or(|f| c.name.contains(f)))
        .collect();
    let (last, first): (Vec<&Check>, Vec<&Check>) = selected.iter().partition(|c| c.name == "properties");
    let run = |c: &Check| {
        let (passed, detail) = match (c.run)(&ctx) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        CheckOutcome {
            name: c.name,
            criterion: c.criterion,
            passed,
            detail,
        }
    };
    let mut out: Vec<CheckOutcome> = first.into_par_iter().map(|c| run(c)).collect();
    out.extend(last.into_iter().map(run));
    out.sort_by_key(|o| (o.criterion, o.name));
    out
}

fn sup_relative(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    diff / scale
}

fn single_setup(beta: f64, mu_x: f64, init: InitialState, variant: ApproximationVariant) -> Result<ProbeSetup> {
    let bath = BathSpec::new(BathLabel::Common, beta, mu_x, 0.0, SpectralDensity::default())?;
    ProbeSetup::new(
        SystemSpec::single(1.0, bath, init),
        variant,
        ModelForm::Auto,
        EstimationTarget::new(Parameter::BetaCommon, Qubit::First),
    )
}

fn analytic_oracle(_: &Context) -> Result<(bool, String)> {
    let sd = SpectralDensity::default();
    let mut worst = 0.0_f64;
    for mu in [0.01, 0.02, 0.03] {
        let setup = single_setup(1.0, mu, InitialState::Ground, ApproximationVariant::default())?;
        let p = AnalyticParams::new(1.0, 1.0, mu, &sd)?;
        let grid = TimeGrid::linear(0.0, 10.0 / p.total_rate(), 201)?;
        let series = transient_qfi(&setup, &grid)?;
        let exact: Vec<f64> = series.times.iter().map(|t| analytic_qfi(&p, *t)).collect();
        worst = worst.max(sup_relative(&series.values, &exact));
    }
    Ok((worst < 1e-5, format!("max relative sup-norm error {worst:.3e} (limit 1e-5)")))
}

fn steady_single(_: &Context) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (beta, expect) in [(0.1, 0.2494), (1.0, 0.1966)] {
        let setup = single_setup(beta, 0.01, InitialState::Ground, ApproximationVariant::default())?;
        let f = steady_qfi(&setup)?.qfi;
        let closed = thermal_qfi(1.0, beta);
        ok &= (f - expect).abs() <= 1e-4 && (f / closed - 1.0).abs() <= 1e-6;
        parts.push(format!("beta={beta}: F={f:.6} (expected {expect} +/- 1e-4, closed form {closed:.6})"));
    }
    Ok((ok, parts.join("; ")))
}

fn thermalization(_: &Context) -> Result<(bool, String)> {
    let mixed = DensityMatrix::new(CMatrix::from_row_slice(
        2,
        2,
        &[c(0.7, 0.0), c(0.2, -0.1), c(0.2, 0.1), c(0.3, 0.0)],
    ))?;
    let inits = [
        InitialState::Excited,
        InitialState::Ground,
        InitialState::Plus,
        InitialState::Custom(mixed),
    ];
    let variants = [ApproximationVariant::partial(), ApproximationVariant::full(), ApproximationVariant::unified()];
    let mut jobs = Vec::new();
    for beta in [0.1, 1.0, 5.0] {
        for init in &inits {
            for v in variants {
                jobs.push((beta, init.clone(), v));
            }
        }
    }
    let worst = jobs
        .into_par_iter()
        .map(|(beta, init, v)| -> Result<f64> {
            let setup = single_setup(beta, 0.02, init.clone(), v)?;
            let model = setup.model()?;
            // Coherences relax at half the population rate.
            let t_end = 60.0 / slowest_relaxation_rate(&setup.spec);
            let traj = evolve(&init.density(2)?, &model, &TimeGrid::linear(0.0, t_end, 2)?)?;
            let p = 1.0 / (1.0 + f64::exp(beta));
            let gibbs = DensityMatrix::diagonal(&[p, 1.0 - p])?;
            traj.states[1].trace_distance(&gibbs)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((worst < 1e-8, format!("max trace distance to Gibbs {worst:.3e} (limit 1e-8)")))
}

fn with_variant(name: &str, variant: &str) -> Result<Scenario> {
    let mut s = bundled(name)?;
    s.set_variant(variant)?;
    Ok(s)
}

fn secular_dichotomy(ctx: &Context) -> Result<(bool, String)> {
    let a_psa = ctx.transient(&with_variant("fig3a", "partial")?)?;
    let a_full = ctx.transient(&with_variant("fig3a", "full")?)?;
    let large = sup_relative(&a_psa.values, &a_full.values);

    let b_psa_s = with_variant("fig3b", "partial")?;
    let b_full_s = with_variant("fig3b", "full")?;
    let b_psa = ctx.transient(&b_psa_s)?;
    let b_full = ctx.transient(&b_full_s)?;
    let ratio = b_psa.peak().1 / b_full.peak().1;

    let steady_psa = steady_qfi(&b_psa_s.setup)?.qfi;
    let steady_full = steady_qfi(&b_full_s.setup)?.qfi;
    let gap = (steady_psa - steady_full).abs();

    let ok = large <= 0.01 && ratio >= 1.2 && gap <= 1e-4;
    Ok((
        ok,
        format!(
            "omega_-=0.5 sup-norm {large:.3e} (<= 1e-2); omega_-=0.01 peak ratio {ratio:.4} (>= 1.2); \
             steady PSA {steady_psa:.6} vs full {steady_full:.6}, gap {gap:.3e} (<= 1e-4)"
        ),
    ))
}

fn unified_vs_redfield(ctx: &Context) -> Result<(bool, String)> {
    let redfield = ctx.transient(&with_variant("fig3b", "partial")?)?;
    let unified = ctx.transient(&bundled("fig3b_inset")?)?;
    let err = sup_relative(&unified.values, &redfield.values);
    Ok((err <= 0.02, format!("sup-norm relative difference {err:.3e} (limit 2e-2)")))
}

fn heatmap_regions(_: &Context) -> Result<(bool, String)> {
    let s = bundled("fig4")?;
    let axis = s.heatmap.as_ref().expect("heatmap axis").values();
    let threshold = thermal_qfi(1.0, s.setup.beta()?);
    let cell = |b: f64| -> Result<f64> {
        if !axis.contains(&b) {
            return Err(Error::Config(format!("{b} is not on the heatmap grid")));
        }
        let mut setup = s.setup.clone();
        setup.spec = setup.spec.with_beta(BathLabel::Local1, b)?.with_beta(BathLabel::Local2, b)?;
        Ok(steady_qfi(&setup)?.qfi)
    };
    let cold = cell(5.0)?;
    let hot = cell(0.5)?;
    Ok((
        cold > threshold && hot < threshold,
        format!("F(5,5) = {cold:.6}, F(0.5,0.5) = {hot:.6}, threshold {threshold:.6}"),
    ))
}

fn remote_sensing(ctx: &Context) -> Result<(bool, String)> {
    let l1 = ctx.transient(&bundled("fig5a_l1")?)?.peak().1;
    let l2 = ctx.transient(&bundled("fig5a_l2")?)?.peak().1;
    let inset = ctx.transient(&bundled("fig5a_inset")?)?.peak().1;
    let (r1, r2) = (l1 / l2, l1 / inset);
    Ok((
        r1 >= 5.0 && r2 >= 10.0,
        format!("peaks: l1 {l1:.4e}, l2 {l2:.4e}, l1 at omega_-=0.5 {inset:.4e}; ratios {r1:.3e} (>= 5), {r2:.3e} (>= 10)"),
    ))
}

fn lamb_shift_ablation(ctx: &Context) -> Result<(bool, String)> {
    let with = ctx.transient(&bundled("fig5a_l1")?)?.peak().1;
    let mut off = bundled("fig5a_l1")?;
    off.set_lamb_shift(false);
    let without = ctx.transient(&off)?.peak().1;
    let ratio = without / with;
    Ok((ratio < 0.2, format!("peak without / with Lamb shift = {ratio:.3e} (limit 0.2)")))
}

fn coupled_enhancement(ctx: &Context) -> Result<(bool, String)> {
    let weak = ctx.transient(&bundled("fig6a_k1e-4")?)?;
    let mid = ctx.transient(&bundled("fig6a_k1e-2")?)?;
    let strong = ctx.transient(&bundled("fig6b")?)?;
    let (p_weak, p_strong) = (weak.peak().1, strong.peak().1);
    let t_weak = weak.first_peak().map(|p| p.0).unwrap_or(f64::NAN);
    let t_mid = mid.first_peak().map(|p| p.0).unwrap_or(f64::NAN);
    Ok((
        p_strong > p_weak && t_mid < t_weak,
        format!("peak k=0.1 {p_strong:.4} vs k=1e-4 {p_weak:.4}; first peak at t={t_mid:.1} (k=1e-2) vs t={t_weak:.1} (k=1e-4)"),
    ))
}

fn steady_coupled(_: &Context) -> Result<(bool, String)> {
    let s = bundled("fig7b_l1")?;
    let mut setup = s.setup.clone();
    setup.spec = setup.spec.with_beta(BathLabel::Local1, 1.0)?;
    let f = steady_qfi(&setup)?.qfi;
    Ok((f >= 0.2, format!("F_beta_l1 = {f:.6} (required >= 0.2)")))
}

fn dephasing(ctx: &Context) -> Result<(bool, String)> {
    let pairs = [("fig10a_common", "fig3b"), ("fig10a_l1", "fig5a_l1"), ("fig10a_l2", "fig5a_l2")];
    let mut worst = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for (deph, clean) in pairs {
        let clean_s = bundled(clean)?;
        let grid = clean_s.time_grid()?;
        let base = ctx.transient_on(&clean_s, &grid)?;
        let with = ctx.transient_on(&bundled(deph)?, &grid)?;
        let excess = with
            .values
            .iter()
            .zip(&base.values)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(excess);
        parts.push(format!(
            "{deph}: max excess {excess:.3e}, peak {:.4e} vs {:.4e}",
            with.peak().1,
            base.peak().1
        ));
    }
    Ok((worst <= 1e-10, parts.join("; ")))
}

/// Largest relative violation of `γ(−ω) = e^{−βω} γ(ω)` for a rate
/// function `rate(ω, β)`.
pub fn detailed_balance_violation<F: Fn(f64, f64) -> f64>(rate: F) -> f64 {
    let mut worst = 0.0_f64;
    for beta in [0.1, 0.5, 1.0, 2.0, 5.0] {
        for omega in [0.01, 0.1, 0.49, 0.99, 1.0, 1.5, 3.0] {
            let up = rate(-omega, beta);
            let down = rate(omega, beta);
            let expect = (-beta * omega).exp() * down;
            worst = worst.max((up - expect).abs() / expect.abs());
        }
    }
    worst
}

fn detailed_balance(_: &Context) -> Result<(bool, String)> {
    let sd = SpectralDensity::default();
    let v = detailed_balance_violation(|w, b| gamma_rate(w, b, &sd));
    Ok((v <= 1e-12, format!("max relative violation {v:.3e} (limit 1e-12)")))
}

fn properties(ctx: &Context) -> Result<(bool, String)> {
    for (name, _) in BUNDLED {
        let s = bundled(name)?;
        if s.kind == ScenarioKind::Transient {
            ctx.transient(&s)?;
        }
    }
    let runs = ctx.cached();
    let mut failures = Vec::new();
    let (mut trace, mut herm, mut qfi_gap, mut dpi) = (0.0_f64, 0.0_f64, 0.0_f64, f64::NEG_INFINITY);
    let mut min_gkls = f64::INFINITY;
    let mut min_psa = f64::INFINITY;
    for (key, series) in &runs {
        let label = key.split('|').next().unwrap_or(key);
        let gkls = key.contains("secular: Full") || key.contains("scheme: Unified");
        for d in &series.diagnostics {
            trace = trace.max(d.trace_error);
            herm = herm.max(d.hermiticity);
            if gkls {
                min_gkls = min_gkls.min(d.min_eigenvalue);
            } else {
                min_psa = min_psa.min(d.min_eigenvalue);
            }
        }
        for (i, (rho, d)) in series.probe_states.iter().zip(&series.probe_derivatives).enumerate() {
            let a = qfi_2x2(rho, d)?;
            let b = qfi_spectral(rho, d)?;
            if b > 0.0 {
                qfi_gap = qfi_gap.max((a - b).abs() / b);
            }
            let full = series.full_values[i];
            let excess = series.values[i] - full;
            dpi = dpi.max(excess / full.max(1e-300));
            if series.values[i] < 0.0 {
                failures.push(format!("{label}: negative QFI {:.3e}", series.values[i]));
            }
        }
    }
    if trace >= 1e-9 {
        failures.push(format!("trace drift {trace:.3e}"));
    }
    if herm >= 1e-10 {
        failures.push(format!("Hermiticity {herm:.3e}"));
    }
    if min_gkls < -1e-12 {
        failures.push(format!("GKLS min eigenvalue {min_gkls:.3e}"));
    }
    if min_psa < -1e-6 {
        failures.push(format!("Redfield min eigenvalue {min_psa:.3e}"));
    }
    if qfi_gap > 1e-10 {
        failures.push(format!("qfi_2x2 vs spectral {qfi_gap:.3e}"));
    }
    if dpi > 1e-9 {
        failures.push(format!("reduced QFI exceeds full QFI by {dpi:.3e} relative"));
    }
    let summary = format!(
        "{} runs: trace drift {trace:.2e}, Hermiticity {herm:.2e}, min eig GKLS {min_gkls:.2e} / Redfield {min_psa:.2e} \
         (positivity tol {POSITIVITY_TOL:e}), qfi formula gap {qfi_gap:.2e}, data-processing excess {dpi:.2e}",
        runs.len()
    );
    if failures.is_empty() {
        Ok((true, summary))
    } else {
        Ok((false, format!("{summary}; failures: {}", failures.join(", "))))
    }
}
