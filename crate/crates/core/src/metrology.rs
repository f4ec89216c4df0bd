//! Quantum Fisher information for inverse-temperature estimation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bath::BathLabel;
use crate::dynamics::{
    evolve, evolve_with_schedule, steady_residual, steady_state, StateDiagnostics, TimeGrid, Trajectory,
};
use crate::error::{Error, Result};
use crate::liouvillian::{build_model, ApproximationVariant, LiouvillianModel, ModelForm, SystemSpec};
use crate::operators::{hermitian_eigen, max_abs, partial_trace, re, CMatrix, DensityMatrix, Qubit};

/// Below this determinant the closed 2×2 formula hands over to the
/// spectral sum.
pub const DET_FALLBACK: f64 = 1e-12;
/// Eigenvalue pairs with `λᵢ + λⱼ` at or below this are skipped.
pub const SPECTRAL_EPS: f64 = 1e-12;
/// Negative QFI values down to `-CLIP_TOL` are treated as zero.
pub const CLIP_TOL: f64 = 1e-12;
/// Relative agreement demanded between the `h` and `h/2` derivatives.
pub const RICHARDSON_TOL: f64 = 1e-6;
const RICHARDSON_ABS: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 4;

/// `F = Tr[(dρ)²] + Tr[(ρ dρ)²] / det ρ` for a qubit.
pub fn qfi_2x2(rho: &CMatrix, drho: &CMatrix) -> Result<f64> {
    if rho.shape() != (2, 2) || drho.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.nrows().max(drho.nrows()),
        });
    }
    let det = (rho[(0, 0)] * rho[(1, 1)] - rho[(0, 1)] * rho[(1, 0)]).re;
    if det <= DET_FALLBACK {
        return qfi_spectral(rho, drho);
    }
    let d2 = (drho * drho).trace().re;
    let rd = rho * drho;
    Ok(d2 + (&rd * &rd).trace().re / det)
}

/// `F = Σ 2|⟨i|dρ|j⟩|² / (λᵢ + λⱼ)` over the eigenbasis of `ρ`.
pub fn qfi_spectral(rho: &CMatrix, drho: &CMatrix) -> Result<f64> {
    if rho.shape() != drho.shape() || !rho.is_square() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            found: drho.nrows(),
        });
    }
    let (vals, vecs) = hermitian_eigen(rho)?;
    let d = vecs.adjoint() * drho * &vecs;
    let mut f = 0.0;
    for i in 0..vals.len() {
        for j in 0..vals.len() {
            let s = vals[i] + vals[j];
            if s > SPECTRAL_EPS {
                f += 2.0 * d[(i, j)].norm_sqr() / s;
            }
        }
    }
    Ok(f)
}

/// `F_T = F_β / T⁴`.
pub fn qfi_vs_t(f_beta: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    Ok(f_beta / temperature.powi(4))
}

/// Single-shot Cramér-Rao bound on `δβ/β`; infinite when `F_β = 0`.
pub fn relative_error(f_beta: f64, beta: f64) -> f64 {
    if f_beta <= 0.0 {
        return f64::INFINITY;
    }
    1.0 / (beta * f_beta.sqrt())
}

/// Returns the value and whether it was clipped from a tiny negative.
fn clip(value: f64) -> (f64, bool) {
    if value < 0.0 && value >= -CLIP_TOL {
        (0.0, true)
    } else {
        (value, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    BetaCommon,
    BetaLocal1,
    BetaLocal2,
}

impl Parameter {
    pub fn bath(self) -> BathLabel {
        match self {
            Parameter::BetaCommon => BathLabel::Common,
            Parameter::BetaLocal1 => BathLabel::Local1,
            Parameter::BetaLocal2 => BathLabel::Local2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::BetaCommon => "beta_common",
            Parameter::BetaLocal1 => "beta_local1",
            Parameter::BetaLocal2 => "beta_local2",
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which inverse temperature is estimated and from which qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimationTarget {
    pub parameter: Parameter,
    pub probe: Qubit,
}

impl EstimationTarget {
    pub fn new(parameter: Parameter, probe: Qubit) -> Self {
        EstimationTarget { parameter, probe }
    }
}

/// Everything needed to rebuild the generator at a shifted temperature.
#[derive(Debug, Clone)]
pub struct ProbeSetup {
    pub spec: SystemSpec,
    pub variant: ApproximationVariant,
    pub form: ModelForm,
    pub target: EstimationTarget,
}

impl ProbeSetup {
    pub fn new(spec: SystemSpec, variant: ApproximationVariant, form: ModelForm, target: EstimationTarget) -> Result<Self> {
        let setup = ProbeSetup {
            spec,
            variant,
            form,
            target,
        };
        setup.beta()?;
        Ok(setup)
    }

    /// Inverse temperature of the target bath.
    pub fn beta(&self) -> Result<f64> {
        self.spec.validate()?;
        let label = self.target.parameter.bath();
        let beta = self
            .spec
            .bath(label)
            .ok_or_else(|| Error::InvalidParameter(format!("target bath {label} is not in the system")))?
            .beta;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "target inverse temperature must be finite and positive, got {beta}"
            )));
        }
        Ok(beta)
    }

    pub fn model_at(&self, beta: f64) -> Result<LiouvillianModel> {
        let spec = self.spec.with_beta(self.target.parameter.bath(), beta)?;
        build_model(&spec, self.variant, self.form)
    }

    pub fn model(&self) -> Result<LiouvillianModel> {
        build_model(&self.spec, self.variant, self.form)
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        self.spec.initial_state.density(self.spec.dim())
    }

    /// Reduced derivative of the probe. The partial trace of a large
    /// two-qubit derivative leaves a round-off trace that is removed here.
    pub fn probe_derivative(&self, d: &CMatrix) -> Result<CMatrix> {
        Ok(traceless_part(&self.probe_state(d)?))
    }

    /// Reduced state of the probe, or the state itself for one qubit.
    pub fn probe_state(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() == 2 {
            Ok(rho.clone())
        } else {
            partial_trace(rho, self.target.probe)
        }
    }
}

/// Hermitian traceless part of a finite-difference derivative. Round-off
/// in the propagated trace is amplified by `1/h` and would otherwise make
/// the closed and spectral QFI formulas disagree.
fn traceless_part(d: &CMatrix) -> CMatrix {
    let n = d.nrows();
    let h = (d + d.adjoint()) * re(0.5);
    let shift = h.trace() / re(n as f64);
    h - CMatrix::identity(n, n) * shift
}

/// Central-difference derivative of `f` at `beta`, refined until the `h`
/// and `h/2` estimates agree, then Richardson-extrapolated.
pub fn richardson_derivative<F>(beta: f64, f: F) -> Result<(Vec<CMatrix>, f64)>
where
    F: Fn(f64) -> Result<Vec<CMatrix>> + Sync,
{
    let central = |h: f64| -> Result<Vec<CMatrix>> {
        let (plus, minus) = rayon::join(|| f(beta + h), || f(beta - h));
        let (plus, minus) = (plus?, minus?);
        Ok(plus
            .iter()
            .zip(&minus)
            .map(|(p, m)| (p - m) * re(0.5 / h))
            .collect())
    };
    let mut h = (1e-4 * beta).max(1e-5);
    if beta - h <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature {beta} too close to zero for a central difference"
        )));
    }
    let mut coarse = central(h)?;
    let mut rel_change = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENTS {
        let fine = central(h / 2.0)?;
        let scale = fine.iter().map(max_abs).fold(0.0, f64::max);
        let diff = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| max_abs(&(a - b)))
            .fold(0.0, f64::max);
        rel_change = diff / scale.max(f64::MIN_POSITIVE);
        if diff <= RICHARDSON_TOL * scale + RICHARDSON_ABS {
            let extrapolated = coarse
                .iter()
                .zip(&fine)
                .map(|(a, b)| traceless_part(&((b * re(4.0) - a) * re(1.0 / 3.0))))
                .collect();
            return Ok((extrapolated, h / 2.0));
        }
        h /= 2.0;
        coarse = fine;
    }
    Err(Error::DerivativeNonConvergence { rel_change })
}

/// QFI time series of a transient run.
#[derive(Debug, Clone)]
pub struct QfiSeries {
    pub grid: TimeGrid,
    pub times: Vec<f64>,
    /// `F_β` of the probe's reduced state.
    pub values: Vec<f64>,
    /// `F_β` of the full state; equals `values` for a single qubit.
    pub full_values: Vec<f64>,
    pub target: EstimationTarget,
    pub beta: f64,
    pub derivative_step: f64,
    pub clipped: usize,
    /// Diagnostics of the full state at each sample.
    pub diagnostics: Vec<StateDiagnostics>,
    pub probe_states: Vec<CMatrix>,
    pub probe_derivatives: Vec<CMatrix>,
}

impl QfiSeries {
    pub fn qfi_t(&self) -> Vec<f64> {
        self.values.iter().map(|f| f * self.beta.powi(4)).collect()
    }

    pub fn peak(&self) -> (f64, f64) {
        self.times
            .iter()
            .zip(&self.values)
            .fold((f64::NAN, f64::NEG_INFINITY), |acc, (t, v)| if *v > acc.1 { (*t, *v) } else { acc })
    }

    /// First local maximum reaching at least half of the global maximum.
    pub fn first_peak(&self) -> Option<(f64, f64)> {
        let (_, max) = self.peak();
        let v = &self.values;
        (0..v.len())
            .find(|&i| {
                let left = i == 0 || v[i] >= v[i - 1];
                let right = i + 1 == v.len() || v[i] >= v[i + 1];
                left && right && v[i] >= 0.5 * max && v[i] > 0.0
            })
            .map(|i| (self.times[i], v[i]))
    }
}

fn qfi_pair(setup: &ProbeSetup, rho: &CMatrix, drho: &CMatrix) -> Result<(f64, f64, bool)> {
    let full = qfi_spectral(rho, drho)?;
    let probe = qfi_2x2(&setup.probe_state(rho)?, &setup.probe_derivative(drho)?)?;
    let (probe, clipped) = clip(probe);
    let (full, _) = clip(full);
    if probe < 0.0 {
        log::warn!("negative QFI {probe:e} beyond clipping tolerance");
    }
    Ok((probe, full, clipped))
}

/// Propagate, differentiate with respect to the target inverse temperature
/// and evaluate the QFI at every grid sample.
pub fn transient_qfi(setup: &ProbeSetup, grid: &TimeGrid) -> Result<QfiSeries> {
    let beta = setup.beta()?;
    let rho0 = setup.initial_state()?;
    let center: Trajectory = evolve(&rho0, &setup.model()?, grid)?;
    let schedule = center.schedule.clone();
    let (derivs, step) = richardson_derivative(beta, |b| {
        let traj = evolve_with_schedule(&rho0, &setup.model_at(b)?, grid, &schedule)?;
        Ok(traj.states.into_iter().map(DensityMatrix::into_matrix).collect())
    })?;
    let mut series = QfiSeries {
        grid: *grid,
        times: center.times.clone(),
        values: Vec::with_capacity(derivs.len()),
        full_values: Vec::with_capacity(derivs.len()),
        target: setup.target,
        beta,
        derivative_step: step,
        clipped: 0,
        diagnostics: center.diagnostics.clone(),
        probe_states: Vec::with_capacity(derivs.len()),
        probe_derivatives: Vec::with_capacity(derivs.len()),
    };
    for (rho, d) in center.states.iter().zip(&derivs) {
        let (probe, full, clipped) = qfi_pair(setup, rho.matrix(), d)?;
        series.values.push(probe);
        series.full_values.push(full);
        series.clipped += usize::from(clipped);
        series.probe_states.push(setup.probe_state(rho.matrix())?);
        series.probe_derivatives.push(setup.probe_derivative(d)?);
    }
    if series.clipped > 0 {
        log::debug!("clipped {} near-zero negative QFI values", series.clipped);
    }
    Ok(series)
}

/// Steady-state QFI at one parameter point.
#[derive(Debug, Clone)]
pub struct SteadyQfi {
    pub beta: f64,
    pub qfi: f64,
    pub full_qfi: f64,
    pub relative_error: f64,
    pub min_eigenvalue: f64,
    pub residual: f64,
    pub probe_state: CMatrix,
    pub probe_derivative: CMatrix,
}

impl SteadyQfi {
    pub fn qfi_t(&self) -> f64 {
        self.qfi * self.beta.powi(4)
    }
}

pub fn steady_qfi(setup: &ProbeSetup) -> Result<SteadyQfi> {
    let beta = setup.beta()?;
    let model = setup.model()?;
    let rho = steady_state(&model)?;
    let (derivs, _) = richardson_derivative(beta, |b| {
        Ok(vec![steady_state(&setup.model_at(b)?)?.into_matrix()])
    })?;
    let (qfi, full_qfi, _) = qfi_pair(setup, rho.matrix(), &derivs[0])?;
    Ok(SteadyQfi {
        beta,
        qfi,
        full_qfi,
        relative_error: relative_error(qfi, beta),
        min_eigenvalue: rho.min_eigenvalue()?,
        residual: steady_residual(&model, &rho),
        probe_state: setup.probe_state(rho.matrix())?,
        probe_derivative: setup.probe_derivative(&derivs[0])?,
    })
}
