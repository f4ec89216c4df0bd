//! Thermal bosonic baths: spectral density, occupations, decay rates and
//! Lamb-shift coefficients.
//!
//! All rates here are for unit coupling. Coupling constants `μ` multiply in
//! when a generator is assembled, so one rate table serves every attachment
//! of the same bath.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_pieces, QuadConfig};

/// Couplings above this value trigger a weak-coupling warning.
pub const WEAK_COUPLING_WARN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SpectralKind {
    #[default]
    Ohmic,
}

/// Spectral density `J(ω) = ω ω_c² / (ω_c² + ω²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub kind: SpectralKind,
    pub cutoff: f64,
}

impl Default for SpectralDensity {
    fn default() -> Self {
        SpectralDensity {
            kind: SpectralKind::Ohmic,
            cutoff: 20.0,
        }
    }
}

impl SpectralDensity {
    pub fn ohmic(cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spectral cutoff must be positive and finite, got {cutoff}"
            )));
        }
        Ok(SpectralDensity {
            kind: SpectralKind::Ohmic,
            cutoff,
        })
    }

    pub fn j(&self, omega: f64) -> f64 {
        ohmic_j(omega, self)
    }

    /// `lim_{ω→0⁺} J(ω) coth(βω/2)`.
    pub fn zero_frequency_limit(&self, beta: f64) -> f64 {
        match self.kind {
            SpectralKind::Ohmic => 2.0 / beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BathLabel {
    Common,
    Local1,
    Local2,
}

impl BathLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BathLabel::Common => "common",
            BathLabel::Local1 => "local1",
            BathLabel::Local2 => "local2",
        }
    }
}

impl std::fmt::Display for BathLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One thermal bath and its coupling strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub beta: f64,
    pub mu_x: f64,
    pub mu_z: f64,
    pub spectral: SpectralDensity,
    pub label: BathLabel,
}

impl BathSpec {
    /// Validated constructor. `beta = +∞` is accepted as zero temperature.
    pub fn new(label: BathLabel, beta: f64, mu_x: f64, mu_z: f64, spectral: SpectralDensity) -> Result<Self> {
        let spec = BathSpec {
            beta,
            mu_x,
            mu_z,
            spectral,
            label,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bath {}: beta must be positive, got {}",
                self.label, self.beta
            )));
        }
        for (name, mu) in [("mu_x", self.mu_x), ("mu_z", self.mu_z)] {
            if !(mu >= 0.0) || !mu.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "bath {}: {name} must be finite and non-negative, got {mu}",
                    self.label
                )));
            }
            if mu > WEAK_COUPLING_WARN {
                log::warn!(
                    "bath {}: {name} = {mu} is outside the weak-coupling regime",
                    self.label
                );
            }
        }
        SpectralDensity::ohmic(self.spectral.cutoff).map(|_| ())
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

/// One-sided Fourier transform `Γ(ω) = γ/2 + i s` of the bath correlation
/// function, for unit coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfFourierRate {
    pub gamma: f64,
    pub s: f64,
}

impl HalfFourierRate {
    pub fn complex(&self) -> crate::C64 {
        crate::C64::new(0.5 * self.gamma, self.s)
    }
}

pub fn ohmic_j(omega: f64, sd: &SpectralDensity) -> f64 {
    let wc2 = sd.cutoff * sd.cutoff;
    omega * wc2 / (wc2 + omega * omega)
}

/// Bose–Einstein occupation `1 / (e^{βω} − 1)`.
pub fn bose_occupation(omega: f64, beta: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "occupation needs a positive frequency, got {omega}"
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(occupation(omega, beta))
}

#[inline]
fn occupation(omega: f64, beta: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// `J(x) n(x)`, continuous at `x = 0` where it tends to `1/β` for the
/// Ohmic density.
#[inline]
fn j_times_n(x: f64, beta: f64, sd: &SpectralDensity) -> f64 {
    if x == 0.0 {
        return 1.0 / beta;
    }
    ohmic_j(x, sd) * occupation(x, beta)
}

/// Decay rate `γ(ω)`: emission for `ω > 0`, absorption for `ω < 0`, and
/// the analytic dephasing limit at `ω = 0`.
pub fn gamma_rate(omega: f64, beta: f64, sd: &SpectralDensity) -> f64 {
    if omega > 0.0 {
        // πJ(coth(βω/2)+1) = 2πJ(n+1)
        2.0 * PI * ohmic_j(omega, sd) * (occupation(omega, beta) + 1.0)
    } else if omega < 0.0 {
        2.0 * PI * ohmic_j(-omega, sd) * occupation(-omega, beta)
    } else {
        PI * sd.zero_frequency_limit(beta)
    }
}

/// Lamb-shift coefficient
/// `s(ω) = P∫₀^∞ J(x) [(n(x)+1)/(ω−x) + n(x)/(ω+x)] dx`.
///
/// The pole at `x = |ω|` is excised symmetrically and the excised window
/// is integrated as the folded, regular integrand `F(x₀+u) + F(x₀−u)`. The
/// window is halved until the result is stable to `1e-8` relative. The
/// range is cut at `Λ = max(50 ω_c, 2|ω| + 1)`; the vacuum tail beyond `Λ`
/// is added in closed form and the thermal tail is bounded analytically and
/// integrated only if the bound is not negligible.
pub fn lamb_shift_s(omega: f64, beta: f64, sd: &SpectralDensity) -> Result<f64> {
    lamb_shift_with(omega, beta, sd, PvOptions::default())
}

/// Knobs of the principal-value quadrature, exposed for stability tests.
#[derive(Debug, Clone, Copy)]
pub struct PvOptions {
    pub cutoff_multiple: f64,
    pub initial_window: f64,
    pub rel_tol: f64,
    pub max_halvings: usize,
}

impl Default for PvOptions {
    fn default() -> Self {
        PvOptions {
            cutoff_multiple: 50.0,
            initial_window: 0.25,
            rel_tol: 1e-8,
            max_halvings: 30,
        }
    }
}

pub fn lamb_shift_with(omega: f64, beta: f64, sd: &SpectralDensity, opts: PvOptions) -> Result<f64> {
    if !(beta > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lamb shift needs beta > 0 and finite omega, got beta={beta}, omega={omega}"
        )));
    }
    let wc = sd.cutoff;
    if omega == 0.0 {
        // −∫₀^∞ ω_c²/(ω_c²+x²) dx
        return Ok(-0.5 * PI * wc);
    }

    let x0 = omega.abs();
    let lambda = (opts.cutoff_multiple * wc).max(2.0 * x0 + 1.0);
    // Split F(x) = g(x)/(x₀−x) + h(x) with g and h regular at the pole.
    let (g, h): (Box<dyn Fn(f64) -> f64 + '_>, Box<dyn Fn(f64) -> f64 + '_>) = if omega > 0.0 {
        (
            Box::new(move |x| ohmic_j(x, sd) + j_times_n(x, beta, sd)),
            Box::new(move |x| j_times_n(x, beta, sd) / (omega + x)),
        )
    } else {
        (
            Box::new(move |x| -j_times_n(x, beta, sd)),
            Box::new(move |x| (ohmic_j(x, sd) + j_times_n(x, beta, sd)) / (omega - x)),
        )
    };
    let integrand = |x: f64| g(x) / (x0 - x) + h(x);
    let cfg = QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_intervals: 2000,
    };

    let body = |delta: f64| -> (f64, bool) {
        // Using u itself as the pole distance keeps the cancellation exact.
        let folded = |u: f64| (g(x0 - u) - g(x0 + u)) / u + h(x0 + u) + h(x0 - u);
        let core = integrate_pieces(folded, &[0.0, delta], cfg);
        let mut left = vec![0.0];
        let mut right = vec![x0 + delta];
        for p in [wc, 5.0 * wc] {
            if p < x0 - delta {
                left.push(p);
            } else if p > x0 + delta && p < lambda {
                right.push(p);
            }
        }
        left.push(x0 - delta);
        right.push(lambda);
        let l = integrate_pieces(integrand, &left, cfg);
        let r = integrate_pieces(integrand, &right, cfg);
        (
            core.value + l.value + r.value,
            core.converged && l.converged && r.converged,
        )
    };

    let mut delta = opts.initial_window.min(0.5 * x0);
    let (mut prev, _) = body(delta);
    let mut last_change = f64::INFINITY;
    let mut converged = None;
    for _ in 0..opts.max_halvings {
        delta *= 0.5;
        let (next, ok) = body(delta);

        last_change = (next - prev).abs() / next.abs().max(1e-300);
        prev = next;
        if ok && last_change < opts.rel_tol {
            converged = Some(next);
            break;
        }
    }
    let core = converged.ok_or_else(|| Error::QuadratureNonConvergence {
        omega,
        detail: format!("excision refinement stalled at relative change {last_change:e}"),
    })?;

    let tail = vacuum_tail(omega, lambda, wc) + thermal_tail(omega, beta, lambda, sd, cfg);
    Ok(core + tail)
}

/// `∫_Λ^∞ J(x)/(ω−x) dx` in closed form.
fn vacuum_tail(omega: f64, lambda: f64, wc: f64) -> f64 {
    let d = omega * omega + wc * wc;
    let a = omega / d;
    let c = -wc * wc / d;
    wc * wc
        * (a * ((lambda - omega).ln() - 0.5 * (wc * wc + lambda * lambda).ln())
            + (c / wc) * (0.5 * PI - (lambda / wc).atan()))
}

/// `∫_Λ^∞ J n · 2ω/(ω²−x²) dx`, skipped when its analytic bound is
/// below round-off of the body.
fn thermal_tail(omega: f64, beta: f64, lambda: f64, sd: &SpectralDensity, cfg: QuadConfig) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    let wc2 = sd.cutoff * sd.cutoff;
    let bound = (wc2 / lambda) * (2.0 * omega.abs() / (lambda * lambda - omega * omega))
        * (-(-beta * lambda).exp()).ln_1p().abs()
        / beta;
    if bound < 1e-15 {
        return 0.0;
    }
    let f = |x: f64| j_times_n(x, beta, sd) * 2.0 * omega / (omega * omega - x * x);
    integrate_pieces(f, &[lambda, lambda + 60.0 / beta], cfg).value
}

type RateKey = (u64, u64, u64);

fn rate_cache() -> &'static RwLock<HashMap<RateKey, HalfFourierRate>> {
    static CACHE: OnceLock<RwLock<HashMap<RateKey, HalfFourierRate>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn key(omega: f64, beta: f64, sd: &SpectralDensity) -> RateKey {
    // +0.0 and −0.0 must share an entry.
    let norm = |x: f64| if x == 0.0 { 0.0f64.to_bits() } else { x.to_bits() };
    (norm(omega), norm(beta), norm(sd.cutoff))
}

/// `Γ(ω)` with `γ = 2 Re Γ` and `s = Im Γ`, memoized per `(ω, β, ω_c)`.
pub fn half_fourier(omega: f64, beta: f64, sd: &SpectralDensity) -> Result<HalfFourierRate> {
    let k = key(omega, beta, sd);
    if let Some(hit) = rate_cache().read().ok().and_then(|m| m.get(&k).copied()) {
        return Ok(hit);
    }
    let rate = HalfFourierRate {
        gamma: gamma_rate(omega, beta, sd),
        s: lamb_shift_s(omega, beta, sd)?,
    };
    if let Ok(mut m) = rate_cache().write() {
        m.insert(k, rate);
    }
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sd() -> SpectralDensity {
        SpectralDensity::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn spectral_density_values() {
        assert_eq!(ohmic_j(0.0, &sd()), 0.0);
        assert!((ohmic_j(1.0, &sd()) - 400.0 / 401.0).abs() < 1e-15);
        assert!((ohmic_j(20.0, &sd()) - 10.0).abs() < 1e-14);
    }

    #[test]
    fn occupation_values() {
        assert_eq!(bose_occupation(1.0, f64::INFINITY).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!(rel(bose_occupation(1.0, 1.0).unwrap(), 1.0 / (e - 1.0)) < 1e-14);
        assert!(bose_occupation(0.0, 1.0).is_err());
        assert!(bose_occupation(-1.0, 1.0).is_err());
    }

    #[test]
    fn occupation_coth_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let w: f64 = rng.gen_range(0.01..5.0);
            let b: f64 = rng.gen_range(0.05..10.0);
            let n = bose_occupation(w, b).unwrap();
            let coth = 1.0 / (0.5 * b * w).tanh();
            assert!(rel(n + 1.0, 0.5 * (coth + 1.0)) < 1e-13);
        }
    }

    #[test]
    fn gamma_values() {
        let g = gamma_rate(1.0, 1.0, &sd());
        let coth = 1.0 / 0.5f64.tanh();
        assert!(rel(g, PI * 400.0 / 401.0 * (coth + 1.0)) < 1e-13);
        assert!((g - 9.9151).abs() < 1e-4);
        assert!(rel(gamma_rate(0.0, 2.0, &sd()), PI) < 1e-15);
    }

    #[test]
    fn detailed_balance() {
        for (w, b) in [(1.0, 1.0), (0.3, 4.0), (2.5, 0.1)] {
            let ratio = gamma_rate(-w, b, &sd()) / gamma_rate(w, b, &sd());
            assert!(rel(ratio, (-b * w).exp()) < 1e-12, "{w} {b}");
        }
    }

    #[test]
    fn gamma_zero_frequency_is_continuous_limit() {
        let target = gamma_rate(0.0, 1.3, &sd());
        let approach: Vec<f64> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|w| 0.5 * (gamma_rate(*w, 1.3, &sd()) + gamma_rate(-*w, 1.3, &sd())))
            .collect();
        assert!(rel(approach[2], target) < 1e-3);
        assert!((approach[2] - target).abs() < (approach[0] - target).abs() + 1e-15);
    }

    #[test]
    fn zero_frequency_lamb_shift() {
        assert!(rel(lamb_shift_s(0.0, 1.0, &sd()).unwrap(), -10.0 * PI) < 1e-15);
    }

    /// `P∫₀^∞ J(x)/(ω−x) dx` in closed form.
    fn vacuum_oracle(omega: f64, wc: f64) -> f64 {
        let d = omega * omega + wc * wc;
        wc * wc * ((omega / d) * (omega.abs() / wc).ln() - (wc * wc / d) * PI / (2.0 * wc))
    }

    #[test]
    fn zero_temperature_matches_closed_form() {
        for w in [1.0, -1.0, 0.37, 3.0] {
            let s = lamb_shift_s(w, f64::INFINITY, &sd()).unwrap();
            assert!((s - vacuum_oracle(w, 20.0)).abs() < 1e-6, "{w}: {s}");
        }
        // Independent scipy evaluation of the same principal value.
        assert!((vacuum_oracle(1.0, 20.0) + 34.325_844_198_954_5).abs() < 1e-9);
    }

    /// Stratified Monte-Carlo principal value: the window `[0, 2x₀]` is
    /// sampled symmetrically about the pole so the singular parts cancel
    /// pairwise; the remainder is mapped to `[0, 1)` via `x = 2x₀ + u/(1−u)`.
    fn monte_carlo_pv(omega: f64, beta: f64, samples: usize, seed: u64) -> f64 {
        let s = sd();
        let f = |x: f64| {
            let jn = j_times_n(x, beta, &s);
            (ohmic_j(x, &s) + jn) / (omega - x) + jn / (omega + x)
        };
        let x0 = omega.abs();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strata = samples;
        let mut window = 0.0;
        let mut tail = 0.0;
        for k in 0..strata {
            let v = (k as f64 + rng.gen::<f64>()) / strata as f64;
            let u = v * x0;
            window += f(x0 + u) + f(x0 - u);
            let t = (k as f64 + rng.gen::<f64>()) / strata as f64;
            let x = 2.0 * x0 + t / (1.0 - t);
            tail += f(x) / ((1.0 - t) * (1.0 - t));
        }
        window * x0 / strata as f64 + tail / strata as f64
    }

    #[test]
    fn lamb_shift_matches_monte_carlo() {
        for w in [1.0, -1.0] {
            let quad = lamb_shift_s(w, 1.0, &sd()).unwrap();
            let mc = monte_carlo_pv(w, 1.0, 2_000_000, 11);
            assert!((quad - mc).abs() < 1e-4, "{w}: quad {quad} mc {mc}");
        }
    }

    #[test]
    fn reference_lamb_shift_values() {
        assert!((lamb_shift_s(1.0, 1.0, &sd()).unwrap() + 33.03).abs() < 0.01);
        assert!((lamb_shift_s(-1.0, 1.0, &sd()).unwrap() + 29.64).abs() < 0.01);
    }

    #[test]
    fn lamb_shift_is_stable_under_refinement() {
        let base = PvOptions::default();
        let finer = PvOptions {
            cutoff_multiple: 100.0,
            initial_window: 0.125,
            ..base
        };
        for (w, b) in [(1.0, 1.0), (-0.5, 0.1), (0.01, 5.0), (1.99, 1.0)] {
            let a = lamb_shift_with(w, b, &sd(), base).unwrap();
            let c = lamb_shift_with(w, b, &sd(), finer).unwrap();
            assert!(rel(a, c) < 1e-6, "{w} {b}: {a} vs {c}");
        }
    }

    #[test]
    fn half_fourier_split() {
        let r = half_fourier(1.0, 1.0, &sd()).unwrap();
        assert_eq!(2.0 * r.complex().re - r.gamma, 0.0);
        assert_eq!(r.complex().im, r.s);
        assert!((r.gamma - 9.9151).abs() < 1e-4);
        // Cached lookup returns the identical value.
        assert_eq!(half_fourier(1.0, 1.0, &sd()).unwrap(), r);
    }

    #[test]
    fn bath_spec_validation() {
        assert!(BathSpec::new(BathLabel::Common, 0.0, 0.01, 0.0, sd()).is_err());
        assert!(BathSpec::new(BathLabel::Common, 1.0, -0.01, 0.0, sd()).is_err());
        assert!(BathSpec::new(BathLabel::Local1, 1.0, 0.5, 0.0, sd()).is_ok());
    }
}
