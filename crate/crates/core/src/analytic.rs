//! Closed-form single-qubit solution used as an oracle.
//!
//! The qubit starts in slot 1 (the lower level, index 1 of the
//! computational basis) and relaxes towards the Gibbs state through the
//! rates `γ↓ = 2c(n+1)` and `γ↑ = 2cn` with `c = πJ(ω₀)μ_x²`.

use crate::bath::{bose_occupation, ohmic_j, SpectralDensity};
use crate::error::{Error, Result};
use crate::operators::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    pub omega0: f64,
    pub beta: f64,
    pub mu_x: f64,
    /// `πJ(ω₀)μ_x²`.
    pub c: f64,
    /// `(1 − e^{βω₀})⁻¹`, the negative of the Bose occupation. It only
    /// enters the QFI through even powers.
    pub nbar: f64,
}

impl AnalyticParams {
    pub fn new(omega0: f64, beta: f64, mu_x: f64, sd: &SpectralDensity) -> Result<Self> {
        if !(omega0 > 0.0) || !(mu_x > 0.0) || !omega0.is_finite() || !mu_x.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need omega0 > 0 and mu_x > 0, got {omega0} and {mu_x}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite and positive, got {beta}")));
        }
        let c = std::f64::consts::PI * ohmic_j(omega0, sd) * mu_x * mu_x;
        let nbar = 1.0 / (1.0 - (beta * omega0).exp());
        if !nbar.is_finite() || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "analytic parameters overflow at beta = {beta}"
            )));
        }
        Ok(AnalyticParams {
            omega0,
            beta,
            mu_x,
            c,
            nbar,
        })
    }

    fn occupation(&self) -> f64 {
        bose_occupation(self.omega0, self.beta).unwrap_or(0.0)
    }

    pub fn gamma_down(&self) -> f64 {
        2.0 * self.c * (self.occupation() + 1.0)
    }

    pub fn gamma_up(&self) -> f64 {
        2.0 * self.c * self.occupation()
    }

    /// `Γ = γ↓ + γ↑ = 2c·coth(βω₀/2)`.
    pub fn total_rate(&self) -> f64 {
        2.0 * self.c / (0.5 * self.beta * self.omega0).tanh()
    }
}

/// `diag(γ↑(1 − e^{−Γt})/Γ, (γ↓ + γ↑e^{−Γt})/Γ)`.
pub fn analytic_state(p: &AnalyticParams, t: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be non-negative, got {t}")));
    }
    let g = p.total_rate();
    let decay = (-g * t).exp();
    let upper = p.gamma_up() * (1.0 - decay) / g;
    DensityMatrix::diagonal(&[upper, 1.0 - upper])
}

fn chi(p: &AnalyticParams, t: f64) -> f64 {
    2.0 * p.c * t / (0.5 * p.beta * p.omega0).tanh()
}

fn eta(p: &AnalyticParams, t: f64, chi: f64) -> f64 {
    let e = (p.omega0 * p.beta).exp();
    e * (2.0 + 4.0 * p.c * t - e) + 4.0 * p.c * t + chi.exp() / (p.nbar * p.nbar) - 1.0
}

/// Transient QFI of the relaxing qubit with respect to `β`.
pub fn analytic_qfi(p: &AnalyticParams, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = chi(p, t);
    let e = (p.beta * p.omega0).exp();
    let n4 = p.nbar.powi(4);
    let w2 = p.omega0 * p.omega0;
    // coth(χ/2) − 1 without cancellation.
    let coth_m1 = 2.0 / x.exp_m1();
    let verbatim = eta(p, t, x).powi(2) * n4 * w2 * e * e * coth_m1
        / (2.0 * (e + 1.0).powi(2) * (1.0 + (p.beta * p.omega0 + x).exp()));
    if verbatim.is_finite() {
        return verbatim;
    }
    // Same expression with numerator and denominator scaled by e^{−2χ}.
    let scaled_eta = eta_scaled(p, t, x);
    let scaled_coth = -2.0 / (-x).exp_m1();
    scaled_eta * scaled_eta * n4 * w2 * e * e * scaled_coth
        / (2.0 * (e + 1.0).powi(2) * ((-x).exp() + e))
}

/// `η e^{−χ}` without forming `e^{χ}`.
fn eta_scaled(p: &AnalyticParams, t: f64, x: f64) -> f64 {
    let e = (p.omega0 * p.beta).exp();
    let rest = e * (2.0 + 4.0 * p.c * t - e) + 4.0 * p.c * t - 1.0;
    rest * (-x).exp() + 1.0 / (p.nbar * p.nbar)
}

/// Thermal-state QFI `ω₀² / (2 + 2cosh βω₀)`.
pub fn steady_qfi(omega0: f64, beta: f64) -> f64 {
    let x = beta * omega0;
    if x.abs() > 700.0 {
        return 0.0;
    }
    omega0 * omega0 / (2.0 + 2.0 * x.cosh())
}

/// `∂β` of the analytic populations, used to check the numeric derivative.
pub fn analytic_state_derivative(p: &AnalyticParams, sd: &SpectralDensity, t: f64) -> Result<[f64; 2]> {
    let h = 1e-6 * p.beta;
    let at = |b: f64| -> Result<f64> {
        let q = AnalyticParams::new(p.omega0, b, p.mu_x, sd)?;
        Ok(analytic_state(&q, t)?.matrix()[(0, 0)].re)
    };
    // Five-point stencil on the closed form.
    let d = (-at(p.beta + 2.0 * h)? + 8.0 * at(p.beta + h)? - 8.0 * at(p.beta - h)? + at(p.beta - 2.0 * h)?)
        / (12.0 * h);
    Ok([d, -d])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::qfi_2x2;
    use crate::operators::{re, CMatrix};

    fn params(beta: f64, mu: f64) -> AnalyticParams {
        AnalyticParams::new(1.0, beta, mu, &SpectralDensity::default()).unwrap()
    }

    #[test]
    fn initial_and_final_state() {
        let p = params(1.0, 0.01);
        let r0 = analytic_state(&p, 0.0).unwrap();
        assert_eq!(r0.matrix()[(0, 0)].re, 0.0);
        assert_eq!(r0.matrix()[(1, 1)].re, 1.0);
        let r = analytic_state(&p, 1e6).unwrap();
        let gibbs_upper = 1.0 / (1.0 + 1f64.exp());
        assert!((r.matrix()[(0, 0)].re - gibbs_upper).abs() < 1e-14);
        assert!(analytic_state(&p, -1.0).is_err());
    }

    #[test]
    fn trace_is_one() {
        let p = params(0.3, 0.02);
        for t in [0.0, 1.0, 37.0, 1e3, 1e5] {
            assert!(analytic_state(&p, t).unwrap().trace_error() < 1e-15);
        }
    }

    #[test]
    fn solves_rate_equation() {
        let p = params(1.0, 0.03);
        let h = 1e-3;
        for t in [1.0, 50.0, 300.0] {
            let pop = |t: f64| analytic_state(&p, t).unwrap().matrix()[(0, 0)].re;
            let dp = (pop(t + h) - pop(t - h)) / (2.0 * h);
            let rhs = p.gamma_up() * (1.0 - pop(t)) - p.gamma_down() * pop(t);
            assert!((dp - rhs).abs() < 1e-8);
        }
    }

    #[test]
    fn steady_limits() {
        assert!((steady_qfi(1.0, 0.1) - 0.2494).abs() < 1e-4);
        assert!((steady_qfi(1.0, 1.0) - 0.1966).abs() < 1e-4);
        assert!((steady_qfi(2.0, 1e-12) - 1.0).abs() < 1e-12);
        assert_eq!(steady_qfi(1.0, 1e4), 0.0);
    }

    #[test]
    fn steady_matches_closed_qubit_formula() {
        for beta in [0.2, 1.0, 3.0] {
            let p = 1.0 / (1.0 + f64::exp(beta));
            let dp = -p * (1.0 - p);
            let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![re(p), re(1.0 - p)]));
            let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![re(dp), re(-dp)]));
            let f = qfi_2x2(&rho, &d).unwrap();
            assert!((f / steady_qfi(1.0, beta) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transient_tends_to_steady() {
        for (beta, mu) in [(1.0, 0.01), (0.1, 0.01), (2.0, 0.03)] {
            let p = params(beta, mu);
            let t = 20.0 / p.total_rate();
            let f = analytic_qfi(&p, t);
            assert!((f / steady_qfi(1.0, beta) - 1.0).abs() < 1e-4, "{beta} {mu}: {f}");
        }
    }

    #[test]
    fn transient_equals_qfi_of_analytic_state() {
        let sd = SpectralDensity::default();
        for (beta, mu) in [(1.0, 0.01), (0.1, 0.01), (1.0, 0.03)] {
            let p = params(beta, mu);
            for t in [5.0, 80.0, 400.0, 2000.0] {
                let rho = analytic_state(&p, t).unwrap().into_matrix();
                let [d0, d1] = analytic_state_derivative(&p, &sd, t).unwrap();
                let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![re(d0), re(d1)]));
                let direct = qfi_2x2(&rho, &d).unwrap();
                let closed = analytic_qfi(&p, t);
                assert!((closed / direct - 1.0).abs() < 1e-6, "β={beta} t={t}: {closed} vs {direct}");
            }
        }
    }

    #[test]
    fn overflow_branch_is_continuous() {
        let p = params(1.0, 0.03);
        let f = analytic_qfi(&p, 1e7);
        assert!(f.is_finite());
        assert!((f / steady_qfi(1.0, 1.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn stronger_coupling_settles_sooner() {
        let settle = |mu: f64| {
            let p = params(1.0, mu);
            let target = steady_qfi(1.0, 1.0);
            let mut t_last = 0.0;
            for i in 1..=20000 {
                let t = i as f64;
                if (analytic_qfi(&p, t) / target - 1.0).abs() > 0.01 {
                    t_last = t;
                }
            }
            t_last
        };
        assert!(settle(0.03) < settle(0.01));
    }
}
