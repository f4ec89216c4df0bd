//! Assembly of Bloch-Redfield generators for one qubit, two qubits in the
//! local form, and two directly coupled qubits in the dressed basis.
//!
//! Every builder reduces to the same recipe. A bath couples to the system
//! through channels `μ·A` where `A` is a Pauli operator on one qubit. Each
//! channel is split into jump components `A(ω)`, and every pair of
//! components of channels sharing a bath contributes a term
//! `γ(ω,ω′)·(A_β(ω) ρ A_α(ω′)† − ½{A_α(ω′)† A_β(ω), ρ})` if the pair passes the
//! secular filter. Distinct baths are uncorrelated.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bath::{gamma_rate, half_fourier, BathLabel, BathSpec};
use crate::error::{Error, Result};
use crate::operators::{
    c, dagger, identity, max_abs, on_qubit, outer, pauli_x, pauli_z, re, sigma_minus, sigma_plus, tensor,
    CMatrix, DensityMatrix, Qubit, C64,
};

/// Frequencies closer than this are treated as equal by the full secular
/// filter and the dressed-spectrum degeneracy check.
pub const FREQ_TOL: f64 = 1e-10;

/// Largest `k / ω₂` for which the local form is accepted.
pub const LOCAL_FORM_MAX_K_RATIO: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Secular {
    Partial,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientScheme {
    /// `γ(ω,ω′) = Γ(ω) + Γ*(ω′)`.
    Redfield,
    /// `γ(ω,ω′) = γ((ω+ω′)/2)`.
    Unified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproximationVariant {
    pub secular: Secular,
    pub scheme: CoefficientScheme,
    pub lamb_shift: bool,
    /// Partial-secular retention window; `None` means `0.1·ω₂`.
    pub secular_cutoff: Option<f64>,
}

impl Default for ApproximationVariant {
    fn default() -> Self {
        ApproximationVariant {
            secular: Secular::Partial,
            scheme: CoefficientScheme::Redfield,
            lamb_shift: true,
            secular_cutoff: None,
        }
    }
}

impl ApproximationVariant {
    pub fn partial() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        ApproximationVariant {
            secular: Secular::Full,
            ..Self::default()
        }
    }

    pub fn unified() -> Self {
        ApproximationVariant {
            scheme: CoefficientScheme::Unified,
            ..Self::default()
        }
    }

    pub fn with_lamb_shift(mut self, on: bool) -> Self {
        self.lamb_shift = on;
        self
    }

    /// Whether the GKLS form (and hence complete positivity) is guaranteed.
    pub fn is_gkls(&self) -> bool {
        self.secular == Secular::Full || self.scheme == CoefficientScheme::Unified
    }

    fn retains(&self, omega: f64, omega_p: f64, cutoff: f64) -> bool {
        let gap = (omega - omega_p).abs();
        match self.secular {
            Secular::Full => gap <= FREQ_TOL,
            Secular::Partial => gap < cutoff || gap <= FREQ_TOL,
        }
    }
}

/// Named initial states. Index 0 of each qubit is the upper level.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Excited,
    Ground,
    Plus,
    ExcitedExcited,
    GroundGround,
    PlusPlus,
    Custom(DensityMatrix),
}

impl InitialState {
    pub fn density(&self, dim: usize) -> Result<DensityMatrix> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let excited = [re(1.0), re(0.0)];
        let ground = [re(0.0), re(1.0)];
        let plus = [re(s), re(s)];
        let single = |v: &[C64; 2]| DensityMatrix::pure(v);
        let pair = |v: &[C64; 2]| -> Result<DensityMatrix> {
            let one = single(v)?;
            Ok(DensityMatrix::product(&one, &one))
        };
        let rho = match self {
            InitialState::Excited => single(&excited)?,
            InitialState::Ground => single(&ground)?,
            InitialState::Plus => single(&plus)?,
            InitialState::ExcitedExcited => pair(&excited)?,
            InitialState::GroundGround => pair(&ground)?,
            InitialState::PlusPlus => pair(&plus)?,
            InitialState::Custom(rho) => rho.clone(),
        };
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rho.dim(),
            });
        }
        Ok(rho)
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialState::Excited => "excited",
            InitialState::Ground => "ground",
            InitialState::Plus => "plus",
            InitialState::ExcitedExcited => "excited_excited",
            InitialState::GroundGround => "ground_ground",
            InitialState::PlusPlus => "plus_plus",
            InitialState::Custom(_) => "custom",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "excited" => InitialState::Excited,
            "ground" => InitialState::Ground,
            "plus" => InitialState::Plus,
            "excited_excited" => InitialState::ExcitedExcited,
            "ground_ground" => InitialState::GroundGround,
            "plus_plus" => InitialState::PlusPlus,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown initial state `{other}`"
                )))
            }
        })
    }
}

/// Which generator family to build for a two-qubit system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelForm {
    /// Local form for `k = 0`, dressed-basis form otherwise.
    #[default]
    Auto,
    Local,
    Global,
}

/// Physical system: one or two qubits and the baths they couple to.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub qubits: usize,
    pub omega1: f64,
    pub omega2: f64,
    pub k: f64,
    pub baths: Vec<BathSpec>,
    pub initial_state: InitialState,
}

impl SystemSpec {
    pub fn single(omega0: f64, bath: BathSpec, initial_state: InitialState) -> Self {
        SystemSpec {
            qubits: 1,
            omega1: omega0,
            omega2: omega0,
            k: 0.0,
            baths: vec![bath],
            initial_state,
        }
    }

    pub fn two(omega1: f64, omega2: f64, k: f64, baths: Vec<BathSpec>, initial_state: InitialState) -> Self {
        SystemSpec {
            qubits: 2,
            omega1,
            omega2,
            k,
            baths,
            initial_state,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn omega_plus(&self) -> f64 {
        self.omega1 + self.omega2
    }

    pub fn omega_minus(&self) -> f64 {
        self.omega1 - self.omega2
    }

    pub fn bath(&self, label: BathLabel) -> Option<&BathSpec> {
        self.baths.iter().find(|b| b.label == label)
    }

    /// Copy with the inverse temperature of `label` replaced.
    pub fn with_beta(&self, label: BathLabel, beta: f64) -> Result<SystemSpec> {
        let mut out = self.clone();
        let bath = out
            .baths
            .iter_mut()
            .find(|b| b.label == label)
            .ok_or_else(|| Error::InvalidParameter(format!("no {label} bath in system")))?;
        bath.beta = beta;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.qubits != 1 && self.qubits != 2 {
            return bad(format!("qubits must be 1 or 2, got {}", self.qubits));
        }
        if !(self.omega1 > 0.0) || !self.omega1.is_finite() {
            return bad(format!("omega1 must be positive, got {}", self.omega1));
        }
        if self.qubits == 2 {
            if !(self.omega2 > 0.0) || !self.omega2.is_finite() {
                return bad(format!("omega2 must be positive, got {}", self.omega2));
            }
            if self.omega1 < self.omega2 {
                return bad(format!(
                    "omega1 ({}) must not be below omega2 ({})",
                    self.omega1, self.omega2
                ));
            }
            if !(self.k >= 0.0) || !self.k.is_finite() {
                return bad(format!("k must be finite and non-negative, got {}", self.k));
            }
        }
        if self.baths.is_empty() {
            return bad("at least one bath is required".into());
        }
        for (i, b) in self.baths.iter().enumerate() {
            b.validate()?;
            if self.baths[..i].iter().any(|o| o.label == b.label) {
                return bad(format!("bath {} given twice", b.label));
            }
            if self.qubits == 1 && b.label == BathLabel::Local2 {
                return bad("a single qubit cannot couple to local2".into());
            }
        }
        if self.qubits == 1 && self.baths.len() != 1 {
            return bad("a single qubit couples to exactly one bath".into());
        }
        Ok(())
    }

    fn default_cutoff(&self) -> f64 {
        0.1 * if self.qubits == 1 { self.omega1 } else { self.omega2 }
    }
}

/// One dissipator entry: `rate·(L ρ R† − ½{R†L, ρ})`.
#[derive(Debug, Clone)]
pub struct JumpTerm {
    pub omega_left: f64,
    pub omega_right: f64,
    pub op_left: CMatrix,
    pub op_right: CMatrix,
    pub rate: C64,
    pub bath: BathLabel,
}

#[derive(Debug, Clone)]
pub struct LiouvillianModel {
    pub dim: usize,
    pub bare_hamiltonian: CMatrix,
    /// Traceless Lamb-shift Hamiltonian, kept even when switched off.
    pub lamb_shift: CMatrix,
    pub lamb_shift_on: bool,
    pub jump_terms: Vec<JumpTerm>,
    pub variant: ApproximationVariant,
}

impl LiouvillianModel {
    /// Hamiltonian entering the unitary part of the generator.
    pub fn hamiltonian(&self) -> CMatrix {
        if self.lamb_shift_on {
            &self.bare_hamiltonian + &self.lamb_shift
        } else {
            self.bare_hamiltonian.clone()
        }
    }

    /// `ρ ↦ −i[H, ρ] + D[ρ]` evaluated term by term.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let h = self.hamiltonian();
        let mut out = (&h * rho - rho * &h) * c(0.0, -1.0);
        for t in &self.jump_terms {
            let rd = t.op_right.adjoint();
            let rl = &rd * &t.op_left;
            let term = &t.op_left * rho * &rd - (&rl * rho + rho * &rl) * re(0.5);
            out += term * t.rate;
        }
        out
    }
}

impl fmt::Display for LiouvillianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dim {} with {} jump terms ({:?}/{:?}, Lamb shift {})",
            self.dim,
            self.jump_terms.len(),
            self.variant.secular,
            self.variant.scheme,
            if self.lamb_shift_on { "on" } else { "off" }
        )
    }
}

/// A coupling channel `weight·A` to one bath, already split into
/// frequency components.
#[derive(Debug, Clone)]
struct Channel {
    weight: f64,
    components: Vec<(f64, CMatrix)>,
}

fn ladder_components(omega: f64, qubit: Option<Qubit>) -> Vec<(f64, CMatrix)> {
    let lift = |m: CMatrix| match qubit {
        Some(q) => on_qubit(&m, q),
        None => m,
    };
    vec![(-omega, lift(sigma_plus())), (omega, lift(sigma_minus()))]
}

fn dephasing_components(qubit: Option<Qubit>) -> Vec<(f64, CMatrix)> {
    let z = match qubit {
        Some(q) => on_qubit(&pauli_z(), q),
        None => pauli_z(),
    };
    vec![(0.0, z)]
}

/// Build the dissipator and Lamb shift from per-bath channel lists.
fn assemble(
    bare: CMatrix,
    channels: &[(BathSpec, Vec<Channel>)],
    variant: ApproximationVariant,
    cutoff: f64,
) -> Result<LiouvillianModel> {
    let dim = bare.nrows();
    let mut lamb = CMatrix::zeros(dim, dim);
    let mut terms = Vec::new();
    for (bath, chans) in channels {
        let chans: Vec<&Channel> = chans.iter().filter(|ch| ch.weight != 0.0).collect();
        for alpha in &chans {
            for beta_ch in &chans {
                let weight = alpha.weight * beta_ch.weight;
                for (omega, a_beta) in &beta_ch.components {
                    for (omega_p, a_alpha) in &alpha.components {
                        if !variant.retains(*omega, *omega_p, cutoff) {
                            continue;
                        }
                        let (rate, shift) = pair_coefficients(*omega, *omega_p, bath, variant.scheme)?;
                        let (rate, shift) = (rate * weight, shift * weight);
                        lamb += (a_alpha.adjoint() * a_beta) * shift;
                        terms.push(JumpTerm {
                            omega_left: *omega,
                            omega_right: *omega_p,
                            op_left: a_beta.clone(),
                            op_right: a_alpha.clone(),
                            rate,
                            bath: bath.label,
                        });
                    }
                }
            }
        }
    }
    // The identity part of H_LS only shifts the zero of energy.
    let shift = lamb.trace() / re(dim as f64);
    lamb -= identity(dim) * shift;
    let lamb = (&lamb + lamb.adjoint()) * re(0.5);
    Ok(LiouvillianModel {
        dim,
        bare_hamiltonian: bare,
        lamb_shift: lamb,
        lamb_shift_on: variant.lamb_shift,
        jump_terms: terms,
        variant,
    })
}

/// Dissipative rate and Lamb-shift coefficient of one frequency pair for
/// unit coupling.
fn pair_coefficients(omega: f64, omega_p: f64, bath: &BathSpec, scheme: CoefficientScheme) -> Result<(C64, C64)> {
    match scheme {
        CoefficientScheme::Redfield => {
            let g = half_fourier(omega, bath.beta, &bath.spectral)?.complex();
            let gp = half_fourier(omega_p, bath.beta, &bath.spectral)?.complex();
            Ok((g + gp.conj(), (g - gp.conj()) / c(0.0, 2.0)))
        }
        CoefficientScheme::Unified => {
            let mean = 0.5 * (omega + omega_p);
            let r = half_fourier(mean, bath.beta, &bath.spectral)?;
            Ok((re(r.gamma), re(r.s)))
        }
    }
}

fn secular_cutoff(spec: &SystemSpec, variant: &ApproximationVariant) -> Result<f64> {
    let cutoff = variant.secular_cutoff.unwrap_or_else(|| spec.default_cutoff());
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "secular cutoff must be finite and non-negative, got {cutoff}"
        )));
    }
    Ok(cutoff)
}

/// Single qubit `H = ω₀σz/2` coupled to one bath through `μx σx + μz σz`.
pub fn build_single_qubit(omega0: f64, bath: &BathSpec, variant: ApproximationVariant) -> Result<LiouvillianModel> {
    let spec = SystemSpec::single(omega0, *bath, InitialState::Excited);
    spec.validate()?;
    let cutoff = secular_cutoff(&spec, &variant)?;
    let bare = pauli_z() * re(0.5 * omega0);
    let chans = vec![
        Channel {
            weight: bath.mu_x,
            components: ladder_components(omega0, None),
        },
        Channel {
            weight: bath.mu_z,
            components: dephasing_components(None),
        },
    ];
    assemble(bare, &[(*bath, chans)], variant, cutoff)
}

fn two_qubit_hamiltonian(spec: &SystemSpec) -> CMatrix {
    on_qubit(&pauli_z(), Qubit::First) * re(0.5 * spec.omega1)
        + on_qubit(&pauli_z(), Qubit::Second) * re(0.5 * spec.omega2)
        + tensor(&pauli_x(), &pauli_x()) * re(spec.k)
}

/// Qubits reached by each bath: the common bath couples to both, a local
/// bath only to its own qubit.
fn bath_qubits(label: BathLabel) -> &'static [Qubit] {
    match label {
        BathLabel::Common => &[Qubit::First, Qubit::Second],
        BathLabel::Local1 => &[Qubit::First],
        BathLabel::Local2 => &[Qubit::Second],
    }
}

/// Two qubits in the local form: jump operators are the bare `σ±`, `σz` of
/// each qubit while `H_S` keeps the `k σx σx` coupling.
pub fn build_two_qubit_local(spec: &SystemSpec, variant: ApproximationVariant) -> Result<LiouvillianModel> {
    spec.validate()?;
    if spec.qubits != 2 {
        return Err(Error::InvalidParameter("local form needs two qubits".into()));
    }
    let bound = LOCAL_FORM_MAX_K_RATIO * spec.omega2;
    if spec.k > bound {
        return Err(Error::LocalFormInvalid { k: spec.k, bound });
    }
    let cutoff = secular_cutoff(spec, &variant)?;
    let freq = |q: Qubit| match q {
        Qubit::First => spec.omega1,
        Qubit::Second => spec.omega2,
    };
    let channels: Vec<(BathSpec, Vec<Channel>)> = spec
        .baths
        .iter()
        .map(|b| {
            let qs = bath_qubits(b.label);
            let mut chans: Vec<Channel> = qs
                .iter()
                .map(|&q| Channel {
                    weight: b.mu_x,
                    components: ladder_components(freq(q), Some(q)),
                })
                .collect();
            chans.extend(qs.iter().map(|&q| Channel {
                weight: b.mu_z,
                components: dephasing_components(Some(q)),
            }));
            (*b, chans)
        })
        .collect();
    assemble(two_qubit_hamiltonian(spec), &channels, variant, cutoff)
}

/// Closed-form eigensystem of `H_S` for two directly coupled qubits.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub theta: f64,
    pub phi: f64,
    /// Energies of `|a>, |b>, |c>, |d>`, ascending.
    pub energies: [f64; 4],
    /// `|a>, |b>, |c>, |d>` in the computational basis.
    pub states: [[C64; 4]; 4],
    /// `ω_I, ω_II, ω_III, ω_IV`.
    pub frequencies: [f64; 4],
}

impl DressedBasis {
    pub fn new(omega1: f64, omega2: f64, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dressed basis needs k > 0, got {k}"
            )));
        }
        let wp = omega1 + omega2;
        let wm = omega1 - omega2;
        let theta = 0.5 * (2.0 * k).atan2(wp);
        let phi = 0.5 * (2.0 * k).atan2(wm);
        let r_plus = (4.0 * k * k + wp * wp).sqrt();
        let r_minus = (4.0 * k * k + wm * wm).sqrt();
        let energies = [-0.5 * r_plus, -0.5 * r_minus, 0.5 * r_minus, 0.5 * r_plus];
        for i in 0..4 {
            for j in 0..i {
                if (energies[i] - energies[j]).abs() <= FREQ_TOL * r_plus {
                    return Err(Error::DegenerateSpectrum(format!(
                        "levels {j} and {i} coincide at {}",
                        energies[i]
                    )));
                }
            }
        }
        let (ct, st) = (re(theta.cos()), re(theta.sin()));
        let (cp, sp) = (re(phi.cos()), re(phi.sin()));
        let z = re(0.0);
        let states = [
            [-st, z, z, ct], // |a>
            [z, -sp, cp, z], // |b>
            [z, cp, sp, z],  // |c>
            [ct, z, z, st],  // |d>
        ];
        let frequencies = [
            0.5 * (r_plus + r_minus),
            0.5 * (r_plus - r_minus),
            r_plus,
            r_minus,
        ];
        Ok(DressedBasis {
            theta,
            phi,
            energies,
            states,
            frequencies,
        })
    }

    /// `|i><j|` for dressed labels 0..4 = a, b, c, d.
    pub fn ket_bra(&self, i: usize, j: usize) -> CMatrix {
        outer(&self.states[i], &self.states[j])
    }

    /// Positive-frequency components of `σx` and `σz` on `qubit`, as
    /// `(frequency, operator)` pairs. Negative frequencies are the adjoints.
    pub fn positive_components(&self, qubit: Qubit) -> (Vec<(f64, CMatrix)>, Vec<(f64, CMatrix)>) {
        const A: usize = 0;
        const B: usize = 1;
        const C: usize = 2;
        const D: usize = 3;
        let (t, p) = (self.theta, self.phi);
        let [w1, w2, w3, w4] = self.frequencies;
        let kb = |i, j| self.ket_bra(i, j);
        // σz of the second qubit flips sign in the {|b>, |c>} sector.
        let sign = match qubit {
            Qubit::First => 1.0,
            Qubit::Second => -1.0,
        };
        let x = match qubit {
            Qubit::First => vec![
                (w1, (kb(B, D) + kb(A, C)) * re((t + p).cos())),
                (w2, (kb(C, D) - kb(A, B)) * re((t + p).sin())),
            ],
            Qubit::Second => vec![
                (w1, (kb(B, D) - kb(A, C)) * re((t - p).sin())),
                (w2, (kb(C, D) + kb(A, B)) * re((t - p).cos())),
            ],
        };
        let zero = (kb(D, D) - kb(A, A)) * re((2.0 * t).cos())
            + (kb(C, C) - kb(B, B)) * re(sign * (2.0 * p).cos());
        let z = vec![
            (w3, kb(A, D) * re(-(2.0 * t).sin())),
            (w4, kb(B, C) * re(-sign * (2.0 * p).sin())),
            (0.0, zero),
        ];
        (x, z)
    }
}

fn with_negative(components: Vec<(f64, CMatrix)>) -> Vec<(f64, CMatrix)> {
    let mut out: Vec<(f64, CMatrix)> = Vec::with_capacity(2 * components.len());
    for (w, op) in components {
        if max_abs(&op) < 1e-14 {
            continue;
        }
        if w != 0.0 {
            out.push((-w, dagger(&op)));
        }
        out.push((w, op));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Two directly coupled qubits with jump operators in the dressed basis.
pub fn build_global(spec: &SystemSpec, variant: ApproximationVariant) -> Result<LiouvillianModel> {
    spec.validate()?;
    if spec.qubits != 2 {
        return Err(Error::InvalidParameter("global form needs two qubits".into()));
    }
    let basis = DressedBasis::new(spec.omega1, spec.omega2, spec.k)?;
    let cutoff = secular_cutoff(spec, &variant)?;
    let channels: Vec<(BathSpec, Vec<Channel>)> = spec
        .baths
        .iter()
        .map(|b| {
            let mut chans = Vec::new();
            for &q in bath_qubits(b.label) {
                let (x, z) = basis.positive_components(q);
                chans.push(Channel {
                    weight: b.mu_x,
                    components: with_negative(x),
                });
                chans.push(Channel {
                    weight: b.mu_z,
                    components: with_negative(z),
                });
            }
            (*b, chans)
        })
        .collect();
    assemble(two_qubit_hamiltonian(spec), &channels, variant, cutoff)
}

/// Build whichever generator the system calls for.
pub fn build_model(spec: &SystemSpec, variant: ApproximationVariant, form: ModelForm) -> Result<LiouvillianModel> {
    spec.validate()?;
    if spec.qubits == 1 {
        return build_single_qubit(spec.omega1, &spec.baths[0], variant);
    }
    match form {
        ModelForm::Local => build_two_qubit_local(spec, variant),
        ModelForm::Global => build_global(spec, variant),
        ModelForm::Auto if spec.k == 0.0 => build_two_qubit_local(spec, variant),
        ModelForm::Auto => build_global(spec, variant),
    }
}

pub fn toggle_lamb_shift(model: &LiouvillianModel, on: bool) -> LiouvillianModel {
    let mut out = model.clone();
    out.lamb_shift_on = on;
    out.variant.lamb_shift = on;
    out
}

/// Column-stacking matrix of the generator: `vec(L[ρ]) = S·vec(ρ)` with
/// `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
pub fn superop_matrix(model: &LiouvillianModel) -> CMatrix {
    let d = model.dim;
    let id = identity(d);
    let h = model.hamiltonian();
    let mut s = (tensor(&id, &h) - tensor(&h.transpose(), &id)) * c(0.0, -1.0);
    for t in &model.jump_terms {
        let rl = t.op_right.adjoint() * &t.op_left;
        let jump = tensor(&t.op_right.map(|z| z.conj()), &t.op_left);
        let anti = (tensor(&id, &rl) + tensor(&rl.transpose(), &id)) * re(0.5);
        s += (jump - anti) * t.rate;
    }
    s
}

/// Slowest total relaxation rate among the qubits' emission/absorption
/// channels, `μ²(γ(ω) + γ(−ω))` summed over the baths of each qubit.
pub fn slowest_relaxation_rate(spec: &SystemSpec) -> f64 {
    let per_qubit = |q: Qubit, omega: f64| -> f64 {
        spec.baths
            .iter()
            .filter(|b| spec.qubits == 1 || bath_qubits(b.label).contains(&q))
            .map(|b| {
                let g = gamma_rate(omega, b.beta, &b.spectral) + gamma_rate(-omega, b.beta, &b.spectral);
                b.mu_x * b.mu_x * g + 2.0 * b.mu_z * b.mu_z * gamma_rate(0.0, b.beta, &b.spectral)
            })
            .sum()
    };
    let mut rates = vec![per_qubit(Qubit::First, spec.omega1)];
    if spec.qubits == 2 {
        rates.push(per_qubit(Qubit::Second, spec.omega2));
    }
    rates
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{gamma_rate, SpectralDensity};
    use crate::operators::{jump_decompose, max_abs};

    fn bath(label: BathLabel, beta: f64, mu_x: f64, mu_z: f64) -> BathSpec {
        BathSpec::new(label, beta, mu_x, mu_z, SpectralDensity::default()).unwrap()
    }

    fn rate_of(model: &LiouvillianModel, left: &CMatrix, right: &CMatrix) -> C64 {
        model
            .jump_terms
            .iter()
            .filter(|t| max_abs(&(&t.op_left - left)) < 1e-14 && max_abs(&(&t.op_right - right)) < 1e-14)
            .map(|t| t.rate)
            .sum()
    }

    #[test]
    fn single_qubit_rates() {
        let b = bath(BathLabel::Common, 1.0, 0.01, 0.0);
        let m = build_single_qubit(1.0, &b, ApproximationVariant::default()).unwrap();
        let down = rate_of(&m, &sigma_minus(), &sigma_minus());
        let up = rate_of(&m, &sigma_plus(), &sigma_plus());
        assert!((down.re - 9.9151e-4).abs() < 1e-8);
        assert!(down.im.abs() < 1e-18 && up.im.abs() < 1e-18);
        assert!(((up.re / down.re) - (-1f64).exp()).abs() < 1e-12);
        assert_eq!(m.jump_terms.len(), 2, "no dephasing term when mu_z = 0");
    }

    #[test]
    fn single_qubit_dephasing_and_lamb_shift() {
        let b = bath(BathLabel::Common, 2.0, 0.01, 0.02);
        let m = build_single_qubit(1.0, &b, ApproximationVariant::default()).unwrap();
        let deph = rate_of(&m, &pauli_z(), &pauli_z());
        assert!((deph.re - 0.02 * 0.02 * gamma_rate(0.0, 2.0, &b.spectral)).abs() < 1e-15);
        let s = |w: f64| crate::bath::lamb_shift_s(w, 2.0, &b.spectral).unwrap();
        let s0 = 1e-4 * (s(1.0) - s(-1.0));
        let expected = pauli_z() * re(0.5 * s0);
        assert!(max_abs(&(&m.lamb_shift - &expected)) < 1e-14);
    }

    #[test]
    fn toggling_lamb_shift_restores_bare_hamiltonian() {
        let b = bath(BathLabel::Common, 1.0, 0.01, 0.0);
        let m = build_single_qubit(1.0, &b, ApproximationVariant::default()).unwrap();
        let off = toggle_lamb_shift(&m, false);
        assert_eq!(off.hamiltonian(), m.bare_hamiltonian);
        assert_eq!(off.jump_terms.len(), m.jump_terms.len());
    }

    #[test]
    fn superoperator_matches_direct_action() {
        let spec = SystemSpec::two(
            1.0,
            0.99,
            0.0,
            vec![
                bath(BathLabel::Common, 1.0, 0.01, 0.01),
                bath(BathLabel::Local1, 0.1, 0.01, 0.0),
            ],
            InitialState::PlusPlus,
        );
        let m = build_two_qubit_local(&spec, ApproximationVariant::default()).unwrap();
        let s = superop_matrix(&m);
        let rho = CMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.07));
        let direct = m.apply(&rho);
        let vec_rho = nalgebra::DVector::from_column_slice(rho.as_slice());
        let via_s = s * vec_rho;
        let direct_vec = nalgebra::DVector::from_column_slice(direct.as_slice());
        assert!((via_s - direct_vec).camax() < 1e-12);
    }

    #[test]
    fn large_detuning_drops_cross_terms() {
        let spec = SystemSpec::two(
            1.0,
            0.5,
            0.0,
            vec![bath(BathLabel::Common, 1.0, 0.01, 0.0)],
            InitialState::PlusPlus,
        );
        let partial = build_two_qubit_local(&spec, ApproximationVariant::partial()).unwrap();
        let full = build_two_qubit_local(&spec, ApproximationVariant::full()).unwrap();
        assert_eq!(superop_matrix(&partial), superop_matrix(&full));
    }

    #[test]
    fn local_form_rejects_strong_coupling() {
        let spec = SystemSpec::two(
            1.0,
            0.99,
            0.1,
            vec![bath(BathLabel::Common, 1.0, 0.01, 0.0)],
            InitialState::PlusPlus,
        );
        assert!(matches!(
            build_two_qubit_local(&spec, ApproximationVariant::default()),
            Err(Error::LocalFormInvalid { .. })
        ));
    }

    #[test]
    fn dressed_energies() {
        let d = DressedBasis::new(1.0, 0.99, 0.1).unwrap();
        assert!((d.energies[3] - 0.5 * (0.04f64 + 3.9601).sqrt()).abs() < 1e-15);
        assert!((d.energies[3] - 1.00002).abs() < 1e-5);
        assert!(DressedBasis::new(1.0, 0.99, 0.0).is_err());
    }

    #[test]
    fn dressed_states_diagonalise_hamiltonian() {
        let spec = SystemSpec::two(1.0, 0.97, 0.13, vec![], InitialState::PlusPlus);
        let h = two_qubit_hamiltonian(&spec);
        let d = DressedBasis::new(1.0, 0.97, 0.13).unwrap();
        for (i, psi) in d.states.iter().enumerate() {
            let v = nalgebra::DVector::from_column_slice(psi);
            let hv = &h * &v;
            assert!((hv - v * re(d.energies[i])).camax() < 1e-14);
        }
    }

    #[test]
    fn dressed_jump_operators_match_numeric_decomposition() {
        let (w1, w2, k) = (1.0, 0.9, 0.07);
        let spec = SystemSpec::two(w1, w2, k, vec![], InitialState::PlusPlus);
        let h = two_qubit_hamiltonian(&spec);
        let d = DressedBasis::new(w1, w2, k).unwrap();
        for q in [Qubit::First, Qubit::Second] {
            let (x, z) = d.positive_components(q);
            for (comps, pauli) in [(x, pauli_x()), (z, pauli_z())] {
                let numeric = jump_decompose(&h, &on_qubit(&pauli, q)).unwrap();
                let closed = with_negative(comps);
                let total = closed.iter().fold(CMatrix::zeros(4, 4), |acc, (_, op)| acc + op);
                assert!(max_abs(&(total - on_qubit(&pauli, q))) < 1e-12);
                for (w, op) in &closed {
                    let n = numeric.get(*w, 1e-9).expect("frequency present");
                    assert!(max_abs(&(n - op)) < 1e-12, "qubit {q} freq {w}");
                }
            }
        }
    }
}
