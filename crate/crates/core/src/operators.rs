//! Dense complex linear algebra on one- and two-qubit Hilbert spaces.
//!
//! Basis conventions used throughout the crate:
//!
//! * single qubit: `{|0>, |1>}` with `σz|0> = +|0>`, so for `H = ω σz / 2`
//!   index 0 is the upper level and index 1 the lower level;
//! * two qubits: `{|00>, |01>, |10>, |11>}` with qubit 1 as the left tensor
//!   factor.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Tolerance for the Hermiticity invariant of a density matrix.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance for the unit-trace invariant of a density matrix.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted by [`DensityMatrix::new`].
pub const POSITIVITY_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(0.0), c(0.0, -1.0), c(0.0, 1.0), re(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)])
}

/// Lowering operator `|1><0|`, mapping the upper level to the lower one.
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(0.0), re(0.0), re(1.0), re(0.0)])
}

/// Raising operator `|0><1|`.
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(0.0), re(0.0)])
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Outer product `|u><v|` of two column vectors.
pub fn outer(u: &[C64], v: &[C64]) -> CMatrix {
    CMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// `max |A - A†|`.
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Qubit label in a two-qubit register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Qubit {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

impl Qubit {
    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            1 => Ok(Qubit::First),
            2 => Ok(Qubit::Second),
            _ => Err(Error::InvalidParameter(format!(
                "qubit index must be 1 or 2, got {index}"
            ))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Qubit::First => 1,
            Qubit::Second => 2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Qubit::First => Qubit::Second,
            Qubit::Second => Qubit::First,
        }
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Embed a single-qubit operator into the two-qubit space.
pub fn on_qubit(op: &CMatrix, qubit: Qubit) -> CMatrix {
    match qubit {
        Qubit::First => tensor(op, &identity(2)),
        Qubit::Second => tensor(&identity(2), op),
    }
}

/// Partial trace of a two-qubit operator, keeping `keep`.
pub fn partial_trace(rho: &CMatrix, keep: Qubit) -> Result<CMatrix> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.nrows(),
        });
    }
    let mut out = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                acc += match keep {
                    Qubit::First => rho[(2 * i + k, 2 * j + k)],
                    Qubit::Second => rho[(2 * k + i, 2 * k + j)],
                };
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// ascending. Column `n` of the returned matrix is the eigenvector of
/// eigenvalue `n`.
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.ncols(),
        });
    }
    // Symmetrise to strip round-off anti-Hermitian parts before the solver sees them.
    let sym = (h + h.adjoint()) * re(0.5);
    let eig = SymmetricEigen::try_new(sym, 1e-15, 10_000).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok((values, vectors))
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite
/// within [`POSITIVITY_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = hermiticity_residual(&matrix);
        if herm >= HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {herm:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - re(1.0)).norm() >= TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let rho = DensityMatrix(matrix);
        let min = rho.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(rho)
    }

    /// Wrap a matrix without validation. Used for propagated states, whose
    /// invariants are tracked as diagnostics rather than enforced.
    pub fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        DensityMatrix(matrix)
    }

    /// Pure state `|ψ><ψ|` from a (not necessarily normalised) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let m = outer(psi, psi) * re(1.0 / norm2);
        Ok(DensityMatrix(m))
    }

    /// Diagonal state from real populations summing to one.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let n = populations.len();
        let m = CMatrix::from_fn(n, n, |i, j| if i == j { re(populations[i]) } else { re(0.0) });
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(identity(dim) * re(1.0 / dim as f64))
    }

    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        DensityMatrix(tensor(&a.0, &b.0))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn trace_error(&self) -> f64 {
        (self.trace() - re(1.0)).norm()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.0)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigen(&self.0)?.0)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// Trace distance `½ ||ρ - σ||₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let (vals, _) = hermitian_eigen(&(&self.0 - &other.0))?;
        Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn partial_trace(&self, keep: Qubit) -> Result<DensityMatrix> {
        Ok(DensityMatrix(partial_trace(&self.0, keep)?))
    }
}

/// One frequency component `A(ω)` of a coupling operator.
#[derive(Debug, Clone)]
pub struct JumpComponent {
    pub omega: f64,
    pub op: CMatrix,
}

/// Decomposition `A = Σ_ω A(ω)` in the eigenbasis of a system Hamiltonian,
/// with `A(ω)` lowering the energy by `ω`. Components are sorted by
/// ascending frequency.
#[derive(Debug, Clone)]
pub struct JumpDecomposition {
    pub components: Vec<JumpComponent>,
}

impl JumpDecomposition {
    pub fn frequencies(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.omega).collect()
    }

    pub fn get(&self, omega: f64, tol: f64) -> Option<&CMatrix> {
        self.components
            .iter()
            .find(|c| (c.omega - omega).abs() <= tol)
            .map(|c| &c.op)
    }

    pub fn reconstruct(&self) -> Option<CMatrix> {
        let mut it = self.components.iter();
        let first = it.next()?.op.clone();
        Some(it.fold(first, |acc, c| acc + &c.op))
    }
}

/// Decompose `a` into jump operators of `h`.
///
/// Energy gaps closer than `1e-10 · max|ε|` are merged; components whose
/// entries all vanish (below `1e-14`) are dropped.
pub fn jump_decompose(h: &CMatrix, a: &CMatrix) -> Result<JumpDecomposition> {
    let n = h.nrows();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.nrows(),
        });
    }
    let (energies, vecs) = hermitian_eigen(h)?;
    let scale = energies.iter().fold(0.0_f64, |m, e| m.max(e.abs())).max(1.0);
    let tol = 1e-10 * scale;

    // Matrix elements <e_n|A|e_m> in the eigenbasis.
    let a_eig = vecs.adjoint() * a * &vecs;

    let mut gaps: Vec<(f64, Vec<(usize, usize)>)> = Vec::new();
    for m in 0..n {
        for nn in 0..n {
            let omega = energies[m] - energies[nn];
            match gaps.iter_mut().find(|(w, _)| (w - omega).abs() <= tol) {
                Some((_, pairs)) => pairs.push((nn, m)),
                None => gaps.push((omega, vec![(nn, m)])),
            }
        }
    }
    gaps.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut components = Vec::new();
    for (omega, pairs) in gaps {
        let mut op_eig = CMatrix::zeros(n, n);
        for (row, col) in pairs {
            op_eig[(row, col)] = a_eig[(row, col)];
        }
        if max_abs(&op_eig) < 1e-14 {
            continue;
        }
        let op = &vecs * op_eig * vecs.adjoint();
        components.push(JumpComponent { omega, op });
    }
    Ok(JumpDecomposition { components })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs(&(a - b)) < tol
    }

    #[test]
    fn identity_tensor_identity() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
    }

    #[test]
    fn sigma_z_on_first_qubit_is_diag() {
        let z1 = on_qubit(&pauli_z(), Qubit::First);
        let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            re(1.0),
            re(1.0),
            re(-1.0),
            re(-1.0),
        ]));
        assert_eq!(z1, expected);
    }

    #[test]
    fn ladder_operators_compose_pauli() {
        let sx = sigma_minus() + sigma_plus();
        assert!(close(&sx, &pauli_x(), 1e-15));
        // σ+σ- projects onto the upper level (index 0).
        let n_up = sigma_plus() * sigma_minus();
        assert_eq!(n_up[(0, 0)], re(1.0));
        assert_eq!(n_up[(1, 1)], re(0.0));
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = 1.0 / 2f64.sqrt();
        let bell = DensityMatrix::pure(&[re(s), re(0.0), re(0.0), re(s)]).unwrap();
        for q in [Qubit::First, Qubit::Second] {
            let red = bell.partial_trace(q).unwrap();
            assert!(close(red.matrix(), &(identity(2) * re(0.5)), 1e-13));
        }
    }

    #[test]
    fn partial_trace_rejects_wrong_dimension() {
        assert!(matches!(
            partial_trace(&identity(2), Qubit::First),
            Err(Error::DimensionMismatch { expected: 4, found: 2 })
        ));
    }

    #[test]
    fn two_level_jump_decomposition() {
        let h = pauli_z() * re(0.5 * 1.3);
        let d = jump_decompose(&h, &pauli_x()).unwrap();
        assert_eq!(d.components.len(), 2);
        let w = d.frequencies();
        assert!((w[0] + 1.3).abs() < 1e-12 && (w[1] - 1.3).abs() < 1e-12);
        assert!(close(d.get(1.3, 1e-9).unwrap(), &sigma_minus(), 1e-12));
        assert!(close(d.get(-1.3, 1e-9).unwrap(), &sigma_plus(), 1e-12));
    }

    #[test]
    fn dephasing_commutes_with_hamiltonian() {
        let h = pauli_z() * re(0.5);
        let d = jump_decompose(&h, &pauli_z()).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].omega, 0.0);
        assert!(close(&d.components[0].op, &pauli_z(), 1e-12));
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let non_herm = CMatrix::from_row_slice(2, 2, &[re(0.5), re(0.3), re(0.0), re(0.5)]);
        assert!(DensityMatrix::new(non_herm).is_err());
        let negative = CMatrix::from_row_slice(2, 2, &[re(1.2), re(0.0), re(0.0), re(-0.2)]);
        assert!(DensityMatrix::new(negative).is_err());
        assert!(DensityMatrix::diagonal(&[0.3, 0.7]).is_ok());
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states() {
        let a = DensityMatrix::pure(&[re(1.0), re(0.0)]).unwrap();
        let b = DensityMatrix::pure(&[re(0.0), re(1.0)]).unwrap();
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-14);
    }
}
