//! Time evolution under a [`LiouvillianModel`] and steady states.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{self, CVector, Dop853Options};
use crate::liouvillian::{slowest_relaxation_rate, superop_matrix, LiouvillianModel, SystemSpec};
use crate::operators::{identity, re, CMatrix, DensityMatrix, Qubit};

/// Kernel directions of the generator are counted below this fraction of
/// its largest singular value.
const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Sample times. A log grid starting at zero keeps `t = 0` and spaces the
/// remaining samples logarithmically from `1e-4·t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_samples: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_samples: usize, spacing: Spacing) -> Result<Self> {
        let grid = TimeGrid {
            t_start,
            t_end,
            n_samples,
            spacing,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn linear(t_start: f64, t_end: f64, n_samples: usize) -> Result<Self> {
        Self::new(t_start, t_end, n_samples, Spacing::Linear)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start >= 0.0) || !(self.t_end > self.t_start) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time grid needs 0 <= t_start < t_end, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter(format!(
                "time grid needs at least 2 samples, got {}",
                self.n_samples
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_samples;
        match self.spacing {
            Spacing::Linear => {
                let dt = (self.t_end - self.t_start) / (n - 1) as f64;
                let mut ts: Vec<f64> = (0..n).map(|i| self.t_start + dt * i as f64).collect();
                ts[n - 1] = self.t_end;
                ts
            }
            Spacing::Log => {
                let (mut ts, lo, m) = if self.t_start == 0.0 {
                    (vec![0.0], 1e-4 * self.t_end, n - 1)
                } else {
                    (Vec::new(), self.t_start, n)
                };
                let (a, b) = (lo.ln(), self.t_end.ln());
                if m == 1 {
                    ts.push(self.t_end);
                } else {
                    ts.extend((0..m).map(|i| (a + (b - a) * i as f64 / (m - 1) as f64).exp()));
                    *ts.last_mut().expect("non-empty") = self.t_end;
                }
                ts
            }
        }
    }
}

/// Horizon of `10 /` the slowest single-qubit relaxation rate.
pub fn default_horizon(spec: &SystemSpec) -> f64 {
    10.0 / slowest_relaxation_rate(spec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    pub min_eigenvalue: f64,
    pub trace_error: f64,
    pub hermiticity: f64,
}

impl StateDiagnostics {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        Ok(StateDiagnostics {
            min_eigenvalue: rho.min_eigenvalue()?,
            trace_error: rho.trace_error(),
            hermiticity: rho.hermiticity_residual(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: Vec<StateDiagnostics>,
    /// Accepted integrator step endpoints, empty for non-adaptive runs.
    pub schedule: Vec<f64>,
}

impl Trajectory {
    fn from_states(grid: TimeGrid, times: Vec<f64>, states: Vec<DensityMatrix>, schedule: Vec<f64>) -> Result<Self> {
        let diagnostics = states.iter().map(StateDiagnostics::of).collect::<Result<_>>()?;
        Ok(Trajectory {
            grid,
            times,
            states,
            diagnostics,
            schedule,
        })
    }

    pub fn max_trace_error(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.trace_error).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_hermiticity(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.hermiticity).fold(0.0, f64::max)
    }
}

fn vectorize(rho: &CMatrix) -> CVector {
    DVector::from_column_slice(rho.as_slice())
}

fn unvectorize(v: &CVector, dim: usize) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(CMatrix::from_column_slice(dim, dim, v.as_slice()))
}

fn check_dim(rho0: &DensityMatrix, model: &LiouvillianModel) -> Result<()> {
    if rho0.dim() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            found: rho0.dim(),
        });
    }
    Ok(())
}

/// Integrate `dρ/dt = L(ρ)` from `t = 0` and sample on `grid`. Trace drift
/// is reported in the diagnostics and never renormalised away.
pub fn evolve(rho0: &DensityMatrix, model: &LiouvillianModel, grid: &TimeGrid) -> Result<Trajectory> {
    evolve_with(rho0, model, grid, &Dop853Options::default())
}

pub fn evolve_with(
    rho0: &DensityMatrix,
    model: &LiouvillianModel,
    grid: &TimeGrid,
    opts: &Dop853Options,
) -> Result<Trajectory> {
    check_dim(rho0, model)?;
    grid.validate()?;
    let s = superop_matrix(model);
    let times = grid.times();
    let sol = integrator::integrate(|_t, y| &s * y, 0.0, &vectorize(rho0.matrix()), &times, opts)?;
    let states = sol.states.iter().map(|v| unvectorize(v, model.dim)).collect();
    Trajectory::from_states(*grid, sol.times, states, sol.schedule)
}

/// Integrate along a fixed step sequence, typically one recorded by
/// [`evolve`] for a neighbouring parameter value.
pub fn evolve_with_schedule(
    rho0: &DensityMatrix,
    model: &LiouvillianModel,
    grid: &TimeGrid,
    schedule: &[f64],
) -> Result<Trajectory> {
    check_dim(rho0, model)?;
    grid.validate()?;
    let s = superop_matrix(model);
    let times = grid.times();
    let sol = integrator::replay(|_t, y| &s * y, 0.0, &vectorize(rho0.matrix()), &times, schedule)?;
    let states = sol.states.iter().map(|v| unvectorize(v, model.dim)).collect();
    Trajectory::from_states(*grid, sol.times, states, sol.schedule)
}

/// Propagation by the matrix exponential of the superoperator. Slower and
/// used as a cross-check of [`evolve`].
pub fn evolve_expm(rho0: &DensityMatrix, model: &LiouvillianModel, grid: &TimeGrid) -> Result<Trajectory> {
    check_dim(rho0, model)?;
    grid.validate()?;
    let s = superop_matrix(model);
    let v0 = vectorize(rho0.matrix());
    let times = grid.times();
    let states = times
        .iter()
        .map(|&t| unvectorize(&((&s * re(t)).exp() * &v0), model.dim))
        .collect();
    Trajectory::from_states(*grid, times, states, Vec::new())
}

/// Number of singular values of the generator below the kernel threshold.
pub fn kernel_dimension(model: &LiouvillianModel) -> usize {
    let s = superop_matrix(model);
    let sv = s.singular_values();
    let max = sv.iter().fold(0.0_f64, |m, v| m.max(*v));
    sv.iter().filter(|v| **v <= KERNEL_TOL * max.max(1e-300)).count()
}

/// Solve `L(ρ) = 0`, `Tr ρ = 1` through the bordered system
/// `[[S, vec I], [vec I†, 0]]`.
pub fn steady_state(model: &LiouvillianModel) -> Result<DensityMatrix> {
    let kernel_dim = kernel_dimension(model);
    if kernel_dim != 1 {
        return Err(Error::DegenerateSteadyState { kernel_dim });
    }
    let d = model.dim;
    let n = d * d;
    let s = superop_matrix(model);
    let id = vectorize(&identity(d));
    let mut bordered = CMatrix::zeros(n + 1, n + 1);
    bordered.view_mut((0, 0), (n, n)).copy_from(&s);
    for i in 0..n {
        bordered[(i, n)] = id[i];
        bordered[(n, i)] = id[i].conj();
    }
    let mut rhs = CVector::zeros(n + 1);
    rhs[n] = re(1.0);
    let x = bordered
        .lu()
        .solve(&rhs)
        .ok_or(Error::DegenerateSteadyState { kernel_dim })?;
    let rho = CMatrix::from_column_slice(d, d, &x.as_slice()[..n]);
    let rho = (&rho + rho.adjoint()) * re(0.5);
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite { t: f64::INFINITY });
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho))
}

/// `max |L(ρ)|`.
pub fn steady_residual(model: &LiouvillianModel, rho: &DensityMatrix) -> f64 {
    crate::operators::max_abs(&model.apply(rho.matrix()))
}

/// Pointwise partial trace of a two-qubit trajectory.
pub fn reduced_trajectory(traj: &Trajectory, keep: Qubit) -> Result<Trajectory> {
    let states = traj
        .states
        .iter()
        .map(|s| s.partial_trace(keep))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_states(traj.grid, traj.times.clone(), states, traj.schedule.clone())
}
