//! Scenario runners and CSV output.

use std::io::Write;

use rayon::prelude::*;

use crate::analytic;
use crate::bath::BathLabel;
use crate::error::{Error, Result};
use crate::metrology::{steady_qfi, transient_qfi, Parameter, QfiSeries, SteadyQfi};

use super::config::{Scenario, ScenarioKind};

fn require(s: &Scenario, kind: ScenarioKind) -> Result<()> {
    if s.kind != kind {
        return Err(Error::Config(format!(
            "scenario `{}` is a {} run, not {}",
            s.name,
            s.kind.as_str(),
            kind.as_str()
        )));
    }
    Ok(())
}

pub fn run_transient(s: &Scenario) -> Result<QfiSeries> {
    require(s, ScenarioKind::Transient)?;
    transient_qfi(&s.setup, &s.time_grid()?)
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: Parameter,
    pub points: Vec<SteadyQfi>,
}

/// Steady-state QFI over the sweep axis of the target inverse temperature.
pub fn run_steady_sweep(s: &Scenario) -> Result<SweepResult> {
    require(s, ScenarioKind::Steady)?;
    let axis = s.sweep.as_ref().ok_or_else(|| Error::Config("missing sweep axis".into()))?;
    let label = s.setup.target.parameter.bath();
    let points = axis
        .values()
        .into_par_iter()
        .map(|beta| {
            let mut setup = s.setup.clone();
            setup.spec = setup.spec.with_beta(label, beta)?;
            steady_qfi(&setup)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        parameter: s.setup.target.parameter,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Above the threshold.
    I,
    II,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeatCell {
    pub beta_l1: f64,
    pub beta_l2: f64,
    pub qfi: f64,
    pub region: Region,
}

#[derive(Debug, Clone)]
pub struct HeatmapResult {
    pub threshold: f64,
    pub axis: Vec<f64>,
    /// Row-major in `beta_l1`.
    pub cells: Vec<HeatCell>,
}

impl HeatmapResult {
    pub fn cell(&self, beta_l1: f64, beta_l2: f64) -> Option<&HeatCell> {
        self.cells
            .iter()
            .find(|c| c.beta_l1 == beta_l1 && c.beta_l2 == beta_l2)
    }
}

/// Steady-state QFI over the `(β^{l1}, β^{l2})` grid, classified against
/// the thermal single-qubit value at the target temperature.
pub fn run_heatmap(s: &Scenario) -> Result<HeatmapResult> {
    require(s, ScenarioKind::Heatmap)?;
    let axis = s
        .heatmap
        .as_ref()
        .ok_or_else(|| Error::Config("missing heatmap axis".into()))?
        .values();
    let beta = s.setup.beta()?;
    let omega = match s.setup.target.probe {
        crate::Qubit::First => s.setup.spec.omega1,
        crate::Qubit::Second => s.setup.spec.omega2,
    };
    let threshold = s.threshold.unwrap_or_else(|| analytic::steady_qfi(omega, beta));
    let pairs: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| (a, b)))
        .collect();
    let cells = pairs
        .into_par_iter()
        .map(|(b1, b2)| {
            let mut setup = s.setup.clone();
            setup.spec = setup
                .spec
                .with_beta(BathLabel::Local1, b1)?
                .with_beta(BathLabel::Local2, b2)?;
            let qfi = steady_qfi(&setup)?.qfi;
            Ok(HeatCell {
                beta_l1: b1,
                beta_l2: b2,
                qfi,
                region: if qfi > threshold { Region::I } else { Region::II },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HeatmapResult { threshold, axis, cells })
}

/// Seventeen significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_transient_csv<W: Write>(mut w: W, series: &QfiSeries) -> Result<()> {
    writeln!(w, "t,qfi_beta,qfi_T,trace_err,min_eig")?;
    let qfi_t = series.qfi_t();
    for i in 0..series.times.len() {
        let d = series.diagnostics[i];
        writeln!(
            w,
            "{},{},{},{},{}",
            num(series.times[i]),
            num(series.values[i]),
            num(qfi_t[i]),
            num(d.trace_error),
            num(d.min_eigenvalue)
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, sweep: &SweepResult) -> Result<()> {
    writeln!(w, "beta,qfi_beta,qfi_T,rel_error,min_eig,residual")?;
    for p in &sweep.points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            num(p.beta),
            num(p.qfi),
            num(p.qfi_t()),
            num(p.relative_error),
            num(p.min_eigenvalue),
            num(p.residual)
        )?;
    }
    Ok(())
}

pub fn write_heatmap_csv<W: Write>(mut w: W, map: &HeatmapResult) -> Result<()> {
    writeln!(w, "beta_l1,beta_l2,qfi_beta,region")?;
    for c in &map.cells {
        writeln!(w, "{},{},{},{}", num(c.beta_l1), num(c.beta_l2), num(c.qfi), c.region.as_str())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"
scenario.name = "single"
scenario.kind = "steady"
system.qubits = 1
system.omega1 = 1.0
bath.common.beta = 1.0
bath.common.mu_x = 0.01
target.parameter = "beta_common"
sweep.beta_min = 0.1
sweep.beta_max = 10.0
sweep.n = 9
"#;

    #[test]
    fn single_bath_sweep_reproduces_thermal_curve() {
        let s = Scenario::parse(SINGLE).unwrap();
        let r = run_steady_sweep(&s).unwrap();
        assert_eq!(r.points.len(), 9);
        for p in &r.points {
            let exact = analytic::steady_qfi(1.0, p.beta);
            assert!((p.qfi / exact - 1.0).abs() < 1e-4, "{}: {} vs {exact}", p.beta, p.qfi);
            assert!(p.residual < 1e-11);
        }
    }

    #[test]
    fn csv_rows_and_precision() {
        let s = Scenario::parse(SINGLE).unwrap();
        let r = run_steady_sweep(&s).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "beta,qfi_beta,qfi_T,rel_error,min_eig,residual");
        assert_eq!(lines.len(), 10);
        for line in &lines[1..] {
            let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert!(f[1] >= 0.0);
            assert_eq!(f[2], f[1] * f[0].powi(4));
        }
        assert!(lines[1].starts_with("1.0000000000000001e-1,"));
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let s = Scenario::parse(SINGLE).unwrap();
        assert!(run_transient(&s).is_err());
        assert!(run_heatmap(&s).is_err());
    }

    #[test]
    fn transient_csv_header() {
        let text = SINGLE.replace("\"steady\"", "\"transient\"") + "grid.n_samples = 5\n";
        let s = Scenario::parse(&text).unwrap();
        let series = run_transient(&s).unwrap();
        let mut buf = Vec::new();
        write_transient_csv(&mut buf, &series).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,qfi_beta,qfi_T,trace_err,min_eig\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
