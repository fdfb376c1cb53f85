//! Deterministic CSV and JSON export. Floats are written in shortest
//! round-trip form, so identical reports always produce identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::halfplane::HalfPlaneField;
use crate::identities::IdentityReport;
use crate::linearized::{LinearOperatorMatrix, Spectrum};
use crate::probe::ProbeReport;
use crate::steady::ResidualReport;
use crate::stokes::BranchPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::Format(other.to_string())),
        }
    }
}

/// Anything that can be written as a report. CSV is optional.
pub trait Report: Serialize {
    fn csv(&self) -> Option<String> {
        None
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn export_report<R: Report + ?Sized>(report: &R, format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Json => to_json(report),
        ExportFormat::Csv => report.csv().ok_or_else(|| Error::Format("csv is not available for this report".into())),
    }
}

fn table(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// Shortest round-trip text, switching to exponent form for tiny or huge
/// magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Report for Profile {
    fn csv(&self) -> Option<String> {
        let g = self.grid();
        Some(table("x,value", self.values().iter().enumerate().map(|(j, v)| format!("{:?},{:?}", g.node(j), v))))
    }
}

impl Report for ResidualReport {
    fn csv(&self) -> Option<String> {
        self.residual.csv()
    }
}

fn identity_row(r: &IdentityReport) -> String {
    format!("{},{:?},{:?},{:?},{:?},{}", r.name, r.lhs, r.rhs, r.defect, r.tolerance, r.passed)
}

const IDENTITY_HEADER: &str = "name,lhs,rhs,defect,tolerance,passed";

impl Report for IdentityReport {
    fn csv(&self) -> Option<String> {
        Some(table(IDENTITY_HEADER, std::iter::once(identity_row(self))))
    }
}

impl Report for [IdentityReport] {
    fn csv(&self) -> Option<String> {
        Some(table(IDENTITY_HEADER, self.iter().map(identity_row)))
    }
}

impl Report for [BranchPoint] {
    fn csv(&self) -> Option<String> {
        Some(table(
            "mu,amplitude,residual,iterations",
            self.iter().map(|p| format!("{:?},{:?},{:?},{}", p.mu, p.amplitude, p.residual_norm, p.newton_iters)),
        ))
    }
}

fn probe_row(p: &ProbeReport) -> String {
    let outcome = serde_json::to_value(p.outcome).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    format!(
        "{},{:?},{},{},{:?},{:?},{}",
        p.initial_label,
        p.mu,
        outcome,
        p.iterations,
        p.final_sup_norm,
        p.final_residual,
        opt(p.decay.as_ref().map(|d| d.rho))
    )
}

const PROBE_HEADER: &str = "label,mu,outcome,iterations,final_sup_norm,final_residual,rho";

impl Report for ProbeReport {
    fn csv(&self) -> Option<String> {
        Some(table(PROBE_HEADER, std::iter::once(probe_row(self))))
    }
}

impl Report for [ProbeReport] {
    fn csv(&self) -> Option<String> {
        Some(table(PROBE_HEADER, self.iter().map(probe_row)))
    }
}

impl Report for Spectrum {
    fn csv(&self) -> Option<String> {
        Some(table("index,eigenvalue", self.eigenvalues.iter().enumerate().map(|(i, e)| format!("{i},{e:?}"))))
    }
}

impl Report for HalfPlaneField {
    fn csv(&self) -> Option<String> {
        let g = self.x_grid;
        let mut s = String::from("x,y,value\n");
        for (y, row) in self.y_levels.iter().zip(&self.values) {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(s, "{:?},{:?},{:?}", g.node(j), y, v);
            }
        }
        Some(s)
    }
}

impl<T: Report> Report for Vec<T>
where
    [T]: Report,
{
    fn csv(&self) -> Option<String> {
        self.as_slice().csv()
    }
}

#[derive(Serialize)]
struct MatrixHeader<'a> {
    grid: &'a crate::grid::Grid,
    label: crate::linearized::OperatorLabel,
    rows: usize,
    cols: usize,
    dtype: &'static str,
    order: &'static str,
}

/// One JSON header line followed by the row-major entries as little-endian f64.
pub fn operator_bytes(m: &LinearOperatorMatrix) -> Result<Vec<u8>> {
    let header = MatrixHeader {
        grid: &m.grid,
        label: m.label,
        rows: m.entries.nrows(),
        cols: m.entries.ncols(),
        dtype: "f64le",
        order: "row_major",
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    for v in m.row_major() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn identity_csv_header() {
        let r = IdentityReport::new("pohozaev", 0.1, 0.1, 1e-5);
        let s = export_report(&r, ExportFormat::Csv).unwrap();
        assert_eq!(s.lines().next(), Some("name,lhs,rhs,defect,tolerance,passed"));
        assert_eq!(s.lines().nth(1), Some("pohozaev,0.1,0.1,0.0,1e-5,true"));
    }

    #[test]
    fn repeated_export_is_identical() {
        let p = Profile::from_fn(Grid::circle(16).unwrap(), |x| x.sin() / 3.0).unwrap();
        for f in [ExportFormat::Csv, ExportFormat::Json] {
            assert_eq!(export_report(&p, f).unwrap(), export_report(&p, f).unwrap());
        }
    }

    #[test]
    fn unknown_format_rejected() {
        assert!(matches!("xml".parse::<ExportFormat>(), Err(Error::Format(_))));
    }
}
