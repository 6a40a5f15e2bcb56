//! CSV and JSON artifacts. Floats are written with 17 significant digits.

use std::io::Write;

use faer::{c64, Col, Mat};

use crate::continuation::{Branch, Event};
use crate::diagnostics::DecayReport;
use crate::error::{Error, Result};
use crate::stability::SpectrumResult;

const FIELD_NAMES: [&str; 2] = ["u", "v"];

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn coord_names(dim: usize) -> Vec<String> {
    ["x", "y"][..dim].iter().map(|s| s.to_string()).collect()
}

fn with_source(mut header: Vec<String>, source: Option<&str>) -> Vec<String> {
    if source.is_some() {
        header.push("source".into());
    }
    header
}

fn push_source(row: &mut Vec<String>, source: Option<&str>) {
    if let Some(s) = source {
        row.push(s.to_string());
    }
}

/// Columns `s, mu, mean_u, mean_v, max_u, l2_u, re_lambda1, im_lambda1, ..., n_unstable, tag`.
/// `mean_v` and missing eigenvalues are left empty.
pub fn write_branch_csv<W: Write>(out: W, branch: &Branch, k: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["s", "mu", "mean_u", "mean_v", "max_u", "l2_u"].iter().map(|s| s.to_string()).collect();
    for j in 1..=k {
        header.push(format!("re_lambda{j}"));
        header.push(format!("im_lambda{j}"));
    }
    header.extend(["n_unstable".to_string(), "tag".to_string()]);
    w.write_record(&header)?;
    for p in &branch.points {
        let mut row = vec![fmt_f64(p.s), fmt_f64(p.mu), fmt_f64(p.summary.mean_u)];
        row.push(p.summary.mean_v.map(fmt_f64).unwrap_or_default());
        row.extend([fmt_f64(p.summary.max_u), fmt_f64(p.summary.l2_u)]);
        for j in 0..k {
            match p.leading_eigs.get(j) {
                Some(z) => row.extend([fmt_f64(z.re), fmt_f64(z.im)]),
                None => row.extend([String::new(), String::new()]),
            }
        }
        row.push(p.n_unstable.to_string());
        row.push(p.tags.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(";"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_json<W: Write>(out: W, events: &[Event]) -> Result<()> {
    serde_json::to_writer_pretty(out, events)?;
    Ok(())
}

/// Columns `index, re_lambda, im_lambda, residual, group[, source]`.
pub fn write_spectrum_csv<W: Write>(out: W, spec: &SpectrumResult, source: Option<&str>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header = ["index", "re_lambda", "im_lambda", "residual", "group"].iter().map(|s| s.to_string()).collect();
    w.write_record(with_source(header, source))?;
    for (i, z) in spec.eigenvalues.iter().enumerate() {
        let group = spec.groups.get(i).map(|g| g.as_str()).unwrap_or("physical");
        let res = spec.residuals.get(i).copied().unwrap_or(f64::NAN);
        let mut row = vec![(i + 1).to_string(), fmt_f64(z.re), fmt_f64(z.im), fmt_f64(res), group.to_string()];
        push_source(&mut row, source);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn check_rows(points: &Mat<f64>, len: usize, n_fields: usize) -> Result<()> {
    if len != points.nrows() * n_fields || n_fields == 0 || n_fields > 2 {
        return Err(Error::arg(format!("{len} values do not match {} points x {n_fields} fields", points.nrows())));
    }
    Ok(())
}

/// Columns `x[, y], u[, v][, source]`; `values` are stacked per field.
pub fn write_solution_csv<W: Write>(out: W, points: &Mat<f64>, values: &Col<f64>, n_fields: usize, source: Option<&str>) -> Result<()> {
    check_rows(points, values.nrows(), n_fields)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = coord_names(points.ncols());
    header.extend(FIELD_NAMES[..n_fields].iter().map(|s| s.to_string()));
    w.write_record(with_source(header, source))?;
    let m = points.nrows();
    for i in 0..m {
        let mut row: Vec<String> = (0..points.ncols()).map(|q| fmt_f64(points[(i, q)])).collect();
        row.extend((0..n_fields).map(|a| fmt_f64(values[a * m + i])));
        push_source(&mut row, source);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `x[, y], re_phi_u, im_phi_u[, re_phi_v, im_phi_v][, source]`.
pub fn write_eigenfunction_csv<W: Write>(out: W, points: &Mat<f64>, phi: &Col<c64>, n_fields: usize, source: Option<&str>) -> Result<()> {
    check_rows(points, phi.nrows(), n_fields)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = coord_names(points.ncols());
    for f in &FIELD_NAMES[..n_fields] {
        header.push(format!("re_phi_{f}"));
        header.push(format!("im_phi_{f}"));
    }
    w.write_record(with_source(header, source))?;
    let m = points.nrows();
    for i in 0..m {
        let mut row: Vec<String> = (0..points.ncols()).map(|q| fmt_f64(points[(i, q)])).collect();
        for a in 0..n_fields {
            row.extend([fmt_f64(phi[a * m + i].re), fmt_f64(phi[a * m + i].im)]);
        }
        push_source(&mut row, source);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `j, sigma` with 1-based `j`.
pub fn write_decay_csv<W: Write>(out: W, report: &DecayReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "sigma"])?;
    for (j, s) in report.singular_values.iter().enumerate() {
        w.write_record([(j + 1).to_string(), fmt_f64(*s)])?;
    }
    w.flush()?;
    Ok(())
}
