//! Per-level convergence records, their CSV form and least-squares rate fits.

use std::io::{self, BufRead, Write};

/// Columns of the history CSV, in order.
pub const CSV_HEADER: &str = "level,ndofs,nelems,estimate,qoi_uh,qoi_udg,rel_err,ortho_a,ortho_b,ortho_c,ortho_d,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub n_v: usize,
    pub n_u: usize,
    pub ndofs: usize,
    pub nelems: usize,
    pub estimate: f64,
    pub qoi_uh: f64,
    pub qoi_udg: f64,
    /// `|q(u) - q(u_h)| / |q(u)|`, NaN without a reference value.
    pub rel_err: f64,
    /// `|q(u) - q(u_dg)| / |q(u)|`, NaN without a reference value.
    pub rel_err_dg: f64,
    /// Relative residuals of the four discrete orthogonality relations.
    pub ortho: [f64; 4],
    /// Relative residuals of `q(u_dg - u_h) = (e_h, v_dg* - v*)` and
    /// `(e_h, v_dg* - v*) = l_h(v_dg* - v*)`.
    pub chain: [f64; 2],
    /// `|(v*, v_dg* - v*)| / (||v*|| ||v_dg* - v*||)`.
    pub c_min: f64,
    /// `||e_h|| / ||u_dg - u_h||`.
    pub efficiency: f64,
    /// `||e*|| / ||v_dg* - v*||`, NaN when `e*` was not computed.
    pub adjoint_efficiency: f64,
    /// Largest block residual over the primal and adjoint saddle solves.
    pub solve_residual: f64,
    pub wall_ms: f64,
}

impl ConvergenceRecord {
    /// The same record with timing removed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        ConvergenceRecord { wall_ms: 0.0, ..self.clone() }
    }
}

fn num(x: f64) -> String {
    format!("{x:.14e}")
}

pub fn write_csv<W: Write>(records: &[ConvergenceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.ndofs,
            r.nelems,
            num(r.estimate),
            num(r.qoi_uh),
            num(r.qoi_udg),
            num(r.rel_err),
            num(r.ortho[0]),
            num(r.ortho[1]),
            num(r.ortho[2]),
            num(r.ortho[3]),
            num(r.wall_ms)
        )?;
    }
    Ok(())
}

/// One parsed CSV row: the subset of a record the file carries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub level: usize,
    pub ndofs: usize,
    pub nelems: usize,
    pub estimate: f64,
    pub qoi_uh: f64,
    pub qoi_udg: f64,
    pub rel_err: f64,
    pub ortho: [f64; 4],
    pub wall_ms: f64,
}

impl From<&ConvergenceRecord> for CsvRow {
    fn from(r: &ConvergenceRecord) -> Self {
        CsvRow {
            level: r.level,
            ndofs: r.ndofs,
            nelems: r.nelems,
            estimate: r.estimate,
            qoi_uh: r.qoi_uh,
            qoi_udg: r.qoi_udg,
            rel_err: r.rel_err,
            ortho: r.ortho,
            wall_ms: r.wall_ms,
        }
    }
}

fn bad(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

pub fn parse_csv<R: BufRead>(input: R) -> io::Result<Vec<CsvRow>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty history".into()))??;
    if header.trim() != CSV_HEADER {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(bad(format!("expected 12 fields in {line:?}")));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        rows.push(CsvRow {
            level: int(f[0])?,
            ndofs: int(f[1])?,
            nelems: int(f[2])?,
            estimate: real(f[3])?,
            qoi_uh: real(f[4])?,
            qoi_udg: real(f[5])?,
            rel_err: real(f[6])?,
            ortho: [real(f[7])?, real(f[8])?, real(f[9])?, real(f[10])?],
            wall_ms: real(f[11])?,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log(err)` against `log(sqrt(ndofs))` over the last
/// `window` points with positive, finite error. `None` with fewer than two.
pub fn fit_slope(ndofs: &[usize], err: &[f64], window: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ndofs
        .iter()
        .zip(err)
        .filter(|(_, e)| e.is_finite() && **e > 0.0)
        .map(|(&n, &e)| (0.5 * (n as f64).ln(), e.ln()))
        .collect();
    let pts = &pts[pts.len().saturating_sub(window)..];
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Optimal QoI slope against `sqrt(ndofs)` in 2D: `-2 (p + r)`.
pub fn target_slope(p: usize, r: f64) -> f64 {
    -2.0 * (p as f64 + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(level: usize) -> ConvergenceRecord {
        ConvergenceRecord {
            level,
            n_v: 10 * (level + 1),
            n_u: 4 * (level + 1),
            ndofs: 14 * (level + 1),
            nelems: level + 3,
            estimate: 1.0 / 3.0 / (level + 1) as f64,
            qoi_uh: 0.407617863684 + 1e-7 * level as f64,
            qoi_udg: std::f64::consts::PI,
            rel_err: if level == 0 { f64::NAN } else { 1.23456789012345e-9 },
            rel_err_dg: 0.0,
            ortho: [1e-17, -0.0, 3.3e-300, 2.0],
            chain: [0.0; 2],
            c_min: 0.0,
            efficiency: 1.0,
            adjoint_efficiency: f64::NAN,
            solve_residual: 0.0,
            wall_ms: 12.5,
        }
    }

    #[test]
    fn csv_round_trip() {
        let recs: Vec<ConvergenceRecord> = (0..4).map(record).collect();
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let rows = parse_csv(&buf[..]).unwrap();
        assert_eq!(rows.len(), 4);
        for (row, rec) in rows.iter().zip(&recs) {
            let expect = CsvRow::from(rec);
            assert_eq!(row.level, expect.level);
            assert_eq!(row.ndofs, expect.ndofs);
            for (a, b) in [(row.estimate, expect.estimate), (row.qoi_uh, expect.qoi_uh), (row.wall_ms, expect.wall_ms)] {
                assert!((a - b).abs() <= 1e-14 * b.abs());
            }
            assert_eq!(row.rel_err.is_nan(), expect.rel_err.is_nan());
        }
        assert!(parse_csv(&b"level,ndofs\n"[..]).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let nd: Vec<usize> = (1..10).map(|k| 100 * 4usize.pow(k)).collect();
        let err: Vec<f64> = nd.iter().map(|&n| 3.0 * (n as f64).powf(-1.0)).collect();
        assert!((fit_slope(&nd, &err, 6).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&nd[..1], &err[..1], 6), None);
        assert_eq!(target_slope(1, 0.0), -2.0);
        assert_eq!(target_slope(1, 0.5), -3.0);
    }
}
