//! CSV and binary writers. Every CSV starts with `# config_hash=` and
//! `# seed=` comment lines.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::integrator::TrajectoryRecord;
use crate::measure::{EmpiricalMeasure, StabilizationRow, TightnessReport};

pub fn header(config_hash: &str, seed: u64) -> String {
    format!("# config_hash={config_hash}\n# seed={seed}\n")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.12e}"))
}

pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut s = header(&record.meta.config_hash, record.meta.seed);
    s.push_str("t,norm_h_u,norm_v_u,norm_fracdelta_u,norm_h_v,norm_h_z,gamma,p_t,dineq_residual\n");
    for r in &record.ledger {
        let _ = writeln!(
            s,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            r.t,
            r.u_h,
            r.u_v,
            r.u_frac,
            r.v_sq.sqrt(),
            r.z_h,
            r.gamma,
            r.p,
            opt(r.dineq_residual)
        );
    }
    s
}

pub fn measure_csv(mu: &EmpiricalMeasure, config_hash: &str, seed: u64) -> String {
    let mut s = header(config_hash, seed);
    let _ = writeln!(s, "t,{}", mu.schema.names().join(","));
    for (t, x) in mu.times.iter().zip(&mu.samples) {
        let cols: Vec<String> = x.iter().map(|v| format!("{v:.12e}")).collect();
        let _ = writeln!(s, "{t:.12e},{}", cols.join(","));
    }
    s
}

pub fn tightness_csv(report: &TightnessReport, config_hash: &str, seed: u64) -> String {
    header(config_hash, seed) + &report.to_csv()
}

pub fn stabilization_csv(rows: &[StabilizationRow], config_hash: &str, seed: u64) -> String {
    let mut s = header(config_hash, seed);
    s.push_str("T,distance_to_2T,invariance_residual\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:.12e},{},{:.12e}",
            r.horizon,
            opt(r.distance_to_2t),
            r.invariance_residual
        );
    }
    s
}

/// Little-endian dump: `N`, `m`, `count` as `u64`, then `count` rows of `N`
/// `f64` coefficients of `u`.
pub fn write_coefficients<W: Write>(record: &TrajectoryRecord, m: usize, mut w: W) -> Result<()> {
    let n = record.u.first().map_or(0, |u| u.len());
    for x in [n as u64, m as u64, record.len() as u64] {
        w.write_all(&x.to_le_bytes())?;
    }
    for u in &record.u {
        for c in u.coeffs() {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Parses a CSV produced by this module into its column names and rows.
/// Comment lines are skipped; empty cells read as NaN.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let Some(head) = lines.next() else {
        return Err(crate::error::Error::Coverage("empty CSV".into()));
    };
    let names: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: Vec<f64> = l
            .split(',')
            .map(|c| {
                let c = c.trim();
                if c.is_empty() {
                    Ok(f64::NAN)
                } else {
                    c.parse::<f64>()
                }
            })
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| crate::error::Error::Diagnostic(format!("CSV row {} is not numeric", i + 2)))?;
        if row.len() != names.len() {
            return Err(crate::error::Error::Diagnostic(format!(
                "CSV row {} has {} cells, header has {}",
                i + 2,
                row.len(),
                names.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(crate::error::Error::Coverage("CSV has no data rows".into()));
    }
    Ok((names, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_skips_comments() {
        let text = "# config_hash=ab\n# seed=1\nR,tail_mass\n1.0,0.5\n2.0,\n";
        let (names, rows) = read_csv(text).unwrap();
        assert_eq!(names, vec!["R", "tail_mass"]);
        assert_eq!(rows[0], vec![1.0, 0.5]);
        assert!(rows[1][1].is_nan());
        assert!(read_csv("# only comments\n").is_err());
        assert!(read_csv("a,b\n").is_err());
        assert!(read_csv("a,b\n1\n").is_err());
    }
}
