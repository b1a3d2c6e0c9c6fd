//! `timeseries.csv` / `plotdata.csv`: `step,t,var,value,traj,lo,hi`.

use std::io::Write;
use std::path::Path;

use demlab_core::TrackedSeries;

use crate::error::{HarnessError, Result};

pub const HEADER: &str = "step,t,var,value,traj,lo,hi";

/// Formats `x` with 9 significant digits, like C's `%.9g`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // exponent after rounding to 9 digits
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let mantissa = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes rows ordered by `(step, var)`; `only` restricts to one variable.
pub fn write_timeseries<W: Write>(
    out: &mut W,
    series: &[TrackedSeries],
    time_scale: f64,
    only: Option<&str>,
) -> std::io::Result<()> {
    let mut selected: Vec<&TrackedSeries> = series.iter().filter(|s| only.is_none_or(|v| s.id() == v)).collect();
    selected.sort_by(|a, b| a.id().cmp(b.id()));
    let mut rows: Vec<(u64, usize, usize)> = Vec::new();
    for (si, s) in selected.iter().enumerate() {
        for pi in 0..s.points().len() {
            rows.push((s.points()[pi].step, si, pi));
        }
    }
    rows.sort_unstable();
    writeln!(out, "{HEADER}")?;
    for (step, si, pi) in rows {
        let s = selected[si];
        let p = &s.points()[pi];
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            step,
            sig9(step as f64 / time_scale),
            s.id(),
            sig9(p.value),
            sig9(p.reference),
            sig9(p.lo),
            sig9(p.hi)
        )?;
    }
    Ok(())
}

pub fn emit_timeseries(path: &Path, series: &[TrackedSeries], time_scale: f64, only: Option<&str>) -> Result<()> {
    let mut buf = Vec::new();
    write_timeseries(&mut buf, series, time_scale, only).map_err(|e| HarnessError::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use demlab_core::SeriesPoint;

    #[test]
    fn sig9_examples() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(10000.0), "10000");
        assert_eq!(sig9(std::f64::consts::E.recip()), "0.367879441");
        assert_eq!(sig9(-2.5), "-2.5");
        assert_eq!(sig9(123_456_789.0), "123456789");
        assert_eq!(sig9(1_234_567_890.0), "1.23456789e+09");
        assert_eq!(sig9(9.999_999_999), "10");
        assert_eq!(sig9(1.5e-7), "1.5e-07");
        assert_eq!(sig9(0.000_123_456_789_12), "0.000123456789");
        assert_eq!(sig9(f64::INFINITY), "inf");
    }

    fn series(id: &str, steps: u64) -> TrackedSeries {
        let mut s = TrackedSeries::new(id, 1);
        for step in 0..=steps {
            s.observe(SeriesPoint {
                step,
                value: step as f64,
                reference: 1.0,
                lo: 0.5,
                hi: 1.5,
                drift: None,
            });
        }
        s
    }

    #[test]
    fn empty_trace_is_header_only() {
        let mut buf = Vec::new();
        write_timeseries(&mut buf, &[], 10.0, None).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,t,var,value,traj,lo,hi\n");
    }

    #[test]
    fn rows_per_step_and_order() {
        let mut buf = Vec::new();
        write_timeseries(&mut buf, &[series("X_1", 10)], 10.0, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(!text.contains('\r'));

        let mut buf = Vec::new();
        write_timeseries(&mut buf, &[series("X_1", 2), series("X_0", 2)], 4.0, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let vars: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
        assert_eq!(vars, ["X_0", "X_1", "X_0", "X_1", "X_0", "X_1"]);
        assert!(text.lines().nth(3).unwrap().starts_with("1,0.25,X_0,1,1,0.5,1.5"));

        let mut buf = Vec::new();
        write_timeseries(&mut buf, &[series("X_1", 2), series("X_0", 2)], 4.0, Some("X_1")).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
