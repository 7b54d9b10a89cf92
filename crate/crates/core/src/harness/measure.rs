use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::stream::{count_distinct_exact, Stream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub truth: u64,
    pub estimate: f64,
    pub abs_error: f64,
}

/// Per-step comparison against the exact distinct count.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateTrace {
    pub rows: Vec<TraceRow>,
    /// `max_t |truth - estimate|`.
    pub linf: f64,
}

impl EstimateTrace {
    /// CSV with columns `t,true,estimate,abs_error`, plus `w_max` when given.
    pub fn to_csv(&self, w_max: Option<&[u64]>) -> String {
        let mut out = String::from("t,true,estimate,abs_error");
        if w_max.is_some() {
            out.push_str(",w_max");
        }
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(out, "{},{},{},{}", r.t, r.truth, fmt_sig(r.estimate), fmt_sig(r.abs_error));
            if let Some(w) = w_max {
                let _ = write!(out, ",{}", w[i]);
            }
            out.push('\n');
        }
        out
    }
}

pub fn measure_error(x: &Stream, estimates: &[f64]) -> Result<EstimateTrace> {
    if x.len() != estimates.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: estimates.len(),
        });
    }
    let rows: Vec<TraceRow> = count_distinct_exact(x)
        .into_iter()
        .zip(estimates)
        .enumerate()
        .map(|(i, (truth, &estimate))| TraceRow {
            t: i + 1,
            truth,
            estimate,
            abs_error: (truth as f64 - estimate).abs(),
        })
        .collect();
    let linf = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    Ok(EstimateTrace { rows, linf })
}

/// Decimal rendering rounded to 6 significant digits, trailing zeros removed.
pub fn fmt_sig(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".to_owned();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let rounded = if magnitude > 5 {
        let scale = 10f64.powi(magnitude - 5);
        (v / scale).round() * scale
    } else {
        v
    };
    let mut s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_owned();
    }
    if s == "-0" {
        s = "0".to_owned();
    }
    s
}

/// Linear-interpolation percentile (`p` in `[0, 1]`) of unsorted data.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::parse_stream;

    #[test]
    fn exact_estimates_have_zero_error() {
        let x = parse_stream(b"+ a\n+ b\n- a\n").unwrap();
        let tr = measure_error(&x, &[1.0, 2.0, 1.0]).unwrap();
        assert_eq!(tr.linf, 0.0);
        let tr = measure_error(&x, &[1.0, 5.0, 1.0]).unwrap();
        assert_eq!(tr.linf, 3.0);
        assert!(measure_error(&x, &[1.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let x = parse_stream(b"+ a\n_\n").unwrap();
        let tr = measure_error(&x, &[1.5, -0.25]).unwrap();
        assert_eq!(tr.to_csv(None), "t,true,estimate,abs_error\n1,1,1.5,0.5\n2,1,-0.25,1.25\n");
        assert_eq!(
            tr.to_csv(Some(&[1, 2])),
            "t,true,estimate,abs_error,w_max\n1,1,1.5,0.5,1\n2,1,-0.25,1.25,2\n"
        );
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(123.456789), "123.457");
        assert_eq!(fmt_sig(-0.00123456789), "-0.00123457");
        assert_eq!(fmt_sig(1234567.0), "1234570");
        assert_eq!(fmt_sig(-1e-9), "-0.000000001");
    }

    #[test]
    fn percentiles() {
        let v = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert!((percentile(&v, 0.95) - 4.8).abs() < 1e-12);
        assert!(percentile(&[], 0.5).is_nan());
    }
}
