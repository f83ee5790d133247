//! CSV and manifest emission for experiment and bounds runs.
//!
//! CSVs use a fixed column order, LF line endings and floats printed in
//! scientific notation with 17 significant digits, so identical inputs give
//! identical bytes on every platform.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bounds::{error_bound, BoundTest, BoundsReport};
use crate::simulate::{ExperimentConfig, ExperimentResult, ExponentEstimate};

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0" and keep the same shape as other values
        return format!("{:.16e}", 0.0);
    }
    format!("{x:.16e}")
}

pub fn errors_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("test,n,error,half_width,trials\n");
    for curve in &result.curves {
        for p in &curve.points {
            writeln!(
                out,
                "{},{},{},{},{}",
                curve.test,
                p.n,
                fmt_float(p.estimate),
                fmt_float(p.half_width),
                p.trials
            )
            .unwrap();
        }
    }
    out
}

/// A lower-bound exponent (too few nonzero error points to regress) is
/// written as `>=<value>` with an empty `r2`.
pub fn exponents_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("test,exponent,r2\n");
    for curve in &result.curves {
        match curve.exponent {
            ExponentEstimate::Fitted(f) => {
                writeln!(
                    out,
                    "{},{},{}",
                    curve.test,
                    fmt_float(f.exponent),
                    fmt_float(f.r2)
                )
            }
            ExponentEstimate::LowerBound { exponent } => {
                writeln!(out, "{},>={},", curve.test, fmt_float(exponent))
            }
        }
        .unwrap();
    }
    out
}

/// Error-bound curves over the grid with `D = 0` and the configured
/// training lengths.
pub fn bound_curves(
    cfg: &ExperimentConfig,
    report: &BoundsReport,
) -> Vec<(&'static str, usize, f64)> {
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let gamma = Some(cfg.train_lengths.length(n));
        let mmd = BoundTest::Mmd {
            kernel_bound: report.kernel_bound,
        };
        if report.kernel_bound > 0.0 {
            let b = error_bound(mmd, n, 0.0, &report.separation_mmd, gamma)
                .expect("separation metric matches");
            rows.push(("mmd", n, b));
        }
        if let Some(sep) = &report.separation_ks {
            let b =
                error_bound(BoundTest::Ks, n, 0.0, sep, gamma).expect("separation metric matches");
            rows.push(("ks", n, b));
        }
    }
    rows.sort_by_key(|&(t, n, _)| (t != "mmd", n));
    rows
}

pub fn bounds_csv(rows: &[(&'static str, usize, f64)]) -> String {
    let mut out = String::from("test,n,bound\n");
    for (t, n, b) in rows {
        writeln!(out, "{t},{n},{}", fmt_float(*b)).unwrap();
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_name: String,
    pub config_hash: String,
    pub seed: u64,
    pub trials: usize,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Writes `contents` to `dir/name` via a temporary file and rename, so an
/// interrupted run never leaves a partial file under the final name.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{ErrorCurve, ErrorPoint, TestKind};

    #[test]
    fn float_format_is_fixed_width_scientific() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_float(-0.0), "0.0000000000000000e0");
        assert_eq!(fmt_float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn csv_shapes() {
        let result = ExperimentResult {
            name: "x".into(),
            curves: vec![
                ErrorCurve::from_points(
                    TestKind::Mmd,
                    vec![
                        ErrorPoint::new(5, 50, 100),
                        ErrorPoint::new(10, 25, 100),
                        ErrorPoint::new(15, 12, 100),
                    ],
                ),
                ErrorCurve::from_points(TestKind::Ks, vec![ErrorPoint::new(5, 0, 100)]),
            ],
        };
        let e = errors_csv(&result);
        assert_eq!(e.lines().count(), 1 + 4);
        assert!(e.starts_with("test,n,error,half_width,trials\nmmd,5,5.0000000000000000e-1,"));
        assert!(!e.contains('\r'));
        let x = exponents_csv(&result);
        let lines: Vec<_> = x.lines().collect();
        assert_eq!(lines[0], "test,exponent,r2");
        assert!(lines[1].starts_with("mmd,"));
        assert!(lines[2].starts_with("ks,>=") && lines[2].ends_with(','));
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_atomic(dir.path(), "a.csv", "x\n").unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "x\n");
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["a.csv"]);
    }
}
