//! CSV artifacts and the stdout summary table.
//!
//! All CSVs are UTF-8, comma-separated, with a header row; floats carry 17
//! significant digits. `metrics.csv` holds only values that are a pure
//! function of the configuration, so identical configs produce byte-identical
//! files; wall-clock runtimes go to `timings.csv` instead.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sbnn_core::calibrate::LossBreakdown;
use sbnn_core::{Error, Result};

use crate::sweep::SweepOutput;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Compact theta for file names: `1.5` stays `1.5`, `2.0` becomes `2`.
pub fn fmt_theta(theta: f64) -> String {
    let s = format!("{theta}");
    s.replace('/', "_")
}

pub fn metrics_csv(out: &SweepOutput) -> String {
    let mut s = String::from(
        "theta,seed,correlation,rmse,shapiro_w,shapiro_p,final_iteration,l_sup,l_w,l_moment,l_corr,l_total\n",
    );
    for cell in &out.cells {
        let r = &cell.report;
        let f = &r.final_loss;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_theta(r.theta),
            r.seed,
            fmt_f64(r.correlation),
            fmt_f64(r.rmse),
            fmt_f64(r.shapiro_w),
            fmt_f64(r.shapiro_p),
            f.iteration,
            fmt_f64(f.l_sup),
            fmt_f64(f.l_w),
            fmt_f64(f.l_moment),
            fmt_f64(f.l_corr),
            fmt_f64(f.l_total),
        );
    }
    s
}

fn timings_csv(out: &SweepOutput) -> String {
    let mut s = String::from("theta,seed,runtime_seconds\n");
    for cell in &out.cells {
        let r = &cell.report;
        let _ = writeln!(s, "{},{},{:.3}", fmt_theta(r.theta), r.seed, r.runtime_seconds);
    }
    s
}

fn vector_csv(name: &str, values: &[f64]) -> String {
    let mut s = format!("{name}\n");
    for v in values {
        let _ = writeln!(s, "{}", fmt_f64(*v));
    }
    s
}

fn trajectory_csv(rows: &[LossBreakdown]) -> String {
    let mut s = String::from("iteration,l_sup,l_w,l_moment,l_corr,l_total\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.iteration,
            fmt_f64(r.l_sup),
            fmt_f64(r.l_w),
            fmt_f64(r.l_moment),
            fmt_f64(r.l_corr),
            fmt_f64(r.l_total),
        );
    }
    s
}

/// Writes every artifact of a finished sweep into `dir`.
pub fn write_report(out: &SweepOutput, dir: &Path) -> Result<()> {
    if out.cells.is_empty() {
        return Err(Error::Domain("no cells to report".into()));
    }
    fs::create_dir_all(dir)?;

    fs::write(dir.join("metrics.csv"), metrics_csv(out))?;
    fs::write(dir.join("timings.csv"), timings_csv(out))?;

    for (seed, field) in &out.targets {
        fs::write(dir.join(format!("field_target_seed_{seed}.csv")), field.to_csv())?;
    }

    for cell in &out.cells {
        let theta = fmt_theta(cell.report.theta);
        let seed = cell.report.seed;
        let side = (cell.predictions.len() as f64).sqrt() as usize;
        fs::write(
            dir.join(format!("field_pred_theta_{theta}_seed_{seed}.csv")),
            grid_csv(&cell.predictions, side),
        )?;
        fs::write(
            dir.join(format!("residuals_theta_{theta}_seed_{seed}.csv")),
            vector_csv("residual", &cell.residuals),
        )?;
        fs::write(
            dir.join(format!("trajectory_theta_{theta}_seed_{seed}.csv")),
            trajectory_csv(&cell.trajectory),
        )?;
    }
    Ok(())
}

fn grid_csv(values: &[f64], side: usize) -> String {
    let mut s = String::new();
    for row in 0..side {
        let line: Vec<String> = (0..side)
            .map(|col| fmt_f64(values[row * side + col]))
            .collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Per-theta summary in the layout of the calibration-metrics table:
/// mean and standard deviation across seeds.
pub fn summary_table(out: &SweepOutput) -> String {
    let mut thetas: Vec<f64> = out.cells.iter().map(|c| c.report.theta).collect();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();

    let mut s = String::new();
    let _ = writeln!(s, "{:>6}  {:>20}  {:>20}", "theta", "correlation", "rmse");
    for &theta in &thetas {
        let corr: Vec<f64> = out
            .cells
            .iter()
            .filter(|c| c.report.theta == theta)
            .map(|c| c.report.correlation)
            .collect();
        let err: Vec<f64> = out
            .cells
            .iter()
            .filter(|c| c.report.theta == theta)
            .map(|c| c.report.rmse)
            .collect();
        let (cm, cs) = mean_std(&corr);
        let (em, es) = mean_std(&err);
        if corr.len() > 1 {
            let _ = writeln!(
                s,
                "{:>6}  {:>10.4} +/- {:>5.4}  {:>10.4} +/- {:>5.4}",
                fmt_theta(theta),
                cm,
                cs,
                em,
                es
            );
        } else {
            let _ = writeln!(s, "{:>6}  {:>20.4}  {:>20.4}", fmt_theta(theta), cm, em);
        }
    }
    s
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}
