//! Scalar statistics: sampling, correlation, error metrics, the exact 1-D
//! Wasserstein distance, and histograms.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Arithmetic mean. Panics on empty input (callers validate lengths).
pub fn mean(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divisor `n`).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Sample excess kurtosis (fourth standardized moment minus 3).
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// `n` i.i.d. Student-t draws with `nu` degrees of freedom.
pub fn sample_student_t(rng: &mut RngStream, nu: f64, n: usize) -> Result<Vec<f64>> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!(
            "student-t degrees of freedom must be positive, got {nu}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("requested zero student-t samples".into()));
    }
    Ok((0..n).map(|_| rng.next_student_t(nu)).collect())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "pearson: lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Domain("pearson needs at least 2 points".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        saa += dx * dx;
        sbb += dy * dy;
        sab += dx * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate(
            "pearson is undefined for a constant vector".into(),
        ));
    }
    Ok(sab / (saa.sqrt() * sbb.sqrt()))
}

/// Root mean squared error between two equal-length vectors.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "rmse: lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Domain("rmse of empty vectors".into()));
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((ss / a.len() as f64).sqrt())
}

/// Exact empirical 1-D Wasserstein-1 distance: the mean absolute difference
/// of the sorted samples. Serves as the oracle for the critic's estimate.
pub fn wasserstein1_exact(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "wasserstein1: lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Domain("wasserstein1 of empty vectors".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.total_cmp(y));
    sb.sort_by(|x, y| x.total_cmp(y));
    let total: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

/// Equal-width histogram over `[min(x), max(x)]` with the right-most bin
/// closed. A zero-width range puts all mass in the first bin.
pub fn histogram(x: &[f64], bins: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if x.is_empty() {
        return Err(Error::Domain("histogram of empty input".into()));
    }
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &v in x {
        let idx = if width == 0.0 {
            0
        } else {
            (((v - lo) / width) as usize).min(bins - 1)
        };
        counts[idx] += 1;
    }
    Ok((edges, counts))
}
