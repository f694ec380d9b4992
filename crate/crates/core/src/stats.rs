//! Summary statistics, Pearson correlation and least-squares fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Mean and sample (n − 1) standard deviation, summed in input order.
pub fn mean_std(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok((mean, std))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub pearson_r: f64,
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

/// Pearson r and the ordinary least-squares line `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::UndefinedCorrelation(format!("{n} points, need at least 3")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // relative floor so that constant data with round-off still counts as zero variance
    let floor = |s: f64, m: f64| s <= 1e-28 * nf * m.abs().max(1.0).powi(2);
    if floor(sxx, mx) || floor(syy, my) {
        return Err(Error::UndefinedCorrelation("zero variance in one coordinate".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let slope = sxy / sxx;
    Ok(LinearFit {
        pearson_r: r,
        slope,
        intercept: my - slope * mx,
        n,
    })
}

/// Percentile bootstrap interval for Pearson r over `(x, y)` pairs.
pub fn bootstrap_pearson_ci(xs: &[f64], ys: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    linear_fit(xs, ys)?;
    let n = xs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rs = Vec::with_capacity(resamples);
    let (mut bx, mut by) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..resamples {
        for k in 0..n {
            let i = rng.gen_range(0..n);
            bx[k] = xs[i];
            by[k] = ys[i];
        }
        if let Ok(f) = linear_fit(&bx, &by) {
            rs.push(f.pearson_r);
        }
    }
    if rs.is_empty() {
        return Err(Error::UndefinedCorrelation("every bootstrap resample was degenerate".into()));
    }
    rs.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let pick = |q: f64| rs[((q * (rs.len() - 1) as f64).round() as usize).min(rs.len() - 1)];
    Ok((pick(alpha), pick(1.0 - alpha)))
}
