//! Pearson correlation and the sample autocorrelation function.

use super::RegressError;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample Pearson correlation of two equal-length series.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64, RegressError> {
    if a.len() != b.len() {
        return Err(RegressError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(RegressError::InsufficientData {
            n: a.len(),
            needed: 2,
        });
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(RegressError::ZeroVariance);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation over the positions where both values are present.
pub fn pearson_pairwise(a: &[Option<f64>], b: &[Option<f64>]) -> Result<f64, RegressError> {
    if a.len() != b.len() {
        return Err(RegressError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip();
    pearson_correlation(&xs, &ys)
}

/// Biased sample autocorrelations `r_0..=r_max_lag`, each lag normalised by
/// the full-series sum of squares.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>, RegressError> {
    if x.len() <= max_lag {
        return Err(RegressError::SeriesTooShort {
            len: x.len(),
            needed: max_lag + 1,
        });
    }
    let m = mean(x);
    let dev: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 {
        return Err(RegressError::ZeroVariance);
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                return 1.0;
            }
            dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom
        })
        .collect())
}
