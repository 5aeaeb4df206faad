//! Small descriptive-statistics helpers shared across modules.

use alloc::vec::Vec;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divisor `n`).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divisor `n`).
pub fn std_dev(xs: &[f64]) -> f64 {
    libm::sqrt(variance(xs))
}

/// Sample standard deviation (divisor `n - 1`).
pub fn sample_std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    libm::sqrt(variance(xs) * n / (n - 1.0))
}

/// Moment coefficient of skewness `m3 / m2^{3/2}`.
pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m) * (x - m) * (x - m)).sum::<f64>() / n;
    m3 / libm::pow(m2, 1.5)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut s: Vec<f64> = xs.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, q)
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn weighted_mean(xs: &[f64], ws: &[f64]) -> f64 {
    let total: f64 = ws.iter().sum();
    xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / total
}

/// Weighted standard deviation with normalized weights (no bias correction).
pub fn weighted_std(xs: &[f64], ws: &[f64]) -> f64 {
    let m = weighted_mean(xs, ws);
    let total: f64 = ws.iter().sum();
    libm::sqrt(
        xs.iter()
            .zip(ws)
            .map(|(x, w)| w * (x - m) * (x - m))
            .sum::<f64>()
            / total,
    )
}

/// Inverse of the weighted empirical CDF: the smallest value whose cumulative
/// normalized weight reaches `q`.
pub fn weighted_quantile(xs: &[f64], ws: &[f64], q: f64) -> f64 {
    let mut idx: Vec<usize> = (0..xs.len()).filter(|&i| ws[i] > 0.0).collect();
    if idx.is_empty() {
        return f64::NAN;
    }
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let total: f64 = idx.iter().map(|&i| ws[i]).sum();
    let mut acc = 0.0;
    for &i in &idx {
        acc += ws[i] / total;
        if acc >= q - 1e-12 {
            return xs[i];
        }
    }
    xs[*idx.last().unwrap()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_conventions() {
        let xs = [2.0, 1.0, 1.0];
        assert!((mean(&xs) - 4.0 / 3.0).abs() < 1e-15);
        assert!((std_dev(&xs) - libm::sqrt(2.0 / 9.0)).abs() < 1e-15);
        assert!((sample_std_dev(&xs) - libm::sqrt(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn quantiles() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&xs), 2.5);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(
            weighted_quantile(&[1.0, 2.0, 3.0], &[0.2, 0.3, 0.5], 0.5),
            2.0
        );
        assert_eq!(
            weighted_quantile(&[1.0, 2.0, 3.0], &[0.2, 0.3, 0.5], 0.05),
            1.0
        );
    }

    #[test]
    fn skewness_sign() {
        assert!(skewness(&[1.0, 1.0, 1.0, 10.0]) > 0.0);
        assert!(skewness(&[-1.0, 0.0, 1.0]).abs() < 1e-12);
    }
}
