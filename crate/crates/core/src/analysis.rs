//! Envelope minima and logarithmic growth fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `L·S(t) = a + c ln t` to a set of minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub intercept: f64,
    pub slope: f64,
    pub residual_rms: f64,
    /// Pearson correlation of the fitted values against `ln t`.
    pub correlation: f64,
    pub points: usize,
    /// Multiplier applied to the raw values before fitting (the chain length).
    pub scale: f64,
    /// The `(t, value)` minima that entered the fit, unscaled.
    pub retained: Vec<(f64, f64)>,
}

impl LogFit {
    /// Standard error of the slope under the usual OLS assumptions.
    pub fn slope_stderr(&self) -> f64 {
        if self.points <= 2 {
            return f64::INFINITY;
        }
        let n = self.points as f64;
        let logs: Vec<f64> = self.retained.iter().map(|p| p.0.ln()).collect();
        let mean = logs.iter().sum::<f64>() / n;
        let sxx: f64 = logs.iter().map(|x| (x - mean).powi(2)).sum();
        let s2 = self.residual_rms.powi(2) * n / (n - 2.0);
        (s2 / sxx).sqrt()
    }
}

/// Interior strict local minima of a series, optionally after a centred
/// moving median of odd width `window` (1 disables smoothing).
///
/// Returned values are the smoothed ones at the minimum positions.
pub fn local_minima(series: &[(f64, f64)], window: usize) -> Result<Vec<(f64, f64)>> {
    if series.len() < 5 {
        return Err(Error::InsufficientPoints {
            needed: 5,
            got: series.len(),
        });
    }
    if series.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "median window must be odd and positive, got {window}"
        )));
    }
    let values: Vec<f64> = series.iter().map(|p| p.1).collect();
    let smooth = moving_median(&values, window);
    // A run of equal values (median smoothing produces these) counts as one
    // minimum, reported at the middle of the run.
    let mut out = Vec::new();
    let mut i = 1;
    while i < series.len() - 1 {
        let mut end = i;
        while end + 1 < series.len() && smooth[end + 1] == smooth[i] {
            end += 1;
        }
        if end < series.len() - 1 && smooth[i] < smooth[i - 1] && smooth[end] < smooth[end + 1] {
            let mid = (i + end) / 2;
            out.push((series[mid].0, smooth[mid]));
        }
        i = end + 1;
    }
    Ok(out)
}

fn moving_median(values: &[f64], window: usize) -> Vec<f64> {
    if window == 1 {
        return values.to_vec();
    }
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            let mut w = values[lo..hi].to_vec();
            w.sort_by(f64::total_cmp);
            let m = w.len();
            if m % 2 == 1 {
                w[m / 2]
            } else {
                0.5 * (w[m / 2 - 1] + w[m / 2])
            }
        })
        .collect()
}

/// Ordinary least squares of `scale · value` against `ln t` over the points
/// with `t > t_min`.
pub fn fit_log_growth(minima: &[(f64, f64)], t_min: f64, scale: f64) -> Result<LogFit> {
    let retained: Vec<(f64, f64)> = minima
        .iter()
        .copied()
        .filter(|&(t, v)| t > t_min && t > 0.0 && v.is_finite())
        .collect();
    if retained.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: retained.len(),
        });
    }
    let xs: Vec<f64> = retained.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = retained.iter().map(|p| scale * p.1).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all retained minima share one time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let correlation = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
    Ok(LogFit {
        intercept,
        slope,
        residual_rms,
        correlation,
        points: retained.len(),
        scale,
        retained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn monotone_has_no_minima() {
        let s: Vec<(f64, f64)> = (0..50).map(|k| (k as f64, (k as f64).sqrt())).collect();
        assert!(local_minima(&s, 1).unwrap().is_empty());
    }

    #[test]
    fn cosine_minima() {
        let s: Vec<(f64, f64)> = (0..=400)
            .map(|k| {
                let t = 4.0 * PI * k as f64 / 400.0;
                (t, t.cos())
            })
            .collect();
        let m = local_minima(&s, 1).unwrap();
        assert_eq!(m.len(), 2);
        assert_abs_diff_eq!(m[0].0, PI, epsilon = 0.04);
        assert_abs_diff_eq!(m[1].0, 3.0 * PI, epsilon = 0.04);
        let smoothed = local_minima(&s, 5).unwrap();
        assert_eq!(smoothed.len(), 2);
    }

    #[test]
    fn minima_input_validation() {
        let short: Vec<(f64, f64)> = (0..4).map(|k| (k as f64, 0.0)).collect();
        assert!(local_minima(&short, 1).is_err());
        let unsorted = vec![(0.0, 1.0), (2.0, 0.0), (1.0, 1.0), (3.0, 0.0), (4.0, 1.0)];
        assert!(local_minima(&unsorted, 1).is_err());
        let ok: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.0)).collect();
        assert!(local_minima(&ok, 2).is_err());
    }

    #[test]
    fn exact_log_law_recovered() {
        let (a, c) = (0.3, 1.7);
        let pts: Vec<(f64, f64)> = (1..20).map(|k| {
            let t = 1.5f64.powi(k);
            (t, (a + c * t.ln()) / 10.0)
        }).collect();
        let fit = fit_log_growth(&pts, 1.0, 10.0).unwrap();
        assert_abs_diff_eq!(fit.intercept, a, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.slope, c, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.residual_rms, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.correlation, 1.0, epsilon = 1e-12);
        assert_eq!(fit.points, 19);
    }

    #[test]
    fn constant_minima_have_zero_slope() {
        let pts: Vec<(f64, f64)> = (1..10).map(|k| (k as f64 * 3.0, 0.42)).collect();
        let fit = fit_log_growth(&pts, 1.0, 8.0).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.intercept, 8.0 * 0.42, epsilon = 1e-10);
    }

    #[test]
    fn too_few_points_is_not_a_fit() {
        let pts = vec![(0.5, 0.1), (2.0, 0.2), (3.0, 0.3)];
        assert!(matches!(
            fit_log_growth(&pts, 1.0, 1.0),
            Err(Error::InsufficientPoints { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn noisy_slope_within_confidence_bounds() {
        // repeated trials: the 3σ interval should cover the true slope essentially always
        let (a, c, sigma) = (1.0, 0.8, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut misses = 0;
        for _ in 0..200 {
            let pts: Vec<(f64, f64)> = (0..40)
                .map(|k| {
                    let t = 10f64.powf(k as f64 / 10.0);
                    let noise: f64 = (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0;
                    (t, a + c * t.ln() + sigma * noise)
                })
                .collect();
            let fit = fit_log_growth(&pts, 0.0, 1.0).unwrap();
            // brute-force bound from the design: σ / sqrt(Σ(x - x̄)²)
            let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let bound = sigma / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>().sqrt();
            if (fit.slope - c).abs() > 3.0 * bound {
                misses += 1;
            }
            assert!((fit.slope_stderr() / bound - 1.0).abs() < 0.5);
        }
        assert!(misses <= 2, "{misses} of 200 outside 3σ");
    }
}
