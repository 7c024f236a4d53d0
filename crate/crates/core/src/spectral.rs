//! Power spectra of entropy time series and the two-spin reference model.
//!
//! Frequencies are angular. The transform is the unitary DFT of the
//! mean-subtracted series, `F_k = N^{-1/2} Σ_n (x_n − x̄) e^{−2πikn/N}`, with a
//! rectangular window; only bins `0..=N/2` are kept.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::binomial;
use crate::observables::xlnx;

pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    /// `ω_k = 2πk/(N dt)` for `k = 0..=N/2`.
    pub omega: Vec<f64>,
    /// `|F_k|`.
    pub magnitude: Vec<f64>,
    pub samples: usize,
    pub dt: f64,
}

impl PowerSpectrum {
    pub fn bin_width(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.samples as f64 * self.dt)
    }

    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.dt
    }

    /// Amplitude of a spectral line: `|F_k| / √N`, so `cos(ω t)` sampled on
    /// whole periods gives 1/2 at `ω`.
    pub fn line_amplitude(&self, k: usize) -> f64 {
        self.magnitude[k] / (self.samples as f64).sqrt()
    }

    /// `Σ_k |F_k|²` over the full two-sided spectrum.
    pub fn total_power(&self) -> f64 {
        let n = self.samples;
        self.magnitude
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let mirrored = k != 0 && !(n % 2 == 0 && k == n / 2);
                let w = if mirrored { 2.0 } else { 1.0 };
                w * m * m
            })
            .sum()
    }

    pub fn bin_of(&self, omega: f64) -> usize {
        ((omega / self.bin_width()).round() as usize).min(self.omega.len() - 1)
    }
}

/// Magnitude spectrum of a uniformly sampled series.
pub fn power_spectrum(samples: &[f64], dt: f64) -> Result<PowerSpectrum> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientPoints {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidGrid(format!("sample spacing {dt} must be positive")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x - mean, 0.0)).collect();
    let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    let bins = n / 2 + 1;
    let step = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    Ok(PowerSpectrum {
        omega: (0..bins).map(|k| k as f64 * step).collect(),
        magnitude: buf[..bins].iter().map(|z| z.norm() * scale).collect(),
        samples: n,
        dt,
    })
}

/// Like [`power_spectrum`] but takes `(t, value)` pairs and checks that the
/// times are uniformly spaced.
pub fn power_spectrum_of_series(times: &[f64], values: &[f64]) -> Result<PowerSpectrum> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: values.len(),
        });
    }
    if times.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: MIN_SAMPLES,
            got: times.len(),
        });
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt.abs().max(f64::MIN_POSITIVE));
    if !uniform {
        return Err(Error::InvalidGrid("series is not uniformly sampled".into()));
    }
    power_spectrum(values, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Position refined by a parabola through the three bins around the maximum.
    pub omega: f64,
    pub height: f64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakList {
    /// Ascending in frequency.
    pub peaks: Vec<Peak>,
    pub rel_threshold: f64,
    pub threshold: f64,
    pub bin_width: f64,
}

impl PeakList {
    /// Peaks ordered by decreasing height.
    pub fn tallest(&self) -> Vec<Peak> {
        let mut v = self.peaks.clone();
        v.sort_by(|a, b| b.height.total_cmp(&a.height));
        v
    }
}

/// Strict local maxima above `rel_threshold ×` the largest non-DC magnitude.
///
/// The DC bin is neither a candidate nor a neighbour: after mean subtraction
/// it is zero and would turn the first bin into a spurious maximum.
pub fn detect_peaks(spectrum: &PowerSpectrum, rel_threshold: f64) -> Result<PeakList> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "relative threshold {rel_threshold} must lie in (0, 1)"
        )));
    }
    let p = &spectrum.magnitude;
    if p.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: p.len(),
        });
    }
    let global = p[1..].iter().copied().fold(0.0, f64::max);
    let threshold = rel_threshold * global;
    let width = spectrum.bin_width();
    let peaks = (2..p.len() - 1)
        .filter(|&k| p[k] > p[k - 1] && p[k] > p[k + 1] && p[k] >= threshold && p[k] > 0.0)
        .map(|k| {
            let (a, b, c) = (p[k - 1], p[k], p[k + 1]);
            let denom = a - 2.0 * b + c;
            let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            Peak {
                omega: (k as f64 + shift) * width,
                height: b - 0.25 * (a - c) * shift,
                index: k,
            }
        })
        .collect();
    Ok(PeakList {
        peaks,
        rel_threshold,
        threshold,
        bin_width: width,
    })
}

/// Closed-form entanglement entropy of either spin of the two-spin dephasing
/// model started from the x-polarized Néel state:
/// `λ± = (1 ± cos θ)/2`, `θ = 2|E_C| t`, `E_C = −V`.
pub fn two_spin_entropy(v_int: f64, t: f64) -> f64 {
    let theta = 2.0 * v_int.abs() * t;
    let c = theta.cos();
    -xlnx(0.5 * (1.0 + c)) - xlnx(0.5 * (1.0 - c))
}

/// Smallest period of [`two_spin_entropy`], `π / (2|V|)`.
pub fn two_spin_period(v_int: f64) -> f64 {
    std::f64::consts::PI / (2.0 * v_int.abs())
}

/// Spectral lines of `cos^n θ`: `(n − 2k, 2^{-n} C(n, k))` for `k = 0..=n`,
/// listed from the highest offset down.
pub fn cos_power_comb(n: u32) -> Result<Vec<(i32, f64)>> {
    if !(1..=32).contains(&n) {
        return Err(Error::InvalidParameter(format!("power {n} outside 1..=32")));
    }
    let scale = 0.5f64.powi(n as i32);
    Ok((0..=n)
        .map(|k| (n as i32 - 2 * k as i32, scale * binomial(n as u64, k as u64) as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{LN_2, PI};

    fn sample(f: impl Fn(f64) -> f64, dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| f(k as f64 * dt)).collect()
    }

    #[test]
    fn constant_series_has_flat_zero_spectrum() {
        let s = power_spectrum(&vec![3.7; 64], 0.1).unwrap();
        assert!(s.magnitude.iter().all(|&m| m < 1e-12));
        assert_eq!(s.omega.len(), 33);
    }

    #[test]
    fn input_validation() {
        assert!(power_spectrum(&[1.0; 8], 0.1).is_err());
        assert!(power_spectrum(&[1.0; 32], 0.0).is_err());
        let times = [0.0, 0.1, 0.25, 0.3];
        assert!(power_spectrum_of_series(&times, &[0.0; 4]).is_err());
        let times: Vec<f64> = (0..32).map(|k| k as f64 * 0.1).collect();
        let mut skewed = times.clone();
        skewed[7] += 0.03;
        assert!(matches!(
            power_spectrum_of_series(&skewed, &[0.0; 32]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(power_spectrum_of_series(&times, &[0.0; 32]).is_ok());
    }

    #[test]
    fn pure_tone_single_peak() {
        let s = power_spectrum(&sample(|t| (2.0 * t).cos(), 0.1, 4096), 0.1).unwrap();
        let peaks = detect_peaks(&s, 0.1).unwrap();
        assert_eq!(peaks.peaks.len(), 1);
        assert!((peaks.peaks[0].omega - 2.0).abs() <= s.bin_width());
        assert!(s.omega.last().unwrap() <= &(s.nyquist() + 1e-12));
    }

    #[test]
    fn log_cosine_harmonics() {
        // (1 + cos 2t) ln(1 + cos 2t): lines at 2, 4, 6, ... with falling heights
        let f = |t: f64| {
            let x = 1.0 + (2.0 * t).cos();
            xlnx(x)
        };
        let dt = PI / 64.0;
        let s = power_spectrum(&sample(f, dt, 64 * 128), dt).unwrap();
        let peaks = detect_peaks(&s, 0.01).unwrap();
        let top: Vec<f64> = peaks.peaks.iter().take(4).map(|p| p.omega).collect();
        for (got, want) in top.iter().zip([2.0, 4.0, 6.0, 8.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = s.bin_width());
        }
        assert!(peaks.peaks.windows(2).take(3).all(|w| w[0].height > w[1].height));
    }

    #[test]
    fn parabolic_refinement_is_sub_bin() {
        let omega = 2.0 + 0.3 * 2.0 * PI / (4096.0 * 0.1);
        let s = power_spectrum(&sample(|t| (omega * t).sin(), 0.1, 4096), 0.1).unwrap();
        let p = detect_peaks(&s, 0.5).unwrap().peaks[0];
        assert!((p.omega - omega).abs() < 0.5 * s.bin_width());
    }

    #[test]
    fn threshold_validation() {
        let s = power_spectrum(&sample(|t| t.cos(), 0.1, 128), 0.1).unwrap();
        assert!(detect_peaks(&s, 0.0).is_err());
        assert!(detect_peaks(&s, 1.0).is_err());
    }

    #[test]
    fn parseval() {
        let xs = sample(|t| (1.3 * t).sin() + 0.3 * (4.1 * t).cos() + 0.01 * t * t, 0.07, 1000);
        let s = power_spectrum(&xs, 0.07).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        let expect = xs.len() as f64 * var;
        assert!((s.total_power() - expect).abs() <= 1e-8 * expect);
        // odd length
        let s = power_spectrum(&xs[..999], 0.07).unwrap();
        let mean = xs[..999].iter().sum::<f64>() / 999.0;
        let var = xs[..999].iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((s.total_power() - 999.0 * var).abs() <= 1e-8 * 999.0 * var);
    }

    #[test]
    fn two_spin_entropy_values() {
        assert_eq!(two_spin_entropy(0.25, 0.0), 0.0);
        let v = 0.37;
        assert_abs_diff_eq!(two_spin_entropy(v, PI / (4.0 * v)), LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(two_spin_period(0.25), 2.0 * PI, epsilon = 1e-15);
        for k in 0..100 {
            let t = 0.173 * k as f64;
            let a = two_spin_entropy(0.25, t);
            assert_abs_diff_eq!(a, two_spin_entropy(0.25, t + 2.0 * PI), epsilon = 1e-12);
            assert!((0.0..=LN_2 + 1e-15).contains(&a));
        }
        // no shorter period: half a period lands on the opposite extreme
        assert_abs_diff_eq!(two_spin_entropy(0.25, PI), LN_2, epsilon = 1e-12);
    }

    #[test]
    fn two_spin_fundamental() {
        // entropy is even in cos θ, so the fundamental is 2π/T = 4|E_C| = 1 for V = 1/4
        let dt = 2.0 * PI / 64.0;
        let xs = sample(|t| two_spin_entropy(0.25, t), dt, 64 * 64);
        let s = power_spectrum(&xs, dt).unwrap();
        let peaks = detect_peaks(&s, 0.05).unwrap();
        let first = peaks.peaks[0];
        assert!((first.omega - 1.0).abs() <= s.bin_width(), "{first:?}");
        assert!((peaks.tallest()[0].omega - 1.0).abs() <= s.bin_width());
        assert!((peaks.peaks[1].omega - 2.0).abs() <= s.bin_width());
        // nothing at θ's own rate 2|E_C| = 1/2
        let half = s.bin_of(0.5);
        assert!(s.magnitude[half] < 1e-3 * first.height);
    }

    #[test]
    fn comb_weights() {
        let c1 = cos_power_comb(1).unwrap();
        assert_eq!(c1, vec![(1, 0.5), (-1, 0.5)]);
        assert_eq!(cos_power_comb(2).unwrap(), vec![(2, 0.25), (0, 0.5), (-2, 0.25)]);
        let c4: Vec<f64> = cos_power_comb(4).unwrap().iter().map(|x| x.1 * 16.0).collect();
        assert_eq!(c4, vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        assert!(cos_power_comb(0).is_err());
        assert!(cos_power_comb(33).is_err());
        for n in 1..=32 {
            let total: f64 = cos_power_comb(n).unwrap().iter().map(|x| x.1).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn comb_matches_dft() {
        // whole periods: N dt = 64·2π so ω = j lands on bin 64 j
        let n = 4096;
        let dt = 2.0 * PI * 64.0 / n as f64;
        for power in 1..=6u32 {
            let xs = sample(|t| t.cos().powi(power as i32), dt, n);
            let s = power_spectrum(&xs, dt).unwrap();
            for (offset, weight) in cos_power_comb(power).unwrap() {
                if offset <= 0 {
                    continue;
                }
                let k = 64 * offset as usize;
                let got = s.line_amplitude(k);
                assert!((got - weight).abs() <= 0.01 * weight, "n={power} offset={offset}: {got} vs {weight}");
            }
        }
    }
}
