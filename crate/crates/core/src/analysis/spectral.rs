//! Raw periodograms of simulation time series and log-log power-law fits.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::fit::{loglog, LinearFit};
use crate::error::{Error, Result};

/// One-sided power spectrum. Frequencies are in cycles per step, `k / N` for
/// `k = 0..=N/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    /// Length of the series the spectrum came from.
    pub series_len: usize,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Frequency of the strongest bin (lowest frequency wins ties).
    pub fn peak_frequency(&self) -> f64 {
        let mut best = 0;
        for (k, &p) in self.power.iter().enumerate() {
            if p > self.power[best] {
                best = k;
            }
        }
        self.frequencies[best]
    }

    /// Sum of `|X_k|²` over all `N` bins, recovered from the one-sided half.
    pub fn two_sided_total(&self) -> f64 {
        let n = self.series_len;
        self.power
            .iter()
            .enumerate()
            .map(|(k, &p)| if k == 0 || 2 * k == n { p } else { 2.0 * p })
            .sum()
    }

    /// Bin-wise mean over spectra of equal-length series.
    pub fn mean(spectra: &[Spectrum]) -> Result<Spectrum> {
        let first = spectra
            .first()
            .ok_or_else(|| Error::InsufficientData("no spectra to average".into()))?;
        let mut power = vec![0.0; first.len()];
        for s in spectra {
            if s.series_len != first.series_len {
                return Err(Error::invalid("spectra come from series of different lengths"));
            }
            for (acc, p) in power.iter_mut().zip(&s.power) {
                *acc += p;
            }
        }
        let n = spectra.len() as f64;
        power.iter_mut().for_each(|p| *p /= n);
        Ok(Spectrum {
            frequencies: first.frequencies.clone(),
            power,
            series_len: first.series_len,
        })
    }
}

/// Mean-removed, untapered periodogram: `power_k = |X_k|²`.
pub fn periodogram(series: &[f64]) -> Result<Spectrum> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "periodogram needs at least 2 samples, got {n}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    Ok(Spectrum {
        frequencies: (0..=half).map(|k| k as f64 / n as f64).collect(),
        power: buf[..=half].iter().map(|c| c.norm_sqr()).collect(),
        series_len: n,
    })
}

/// Least squares of `ln power` on `ln f` over bins with `f_min ≤ f < 0.5` and
/// positive power.
pub fn spectrum_loglog_slope(spec: &Spectrum, f_min: f64) -> Result<LinearFit> {
    const MIN_BINS: usize = 8;
    let points: Vec<(f64, f64)> = spec
        .frequencies
        .iter()
        .zip(&spec.power)
        .filter(|&(&f, &p)| f >= f_min && f > 0.0 && f < 0.5 && p > 0.0)
        .map(|(&f, &p)| (f, p))
        .collect();
    if points.len() < MIN_BINS {
        return Err(Error::InsufficientData(format!(
            "{} positive bins above f = {f_min}, need {MIN_BINS}",
            points.len()
        )));
    }
    loglog(points)
}
