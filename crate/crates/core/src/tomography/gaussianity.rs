//! Normality checks per channel: standardized moments, Q-Q pairs and a binned
//! χ² goodness-of-fit against the normal with estimated mean and variance.
//!
//! The χ² test uses `min(⌈2 N^0.4⌉, 200)` equiprobable bins and `bins - 3`
//! degrees of freedom (two parameters estimated).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::dataset::QuadratureDataset;
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 100;
const MAX_BINS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Zero variance: moments beyond the mean and the χ² test are skipped.
    pub degenerate: bool,
    /// `(normal quantile, standardized sample quantile)`.
    pub qq_points: Vec<(f64, f64)>,
    pub chi2: Option<ChiSquare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelResult {
    pub setting: String,
    pub mode: usize,
    #[serde(flatten)]
    pub report: ChannelReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub grid_size: usize,
    pub channels: Vec<ChannelResult>,
}

impl GaussianityReport {
    /// Fraction of non-degenerate channels with χ² p-value above `alpha`.
    pub fn pass_fraction(&self, alpha: f64, max_abs_kurtosis: f64) -> f64 {
        let tested: Vec<&ChannelReport> = self.channels.iter().map(|c| &c.report).filter(|r| !r.degenerate).collect();
        let pass = tested
            .iter()
            .filter(|r| {
                r.chi2.as_ref().is_some_and(|c| c.p_value > alpha) && r.excess_kurtosis.abs() < max_abs_kurtosis
            })
            .count();
        pass as f64 / tested.len().max(1) as f64
    }

    /// `setting,mode,theoretical,sample` rows.
    pub fn write_qq_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let err = |e: csv::Error| Error::format("csv", e.to_string());
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(["setting", "mode", "theoretical", "sample"]).map_err(err)?;
        for c in &self.channels {
            for (t, s) in &c.report.qq_points {
                w.write_record([c.setting.clone(), (c.mode + 1).to_string(), t.to_string(), s.to_string()])
                    .map_err(err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Linear interpolation between order statistics at `h = (N-1) p`.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn channel_test(x: &[f64], grid_size: usize) -> Result<ChannelReport> {
    if x.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!("normality tests need at least {MIN_SAMPLES} samples, got {}", x.len())));
    }
    if grid_size == 0 {
        return Err(Error::invalid("quantile grid must have at least one point"));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let degenerate = !(m2 > 1e-300);
    let std = m2.sqrt();

    let normal = Normal::standard();
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let qq_points = (0..grid_size)
        .map(|k| {
            let p = (k as f64 + 0.5) / grid_size as f64;
            let q = quantile(&sorted, p);
            (normal.inverse_cdf(p), if degenerate { q } else { (q - mean) / std })
        })
        .collect();

    let chi2 = (!degenerate).then(|| {
        let bins = ((2.0 * n.powf(0.4)).ceil() as usize).min(MAX_BINS);
        let mut counts = vec![0usize; bins];
        for v in x {
            let u = normal.cdf((v - mean) / std);
            counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let expected = n / bins as f64;
        let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum::<f64>();
        let dof = bins - 3;
        let p_value = ChiSquared::new(dof as f64).expect("dof > 0").sf(statistic);
        ChiSquare { statistic, dof, p_value, bins }
    });

    Ok(ChannelReport {
        count: x.len(),
        mean,
        variance: m2,
        skewness: if degenerate { 0.0 } else { m3 / m2.powf(1.5) },
        excess_kurtosis: if degenerate { 0.0 } else { m4 / (m2 * m2) - 3.0 },
        degenerate,
        qq_points,
        chi2,
    })
}

/// Every (setting, mode) channel of the dataset.
pub fn gaussianity_tests(data: &QuadratureDataset, grid_size: usize) -> Result<GaussianityReport> {
    let mut channels = Vec::new();
    for (k, s) in data.settings().iter().enumerate() {
        for mode in 0..data.n_modes() {
            channels.push(ChannelResult {
                setting: s.label.clone(),
                mode,
                report: channel_test(&data.channel(k, mode), grid_size)?,
            });
        }
    }
    Ok(GaussianityReport { grid_size, channels })
}
