//! Nonparametric bootstrap of the certification statistics.
//!
//! Resample `r` draws from its own stream `(seed, bootstrap, r)`, so reports
//! do not depend on the number of threads. Each resample redraws every
//! setting independently, re-estimates γ and certifies it without the
//! physicality gate, so unphysical estimates are recorded rather than
//! rejected.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::QuadratureDataset;
use super::estimate::{Estimator, SettingMoments};
use crate::certifier::{certify, CertificationReport, CertifierConfig};
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, GaussianState, ModePartition};
use crate::rng::{derive, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ResampleMode {
    /// Same size as the original, drawn with replacement.
    WithReplacement,
    /// `fraction` of each setting, drawn without replacement.
    Subsample { fraction: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
    pub mode: ResampleMode,
    pub certifier: CertifierConfig,
    pub normalize_shot_noise: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 10_000,
            seed: 0,
            mode: ResampleMode::WithReplacement,
            certifier: CertifierConfig { allow_unphysical: true, ..CertifierConfig::default() },
            normalize_shot_noise: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub resample_count: usize,
    /// Resamples whose certification was indeterminate; excluded below.
    pub indeterminate: usize,
    pub seed: u64,
    pub mode: ResampleMode,
    pub e_samples: Vec<f64>,
    pub p_samples: Vec<f64>,
    pub physicality_samples: Vec<f64>,
    pub e_mean: f64,
    pub e_std: f64,
    pub p_mean: f64,
    pub p_std: f64,
    pub phys_mean: f64,
    pub phys_std: f64,
    /// `mean / std`; `None` when the spread is zero or undefined.
    pub significance_e: Option<f64>,
    pub significance_p: Option<f64>,
    pub significance_phys: Option<f64>,
    /// Certification of the full dataset.
    pub full_e: f64,
    pub full_p: f64,
    pub full_phys: f64,
}

impl BootstrapReport {
    /// Resamples whose physicality lies more than `k` bootstrap standard
    /// deviations from the full-data value.
    pub fn physicality_outliers(&self, k: f64) -> usize {
        self.physicality_samples.iter().filter(|v| (*v - self.full_phys).abs() > k * self.phys_std).count()
    }

    pub fn unphysical_resamples(&self) -> usize {
        self.physicality_samples.iter().filter(|&&v| v < 0.0).count()
    }

    /// `p,e` rows, PPT margin on the abscissa.
    pub fn write_scatter_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("csv", e.to_string()))?;
        w.write_record(["p", "e", "physicality"]).map_err(|e| Error::format("csv", e.to_string()))?;
        for ((p, e), phys) in self.p_samples.iter().zip(&self.e_samples).zip(&self.physicality_samples) {
            w.write_record([p.to_string(), e.to_string(), phys.to_string()])
                .map_err(|e| Error::format("csv", e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn significance(mean: f64, std: f64) -> Option<f64> {
    (std > 0.0 && std.is_finite()).then(|| mean / std)
}

fn certify_gamma(
    est: &Estimator,
    moments: &[SettingMoments],
    partition: &ModePartition,
    cfg: &CertifierConfig,
) -> Result<CertificationReport> {
    let (gamma, _) = est.solve(moments)?;
    certify(&GaussianState::new(CovarianceMatrix::new(gamma)?), partition, cfg)
}

fn draw_weights<R: Rng>(rng: &mut R, count: usize, mode: ResampleMode, weights: &mut Vec<u32>) {
    weights.clear();
    weights.resize(count, 0);
    match mode {
        ResampleMode::WithReplacement => {
            let bound = u32::try_from(count).expect("setting size fits in u32");
            for _ in 0..count {
                weights[rng.random_range(0..bound) as usize] += 1;
            }
        }
        ResampleMode::Subsample { fraction } => {
            let m = ((fraction * count as f64).round() as usize).clamp(2.min(count), count);
            for i in index::sample(rng, count, m) {
                weights[i] = 1;
            }
        }
    }
}

pub fn bootstrap_certify(
    data: &QuadratureDataset,
    partition: &ModePartition,
    config: &BootstrapConfig,
) -> Result<BootstrapReport> {
    if config.resamples == 0 {
        return Err(Error::invalid("resamples must be at least 1"));
    }
    if let ResampleMode::Subsample { fraction } = config.mode {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!("subsample fraction must lie in (0, 1], got {fraction}")));
        }
    }
    if partition.n_modes() != data.n_modes() {
        return Err(Error::invalid("partition and dataset mode counts differ"));
    }
    let mut est = Estimator::new(data.settings(), data.n_modes())?;
    est.normalize_shot_noise = config.normalize_shot_noise;
    let cfg = CertifierConfig { allow_unphysical: true, ..config.certifier };
    let n = data.n_modes();
    let k_settings = data.settings().len();

    let full_moments =
        (0..k_settings).map(|k| SettingMoments::weighted(data.samples(k), n, None)).collect::<Result<Vec<_>>>()?;
    let full = certify_gamma(&est, &full_moments, partition, &cfg)?;

    let outcomes: Vec<Result<Option<(f64, f64, f64)>>> = (0..config.resamples)
        .into_par_iter()
        .map_init(Vec::new, |weights, r| {
            let mut rng = derive(config.seed, Stream::Bootstrap, r as u64);
            let mut moments = Vec::with_capacity(k_settings);
            for k in 0..k_settings {
                let samples = data.samples(k);
                draw_weights(&mut rng, samples.len() / n, config.mode, weights);
                moments.push(SettingMoments::weighted(samples, n, Some(weights))?);
            }
            match certify_gamma(&est, &moments, partition, &cfg) {
                Ok(rep) => Ok(Some((rep.entanglement, rep.ppt_margin, rep.physicality))),
                Err(Error::Indeterminate { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut e_samples = Vec::with_capacity(config.resamples);
    let mut p_samples = Vec::with_capacity(config.resamples);
    let mut physicality_samples = Vec::with_capacity(config.resamples);
    let mut indeterminate = 0;
    for o in outcomes {
        match o? {
            Some((e, p, phys)) => {
                e_samples.push(e);
                p_samples.push(p);
                physicality_samples.push(phys);
            }
            None => indeterminate += 1,
        }
    }
    if e_samples.is_empty() {
        return Err(Error::invalid("every resample was indeterminate"));
    }
    let (e_mean, e_std) = mean_std(&e_samples);
    let (p_mean, p_std) = mean_std(&p_samples);
    let (phys_mean, phys_std) = mean_std(&physicality_samples);
    Ok(BootstrapReport {
        resample_count: e_samples.len(),
        indeterminate,
        seed: config.seed,
        mode: config.mode,
        significance_e: significance(e_mean, e_std),
        significance_p: significance(p_mean, p_std),
        significance_phys: significance(phys_mean, phys_std),
        e_samples,
        p_samples,
        physicality_samples,
        e_mean,
        e_std,
        p_mean,
        p_std,
        phys_mean,
        phys_std,
        full_e: full.entanglement,
        full_p: full.ppt_margin,
        full_phys: full.physicality,
    })
}
