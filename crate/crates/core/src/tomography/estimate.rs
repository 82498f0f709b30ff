//! Least-squares reconstruction of γ from per-setting moments.
//!
//! Each non-calibration setting contributes the sample mean of every channel
//! and the sample covariance of every channel pair. The second moments are
//! linear in the upper triangle of γ through [`design_matrix`]; the estimate is
//! the least-squares solution `(DᵀD)⁻¹Dᵀc`. Standard errors come from the
//! sample fourth moments of each setting, which are independent across
//! settings.

use nalgebra::{DMatrix, DVector};

use super::dataset::QuadratureDataset;
use super::plan::{design_matrix, identifiability, mode_pairs, unknowns, MeasurementSetting};
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, GaussianState};

/// Sufficient statistics of one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingMoments {
    pub count: usize,
    pub mean: Vec<f64>,
    /// Sample covariance (`1/(N-1)`) of each mode pair `i <= j`.
    pub second: Vec<f64>,
}

impl SettingMoments {
    /// Moments of row-major samples with integer weights (bootstrap counts).
    /// `weights = None` means every row once.
    pub fn weighted(samples: &[f64], n_modes: usize, weights: Option<&[u32]>) -> Result<Self> {
        if samples.len() < n_modes || n_modes == 0 {
            return Err(Error::invalid("setting has no samples"));
        }
        let sums = match n_modes {
            1 => scan::<1>(samples, weights),
            2 => scan::<2>(samples, weights),
            3 => scan::<3>(samples, weights),
            4 => scan::<4>(samples, weights),
            5 => scan::<5>(samples, weights),
            6 => scan::<6>(samples, weights),
            _ => scan_dyn(samples, n_modes, weights),
        };
        let RawSums { shift, sum, cross, total } = sums;
        if total < 2.0 {
            return Err(Error::invalid("a setting needs at least two samples"));
        }
        let n = total;
        let second = mode_pairs(n_modes)
            .iter()
            .map(|&(i, j)| (cross[i * n_modes + j] - sum[i] * sum[j] / n) / (n - 1.0))
            .collect();
        let mean = sum.iter().zip(&shift).map(|(s, m)| s / n + m).collect();
        Ok(SettingMoments { count: total as usize, mean, second })
    }
}

/// Weighted first and second raw sums of the rows, shifted by the first row
/// to keep them well conditioned. `cross` is row-major `n x n`, upper part.
struct RawSums {
    shift: Vec<f64>,
    sum: Vec<f64>,
    cross: Vec<f64>,
    total: f64,
}

fn scan<const N: usize>(samples: &[f64], weights: Option<&[u32]>) -> RawSums {
    let mut shift = [0.0; N];
    shift.copy_from_slice(&samples[..N]);
    let mut sum = [0.0; N];
    let mut cross = [[0.0; N]; N];
    let mut total = 0.0;
    let mut add = |row: &[f64], w: f64| {
        let mut d = [0.0; N];
        for k in 0..N {
            d[k] = row[k] - shift[k];
            sum[k] += w * d[k];
        }
        for i in 0..N {
            let wd = w * d[i];
            for j in i..N {
                cross[i][j] += wd * d[j];
            }
        }
        total += w;
    };
    match weights {
        Some(ws) => {
            // Branch-free: about a third of the bootstrap weights are zero.
            for (row, &w) in samples.chunks_exact(N).zip(ws) {
                add(row, w as f64);
            }
        }
        None => samples.chunks_exact(N).for_each(|row| add(row, 1.0)),
    }
    RawSums { shift: shift.to_vec(), sum: sum.to_vec(), cross: cross.iter().flatten().copied().collect(), total }
}

fn scan_dyn(samples: &[f64], n: usize, weights: Option<&[u32]>) -> RawSums {
    let shift = samples[..n].to_vec();
    let mut sum = vec![0.0; n];
    let mut cross = vec![0.0; n * n];
    let mut total = 0.0;
    let mut d = vec![0.0; n];
    for (r, row) in samples.chunks_exact(n).enumerate() {
        let w = weights.map_or(1.0, |ws| ws[r] as f64);
        if w == 0.0 {
            continue;
        }
        for k in 0..n {
            d[k] = row[k] - shift[k];
            sum[k] += w * d[k];
        }
        for i in 0..n {
            for j in i..n {
                cross[i * n + j] += w * d[i] * d[j];
            }
        }
        total += w;
    }
    RawSums { shift, sum, cross, total }
}

/// Reconstructed covariance with entrywise standard errors.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub covariance: CovarianceMatrix,
    pub mean: DVector<f64>,
    /// Standard error of each entry of γ (symmetric).
    pub std_errors: DMatrix<f64>,
}

impl CovarianceEstimate {
    pub fn state(&self) -> GaussianState {
        GaussianState::with_mean(self.covariance.clone(), self.mean.clone()).expect("dimensions agree")
    }
}

/// A setting plan with its precomputed least-squares maps.
#[derive(Debug, Clone)]
pub struct Estimator {
    n_modes: usize,
    settings: Vec<MeasurementSetting>,
    /// Pseudo-inverse of the second-moment design matrix.
    solve_second: DMatrix<f64>,
    /// Pseudo-inverse of the first-moment design matrix.
    solve_first: DMatrix<f64>,
    /// Divide each channel by its shot-noise standard deviation.
    pub normalize_shot_noise: bool,
}

impl Estimator {
    pub fn new(settings: &[MeasurementSetting], n_modes: usize) -> Result<Self> {
        let missing = identifiability(settings, n_modes)?;
        if !missing.is_empty() {
            return Err(Error::Unidentifiable(missing));
        }
        let d = design_matrix(settings, n_modes)?;
        let solve_second = pseudo_inverse(&d);
        let used: Vec<&MeasurementSetting> = settings.iter().filter(|s| !s.shot_noise).collect();
        let mut f = DMatrix::zeros(used.len() * n_modes, 2 * n_modes);
        for (s, setting) in used.iter().enumerate() {
            for (k, (c, sn)) in setting.directions().into_iter().enumerate() {
                f[(s * n_modes + k, 2 * k)] = c;
                f[(s * n_modes + k, 2 * k + 1)] = sn;
            }
        }
        Ok(Estimator {
            n_modes,
            settings: settings.to_vec(),
            solve_second,
            solve_first: pseudo_inverse(&f),
            normalize_shot_noise: false,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn settings(&self) -> &[MeasurementSetting] {
        &self.settings
    }

    /// Per-channel scale factors from the shot-noise setting, or ones.
    fn scales(&self, moments: &[SettingMoments]) -> Result<Vec<f64>> {
        if !self.normalize_shot_noise {
            return Ok(vec![1.0; self.n_modes]);
        }
        let k = self
            .settings
            .iter()
            .position(|s| s.shot_noise)
            .ok_or_else(|| Error::invalid("shot-noise normalization needs a shot-noise setting"))?;
        let pairs = mode_pairs(self.n_modes);
        (0..self.n_modes)
            .map(|m| {
                let v = moments[k].second[pairs.iter().position(|&p| p == (m, m)).expect("diagonal")];
                if v > 0.0 {
                    Ok(v.sqrt())
                } else {
                    Err(Error::invalid(format!("shot-noise variance of mode {} is not positive", m + 1)))
                }
            })
            .collect()
    }

    /// Stacked second- and first-moment vectors over the non-calibration settings.
    fn stack(&self, moments: &[SettingMoments]) -> Result<(DVector<f64>, DVector<f64>)> {
        if moments.len() != self.settings.len() {
            return Err(Error::invalid(format!("{} moment sets for {} settings", moments.len(), self.settings.len())));
        }
        let scale = self.scales(moments)?;
        let pairs = mode_pairs(self.n_modes);
        let mut second = Vec::new();
        let mut first = Vec::new();
        for (s, m) in self.settings.iter().zip(moments) {
            if s.shot_noise {
                continue;
            }
            second.extend(pairs.iter().zip(&m.second).map(|(&(i, j), v)| v / (scale[i] * scale[j])));
            first.extend(m.mean.iter().zip(&scale).map(|(v, sc)| v / sc));
        }
        Ok((DVector::from_vec(second), DVector::from_vec(first)))
    }

    fn assemble(&self, upper: &DVector<f64>) -> DMatrix<f64> {
        let d = 2 * self.n_modes;
        let mut g = DMatrix::zeros(d, d);
        for (&(r, c), &v) in unknowns(self.n_modes).iter().zip(upper.iter()) {
            g[(r, c)] = v;
            g[(c, r)] = v;
        }
        g
    }

    /// γ and mean from per-setting moments.
    pub fn solve(&self, moments: &[SettingMoments]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let (second, first) = self.stack(moments)?;
        Ok((self.assemble(&(&self.solve_second * second)), &self.solve_first * first))
    }

    pub fn estimate(&self, data: &QuadratureDataset) -> Result<CovarianceEstimate> {
        self.check(data)?;
        let moments = (0..data.settings().len())
            .map(|k| SettingMoments::weighted(data.samples(k), self.n_modes, None))
            .collect::<Result<Vec<_>>>()?;
        let (gamma, mean) = self.solve(&moments)?;
        let std_errors = self.standard_errors(data, &moments)?;
        Ok(CovarianceEstimate { covariance: CovarianceMatrix::new(gamma)?, mean, std_errors })
    }

    pub(crate) fn check(&self, data: &QuadratureDataset) -> Result<()> {
        if data.n_modes() != self.n_modes || data.settings() != self.settings.as_slice() {
            return Err(Error::invalid("dataset settings differ from the estimator plan"));
        }
        Ok(())
    }

    /// `L Σ Lᵀ`, with `Σ` block diagonal over settings and each block the
    /// covariance of the centered pair products divided by the count.
    fn standard_errors(&self, data: &QuadratureDataset, moments: &[SettingMoments]) -> Result<DMatrix<f64>> {
        let n = self.n_modes;
        let pairs = mode_pairs(n);
        let p = pairs.len();
        let scale = self.scales(moments)?;
        let mut blocks = Vec::new();
        for (k, (s, m)) in self.settings.iter().zip(moments).enumerate() {
            if s.shot_noise {
                continue;
            }
            let mut acc = DMatrix::<f64>::zeros(p, p);
            let mut prod = vec![0.0; p];
            let rows = data.samples(k).chunks_exact(n);
            for row in rows {
                for (slot, &(i, j)) in prod.iter_mut().zip(&pairs) {
                    *slot = (row[i] - m.mean[i]) * (row[j] - m.mean[j]) / (scale[i] * scale[j]);
                }
                for a in 0..p {
                    for b in a..p {
                        acc[(a, b)] += prod[a] * prod[b];
                    }
                }
            }
            let count = m.count as f64;
            let centered: Vec<f64> =
                pairs.iter().zip(&m.second).map(|(&(i, j), v)| v / (scale[i] * scale[j])).collect();
            for a in 0..p {
                for b in a..p {
                    let v = (acc[(a, b)] / count - centered[a] * centered[b]) / count;
                    acc[(a, b)] = v;
                    acc[(b, a)] = v;
                }
            }
            blocks.push(acc);
        }
        let total = blocks.len() * p;
        let mut sigma = DMatrix::zeros(total, total);
        for (b, block) in blocks.iter().enumerate() {
            sigma.view_mut((b * p, b * p), (p, p)).copy_from(block);
        }
        let cov = &self.solve_second * sigma * self.solve_second.transpose();
        Ok(self.assemble(&cov.diagonal().map(|v| v.max(0.0).sqrt())))
    }
}

fn pseudo_inverse(d: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = d.transpose() * d;
    gram.try_inverse().expect("full column rank checked") * d.transpose()
}

/// Least-squares γ with standard errors, using the dataset's own settings.
pub fn estimate_covariance(data: &QuadratureDataset) -> Result<CovarianceEstimate> {
    Estimator::new(data.settings(), data.n_modes())?.estimate(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::{default_setting_plan, generate_dataset};

    #[test]
    fn weighted_moments_match_repetition() {
        let samples = [1.0, 2.0, 3.0, 5.0, -1.0, 0.5];
        let w = SettingMoments::weighted(&samples, 2, Some(&[2, 0, 1])).unwrap();
        let r = SettingMoments::weighted(&[1.0, 2.0, 1.0, 2.0, -1.0, 0.5], 2, None).unwrap();
        assert_eq!(w.count, 3);
        for (a, b) in w.second.iter().zip(&r.second).chain(w.mean.iter().zip(&r.mean)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_is_recovered_within_errors() {
        let plan = default_setting_plan(2).unwrap();
        let data = generate_dataset(&GaussianState::vacuum(2), &plan, 20_000, 4).unwrap();
        let est = estimate_covariance(&data).unwrap();
        let g = est.covariance.matrix();
        for r in 0..4 {
            for c in 0..4 {
                let truth = if r == c { 1.0 } else { 0.0 };
                let se = est.std_errors[(r, c)];
                assert!(se > 0.0 && se < 0.05);
                assert!((g[(r, c)] - truth).abs() < 5.0 * se, "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn x_only_plan_names_missing_entries() {
        let plan = vec![MeasurementSetting::new(vec![0.0, 0.0], "x").unwrap()];
        match Estimator::new(&plan, 2) {
            Err(Error::Unidentifiable(names)) => assert!(names.contains(&"γ[p1,p2]".to_string())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shot_noise_normalization_rescales() {
        let plan = default_setting_plan(1).unwrap();
        let mut data = generate_dataset(&GaussianState::vacuum(1), &plan, 5_000, 1).unwrap();
        // Double every reading: raw estimate quadruples, normalized does not.
        data = QuadratureDataset::new(
            1,
            plan.clone(),
            (0..plan.len()).map(|k| data.samples(k).iter().map(|v| 2.0 * v).collect()).collect(),
        )
        .unwrap();
        let mut est = Estimator::new(&plan, 1).unwrap();
        let raw = est.estimate(&data).unwrap();
        est.normalize_shot_noise = true;
        let norm = est.estimate(&data).unwrap();
        assert!((raw.covariance.matrix()[(0, 0)] - 4.0).abs() < 0.3);
        assert!((norm.covariance.matrix()[(0, 0)] - 1.0).abs() < 0.1);
    }
}
