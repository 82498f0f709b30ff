use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::dataset::QuadratureDataset;
use super::plan::MeasurementSetting;
use crate::error::{Error, Result};
use crate::gaussian::{physicality_margin, GaussianState};
use crate::rng::{derive, Stream};

const PHYSICALITY_TOL: f64 = 1e-9;

/// Covariance and mean of the joint homodyne outcome of `setting`.
pub fn measured_covariance(
    state: &GaussianState,
    setting: &MeasurementSetting,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = state.n_modes();
    if setting.n_modes() != n {
        return Err(Error::invalid(format!(
            "setting `{}` has {} angles, state has {n} modes",
            setting.label,
            setting.n_modes()
        )));
    }
    if setting.shot_noise {
        return Ok((DMatrix::identity(n, n), DVector::zeros(n)));
    }
    let mut proj = DMatrix::zeros(n, 2 * n);
    for (k, (c, s)) in setting.directions().into_iter().enumerate() {
        proj[(k, 2 * k)] = c;
        proj[(k, 2 * k + 1)] = s;
    }
    let cov = &proj * state.matrix() * proj.transpose();
    let mean = state.mean.as_ref().map(|d| &proj * d).unwrap_or_else(|| DVector::zeros(n));
    Ok(((&cov + cov.transpose()) * 0.5, mean))
}

/// Symmetric square root through the eigendecomposition, so singular
/// (but positive semidefinite) covariances are allowed.
fn factor(cov: DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = cov.clone().cholesky() {
        return ch.l();
    }
    let eig = SymmetricEigen::new(cov);
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

/// `count` joint outcomes, row-major (`count x n`).
pub fn sample_state<R: Rng + ?Sized>(
    state: &GaussianState,
    setting: &MeasurementSetting,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let margin = physicality_margin(state);
    if margin < -PHYSICALITY_TOL {
        return Err(Error::InvalidState(format!("cannot sample an unphysical state (margin {margin:e})")));
    }
    let (cov, mean) = measured_covariance(state, setting)?;
    let n = cov.nrows();
    let l = factor(cov);
    let l: Vec<f64> = (0..n * n).map(|k| l[(k / n, k % n)]).collect();
    let mut out = vec![0.0; count * n];
    let mut z = vec![0.0; n];
    for row in out.chunks_exact_mut(n) {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for (a, slot) in row.iter_mut().enumerate() {
            *slot = mean[a] + l[a * n..(a + 1) * n].iter().zip(&z).map(|(x, y)| x * y).sum::<f64>();
        }
    }
    Ok(out)
}

/// `count` samples per setting; setting `k` draws from stream
/// `(seed, sampling, k)`, so the result does not depend on thread count.
pub fn generate_dataset(
    state: &GaussianState,
    settings: &[MeasurementSetting],
    count: usize,
    seed: u64,
) -> Result<QuadratureDataset> {
    let samples = settings
        .par_iter()
        .enumerate()
        .map(|(k, s)| sample_state(state, s, count, &mut derive(seed, Stream::Sampling, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    QuadratureDataset::new(state.n_modes(), settings.to_vec(), samples)
}
