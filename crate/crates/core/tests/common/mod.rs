//! Shared generators and frozen reference values for the integration tests.
#![allow(dead_code)]

use becv::gaussian::{CovarianceMatrix, GaussianState};
use nalgebra::DMatrix;
use rand::Rng;

pub mod oracle;

/// Interleaved-ordering symplectic for a beam splitter of angle `theta`
/// between modes `i` and `j` (same mixing on x and p).
fn splitter(n: usize, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    let (c, sn) = (theta.cos(), theta.sin());
    for q in 0..2 {
        s[(2 * i + q, 2 * i + q)] = c;
        s[(2 * j + q, 2 * j + q)] = c;
        s[(2 * i + q, 2 * j + q)] = sn;
        s[(2 * j + q, 2 * i + q)] = -sn;
    }
    s
}

fn phase(n: usize, k: usize, phi: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    let (c, sn) = (phi.cos(), phi.sin());
    s[(2 * k, 2 * k)] = c;
    s[(2 * k, 2 * k + 1)] = -sn;
    s[(2 * k + 1, 2 * k)] = sn;
    s[(2 * k + 1, 2 * k + 1)] = c;
    s
}

/// Product of random phases and splitters; orthogonal and symplectic.
pub fn random_passive<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    for _ in 0..(2 * n * n).max(2) {
        s = phase(n, rng.random_range(0..n), rng.random_range(0.0..std::f64::consts::TAU)) * s;
        if n > 1 {
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            s = splitter(n, i, j, rng.random_range(0.0..std::f64::consts::TAU)) * s;
        }
    }
    s
}

/// `O₁ Z O₂ diag(ν) O₂ᵀ Z O₁ᵀ` with squeezing `Z` and symplectic eigenvalues
/// `ν` drawn from `nu_range`; physical iff every `ν ≥ 1`.
pub fn random_state_with<R: Rng>(
    n: usize,
    nu_range: std::ops::Range<f64>,
    max_squeeze: f64,
    rng: &mut R,
) -> GaussianState {
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    let mut z = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        let nu = rng.random_range(nu_range.clone());
        d[(2 * k, 2 * k)] = nu;
        d[(2 * k + 1, 2 * k + 1)] = nu;
        let r = rng.random_range(-max_squeeze..max_squeeze);
        z[(2 * k, 2 * k)] = r.exp();
        z[(2 * k + 1, 2 * k + 1)] = (-r).exp();
    }
    let s = random_passive(n, rng) * z * random_passive(n, rng);
    let g = &s * d * s.transpose();
    GaussianState::new(CovarianceMatrix::new((&g + g.transpose()) * 0.5).unwrap())
}

pub fn random_physical_state<R: Rng>(n: usize, rng: &mut R) -> GaussianState {
    random_state_with(n, 1.0..2.0, 1.0, rng)
}

/// Symplectic eigenvalues straddling 1, so roughly half the draws are unphysical.
pub fn random_any_state<R: Rng>(n: usize, rng: &mut R) -> GaussianState {
    random_state_with(n, 0.7..1.5, 1.0, rng)
}

/// Two-mode squeezed vacuum with `e^{-2r} = e2r`.
pub fn tmsv(e2r: f64) -> GaussianState {
    let r = -e2r.ln() / 2.0;
    let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        c, 0.0, s, 0.0,
        0.0, c, 0.0, -s,
        s, 0.0, c, 0.0,
        0.0, -s, 0.0, c,
    ]);
    GaussianState::new(CovarianceMatrix::new(m).unwrap())
}
