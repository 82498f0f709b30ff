//! Covariance matrices, the symplectic form and the spectral quantities built
//! on them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative asymmetry above which a constructed covariance matrix carries a
/// warning. Estimated matrices are never exactly symmetric.
pub const ASYMMETRY_WARNING: f64 = 1e-8;

/// Threshold on the smallest eigenvalue of γ for symplectic diagonalization.
pub const POSITIVE_DEFINITE_FLOOR: f64 = 1e-12;

/// Tolerance on the symmetry of the real/imaginary parts given to
/// [`hermitian_min_eig`].
pub const HERMITIAN_SYMMETRY_TOL: f64 = 1e-10;

/// A real symmetric `2n x 2n` second-moment matrix in `(x1, p1, ..., xn, pn)`
/// ordering. The vacuum is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
    asymmetry: f64,
}

impl CovarianceMatrix {
    /// Builds a covariance matrix, replacing the input by `(m + mᵀ) / 2`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::invalid(format!("covariance matrix must be square, got {rows}x{cols}")));
        }
        if rows == 0 || rows % 2 != 0 {
            return Err(Error::invalid(format!("covariance dimension must be even and positive, got {rows}")));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("covariance matrix has non-finite entries"));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asymmetry = (&matrix - matrix.transpose()).amax() / scale;
        let entries = if asymmetry == 0.0 { matrix } else { (&matrix + matrix.transpose()) * 0.5 };
        Ok(CovarianceMatrix { n_modes: rows / 2, entries, asymmetry })
    }

    pub fn from_row_major(n_modes: usize, values: &[f64]) -> Result<Self> {
        let dim = 2 * n_modes;
        if n_modes == 0 || values.len() != dim * dim {
            return Err(Error::invalid(format!(
                "expected {} entries for {n_modes} modes, got {}",
                dim * dim,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, values))
    }

    pub fn identity(n_modes: usize) -> Self {
        CovarianceMatrix { n_modes, entries: DMatrix::identity(2 * n_modes, 2 * n_modes), asymmetry: 0.0 }
    }

    /// Skips the symmetrization step; callers guarantee exact symmetry.
    pub(crate) fn from_symmetric_unchecked(entries: DMatrix<f64>) -> Self {
        debug_assert_eq!(entries.nrows() % 2, 0);
        CovarianceMatrix { n_modes: entries.nrows() / 2, entries, asymmetry: 0.0 }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Relative asymmetry of the input this matrix was built from.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// `Some(asymmetry)` when the source matrix was asymmetric beyond
    /// [`ASYMMETRY_WARNING`].
    pub fn symmetry_warning(&self) -> Option<f64> {
        (self.asymmetry > ASYMMETRY_WARNING).then_some(self.asymmetry)
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                out.push(self.entries[(r, c)]);
            }
        }
        out
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// `⊕ [[0, 1], [-1, 0]]` over `n` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    entries: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }
}

pub fn symplectic_form(n_modes: usize) -> Result<SymplecticForm> {
    if n_modes == 0 {
        return Err(Error::invalid("symplectic form needs at least one mode"));
    }
    Ok(SymplecticForm { n_modes, entries: sigma(n_modes) })
}

pub(crate) fn sigma(n_modes: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        s[(2 * k, 2 * k + 1)] = 1.0;
        s[(2 * k + 1, 2 * k)] = -1.0;
    }
    s
}

/// Assignment of modes to the two parties. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModePartition {
    party_a: Vec<usize>,
    party_b: Vec<usize>,
}

impl ModePartition {
    pub fn new(party_a: Vec<usize>, party_b: Vec<usize>, n_modes: usize) -> Result<Self> {
        if party_a.is_empty() || party_b.is_empty() {
            return Err(Error::invalid("both parties of a partition must be nonempty"));
        }
        let mut seen = vec![false; n_modes];
        for &m in party_a.iter().chain(&party_b) {
            if m >= n_modes {
                return Err(Error::invalid(format!("mode {} out of range for {n_modes} modes", m + 1)));
            }
            if seen[m] {
                return Err(Error::invalid(format!("mode {} assigned twice", m + 1)));
            }
            seen[m] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("mode {} belongs to neither party", missing + 1)));
        }
        Ok(ModePartition { party_a, party_b })
    }

    /// One-based indices, as used in files and on the command line.
    pub fn from_one_based(party_a: &[usize], party_b: &[usize], n_modes: usize) -> Result<Self> {
        let shift = |v: &[usize]| -> Result<Vec<usize>> {
            v.iter().map(|&m| m.checked_sub(1).ok_or_else(|| Error::invalid("mode indices are one-based"))).collect()
        };
        Self::new(shift(party_a)?, shift(party_b)?, n_modes)
    }

    /// Parses `"1,2|3,4"`.
    pub fn parse(text: &str, n_modes: usize) -> Result<Self> {
        let (a, b) = text
            .split_once('|')
            .ok_or_else(|| Error::invalid(format!("partition `{text}` must look like `1,2|3,4`")))?;
        let list = |s: &str| -> Result<Vec<usize>> {
            s.split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad mode index `{t}`"))))
                .collect()
        };
        Self::from_one_based(&list(a)?, &list(b)?, n_modes)
    }

    pub fn party_a(&self) -> &[usize] {
        &self.party_a
    }

    pub fn party_b(&self) -> &[usize] {
        &self.party_b
    }

    pub fn n_modes(&self) -> usize {
        self.party_a.len() + self.party_b.len()
    }

    /// Party A followed by party B, for [`permute_modes`].
    pub fn canonical_order(&self) -> Vec<usize> {
        self.party_a.iter().chain(&self.party_b).copied().collect()
    }

    pub fn to_one_based(&self) -> (Vec<usize>, Vec<usize>) {
        (self.party_a.iter().map(|m| m + 1).collect(), self.party_b.iter().map(|m| m + 1).collect())
    }
}

impl std::fmt::Display for ModePartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (a, b) = self.to_one_based();
        let join = |v: &[usize]| v.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{}|{}", join(&a), join(&b))
    }
}

/// Covariance matrix plus optional displacement. Physicality is checked on
/// demand so that unphysical estimates stay representable.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub cov: CovarianceMatrix,
    pub mean: Option<DVector<f64>>,
}

impl GaussianState {
    pub fn new(cov: CovarianceMatrix) -> Self {
        GaussianState { cov, mean: None }
    }

    pub fn with_mean(cov: CovarianceMatrix, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::invalid(format!("mean has length {}, expected {}", mean.len(), cov.dim())));
        }
        Ok(GaussianState { cov, mean: Some(mean) })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        GaussianState::new(CovarianceMatrix::identity(n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.cov.n_modes()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.cov.matrix()
    }
}

impl From<CovarianceMatrix> for GaussianState {
    fn from(cov: CovarianceMatrix) -> Self {
        GaussianState::new(cov)
    }
}

/// Real symmetric embedding `[[S, -A], [A, S]]` of the Hermitian matrix `S + iA`.
pub(crate) fn hermitian_embedding(real_part: &DMatrix<f64>, imag_part: &DMatrix<f64>) -> DMatrix<f64> {
    let d = real_part.nrows();
    let mut h = DMatrix::zeros(2 * d, 2 * d);
    h.view_mut((0, 0), (d, d)).copy_from(real_part);
    h.view_mut((d, d), (d, d)).copy_from(real_part);
    h.view_mut((0, d), (d, d)).copy_from(&(-imag_part));
    h.view_mut((d, 0), (d, d)).copy_from(imag_part);
    h
}

pub(crate) fn min_symmetric_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of the Hermitian matrix `real_part + i imag_part`.
pub fn hermitian_min_eig(real_part: &DMatrix<f64>, imag_part: &DMatrix<f64>) -> Result<f64> {
    if real_part.shape() != imag_part.shape() || real_part.nrows() != real_part.ncols() {
        return Err(Error::invalid(format!(
            "hermitian parts must be square with matching shapes, got {:?} and {:?}",
            real_part.shape(),
            imag_part.shape()
        )));
    }
    let scale = real_part.amax().max(imag_part.amax()).max(1.0);
    if (real_part - real_part.transpose()).amax() > HERMITIAN_SYMMETRY_TOL * scale {
        return Err(Error::invalid("real part is not symmetric"));
    }
    if (imag_part + imag_part.transpose()).amax() > HERMITIAN_SYMMETRY_TOL * scale {
        return Err(Error::invalid("imaginary part is not antisymmetric"));
    }
    Ok(min_symmetric_eigenvalue(hermitian_embedding(real_part, imag_part)))
}

/// `min eig(γ + iσ)`; nonnegative exactly for physical states.
pub fn physicality_margin(state: &GaussianState) -> f64 {
    let gamma = state.matrix();
    min_symmetric_eigenvalue(hermitian_embedding(gamma, &sigma(state.n_modes())))
}

/// Moduli of the eigenvalues of `iσγ`, one per mode, ascending.
pub fn symplectic_eigenvalues(state: &GaussianState) -> Result<Vec<f64>> {
    let n = state.n_modes();
    let eig = SymmetricEigen::new(state.matrix().clone());
    let smallest = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest <= POSITIVE_DEFINITE_FLOOR {
        return Err(Error::InvalidState(format!(
            "covariance matrix is not positive definite (smallest eigenvalue {smallest:e})"
        )));
    }
    // γ^{1/2} σ γ^{1/2} is antisymmetric with eigenvalues ±iν; its Gram matrix
    // carries each ν² twice.
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let k = &root * sigma(n) * &root;
    let gram = k.transpose() * &k;
    let mut nu2: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
    nu2.sort_by(f64::total_cmp);
    Ok(nu2.chunks(2).map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt()).collect())
}

/// Sign flip of the momentum coordinates of party B: `MγM`.
pub fn partial_transpose(state: &GaussianState, partition: &ModePartition) -> Result<GaussianState> {
    let n = state.n_modes();
    if partition.n_modes() != n {
        return Err(Error::invalid(format!("partition covers {} modes, state has {n}", partition.n_modes())));
    }
    let signs = transpose_signs(n, partition);
    let mut gamma = state.matrix().clone();
    for r in 0..2 * n {
        for c in 0..2 * n {
            gamma[(r, c)] *= signs[r] * signs[c];
        }
    }
    let mean = state.mean.as_ref().map(|d| d.component_mul(&DVector::from_vec(signs.clone())));
    Ok(GaussianState { cov: CovarianceMatrix::from_symmetric_unchecked(gamma), mean })
}

pub(crate) fn transpose_signs(n_modes: usize, partition: &ModePartition) -> Vec<f64> {
    let mut signs = vec![1.0; 2 * n_modes];
    for &m in partition.party_b() {
        signs[2 * m + 1] = -1.0;
    }
    signs
}

/// Reorders modes so that new mode `k` is old mode `order[k]`, moving 2x2
/// blocks together.
pub fn permute_modes(state: &GaussianState, order: &[usize]) -> Result<GaussianState> {
    let n = state.n_modes();
    if order.len() != n {
        return Err(Error::invalid(format!("permutation has {} entries, state has {n} modes", order.len())));
    }
    let mut seen = vec![false; n];
    for &m in order {
        if m >= n || std::mem::replace(&mut seen[m], true) {
            return Err(Error::invalid(format!("{order:?} is not a permutation of the modes")));
        }
    }
    let coords: Vec<usize> = order.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let gamma = state.matrix();
    let permuted = DMatrix::from_fn(2 * n, 2 * n, |r, c| gamma[(coords[r], coords[c])]);
    let mean = state.mean.as_ref().map(|d| DVector::from_fn(2 * n, |r, _| d[coords[r]]));
    Ok(GaussianState { cov: CovarianceMatrix::from_symmetric_unchecked(permuted), mean })
}
