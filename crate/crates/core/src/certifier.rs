//! Entanglement measure `E(γ)`, PPT measure `P(γ)` and their combination into
//! a certification report.
//!
//! `E(γ) = 1 - max x` such that `γ ⪰ γ_A ⊕ γ_B` with `γ_A + i x σ_A ⪰ 0`
//! and `γ_B + i x σ_B ⪰ 0`. For fixed `x` the constraint set is decided by
//! maximizing a common margin `t` with every inequality shifted by `t I`;
//! `max x` is then located by bisection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    hermitian_embedding, min_symmetric_eigenvalue, partial_transpose, permute_modes, physicality_margin, sigma,
    CovarianceMatrix, GaussianState, ModePartition,
};
use crate::lmi::{maximize_until, BarrierOptions, Entry, Lmi, ThresholdStatus};

/// States with a physicality margin below `-PHYSICALITY_TOL` are rejected.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Band around zero inside which `P` is not given a sign.
pub const PPT_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifierConfig {
    /// Bisection tolerance on `x`.
    pub tol: f64,
    /// A scale `x` is feasible iff the maximal common margin is `>= -feas_tol`.
    pub feas_tol: f64,
    /// Newton-step budget per feasibility solve.
    pub max_newton_steps: usize,
    /// Certify unphysical matrices instead of rejecting them (bootstrap use).
    #[serde(default)]
    pub allow_unphysical: bool,
}

impl Default for CertifierConfig {
    fn default() -> Self {
        CertifierConfig { tol: 1e-6, feas_tol: 1e-8, max_newton_steps: 500, allow_unphysical: false }
    }
}

impl CertifierConfig {
    pub fn with_tol(tol: f64) -> Self {
        CertifierConfig { tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.feas_tol >= 0.0) || self.max_newton_steps == 0 {
            return Err(Error::invalid(format!(
                "certifier needs tol > 0, feas_tol >= 0 and a positive step budget, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    pub bisection_steps: usize,
    pub feasibility_solves: usize,
    pub newton_steps: usize,
}

impl std::ops::AddAssign for SolverStats {
    fn add_assign(&mut self, rhs: Self) {
        self.bisection_steps += rhs.bisection_steps;
        self.feasibility_solves += rhs.feasibility_solves;
        self.newton_steps += rhs.newton_steps;
    }
}

/// The separability constraint system at a fixed scale `x`.
///
/// The target is stored with party A's modes first; `γ_A` and `γ_B` refer to
/// the modes in the order given by the partition.
#[derive(Debug, Clone)]
pub struct SdpFeasibilityProblem {
    target: CovarianceMatrix,
    partition: ModePartition,
    x: f64,
}

impl SdpFeasibilityProblem {
    pub fn new(state: &GaussianState, partition: &ModePartition, x: f64) -> Result<Self> {
        if partition.n_modes() != state.n_modes() {
            return Err(Error::invalid(format!(
                "partition covers {} modes, state has {}",
                partition.n_modes(),
                state.n_modes()
            )));
        }
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::invalid(format!("scale x must be finite and nonnegative, got {x}")));
        }
        let target = permute_modes(state, &partition.canonical_order())?.cov;
        Ok(SdpFeasibilityProblem { target, partition: partition.clone(), x })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn with_x(&self, x: f64) -> Self {
        SdpFeasibilityProblem { x, ..self.clone() }
    }

    pub fn partition(&self) -> &ModePartition {
        &self.partition
    }
}

/// Local covariance matrices proving feasibility; every constraint holds with
/// common margin `margin` (which is `>= -feas_tol`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityWitness {
    pub x: f64,
    pub gamma_a: Vec<f64>,
    pub gamma_b: Vec<f64>,
    pub margin: f64,
}

impl SeparabilityWitness {
    pub fn gamma_a(&self) -> DMatrix<f64> {
        square(&self.gamma_a)
    }

    pub fn gamma_b(&self) -> DMatrix<f64> {
        square(&self.gamma_b)
    }
}

fn square(v: &[f64]) -> DMatrix<f64> {
    let d = (v.len() as f64).sqrt().round() as usize;
    DMatrix::from_row_slice(d, d, v)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityVerdict {
    Feasible(SeparabilityWitness),
    /// `upper_bound` bounds the achievable common margin from above and is
    /// `< -feas_tol`.
    Infeasible {
        upper_bound: f64,
    },
    Indeterminate {
        achieved: f64,
        upper_bound: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityOutcome {
    pub verdict: FeasibilityVerdict,
    pub newton_steps: usize,
}

/// Variable layout of the margin-maximization program.
struct MarginProgram {
    lmi: Lmi,
    dim_a: usize,
    dim_b: usize,
    lambda_min: f64,
}

impl MarginProgram {
    fn new(problem: &SdpFeasibilityProblem) -> Self {
        let gamma = problem.target.matrix().clone();
        let dim_a = 2 * problem.partition.party_a().len();
        let dim_b = 2 * problem.partition.party_b().len();
        let lambda_min = min_symmetric_eigenvalue(gamma.clone());
        let mut lmi = Lmi::new(vec![gamma, DMatrix::zeros(2 * dim_a, 2 * dim_a), DMatrix::zeros(2 * dim_b, 2 * dim_b)]);
        // Blocks: 0 = γ - γ_A ⊕ γ_B - tI, 1/2 = real embedding of γ_{A/B} + i x σ - tI.
        for (block, offset, d) in [(1, 0, dim_a), (2, dim_a, dim_b)] {
            for r in 0..d {
                for c in r..d {
                    lmi.add_variable(vec![
                        Entry::new(0, offset + r, offset + c, -1.0),
                        Entry::new(block, r, c, 1.0),
                        Entry::new(block, d + r, d + c, 1.0),
                    ]);
                }
            }
        }
        let n0 = dim_a + dim_b;
        let t_entries = (0..n0)
            .map(|k| Entry::new(0, k, k, -1.0))
            .chain((0..2 * dim_a).map(|k| Entry::new(1, k, k, -1.0)))
            .chain((0..2 * dim_b).map(|k| Entry::new(2, k, k, -1.0)))
            .collect();
        lmi.add_variable(t_entries);
        let mut program = MarginProgram { lmi, dim_a, dim_b, lambda_min };
        program.set_x(problem.x);
        program
    }

    fn set_x(&mut self, x: f64) {
        for (block, d) in [(1, self.dim_a), (2, self.dim_b)] {
            let zero = DMatrix::zeros(d, d);
            let s = sigma(d / 2) * x;
            self.lmi.set_constant(block, hermitian_embedding(&zero, &s));
        }
    }

    fn n_sym(d: usize) -> usize {
        d * (d + 1) / 2
    }

    fn t_index(&self) -> usize {
        self.lmi.n_vars() - 1
    }

    /// Scaled identities for both parties with a margin safely below the
    /// largest feasible one.
    fn start(&self, x: f64) -> DVector<f64> {
        let alpha = 0.5 * self.lambda_min;
        let mut y = DVector::zeros(self.lmi.n_vars());
        let mut k = 0;
        for d in [self.dim_a, self.dim_b] {
            for r in 0..d {
                for c in r..d {
                    if r == c {
                        y[k] = alpha;
                    }
                    k += 1;
                }
            }
        }
        y[self.t_index()] = (self.lambda_min - alpha).min(alpha - x) - 1.0;
        y
    }

    fn unpack(&self, y: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut k = 0;
        let mut mats = Vec::new();
        for d in [self.dim_a, self.dim_b] {
            let mut m = DMatrix::zeros(d, d);
            for r in 0..d {
                for c in r..d {
                    m[(r, c)] = y[k];
                    m[(c, r)] = y[k];
                    k += 1;
                }
            }
            mats.push(m);
        }
        debug_assert_eq!(k, Self::n_sym(self.dim_a) + Self::n_sym(self.dim_b));
        let b = mats.pop().unwrap();
        (mats.pop().unwrap(), b)
    }

    fn solve(&self, x: f64, cfg: &CertifierConfig) -> FeasibilityOutcome {
        let mut c = DVector::zeros(self.lmi.n_vars());
        c[self.t_index()] = 1.0;
        let opts = BarrierOptions { max_newton_steps: cfg.max_newton_steps, ..Default::default() };
        let out = maximize_until(&self.lmi, &c, self.start(x), -cfg.feas_tol, 0.0, &opts);
        let verdict = match out.status {
            ThresholdStatus::Above => {
                let (a, b) = self.unpack(&out.y);
                FeasibilityVerdict::Feasible(SeparabilityWitness {
                    x,
                    gamma_a: row_major(&a),
                    gamma_b: row_major(&b),
                    margin: out.objective,
                })
            }
            ThresholdStatus::Below => FeasibilityVerdict::Infeasible { upper_bound: out.upper_bound },
            ThresholdStatus::Converged | ThresholdStatus::Undecided => {
                FeasibilityVerdict::Indeterminate { achieved: out.objective, upper_bound: out.upper_bound }
            }
        };
        FeasibilityOutcome { verdict, newton_steps: out.newton_steps }
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

/// Decides whether `γ ⪰ γ_A ⊕ γ_B` with `γ_{A,B} + i x σ ⪰ 0` admits a
/// solution.
pub fn separability_feasible(problem: &SdpFeasibilityProblem, cfg: &CertifierConfig) -> Result<FeasibilityOutcome> {
    cfg.validate()?;
    Ok(MarginProgram::new(problem).solve(problem.x, cfg))
}

/// `min eig(MγM + iσ)`; strictly positive certifies non-distillability.
pub fn ppt_measure(state: &GaussianState, partition: &ModePartition) -> Result<f64> {
    let pt = partial_transpose(state, partition)?;
    Ok(physicality_margin(&pt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementEstimate {
    /// `1 - x*` with `x*` the midpoint of the final bracket.
    pub value: f64,
    /// Final bracket on `x*`: `x_low` feasible, `x_high` infeasible.
    pub x_low: f64,
    pub x_high: f64,
    /// Witness at the largest feasible `x` visited.
    pub witness: Option<SeparabilityWitness>,
    pub stats: SolverStats,
}

impl EntanglementEstimate {
    pub fn bracket_width(&self) -> f64 {
        self.x_high - self.x_low
    }
}

fn check_certifiable(state: &GaussianState, partition: &ModePartition, cfg: &CertifierConfig) -> Result<()> {
    cfg.validate()?;
    if partition.n_modes() != state.n_modes() {
        return Err(Error::invalid(format!(
            "partition covers {} modes, state has {}",
            partition.n_modes(),
            state.n_modes()
        )));
    }
    if !cfg.allow_unphysical {
        let margin = physicality_margin(state);
        if margin < -PHYSICALITY_TOL {
            return Err(Error::InvalidState(format!("unphysical covariance matrix (min eig(γ + iσ) = {margin:e})")));
        }
    }
    let lambda_min = min_symmetric_eigenvalue(state.matrix().clone());
    if lambda_min <= 0.0 {
        return Err(Error::InvalidState(format!(
            "covariance matrix is not positive definite (smallest eigenvalue {lambda_min:e})"
        )));
    }
    Ok(())
}

/// `E(γ)` by bisection over `x ∈ [0, λ_max(γ)]` down to a bracket of width `cfg.tol`.
pub fn entanglement_measure(
    state: &GaussianState,
    partition: &ModePartition,
    cfg: &CertifierConfig,
) -> Result<EntanglementEstimate> {
    check_certifiable(state, partition, cfg)?;
    let lambda_max = state.cov.eigenvalues().last().copied().unwrap_or(0.0);
    let problem = SdpFeasibilityProblem::new(state, partition, 0.0)?;
    bisect(&problem, 0.0, lambda_max, cfg)
}

/// Bisection on a bracket the caller already knows to be valid: `x_low`
/// feasible and `x_high` infeasible.
pub(crate) fn entanglement_in_bracket(
    state: &GaussianState,
    partition: &ModePartition,
    x_low: f64,
    x_high: f64,
    cfg: &CertifierConfig,
) -> Result<EntanglementEstimate> {
    check_certifiable(state, partition, cfg)?;
    let problem = SdpFeasibilityProblem::new(state, partition, 0.0)?;
    bisect(&problem, x_low, x_high, cfg)
}

fn bisect(
    problem: &SdpFeasibilityProblem,
    mut lo: f64,
    mut hi: f64,
    cfg: &CertifierConfig,
) -> Result<EntanglementEstimate> {
    let mut program = MarginProgram::new(problem);
    let mut stats = SolverStats::default();
    let mut witness = None;
    while hi - lo > cfg.tol {
        let x = 0.5 * (lo + hi);
        program.set_x(x);
        let out = program.solve(x, cfg);
        stats.bisection_steps += 1;
        stats.feasibility_solves += 1;
        stats.newton_steps += out.newton_steps;
        match out.verdict {
            FeasibilityVerdict::Feasible(w) => {
                lo = x;
                witness = Some(w);
            }
            FeasibilityVerdict::Infeasible { .. } => hi = x,
            FeasibilityVerdict::Indeterminate { achieved, .. } => {
                return Err(Error::Indeterminate { x_low: lo, x_high: hi, margin: achieved });
            }
        }
    }
    Ok(EntanglementEstimate { value: 1.0 - 0.5 * (lo + hi), x_low: lo, x_high: hi, witness, stats })
}

/// `Some(true)` when `E(γ) > threshold`, decided by a single feasibility solve
/// at `x = 1 - threshold`.
pub(crate) fn entanglement_exceeds(
    state: &GaussianState,
    partition: &ModePartition,
    threshold: f64,
    cfg: &CertifierConfig,
) -> Result<(bool, usize)> {
    check_certifiable(state, partition, cfg)?;
    let x = 1.0 - threshold;
    if x <= 0.0 {
        return Ok((false, 0));
    }
    let problem = SdpFeasibilityProblem::new(state, partition, x)?;
    let out = MarginProgram::new(&problem).solve(x, cfg);
    match out.verdict {
        FeasibilityVerdict::Feasible(_) => Ok((false, out.newton_steps)),
        FeasibilityVerdict::Infeasible { .. } => Ok((true, out.newton_steps)),
        FeasibilityVerdict::Indeterminate { achieved, .. } => {
            Err(Error::Indeterminate { x_low: x, x_high: x, margin: achieved })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    BoundEntangled,
    FreeEntangled,
    /// Entangled with `P` inside the zero band.
    EntangledPptBoundary,
    Separable,
    /// `E` inside the bisection band around zero.
    SeparableBoundary,
    Unphysical,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::BoundEntangled => "bound-entangled",
            Classification::FreeEntangled => "free-entangled",
            Classification::EntangledPptBoundary => "entangled-ppt-boundary",
            Classification::Separable => "separable",
            Classification::SeparableBoundary => "separable-boundary",
            Classification::Unphysical => "unphysical",
        }
    }

    pub fn classify(entanglement: f64, ppt_margin: f64, physicality: f64, tol: f64) -> Self {
        if physicality < -PHYSICALITY_TOL {
            Classification::Unphysical
        } else if entanglement > tol {
            if ppt_margin > PPT_BAND {
                Classification::BoundEntangled
            } else if ppt_margin < -PPT_BAND {
                Classification::FreeEntangled
            } else {
                Classification::EntangledPptBoundary
            }
        } else if entanglement < -tol {
            Classification::Separable
        } else {
            Classification::SeparableBoundary
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub entanglement: f64,
    pub ppt_margin: f64,
    pub physicality: f64,
    pub classification: Classification,
    /// Range of `E` consistent with the final bisection bracket.
    pub e_bracket: [f64; 2],
    pub e_bracket_width: f64,
    pub iterations: SolverStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<SeparabilityWitness>,
}

impl CertificationReport {
    pub fn is_bound_entangled(&self) -> bool {
        self.classification == Classification::BoundEntangled
    }
}

pub fn certify(state: &GaussianState, partition: &ModePartition, cfg: &CertifierConfig) -> Result<CertificationReport> {
    let physicality = physicality_margin(state);
    let ppt_margin = ppt_measure(state, partition)?;
    let e = entanglement_measure(state, partition, cfg)?;
    Ok(CertificationReport {
        entanglement: e.value,
        ppt_margin,
        physicality,
        classification: Classification::classify(e.value, ppt_margin, physicality, cfg.tol),
        e_bracket: [1.0 - e.x_high, 1.0 - e.x_low],
        e_bracket_width: e.bracket_width(),
        iterations: e.stats,
        witness: e.witness,
    })
}

/// `P` through an explicitly built `MγM`, independent of [`partial_transpose`].
#[cfg(test)]
pub(crate) fn ppt_measure_explicit(state: &GaussianState, partition: &ModePartition) -> f64 {
    let n = state.n_modes();
    let m = DMatrix::from_diagonal(&DVector::from_vec(crate::gaussian::transpose_signs(n, partition)));
    let gt = &m * state.matrix() * &m;
    crate::gaussian::hermitian_min_eig(&gt, &sigma(n)).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn tmsv(e2r: f64) -> GaussianState {
        let r = -e2r.ln() / 2.0;
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let m = DMatrix::from_row_slice(4, 4, &[c, 0., s, 0., 0., c, 0., -s, s, 0., c, 0., 0., -s, 0., c]);
        CovarianceMatrix::new(m).unwrap().into()
    }

    fn split2() -> ModePartition {
        ModePartition::new(vec![0], vec![1], 2).unwrap()
    }

    fn split4() -> ModePartition {
        ModePartition::new(vec![0, 1], vec![2, 3], 4).unwrap()
    }

    #[test]
    fn ppt_examples() {
        assert_abs_diff_eq!(ppt_measure(&GaussianState::vacuum(4), &split4()).unwrap(), 0.0, epsilon = 1e-12);
        let state = tmsv(0.5);
        assert_abs_diff_eq!(ppt_measure(&state, &split2()).unwrap(), -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ppt_measure_explicit(&state, &split2()), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_feasibility() {
        let cfg = CertifierConfig::default();
        let vac = GaussianState::vacuum(4);
        let at_one = SdpFeasibilityProblem::new(&vac, &split4(), 1.0).unwrap();
        let out = separability_feasible(&at_one, &cfg).unwrap();
        match out.verdict {
            FeasibilityVerdict::Feasible(w) => {
                assert!(w.margin >= -cfg.feas_tol);
                assert!((w.gamma_a() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-3);
                assert!((w.gamma_b() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-3);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
        let out = separability_feasible(&at_one.with_x(1.5), &cfg).unwrap();
        assert!(matches!(out.verdict, FeasibilityVerdict::Infeasible { upper_bound } if upper_bound < 0.0));
    }

    #[test]
    fn squeezed_pair_is_infeasible_at_one() {
        let problem = SdpFeasibilityProblem::new(&tmsv(0.5), &split2(), 1.0).unwrap();
        let out = separability_feasible(&problem, &CertifierConfig::default()).unwrap();
        assert!(matches!(out.verdict, FeasibilityVerdict::Infeasible { .. }));
    }

    #[test]
    fn feasibility_is_monotone_in_x() {
        let state = tmsv(0.4);
        let cfg = CertifierConfig::default();
        let e = entanglement_measure(&state, &split2(), &cfg).unwrap();
        let w = e.witness.expect("a feasible scale was visited");
        let half = SdpFeasibilityProblem::new(&state, &split2(), w.x / 2.0).unwrap();
        assert!(matches!(separability_feasible(&half, &cfg).unwrap().verdict, FeasibilityVerdict::Feasible(_)));
    }

    #[test]
    fn entanglement_of_vacuum_and_squeezed_pairs() {
        let cfg = CertifierConfig::default();
        let vac = entanglement_measure(&GaussianState::vacuum(4), &split4(), &cfg).unwrap();
        assert!(vac.value.abs() <= cfg.tol);
        assert!(vac.bracket_width() <= cfg.tol);
        for e2r in [0.9, 0.5, 0.1] {
            let e = entanglement_measure(&tmsv(e2r), &split2(), &cfg).unwrap();
            assert_abs_diff_eq!(e.value, 1.0 - e2r, epsilon = 1e-5);
        }
    }

    #[test]
    fn certify_classifies() {
        let cfg = CertifierConfig::default();
        let vac = certify(&GaussianState::vacuum(4), &split4(), &cfg).unwrap();
        assert_eq!(vac.classification, Classification::SeparableBoundary);
        assert_abs_diff_eq!(vac.ppt_margin, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vac.physicality, 0.0, epsilon = 1e-12);
        let pair = certify(&tmsv(0.5), &split2(), &cfg).unwrap();
        assert_eq!(pair.classification, Classification::FreeEntangled);
        assert!(pair.e_bracket_width <= cfg.tol);
    }

    #[test]
    fn rejects_unphysical_and_bad_config() {
        let bad: GaussianState = CovarianceMatrix::new(DMatrix::identity(4, 4) * 0.5).unwrap().into();
        assert!(matches!(entanglement_measure(&bad, &split2(), &Default::default()), Err(Error::InvalidState(_))));
        let cfg = CertifierConfig { allow_unphysical: true, ..Default::default() };
        assert!(entanglement_measure(&bad, &split2(), &cfg).is_ok());
        assert!(entanglement_measure(&tmsv(0.5), &split2(), &CertifierConfig::with_tol(0.0)).is_err());
        assert!(SdpFeasibilityProblem::new(&tmsv(0.5), &split2(), -1.0).is_err());
    }

    #[test]
    fn tiny_step_budget_is_indeterminate() {
        let cfg = CertifierConfig { max_newton_steps: 1, ..Default::default() };
        let err = entanglement_measure(&tmsv(0.5), &split2(), &cfg).unwrap_err();
        assert!(matches!(err, Error::Indeterminate { .. }));
    }

    #[test]
    fn exceeds_matches_bisection() {
        let cfg = CertifierConfig::default();
        let state = tmsv(0.7);
        assert!(entanglement_exceeds(&state, &split2(), 0.29, &cfg).unwrap().0);
        assert!(!entanglement_exceeds(&state, &split2(), 0.31, &cfg).unwrap().0);
    }
}
