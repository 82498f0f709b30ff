//! Small dense linear matrix inequalities and a log-det barrier method.
//!
//! Problems have the form: maximize `c·y` subject to
//! `F(y) = F₀ + Σᵢ yᵢ Fᵢ ≻ 0`, where `F` is block diagonal and every `Fᵢ`
//! is sparse. Gradient and Hessian of `log det F` are assembled entrywise from
//! `W = F⁻¹`, so one Newton step costs a few small Cholesky factorizations.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// One symmetric contribution `value · (e_row e_colᵀ + e_col e_rowᵀ) / (1 + δ_row,col)`
/// to a coefficient matrix, i.e. `value` lands at `(row, col)` and `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Entry {
    pub fn new(block: usize, row: usize, col: usize, value: f64) -> Self {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        Entry { block, row, col, value }
    }

    // Weight in the symmetrized outer-product basis.
    fn half_weight(&self) -> f64 {
        if self.row == self.col {
            0.5 * self.value
        } else {
            self.value
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lmi {
    constant: Vec<DMatrix<f64>>,
    coefficients: Vec<Vec<Entry>>,
}

impl Lmi {
    pub fn new(constant: Vec<DMatrix<f64>>) -> Self {
        Lmi { constant, coefficients: Vec::new() }
    }

    pub fn add_variable(&mut self, mut entries: Vec<Entry>) -> usize {
        entries.sort_by_key(|e| e.block);
        self.coefficients.push(entries);
        self.coefficients.len() - 1
    }

    pub fn set_constant(&mut self, block: usize, matrix: DMatrix<f64>) {
        assert_eq!(matrix.shape(), self.constant[block].shape());
        self.constant[block] = matrix;
    }

    pub fn n_vars(&self) -> usize {
        self.coefficients.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.constant.len()
    }

    /// Barrier parameter ν: the total size of all blocks.
    pub fn barrier_degree(&self) -> usize {
        self.constant.iter().map(|b| b.nrows()).sum()
    }

    pub fn evaluate(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut blocks = self.constant.clone();
        for (coeffs, &yi) in self.coefficients.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for e in coeffs {
                let b = &mut blocks[e.block];
                b[(e.row, e.col)] += yi * e.value;
                if e.row != e.col {
                    b[(e.col, e.row)] += yi * e.value;
                }
            }
        }
        blocks
    }

    /// Smallest eigenvalue over all blocks of `F(y)`.
    pub fn min_eigenvalue(&self, y: &DVector<f64>) -> f64 {
        self.evaluate(y).into_iter().map(crate::gaussian::min_symmetric_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    fn inverses(&self, y: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        self.evaluate(y).into_iter().map(|b| Cholesky::<f64, Dyn>::new(b).map(|c| c.inverse())).collect()
    }

    /// `-τ c·y - log det F(y)`, or `None` outside the interior.
    fn barrier_value(&self, c: &DVector<f64>, tau: f64, y: &DVector<f64>) -> Option<f64> {
        let mut logdet = 0.0;
        for b in self.evaluate(y) {
            let ch = Cholesky::<f64, Dyn>::new(b)?;
            logdet += 2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        }
        Some(-tau * c.dot(y) - logdet)
    }

    /// Gradient of `log det F` and Hessian of `-log det F`.
    fn derivatives(&self, w: &[DMatrix<f64>]) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.n_vars();
        let mut grad = DVector::zeros(m);
        let mut hess = DMatrix::zeros(m, m);
        for (i, ci) in self.coefficients.iter().enumerate() {
            grad[i] = ci.iter().map(|e| 2.0 * e.half_weight() * w[e.block][(e.row, e.col)]).sum();
            for j in i..m {
                let cj = &self.coefficients[j];
                let mut h = 0.0;
                for p in ci {
                    let wb = &w[p.block];
                    let (a, b) = (p.row, p.col);
                    let vp = p.half_weight();
                    for q in cj.iter().filter(|q| q.block == p.block) {
                        let (c, d) = (q.row, q.col);
                        h += vp * q.half_weight() * (wb[(b, c)] * wb[(a, d)] + wb[(b, d)] * wb[(a, c)]);
                    }
                }
                hess[(i, j)] = 2.0 * h;
                hess[(j, i)] = 2.0 * h;
            }
        }
        (grad, hess)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    pub max_newton_steps: usize,
    pub initial_tau: f64,
    pub tau_growth: f64,
    /// Newton decrement below which a point counts as centered.
    pub centering_tol: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions { max_newton_steps: 500, initial_tau: 1.0, tau_growth: 100.0, centering_tol: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdStatus {
    /// An interior point with objective at or above the threshold was found.
    Above,
    /// The optimum is certified to lie below the threshold.
    Below,
    /// The optimum was bracketed to within the requested gap.
    Converged,
    /// Step budget exhausted or numerical breakdown.
    Undecided,
}

#[derive(Debug, Clone)]
pub struct ThresholdOutcome {
    pub status: ThresholdStatus,
    /// Last iterate; always strictly interior.
    pub y: DVector<f64>,
    /// `c·y` at the last iterate: a lower bound on the optimum.
    pub objective: f64,
    /// Upper bound on the optimum from the last centered point.
    pub upper_bound: f64,
    pub newton_steps: usize,
}

/// Maximizes `c·y` over the interior of the LMI starting from the strictly
/// feasible `y0`, stopping as soon as the optimum is known to be above or below
/// `threshold` or is bracketed to within `gap_tol`. An infinite threshold
/// asks for plain optimization.
pub fn maximize_until(
    lmi: &Lmi,
    c: &DVector<f64>,
    y0: DVector<f64>,
    threshold: f64,
    gap_tol: f64,
    opts: &BarrierOptions,
) -> ThresholdOutcome {
    let nu = lmi.barrier_degree() as f64;
    let mut tau = opts.initial_tau;
    let mut y = y0;
    let mut steps = 0;
    let mut upper = f64::INFINITY;
    let finish = |status, y: DVector<f64>, upper, steps| {
        let objective = c.dot(&y);
        ThresholdOutcome { status, y, objective, upper_bound: upper, newton_steps: steps }
    };

    loop {
        let Some(mut fy) = lmi.barrier_value(c, tau, &y) else {
            return finish(ThresholdStatus::Undecided, y, upper, steps);
        };
        let decrement = loop {
            if c.dot(&y) >= threshold {
                return finish(ThresholdStatus::Above, y, upper, steps);
            }
            if steps >= opts.max_newton_steps {
                return finish(ThresholdStatus::Undecided, y, upper, steps);
            }
            let Some(w) = lmi.inverses(&y) else {
                return finish(ThresholdStatus::Undecided, y, upper, steps);
            };
            let (g, h) = lmi.derivatives(&w);
            let grad = -(c * tau) - g;
            let Some(dir) = newton_direction(h, &grad) else {
                return finish(ThresholdStatus::Undecided, y, upper, steps);
            };
            let lambda = (-grad.dot(&dir)).max(0.0).sqrt();
            if lambda < opts.centering_tol {
                break lambda;
            }
            // Backtracking on the barrier objective; the damped step
            // 1/(1+λ) is the fallback guaranteed by self-concordance.
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let trial = &y + &dir * step;
                if let Some(ft) = lmi.barrier_value(c, tau, &trial) {
                    if ft <= fy - 0.25 * step * lambda * lambda {
                        accepted = Some((trial, ft));
                        break;
                    }
                }
                step *= 0.5;
            }
            let (next, f_next) = match accepted {
                Some(a) => a,
                None => {
                    let trial = &y + &dir * (1.0 / (1.0 + lambda));
                    match lmi.barrier_value(c, tau, &trial) {
                        Some(ft) => (trial, ft),
                        None => return finish(ThresholdStatus::Undecided, y, upper, steps),
                    }
                }
            };
            fy = f_next;
            y = next;
            steps += 1;
        };
        let objective = c.dot(&y);
        let slack = (nu + nu.sqrt() * decrement / (1.0 - decrement)) / tau;
        upper = upper.min(objective + slack);
        if upper - objective <= gap_tol {
            return finish(ThresholdStatus::Converged, y, upper, steps);
        }
        if threshold.is_finite() && upper < threshold {
            return finish(ThresholdStatus::Below, y, upper, steps);
        }
        tau *= opts.tau_growth;
    }
}

fn newton_direction(mut h: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let rhs = -grad;
    if let Some(ch) = Cholesky::new(h.clone()) {
        return Some(ch.solve(&rhs));
    }
    let shift = 1e-12 * h.diagonal().amax().max(1.0);
    for i in 0..h.nrows() {
        h[(i, i)] += shift;
    }
    Cholesky::new(h).map(|ch| ch.solve(&rhs))
}
