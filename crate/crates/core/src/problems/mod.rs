//! Problem instances `F(X) = f(X) + h(X)` on the Stiefel manifold.

pub mod data;
pub mod init;
mod nlep;
mod spca;

pub use nlep::{make_nlep, pinv_psd, Nlep, NlepData};
pub use spca::{make_l0_spca, make_l1_spca, make_nn_pca, make_pca, QuadraticPca};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::driver::SolverMode;
use crate::error::{Error, Result};
use crate::linalg::{qr_orthonormalize, DenseMatrix, WorkingSet};
use crate::subproblem::{QPolicy, RegularizerSpec};

/// A composite objective with a smooth part `f` and separable `h`.
pub trait Problem {
    fn name(&self) -> &str;

    /// `(n, r)`.
    fn dims(&self) -> (usize, usize);

    fn regularizer(&self) -> RegularizerSpec;

    /// Curvature used to majorize `f` in the exact subproblem.
    fn q_policy(&self) -> QPolicy;

    /// Lipschitz constant of `∇f`, used by the OR score.
    fn lipschitz(&self) -> f64;

    fn default_mode(&self) -> SolverMode {
        SolverMode::Exact
    }

    /// Degree of `f` as a trigonometric polynomial along any planar update.
    fn trig_degree(&self) -> Option<usize> {
        None
    }

    fn smooth_value(&self, x: &DenseMatrix) -> f64;

    fn smooth_gradient(&self, x: &DenseMatrix) -> DenseMatrix;

    fn objective(&self, x: &DenseMatrix) -> f64 {
        self.smooth_value(x) + self.regularizer().eval_matrix(x)
    }

    /// The element of `∂F(X)` used by greedy scoring, given `∇f(X)`.
    fn scoring_subgradient(&self, _x: &DenseMatrix, grad: &DenseMatrix) -> DenseMatrix {
        grad.clone()
    }

    /// Incremental evaluator for `f` under two-row changes.
    fn tracker<'a>(&'a self, x: &DenseMatrix) -> Box<dyn SmoothTracker + 'a> {
        Box::new(RecomputeTracker::new(self, x))
    }
}

/// Keeps `f` (and whatever it needs) current while `X` changes two rows at a
/// time.
pub trait SmoothTracker {
    fn value(&self) -> f64;

    fn gradient(&self, x: &DenseMatrix) -> DenseMatrix;

    /// `f` after replacing rows `block.i`, `block.j` of `x` by `new_i`, `new_j`.
    fn trial_value(&self, x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]) -> f64;

    /// Records that replacement; `x` still holds the old rows.
    fn commit(&mut self, x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]);

    /// Recomputes all state from `x`.
    fn refresh(&mut self, x: &DenseMatrix);
}

/// Fallback tracker that re-evaluates `f` from scratch.
pub struct RecomputeTracker<'a, P: ?Sized> {
    problem: &'a P,
    value: f64,
}

impl<'a, P: Problem + ?Sized> RecomputeTracker<'a, P> {
    pub fn new(problem: &'a P, x: &DenseMatrix) -> Self {
        Self { problem, value: problem.smooth_value(x) }
    }
}

fn with_rows(x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]) -> DenseMatrix {
    let mut y = x.clone();
    y.row_mut(block.i).copy_from_slice(new_i);
    y.row_mut(block.j).copy_from_slice(new_j);
    y
}

impl<P: Problem + ?Sized> SmoothTracker for RecomputeTracker<'_, P> {
    fn value(&self) -> f64 {
        self.value
    }

    fn gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        self.problem.smooth_gradient(x)
    }

    fn trial_value(&self, x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]) -> f64 {
        self.problem.smooth_value(&with_rows(x, block, new_i, new_j))
    }

    fn commit(&mut self, x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]) {
        self.value = self.trial_value(x, block, new_i, new_j);
    }

    fn refresh(&mut self, x: &DenseMatrix) {
        self.value = self.problem.smooth_value(x);
    }
}

/// Compares `⟨∇f(X), D⟩` with central differences of `f` along `probes`
/// random directions at random orthonormal points.
pub fn check_gradient(problem: &dyn Problem, probes: usize, seed: u64) -> Result<()> {
    let (n, r) = problem.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 1e-5;
    for _ in 0..probes {
        let x = qr_orthonormalize(&DenseMatrix::from_fn(n, r, |_, _| rng.sample(StandardNormal)))?.into_matrix();
        let d = DenseMatrix::from_fn(n, r, |_, _| rng.sample(StandardNormal));
        let d = d.scaled(1.0 / d.frobenius_norm());
        let g = problem.smooth_gradient(&x);
        let analytic = g.dot(&d);
        let fp = problem.smooth_value(&x.add(&d.scaled(eps))?);
        let fm = problem.smooth_value(&x.sub(&d.scaled(eps))?);
        let numeric = (fp - fm) / (2.0 * eps);
        let f0 = problem.smooth_value(&x);
        let tol = 1e-5 * analytic.abs().max(numeric.abs()) + 1e-9 * (1.0 + f0.abs() + g.frobenius_norm());
        if !((analytic - numeric).abs() <= tol) {
            return Err(Error::GradientMismatch { analytic, numeric });
        }
    }
    Ok(())
}

/// Number of probes run by the problem constructors.
pub const GRADIENT_PROBES: usize = 20;

pub(crate) fn check_dims(c: &DenseMatrix, r: usize) -> Result<()> {
    if !c.is_square() {
        return Err(Error::Shape(format!("expected a square matrix, got {:?}", c.shape())));
    }
    if r == 0 || r > c.rows() {
        return Err(Error::Shape(format!("need 1 ≤ r ≤ n, got r = {r} with n = {}", c.rows())));
    }
    Ok(())
}
