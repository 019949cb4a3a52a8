//! PCA-type objectives `f(X) = −½⟨X, C X⟩` with sparsity or sign
//! regularizers.

use log::warn;

use super::{check_dims, check_gradient, Problem, SmoothTracker, GRADIENT_PROBES};
use crate::error::{Error, Result};
use crate::linalg::{dot, spectral_norm_symmetric, symmetric_eigen, DenseMatrix, WorkingSet};
use crate::subproblem::{QPolicy, RegularizerSpec};

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct QuadraticPca {
    name: String,
    c: DenseMatrix,
    r: usize,
    reg: RegularizerSpec,
    l_f: f64,
    q_policy: QPolicy,
}

fn build(name: &str, c: &DenseMatrix, r: usize, reg: RegularizerSpec) -> Result<QuadraticPca> {
    check_dims(c, r)?;
    reg.validate()?;
    let asym = c.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let n = c.rows();
    let c = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let l_f = spectral_norm_symmetric(&c, 100, 1e-10);
    let min_eig = symmetric_eigen(&c)?.values.first().copied().unwrap_or(0.0);
    // −½⟨X, CX⟩ is concave only for PSD C; otherwise majorize with ‖C‖₂.
    let q_policy = if min_eig >= -1e-10 * (1.0 + l_f) {
        QPolicy::ZeroCurvature
    } else {
        warn!("{name}: C has eigenvalue {min_eig:.3e} < 0, using diagonal curvature {l_f:.3e}");
        QPolicy::Diagonal(l_f.max(-min_eig))
    };
    let p = QuadraticPca { name: name.to_string(), c, r, reg, l_f, q_policy };
    check_gradient(&p, GRADIENT_PROBES, 0x9a7d)?;
    Ok(p)
}

/// Smooth PCA, `h = 0`.
pub fn make_pca(c: &DenseMatrix, r: usize) -> Result<QuadraticPca> {
    build("pca", c, r, RegularizerSpec::Zero)
}

pub fn make_l0_spca(c: &DenseMatrix, lambda: f64, r: usize) -> Result<QuadraticPca> {
    build("l0pca", c, r, RegularizerSpec::L0(lambda))
}

pub fn make_l1_spca(c: &DenseMatrix, lambda: f64, r: usize) -> Result<QuadraticPca> {
    build("l1pca", c, r, RegularizerSpec::L1(lambda))
}

pub fn make_nn_pca(c: &DenseMatrix, r: usize) -> Result<QuadraticPca> {
    build("nnpca", c, r, RegularizerSpec::NonNeg)
}

impl QuadraticPca {
    pub fn covariance(&self) -> &DenseMatrix {
        &self.c
    }

    /// Overrides the curvature policy, e.g. `Diagonal(L_f)` for indefinite `C`.
    pub fn with_q_policy(mut self, policy: QPolicy) -> Self {
        self.q_policy = policy;
        self
    }
}

impl Problem for QuadraticPca {
    fn name(&self) -> &str {
        &self.name
    }

    fn dims(&self) -> (usize, usize) {
        (self.c.rows(), self.r)
    }

    fn regularizer(&self) -> RegularizerSpec {
        self.reg
    }

    fn q_policy(&self) -> QPolicy {
        self.q_policy.clone()
    }

    fn lipschitz(&self) -> f64 {
        self.l_f
    }

    fn trig_degree(&self) -> Option<usize> {
        Some(2)
    }

    fn smooth_value(&self, x: &DenseMatrix) -> f64 {
        let cx = self.c.matmul(x).expect("dimension checked at construction");
        -0.5 * x.dot(&cx)
    }

    fn smooth_gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        self.c.matmul(x).expect("dimension checked at construction").scaled(-1.0)
    }

    fn scoring_subgradient(&self, x: &DenseMatrix, grad: &DenseMatrix) -> DenseMatrix {
        match self.reg {
            RegularizerSpec::L1(lambda) => {
                DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| grad[(i, j)] + if x[(i, j)] >= 0.0 { lambda } else { -lambda })
            }
            _ => grad.clone(),
        }
    }

    fn tracker<'a>(&'a self, x: &DenseMatrix) -> Box<dyn SmoothTracker + 'a> {
        let mut t = PcaTracker { c: &self.c, cx: DenseMatrix::zeros(0, 0), value: 0.0 };
        t.refresh(x);
        Box::new(t)
    }
}

/// Maintains `C X` and `f`.
struct PcaTracker<'a> {
    c: &'a DenseMatrix,
    cx: DenseMatrix,
    value: f64,
}

impl PcaTracker<'_> {
    fn deltas(x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let di = new_i.iter().zip(x.row(block.i)).map(|(a, b)| a - b).collect();
        let dj = new_j.iter().zip(x.row(block.j)).map(|(a, b)| a - b).collect();
        (di, dj)
    }
}

impl SmoothTracker for PcaTracker<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn gradient(&self, _x: &DenseMatrix) -> DenseMatrix {
        self.cx.scaled(-1.0)
    }

    fn trial_value(&self, x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]) -> f64 {
        let (i, j) = (block.i, block.j);
        let (di, dj) = Self::deltas(x, block, new_i, new_j);
        let lin = dot(&di, self.cx.row(i)) + dot(&dj, self.cx.row(j));
        let quad = self.c[(i, i)] * dot(&di, &di) + 2.0 * self.c[(i, j)] * dot(&di, &dj) + self.c[(j, j)] * dot(&dj, &dj);
        self.value - lin - 0.5 * quad
    }

    fn commit(&mut self, x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]) {
        self.value = self.trial_value(x, block, new_i, new_j);
        let (di, dj) = Self::deltas(x, block, new_i, new_j);
        for k in 0..self.cx.rows() {
            let (a, b) = (self.c[(k, block.i)], self.c[(k, block.j)]);
            for ((v, p), q) in self.cx.row_mut(k).iter_mut().zip(&di).zip(&dj) {
                *v += a * p + b * q;
            }
        }
    }

    fn refresh(&mut self, x: &DenseMatrix) {
        self.cx = self.c.matmul(x).expect("dimension checked at construction");
        self.value = -0.5 * x.dot(&self.cx);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qr_orthonormalize;
    use crate::problems::data::{covariance, gen_randn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn identity_covariance_value() {
        let p = make_l0_spca(&DenseMatrix::identity(5, 5), 1.0, 2).unwrap();
        let x = DenseMatrix::identity(5, 2);
        assert_eq!(p.smooth_value(&x), -1.0);
        let p1 = make_l1_spca(&DenseMatrix::identity(5, 5), 0.5, 2).unwrap();
        assert_eq!(p1.objective(&x), -1.0 + 0.5 * 2.0);
    }

    #[test]
    fn l1_with_zero_lambda_matches_l0() {
        let c = covariance(&gen_randn(10, 6, 3));
        let a = make_l1_spca(&c, 0.0, 2).unwrap();
        let b = make_l0_spca(&c, 0.0, 2).unwrap();
        let x = qr_orthonormalize(&gen_randn(6, 2, 9)).unwrap().into_matrix();
        assert_eq!(a.objective(&x), b.objective(&x));
    }

    #[test]
    fn rejects_asymmetric() {
        let c = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(make_l0_spca(&c, 1.0, 1), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn indefinite_covariance_uses_diagonal_curvature() {
        let c = DenseMatrix::from_diag(&[1.0, -2.0, 0.5]);
        let p = make_pca(&c, 1).unwrap();
        assert_eq!(p.q_policy(), QPolicy::Diagonal(2.0));
    }

    #[test]
    fn l1_scoring_sign_convention() {
        let p = make_l1_spca(&DenseMatrix::identity(2, 2), 0.5, 1).unwrap();
        let x = DenseMatrix::from_rows(&[vec![0.0], vec![-1.0]]).unwrap();
        let g = DenseMatrix::zeros(2, 1);
        let s = p.scoring_subgradient(&x, &g);
        assert_eq!(s.as_slice(), &[0.5, -0.5]);
    }

    #[test]
    fn tracker_matches_recompute() {
        let c = covariance(&gen_randn(12, 8, 1));
        let p = make_l0_spca(&c, 0.1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x = qr_orthonormalize(&gen_randn(8, 3, 4)).unwrap().into_matrix();
        let mut t = p.tracker(&x);
        for _ in 0..50 {
            let i = rng.random_range(0..8);
            let j = (i + rng.random_range(1..8)) % 8;
            let b = WorkingSet::new(i, j).unwrap();
            let ni: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let nj: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let trial = t.trial_value(&x, b, &ni, &nj);
            t.commit(&x, b, &ni, &nj);
            x.row_mut(b.i).copy_from_slice(&ni);
            x.row_mut(b.j).copy_from_slice(&nj);
            let direct = p.smooth_value(&x);
            assert!((trial - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
            assert!((t.value() - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
            assert!(t.gradient(&x).sub(&p.smooth_gradient(&x)).unwrap().max_abs() < 1e-9);
        }
    }

    #[test]
    fn majorization_holds_with_zero_curvature() {
        let c = covariance(&gen_randn(20, 7, 5));
        let p = make_l0_spca(&c, 0.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let x = qr_orthonormalize(&gen_randn(7, 2, rng.random())).unwrap();
            let b = WorkingSet::new(rng.random_range(0..3), rng.random_range(3..7)).unwrap();
            let v = crate::linalg::PlanarOrthogonal::rotation(rng.random_range(-3.0..3.0));
            let xp = crate::linalg::apply_planar_update(&x, b, &v).unwrap();
            let g = p.smooth_gradient(x.matrix());
            let delta = xp.matrix().sub(x.matrix()).unwrap();
            let bound = p.smooth_value(x.matrix()) + g.dot(&delta);
            assert!(p.smooth_value(xp.matrix()) <= bound + 1e-9);
        }
    }
}
