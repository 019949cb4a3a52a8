//! Nonlinear eigenvalue problem
//! `f(X) = ½⟨X, CX⟩ + ⟨E, X⟩ + (λ/4) ρᵀ C† ρ` with `ρ = diag(X Xᵀ)`.

use super::{check_dims, check_gradient, Problem, SmoothTracker, GRADIENT_PROBES};
use crate::driver::SolverMode;
use crate::error::{Error, Result};
use crate::linalg::{dot, spectral_norm_symmetric, symmetric_eigen, DenseMatrix, WorkingSet};
use crate::subproblem::{QPolicy, RegularizerSpec};

/// Symmetric pseudo-inverse; eigenvalues at or below `rcond · λ_max` are
/// treated as zero.
pub fn pinv_psd(c: &DenseMatrix, rcond: f64) -> Result<DenseMatrix> {
    let eig = symmetric_eigen(c)?;
    let n = c.rows();
    let lmax = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = rcond * lmax;
    let inv: Vec<f64> = eig.values.iter().map(|&v| if v.abs() > cutoff && v != 0.0 { 1.0 / v } else { 0.0 }).collect();
    let mut out = DenseMatrix::zeros(n, n);
    for (k, &s) in inv.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        let u = eig.vectors.column(k);
        for i in 0..n {
            let ui = s * u[i];
            for (o, uj) in out.row_mut(i).iter_mut().zip(&u) {
                *o += ui * uj;
            }
        }
    }
    // Exact symmetry.
    Ok(DenseMatrix::from_fn(n, n, |i, j| 0.5 * (out[(i, j)] + out[(j, i)])))
}

#[derive(Debug, Clone)]
pub struct NlepData {
    pub c: DenseMatrix,
    pub c_pinv: DenseMatrix,
    pub e: DenseMatrix,
    pub lambda: f64,
}

impl NlepData {
    /// Validates `C` (symmetric PSD) and computes its pseudo-inverse.
    pub fn new(c: DenseMatrix, e: DenseMatrix, lambda: f64) -> Result<Self> {
        if !c.is_square() {
            return Err(Error::Shape(format!("C must be square, got {:?}", c.shape())));
        }
        let asym = c.asymmetry();
        if asym > 1e-12 * (1.0 + c.max_abs()) {
            return Err(Error::NotSymmetric(asym));
        }
        if e.rows() != c.rows() {
            return Err(Error::Shape(format!("E has {} rows, C has {}", e.rows(), c.rows())));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("λ must be finite and ≥ 0, got {lambda}")));
        }
        let min_eig = symmetric_eigen(&c)?.values.first().copied().unwrap_or(0.0);
        if min_eig < -1e-8 {
            return Err(Error::NotPsd(min_eig));
        }
        let c_pinv = pinv_psd(&c, 1e-10)?;
        Ok(Self { c, c_pinv, e, lambda })
    }
}

#[derive(Debug, Clone)]
pub struct Nlep {
    data: NlepData,
    r: usize,
    l_f: f64,
}

pub fn make_nlep(data: NlepData, r: usize) -> Result<Nlep> {
    check_dims(&data.c, r)?;
    if data.e.cols() != r {
        return Err(Error::Shape(format!("E has {} columns, expected r = {r}", data.e.cols())));
    }
    let l_f = spectral_norm_symmetric(&data.c, 100, 1e-10)
        + data.lambda * spectral_norm_symmetric(&data.c_pinv, 100, 1e-10) * (r as f64).sqrt();
    let p = Nlep { data, r, l_f };
    check_gradient(&p, GRADIENT_PROBES, 0x41e9)?;
    Ok(p)
}

fn rho(x: &DenseMatrix) -> Vec<f64> {
    (0..x.rows()).map(|i| dot(x.row(i), x.row(i))).collect()
}

impl Nlep {
    pub fn data(&self) -> &NlepData {
        &self.data
    }
}

impl Problem for Nlep {
    fn name(&self) -> &str {
        "nlep"
    }

    fn dims(&self) -> (usize, usize) {
        (self.data.c.rows(), self.r)
    }

    fn regularizer(&self) -> RegularizerSpec {
        RegularizerSpec::Zero
    }

    fn q_policy(&self) -> QPolicy {
        QPolicy::Diagonal(self.l_f)
    }

    fn lipschitz(&self) -> f64 {
        self.l_f
    }

    fn default_mode(&self) -> SolverMode {
        SolverMode::Approx
    }

    fn trig_degree(&self) -> Option<usize> {
        Some(4)
    }

    fn smooth_value(&self, x: &DenseMatrix) -> f64 {
        let d = &self.data;
        let cx = d.c.matmul(x).expect("dimension checked at construction");
        let rho = rho(x);
        let u = d.c_pinv.matvec(&rho);
        0.5 * x.dot(&cx) + d.e.dot(x) + 0.25 * d.lambda * dot(&rho, &u)
    }

    fn smooth_gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        let d = &self.data;
        let cx = d.c.matmul(x).expect("dimension checked at construction");
        let u = d.c_pinv.matvec(&rho(x));
        DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| cx[(i, j)] + d.e[(i, j)] + d.lambda * u[i] * x[(i, j)])
    }

    fn tracker<'a>(&'a self, x: &DenseMatrix) -> Box<dyn SmoothTracker + 'a> {
        let mut t = NlepTracker { data: &self.data, cx: DenseMatrix::zeros(0, 0), rho: Vec::new(), u: Vec::new(), value: 0.0 };
        t.refresh(x);
        Box::new(t)
    }
}

/// Maintains `C X`, `ρ`, `u = C† ρ` and `f`.
struct NlepTracker<'a> {
    data: &'a NlepData,
    cx: DenseMatrix,
    rho: Vec<f64>,
    u: Vec<f64>,
    value: f64,
}

impl SmoothTracker for NlepTracker<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        let d = self.data;
        DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| self.cx[(i, j)] + d.e[(i, j)] + d.lambda * self.u[i] * x[(i, j)])
    }

    fn trial_value(&self, x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]) -> f64 {
        let d = self.data;
        let (i, j) = (block.i, block.j);
        let di: Vec<f64> = new_i.iter().zip(x.row(i)).map(|(a, b)| a - b).collect();
        let dj: Vec<f64> = new_j.iter().zip(x.row(j)).map(|(a, b)| a - b).collect();
        let quad = dot(&di, self.cx.row(i))
            + dot(&dj, self.cx.row(j))
            + 0.5 * (d.c[(i, i)] * dot(&di, &di) + 2.0 * d.c[(i, j)] * dot(&di, &dj) + d.c[(j, j)] * dot(&dj, &dj));
        let lin = dot(&di, d.e.row(i)) + dot(&dj, d.e.row(j));
        let (ri, rj) = (dot(new_i, new_i) - self.rho[i], dot(new_j, new_j) - self.rho[j]);
        let p = &d.c_pinv;
        let quart = 2.0 * (ri * self.u[i] + rj * self.u[j]) + p[(i, i)] * ri * ri + 2.0 * p[(i, j)] * ri * rj + p[(j, j)] * rj * rj;
        self.value + quad + lin + 0.25 * d.lambda * quart
    }

    fn commit(&mut self, x: &DenseMatrix, block: WorkingSet, new_i: &[f64], new_j: &[f64]) {
        self.value = self.trial_value(x, block, new_i, new_j);
        let d = self.data;
        let (i, j) = (block.i, block.j);
        let di: Vec<f64> = new_i.iter().zip(x.row(i)).map(|(a, b)| a - b).collect();
        let dj: Vec<f64> = new_j.iter().zip(x.row(j)).map(|(a, b)| a - b).collect();
        let (ri, rj) = (dot(new_i, new_i) - self.rho[i], dot(new_j, new_j) - self.rho[j]);
        for k in 0..self.cx.rows() {
            let (a, b) = (d.c[(k, i)], d.c[(k, j)]);
            for ((v, p), q) in self.cx.row_mut(k).iter_mut().zip(&di).zip(&dj) {
                *v += a * p + b * q;
            }
            self.u[k] += d.c_pinv[(k, i)] * ri + d.c_pinv[(k, j)] * rj;
        }
        self.rho[i] += ri;
        self.rho[j] += rj;
    }

    fn refresh(&mut self, x: &DenseMatrix) {
        let d = self.data;
        self.cx = d.c.matmul(x).expect("dimension checked at construction");
        self.rho = rho(x);
        self.u = d.c_pinv.matvec(&self.rho);
        self.value = 0.5 * x.dot(&self.cx) + d.e.dot(x) + 0.25 * d.lambda * dot(&self.rho, &self.u);
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

    fn instance(n: usize, r: usize, lambda: f64, seed: u64) -> Nlep {
        let c = covariance(&gen_randn(n + 3, n, seed));
        let e = gen_randn(n, r, seed + 1);
        make_nlep(NlepData::new(c, e, lambda).unwrap(), r).unwrap()
    }

    #[test]
    fn pinv_examples() {
        assert!(pinv_psd(&DenseMatrix::identity(3, 3), 1e-10).unwrap().sub(&DenseMatrix::identity(3, 3)).unwrap().max_abs() < 1e-14);
        let p = pinv_psd(&DenseMatrix::from_diag(&[2.0, 0.0]), 1e-10).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15 && p[(1, 1)].abs() < 1e-15 && p[(0, 1)].abs() < 1e-15);
        let a = gen_randn(3, 6, 2);
        let c = covariance(&a);
        let cp = pinv_psd(&c, 1e-10).unwrap();
        let back = c.matmul(&cp).unwrap().matmul(&c).unwrap();
        assert!(back.sub(&c).unwrap().frobenius_norm() <= 1e-8 * c.frobenius_norm());
    }

    #[test]
    fn rho_example() {
        assert_eq!(rho(&DenseMatrix::identity(3, 2)), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_indefinite() {
        let c = DenseMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(NlepData::new(c, DenseMatrix::zeros(2, 1), 1.0), Err(Error::NotPsd(_))));
    }

    #[test]
    fn gradient_check_with_lambda() {
        let p = instance(8, 2, 2.0, 11);
        assert!(check_gradient(&p, 20, 5).is_ok());
    }

    #[test]
    fn tracker_matches_recompute() {
        let p = instance(9, 3, 1.5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut x = qr_orthonormalize(&gen_randn(9, 3, 7)).unwrap().into_matrix();
        let mut t = p.tracker(&x);
        for _ in 0..50 {
            let i = rng.random_range(0..9);
            let j = (i + rng.random_range(1..9)) % 9;
            let b = WorkingSet::new(i, j).unwrap();
            let ni: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let nj: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let trial = t.trial_value(&x, b, &ni, &nj);
            t.commit(&x, b, &ni, &nj);
            x.row_mut(b.i).copy_from_slice(&ni);
            x.row_mut(b.j).copy_from_slice(&nj);
            let direct = p.smooth_value(&x);
            assert!((trial - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
            assert!(t.gradient(&x).sub(&p.smooth_gradient(&x)).unwrap().max_abs() < 1e-8);
        }
    }
}
