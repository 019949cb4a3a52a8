use super::{planar::rotate_rows, DenseMatrix, PlanarOrthogonal, WorkingSet};
use crate::error::{Error, Result};

/// Default orthonormality tolerance for [`StiefelPoint`].
pub const DEFAULT_TOL_ORTH: f64 = 1e-8;

/// `‖XᵀX − I_r‖_F`.
pub fn gram_residual(x: &DenseMatrix) -> f64 {
    let r = x.cols();
    let mut gram = vec![0.0; r * r];
    for k in 0..x.rows() {
        let row = x.row(k);
        for a in 0..r {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            for b in a..r {
                gram[a * r + b] += ra * row[b];
            }
        }
    }
    let mut sum = 0.0;
    for a in 0..r {
        for b in a..r {
            let d = gram[a * r + b] - if a == b { 1.0 } else { 0.0 };
            sum += if a == b { d * d } else { 2.0 * d * d };
        }
    }
    sum.sqrt()
}

/// An `n × r` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    mat: DenseMatrix,
    tol_orth: f64,
}

impl StiefelPoint {
    /// Wraps a matrix, checking `n ≥ r ≥ 1` and orthonormality within `tol_orth`.
    pub fn new(mat: DenseMatrix, tol_orth: f64) -> Result<Self> {
        let (n, r) = mat.shape();
        if r == 0 || n < r {
            return Err(Error::Shape(format!("Stiefel point needs n ≥ r ≥ 1, got {n}x{r}")));
        }
        let residual = gram_residual(&mat);
        if residual > tol_orth {
            return Err(Error::NotOrthogonal { residual });
        }
        Ok(Self { mat, tol_orth })
    }

    pub fn from_matrix(mat: DenseMatrix) -> Result<Self> {
        Self::new(mat, DEFAULT_TOL_ORTH)
    }

    /// The `n × r` identity block.
    pub fn identity(n: usize, r: usize) -> Result<Self> {
        Self::from_matrix(DenseMatrix::identity(n, r))
    }

    pub(crate) fn from_trusted(mat: DenseMatrix) -> Self {
        Self { mat, tol_orth: DEFAULT_TOL_ORTH }
    }

    pub fn n(&self) -> usize {
        self.mat.rows()
    }

    pub fn r(&self) -> usize {
        self.mat.cols()
    }

    pub fn tol_orth(&self) -> f64 {
        self.tol_orth
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.mat
    }

    pub fn gram_residual(&self) -> f64 {
        gram_residual(&self.mat)
    }

    /// In-place planar update of rows `block.i`, `block.j`.
    pub fn apply_in_place(&mut self, block: WorkingSet, v: &PlanarOrthogonal) {
        if v.is_identity() {
            return;
        }
        rotate_rows(&mut self.mat, block, &v.matrix());
    }
}

/// Thin Householder QR of `m` (`n × r`, `n ≥ r`) returning the orthonormal
/// factor with the sign convention `diag(R) ≥ 0`.
pub fn qr_orthonormalize(m: &DenseMatrix) -> Result<StiefelPoint> {
    let (n, r) = m.shape();
    if r == 0 || n < r {
        return Err(Error::Shape(format!("QR needs n ≥ r ≥ 1, got {n}x{r}")));
    }
    // Column-major working copy.
    let mut w: Vec<Vec<f64>> = (0..r).map(|j| m.column(j)).collect();
    let col_scale = w.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut diag_sign = vec![1.0; r];
    for k in 0..r {
        let x = &w[k][k..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 * col_scale || norm == 0.0 {
            return Err(Error::RankDeficient { column: k });
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = x.to_vec();
        v[0] -= alpha;
        let vnorm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if vnorm > 0.0 {
            v.iter_mut().for_each(|a| *a /= vnorm);
            for col in w.iter_mut().skip(k) {
                let seg = &mut col[k..];
                let proj: f64 = seg.iter().zip(&v).map(|(a, b)| a * b).sum();
                seg.iter_mut().zip(&v).for_each(|(a, b)| *a -= 2.0 * proj * b);
            }
        }
        // R_kk = alpha after reflection.
        diag_sign[k] = if w[k][k] >= 0.0 { 1.0 } else { -1.0 };
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{r-1} applied to the leading identity block.
    let mut q: Vec<Vec<f64>> = (0..r)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, v) in reflectors.iter().enumerate().rev() {
        for col in q.iter_mut() {
            let seg = &mut col[k..];
            let proj: f64 = seg.iter().zip(v).map(|(a, b)| a * b).sum();
            if proj != 0.0 {
                seg.iter_mut().zip(v).for_each(|(a, b)| *a -= 2.0 * proj * b);
            }
        }
    }
    let out = DenseMatrix::from_fn(n, r, |i, j| q[j][i] * diag_sign[j]);
    Ok(StiefelPoint::from_trusted(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{apply_planar_update, Branch};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, r: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, r, |_, _| rng.sample(StandardNormal))
    }

    /// Classical modified Gram–Schmidt; with positive R diagonal the thin QR
    /// factor is unique, so this must agree with the Householder result.
    fn gram_schmidt(m: &DenseMatrix) -> DenseMatrix {
        let (n, r) = m.shape();
        let mut cols: Vec<Vec<f64>> = (0..r).map(|j| m.column(j)).collect();
        for j in 0..r {
            for k in 0..j {
                let proj: f64 = (0..n).map(|i| cols[j][i] * cols[k][i]).sum();
                for i in 0..n {
                    cols[j][i] -= proj * cols[k][i];
                }
            }
            let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            cols[j].iter_mut().for_each(|v| *v /= norm);
        }
        DenseMatrix::from_fn(n, r, |i, j| cols[j][i])
    }

    #[test]
    fn gram_residual_examples() {
        assert_eq!(gram_residual(&DenseMatrix::identity(3, 2)), 0.0);
        let two_i = DenseMatrix::identity(2, 2).scaled(2.0);
        assert!((gram_residual(&two_i) - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        let q = qr_orthonormalize(&gaussian(5, 3, 1)).unwrap();
        assert!(q.gram_residual() <= 1e-12);
    }

    #[test]
    fn qr_examples() {
        let q = qr_orthonormalize(&DenseMatrix::identity(4, 2)).unwrap();
        assert_eq!(q.matrix(), &DenseMatrix::identity(4, 2));
        let q = qr_orthonormalize(&DenseMatrix::from_diag(&[3.0, 5.0])).unwrap();
        assert_eq!(q.matrix(), &DenseMatrix::identity(2, 2));
    }

    #[test]
    fn qr_matches_gram_schmidt() {
        for seed in 0..20 {
            let m = gaussian(6, 3, seed);
            let q = qr_orthonormalize(&m).unwrap();
            assert!(q.gram_residual() <= 1e-12);
            let gs = gram_schmidt(&m);
            assert!(q.matrix().sub(&gs).unwrap().max_abs() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn qr_rejects_rank_deficient() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(qr_orthonormalize(&m), Err(Error::RankDeficient { column: 1 }));
        assert!(qr_orthonormalize(&DenseMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn planar_update_examples() {
        let x = StiefelPoint::identity(3, 2).unwrap();
        let b = WorkingSet::new(0, 1).unwrap();
        let same = apply_planar_update(&x, b, &PlanarOrthogonal::IDENTITY).unwrap();
        assert_eq!(same, x);
        let turned = apply_planar_update(&x, b, &PlanarOrthogonal::rotation(std::f64::consts::FRAC_PI_2)).unwrap();
        let expected = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(turned.matrix().sub(&expected).unwrap().max_abs() < 1e-15);
        assert!(apply_planar_update(&x, WorkingSet { i: 1, j: 3 }, &PlanarOrthogonal::IDENTITY).is_err());
    }

    #[test]
    fn planar_update_preserves_feasibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..200 {
            let x = qr_orthonormalize(&gaussian(4, 2, seed)).unwrap();
            let branch = if rng.random_bool(0.5) { Branch::Rotation } else { Branch::Reflection };
            let v = PlanarOrthogonal::new(branch, rng.random_range(-3.2..3.2));
            let b = WorkingSet::new(1, 3).unwrap();
            let xp = apply_planar_update(&x, b, &v).unwrap();
            assert!(xp.gram_residual() <= x.gram_residual() + 1e-13);
            assert!(xp.gram_residual() <= 1e-12);
            // Untouched rows.
            assert_eq!(xp.matrix().row(0), x.matrix().row(0));
            assert_eq!(xp.matrix().row(2), x.matrix().row(2));
            // Step-size bound.
            let step = xp.matrix().sub(x.matrix()).unwrap().frobenius_norm();
            assert!(step <= v.distance_from_identity() + 1e-13);
        }
    }
}
