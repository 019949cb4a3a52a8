//! The two-row subproblem
//!
//! `min_V ½ vec(V)ᵀ Q vec(V) + ⟨V, P⟩ + h(V Z)` over 2×2 orthogonal `V`,
//! where `vec` stacks columns. Each branch of the orthogonal group reduces
//! it to a one-dimensional problem in `(cos φ, sin φ)`:
//!
//! `a c + b s + w c² + d c s + e + h(c x + s y)`.

mod bsm;
mod fim;

pub use bsm::{bsm_solve, enumerate_breakpoints, Breakpoints, SignCase};
pub use fim::{fim_solve, fit_harmonics, Harmonics};

use crate::error::{Error, Result};
use crate::linalg::{dot, kron_small, Branch, DenseMatrix, Mat2, StiefelPoint, WorkingSet};

/// Entries with magnitude at or below this count as zero for `L0`.
pub const L0_ZERO_TOL: f64 = 1e-12;
/// Entries down to `−NONNEG_TOL` count as nonnegative.
pub const NONNEG_TOL: f64 = 1e-12;

pub type Mat4 = [[f64; 4]; 4];

/// The separable nonsmooth part `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularizerSpec {
    Zero,
    L0(f64),
    L1(f64),
    NonNeg,
}

impl RegularizerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RegularizerSpec::L0(l) | RegularizerSpec::L1(l) if !(l >= 0.0 && l.is_finite()) => {
                Err(Error::InvalidArgument(format!("regularization weight must be finite and ≥ 0, got {l}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, RegularizerSpec::Zero)
    }

    /// `h` summed over a slice of entries; `+∞` when a nonnegativity
    /// constraint is violated.
    pub fn eval_entries<'a>(&self, entries: impl IntoIterator<Item = &'a f64>) -> f64 {
        match *self {
            RegularizerSpec::Zero => 0.0,
            RegularizerSpec::L0(l) => l * entries.into_iter().filter(|v| v.abs() > L0_ZERO_TOL).count() as f64,
            RegularizerSpec::L1(l) => l * entries.into_iter().map(|v| v.abs()).sum::<f64>(),
            RegularizerSpec::NonNeg => {
                if entries.into_iter().any(|&v| v < -NONNEG_TOL) {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval_matrix(&self, x: &DenseMatrix) -> f64 {
        self.eval_entries(x.as_slice())
    }
}

/// Curvature model for the smooth part.
#[derive(Debug, Clone, PartialEq)]
pub enum QPolicy {
    /// `H = 0`: the quadratic term vanishes.
    ZeroCurvature,
    /// `Q = ς I₄`.
    Diagonal(f64),
    /// `Q = (Z H1 Zᵀ) ⊗ H2(B, B)` with `H1` of size r×r and `H2` of size n×n.
    Kronecker { h1: DenseMatrix, h2: DenseMatrix },
}

/// The data `(P, Q, Z)` of one block subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel {
    pub p: Mat2,
    pub q: Option<Mat4>,
    /// Rows `B` of `X`, 2×r.
    pub z: DenseMatrix,
}

/// Builds `P = [∇f Xᵀ]_BB − mat(Q vec I₂) − θ I₂`, `Q` and `Z = X(B, :)`.
pub fn assemble_pqz(
    grad: &DenseMatrix,
    x: &StiefelPoint,
    block: WorkingSet,
    policy: &QPolicy,
    theta_prox: f64,
) -> Result<BlockModel> {
    let xm = x.matrix();
    if grad.shape() != xm.shape() {
        return Err(Error::Shape(format!("gradient {:?} vs point {:?}", grad.shape(), xm.shape())));
    }
    block.check(x.n())?;
    let rows = [block.i, block.j];
    let mut p = [[0.0; 2]; 2];
    for (a, &ra) in rows.iter().enumerate() {
        for (b, &rb) in rows.iter().enumerate() {
            p[a][b] = dot(grad.row(ra), xm.row(rb));
        }
    }
    let z = DenseMatrix::from_fn(2, x.r(), |a, k| xm[(rows[a], k)]);
    let q = match policy {
        QPolicy::ZeroCurvature => None,
        QPolicy::Diagonal(sigma) => {
            let mut q = [[0.0; 4]; 4];
            for (k, row) in q.iter_mut().enumerate() {
                row[k] = *sigma;
            }
            Some(q)
        }
        QPolicy::Kronecker { h1, h2 } => {
            if h1.shape() != (x.r(), x.r()) || h2.shape() != (x.n(), x.n()) {
                return Err(Error::Shape("Kronecker curvature factors do not match the point".into()));
            }
            let zh = z.matmul(h1)?.matmul(&z.transpose())?;
            let h2bb = DenseMatrix::from_fn(2, 2, |a, b| h2[(rows[a], rows[b])]);
            let k = kron_small(&zh, &h2bb);
            let mut q = [[0.0; 4]; 4];
            for (a, row) in q.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v = k[(a, b)];
                }
            }
            Some(q)
        }
    };
    if let Some(q) = &q {
        // mat(Q vec I₂), with vec I₂ = [1, 0, 0, 1].
        let u: Vec<f64> = (0..4).map(|a| q[a][0] + q[a][3]).collect();
        p[0][0] -= u[0];
        p[1][0] -= u[1];
        p[0][1] -= u[2];
        p[1][1] -= u[3];
    }
    p[0][0] -= theta_prox;
    p[1][1] -= theta_prox;
    Ok(BlockModel { p, q, z })
}

/// One branch of the subproblem in reduced form
/// `a c + b s + w c² + d c s + e_const + h(c x + s y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemCoeffs {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub w: f64,
    pub e_const: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub branch: Branch,
}

pub fn branch_coefficients(p: &Mat2, q: Option<&Mat4>, z: &DenseMatrix, branch: Branch) -> SubproblemCoeffs {
    let sg = match branch {
        Branch::Rotation => 1.0,
        Branch::Reflection => -1.0,
    };
    let a = p[1][1] + sg * p[0][0];
    let b = p[0][1] - sg * p[1][0];
    let (c, e, d) = match q {
        None => (0.0, 0.0, 0.0),
        Some(q) => (
            0.5 * (q[0][0] + q[3][3]) + sg * q[0][3],
            0.5 * (q[1][1] + q[2][2]) - sg * q[1][2],
            -q[0][1] + sg * q[0][2] - sg * q[1][3] + q[2][3],
        ),
    };
    let (z1, z2) = (z.row(0), z.row(1));
    let x: Vec<f64> = z1.iter().map(|v| sg * v).chain(z2.iter().copied()).collect();
    let y: Vec<f64> = z2.iter().copied().chain(z1.iter().map(|v| -sg * v)).collect();
    SubproblemCoeffs { a, b, d, w: c - e, e_const: e, x, y, branch }
}

/// The reduced objective at `(c, s)` on the unit circle.
pub fn eval_reduced_objective(c: f64, s: f64, coeffs: &SubproblemCoeffs, reg: &RegularizerSpec) -> f64 {
    let smooth = coeffs.a * c + coeffs.b * s + coeffs.w * c * c + coeffs.d * c * s + coeffs.e_const;
    let h = match *reg {
        RegularizerSpec::Zero => 0.0,
        _ => {
            let v: Vec<f64> = coeffs.x.iter().zip(&coeffs.y).map(|(xi, yi)| c * xi + s * yi).collect();
            reg.eval_entries(&v)
        }
    };
    smooth + h
}

/// Direct evaluation of `½ vec(V)ᵀ Q vec(V) + ⟨V, P⟩ + h(V Z)`.
pub fn eval_block_objective(v: &Mat2, model: &BlockModel, reg: &RegularizerSpec) -> f64 {
    let lin: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| v[a][b] * model.p[a][b]).sum();
    let quad = model.q.as_ref().map_or(0.0, |q| {
        let vec = [v[0][0], v[1][0], v[0][1], v[1][1]];
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                acc += vec[a] * q[a][b] * vec[b];
            }
        }
        0.5 * acc
    });
    let r = model.z.cols();
    let vz: Vec<f64> = (0..2)
        .flat_map(|a| (0..r).map(move |k| (a, k)))
        .map(|(a, k)| v[a][0] * model.z[(0, k)] + v[a][1] * model.z[(1, k)])
        .collect();
    quad + lin + reg.eval_entries(&vz)
}
