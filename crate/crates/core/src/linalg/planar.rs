use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DenseMatrix, StiefelPoint};
use crate::error::{Error, Result};

/// A 2×2 matrix stored as `[[m00, m01], [m10, m11]]`.
pub type Mat2 = [[f64; 2]; 2];

/// The two connected components of the 2×2 orthogonal group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Givens rotation `[[cos, sin], [−sin, cos]]`, determinant +1.
    Rotation,
    /// Jacobi reflection `[[−cos, sin], [sin, cos]]`, determinant −1.
    Reflection,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Rotation, Branch::Reflection];

    /// The 2×2 matrix of this branch built from a cosine/sine pair.
    #[inline]
    pub fn matrix_from_cos_sin(self, c: f64, s: f64) -> Mat2 {
        match self {
            Branch::Rotation => [[c, s], [-s, c]],
            Branch::Reflection => [[-c, s], [s, c]],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Rotation => "rotation",
            Branch::Reflection => "reflection",
        }
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// A 2×2 orthogonal matrix parameterized by branch and angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarOrthogonal {
    pub branch: Branch,
    /// Radians in `(−π, π]`.
    pub angle: f64,
}

impl PlanarOrthogonal {
    pub const IDENTITY: PlanarOrthogonal = PlanarOrthogonal { branch: Branch::Rotation, angle: 0.0 };

    pub fn new(branch: Branch, angle: f64) -> Self {
        Self { branch, angle: wrap_angle(angle) }
    }

    pub fn rotation(angle: f64) -> Self {
        Self::new(Branch::Rotation, angle)
    }

    pub fn reflection(angle: f64) -> Self {
        Self::new(Branch::Reflection, angle)
    }

    pub fn from_cos_sin(branch: Branch, c: f64, s: f64) -> Self {
        Self::new(branch, s.atan2(c))
    }

    /// Recovers the parameterization of an (approximately) orthogonal 2×2
    /// matrix. The branch follows the sign of the determinant.
    pub fn from_matrix(m: &Mat2) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let resid = orthogonality_residual(m);
        if resid > 1e-8 {
            return Err(Error::NotOrthogonal { residual: resid });
        }
        Ok(if det > 0.0 {
            Self::rotation(m[0][1].atan2(m[0][0]))
        } else {
            Self::reflection(m[0][1].atan2(m[1][1]))
        })
    }

    #[inline]
    pub fn cos_sin(&self) -> (f64, f64) {
        if self.angle == 0.0 {
            (1.0, 0.0)
        } else {
            let (s, c) = self.angle.sin_cos();
            (c, s)
        }
    }

    pub fn matrix(&self) -> Mat2 {
        let (c, s) = self.cos_sin();
        self.branch.matrix_from_cos_sin(c, s)
    }

    pub fn transpose(&self) -> Self {
        match self.branch {
            Branch::Rotation => Self::rotation(-self.angle),
            // Reflections of this form are symmetric.
            Branch::Reflection => *self,
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = self.matrix();
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// `‖M − I₂‖_F`, the size of the planar step.
    pub fn distance_from_identity(&self) -> f64 {
        let m = self.matrix();
        ((m[0][0] - 1.0).powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + (m[1][1] - 1.0).powi(2)).sqrt()
    }

    pub fn is_identity(&self) -> bool {
        self.branch == Branch::Rotation && self.angle == 0.0
    }
}

/// `‖MᵀM − I₂‖_F` for a 2×2 matrix.
pub fn orthogonality_residual(m: &Mat2) -> f64 {
    let g00 = m[0][0] * m[0][0] + m[1][0] * m[1][0] - 1.0;
    let g11 = m[0][1] * m[0][1] + m[1][1] * m[1][1] - 1.0;
    let g01 = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    (g00 * g00 + g11 * g11 + 2.0 * g01 * g01).sqrt()
}

/// Unordered pair of row indices `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WorkingSet {
    pub i: usize,
    pub j: usize,
}

impl WorkingSet {
    /// Orders the pair; rejects equal indices.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Self { i: a, j: b }),
            std::cmp::Ordering::Greater => Ok(Self { i: b, j: a }),
            std::cmp::Ordering::Equal => {
                Err(Error::InvalidArgument(format!("working set needs two distinct rows, got ({a}, {a})")))
            }
        }
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if self.i < self.j && self.j < n {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("working set ({}, {}) invalid for {} rows", self.i, self.j, n)))
        }
    }
}

/// Replaces rows `i, j` of `x` with `M · [row_i; row_j]`.
pub fn rotate_rows(x: &mut DenseMatrix, block: WorkingSet, m: &Mat2) {
    let (ri, rj) = x.two_rows_mut(block.i, block.j);
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = m[0][0] * u + m[0][1] * v;
        *b = m[1][0] * u + m[1][1] * v;
    }
}

/// The feasibility-preserving update `X⁺(B,:) = V · X(B,:)`; all other rows
/// are copied unchanged.
pub fn apply_planar_update(x: &StiefelPoint, block: WorkingSet, v: &PlanarOrthogonal) -> Result<StiefelPoint> {
    block.check(x.n())?;
    let mut out = x.clone();
    out.apply_in_place(block, v);
    Ok(out)
}

/// Minimizes `⟨V, P⟩` over all 2×2 orthogonal `V`, returning the minimizer
/// and the minimum. Equivalent to projecting `−P` onto the orthogonal group.
///
/// When the two branches tie, the rotation wins; a zero linear part gives the
/// identity.
pub fn nearest_orthogonal_2x2(p: &Mat2) -> (PlanarOrthogonal, f64) {
    // ⟨R_φ, P⟩ = a_r cos φ + b_r sin φ and likewise for F_φ.
    let (a_r, b_r) = (p[0][0] + p[1][1], p[0][1] - p[1][0]);
    let (a_f, b_f) = (p[1][1] - p[0][0], p[0][1] + p[1][0]);
    let best = |branch: Branch, a: f64, b: f64| {
        let norm = a.hypot(b);
        if norm == 0.0 {
            (PlanarOrthogonal::new(branch, 0.0), 0.0)
        } else {
            (PlanarOrthogonal::from_cos_sin(branch, -a / norm, -b / norm), -norm)
        }
    };
    let rot = best(Branch::Rotation, a_r, b_r);
    let refl = best(Branch::Reflection, a_f, b_f);
    let scale = 1.0 + p.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if refl.1 < rot.1 - 1e-14 * scale {
        refl
    } else {
        rot
    }
}

/// Kronecker product with the standard block layout
/// `(A⊗B)[i·p + k, j·q + l] = A[i,j]·B[k,l]`.
pub fn kron_small(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (p, q) = b.shape();
    DenseMatrix::from_fn(a.rows() * p, a.cols() * q, |r, c| a[(r / p, c / q)] * b[(r % p, c % q)])
}
