//! Breakpoint search: global minimization of the reduced subproblem.
//!
//! With `(c, s) = σ(1, t)/√(1+t²)` the smooth part becomes
//! `(a + b t)/√(1+t²) + (w + d t)/(1+t²)` up to the sign `σ` on `a, b`.
//! Its stationary points solve a quartic obtained by squaring, the kinks of
//! `h` sit at `t = −x_i/y_i`, and the two poles `c = 0` are added separately.

use super::{eval_reduced_objective, RegularizerSpec, SubproblemCoeffs, NONNEG_TOL};
use crate::error::{Error, Result};
use crate::linalg::{Branch, PlanarOrthogonal};
use crate::quartic::{real_roots, QuarticPoly};

/// The sign `σ` of `cos φ` in the tangent substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SignCase {
    Plus,
    Minus,
}

impl SignCase {
    pub const BOTH: [SignCase; 2] = [SignCase::Plus, SignCase::Minus];

    pub fn sigma(self) -> f64 {
        match self {
            SignCase::Plus => 1.0,
            SignCase::Minus => -1.0,
        }
    }
}

/// Candidate `t` values for one branch and sign case.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints {
    pub candidates: Vec<f64>,
    /// No feasible `t` exists (nonnegativity only).
    pub infeasible: bool,
}

/// Stationarity quartic of `(A + B t)/√(1+t²) + (w + d t)/(1+t²)`.
fn stationarity_quartic(a: f64, b: f64, w: f64, d: f64) -> QuarticPoly {
    QuarticPoly::new(
        d * d - a * a,
        4.0 * w * d + 2.0 * a * b,
        4.0 * w * w - 2.0 * d * d - a * a - b * b,
        -4.0 * w * d + 2.0 * a * b,
        d * d - b * b,
    )
}

fn stationary_points(a: f64, b: f64, w: f64, d: f64) -> Vec<f64> {
    real_roots(&stationarity_quartic(a, b, w, d)).unwrap_or_default()
}

pub fn enumerate_breakpoints(coeffs: &SubproblemCoeffs, reg: &RegularizerSpec, case: SignCase) -> Breakpoints {
    let sg = case.sigma();
    let (a, b, w, d) = (sg * coeffs.a, sg * coeffs.b, coeffs.w, coeffs.d);
    let n = coeffs.x.len();
    let kinks = || -> Vec<f64> {
        coeffs
            .x
            .iter()
            .zip(&coeffs.y)
            .filter(|(_, &yi)| yi != 0.0)
            .map(|(xi, yi)| -xi / yi)
            .filter(|t| t.is_finite())
            .collect()
    };
    match *reg {
        RegularizerSpec::Zero => {
            let c = stationary_points(a, b, w, d);
            assert!(c.len() <= 4);
            Breakpoints { candidates: c, infeasible: false }
        }
        RegularizerSpec::L0(_) => {
            let mut c = kinks();
            c.extend(stationary_points(a, b, w, d));
            assert!(c.len() <= n + 4);
            Breakpoints { candidates: c, infeasible: false }
        }
        RegularizerSpec::L1(lambda) => {
            let mut z = kinks();
            z.sort_by(f64::total_cmp);
            z.dedup();
            // One interior probe per interval between consecutive kinks.
            let mut probes = Vec::with_capacity(z.len() + 1);
            match (z.first(), z.last()) {
                (Some(&lo), Some(&hi)) => {
                    probes.push(lo - 1.0);
                    probes.extend(z.windows(2).map(|p| 0.5 * (p[0] + p[1])).filter(|m| m.is_finite()));
                    probes.push(hi + 1.0);
                }
                _ => probes.push(0.0),
            }
            let mut c = z.clone();
            for m in probes {
                let (mut ax, mut by) = (0.0, 0.0);
                for (xi, yi) in coeffs.x.iter().zip(&coeffs.y) {
                    let (xs, ys) = (sg * xi, sg * yi);
                    let o = xs + m * ys;
                    if o > 0.0 {
                        ax += xs;
                        by += ys;
                    } else if o < 0.0 {
                        ax -= xs;
                        by -= ys;
                    }
                }
                c.extend(stationary_points(a + lambda * ax, b + lambda * by, w, d));
            }
            assert!(c.len() <= n + (2 * n + 1) * 4);
            Breakpoints { candidates: c, infeasible: false }
        }
        RegularizerSpec::NonNeg => {
            let (mut lb, mut ub) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut infeasible = false;
            for (xi, yi) in coeffs.x.iter().zip(&coeffs.y) {
                let (xs, ys) = (sg * xi, sg * yi);
                if ys > 0.0 {
                    lb = lb.max(-xs / ys);
                } else if ys < 0.0 {
                    ub = ub.min(-xs / ys);
                } else if xs < -NONNEG_TOL {
                    infeasible = true;
                }
            }
            if infeasible || lb > ub {
                Breakpoints { candidates: Vec::new(), infeasible: true }
            } else {
                let mut c: Vec<f64> = stationary_points(a, b, w, d).into_iter().map(|t| t.clamp(lb, ub)).collect();
                c.extend([lb, ub].into_iter().filter(|t| t.is_finite()));
                assert!(c.len() <= 6);
                Breakpoints { candidates: c, infeasible: false }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    branch: Branch,
    c: f64,
    s: f64,
    angle: f64,
}

fn push_candidate(out: &mut Vec<Candidate>, branch: Branch, c: f64, s: f64) {
    out.push(Candidate { branch, c, s, angle: s.atan2(c) });
}

/// Global minimizer of the subproblem over the branches supplied. Passing
/// `None` for the reflection restricts the search to rotations.
pub fn bsm_solve(
    rotation: &SubproblemCoeffs,
    reflection: Option<&SubproblemCoeffs>,
    reg: &RegularizerSpec,
) -> Result<(PlanarOrthogonal, f64)> {
    let mut cands: Vec<Candidate> = Vec::new();
    let mut branches: Vec<&SubproblemCoeffs> = vec![rotation];
    branches.extend(reflection);
    for coeffs in &branches {
        for case in SignCase::BOTH {
            let bp = enumerate_breakpoints(coeffs, reg, case);
            let sg = case.sigma();
            for t in bp.candidates {
                let h = t.hypot(1.0);
                push_candidate(&mut cands, coeffs.branch, sg / h, sg * t / h);
            }
        }
        for (c, s) in [(0.0, 1.0), (0.0, -1.0), (1.0, 0.0), (-1.0, 0.0)] {
            push_candidate(&mut cands, coeffs.branch, c, s);
        }
    }
    cands.sort_by(|p, q| p.branch.cmp(&q.branch).then(p.angle.total_cmp(&q.angle)));

    let mut best: Option<(Candidate, f64)> = None;
    let values: Vec<f64> = cands
        .iter()
        .map(|cd| {
            let coeffs = if cd.branch == rotation.branch { rotation } else { reflection.unwrap_or(rotation) };
            eval_reduced_objective(cd.c, cd.s, coeffs, reg)
        })
        .collect();
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !vmin.is_finite() {
        return Err(Error::InfeasibleSubproblem);
    }
    let tol = 1e-14 * (1.0 + vmin.abs());
    for (cd, &v) in cands.iter().zip(&values) {
        if v > vmin + tol {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, _)) => (cd.branch, cd.angle.abs()) < (b.branch, b.angle.abs()),
        };
        if better {
            best = Some((*cd, v));
        }
    }
    let (cd, _) = best.ok_or(Error::InfeasibleSubproblem)?;
    let v = PlanarOrthogonal::from_cos_sin(cd.branch, cd.c, cd.s);
    let (c, s) = v.cos_sin();
    let coeffs = if cd.branch == rotation.branch { rotation } else { reflection.unwrap_or(rotation) };
    Ok((v, eval_reduced_objective(c, s, coeffs, reg)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{nearest_orthogonal_2x2, DenseMatrix};
    use crate::subproblem::branch_coefficients;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn coeffs(p: [[f64; 2]; 2], z: &DenseMatrix) -> (SubproblemCoeffs, SubproblemCoeffs) {
        (branch_coefficients(&p, None, z, Branch::Rotation), branch_coefficients(&p, None, z, Branch::Reflection))
    }

    fn grid_min(rot: &SubproblemCoeffs, refl: &SubproblemCoeffs, reg: &RegularizerSpec, m: usize) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..m {
            let (s, c) = (2.0 * PI * k as f64 / m as f64).sin_cos();
            best = best.min(eval_reduced_objective(c, s, rot, reg)).min(eval_reduced_objective(c, s, refl, reg));
        }
        best
    }

    #[test]
    fn trace_maximization() {
        let z = DenseMatrix::zeros(2, 1);
        let (rot, refl) = coeffs([[-1.0, 0.0], [0.0, -1.0]], &z);
        let (v, q) = bsm_solve(&rot, Some(&refl), &RegularizerSpec::Zero).unwrap();
        assert!(v.is_identity());
        assert_eq!(q, -2.0);
        let (nv, nq) = nearest_orthogonal_2x2(&[[-1.0, 0.0], [0.0, -1.0]]);
        assert_eq!((nv, nq), (v, q));
    }

    #[test]
    fn matches_nearest_orthogonal_for_linear_objectives() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = DenseMatrix::zeros(2, 2);
        for _ in 0..500 {
            let mut p = [[0.0; 2]; 2];
            p.iter_mut().flatten().for_each(|v| *v = rng.sample(StandardNormal));
            let (rot, refl) = coeffs(p, &z);
            let (_, q) = bsm_solve(&rot, Some(&refl), &RegularizerSpec::Zero).unwrap();
            let (_, nq) = nearest_orthogonal_2x2(&p);
            assert!((q - nq).abs() < 1e-12, "{q} vs {nq}");
        }
    }

    #[test]
    fn l0_kink_enumeration() {
        let c = SubproblemCoeffs { a: 0.0, b: 0.0, d: 0.0, w: 0.0, e_const: 0.0, x: vec![1.0, 2.0], y: vec![1.0, 1.0], branch: Branch::Rotation };
        let mut bp = enumerate_breakpoints(&c, &RegularizerSpec::L0(1.0), SignCase::Plus).candidates;
        bp.sort_by(f64::total_cmp);
        assert_eq!(bp, vec![-2.0, -1.0]);
    }

    #[test]
    fn nonneg_bounds() {
        let c = SubproblemCoeffs { a: 0.0, b: 1.0, d: 0.0, w: 0.0, e_const: 0.0, x: vec![1.0, -1.0], y: vec![1.0, 1.0], branch: Branch::Rotation };
        let bp = enumerate_breakpoints(&c, &RegularizerSpec::NonNeg, SignCase::Plus);
        assert!(!bp.infeasible);
        assert!(bp.candidates.contains(&1.0));
        assert!(bp.candidates.iter().all(|&t| t >= 1.0));
        let bad = SubproblemCoeffs { x: vec![-1.0], y: vec![0.0], ..c };
        assert!(enumerate_breakpoints(&bad, &RegularizerSpec::NonNeg, SignCase::Plus).infeasible);
    }

    #[test]
    fn l1_candidate_count_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let z = DenseMatrix::from_fn(2, 2, |_, _| rng.sample(StandardNormal));
        let (rot, _) = coeffs([[0.3, -0.2], [1.1, 0.5]], &z);
        let bp = enumerate_breakpoints(&rot, &RegularizerSpec::L1(0.5), SignCase::Minus);
        assert!(bp.candidates.len() <= 2 * 2 + (4 * 2 + 1) * 4);
    }

    #[test]
    fn beats_grid_for_each_regularizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..40 {
            let r = [1, 3, 5][case % 3];
            let mut p = [[0.0; 2]; 2];
            p.iter_mut().flatten().for_each(|v| *v = rng.sample(StandardNormal));
            let z = DenseMatrix::from_fn(2, r, |_, _| rng.sample(StandardNormal));
            let (rot, refl) = coeffs(p, &z);
            for reg in [RegularizerSpec::Zero, RegularizerSpec::L0(0.3), RegularizerSpec::L1(0.5)] {
                let (_, q) = bsm_solve(&rot, Some(&refl), &reg).unwrap();
                assert!(q <= grid_min(&rot, &refl, &reg, 20_000) + 1e-6, "{reg:?} case {case}");
            }
        }
    }

    #[test]
    fn nonneg_result_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = DenseMatrix::identity(2, 2);
        for _ in 0..200 {
            let mut p = [[0.0; 2]; 2];
            p.iter_mut().flatten().for_each(|v| *v = rng.sample(StandardNormal));
            let (rot, refl) = coeffs(p, &z);
            let (v, q) = bsm_solve(&rot, Some(&refl), &RegularizerSpec::NonNeg).unwrap();
            let (c, s) = v.cos_sin();
            let cf = if v.branch == Branch::Rotation { &rot } else { &refl };
            assert!(cf.x.iter().zip(&cf.y).all(|(x, y)| c * x + s * y >= -1e-12));
            assert!(q <= grid_min(&rot, &refl, &RegularizerSpec::NonNeg, 20_000) + 1e-6);
        }
    }

    #[test]
    fn never_worse_than_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let mut p = [[0.0; 2]; 2];
            p.iter_mut().flatten().for_each(|v| *v = rng.sample(StandardNormal));
            let z = DenseMatrix::from_fn(2, 3, |_, _| rng.sample(StandardNormal));
            let (rot, refl) = coeffs(p, &z);
            for reg in [RegularizerSpec::Zero, RegularizerSpec::L0(1.0), RegularizerSpec::L1(1.0)] {
                let (_, q) = bsm_solve(&rot, Some(&refl), &reg).unwrap();
                assert!(q <= eval_reduced_objective(1.0, 0.0, &rot, &reg) + 1e-12);
            }
        }
    }

    #[test]
    fn infeasible_nonneg_block() {
        // Three columns 120° apart never fit in one quadrant.
        let h = 0.75f64.sqrt();
        let z = DenseMatrix::from_rows(&[vec![1.0, -0.5, -0.5], vec![0.0, h, -h]]).unwrap();
        let (rot, refl) = coeffs([[0.0; 2]; 2], &z);
        let res = bsm_solve(&rot, Some(&refl), &RegularizerSpec::NonNeg);
        assert_eq!(res, Err(Error::InfeasibleSubproblem));
    }
}
