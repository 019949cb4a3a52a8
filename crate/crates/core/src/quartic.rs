//! Real roots of polynomials of degree at most four.
//!
//! The quartic path uses Ferrari's method on the depressed quartic with the
//! largest root of the resolvent cubic. Every candidate is Newton-polished on
//! the original polynomial and kept only if its residual is small. Roots that
//! cross zero are additionally bracketed between consecutive critical points,
//! so a sign change that the closed form lost to rounding is recovered by
//! bisection.

use crate::error::{Error, Result};

/// Leading coefficients below this fraction of the largest one are dropped.
pub const DEGREE_DROP_TOL: f64 = 1e-12;
/// Roots closer than this are merged, as are neighbours whose midpoint is
/// a root up to rounding.
pub const ROOT_MERGE_TOL: f64 = 1e-9;
/// Relative residual accepted for a returned root.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// `c4·t⁴ + c3·t³ + c2·t² + c1·t + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticPoly {
    pub c4: f64,
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl QuarticPoly {
    pub fn new(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        Self { c4, c3, c2, c1, c0 }
    }

    /// Coefficients from highest to lowest degree.
    pub fn coeffs(&self) -> [f64; 5] {
        [self.c4, self.c3, self.c2, self.c1, self.c0]
    }

    pub fn eval(&self, t: f64) -> f64 {
        horner(&self.coeffs(), t)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let c = self.coeffs().map(|v| v * alpha);
        Self::new(c[0], c[1], c[2], c[3], c[4])
    }

    /// The residual bound `RESIDUAL_TOL · max(1, Σ|c_i| · max(1, |t|)⁴)`.
    pub fn residual_bound(&self, t: f64) -> f64 {
        let sum: f64 = self.coeffs().iter().map(|c| c.abs()).sum();
        RESIDUAL_TOL * (sum * t.abs().max(1.0).powi(4)).max(1.0)
    }
}

#[inline]
fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().fold(0.0, |acc, &k| acc * t + k)
}

/// Bound on the rounding error of evaluating `c` at `t` by Horner's rule.
fn rounding_bound(c: &[f64], t: f64) -> f64 {
    let magnitude = c.iter().fold(0.0, |acc, &k| acc * t.abs() + k.abs());
    2.0 * c.len() as f64 * f64::EPSILON * magnitude
}

fn derivative(c: &[f64]) -> Vec<f64> {
    let deg = c.len() - 1;
    c[..deg].iter().enumerate().map(|(k, &v)| v * (deg - k) as f64).collect()
}

/// Sorted real roots of `p` with near-duplicates merged.
pub fn real_roots(p: &QuarticPoly) -> Result<Vec<f64>> {
    let raw = p.coeffs();
    if raw.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("polynomial coefficients must be finite".into()));
    }
    let max = raw.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if max == 0.0 {
        return Err(Error::DegeneratePolynomial);
    }
    let norm: Vec<f64> = raw.iter().map(|c| c / max).collect();
    // Effective degree after dropping negligible leading terms.
    let lead = norm.iter().position(|c| c.abs() > DEGREE_DROP_TOL).unwrap_or(4);
    let eff = &norm[lead..];
    if eff.len() == 1 {
        return Ok(Vec::new());
    }

    let mut cands = closed_form_roots(eff);
    for t in cands.iter_mut() {
        *t = newton_polish(&norm, *t, 3);
    }
    for t in bracket_missing(eff, &cands) {
        cands.push(newton_polish(&norm, t, 3));
    }
    // Roots of even multiplicity are critical points; rounding can push
    // them off the real axis in the closed form.
    if eff.len() > 2 {
        let deriv = derivative(eff);
        for t in closed_form_roots(&deriv) {
            let t = newton_polish(&deriv, t, 3);
            if horner(&norm, t).abs() <= 16.0 * rounding_bound(&norm, t) {
                cands.push(t);
            }
        }
    }

    let bound_poly = QuarticPoly::new(norm[0], norm[1], norm[2], norm[3], norm[4]);
    let mut roots: Vec<f64> =
        cands.into_iter().filter(|t| t.is_finite() && bound_poly.eval(*t).abs() <= bound_poly.residual_bound(*t)).collect();
    roots.sort_by(f64::total_cmp);

    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    for t in roots {
        match merged.last_mut() {
            Some(last) if (t - *last).abs() <= ROOT_MERGE_TOL || {
                let mid = 0.5 * (t + *last);
                horner(&norm, mid).abs() <= 16.0 * rounding_bound(&norm, mid)
            } => {
                // Inside a cluster |p| is rounding noise; the flattest point
                // is the best estimate of a multiple root.
                let slope = derivative(&norm);
                if horner(&slope, t).abs() < horner(&slope, *last).abs() {
                    *last = t;
                }
            }
            _ => merged.push(t),
        }
    }
    let degree = eff.len() - 1;
    if merged.len() > degree {
        merged.sort_by(|s, t| horner(&norm, *s).abs().total_cmp(&horner(&norm, *t).abs()));
        merged.truncate(degree);
        merged.sort_by(f64::total_cmp);
    }
    Ok(merged)
}

/// Closed-form candidates for a polynomial whose leading coefficient is
/// nonzero (degree 1 to 4, coefficients high to low).
fn closed_form_roots(c: &[f64]) -> Vec<f64> {
    match c.len() {
        2 => vec![-c[1] / c[0]],
        3 => quadratic_roots(c[1] / c[0], c[2] / c[0]),
        4 => cubic_roots(c[1] / c[0], c[2] / c[0], c[3] / c[0]),
        5 => quartic_roots(c[1] / c[0], c[2] / c[0], c[3] / c[0], c[4] / c[0]),
        _ => Vec::new(),
    }
}

/// Roots of `t² + b t + c`. A slightly negative discriminant still yields
/// the double-root candidate; the residual filter decides whether it stays.
fn quadratic_roots(b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        if disc >= -1e-10 * (b * b + 4.0 * c.abs()) {
            return vec![-0.5 * b];
        }
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        // b = 0 and c = 0
        return vec![0.0];
    }
    vec![q, c / q]
}

/// Real roots of the monic cubic `t³ + a t² + b t + c`.
fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let roots: Vec<f64> = if p == 0.0 && q == 0.0 {
        vec![0.0]
    } else if disc > 0.0 {
        let big = -q.signum() * (0.5 * q.abs() + disc.sqrt()).cbrt();
        let small = if big != 0.0 { -p / (3.0 * big) } else { 0.0 };
        vec![big + small]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos()).collect()
    };
    let coeffs = [1.0, a, b, c];
    roots.into_iter().map(|u| newton_polish(&coeffs, u - shift, 2)).collect()
}

/// Ferrari's method for the monic quartic `t⁴ + a t³ + b t² + c t + d`.
fn quartic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let shift = a / 4.0;
    let a2 = a * a;
    // Depressed quartic y⁴ + p y² + q y + r with t = y − a/4.
    let p = b - 3.0 * a2 / 8.0;
    let q = c - a * b / 2.0 + a2 * a / 8.0;
    let r = d - a * c / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;
    let scale = p.abs().sqrt().max(q.abs().cbrt()).max(r.abs().sqrt().sqrt());
    let mut ys = Vec::with_capacity(4);
    if scale == 0.0 {
        ys.push(0.0);
    } else if q.abs() <= 1e-14 * scale.powi(3) {
        // Biquadratic in z = y².
        for z in quadratic_roots(p, r) {
            if z >= 0.0 {
                let y = z.sqrt();
                ys.push(y);
                ys.push(-y);
            } else if z >= -1e-12 * scale * scale {
                ys.push(0.0);
            }
        }
    } else {
        // Resolvent cubic 8m³ + 8p m² + (2p² − 8r) m − q² = 0 has a positive root.
        let m = cubic_roots(p, p * p / 4.0 - r, -q * q / 8.0).into_iter().fold(f64::NEG_INFINITY, f64::max);
        if m > 0.0 {
            let s = (2.0 * m).sqrt();
            let k = q / (2.0 * s);
            ys.extend(quadratic_roots(-s, 0.5 * p + m + k));
            ys.extend(quadratic_roots(s, 0.5 * p + m - k));
        }
    }
    ys.into_iter().map(|y| y - shift).collect()
}

/// At most `steps` Newton iterations, each accepted only if it lowers `|p|`.
fn newton_polish(c: &[f64], mut t: f64, steps: usize) -> f64 {
    let dc = derivative(c);
    let mut ft = horner(c, t);
    for _ in 0..steps {
        if ft == 0.0 {
            break;
        }
        let dt = horner(&dc, t);
        if dt == 0.0 || !dt.is_finite() {
            break;
        }
        let next = t - ft / dt;
        let fn_ = horner(c, next);
        if !(fn_.abs() < ft.abs()) {
            break;
        }
        t = next;
        ft = fn_;
    }
    t
}

/// Finds sign changes of `c` between consecutive critical points and returns
/// a bisected root for every such interval that contains no candidate.
fn bracket_missing(c: &[f64], cands: &[f64]) -> Vec<f64> {
    let lead = c[0];
    // Cauchy bound on root magnitude.
    let bound = 1.0 + c[1..].iter().fold(0.0f64, |m, v| m.max((v / lead).abs()));
    let dc = derivative(c);
    let mut points = vec![-bound];
    if dc.len() >= 2 {
        let mut crit: Vec<f64> = closed_form_roots(&dc)
            .into_iter()
            .map(|t| newton_polish(&dc, t, 3))
            .filter(|t| t.is_finite() && t.abs() < bound)
            .collect();
        crit.sort_by(f64::total_cmp);
        points.extend(crit);
    }
    points.push(bound);

    let mut found = Vec::new();
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (flo, fhi) = (horner(c, lo), horner(c, hi));
        if flo == 0.0 || fhi == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        if cands.iter().any(|&t| t >= lo - slack && t <= hi + slack) {
            continue;
        }
        found.push(bisect(c, lo, hi, flo));
    }
    found
}

fn bisect(c: &[f64], mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let lo_sign = flo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = horner(c, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_roots(p: QuarticPoly, expected: &[f64]) {
        let roots = real_roots(&p).unwrap();
        assert_eq!(roots.len(), expected.len(), "{roots:?} vs {expected:?}");
        for (r, e) in roots.iter().zip(expected) {
            assert!((r - e).abs() < 1e-12, "{roots:?} vs {expected:?}");
        }
    }

    #[test]
    fn textbook_cases() {
        assert_roots(QuarticPoly::new(1.0, 0.0, 0.0, 0.0, -1.0), &[-1.0, 1.0]);
        assert_roots(QuarticPoly::new(1.0, -10.0, 35.0, -50.0, 24.0), &[1.0, 2.0, 3.0, 4.0]);
        assert_roots(QuarticPoly::new(3.0, 5.0, -5.0, -5.0, 2.0), &[-2.0, -1.0, 1.0 / 3.0, 1.0]);
        assert_roots(QuarticPoly::new(1.0, 0.0, 1.0, 0.0, 1.0), &[]);
    }

    #[test]
    fn degree_degradation() {
        // Cubic (t−1)(t+2)(t−3)
        assert_roots(QuarticPoly::new(0.0, 1.0, -2.0, -5.0, 6.0), &[-2.0, 1.0, 3.0]);
        assert_roots(QuarticPoly::new(0.0, 0.0, 1.0, 0.0, -4.0), &[-2.0, 2.0]);
        assert_roots(QuarticPoly::new(0.0, 0.0, 0.0, 2.0, -1.0), &[0.5]);
        assert_roots(QuarticPoly::new(0.0, 0.0, 0.0, 0.0, 3.0), &[]);
        assert_eq!(real_roots(&QuarticPoly::new(0.0, 0.0, 0.0, 0.0, 0.0)), Err(Error::DegeneratePolynomial));
    }

    #[test]
    fn repeated_roots() {
        // (t−1)²(t²+1) = t⁴ − 2t³ + 2t² − 2t + 1
        let roots = real_roots(&QuarticPoly::new(1.0, -2.0, 2.0, -2.0, 1.0)).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 1.0).abs() < 1e-7);
        // (t−2)⁴
        let roots = real_roots(&QuarticPoly::new(1.0, -8.0, 24.0, -32.0, 16.0)).unwrap();
        assert!(!roots.is_empty());
        assert!(roots.iter().all(|r| (r - 2.0).abs() < 1e-3));
        // (t−1)²(t−3)²
        let roots = real_roots(&QuarticPoly::new(1.0, -8.0, 22.0, -24.0, 9.0)).unwrap();
        assert!(roots.iter().any(|r| (r - 1.0).abs() < 1e-7));
        assert!(roots.iter().any(|r| (r - 3.0).abs() < 1e-7));
    }

    #[test]
    fn perfect_square_times_positive() {
        // −(a t − b)²(1 + t²)
        for (a, b) in [(3.0, 0.011), (3.0, 1e-6), (0.7, -2.3), (1.0, 1e-3)] {
            let p = QuarticPoly::new(-a * a, 2.0 * a * b, -(a * a + b * b), 2.0 * a * b, -b * b);
            let roots = real_roots(&p).unwrap();
            assert!(roots.iter().any(|r| (r - b / a).abs() < 1e-7), "{a} {b} {roots:?}");
        }
    }

    #[test]
    fn scaling_invariance() {
        let p = QuarticPoly::new(0.7, -1.3, -2.2, 0.4, 0.9);
        let base = real_roots(&p).unwrap();
        for alpha in [1e-6, 1.0, 1e6] {
            let scaled = real_roots(&p.scaled(alpha)).unwrap();
            assert_eq!(scaled.len(), base.len());
            for (a, b) in scaled.iter().zip(&base) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(real_roots(&QuarticPoly::new(f64::NAN, 0.0, 0.0, 0.0, 1.0)).is_err());
    }
}
