//! Fifth-order iteration for trigonometric-polynomial subproblems.
//!
//! Along a planar update the objective is `p(φ) = Σ α_m cos mφ + β_m sin mφ`.
//! Each step minimizes the Taylor model of order four plus `B|δ|⁵/120`, where
//! `B` bounds `|p⁽⁵⁾|`; the model majorizes `p`, so iterates never go uphill.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{Branch, PlanarOrthogonal};
use crate::quartic::{real_roots, QuarticPoly};

const MAX_INNER: usize = 50;
const STEP_TOL: f64 = 1e-12;
const SAMPLE_STARTS: usize = 64;

/// `p(φ) = Σ_m α_m cos mφ + β_m sin mφ` with `m = 0..alpha.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonics {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Harmonics {
    /// Pads the shorter coefficient list with zeros.
    pub fn new(mut alpha: Vec<f64>, mut beta: Vec<f64>) -> Self {
        let m = alpha.len().max(beta.len());
        alpha.resize(m, 0.0);
        beta.resize(m, 0.0);
        Self { alpha, beta }
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.alpha.len().saturating_sub(1)
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.derivative(phi, 0)
    }

    /// The `k`-th derivative at `phi`.
    pub fn derivative(&self, phi: f64, k: u32) -> f64 {
        let mut acc = 0.0;
        for (m, (&a, &b)) in self.alpha.iter().zip(&self.beta).enumerate() {
            if m == 0 {
                if k == 0 {
                    acc += a;
                }
                continue;
            }
            let mf = m as f64;
            let (s, c) = (mf * phi).sin_cos();
            let scale = mf.powi(k as i32);
            // d/dφ cycles (cos, sin) → (−sin, cos).
            let v = match k % 4 {
                0 => a * c + b * s,
                1 => -a * s + b * c,
                2 => -(a * c + b * s),
                _ => a * s - b * c,
            };
            acc += scale * v;
        }
        acc
    }

    /// `Σ_m m⁵ √(α_m² + β_m²)`, a global bound on `|p⁽⁵⁾|`.
    pub fn fifth_derivative_bound(&self) -> f64 {
        self.alpha.iter().zip(&self.beta).enumerate().map(|(m, (a, b))| (m as f64).powi(5) * a.hypot(*b)).sum()
    }

    /// Adds the proximal term `(θ/2)‖V − I₂‖²_F` of the given branch.
    pub fn with_proximal(&self, branch: Branch, theta: f64) -> Self {
        let mut out = Self::new(self.alpha.clone(), self.beta.clone());
        if out.alpha.len() < 2 {
            out.alpha.resize(2, 0.0);
            out.beta.resize(2, 0.0);
        }
        match branch {
            Branch::Rotation => {
                out.alpha[0] += 2.0 * theta;
                out.alpha[1] -= 2.0 * theta;
            }
            Branch::Reflection => out.alpha[0] += 2.0 * theta,
        }
        out
    }
}

/// Recovers the harmonics of a trigonometric polynomial of degree at most
/// `max_degree` from `4·max_degree` uniform samples, then checks the fit at
/// off-grid probes.
pub fn fit_harmonics(mut p: impl FnMut(f64) -> f64, max_degree: usize) -> Result<Harmonics> {
    let n = (4 * max_degree).max(1);
    let samples: Vec<f64> = (0..n).map(|k| p(2.0 * PI * k as f64 / n as f64)).collect();
    let mut alpha = vec![0.0; max_degree + 1];
    let mut beta = vec![0.0; max_degree + 1];
    alpha[0] = samples.iter().sum::<f64>() / n as f64;
    for m in 1..=max_degree {
        let (mut a, mut b) = (0.0, 0.0);
        for (k, v) in samples.iter().enumerate() {
            let (s, c) = (2.0 * PI * (m * k % n) as f64 / n as f64).sin_cos();
            a += v * c;
            b += v * s;
        }
        alpha[m] = 2.0 * a / n as f64;
        beta[m] = 2.0 * b / n as f64;
    }
    let h = Harmonics { alpha, beta };
    let mut max_p = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut residual = 0.0f64;
    for k in 0..101 {
        let phi = 2.0 * PI * (k as f64 + 0.371) / 101.0;
        let v = p(phi);
        max_p = max_p.max(v.abs());
        residual = residual.max((v - h.eval(phi)).abs());
    }
    if !(residual <= 1e-9 * (1.0 + max_p)) {
        return Err(Error::NotTrigPolynomial { degree: max_degree, residual });
    }
    Ok(h)
}

/// Minimizer of the degree-5 upper model around the current iterate.
fn model_step(d: [f64; 4], bound: f64) -> f64 {
    let model = |t: f64| {
        d[0] * t + d[1] * t * t / 2.0 + d[2] * t.powi(3) / 6.0 + d[3] * t.powi(4) / 24.0 + bound * t.abs().powi(5) / 120.0
    };
    let mut best = (0.0f64, 0.0f64);
    for side in [1.0, -1.0] {
        let poly = QuarticPoly::new(side * bound / 24.0, d[3] / 6.0, d[2] / 2.0, d[1], d[0]);
        for t in real_roots(&poly).unwrap_or_default() {
            if t * side <= 0.0 {
                continue;
            }
            let v = model(t);
            if v < best.1 || v == best.1 && t.abs() < best.0.abs() {
                best = (t, v);
            }
        }
    }
    best.0
}

/// Descends from `phi` to a critical point; returns the final angle and value.
fn descend(h: &Harmonics, mut phi: f64, bound: f64) -> (f64, f64) {
    let mut value = h.eval(phi);
    for _ in 0..MAX_INNER {
        let d = [h.derivative(phi, 1), h.derivative(phi, 2), h.derivative(phi, 3), h.derivative(phi, 4)];
        let step = model_step(d, bound);
        if step == 0.0 {
            break;
        }
        let next = phi + step;
        let next_value = h.eval(next);
        if next_value > value {
            break;
        }
        phi = next;
        value = next_value;
        if step.abs() <= STEP_TOL {
            break;
        }
    }
    (phi, value)
}

fn starts(h: &Harmonics) -> Vec<f64> {
    let mut out = vec![0.0, 0.5 * PI, PI, 1.5 * PI];
    let grid: Vec<f64> = (0..SAMPLE_STARTS).map(|k| h.eval(2.0 * PI * k as f64 / SAMPLE_STARTS as f64)).collect();
    for k in 0..SAMPLE_STARTS {
        let prev = grid[(k + SAMPLE_STARTS - 1) % SAMPLE_STARTS];
        let next = grid[(k + 1) % SAMPLE_STARTS];
        if grid[k] <= prev && grid[k] <= next {
            out.push(2.0 * PI * k as f64 / SAMPLE_STARTS as f64);
        }
    }
    out
}

/// Critical point of `K(φ) = p(φ) + (θ/2)‖V_φ − I₂‖²_F` over the supplied
/// branches, never worse than the identity. `rotation` and `reflection` are
/// the harmonics of `p` along each branch, without the proximal term.
pub fn fim_solve(rotation: &Harmonics, reflection: Option<&Harmonics>, theta_prox: f64) -> Result<(PlanarOrthogonal, f64)> {
    if rotation.is_empty() || reflection.is_some_and(|h| h.is_empty()) {
        return Err(Error::EmptyModel);
    }
    let mut models = vec![(Branch::Rotation, rotation.with_proximal(Branch::Rotation, theta_prox))];
    if let Some(h) = reflection {
        models.push((Branch::Reflection, h.with_proximal(Branch::Reflection, theta_prox)));
    }
    let identity_value = models[0].1.eval(0.0);
    let mut best = (PlanarOrthogonal::IDENTITY, identity_value);
    for (branch, h) in &models {
        let bound = h.fifth_derivative_bound();
        for phi0 in starts(h) {
            let (phi, _) = descend(h, phi0, bound);
            let cand = PlanarOrthogonal::new(*branch, phi);
            // Re-evaluate at the wrapped angle actually returned.
            let value = h.eval(cand.angle);
            let tol = 1e-14 * (1.0 + best.1.abs());
            let better = value < best.1 - tol
                || value <= best.1 + tol && (cand.branch, cand.angle.abs()) < (best.0.branch, best.0.angle.abs());
            if better && value <= identity_value {
                best = (cand, value);
            }
        }
    }
    Ok(best)
}
