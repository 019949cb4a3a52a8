//! The outer block coordinate descent loop.

use std::time::{Duration, Instant};

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gram_residual, qr_orthonormalize, Branch, DenseMatrix, Mat2, PlanarOrthogonal, StiefelPoint, WorkingSet};
use crate::problems::{Problem, SmoothTracker};
use crate::subproblem::{assemble_pqz, branch_coefficients, bsm_solve, fim_solve, fit_harmonics, Harmonics, QPolicy, RegularizerSpec};
use crate::working_set::{all_pairs, sample_pairs, Selector, WssKind, WssStrategy};

/// Steps shorter than this count as null steps.
pub const NULL_STEP_TOL: f64 = 1e-12;
/// Slack allowed by the decrease checks.
pub const DECREASE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverMode {
    /// Global solution of each subproblem by breakpoint search.
    Exact,
    /// A no-worse-than-identity critical point by the fifth-order iteration.
    Approx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub theta_prox: f64,
    pub wss: WssStrategy,
    /// `None` uses the problem's default mode.
    pub mode: Option<SolverMode>,
    pub max_iters: usize,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    pub stationarity_tol: f64,
    pub stationarity_sample: usize,
    pub reorth_threshold: f64,
    /// Recompute `F` from scratch this often.
    pub refresh_every: usize,
    /// Consecutive null steps before the stationarity check; `None` picks
    /// `5 · sample_size`, or `C(n, 2)` for the cyclic rule.
    pub null_window: Option<usize>,
    /// Search rotations only.
    pub rotation_only: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta_prox: 1e-5,
            wss: WssStrategy::new(WssKind::Random),
            mode: None,
            max_iters: 1000,
            time_limit: None,
            seed: 0,
            stationarity_tol: 1e-10,
            stationarity_sample: 200,
            reorth_threshold: 1e-8,
            refresh_every: 1000,
            null_window: None,
            rotation_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub elapsed_s: f64,
    #[serde(rename = "F")]
    pub objective: f64,
    pub block: WorkingSet,
    /// `‖V − I₂‖_F`.
    pub step_norm: f64,
    pub feas: f64,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxIters,
    TimeLimit,
    /// A full null-step window followed by a passing stationarity check.
    Stationary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub initial_objective: f64,
    pub initial_feas: f64,
    pub records: Vec<TraceRecord>,
    pub stop: StopReason,
}

impl Trace {
    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(self.initial_objective, |r| r.objective)
    }

    pub fn max_feas(&self) -> f64 {
        self.records.iter().map(|r| r.feas).fold(self.initial_feas, f64::max)
    }

    /// `F_{t+1} ≤ F_t + slack` for every step.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let mut prev = self.initial_objective;
        self.records.iter().all(|r| {
            let ok = r.objective <= prev + slack;
            prev = r.objective;
            ok
        })
    }
}

/// `(θ/2)‖V_t − I‖²_F ≤ F_t − F_{t+1} + 1e-9` for every recorded step.
pub fn verify_sufficient_decrease(trace: &Trace, theta_prox: f64) -> bool {
    let mut prev = trace.initial_objective;
    trace.records.iter().all(|r| {
        let ok = 0.5 * theta_prox * r.step_norm * r.step_norm <= prev - r.objective + DECREASE_SLACK;
        prev = r.objective;
        ok
    })
}

/// Which blocks the stationarity measure averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockSample {
    All,
    Random(usize),
}

/// Solver for one block subproblem at a fixed point.
struct BlockSolver {
    mode: SolverMode,
    theta: f64,
    reg: RegularizerSpec,
    policy: QPolicy,
    trig_degree: usize,
    rotation_only: bool,
}

impl BlockSolver {
    fn new(problem: &dyn Problem, mode: SolverMode, theta: f64, rotation_only: bool) -> Result<Self> {
        let reg = problem.regularizer();
        reg.validate()?;
        let trig_degree = match mode {
            SolverMode::Exact => 0,
            SolverMode::Approx => {
                if !reg.is_smooth() {
                    return Err(Error::InvalidArgument("approximate mode needs a smooth objective (h = 0)".into()));
                }
                problem
                    .trig_degree()
                    .ok_or_else(|| Error::InvalidArgument(format!("problem {} declares no trigonometric degree", problem.name())))?
            }
        };
        Ok(Self { mode, theta, reg, policy: problem.q_policy(), trig_degree, rotation_only })
    }

    fn solve(&self, x: &StiefelPoint, grad: &DenseMatrix, tracker: &dyn SmoothTracker, block: WorkingSet) -> Result<PlanarOrthogonal> {
        match self.mode {
            SolverMode::Exact => {
                let model = assemble_pqz(grad, x, block, &self.policy, self.theta)?;
                let rot = branch_coefficients(&model.p, model.q.as_ref(), &model.z, Branch::Rotation);
                let refl = (!self.rotation_only).then(|| branch_coefficients(&model.p, model.q.as_ref(), &model.z, Branch::Reflection));
                Ok(bsm_solve(&rot, refl.as_ref(), &self.reg)?.0)
            }
            SolverMode::Approx => {
                let xm = x.matrix();
                let along = |branch: Branch| -> Result<Harmonics> {
                    let degree = self.trig_degree.max(1);
                    fit_harmonics(
                        |phi| {
                            let (s, c) = phi.sin_cos();
                            let (ni, nj) = mix_rows(xm, block, &branch.matrix_from_cos_sin(c, s));
                            tracker.trial_value(xm, block, &ni, &nj)
                        },
                        degree,
                    )
                };
                let rot = along(Branch::Rotation)?;
                let refl = if self.rotation_only { None } else { Some(along(Branch::Reflection)?) };
                Ok(fim_solve(&rot, refl.as_ref(), self.theta)?.0)
            }
        }
    }
}

/// Rows `M · [x_i; x_j]`, computed exactly as the in-place update does.
fn mix_rows(x: &DenseMatrix, block: WorkingSet, m: &Mat2) -> (Vec<f64>, Vec<f64>) {
    let (ri, rj) = (x.row(block.i), x.row(block.j));
    let ni = ri.iter().zip(rj).map(|(&u, &v)| m[0][0] * u + m[0][1] * v).collect();
    let nj = ri.iter().zip(rj).map(|(&u, &v)| m[1][0] * u + m[1][1] * v).collect();
    (ni, nj)
}

fn resolve_mode(problem: &dyn Problem, config: &SolverConfig) -> SolverMode {
    config.mode.unwrap_or_else(|| problem.default_mode())
}

/// Mean of `‖I₂ − V̄_B‖²_F` over blocks, where `V̄_B` solves the block
/// subproblem at `x`. Zero exactly when the identity solves every sampled
/// block.
pub fn stationarity_measure(
    problem: &dyn Problem,
    x: &StiefelPoint,
    theta_prox: f64,
    mode: SolverMode,
    sample: BlockSample,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let n = x.n();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let solver = BlockSolver::new(problem, mode, theta_prox, false)?;
    let tracker = problem.tracker(x.matrix());
    let grad = tracker.gradient(x.matrix());
    let blocks = match sample {
        BlockSample::All => all_pairs(n),
        BlockSample::Random(k) => sample_pairs(n, k.max(1), rng)?,
    };
    let mut total = 0.0;
    for &b in &blocks {
        let v = solver.solve(x, &grad, tracker.as_ref(), b)?;
        total += v.distance_from_identity().powi(2);
    }
    Ok(total / blocks.len() as f64)
}

fn check_start(problem: &dyn Problem, x0: &StiefelPoint) -> Result<()> {
    if (x0.n(), x0.r()) != problem.dims() {
        return Err(Error::Shape(format!("start is {}x{}, problem expects {:?}", x0.n(), x0.r(), problem.dims())));
    }
    let feas = x0.gram_residual();
    if !(feas <= 1e-8) {
        return Err(Error::InfeasibleStart(format!("gram residual {feas:.3e} exceeds 1e-8")));
    }
    if problem.regularizer() == RegularizerSpec::NonNeg {
        let m = x0.matrix().min_entry();
        if m < -crate::subproblem::NONNEG_TOL {
            return Err(Error::InfeasibleStart(format!("negative entry {m:.3e} under a nonnegativity constraint")));
        }
    }
    Ok(())
}

/// Runs block coordinate descent from `x0` and returns the final point with
/// its trace.
pub fn obcd_run(problem: &dyn Problem, config: &SolverConfig, x0: StiefelPoint) -> Result<(StiefelPoint, Trace)> {
    if !(config.theta_prox > 0.0 && config.theta_prox.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta_prox must be positive, got {}", config.theta_prox)));
    }
    check_start(problem, &x0)?;
    let n = x0.n();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let mode = resolve_mode(problem, config);
    let solver = BlockSolver::new(problem, mode, config.theta_prox, config.rotation_only)?;
    let reg = problem.regularizer();
    let l_f = problem.lipschitz();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut selector = Selector::new(config.wss);
    let window = config.null_window.unwrap_or(match config.wss.kind {
        WssKind::Cyclic => crate::working_set::pair_count(n),
        _ => 5 * config.wss.effective_sample_size(n),
    });

    let mut x = x0;
    let mut tracker = problem.tracker(x.matrix());
    let mut h_value = reg.eval_matrix(x.matrix());
    let initial_objective = tracker.value() + h_value;
    let initial_feas = x.gram_residual();
    let start = Instant::now();
    let mut records = Vec::with_capacity(config.max_iters.min(1 << 20));
    let mut null_run = 0usize;
    let mut stop = StopReason::MaxIters;

    for iter in 1..=config.max_iters {
        if config.time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            stop = StopReason::TimeLimit;
            break;
        }
        let grad = tracker.gradient(x.matrix());
        let (block, score) = if config.wss.is_greedy() {
            let g = problem.scoring_subgradient(x.matrix(), &grad);
            selector.next(&x, &g, l_f, config.theta_prox, &mut rng)?
        } else {
            selector.next(&x, &grad, l_f, config.theta_prox, &mut rng)?
        };
        let v = solver.solve(&x, &grad, tracker.as_ref(), block)?;
        let step_norm = v.distance_from_identity();
        if !v.is_identity() {
            let (ni, nj) = mix_rows(x.matrix(), block, &v.matrix());
            let old_h = reg.eval_entries(x.matrix().row(block.i).iter().chain(x.matrix().row(block.j)));
            let new_h = reg.eval_entries(ni.iter().chain(&nj));
            tracker.commit(x.matrix(), block, &ni, &nj);
            x.apply_in_place(block, &v);
            h_value += new_h - old_h;
        }
        if iter % config.refresh_every.max(1) == 0 {
            tracker.refresh(x.matrix());
            h_value = reg.eval_matrix(x.matrix());
        }
        let mut feas = gram_residual(x.matrix());
        if feas > config.reorth_threshold {
            warn!("iteration {iter}: gram residual {feas:.3e} above {:.1e}, re-orthonormalizing", config.reorth_threshold);
            x = qr_orthonormalize(x.matrix())?;
            tracker.refresh(x.matrix());
            h_value = reg.eval_matrix(x.matrix());
            feas = x.gram_residual();
        }
        records.push(TraceRecord {
            iter,
            elapsed_s: start.elapsed().as_secs_f64(),
            objective: tracker.value() + h_value,
            block,
            step_norm,
            feas,
            score,
        });

        null_run = if step_norm < NULL_STEP_TOL { null_run + 1 } else { 0 };
        if null_run >= window {
            let measure = stationarity_measure(
                problem,
                &x,
                config.theta_prox,
                mode,
                BlockSample::Random(config.stationarity_sample),
                &mut rng,
            )?;
            debug!("iteration {iter}: {null_run} null steps, sampled stationarity {measure:.3e}");
            if measure <= config.stationarity_tol {
                stop = StopReason::Stationary;
                break;
            }
            null_run = 0;
        }
    }
    Ok((x, Trace { initial_objective, initial_feas, records, stop }))
}
