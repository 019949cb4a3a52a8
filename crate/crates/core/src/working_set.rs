//! Working-set selection for two-row blocks.
//!
//! Pairs `(i, j)` with `i < j` are indexed lexicographically:
//! `(0,1), (0,2), …, (0,n−1), (1,2), …, (n−2,n−1)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix, StiefelPoint, WorkingSet};

/// Default cap on the number of sampled pairs for greedy scoring.
pub const DEFAULT_SAMPLE_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WssKind {
    Random,
    Cyclic,
    /// Maximum stationarity violation.
    GreedySv,
    /// Maximum guaranteed objective reduction.
    GreedyOr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WssStrategy {
    pub kind: WssKind,
    /// Pairs scored per greedy iteration; `None` means `min(n, 200)`.
    pub sample_size: Option<usize>,
    /// Score every pair instead of a sample.
    pub full_scan: bool,
}

impl WssStrategy {
    pub fn new(kind: WssKind) -> Self {
        Self { kind, sample_size: None, full_scan: false }
    }

    pub fn is_greedy(&self) -> bool {
        matches!(self.kind, WssKind::GreedySv | WssKind::GreedyOr)
    }

    pub fn effective_sample_size(&self, n: usize) -> usize {
        self.sample_size.unwrap_or(n.min(DEFAULT_SAMPLE_CAP)).clamp(1, pair_count(n).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorePair {
    pub pair: WorkingSet,
    pub score: f64,
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn row_start(n: usize, i: usize) -> usize {
    i * n - i * (i + 1) / 2
}

/// The pair with lexicographic index `idx` among the `C(n, 2)` pairs.
pub fn pair_from_index(n: usize, idx: usize) -> WorkingSet {
    let total = pair_count(n);
    debug_assert!(idx < total);
    let rem = (total - 1 - idx) as f64;
    let back = ((8.0 * rem + 1.0).sqrt() - 1.0) / 2.0;
    let mut i = (n - 2).saturating_sub(back.floor() as usize);
    while i > 0 && row_start(n, i) > idx {
        i -= 1;
    }
    while i + 1 < n - 1 && row_start(n, i + 1) <= idx {
        i += 1;
    }
    WorkingSet { i, j: idx - row_start(n, i) + i + 1 }
}

pub fn all_pairs(n: usize) -> Vec<WorkingSet> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| WorkingSet { i, j })).collect()
}

/// A uniformly random pair.
pub fn select_random(n: usize, rng: &mut impl Rng) -> Result<WorkingSet> {
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    Ok(pair_from_index(n, rng.random_range(0..pair_count(n))))
}

/// The pair at `cursor` in lexicographic order (wrapping) and the next cursor.
pub fn select_cyclic(n: usize, cursor: usize) -> Result<(WorkingSet, usize)> {
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let idx = cursor % pair_count(n);
    Ok((pair_from_index(n, idx), idx + 1))
}

/// `count` distinct pairs drawn uniformly, in lexicographic order.
pub fn sample_pairs(n: usize, count: usize, rng: &mut impl Rng) -> Result<Vec<WorkingSet>> {
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let total = pair_count(n);
    let mut idx = rand::seq::index::sample(rng, total, count.min(total)).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|k| pair_from_index(n, k)).collect())
}

/// `S_ij = ⟨X_i, G_j⟩ − ⟨G_i, X_j⟩`, an entry of `X Gᵀ − G Xᵀ`.
#[inline]
pub fn sv_entry(x: &DenseMatrix, g: &DenseMatrix, b: WorkingSet) -> f64 {
    dot(x.row(b.i), g.row(b.j)) - dot(g.row(b.i), x.row(b.j))
}

/// The full skew matrix `X Gᵀ − G Xᵀ`; O(n²r).
pub fn skew_matrix(x: &DenseMatrix, g: &DenseMatrix) -> DenseMatrix {
    let n = x.rows();
    DenseMatrix::from_fn(n, n, |i, j| dot(x.row(i), g.row(j)) - dot(g.row(i), x.row(j)))
}

/// Most negative value of `⟨V − I₂, T_BB⟩` over both branches, with
/// `T = (G − L X) Xᵀ − θ I`.
pub fn or_entry(x: &DenseMatrix, g: &DenseMatrix, l_f: f64, theta: f64, b: WorkingSet) -> f64 {
    let t = |p: usize, q: usize| {
        let gx = dot(g.row(p), x.row(q)) - l_f * dot(x.row(p), x.row(q));
        if p == q {
            gx - theta
        } else {
            gx
        }
    };
    let (tii, tij, tji, tjj) = (t(b.i, b.i), t(b.i, b.j), t(b.j, b.i), t(b.j, b.j));
    or_from_block(tii, tij, tji, tjj)
}

/// `min(−c1 − √(c1² + c2²), −c1 − √(c3² + c4²))` for the 2×2 block
/// `[[t_ii, t_ij], [t_ji, t_jj]]`.
pub fn or_from_block(tii: f64, tij: f64, tji: f64, tjj: f64) -> f64 {
    let c1 = tii + tjj;
    let c2 = tij - tji;
    let c3 = tjj - tii;
    let c4 = tij + tji;
    (-c1 - c1.hypot(c2)).min(-c1 - c3.hypot(c4))
}

fn argmax_abs(candidates: &[WorkingSet], score: impl Fn(WorkingSet) -> f64) -> Option<ScorePair> {
    let mut sorted = candidates.to_vec();
    sorted.sort();
    let mut best: Option<ScorePair> = None;
    for b in sorted {
        let s = score(b);
        if best.is_none_or(|cur| s.abs() > cur.score.abs()) {
            best = Some(ScorePair { pair: b, score: s });
        }
    }
    best
}

pub fn score_sv(x: &StiefelPoint, g: &DenseMatrix, candidates: &[WorkingSet]) -> Option<ScorePair> {
    argmax_abs(candidates, |b| sv_entry(x.matrix(), g, b))
}

pub fn score_or(x: &StiefelPoint, g: &DenseMatrix, l_f: f64, theta: f64, candidates: &[WorkingSet]) -> Option<ScorePair> {
    argmax_abs(candidates, |b| or_entry(x.matrix(), g, l_f, theta, b))
}

/// Picks the next working set according to a strategy. Owns the cursor of
/// the cyclic rule; randomness comes from the caller's generator.
#[derive(Debug, Clone)]
pub struct Selector {
    strategy: WssStrategy,
    cursor: usize,
}

impl Selector {
    pub fn new(strategy: WssStrategy) -> Self {
        Self { strategy, cursor: 0 }
    }

    pub fn strategy(&self) -> WssStrategy {
        self.strategy
    }

    /// `g` is only read by the greedy rules.
    pub fn next(
        &mut self,
        x: &StiefelPoint,
        g: &DenseMatrix,
        l_f: f64,
        theta: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(WorkingSet, Option<f64>)> {
        let n = x.n();
        match self.strategy.kind {
            WssKind::Random => Ok((select_random(n, rng)?, None)),
            WssKind::Cyclic => {
                let (b, next) = select_cyclic(n, self.cursor)?;
                self.cursor = next;
                Ok((b, None))
            }
            kind => {
                let cands = if self.strategy.full_scan {
                    if n < 2 {
                        return Err(Error::TooFewRows(n));
                    }
                    all_pairs(n)
                } else {
                    sample_pairs(n, self.strategy.effective_sample_size(n), rng)?
                };
                let best = if kind == WssKind::GreedySv {
                    score_sv(x, g, &cands)
                } else {
                    score_or(x, g, l_f, theta, &cands)
                };
                let best = best.ok_or(Error::TooFewRows(n))?;
                Ok((best.pair, Some(best.score)))
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64)
}

fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == n - k + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        idx[pos - 1] += 1;
        for q in pos..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Exhaustive `Σ_B ‖W(B, B)‖²_F` over all k-subsets against the closed form
/// `C(n−2, k−2) Σ_{i≠j} W_ij² + (k/n) C(n, k) Σ_i W_ii²`.
pub fn block_norm_identity_check(w: &DenseMatrix, k: usize) -> (f64, f64) {
    let n = w.rows();
    let mut lhs = 0.0;
    for_each_subset(n, k, |b| {
        for &p in b {
            for &q in b {
                lhs += w[(p, q)] * w[(p, q)];
            }
        }
    });
    let (mut off, mut diag) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                diag += w[(i, j)] * w[(i, j)];
            } else {
                off += w[(i, j)] * w[(i, j)];
            }
        }
    }
    let rhs = if n == 0 || k < 2 {
        lhs
    } else {
        binomial(n - 2, k - 2) * off + k as f64 / n as f64 * binomial(n, k) * diag
    };
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qr_orthonormalize;
    use rand::SeedableRng;
    use rand_distr::StandardNormal;

    #[test]
    fn pair_index_round_trip() {
        for n in 2..40 {
            let pairs = all_pairs(n);
            assert_eq!(pairs.len(), pair_count(n));
            for (k, p) in pairs.iter().enumerate() {
                assert_eq!(pair_from_index(n, k), *p, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn cyclic_examples() {
        let seq: Vec<_> = (0..4).map(|c| select_cyclic(3, c).unwrap().0).collect();
        assert_eq!(seq, vec![WorkingSet { i: 0, j: 1 }, WorkingSet { i: 0, j: 2 }, WorkingSet { i: 1, j: 2 }, WorkingSet { i: 0, j: 1 }]);
        assert_eq!(select_cyclic(5, 9).unwrap().0, WorkingSet { i: 3, j: 4 });
        assert_eq!(select_cyclic(1, 0), Err(Error::TooFewRows(1)));
    }

    #[test]
    fn random_selection_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_random(2, &mut rng).unwrap(), WorkingSet { i: 0, j: 1 });
        let draws = 100_000;
        let mut counts = [0usize; 6];
        for _ in 0..draws {
            let b = select_random(4, &mut rng).unwrap();
            counts[all_pairs(4).iter().position(|p| *p == b).unwrap()] += 1;
        }
        let p = 1.0 / 6.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
        let mut a = ChaCha8Rng::seed_from_u64(77);
        let mut b = a.clone();
        assert_eq!(select_random(50, &mut a).unwrap(), select_random(50, &mut b).unwrap());
        assert!(select_random(1, &mut a).is_err());
    }

    #[test]
    fn sampled_pairs_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_pairs(30, 200, &mut rng).unwrap();
        assert_eq!(s.len(), 200);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_pairs(3, 10, &mut rng).unwrap().len(), 3);
    }

    #[test]
    fn sv_example_and_critical_point() {
        let x = StiefelPoint::identity(3, 2).unwrap();
        let mut g = DenseMatrix::zeros(3, 2);
        g.row_mut(2)[0] = 1.0;
        let best = score_sv(&x, &g, &all_pairs(3)).unwrap();
        assert_eq!(best.pair, WorkingSet { i: 0, j: 2 });
        assert_eq!(best.score, 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xm = qr_orthonormalize(&DenseMatrix::from_fn(6, 3, |_, _| rng.sample(StandardNormal))).unwrap();
        let m = DenseMatrix::from_rows(&[vec![2.0, 0.5, -1.0], vec![0.5, 1.0, 0.3], vec![-1.0, 0.3, 0.7]]).unwrap();
        let g = xm.matrix().matmul(&m).unwrap();
        let best = score_sv(&xm, &g, &all_pairs(6)).unwrap();
        assert!(best.score.abs() < 1e-14);
    }

    #[test]
    fn skew_matrix_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DenseMatrix::from_fn(7, 3, |_, _| rng.sample(StandardNormal));
        let g = DenseMatrix::from_fn(7, 3, |_, _| rng.sample(StandardNormal));
        let s = skew_matrix(&x, &g);
        assert!(s.add(&s.transpose()).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn or_examples() {
        assert_eq!(or_from_block(1.0, 0.0, 0.0, 1.0), -4.0);
        assert_eq!(or_from_block(0.0, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn or_matches_angle_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let t: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            let closed = or_from_block(t[0], t[1], t[2], t[3]);
            let mut best = f64::INFINITY;
            for k in 0..20_000 {
                let (s, c) = (2.0 * std::f64::consts::PI * k as f64 / 20_000.0).sin_cos();
                let rot = (c - 1.0) * t[0] + s * t[1] - s * t[2] + (c - 1.0) * t[3];
                let refl = (-c - 1.0) * t[0] + s * t[1] + s * t[2] + (c - 1.0) * t[3];
                best = best.min(rot).min(refl);
            }
            assert!((closed - best).abs() < 1e-6, "{closed} vs {best}");
        }
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let x = StiefelPoint::identity(3, 1).unwrap();
        let g = DenseMatrix::zeros(3, 1);
        let best = score_sv(&x, &g, &[WorkingSet { i: 1, j: 2 }, WorkingSet { i: 0, j: 2 }]).unwrap();
        assert_eq!(best.pair, WorkingSet { i: 0, j: 2 });
    }

    #[test]
    fn block_norm_identity_examples() {
        assert_eq!(block_norm_identity_check(&DenseMatrix::identity(3, 3), 2), (6.0, 6.0));
        assert_eq!(block_norm_identity_check(&DenseMatrix::zeros(4, 4), 2), (0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = DenseMatrix::from_fn(6, 6, |_, _| rng.sample(StandardNormal));
        let (lhs, rhs) = block_norm_identity_check(&w, 3);
        assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }
}
