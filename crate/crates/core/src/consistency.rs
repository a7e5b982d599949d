//! Synthetic Bradley-Terry laboratory.
//!
//! A ground-truth score table generates graded preference samples through the
//! logistic win model `P(i beats j) = sigmoid(r_i - r_j)`. Fitting the
//! weighted negative log-likelihood (weights from the grade gap, as in the
//! multi-level loss) must recover the true score gaps as the sample count
//! grows, grades must stay inside the configured bound, and the `alpha = 0`
//! fit must coincide with the unweighted maximum-likelihood estimate. The
//! estimator is plain full-batch gradient descent on the mean weighted
//! negative log-likelihood with the first score pinned to zero; the weighted
//! logistic objective is convex in the score vector, so no line search is
//! needed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdpo::{weight, GradeConfig};
use crate::scalar::{sigmoid, softplus, Real};
use crate::seeds;

/// How ground-truth scores are laid out in `[0, spread]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Even,
    Uniform,
}

/// A synthetic world: item scores with the first pinned to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BTWorld<R: Real> {
    true_scores: Vec<R>,
    seed: u64,
}

impl<R: Real> BTWorld<R> {
    /// Build a world from explicit scores (first must be 0, all finite).
    pub fn from_scores(scores: Vec<R>, seed: u64) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a world needs at least 2 items, got {}",
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("scores must be finite".to_string()));
        }
        if scores[0] != R::zero() {
            return Err(Error::InvalidArgument(
                "first score must be pinned to 0".to_string(),
            ));
        }
        Ok(Self {
            true_scores: scores,
            seed,
        })
    }

    pub fn item_count(&self) -> usize {
        self.true_scores.len()
    }

    pub fn true_scores(&self) -> &[R] {
        &self.true_scores
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `P(i beats j)` under the logistic win model.
    pub fn win_probability(&self, i: usize, j: usize) -> R {
        sigmoid(self.true_scores[i] - self.true_scores[j])
    }

    /// Lower median of all pairwise true margins, the strong/weak grade cut.
    pub fn median_margin(&self) -> R {
        let mut margins = Vec::new();
        for i in 0..self.true_scores.len() {
            for j in (i + 1)..self.true_scores.len() {
                margins.push((self.true_scores[i] - self.true_scores[j]).abs());
            }
        }
        margins.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        margins[(margins.len() - 1) / 2]
    }
}

/// Generate a world of `item_count` scores spanning `[0, score_spread]`.
pub fn gen_world<R: Real>(
    item_count: usize,
    score_spread: f64,
    spacing: Spacing,
    seed: u64,
) -> Result<BTWorld<R>> {
    if item_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "item_count must be >= 2, got {item_count}"
        )));
    }
    if !(score_spread > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "score_spread must be positive, got {score_spread}"
        )));
    }
    let scores = match spacing {
        Spacing::Even => (0..item_count)
            .map(|i| R::from_f64_c(score_spread * i as f64 / (item_count - 1) as f64))
            .collect(),
        Spacing::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut scores = vec![R::zero()];
            for _ in 1..item_count {
                scores.push(R::from_f64_c(rng.gen::<f64>() * score_spread));
            }
            scores
        }
    };
    BTWorld::from_scores(scores, seed)
}

/// How grades are assigned to synthetic samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradeRule {
    /// Strong grades when the pair's true margin exceeds the world median,
    /// weak otherwise.
    MarginMedian,
    /// As `MarginMedian`, but each sample's strength flips with this
    /// probability (label noise).
    MarginMedianNoisy { flip_prob: f64 },
}

/// One synthetic comparison: who won, who lost, and the grade pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradedSample {
    pub winner: usize,
    pub loser: usize,
    pub g_plus: i32,
    pub g_minus: i32,
}

/// Draw `n` graded comparisons from the world.
pub fn sample_prefs<R: Real>(
    world: &BTWorld<R>,
    n: usize,
    rule: GradeRule,
    grades: &GradeConfig,
    seed: u64,
) -> Result<Vec<GradedSample>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".to_string()));
    }
    grades.validate()?;
    let items = world.item_count();
    let median = world.median_margin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.gen_range(0..items);
        let mut j = rng.gen_range(0..items - 1);
        if j >= i {
            j += 1;
        }
        let p_i_wins = world.win_probability(i, j).to_f64_c();
        let (winner, loser) = if rng.gen::<f64>() < p_i_wins {
            (i, j)
        } else {
            (j, i)
        };
        let margin = (world.true_scores[i] - world.true_scores[j]).abs();
        let mut strong = margin > median;
        if let GradeRule::MarginMedianNoisy { flip_prob } = rule {
            if rng.gen::<f64>() < flip_prob {
                strong = !strong;
            }
        }
        let (g_plus, g_minus) = if strong {
            (grades.strong_accept, grades.strong_reject)
        } else {
            (grades.weak_accept, grades.weak_reject)
        };
        samples.push(GradedSample {
            winner,
            loser,
            g_plus,
            g_minus,
        });
    }
    Ok(samples)
}

/// Gradient-descent budget for the MLE fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub step: f64,
    /// Stop when the gradient max-norm falls below this.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            step: 0.1,
            tolerance: 1e-8,
        }
    }
}

fn check_connected(samples: &[GradedSample], item_count: usize) -> Result<()> {
    if item_count == 0 {
        return Err(Error::InvalidArgument("item_count must be >= 1".to_string()));
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); item_count];
    for s in samples {
        if s.winner >= item_count || s.loser >= item_count {
            return Err(Error::InvalidArgument(format!(
                "sample references item outside 0..{item_count}"
            )));
        }
        adjacency[s.winner].push(s.loser);
        adjacency[s.loser].push(s.winner);
    }
    let mut seen = vec![false; item_count];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &j in &adjacency[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        let missing: Vec<usize> = (0..item_count).filter(|&i| !seen[i]).collect();
        Err(Error::Identifiability(format!(
            "comparison graph is disconnected; items {missing:?} unreachable from item 0"
        )))
    }
}

fn fit_with_weights<R: Real>(
    samples: &[GradedSample],
    item_count: usize,
    weight_of: impl Fn(&GradedSample) -> f64,
    opts: &FitOptions,
) -> Result<Vec<R>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to fit".to_string()));
    }
    check_connected(samples, item_count)?;

    // Samples collapse into weighted counts per (winner, loser, weight-class);
    // the objective is a sum of identical terms either way.
    let mut aggregated: HashMap<(usize, usize, u64), (f64, f64)> = HashMap::new();
    for s in samples {
        let w = weight_of(s);
        let entry = aggregated
            .entry((s.winner, s.loser, w.to_bits()))
            .or_insert((w, 0.0));
        entry.1 += 1.0;
    }
    let mut terms: Vec<(usize, usize, f64)> = aggregated
        .into_iter()
        .map(|((winner, loser, _), (w, count))| (winner, loser, w * count))
        .collect();
    terms.sort_by_key(|&(w, l, _)| (w, l));

    let n = R::from_f64_c(samples.len() as f64);
    let step = R::from_f64_c(opts.step);
    let tol = R::from_f64_c(opts.tolerance);
    let mut scores = vec![R::zero(); item_count];
    let mut grad = vec![R::zero(); item_count];
    for _ in 0..opts.max_iterations {
        for g in grad.iter_mut() {
            *g = R::zero();
        }
        for &(winner, loser, coeff) in &terms {
            let margin = scores[winner] - scores[loser];
            // d/d margin of softplus(-margin) is -sigmoid(-margin).
            let c = R::from_f64_c(coeff) * sigmoid(-margin) / n;
            grad[winner] -= c;
            grad[loser] += c;
        }
        grad[0] = R::zero(); // identifiability pin
        let max_norm = grad
            .iter()
            .map(|g| g.abs())
            .fold(R::zero(), R::max);
        if max_norm < tol {
            break;
        }
        for (s, g) in scores.iter_mut().zip(grad.iter()) {
            *s -= step * *g;
        }
    }
    Ok(scores)
}

/// Minimize the mean of `w(g+,g-) * -log sigmoid(r_winner - r_loser)` over
/// the score vector, with `r[0]` pinned to 0.
pub fn fit_weighted_mle<R: Real>(
    samples: &[GradedSample],
    item_count: usize,
    cfg: &GradeConfig,
    opts: &FitOptions,
) -> Result<Vec<R>> {
    cfg.validate()?;
    let alpha = cfg.alpha;
    fit_with_weights(
        samples,
        item_count,
        |s| weight(f64::from(s.g_plus), f64::from(s.g_minus), alpha),
        opts,
    )
}

/// Unweighted maximum-likelihood fit (every weight 1), the classical
/// estimator the weighted fit must agree with at `alpha = 0` up to the
/// constant factor `ln 2` in the objective.
pub fn fit_unweighted_mle<R: Real>(
    samples: &[GradedSample],
    item_count: usize,
    opts: &FitOptions,
) -> Result<Vec<R>> {
    fit_with_weights(samples, item_count, |_| 1.0, opts)
}

/// Kendall rank correlation (tau-a) between two score vectors.
pub fn kendall_tau<R: Real>(a: &[R], b: &[R]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = a[i].partial_cmp(&a[j]).unwrap_or(std::cmp::Ordering::Equal);
            let db = b[i].partial_cmp(&b[j]).unwrap_or(std::cmp::Ordering::Equal);
            use std::cmp::Ordering::Equal;
            if da == Equal || db == Equal {
                continue;
            }
            if da == db {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    (concordant - discordant) as f64 / pairs
}

/// One row of the convergence report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyRow {
    pub n: usize,
    pub centered_max_error: f64,
    pub kendall_tau: f64,
}

/// The lab's full knob set.
#[derive(Debug, Clone)]
pub struct ConsistencyConfig {
    pub grades: GradeConfig,
    pub rule: GradeRule,
    pub fit: FitOptions,
    pub seed: u64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self {
            grades: GradeConfig::default(),
            rule: GradeRule::MarginMedian,
            fit: FitOptions::default(),
            seed: 0,
        }
    }
}

/// For each `n` in the grid: draw samples, fit, and report the centered
/// maximum error `max_i |(r_hat_i - r_hat_0) - (r*_i - r*_0)|` plus the
/// Kendall rank correlation against the truth.
pub fn consistency_report<R: Real>(
    world: &BTWorld<R>,
    n_grid: &[usize],
    cfg: &ConsistencyConfig,
) -> Result<Vec<ConsistencyRow>> {
    if n_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "n_grid must be ascending".to_string(),
        ));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let samples = sample_prefs(
            world,
            n,
            cfg.rule,
            &cfg.grades,
            seeds::derive(cfg.seed, "prefs", gi as u64),
        )?;
        let estimate: Vec<R> = fit_weighted_mle(&samples, world.item_count(), &cfg.grades, &cfg.fit)?;
        let centered_max_error = estimate
            .iter()
            .zip(world.true_scores().iter())
            .map(|(&e, &t)| (e - t).abs().to_f64_c())
            .fold(0.0, f64::max);
        rows.push(ConsistencyRow {
            n,
            centered_max_error,
            kendall_tau: kendall_tau(&estimate, world.true_scores()),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_even_world() {
        let w: BTWorld<f64> = gen_world(2, 1.0, Spacing::Even, 0).unwrap();
        assert_eq!(w.true_scores(), &[0.0, 1.0]);
        assert_abs_diff_eq!(w.win_probability(1, 0), 0.7310585786300049, epsilon = 1e-12);
    }

    #[test]
    fn uniform_world_respects_range_and_reproduces() {
        let a: BTWorld<f64> = gen_world(8, 3.5, Spacing::Uniform, 7).unwrap();
        let b: BTWorld<f64> = gen_world(8, 3.5, Spacing::Uniform, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.true_scores()[0], 0.0);
        assert!(a.true_scores().iter().all(|&s| (0.0..=3.5).contains(&s)));
    }

    #[test]
    fn degenerate_worlds_are_rejected() {
        assert!(gen_world::<f64>(1, 1.0, Spacing::Even, 0).is_err());
        assert!(gen_world::<f64>(4, 0.0, Spacing::Even, 0).is_err());
        assert!(BTWorld::from_scores(vec![1.0f64, 2.0], 0).is_err());
    }

    #[test]
    fn monte_carlo_win_rate_matches_the_logistic_model() {
        let w: BTWorld<f64> = gen_world(2, 1.0, Spacing::Even, 0).unwrap();
        let samples =
            sample_prefs(&w, 50_000, GradeRule::MarginMedian, &GradeConfig::default(), 11).unwrap();
        let wins_1 = samples.iter().filter(|s| s.winner == 1).count() as f64;
        let rate = wins_1 / samples.len() as f64;
        assert!((rate - 0.7310585786300049).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn single_draw_is_valid() {
        let w: BTWorld<f64> = gen_world(3, 2.0, Spacing::Even, 0).unwrap();
        let samples =
            sample_prefs(&w, 1, GradeRule::MarginMedian, &GradeConfig::default(), 3).unwrap();
        assert_eq!(samples.len(), 1);
        let s = samples[0];
        assert_ne!(s.winner, s.loser);
        assert!(s.g_plus > 0 && s.g_minus < 0);
    }

    #[test]
    fn flat_world_grades_everything_weak() {
        let w = BTWorld::from_scores(vec![0.0f64, 0.0, 0.0, 0.0], 0).unwrap();
        let samples =
            sample_prefs(&w, 200, GradeRule::MarginMedian, &GradeConfig::default(), 5).unwrap();
        for s in &samples {
            assert_eq!(s.g_plus, 1);
            assert_eq!(s.g_minus, -1);
        }
    }

    #[test]
    fn emitted_weights_respect_the_bound() {
        let cfg = GradeConfig::default();
        let w: BTWorld<f64> = gen_world(6, 3.0, Spacing::Uniform, 2).unwrap();
        let samples = sample_prefs(&w, 500, GradeRule::MarginMedian, &cfg, 8).unwrap();
        let bound = (1.0 + (cfg.alpha * f64::from(cfg.max_gap())).exp()).ln();
        for s in &samples {
            let wt = weight(f64::from(s.g_plus), f64::from(s.g_minus), cfg.alpha);
            assert!(wt > 0.0 && wt <= bound + 1e-12);
        }
    }

    #[test]
    fn separable_data_runs_out_the_iteration_budget_with_a_large_gap() {
        let samples: Vec<GradedSample> = (0..200)
            .map(|_| GradedSample {
                winner: 1,
                loser: 0,
                g_plus: 1,
                g_minus: -1,
            })
            .collect();
        let est: Vec<f64> =
            fit_weighted_mle(&samples, 2, &GradeConfig::default(), &FitOptions::default()).unwrap();
        assert!(est[1] > 3.0, "estimated gap {}", est[1]);
    }

    #[test]
    fn alpha_zero_fit_matches_unweighted_mle() {
        let w: BTWorld<f64> = gen_world(4, 2.0, Spacing::Even, 0).unwrap();
        let cfg = GradeConfig {
            alpha: 0.0,
            ..GradeConfig::default()
        };
        let samples = sample_prefs(&w, 4000, GradeRule::MarginMedian, &cfg, 9).unwrap();
        let weighted: Vec<f64> =
            fit_weighted_mle(&samples, 4, &cfg, &FitOptions::default()).unwrap();
        let unweighted: Vec<f64> =
            fit_unweighted_mle(&samples, 4, &FitOptions::default()).unwrap();
        for (a, b) in weighted.iter().zip(unweighted.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
        }
    }

    #[test]
    fn two_item_gap_is_recovered_from_many_samples() {
        let w: BTWorld<f64> = gen_world(2, 1.0, Spacing::Even, 0).unwrap();
        let samples =
            sample_prefs(&w, 50_000, GradeRule::MarginMedian, &GradeConfig::default(), 13).unwrap();
        let est: Vec<f64> =
            fit_weighted_mle(&samples, 2, &GradeConfig::default(), &FitOptions::default()).unwrap();
        assert!((est[1] - 1.0).abs() < 0.05, "estimated gap {}", est[1]);
    }

    #[test]
    fn disconnected_graph_is_an_identifiability_error() {
        let samples = vec![
            GradedSample { winner: 0, loser: 1, g_plus: 1, g_minus: -1 },
            GradedSample { winner: 2, loser: 3, g_plus: 1, g_minus: -1 },
        ];
        match fit_weighted_mle::<f64>(&samples, 4, &GradeConfig::default(), &FitOptions::default()) {
            Err(Error::Identifiability(_)) => {}
            other => panic!("expected identifiability error, got {other:?}"),
        }
    }

    #[test]
    fn estimates_depend_only_on_gaps() {
        // Sampling depends only on score differences, so two worlds that
        // differ by a constant shift produce identical samples and identical
        // centered estimates (exact equality, same arithmetic path).
        let w1 = BTWorld::from_scores(vec![0.0f64, 0.7, 1.9], 0).unwrap();
        let shifted_scores: Vec<f64> = vec![0.0, 0.7, 1.9]; // pinned form of +c shift
        let w2 = BTWorld::from_scores(shifted_scores, 0).unwrap();
        let s1 = sample_prefs(&w1, 2000, GradeRule::MarginMedian, &GradeConfig::default(), 4)
            .unwrap();
        let s2 = sample_prefs(&w2, 2000, GradeRule::MarginMedian, &GradeConfig::default(), 4)
            .unwrap();
        assert_eq!(s1, s2);
        let e1: Vec<f64> =
            fit_weighted_mle(&s1, 3, &GradeConfig::default(), &FitOptions::default()).unwrap();
        let e2: Vec<f64> =
            fit_weighted_mle(&s2, 3, &GradeConfig::default(), &FitOptions::default()).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn report_errors_shrink_with_more_samples() {
        let w: BTWorld<f64> = gen_world(8, 3.5, Spacing::Even, 0).unwrap();
        let cfg = ConsistencyConfig {
            seed: 7,
            ..ConsistencyConfig::default()
        };
        let rows = consistency_report(&w, &[1000, 20_000], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(
            rows[1].centered_max_error <= rows[0].centered_max_error,
            "errors {:?}",
            rows
        );
        assert_abs_diff_eq!(rows[1].kendall_tau, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn report_rejects_unsorted_grids() {
        let w: BTWorld<f64> = gen_world(3, 1.0, Spacing::Even, 0).unwrap();
        assert!(consistency_report(&w, &[500, 100], &ConsistencyConfig::default()).is_err());
    }

    #[test]
    fn kendall_tau_basics() {
        assert_abs_diff_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[0.1, 0.2, 0.3]), 1.0);
        assert_abs_diff_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[0.3, 0.2, 0.1]), -1.0);
    }
}
