//! Reference checks for the assignment solver and the focal-loss gradient.
//!
//! Nothing here calls into the code under test except at the comparison
//! point: assignments are enumerated exhaustively and derivatives come from
//! central differences of the loss value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{assignment_cost, focal_loss, hungarian};

/// Exhaustive minimum over every injection of the shorter side into the
/// longer one. Returns the best total (summed in row order) and its pairs.
/// Exponential; intended for sides of at most 8 or so.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> (f64, Vec<(usize, usize)>) {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return (0.0, Vec::new());
    }
    let transpose = n > m;
    let (short, long) = if transpose { (m, n) } else { (n, m) };
    let mut best = (f64::INFINITY, Vec::new());
    let mut chosen = Vec::with_capacity(short);
    let mut used = vec![false; long];

    fn rec(
        depth: usize,
        short: usize,
        long: usize,
        transpose: bool,
        cost: &[Vec<f64>],
        chosen: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut (f64, Vec<(usize, usize)>),
    ) {
        if depth == short {
            let mut pairs: Vec<(usize, usize)> = chosen
                .iter()
                .enumerate()
                .map(|(s, &l)| if transpose { (l, s) } else { (s, l) })
                .collect();
            pairs.sort_unstable();
            let total: f64 = pairs.iter().map(|&(r, c)| cost[r][c]).sum();
            if total < best.0 {
                *best = (total, pairs);
            }
            return;
        }
        for l in 0..long {
            if !used[l] {
                used[l] = true;
                chosen.push(l);
                rec(depth + 1, short, long, transpose, cost, chosen, used, best);
                chosen.pop();
                used[l] = false;
            }
        }
    }
    rec(0, short, long, transpose, cost, &mut chosen, &mut used, &mut best);
    best
}

/// Central difference `(f(x+h) − f(x−h)) / 2h`.
pub fn finite_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HungarianCheck {
    pub trials: usize,
    pub mismatches: usize,
    pub max_abs_diff: f64,
}

impl HungarianCheck {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Random cost matrix with sides in `1..=max_side`. Every fourth matrix has
/// small integer entries so that ties are common.
pub fn random_cost_matrix(rng: &mut impl Rng, max_side: usize) -> Vec<Vec<f64>> {
    let n = rng.random_range(1..=max_side);
    let m = rng.random_range(1..=max_side);
    let integer = rng.random_range(0..4) == 0;
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    if integer {
                        rng.random_range(0..5) as f64
                    } else {
                        rng.random_range(-10.0..10.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// Compares solver and brute force total cost on `trials` seeded matrices.
pub fn check_hungarian(seed: u64, trials: usize, max_side: usize) -> HungarianCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    let mut max_abs_diff = 0.0f64;
    for _ in 0..trials {
        let c = random_cost_matrix(&mut rng, max_side);
        let pairs = hungarian(&c).expect("finite costs");
        let (best, _) = brute_force_assignment(&c);
        let got = assignment_cost(&c, &pairs);
        let expected_len = c.len().min(c[0].len());
        if got != best || pairs.len() != expected_len {
            mismatches += 1;
        }
        max_abs_diff = max_abs_diff.max((got - best).abs());
    }
    HungarianCheck {
        trials,
        mismatches,
        max_abs_diff,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub trials: usize,
    pub failures: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl GradientCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// `|a − b| / max(|a|, |b|)`, 0 when both vanish.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Analytic focal-loss gradient against central differences on seeded
/// `(logit, target, α, γ)` tuples with `|logit| ≤ 10`.
pub fn check_focal_gradient(seed: u64, trials: usize, h: f64, tolerance: f64) -> GradientCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut max_rel_err = 0.0f64;
    for _ in 0..trials {
        let logit = rng.random_range(-10.0..=10.0);
        let target = rng.random_bool(0.5);
        let alpha = rng.random_range(0.05..0.95);
        let gamma = match rng.random_range(0..4) {
            0 => 0.0,
            1 => 2.0,
            _ => rng.random_range(0.0..4.0),
        };
        let (_, analytic) = focal_loss(logit, target, alpha, gamma);
        let numeric = finite_difference(|x| focal_loss(x, target, alpha, gamma).0, logit, h);
        let err = relative_error(analytic, numeric);
        if !(err <= tolerance) {
            failures += 1;
        }
        max_rel_err = max_rel_err.max(err);
    }
    GradientCheck {
        trials,
        failures,
        max_rel_err,
        tolerance,
    }
}
