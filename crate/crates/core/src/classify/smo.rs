//! Dual pair solver for the soft-margin linear SVM
//! (minimize `0.5 * ||w||^2 + C * sum hinge`), working on a precomputed
//! Gram matrix.
//!
//! Each step analytically optimizes the maximal violating pair: the sample
//! that most wants its multiplier pushed up against the one that most wants
//! its multiplier pushed down. Selection never consults the bias, so it
//! cannot stall on a bad running bias; the bias is placed once from the
//! final multipliers. Ties break to the lowest index, making the solver
//! fully deterministic.

/// Hard cap on pair steps; small problems settle in a few hundred.
const MAX_STEPS: usize = 200_000;
/// Minimum multiplier change that counts as progress.
const MIN_STEP: f64 = 1e-12;
/// Multipliers this close to a bound snap onto it, so later set membership
/// tests see exact bounds instead of arithmetic crumbs.
const SNAP: f64 = 1e-10;

pub(crate) struct SmoSolver {
    n: usize,
    gram: Vec<f64>,
    y: Vec<f64>,
    c: f64,
    tol: f64,
    pub(crate) alpha: Vec<f64>,
    pub(crate) bias: f64,
    /// Gradient cache: g_k = u_k - y_k where u_k is the bias-free decision
    /// value `sum_i alpha_i y_i K_ik`.
    g: Vec<f64>,
}

impl SmoSolver {
    /// `gram` is the row-major n*n kernel matrix, `y` the +/-1 labels.
    pub(crate) fn new(gram: Vec<f64>, y: Vec<f64>, c: f64, tol: f64) -> Self {
        let n = y.len();
        debug_assert_eq!(gram.len(), n * n);
        SmoSolver {
            n,
            gram,
            g: y.iter().map(|&yi| -yi).collect(),
            y,
            c,
            tol,
            alpha: vec![0.0; n],
            bias: 0.0,
        }
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    /// Sample whose multiplier may still move up (in `y_i alpha_i`) with the
    /// smallest g, and sample that may move down with the largest g. Their
    /// g-gap is the optimality measure: it is 0 at the exact optimum.
    fn maximal_violating_pair(&self) -> Option<(usize, usize, f64)> {
        let mut up: Option<usize> = None;
        let mut low: Option<usize> = None;
        for i in 0..self.n {
            let positive = self.y[i] > 0.0;
            let in_up = (positive && self.alpha[i] < self.c) || (!positive && self.alpha[i] > 0.0);
            let in_low = (positive && self.alpha[i] > 0.0) || (!positive && self.alpha[i] < self.c);
            if in_up && up.is_none_or(|u| self.g[i] < self.g[u]) {
                up = Some(i);
            }
            if in_low && low.is_none_or(|l| self.g[i] > self.g[l]) {
                low = Some(i);
            }
        }
        match (up, low) {
            (Some(i), Some(j)) if i != j => Some((i, j, self.g[j] - self.g[i])),
            _ => None,
        }
    }

    #[inline]
    fn snap_to_bounds(&self, alpha: f64) -> f64 {
        if alpha < SNAP {
            0.0
        } else if alpha > self.c - SNAP {
            self.c
        } else {
            alpha
        }
    }

    /// One analytic update of the current maximal violating pair. Returns
    /// false once the gap is within tolerance or no useful move exists.
    pub(crate) fn step_once(&mut self) -> bool {
        let Some((i, j, gap)) = self.maximal_violating_pair() else {
            return false;
        };
        if gap <= self.tol {
            return false;
        }
        let (ai_old, aj_old) = (self.alpha[i], self.alpha[j]);
        let (yi, yj) = (self.y[i], self.y[j]);
        let same_label = yi == yj;
        let (lo, hi) = if same_label {
            (
                (ai_old + aj_old - self.c).max(0.0),
                (ai_old + aj_old).min(self.c),
            )
        } else {
            (
                (aj_old - ai_old).max(0.0),
                (self.c + aj_old - ai_old).min(self.c),
            )
        };
        if lo >= hi {
            return false;
        }
        let eta = self.k(i, i) + self.k(j, j) - 2.0 * self.k(i, j);
        let aj_unclipped = if eta > 1e-15 {
            aj_old + yj * (self.g[i] - self.g[j]) / eta
        } else {
            // flat direction (duplicate points): the objective is linear
            // along the pair segment and improves toward smaller y_j alpha_j
            if yj > 0.0 {
                lo
            } else {
                hi
            }
        };
        let aj_new = self.snap_to_bounds(aj_unclipped.clamp(lo, hi));
        if (aj_new - aj_old).abs() < MIN_STEP {
            return false;
        }
        let ai_new = self.snap_to_bounds(ai_old + yi * yj * (aj_old - aj_new));

        let (di, dj) = (ai_new - ai_old, aj_new - aj_old);
        for k in 0..self.n {
            self.g[k] += yi * di * self.k(i, k) + yj * dj * self.k(j, k);
        }
        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        true
    }

    /// Optimize the multipliers, then place the bias.
    pub(crate) fn solve(&mut self) {
        for _ in 0..MAX_STEPS {
            if !self.step_once() {
                break;
            }
        }
        self.recompute_bias();
    }

    /// Bias from the final multipliers: the mean exact-margin bias over free
    /// multipliers when any exist, otherwise the midpoint of the interval
    /// the bound constraints leave open.
    fn recompute_bias(&mut self) {
        let mut free_sum = 0.0;
        let mut free_count = 0usize;
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for i in 0..self.n {
            // bias that puts sample i exactly on the margin
            let target = -self.g[i];
            if self.alpha[i] > 0.0 && self.alpha[i] < self.c {
                free_sum += target;
                free_count += 1;
            } else {
                let at_zero = self.alpha[i] == 0.0;
                let is_lower = (at_zero && self.y[i] > 0.0) || (!at_zero && self.y[i] < 0.0);
                if is_lower {
                    lower = lower.max(target);
                } else {
                    upper = upper.min(target);
                }
            }
        }
        self.bias = if free_count > 0 {
            free_sum / free_count as f64
        } else if lower == f64::NEG_INFINITY {
            upper
        } else if upper == f64::INFINITY {
            lower
        } else {
            0.5 * (lower + upper)
        };
    }

    /// Dual objective `sum alpha - 0.5 * sum_ij alpha_i alpha_j y_i y_j K_ij`;
    /// every accepted pair update increases it.
    #[cfg(test)]
    pub(crate) fn dual_objective(&self) -> f64 {
        let mut quad = 0.0;
        for i in 0..self.n {
            if self.alpha[i] == 0.0 {
                continue;
            }
            for j in 0..self.n {
                if self.alpha[j] == 0.0 {
                    continue;
                }
                quad += self.alpha[i] * self.alpha[j] * self.y[i] * self.y[j] * self.k(i, j);
            }
        }
        self.alpha.iter().sum::<f64>() - 0.5 * quad
    }

    /// Largest KKT violation over all samples given the placed bias
    /// (0 when optimal).
    #[cfg(test)]
    pub(crate) fn max_kkt_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let margin = 1.0 + self.y[i] * (self.g[i] + self.bias);
            if self.alpha[i] < self.c {
                worst = worst.max(1.0 - margin);
            }
            if self.alpha[i] > 0.0 {
                worst = worst.max(margin - 1.0);
            }
        }
        worst
    }
}
