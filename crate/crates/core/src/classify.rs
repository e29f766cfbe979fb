//! Classifier-based fitness evaluators for feature masks.
//!
//! Two evaluators sit behind one accuracy interface: leave-one-out
//! cross-validated 1-nearest-neighbor, and a one-vs-rest linear SVM scored
//! by stratified k-fold. Both are pure functions of (dataset, mask, spec),
//! so masks can be evaluated concurrently against a shared dataset.
//!
//! Policy decisions baked in here: an empty feature mask scores 0.0 instead
//! of erroring (search may generate all-zero masks, and a zero score pushes
//! it away from them); nearest-neighbor distance ties go to the lowest
//! sample index; one-vs-rest conflicts resolve by decision-value argmax.

mod smo;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMask};
use crate::error::{Error, Result};
use smo::SmoSolver;

pub(crate) const DEFAULT_SVM_TOL: f64 = 1e-3;

/// Which classifier scores a feature subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Evaluator {
    /// Leave-one-out 1-NN accuracy; deterministic, no folds, no seed.
    KnnLoocv,
    /// One-vs-rest linear SVM, mean accuracy over stratified k folds.
    SvmOvrKfold,
}

/// Fitness evaluator configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessSpec {
    pub evaluator: Evaluator,
    /// Fold count for the SVM path.
    pub k_folds: usize,
    /// Soft-margin penalty.
    pub svm_c: f64,
    /// KKT tolerance for the SVM solver.
    pub svm_tol: f64,
    /// Seeds the fold plan on the SVM path. The plan depends only on labels,
    /// folds and this seed, so fitness stays a static function during search.
    pub rng_seed: u64,
}

impl Default for FitnessSpec {
    fn default() -> Self {
        FitnessSpec {
            evaluator: Evaluator::KnnLoocv,
            k_folds: 10,
            svm_c: 1.0,
            svm_tol: DEFAULT_SVM_TOL,
            rng_seed: 0,
        }
    }
}

impl FitnessSpec {
    pub fn with_seed(mut self, rng_seed: u64) -> Self {
        self.rng_seed = rng_seed;
        self
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Label of the training sample nearest to `query` in Euclidean distance;
/// ties go to the lowest sample index.
pub fn knn_1nn_predict(train: &Dataset, query: &[f64]) -> Result<usize> {
    if train.n_samples() == 0 {
        return Err(Error::EmptyInput("1-NN on empty training set"));
    }
    if query.len() != train.n_features() {
        return Err(Error::DimensionMismatch {
            expected: train.n_features(),
            got: query.len(),
        });
    }
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..train.n_samples() {
        let d2 = squared_distance(train.row(i), query);
        if d2 < best.0 {
            best = (d2, i);
        }
    }
    Ok(train.labels()[best.1])
}

/// Fraction of samples whose held-out 1-NN prediction matches their label.
/// Deterministic; a zero-feature view scores 0.0 by policy.
pub fn loocv_accuracy_1nn(d: &Dataset) -> Result<f64> {
    if d.n_samples() < 2 {
        return Err(Error::InvalidParam(format!(
            "leave-one-out needs at least 2 samples, got {}",
            d.n_samples()
        )));
    }
    if d.n_features() == 0 {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for held_out in 0..d.n_samples() {
        let query = d.row(held_out);
        let mut best = (f64::INFINITY, usize::MAX);
        for i in 0..d.n_samples() {
            if i == held_out {
                continue;
            }
            let d2 = squared_distance(d.row(i), query);
            if d2 < best.0 {
                best = (d2, i);
            }
        }
        if d.labels()[best.1] == d.labels()[held_out] {
            correct += 1;
        }
    }
    Ok(correct as f64 / d.n_samples() as f64)
}

/// Linear decision function `f(x) = w . x + b` separating one class from
/// the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub class_of_interest: usize,
}

impl BinarySvmModel {
    fn constant(n_features: usize, class_of_interest: usize, positive: bool) -> Self {
        BinarySvmModel {
            weights: vec![0.0; n_features],
            bias: if positive { 1.0 } else { -1.0 },
            class_of_interest,
        }
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(self.weights.iter().zip(x).map(|(&w, &v)| w * v).sum::<f64>() + self.bias)
    }
}

/// Train a soft-margin linear classifier for `positive_class` against the
/// rest. If one side has no samples, the result is a constant classifier
/// biased to the side that is present.
pub fn svm_train_binary(train: &Dataset, positive_class: usize, c: f64) -> Result<BinarySvmModel> {
    svm_train_binary_with_tol(train, positive_class, c, DEFAULT_SVM_TOL)
}

pub fn svm_train_binary_with_tol(
    train: &Dataset,
    positive_class: usize,
    c: f64,
    tol: f64,
) -> Result<BinarySvmModel> {
    let n = train.n_samples();
    if n == 0 {
        return Err(Error::EmptyInput("SVM training on empty set"));
    }
    if c <= 0.0 {
        return Err(Error::InvalidParam(format!("svm_c must be positive, got {c}")));
    }
    let y: Vec<f64> = train
        .labels()
        .iter()
        .map(|&l| if l == positive_class { 1.0 } else { -1.0 })
        .collect();
    let positives = y.iter().filter(|&&v| v > 0.0).count();
    if positives == 0 {
        return Ok(BinarySvmModel::constant(train.n_features(), positive_class, false));
    }
    if positives == n {
        return Ok(BinarySvmModel::constant(train.n_features(), positive_class, true));
    }

    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let dot: f64 = train
                .row(i)
                .iter()
                .zip(train.row(j))
                .map(|(&a, &b)| a * b)
                .sum();
            gram[i * n + j] = dot;
            gram[j * n + i] = dot;
        }
    }

    let mut solver = SmoSolver::new(gram, y.clone(), c, tol);
    solver.solve();

    let mut weights = vec![0.0; train.n_features()];
    for (i, &yi) in y.iter().enumerate() {
        let coef = solver.alpha[i] * yi;
        if coef != 0.0 {
            for (w, &x) in weights.iter_mut().zip(train.row(i)) {
                *w += coef * x;
            }
        }
    }
    Ok(BinarySvmModel {
        weights,
        bias: solver.bias,
        class_of_interest: positive_class,
    })
}

/// One-vs-rest vote: a unique positive decision wins outright; otherwise the
/// class with the largest decision value wins, ties to the lowest class index.
pub fn ovr_predict(models: &[BinarySvmModel], query: &[f64]) -> Result<usize> {
    if models.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "one-vs-rest needs at least 2 models, got {}",
            models.len()
        )));
    }
    let decisions: Vec<f64> = models
        .iter()
        .map(|m| m.decision(query))
        .collect::<Result<_>>()?;
    let positive: Vec<usize> = (0..decisions.len())
        .filter(|&i| decisions[i] > 0.0)
        .collect();
    let winner = if positive.len() == 1 {
        positive[0]
    } else {
        let mut best = 0usize;
        for i in 1..decisions.len() {
            if decisions[i] > decisions[best] {
                best = i;
            }
        }
        best
    };
    Ok(models[winner].class_of_interest)
}

/// Mean over stratified folds of the one-vs-rest SVM test accuracy, training
/// on the complementary folds each time. Deterministic given `rng_seed`.
pub fn kfold_accuracy_svm(d: &Dataset, spec: &FitnessSpec) -> Result<f64> {
    if d.n_features() == 0 {
        return Ok(0.0);
    }
    let plan = d.stratified_kfold(spec.k_folds, spec.rng_seed)?;
    let mut fold_accuracies = Vec::with_capacity(plan.k_folds());
    for fold in 0..plan.k_folds() {
        let train = d.select_rows(&plan.train_indices(fold));
        let models: Vec<BinarySvmModel> = (0..d.n_classes())
            .map(|class| svm_train_binary_with_tol(&train, class, spec.svm_c, spec.svm_tol))
            .collect::<Result<_>>()?;
        let test = plan.test_indices(fold);
        let mut correct = 0usize;
        for &i in &test {
            if ovr_predict(&models, d.row(i))? == d.labels()[i] {
                correct += 1;
            }
        }
        fold_accuracies.push(correct as f64 / test.len() as f64);
    }
    Ok(fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64)
}

/// Accuracy of the dataset restricted to `mask` under the configured
/// evaluator. The empty mask scores 0.0.
pub fn fitness(d: &Dataset, mask: &FeatureMask, spec: &FitnessSpec) -> Result<f64> {
    if mask.len() != d.n_features() {
        return Err(Error::DimensionMismatch {
            expected: d.n_features(),
            got: mask.len(),
        });
    }
    if mask.popcount() == 0 {
        return Ok(0.0);
    }
    let masked = d.apply_mask(mask)?;
    match spec.evaluator {
        Evaluator::KnnLoocv => loocv_accuracy_1nn(&masked),
        Evaluator::SvmOvrKfold => kfold_accuracy_svm(&masked, spec),
    }
}
