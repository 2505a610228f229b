//! Multinomial logistic regression over standardized relation features.

use serde::{Deserialize, Serialize};

use super::{RelationDistribution, RelationType};
use crate::error::{invalid, Error, Result};

const CLASSES: usize = 3;

/// Linear softmax classifier with built-in feature standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationClassifier {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
}

impl RelationClassifier {
    /// All-zero parameters with identity standardization.
    pub fn zeros(features: usize) -> Self {
        Self {
            weights: vec![vec![0.0; features]; CLASSES],
            bias: vec![0.0; CLASSES],
            feature_mean: vec![0.0; features],
            feature_std: vec![1.0; features],
        }
    }

    pub fn feature_count(&self) -> usize {
        self.feature_mean.len()
    }

    fn check(&self) -> Result<()> {
        let f = self.feature_count();
        if self.weights.len() != CLASSES
            || self.weights.iter().any(|w| w.len() != f)
            || self.bias.len() != CLASSES
            || self.feature_std.len() != f
        {
            return invalid("classifier parameter shapes are inconsistent");
        }
        let finite = self
            .weights
            .iter()
            .flatten()
            .chain(&self.bias)
            .chain(&self.feature_mean)
            .chain(&self.feature_std)
            .all(|v| v.is_finite());
        if !finite || self.feature_std.iter().any(|&s| s <= 0.0) {
            return invalid("classifier parameters must be finite with positive feature std");
        }
        Ok(())
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.feature_mean.iter().zip(&self.feature_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.weights.iter().flatten().chain(&self.bias).copied().collect()
    }

    fn set_flat_params(&mut self, p: &[f64]) {
        let f = self.feature_count();
        for (c, w) in self.weights.iter_mut().enumerate() {
            w.copy_from_slice(&p[c * f..(c + 1) * f]);
        }
        self.bias.copy_from_slice(&p[CLASSES * f..]);
    }

    pub fn logits(&self, x: &[f64]) -> [f64; CLASSES] {
        let z = self.standardize(x);
        logits_from(&self.flat_params(), &z)
    }

    pub fn predict(&self, x: &[f64]) -> RelationDistribution {
        RelationDistribution(softmax(&self.logits(x)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: RelationClassifier = serde_json::from_str(s)?;
        c.check()?;
        Ok(c)
    }
}

fn logits_from(params: &[f64], z: &[f64]) -> [f64; CLASSES] {
    let f = z.len();
    let mut out = [0.0; CLASSES];
    for (c, o) in out.iter_mut().enumerate() {
        let w = &params[c * f..(c + 1) * f];
        *o = params[CLASSES * f + c] + w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
    }
    out
}

/// Numerically stable softmax.
pub fn softmax<const N: usize>(logits: &[f64; N]) -> [f64; N] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; N];
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - m).exp();
        total += *o;
    }
    for o in &mut out {
        *o /= total;
    }
    out
}

/// Mean cross-entropy of a flat parameter vector `[W (row-major 3 x F), b (3)]` and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGradient {
    pub loss: f64,
    pub gradient: Vec<f64>,
}

impl LossAndGradient {
    pub fn evaluate(params: &[f64], inputs: &[Vec<f64>], labels: &[usize]) -> Self {
        let f = inputs.first().map_or(0, Vec::len);
        let n = inputs.len() as f64;
        let mut loss = 0.0;
        let mut gradient = vec![0.0; params.len()];
        for (z, &y) in inputs.iter().zip(labels) {
            let logits = logits_from(params, z);
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
            loss += lse - logits[y];
            for c in 0..CLASSES {
                let residual = (logits[c] - lse).exp() - if c == y { 1.0 } else { 0.0 };
                for (g, v) in gradient[c * f..(c + 1) * f].iter_mut().zip(z) {
                    *g += residual * v;
                }
                gradient[CLASSES * f + c] += residual;
            }
        }
        for g in &mut gradient {
            *g /= n;
        }
        Self { loss: loss / n, gradient }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingOptions {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            epochs: 2000,
            learning_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
    pub train_accuracy: f64,
}

/// Fit the classifier by full-batch gradient descent from zero parameters.
/// Standardization statistics come from the training corpus.
pub fn train_relation_classifier(
    corpus: &[(Vec<f64>, RelationType)],
    opts: TrainingOptions,
) -> Result<(RelationClassifier, TrainingReport)> {
    if corpus.is_empty() {
        return invalid("empty training corpus");
    }
    for r in RelationType::ALL {
        if !corpus.iter().any(|(_, y)| *y == r) {
            return Err(Error::MissingClass(r.as_str()));
        }
    }
    let f = corpus[0].0.len();
    if corpus.iter().any(|(x, _)| x.len() != f) {
        return invalid("feature vectors have inconsistent lengths");
    }
    let n = corpus.len() as f64;
    let mean: Vec<f64> = (0..f).map(|j| corpus.iter().map(|(x, _)| x[j]).sum::<f64>() / n).collect();
    let std: Vec<f64> = (0..f)
        .map(|j| {
            let var = corpus.iter().map(|(x, _)| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if var > 1e-24 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();

    let mut clf = RelationClassifier {
        feature_mean: mean,
        feature_std: std,
        ..RelationClassifier::zeros(f)
    };
    let inputs: Vec<Vec<f64>> = corpus.iter().map(|(x, _)| clf.standardize(x)).collect();
    let labels: Vec<usize> = corpus.iter().map(|(_, y)| y.index()).collect();

    let mut params = clf.flat_params();
    let mut history = Vec::with_capacity(opts.epochs + 1);
    for _ in 0..opts.epochs {
        let lg = LossAndGradient::evaluate(&params, &inputs, &labels);
        history.push(lg.loss);
        for (p, g) in params.iter_mut().zip(&lg.gradient) {
            *p -= opts.learning_rate * g;
        }
    }
    let final_loss = LossAndGradient::evaluate(&params, &inputs, &labels).loss;
    history.push(final_loss);
    clf.set_flat_params(&params);

    let correct = corpus
        .iter()
        .filter(|(x, y)| clf.predict(x).argmax() == *y)
        .count();
    let report = TrainingReport {
        initial_loss: history[0],
        final_loss,
        loss_history: history,
        train_accuracy: correct as f64 / n,
    };
    Ok((clf, report))
}
