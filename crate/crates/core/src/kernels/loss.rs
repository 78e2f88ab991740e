use super::KernelError;

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`, stable for large `|x|`.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `w_p = negatives_p / positives_p` for every predicate.
pub fn positive_weights(positives: &[u64], negatives: &[u64]) -> Result<Vec<f64>, KernelError> {
    if positives.len() != negatives.len() {
        return Err(KernelError::Shape(format!(
            "{} positive counts vs {} negative counts",
            positives.len(),
            negatives.len()
        )));
    }
    positives
        .iter()
        .zip(negatives)
        .enumerate()
        .map(|(p, (&pos, &neg))| {
            if pos == 0 {
                Err(KernelError::NoPositives(p))
            } else {
                Ok(neg as f64 / pos as f64)
            }
        })
        .collect()
}

/// An `N x P` batch of relation logits with binary labels and per-predicate
/// positive weights. Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationBatch {
    rows: usize,
    cols: usize,
    logits: Vec<f64>,
    labels: Vec<bool>,
    weights: Vec<f64>,
}

impl RelationBatch {
    pub fn new(
        rows: usize,
        cols: usize,
        logits: Vec<f64>,
        labels: Vec<bool>,
        weights: Vec<f64>,
    ) -> Result<Self, KernelError> {
        if rows == 0 || cols == 0 {
            return Err(KernelError::Shape(format!("empty batch {rows}x{cols}")));
        }
        if logits.len() != rows * cols || labels.len() != rows * cols || weights.len() != cols {
            return Err(KernelError::Shape(format!(
                "batch {rows}x{cols} with {} logits, {} labels, {} weights",
                logits.len(),
                labels.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(KernelError::InvalidWeights(format!(
                "positive weight {w} must be finite and > 0"
            )));
        }
        Ok(Self {
            rows,
            cols,
            logits,
            labels,
            weights,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same labels and weights with new logits.
    pub fn with_logits(&self, logits: Vec<f64>) -> Result<Self, KernelError> {
        Self::new(
            self.rows,
            self.cols,
            logits,
            self.labels.clone(),
            self.weights.clone(),
        )
    }
}

/// Mean weighted binary cross entropy over the batch and its gradient with
/// respect to the logits.
///
/// Per element: `l = -(w*y*ln σ(x) + (1-y)*ln(1-σ(x)))`, so
/// `dl/dx = w*y*(σ(x)-1) + (1-y)*σ(x)`. Both are divided by `N*P`.
pub fn relation_loss(batch: &RelationBatch) -> Result<(f64, Vec<f64>), KernelError> {
    let scale = (batch.rows * batch.cols) as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(batch.logits.len());
    for (i, (&x, &y)) in batch.logits.iter().zip(&batch.labels).enumerate() {
        if !x.is_finite() {
            return Err(KernelError::NonFinite {
                row: i / batch.cols,
                col: i % batch.cols,
            });
        }
        let w = batch.weights[i % batch.cols];
        let s = sigmoid(x);
        // -ln σ(x) = softplus(-x), -ln(1-σ(x)) = softplus(x)
        let (l, g) = if y {
            (w * softplus(-x), w * (s - 1.0))
        } else {
            (softplus(x), s)
        };
        total += l;
        grad.push(g / scale);
    }
    Ok((total / scale, grad))
}

/// Inverse-frequency class weights normalized to mean 1.
pub fn inverse_frequency_weights(frequencies: &[f64]) -> Result<Vec<f64>, KernelError> {
    if let Some(c) = frequencies.iter().position(|&f| f.is_nan() || f <= 0.0) {
        return Err(KernelError::ZeroFrequency(c));
    }
    let inv: Vec<f64> = frequencies.iter().map(|f| 1.0 / f).collect();
    let mean = inv.iter().sum::<f64>() / inv.len() as f64;
    Ok(inv.into_iter().map(|w| w / mean).collect())
}

fn weighted_cross_entropy(
    logits: &[f64],
    label: usize,
    weights: &[f64],
) -> Result<f64, KernelError> {
    if label >= logits.len() {
        return Err(KernelError::InvalidLabel {
            label,
            classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    Ok(weights[label] * (lse - logits[label]))
}

/// Averaged subject and object cross entropy, each weighted by the inverse
/// frequency of its target class.
pub fn node_loss(
    subject_logits: &[f64],
    object_logits: &[f64],
    subject_label: usize,
    object_label: usize,
    class_frequencies: &[f64],
) -> Result<f64, KernelError> {
    let c = class_frequencies.len();
    if subject_logits.len() != c || object_logits.len() != c || c == 0 {
        return Err(KernelError::Shape(format!(
            "{} subject logits, {} object logits, {} classes",
            subject_logits.len(),
            object_logits.len(),
            c
        )));
    }
    if let Some((row, col)) = subject_logits
        .iter()
        .chain(object_logits)
        .position(|z| !z.is_finite())
        .map(|i| (i / c, i % c))
    {
        return Err(KernelError::NonFinite { row, col });
    }
    let weights = inverse_frequency_weights(class_frequencies)?;
    let l_sbj = weighted_cross_entropy(subject_logits, subject_label, &weights)?;
    let l_obj = weighted_cross_entropy(object_logits, object_label, &weights)?;
    Ok((l_sbj + l_obj) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub relation: f64,
    pub node: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            relation: 0.8,
            node: 0.2,
        }
    }
}

impl LossWeights {
    pub fn new(relation: f64, node: f64) -> Result<Self, KernelError> {
        if !(relation >= 0.0 && node >= 0.0 && relation + node > 0.0) {
            return Err(KernelError::InvalidWeights(format!(
                "relation {relation}, node {node}: need non-negative weights with positive sum"
            )));
        }
        Ok(Self { relation, node })
    }
}

pub fn total_loss(relation_loss: f64, node_loss: f64, weights: LossWeights) -> f64 {
    weights.relation * relation_loss + weights.node * node_loss
}
