use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::network::{cross_entropy, label_to_index, Mlp};
use super::{Scalar, TrainConfig};
use crate::error::{Error, Result};
use crate::fusion::{shuffled_indices, SampleSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Sample-weighted mean batch loss over the epoch.
    pub loss: f64,
    /// Fraction of samples classified correctly by the pre-update batch forward passes.
    pub accuracy: f64,
}

/// Feature matrix and output indices (label 1 → 0, label 2 → 1).
pub fn samples_to_arrays(s: &SampleSet) -> Result<(Array2<f32>, Vec<usize>)> {
    let x = Array2::from_shape_vec((s.len(), s.n_bands()), s.features.clone())
        .map_err(|e| Error::Shape(e.to_string()))?;
    let t = s.labels.iter().map(|&l| label_to_index(l)).collect::<Result<Vec<_>>>()?;
    Ok((x, t))
}

fn argmax<F: Scalar>(row: ndarray::ArrayView1<F>) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Mini-batch training. Each epoch reshuffles the samples with a ChaCha8
/// stream seeded from `cfg.seed`, then runs forward, backward and one Adam
/// step per batch. The last batch of an epoch may be short.
pub fn train<F: Scalar>(
    model: &mut Mlp<F>,
    features: ArrayView2<F>,
    targets: &[usize],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    let n = features.nrows();
    if n == 0 {
        return Err(Error::EmptySamples("training set is empty".into()));
    }
    if targets.len() != n {
        return Err(Error::LengthMismatch {
            what: "training targets vs samples",
            expected: n,
            actual: targets.len(),
        });
    }
    if features.ncols() != model.architecture().input_size {
        return Err(Error::Shape(format!(
            "model expects {} bands, training data has {}",
            model.architecture().input_size,
            features.ncols()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch_targets = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        let order = shuffled_indices(n, &mut rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = features.select(Axis(0), chunk);
            batch_targets.clear();
            batch_targets.extend(chunk.iter().map(|&i| targets[i]));

            let cache = model.forward(batch.view())?;
            let loss = cross_entropy(cache.probabilities.view(), &batch_targets)?
                .to_f64()
                .expect("float");
            if !loss.is_finite() {
                return Err(Error::Internal(format!("non-finite loss at epoch {epoch}")));
            }
            loss_sum += loss * chunk.len() as f64;
            correct += cache
                .probabilities
                .rows()
                .into_iter()
                .zip(&batch_targets)
                .filter(|(row, &t)| argmax(*row) == t)
                .count();
            let grads = model.backward(&cache, &batch_targets)?;
            model.adam_step(&grads, cfg)?;
        }
        history.push(EpochStats {
            epoch,
            loss: loss_sum / n as f64,
            accuracy: correct as f64 / n as f64,
        });
    }
    Ok(history)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub total: usize,
    pub correct: usize,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
}

pub fn evaluate<F: Scalar>(model: &Mlp<F>, features: ArrayView2<F>, targets: &[usize]) -> Result<Evaluation> {
    if features.ncols() != model.architecture().input_size {
        return Err(Error::Shape(format!(
            "model expects {} bands, data has {}",
            model.architecture().input_size,
            features.ncols()
        )));
    }
    if targets.len() != features.nrows() {
        return Err(Error::LengthMismatch {
            what: "evaluation targets vs samples",
            expected: features.nrows(),
            actual: targets.len(),
        });
    }
    if features.nrows() == 0 {
        return Err(Error::EmptySamples("evaluation set is empty".into()));
    }
    let k = model.architecture().output_size;
    if let Some(t) = targets.iter().find(|&&t| t >= k) {
        return Err(Error::Shape(format!("target class index {t} out of range for {k} outputs")));
    }
    let mut confusion = vec![vec![0u64; k]; k];
    const CHUNK: usize = 4096;
    for (start, block) in features.axis_chunks_iter(Axis(0), CHUNK).enumerate() {
        let p = model.predict_proba(block)?;
        for (j, row) in p.rows().into_iter().enumerate() {
            confusion[targets[start * CHUNK + j]][argmax(row)] += 1;
        }
    }
    let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let total = targets.len();
    Ok(Evaluation {
        accuracy: correct as f64 / total as f64,
        total,
        correct: correct as usize,
        confusion,
    })
}

/// `epoch,loss,accuracy` with shortest round-trip float formatting.
pub fn history_to_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,loss,accuracy\n");
    for h in history {
        out.push_str(&format!("{},{},{}\n", h.epoch, h.loss, h.accuracy));
    }
    out
}
