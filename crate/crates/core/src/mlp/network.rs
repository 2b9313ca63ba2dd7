use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MlpArchitecture, Scalar, TrainConfig};
use crate::error::{Error, Result};

/// Affine layer; `weights` is `outputs × inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<F: Scalar> {
    pub weights: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Scalar> Dense<F> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// Fully connected ReLU network with a softmax output and Adam state.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<F: Scalar> {
    arch: MlpArchitecture,
    pub layers: Vec<Dense<F>>,
    /// First-moment estimates, shaped like `layers`.
    pub first_moments: Vec<Dense<F>>,
    /// Second-moment estimates, shaped like `layers`.
    pub second_moments: Vec<Dense<F>>,
    pub step: u64,
}

/// Per-layer gradients, shaped like the model's layers.
pub type Gradients<F> = Vec<Dense<F>>;

/// Activations kept from a forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache<F: Scalar> {
    /// Input batch followed by every hidden layer's ReLU output.
    pub activations: Vec<Array2<F>>,
    /// Softmax output, one row per sample.
    pub probabilities: Array2<F>,
}

impl<F: Scalar> Mlp<F> {
    /// Zero weights and biases; mostly useful in tests.
    pub fn zeros(arch: &MlpArchitecture) -> Result<Self> {
        arch.validate()?;
        let layers: Vec<Dense<F>> = arch.layer_shapes().map(|(i, o)| Dense::zeros(i, o)).collect();
        Ok(Mlp {
            arch: arch.clone(),
            first_moments: layers.clone(),
            second_moments: layers.clone(),
            layers,
            step: 0,
        })
    }

    /// Weights uniform on `±sqrt(6 / fan_in)`, biases zero, moments zero.
    /// Samples are drawn in f64 from `ChaCha8Rng::seed_from_u64(seed)`.
    pub fn init(arch: &MlpArchitecture, seed: u64) -> Result<Self> {
        let mut model = Mlp::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.layers {
            let limit = (6.0 / layer.inputs() as f64).sqrt();
            layer
                .weights
                .iter_mut()
                .for_each(|w| *w = F::from_f64(rng.gen_range(-limit..limit)).expect("finite"));
        }
        Ok(model)
    }

    pub fn architecture(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, batch: ArrayView2<F>) -> Result<ForwardCache<F>> {
        if batch.ncols() != self.arch.input_size {
            return Err(Error::Shape(format!(
                "expected {} features per sample, got {}",
                self.arch.input_size,
                batch.ncols()
            )));
        }
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len());
        activations.push(batch.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = activations[i].dot(&layer.weights.t());
            z += &layer.bias;
            if i == last {
                softmax_rows(&mut z);
                return Ok(ForwardCache {
                    activations,
                    probabilities: z,
                });
            }
            z.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
            activations.push(z);
        }
        unreachable!("architecture has at least one layer")
    }

    /// Class probabilities only.
    pub fn predict_proba(&self, batch: ArrayView2<F>) -> Result<Array2<F>> {
        Ok(self.forward(batch)?.probabilities)
    }

    /// Gradients of mean cross-entropy for the batch that produced `cache`.
    pub fn backward(&self, cache: &ForwardCache<F>, targets: &[usize]) -> Result<Gradients<F>> {
        let n = cache.probabilities.nrows();
        if targets.len() != n || cache.activations.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "cache holds {n} samples and {} activations, got {} targets for {} layers",
                cache.activations.len(),
                targets.len(),
                self.layers.len()
            )));
        }
        check_targets(targets, self.arch.output_size)?;

        // softmax + cross-entropy: dL/dz = (p - onehot) / n
        let inv_n = F::one() / F::from_usize(n).expect("batch size");
        let mut delta = cache.probabilities.clone();
        for (row, &t) in targets.iter().enumerate() {
            delta[[row, t]] = delta[[row, t]] - F::one();
        }
        delta.mapv_inplace(|v| v * inv_n);

        let mut grads: Vec<Dense<F>> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let input = &cache.activations[i];
            grads.push(Dense {
                weights: delta.t().dot(input),
                bias: delta.sum_axis(Axis(0)),
            });
            if i > 0 {
                let mut upstream = delta.dot(&self.layers[i].weights);
                Zip::from(&mut upstream).and(input).for_each(|g, &a| {
                    if a <= F::zero() {
                        *g = F::zero();
                    }
                });
                delta = upstream;
            }
        }
        grads.reverse();
        Ok(grads)
    }

    /// One bias-corrected Adam update.
    pub fn adam_step(&mut self, grads: &Gradients<F>, cfg: &TrainConfig) -> Result<()> {
        if grads.len() != self.layers.len()
            || grads
                .iter()
                .zip(&self.layers)
                .any(|(g, l)| g.weights.dim() != l.weights.dim() || g.bias.len() != l.bias.len())
        {
            return Err(Error::Shape("gradient shapes do not match the model".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let c = |v: f64| F::from_f64(v).expect("finite");
        let (b1, b2) = (c(cfg.beta1), c(cfg.beta2));
        let (one_b1, one_b2) = (c(1.0 - cfg.beta1), c(1.0 - cfg.beta2));
        let corr1 = c(1.0 - cfg.beta1.powi(t));
        let corr2 = c(1.0 - cfg.beta2.powi(t));
        let (lr, eps) = (c(cfg.learning_rate), c(cfg.epsilon));

        let update = |theta: &mut F, m: &mut F, v: &mut F, g: F| {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *theta = *theta - lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, m), v), g) in self
            .layers
            .iter_mut()
            .zip(&mut self.first_moments)
            .zip(&mut self.second_moments)
            .zip(grads)
        {
            Zip::from(&mut layer.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .and(&g.weights)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        Ok(())
    }
}

fn check_targets(targets: &[usize], classes: usize) -> Result<()> {
    match targets.iter().find(|&&t| t >= classes) {
        Some(t) => Err(Error::Shape(format!("target class index {t} out of range for {classes} outputs"))),
        None => Ok(()),
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows<F: Scalar>(z: &mut Array2<F>) {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.iter().copied().fold(F::zero(), |a, b| a + b);
        row.mapv_inplace(|v| v / sum);
    }
}

/// Lower clamp applied to probabilities inside the log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Mean of `-ln p[target]` with `p` clamped below at 1e-12.
pub fn cross_entropy<F: Scalar>(probabilities: ArrayView2<F>, targets: &[usize]) -> Result<F> {
    if probabilities.nrows() != targets.len() || targets.is_empty() {
        return Err(Error::Shape(format!(
            "{} probability rows for {} targets",
            probabilities.nrows(),
            targets.len()
        )));
    }
    check_targets(targets, probabilities.ncols())?;
    let floor = F::from_f64(PROBABILITY_FLOOR).expect("finite");
    let total = targets
        .iter()
        .enumerate()
        .map(|(row, &t)| -probabilities[[row, t]].max(floor).ln())
        .fold(F::zero(), |a, b| a + b);
    Ok(total / F::from_usize(targets.len()).expect("batch size"))
}

/// Maps merged labels 1 (vegetation) and 2 (non-vegetation) to output indices 0 and 1.
pub fn label_to_index(label: u8) -> Result<usize> {
    match label {
        1 | 2 => Ok(label as usize - 1),
        other => Err(Error::Config(format!("training labels must be 1 or 2, got {other}"))),
    }
}
