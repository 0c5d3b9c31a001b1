//! Minimal fully-connected network engine with analytic gradients and a
//! deterministic Adam optimizer.
//!
//! Everything runs in f64 on a single thread with a pinned operation
//! order, so a (net, data, seed) triple reproduces bit-identical
//! parameters and loss history on every run.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

impl Activation {
    fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Linear => 1,
            Activation::Softmax => 2,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Linear),
            2 => Ok(Activation::Softmax),
            other => Err(Error::Checkpoint(format!("unknown activation code {other}"))),
        }
    }
}

/// One affine layer: weights are `input_dim x output_dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Mat,
    pub b: Vec<f64>,
    pub act: Activation,
}

/// Fully-connected network.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    CrossEntropy,
}

/// Optimizer and schedule settings. Adam runs with beta1 = 0.9,
/// beta2 = 0.999, epsilon = 1e-8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            loss: Loss::Mse,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Training targets: reconstruction (MSE, target = input) or per-row
/// class labels (cross-entropy).
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Reconstruction,
    Labels(&'a [usize]),
}

/// Per-layer parameter gradients, mirroring the network structure.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w: Vec<Mat>,
    pub b: Vec<Vec<f64>>,
}

/// Cached activations from a batch forward pass.
pub struct ForwardCache {
    /// Layer inputs: inputs[0] is the batch, inputs[l] feeds layer l.
    inputs: Vec<Mat>,
    /// Pre-activations per layer.
    zs: Vec<Mat>,
    /// Post-activation network output.
    pub output: Mat,
}

impl Mlp {
    /// Xavier-uniform initialization: weights from
    /// U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))), zero biases.
    /// Draw order is row-major per layer, layers in order.
    pub fn new(dims: &[usize], acts: &[Activation], rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config("network needs at least input and output dims".into()));
        }
        if acts.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "{} activations for {} layers",
                acts.len(),
                dims.len() - 1
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if let Some(pos) = acts.iter().position(|&a| a == Activation::Softmax) {
            if pos != acts.len() - 1 {
                return Err(Error::Config("softmax is an output-only activation".into()));
            }
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut w = Mat::zeros(fan_in, fan_out);
            for v in w.as_mut_slice() {
                *v = rng::uniform(rng, -limit, limit);
            }
            layers.push(Layer {
                w,
                b: vec![0.0; fan_out],
                act: acts[l],
            });
        }
        Ok(Mlp { layers })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].w.rows()];
        dims.extend(self.layers.iter().map(|l| l.w.cols()));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.cols()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.as_slice().len() + l.b.len())
            .sum()
    }

    /// Flattened parameters: per layer, weights row-major then biases.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.w.as_slice());
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Input(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let wn = l.w.as_slice().len();
            l.w.as_mut_slice().copy_from_slice(&params[at..at + wn]);
            at += wn;
            let bn = l.b.len();
            l.b.copy_from_slice(&params[at..at + bn]);
            at += bn;
        }
        Ok(())
    }

    /// Batch forward pass with cached intermediates for backprop.
    pub fn forward_cached(&self, x: &Mat) -> Result<ForwardCache> {
        if x.cols() != self.input_dim() {
            return Err(Error::Input(format!(
                "input dim {} does not match network input {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut current = x.clone();
        for layer in &self.layers {
            let z = affine(&current, &layer.w, &layer.b);
            let a = activate(&z, layer.act);
            inputs.push(current);
            zs.push(z);
            current = a;
        }
        Ok(ForwardCache {
            inputs,
            zs,
            output: current,
        })
    }

    /// Batch forward pass, outputs only.
    pub fn forward_batch(&self, x: &Mat) -> Result<Mat> {
        Ok(self.forward_cached(x)?.output)
    }

    /// Single-vector forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = Mat::from_vec(1, input.len(), input.to_vec());
        Ok(self.forward_batch(&x)?.row(0).to_vec())
    }

    /// Analytic gradients for a batch given the loss gradient with
    /// respect to the network output (post-activation).
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Mat) -> Result<Gradients> {
        if output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols() {
            return Err(Error::Input(format!(
                "loss gradient shape {}x{} does not match output {}x{}",
                output_grad.rows(),
                output_grad.cols(),
                cache.output.rows(),
                cache.output.cols()
            )));
        }
        let n_layers = self.layers.len();
        let mut grads = Gradients {
            w: self.layers.iter().map(|l| Mat::zeros(l.w.rows(), l.w.cols())).collect(),
            b: self.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        };

        // Gradient w.r.t. the current layer's post-activation output.
        let mut upstream = output_grad.clone();
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            let z = &cache.zs[l];
            let a_out = if l == n_layers - 1 {
                &cache.output
            } else {
                &cache.inputs[l + 1]
            };
            let dz = activation_backward(layer.act, z, a_out, &upstream);

            // dW = inputs[l]^T . dz ; db = column sums of dz.
            let x = &cache.inputs[l];
            let dw = grads.w[l].as_mut_slice();
            let cols = dz.cols();
            for i in 0..x.rows() {
                let xrow = x.row(i);
                let dzrow = dz.row(i);
                for (k, &xv) in xrow.iter().enumerate() {
                    if xv != 0.0 {
                        let dst = &mut dw[k * cols..(k + 1) * cols];
                        for (d, &g) in dst.iter_mut().zip(dzrow) {
                            *d += xv * g;
                        }
                    }
                }
                for (bsum, &g) in grads.b[l].iter_mut().zip(dzrow) {
                    *bsum += g;
                }
            }

            if l > 0 {
                // dX[i,k] = sum_j dz[i,j] * W[k,j]
                let mut dx = Mat::zeros(dz.rows(), layer.w.rows());
                for i in 0..dz.rows() {
                    let dzrow = dz.row(i);
                    let dxrow = dx.row_mut(i);
                    for (k, slot) in dxrow.iter_mut().enumerate() {
                        let wrow = layer.w.row(k);
                        let mut acc = 0.0;
                        for (g, wv) in dzrow.iter().zip(wrow) {
                            acc += g * wv;
                        }
                        *slot = acc;
                    }
                }
                upstream = dx;
            }
        }
        Ok(grads)
    }
}

/// Z = X . W + b
fn affine(x: &Mat, w: &Mat, b: &[f64]) -> Mat {
    let (batch, d_in, d_out) = (x.rows(), w.rows(), w.cols());
    debug_assert_eq!(x.cols(), d_in);
    let mut z = Mat::zeros(batch, d_out);
    for i in 0..batch {
        let zrow = z.row_mut(i);
        zrow.copy_from_slice(b);
        let xrow = x.row(i);
        for (k, &xv) in xrow.iter().enumerate() {
            if xv != 0.0 {
                let wrow = w.row(k);
                for (slot, &wv) in zrow.iter_mut().zip(wrow) {
                    *slot += xv * wv;
                }
            }
        }
    }
    z
}

fn activate(z: &Mat, act: Activation) -> Mat {
    match act {
        Activation::Linear => z.clone(),
        Activation::Relu => {
            let mut a = z.clone();
            for v in a.as_mut_slice() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            a
        }
        Activation::Softmax => {
            let mut a = z.clone();
            for i in 0..a.rows() {
                let row = a.row_mut(i);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
            a
        }
    }
}

/// Gradient w.r.t. pre-activation z given gradient w.r.t. activation output.
fn activation_backward(act: Activation, z: &Mat, a_out: &Mat, upstream: &Mat) -> Mat {
    match act {
        Activation::Linear => upstream.clone(),
        Activation::Relu => {
            let mut dz = upstream.clone();
            for (d, &zv) in dz.as_mut_slice().iter_mut().zip(z.as_slice()) {
                if zv <= 0.0 {
                    *d = 0.0;
                }
            }
            dz
        }
        Activation::Softmax => {
            // dz_i = p_i * (g_i - sum_j g_j p_j)
            let mut dz = Mat::zeros(upstream.rows(), upstream.cols());
            for i in 0..upstream.rows() {
                let p = a_out.row(i);
                let g = upstream.row(i);
                let dot: f64 = p.iter().zip(g).map(|(pv, gv)| pv * gv).sum();
                let out = dz.row_mut(i);
                for ((slot, &pv), &gv) in out.iter_mut().zip(p).zip(g) {
                    *slot = pv * (gv - dot);
                }
            }
            dz
        }
    }
}

/// Loss value and gradient with respect to the network output, averaged
/// over the batch.
pub fn loss_and_output_grad(
    output: &Mat,
    inputs: &Mat,
    targets: &Targets,
    loss: Loss,
) -> Result<(f64, Mat)> {
    match (loss, targets) {
        (Loss::Mse, Targets::Reconstruction) => {
            if output.cols() != inputs.cols() {
                return Err(Error::Input(format!(
                    "reconstruction output dim {} != input dim {}",
                    output.cols(),
                    inputs.cols()
                )));
            }
            let batch = output.rows() as f64;
            let dim = output.cols() as f64;
            let mut grad = Mat::zeros(output.rows(), output.cols());
            let mut total = 0.0;
            for ((g, &y), &t) in grad
                .as_mut_slice()
                .iter_mut()
                .zip(output.as_slice())
                .zip(inputs.as_slice())
            {
                let diff = y - t;
                total += diff * diff;
                *g = 2.0 * diff / (batch * dim);
            }
            Ok((total / (batch * dim), grad))
        }
        (Loss::CrossEntropy, Targets::Labels(labels)) => {
            if labels.len() != output.rows() {
                return Err(Error::Input(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    output.rows()
                )));
            }
            let batch = output.rows() as f64;
            let classes = output.cols();
            let mut grad = Mat::zeros(output.rows(), classes);
            let mut total = 0.0;
            for (i, &label) in labels.iter().enumerate() {
                if label >= classes {
                    return Err(Error::Input(format!(
                        "label {label} outside {classes} classes"
                    )));
                }
                let p = output.get(i, label).max(1e-300);
                total -= p.ln();
                grad.set(i, label, -1.0 / (p * batch));
            }
            Ok((total / batch, grad))
        }
        _ => Err(Error::Config(
            "loss/targets mismatch: mse pairs with reconstruction, cross_entropy with labels".into(),
        )),
    }
}

/// Loss and parameter gradients for one batch.
pub fn loss_and_gradients(
    net: &Mlp,
    batch: &Mat,
    targets: &Targets,
    loss: Loss,
) -> Result<(f64, Gradients)> {
    let cache = net.forward_cached(batch)?;
    let (value, output_grad) = loss_and_output_grad(&cache.output, batch, targets, loss)?;
    let grads = net.backward(&cache, &output_grad)?;
    Ok((value, grads))
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let mhat = *m / bc1;
            let vhat = *v / bc2;
            *p -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }
}

/// Trains in place and returns the per-epoch loss history.
///
/// Rows are shuffled each epoch by a ChaCha stream seeded from
/// `config.seed`; the run is bit-reproducible for a fixed (net, data,
/// config). The reported epoch loss is the sample-weighted mean of batch
/// losses evaluated before each update.
pub fn train(net: &mut Mlp, data: &Mat, targets: Targets, config: &TrainConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if data.rows() == 0 {
        return Err(Error::Data("empty training set".into()));
    }
    if let Targets::Labels(labels) = targets {
        if labels.len() != data.rows() {
            return Err(Error::Input(format!(
                "{} labels for {} rows",
                labels.len(),
                data.rows()
            )));
        }
    }
    match (config.loss, &targets) {
        (Loss::Mse, Targets::Reconstruction) | (Loss::CrossEntropy, Targets::Labels(_)) => {}
        _ => {
            return Err(Error::Config(
                "loss/targets mismatch: mse pairs with reconstruction, cross_entropy with labels"
                    .into(),
            ))
        }
    }

    let mut shuffle_rng = rng::stream(config.seed, "train/shuffle");
    let mut order: Vec<usize> = (0..data.rows()).collect();
    let mut adam: Vec<AdamState> = net
        .layers
        .iter()
        .map(|l| AdamState::new(l.w.as_slice().len() + l.b.len()))
        .collect();

    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        rng::shuffle(&mut shuffle_rng, &mut order);
        let mut weighted_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch = data.gather_rows(chunk);
            let picked: Vec<usize>;
            let batch_targets = match targets {
                Targets::Reconstruction => Targets::Reconstruction,
                Targets::Labels(labels) => {
                    picked = chunk.iter().map(|&i| labels[i]).collect();
                    Targets::Labels(&picked)
                }
            };
            let (value, grads) = loss_and_gradients(net, &batch, &batch_targets, config.loss)?;
            apply_update(net, &mut adam, &grads, config.learning_rate);
            weighted_loss += value * chunk.len() as f64;
        }
        let epoch_loss = weighted_loss / data.rows() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: epoch_loss,
            });
        }
        history.push(epoch_loss);
    }
    Ok(history)
}

fn apply_update(net: &mut Mlp, adam: &mut [AdamState], grads: &Gradients, lr: f64) {
    for (l, layer) in net.layers.iter_mut().enumerate() {
        let wn = layer.w.as_slice().len();
        let mut params = Vec::with_capacity(wn + layer.b.len());
        params.extend_from_slice(layer.w.as_slice());
        params.extend_from_slice(&layer.b);
        let mut gflat = Vec::with_capacity(wn + layer.b.len());
        gflat.extend_from_slice(grads.w[l].as_slice());
        gflat.extend_from_slice(&grads.b[l]);
        adam[l].step(&mut params, &gflat, lr);
        layer.w.as_mut_slice().copy_from_slice(&params[..wn]);
        layer.b.copy_from_slice(&params[wn..]);
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"ASDM";
const CHECKPOINT_VERSION: u32 = 1;

/// Serializes a network: magic, version, dims, activation codes, then all
/// parameters as little-endian f64.
pub fn save_mlp(net: &Mlp, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dims = net.dims();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&u32::try_from(net.layers.len()).unwrap().to_le_bytes());
    for d in &dims {
        bytes.extend_from_slice(&u32::try_from(*d).unwrap().to_le_bytes());
    }
    for layer in &net.layers {
        bytes.push(layer.act.code());
    }
    for layer in &net.layers {
        for v in layer.w.as_slice() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for v in &layer.b {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Loads a network saved by [`save_mlp`].
pub fn load_mlp(path: impl AsRef<Path>) -> Result<Mlp> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut at = 0usize;
    let take = |at: &mut usize, n: usize| -> Result<&[u8]> {
        if *at + n > bytes.len() {
            return Err(Error::Checkpoint(format!("{} truncated", path.display())));
        }
        let slice = &bytes[*at..*at + n];
        *at += n;
        Ok(slice)
    };
    if take(&mut at, 4)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint(format!("{}: bad magic", path.display())));
    }
    let version = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let n_layers = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
    let mut dims = Vec::with_capacity(n_layers + 1);
    for _ in 0..=n_layers {
        dims.push(u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize);
    }
    let mut acts = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        acts.push(Activation::from_code(take(&mut at, 1)?[0])?);
    }
    let mut layers = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let (d_in, d_out) = (dims[l], dims[l + 1]);
        let mut w = Mat::zeros(d_in, d_out);
        for v in w.as_mut_slice() {
            *v = f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
        }
        let mut b = vec![0.0; d_out];
        for v in &mut b {
            *v = f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
        }
        layers.push(Layer { w, b, act: acts[l] });
    }
    if at != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{}: {} trailing bytes",
            path.display(),
            bytes.len() - at
        )));
    }
    Ok(Mlp { layers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_net(seed: u64, dims: &[usize], acts: &[Activation]) -> Mlp {
        let mut r = rng::stream(seed, "nnet-test");
        Mlp::new(dims, acts, &mut r).unwrap()
    }

    #[test]
    fn zero_weights_linear_outputs_bias() {
        let mut net = small_net(0, &[3, 2], &[Activation::Linear]);
        for v in net.layers[0].w.as_mut_slice() {
            *v = 0.0;
        }
        net.layers[0].b = vec![1.5, -2.5];
        assert_eq!(net.forward(&[9.0, 9.0, 9.0]).unwrap(), vec![1.5, -2.5]);
    }

    #[test]
    fn relu_clamps_negative_preactivation() {
        let mut net = small_net(0, &[1, 1], &[Activation::Relu]);
        net.layers[0].w.set(0, 0, 1.0);
        net.layers[0].b = vec![0.0];
        assert_eq!(net.forward(&[-3.0]).unwrap(), vec![0.0]);
        assert_eq!(net.forward(&[2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn softmax_sums_to_one() {
        let net = small_net(4, &[5, 4, 3], &[Activation::Relu, Activation::Softmax]);
        let out = net.forward(&[0.3, -1.2, 0.8, 2.0, -0.4]).unwrap();
        let sum: f64 = out.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
        assert!(out.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let net = small_net(1, &[4, 2], &[Activation::Linear]);
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::Input(_))));
    }

    fn finite_difference_check(dims: &[usize], acts: &[Activation], loss: Loss, seed: u64) -> f64 {
        let net = small_net(seed, dims, acts);
        let mut r = rng::stream(seed, "fd-data");
        let batch_rows = 4;
        let mut x = Mat::zeros(batch_rows, dims[0]);
        for v in x.as_mut_slice() {
            *v = rng::uniform(&mut r, -1.0, 1.0);
        }
        let labels: Vec<usize> = (0..batch_rows)
            .map(|_| rng::below(&mut r, *dims.last().unwrap()))
            .collect();
        let targets = match loss {
            Loss::Mse => Targets::Reconstruction,
            Loss::CrossEntropy => Targets::Labels(&labels),
        };

        let (_, grads) = loss_and_gradients(&net, &x, &targets, loss).unwrap();
        let mut analytic = Vec::new();
        for l in 0..net.layers.len() {
            analytic.extend_from_slice(grads.w[l].as_slice());
            analytic.extend_from_slice(&grads.b[l]);
        }

        let eps = 1e-5;
        let base = net.params_flat();
        let mut worst: f64 = 0.0;
        let mut probe = net.clone();
        for (i, &a) in analytic.iter().enumerate() {
            let mut params = base.clone();
            params[i] = base[i] + eps;
            probe.set_params_flat(&params).unwrap();
            let (lp, _) = loss_and_gradients(&probe, &x, &targets, loss).unwrap();
            params[i] = base[i] - eps;
            probe.set_params_flat(&params).unwrap();
            let (lm, _) = loss_and_gradients(&probe, &x, &targets, loss).unwrap();
            let fd = (lp - lm) / (2.0 * eps);
            let rel = (a - fd).abs() / f64::max(1.0, f64::max(a.abs(), fd.abs()));
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences_mse() {
        let worst = finite_difference_check(
            &[6, 5, 3, 6],
            &[Activation::Relu, Activation::Relu, Activation::Linear],
            Loss::Mse,
            21,
        );
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn gradients_match_finite_differences_cross_entropy() {
        let worst = finite_difference_check(
            &[5, 8, 4],
            &[Activation::Relu, Activation::Softmax],
            Loss::CrossEntropy,
            22,
        );
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn zero_output_grad_gives_zero_parameter_grads() {
        let net = small_net(3, &[4, 3, 4], &[Activation::Relu, Activation::Linear]);
        let x = Mat::from_rows(&[vec![0.5, -0.25, 1.0, 0.75]]);
        let cache = net.forward_cached(&x).unwrap();
        let zeros = Mat::zeros(1, 4);
        let grads = net.backward(&cache, &zeros).unwrap();
        for g in &grads.w {
            assert!(g.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn mse_gradient_zero_at_perfect_reconstruction() {
        // Identity net: one linear layer with identity weights.
        let mut net = small_net(0, &[3, 3], &[Activation::Linear]);
        for v in net.layers[0].w.as_mut_slice() {
            *v = 0.0;
        }
        for i in 0..3 {
            net.layers[0].w.set(i, i, 1.0);
        }
        net.layers[0].b = vec![0.0; 3];
        let x = Mat::from_rows(&[vec![0.1, -0.7, 0.4]]);
        let (loss, grads) = loss_and_gradients(&net, &x, &Targets::Reconstruction, Loss::Mse).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.w.iter().all(|g| g.as_slice().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn training_is_deterministic() {
        let data = {
            let mut r = rng::stream(7, "train-data");
            let mut m = Mat::zeros(32, 6);
            for v in m.as_mut_slice() {
                *v = rng::uniform(&mut r, -1.0, 1.0);
            }
            m
        };
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 8,
            learning_rate: 1e-3,
            seed: 99,
            loss: Loss::Mse,
        };
        let run = || {
            let mut net = small_net(50, &[6, 4, 6], &[Activation::Relu, Activation::Linear]);
            let history = train(&mut net, &data, Targets::Reconstruction, &cfg).unwrap();
            (net.params_flat(), history)
        };
        let (p1, h1) = run();
        let (p2, h2) = run();
        assert_eq!(p1, p2);
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), cfg.epochs);
        assert!(h1.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let data = Mat::from_rows(&[vec![0.2, -0.4], vec![0.9, 0.1]]);
        let mut net = small_net(5, &[2, 3, 2], &[Activation::Relu, Activation::Linear]);
        let before = net.params_flat();
        let cfg = TrainConfig {
            epochs: 4,
            batch_size: 2,
            learning_rate: 0.0,
            seed: 1,
            loss: Loss::Mse,
        };
        let history = train(&mut net, &data, Targets::Reconstruction, &cfg).unwrap();
        assert_eq!(net.params_flat(), before);
        for w in history.windows(2) {
            assert_eq!(w[0], w[1], "flat loss history expected");
        }
    }

    #[test]
    fn single_vector_overfits_to_tiny_mse() {
        let mut r = rng::stream(13, "overfit");
        let row: Vec<f64> = (0..24).map(|_| rng::uniform(&mut r, -1.0, 1.0)).collect();
        let data = Mat::from_rows(&[row]);
        let mut net = small_net(
            60,
            &[24, 12, 4, 12, 24],
            &[Activation::Relu, Activation::Relu, Activation::Relu, Activation::Linear],
        );
        let cfg = TrainConfig {
            epochs: 500,
            batch_size: 1,
            learning_rate: 3e-3,
            seed: 2,
            loss: Loss::Mse,
        };
        let history = train(&mut net, &data, Targets::Reconstruction, &cfg).unwrap();
        assert!(history.last().unwrap() < &1e-6, "final mse {}", history.last().unwrap());
    }

    #[test]
    fn labels_required_for_cross_entropy() {
        let data = Mat::from_rows(&[vec![0.0, 1.0]]);
        let mut net = small_net(1, &[2, 2], &[Activation::Softmax]);
        let cfg = TrainConfig {
            loss: Loss::CrossEntropy,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&mut net, &data, Targets::Reconstruction, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.asdm");
        let net = small_net(77, &[5, 3, 2], &[Activation::Relu, Activation::Softmax]);
        save_mlp(&net, &path).unwrap();
        let loaded = load_mlp(&path).unwrap();
        assert_eq!(net, loaded);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"ASDM");
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.asdm");
        let net = small_net(78, &[3, 2], &[Activation::Linear]);
        save_mlp(&net, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_mlp(&path), Err(Error::Checkpoint(_))));
    }
}
