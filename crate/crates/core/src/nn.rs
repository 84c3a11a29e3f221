//! Fully connected regression network: ReLU hidden layers, one linear output,
//! mean-squared-error backpropagation with SGD or Adam.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::FoldPlan;
use crate::error::{Error, Result};
use crate::eval;
use crate::features::LabeledExample;
use crate::model::{ModelSpec, Regressor};
use crate::numeric::{self, CompensatedSum};
use crate::rng::{self, Purpose};
use crate::samples::Samples;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;
/// Training aborts once the epoch RMSE exceeds this multiple of its minimum.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub hidden_layers: usize,
    pub width: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub batch_size: usize,
    pub early_stopping_patience: Option<usize>,
    /// Standardize the target as well as the inputs.
    #[serde(default)]
    pub scale_target: bool,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden_layers: 3,
            width: 16,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            epochs: 50,
            batch_size: 32,
            early_stopping_patience: None,
            scale_target: false,
            seed: 0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.width == 0 || self.hidden_layers == 0 {
            return bad("width and hidden_layers must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        Ok(())
    }
}

/// Trainable scalars of a `input_dim -> width^hidden_layers -> 1` network.
pub fn param_count(input_dim: usize, hidden_layers: usize, width: usize) -> usize {
    (input_dim + 1) * width + (hidden_layers - 1) * (width + 1) * width + (width + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative, with the ReLU subgradient at 0 taken as 0.
    #[inline]
    fn slope(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        DenseLayer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
            activation,
        }
    }

    fn forward_into(&self, input: &[f64], z: &mut Vec<f64>, a: &mut Vec<f64>) {
        z.clear();
        a.clear();
        for (row, &b) in self.weights.chunks_exact(self.n_in).zip(&self.biases) {
            let v = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b;
            z.push(v);
            a.push(self.activation.apply(v));
        }
    }
}

/// Per-column affine map to zero mean and unit population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
        }
    }

    /// Constant columns get std 1 so the map stays defined.
    pub fn fit(data: &Samples) -> Self {
        let d = data.n_features();
        let mut means = Vec::with_capacity(d);
        let mut stds = Vec::with_capacity(d);
        for j in 0..d {
            let col: Vec<f64> = (0..data.len()).map(|i| data.value(i, j)).collect();
            let m = numeric::mean(&col);
            let (sd, _) = numeric::std_devs(&col);
            means.push(m);
            stds.push(if sd > 0.0 && sd.is_finite() { sd } else { 1.0 });
        }
        Standardizer { means, stds }
    }

    pub fn transform_into(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            row.iter()
                .zip(self.means.iter().zip(&self.stds))
                .map(|(x, (m, s))| (x - m) / s),
        );
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        self.transform_into(row, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<DenseLayer>,
    pub input_standardizer: Standardizer,
    #[serde(default)]
    pub target_scaler: Option<TargetScaler>,
}

impl Network {
    /// Assembles a network from explicit layers; dimensions must chain and the
    /// last layer must be linear with a single output.
    pub fn from_layers(layers: Vec<DenseLayer>, input_standardizer: Standardizer) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::InvalidConfig("network has no layers".into()));
        };
        if last.n_out != 1 || last.activation != Activation::Linear {
            return Err(Error::InvalidConfig("output layer must be linear with one unit".into()));
        }
        if input_standardizer.means.len() != layers[0].n_in
            || input_standardizer.stds.len() != layers[0].n_in
            || input_standardizer.stds.iter().any(|&s| !(s > 0.0))
        {
            return Err(Error::InvalidConfig("standardizer does not match input layer".into()));
        }
        for l in &layers {
            if l.weights.len() != l.n_in * l.n_out || l.biases.len() != l.n_out {
                return Err(Error::InvalidConfig("layer buffers do not match its shape".into()));
            }
        }
        if layers.windows(2).any(|w| w[0].n_out != w[1].n_in) {
            return Err(Error::InvalidConfig("layer dimensions do not chain".into()));
        }
        Ok(Network {
            layers,
            input_standardizer,
            target_scaler: None,
        })
    }

    /// He-initialized network: weights `N(0, 2 / fan_in)`, biases zero, one
    /// `weight-init` stream per layer.
    pub fn init(input_dim: usize, config: &NetConfig, input_standardizer: Standardizer) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::with_capacity(config.hidden_layers + 1);
        let mut n_in = input_dim;
        for l in 0..=config.hidden_layers {
            let (n_out, act) = if l < config.hidden_layers {
                (config.width, Activation::Relu)
            } else {
                (1, Activation::Linear)
            };
            let mut layer = DenseLayer::zeros(n_in, n_out, act);
            let normal = Normal::new(0.0, (2.0 / n_in as f64).sqrt()).expect("positive std");
            let mut rng = rng::stream(config.seed, Purpose::WeightInit, l as u64);
            for w in &mut layer.weights {
                *w = normal.sample(&mut rng);
            }
            layers.push(layer);
            n_in = n_out;
        }
        Network::from_layers(layers, input_standardizer)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Network output for an already standardized row, before any target
    /// unscaling.
    pub fn output_standardized(&self, x: &[f64]) -> f64 {
        let (mut z, mut a) = (Vec::new(), x.to_vec());
        let mut next = Vec::new();
        for l in &self.layers {
            l.forward_into(&a, &mut z, &mut next);
            std::mem::swap(&mut a, &mut next);
        }
        a[0]
    }

    /// Raw network output for a raw feature row.
    pub fn output(&self, row: &[f64]) -> f64 {
        self.output_standardized(&self.input_standardizer.transform(row))
    }

    pub fn forward(&self, row: &[f64]) -> Result<f64> {
        self.predict(row)
    }

    fn to_target_units(&self, out: f64) -> f64 {
        match self.target_scaler {
            Some(s) => out * s.std + s.mean,
            None => out,
        }
    }
}

impl Regressor for Network {
    fn n_features(&self) -> usize {
        self.input_dim()
    }

    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        self.to_target_units(self.output(row))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Gradient of the batch loss, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    /// Weights then biases, layer by layer.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }
}

/// Scratch space for one forward/backward pass.
struct Workspace {
    zs: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    prev_delta: Vec<f64>,
}

impl Workspace {
    fn new(net: &Network) -> Self {
        Workspace {
            zs: net.layers.iter().map(|l| Vec::with_capacity(l.n_out)).collect(),
            acts: std::iter::once(Vec::with_capacity(net.input_dim()))
                .chain(net.layers.iter().map(|l| Vec::with_capacity(l.n_out)))
                .collect(),
            delta: Vec::new(),
            prev_delta: Vec::new(),
        }
    }
}

/// Adds `scale * d(out - target)^2 / dparams` for one standardized row; returns
/// the output.
fn accumulate_row(
    net: &Network,
    x: &[f64],
    target: f64,
    scale: f64,
    ws: &mut Workspace,
    grads: &mut Gradients,
) -> f64 {
    ws.acts[0].clear();
    ws.acts[0].extend_from_slice(x);
    for (l, layer) in net.layers.iter().enumerate() {
        let (before, after) = ws.acts.split_at_mut(l + 1);
        layer.forward_into(&before[l], &mut ws.zs[l], &mut after[0]);
    }
    let out = ws.acts[net.layers.len()][0];

    ws.delta.clear();
    ws.delta.push(2.0 * (out - target) * scale);
    for l in (0..net.layers.len()).rev() {
        let layer = &net.layers[l];
        let g = &mut grads.layers[l];
        let input = &ws.acts[l];
        for (o, &d) in ws.delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            g.biases[o] += d;
            for (gw, &a) in g.weights[o * layer.n_in..(o + 1) * layer.n_in].iter_mut().zip(input) {
                *gw += d * a;
            }
        }
        if l == 0 {
            break;
        }
        let below = &net.layers[l - 1];
        ws.prev_delta.clear();
        ws.prev_delta.resize(layer.n_in, 0.0);
        for (o, &d) in ws.delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for (pd, &w) in ws.prev_delta.iter_mut().zip(&layer.weights[o * layer.n_in..(o + 1) * layer.n_in]) {
                *pd += w * d;
            }
        }
        for (pd, &z) in ws.prev_delta.iter_mut().zip(&ws.zs[l - 1]) {
            *pd *= below.activation.slope(z);
        }
        std::mem::swap(&mut ws.delta, &mut ws.prev_delta);
    }
    out
}

/// Gradient of `mean((output(row) - target)^2)` over the batch, by reverse-mode
/// differentiation. Rows are raw features; targets are in output units.
pub fn backprop_grads(net: &Network, rows: &[Vec<f64>], targets: &[f64]) -> Result<Gradients> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if rows.len() != targets.len() {
        return Err(Error::LengthMismatch {
            actual: targets.len(),
            predicted: rows.len(),
        });
    }
    let mut grads = Gradients::zeros_like(net);
    let mut ws = Workspace::new(net);
    let scale = 1.0 / rows.len() as f64;
    for (row, &t) in rows.iter().zip(targets) {
        if row.len() != net.input_dim() {
            return Err(Error::ArityMismatch {
                expected: net.input_dim(),
                got: row.len(),
            });
        }
        let x = net.input_standardizer.transform(row);
        accumulate_row(net, &x, t, scale, &mut ws, &mut grads);
    }
    Ok(grads)
}

/// Batch loss matching [`backprop_grads`].
pub fn batch_loss(net: &Network, rows: &[Vec<f64>], targets: &[f64]) -> f64 {
    rows.iter()
        .zip(targets)
        .map(|(r, t)| (net.output(r) - t).powi(2))
        .sum::<f64>()
        / rows.len() as f64
}

enum OptimizerState {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, step: i32 },
}

impl OptimizerState {
    fn new(kind: Optimizer, n_params: usize) -> Self {
        match kind {
            Optimizer::Sgd => OptimizerState::Sgd,
            Optimizer::Adam => OptimizerState::Adam {
                m: vec![0.0; n_params],
                v: vec![0.0; n_params],
                step: 0,
            },
        }
    }

    fn apply(&mut self, net: &mut Network, grads: &Gradients, lr: f64) {
        match self {
            OptimizerState::Sgd => {
                for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
                    let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
                    for (p, d) in params.zip(g.weights.iter().chain(&g.biases)) {
                        *p -= lr * d;
                    }
                }
            }
            OptimizerState::Adam { m, v, step } => {
                *step += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*step);
                let c2 = 1.0 - ADAM_BETA2.powi(*step);
                let mut k = 0;
                for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
                    let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
                    for (p, &d) in params.zip(g.weights.iter().chain(&g.biases)) {
                        m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * d;
                        v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * d * d;
                        let m_hat = m[k] / c1;
                        let v_hat = v[k] / c2;
                        *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                        k += 1;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_rmse: f64,
    pub val_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: Network,
    /// Epoch 0 is the untrained network.
    pub trace: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

struct Prepared {
    x: Vec<f64>,
    y: Vec<f64>,
    dim: usize,
}

impl Prepared {
    fn new(data: &Samples, net: &Network) -> Self {
        let mut x = Vec::with_capacity(data.len() * data.n_features());
        let mut buf = Vec::new();
        for r in data.rows() {
            net.input_standardizer.transform_into(r, &mut buf);
            x.extend_from_slice(&buf);
        }
        let y = data
            .targets()
            .iter()
            .map(|&t| match net.target_scaler {
                Some(s) => (t - s.mean) / s.std,
                None => t,
            })
            .collect();
        Prepared {
            x,
            y,
            dim: data.n_features(),
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    /// RMSE in target units.
    fn rmse(&self, net: &Network) -> f64 {
        let unscale = net.target_scaler.map_or(1.0, |s| s.std);
        let se: CompensatedSum = (0..self.y.len())
            .map(|i| {
                let r = (net.output_standardized(self.row(i)) - self.y[i]) * unscale;
                r * r
            })
            .collect();
        (se.value() / self.y.len() as f64).sqrt()
    }
}

pub fn train(data: &Samples, config: &NetConfig, validation: Option<&Samples>) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut net = Network::init(data.n_features(), config, Standardizer::fit(data))?;
    if config.scale_target {
        let (std, _) = numeric::std_devs(data.targets());
        net.target_scaler = Some(TargetScaler {
            mean: numeric::mean(data.targets()),
            std: if std > 0.0 { std } else { 1.0 },
        });
    }
    let train_set = Prepared::new(data, &net);
    let val_set = validation.filter(|v| !v.is_empty()).map(|v| Prepared::new(v, &net));

    let record = |net: &Network, epoch| EpochRecord {
        epoch,
        train_rmse: train_set.rmse(net),
        val_rmse: val_set.as_ref().map(|v| v.rmse(net)),
    };
    let mut trace = vec![record(&net, 0)];
    let mut best_train = trace[0].train_rmse;
    let mut best = (0usize, trace[0].val_rmse.unwrap_or(f64::INFINITY), net.clone());
    let mut stale = 0usize;
    let mut stopped_early = false;

    let mut opt = OptimizerState::new(config.optimizer, net.n_params());
    let mut ws = Workspace::new(&net);
    let mut grads = Gradients::zeros_like(&net);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng::stream(config.seed, Purpose::EpochShuffle, epoch as u64));
        for batch in order.chunks(config.batch_size) {
            for g in &mut grads.layers {
                g.weights.fill(0.0);
                g.biases.fill(0.0);
            }
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                accumulate_row(&net, train_set.row(i), train_set.y[i], scale, &mut ws, &mut grads);
            }
            opt.apply(&mut net, &grads, config.learning_rate);
        }

        let rec = record(&net, epoch);
        trace.push(rec);
        if !rec.train_rmse.is_finite() || rec.train_rmse > DIVERGENCE_FACTOR * best_train {
            return Err(Error::NonFiniteLoss {
                epoch,
                loss: rec.train_rmse,
                best: best_train,
            });
        }
        best_train = best_train.min(rec.train_rmse);

        if let (Some(patience), Some(val)) = (config.early_stopping_patience, rec.val_rmse) {
            if val < best.1 {
                best = (epoch, val, net.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    let (best_epoch, network) = if config.early_stopping_patience.is_some() && val_set.is_some() {
        (best.0, best.2)
    } else {
        (trace.len() - 1, net)
    };
    Ok(TrainOutcome {
        network,
        trace,
        best_epoch,
        stopped_early,
    })
}

pub fn write_trace_csv<W: std::io::Write>(out: W, trace: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "train_rmse", "val_rmse"])?;
    for r in trace {
        w.write_record([
            r.epoch.to_string(),
            r.train_rmse.to_string(),
            r.val_rmse.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnGridPoint {
    pub learning_rate: f64,
    pub width: usize,
    pub hidden_layers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnSweepRow {
    pub learning_rate: f64,
    pub width: usize,
    pub hidden_layers: usize,
    pub param_count: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
}

/// Cross-validated RMSE per configuration, best first. Ties keep grid order.
pub fn sweep_nn(
    examples: &[LabeledExample],
    grid: &[NnGridPoint],
    base: &NetConfig,
    folds: &FoldPlan,
) -> Result<Vec<NnSweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for p in grid {
        let config = NetConfig {
            learning_rate: p.learning_rate,
            width: p.width,
            hidden_layers: p.hidden_layers,
            ..*base
        };
        config.validate()?;
        let report = eval::cross_validate(examples, folds, &ModelSpec::Nn(config))?;
        rows.push(NnSweepRow {
            learning_rate: p.learning_rate,
            width: p.width,
            hidden_layers: p.hidden_layers,
            param_count: param_count(crate::features::N_FEATURES, p.hidden_layers, p.width),
            rmse_mean: report.overall_rmse,
            rmse_std: numeric::std_devs(&report.per_fold_rmse).1,
        });
    }
    rows.sort_by(|a, b| a.rmse_mean.total_cmp(&b.rmse_mean));
    Ok(rows)
}

pub fn write_nn_sweep_csv<W: std::io::Write>(out: W, rows: &[NnSweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
    Ok(())
}
