//! Coordinate networks `f_l = φ(W_l f_{l-1} + b_l)` with scaled activations,
//! analytic Jacobians, training, and the constructive networks from the
//! shift-space approximation constructions.

use std::io::Write as _;
use std::ops::RangeInclusive;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, ShiftCoefficients};
use crate::error::{Error, Result};
use crate::signals::mse_to_psnr;

/// Dense affine map, weights stored row-major (`out_dim × in_dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub out_dim: usize,
    pub in_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn new(out_dim: usize, in_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != out_dim * in_dim || bias.len() != out_dim {
            return Err(Error::ShapeMismatch(format!(
                "layer {out_dim}x{in_dim} got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite layer parameter".into()));
        }
        Ok(Self {
            out_dim,
            in_dim,
            weights,
            bias,
        })
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            out_dim,
            in_dim,
            weights: vec![0.0; out_dim * in_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.in_dim + col]
    }

    pub fn weight_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        &mut self.weights[row * self.in_dim + col]
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (r, b) in self.bias.iter().enumerate() {
            let row = &self.weights[r * self.in_dim..(r + 1) * self.in_dim];
            out.push(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b);
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Layered network with activation `F(z/Ω_l)` on every hidden layer and an
/// affine output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct InrNetwork {
    layers: Vec<LayerParams>,
    activation: BasisKind,
    scales: Vec<f64>,
    seed: Option<u64>,
}

impl InrNetwork {
    /// Network with one shared scale `Ω` on all hidden layers.
    pub fn new(layers: Vec<LayerParams>, activation: BasisKind, omega: f64) -> Result<Self> {
        let hidden = layers.len().saturating_sub(1);
        Self::with_scales(layers, activation, vec![omega; hidden])
    }

    /// Network with one scale per hidden layer.
    pub fn with_scales(
        layers: Vec<LayerParams>,
        activation: BasisKind,
        scales: Vec<f64>,
    ) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::BadShape("need at least one hidden layer".into()));
        }
        if scales.len() != layers.len() - 1 {
            return Err(Error::BadShape(format!(
                "{} scales for {} hidden layers",
                scales.len(),
                layers.len() - 1
            )));
        }
        if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(
                "activation scales must be positive".into(),
            ));
        }
        for w in layers.windows(2) {
            if w[1].in_dim != w[0].out_dim {
                return Err(Error::BadShape(format!(
                    "layer output {} does not feed input {}",
                    w[0].out_dim, w[1].in_dim
                )));
            }
        }
        for l in &layers {
            if l.weights.len() != l.out_dim * l.in_dim || l.bias.len() != l.out_dim {
                return Err(Error::ShapeMismatch("inconsistent layer storage".into()));
            }
        }
        activation.validate()?;
        Ok(Self {
            layers,
            activation,
            scales,
            seed: None,
        })
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    /// Mutable access to parameters; shapes must be left unchanged.
    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn activation(&self) -> &BasisKind {
        &self.activation
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    /// `[in, hidden..., out]`.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.in_dim()];
        s.extend(self.layers.iter().map(|l| l.out_dim));
        s
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerParams::param_count).sum()
    }

    /// All parameters, layer by layer, weights (row-major) then biases.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut i = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[i..i + nw]);
            i += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[i..i + nb]);
            i += nb;
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if l < last {
                let s = self.scales[l];
                for v in next.iter_mut() {
                    *v = self.activation.eval(*v / s);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Activations of the last hidden layer.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (l, layer) in self.layers[..self.layers.len() - 1].iter().enumerate() {
            layer.apply(&cur, &mut next);
            let s = self.scales[l];
            for v in next.iter_mut() {
                *v = self.activation.eval(*v / s);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Chain-rule Jacobian `∂f/∂x`, shape `out_dim × in_dim`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        let n_in = self.in_dim();
        let mut a = x.to_vec();
        let mut j = DMatrix::<f64>::identity(n_in, n_in);
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&a, &mut z);
            let w = DMatrix::from_row_slice(layer.out_dim, layer.in_dim, &layer.weights);
            let mut wj = w * &j;
            if l < last {
                let s = self.scales[l];
                a.clear();
                for (i, zi) in z.iter().enumerate() {
                    let (v, d) = self.activation.eval_with_derivative(zi / s);
                    a.push(v);
                    wj.row_mut(i).scale_mut(d / s);
                }
            }
            j = wj;
        }
        Ok(j)
    }

    /// Least-squares fit of the output layer with the hidden layers frozen.
    ///
    /// Solves `(ΦᵀΦ + ridge·I) [W; b] = Φᵀ Y` with `Φ = [features, 1]`.
    pub fn fit_output_layer<X: AsRef<[f64]>, Y: AsRef<[f64]>>(
        &mut self,
        inputs: &[X],
        targets: &[Y],
        ridge: f64,
    ) -> Result<()> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        let out = self.out_dim();
        let h = self.layers[self.layers.len() - 1].in_dim;
        let mut phi = DMatrix::<f64>::zeros(inputs.len(), h + 1);
        let mut y = DMatrix::<f64>::zeros(inputs.len(), out);
        for (r, (x, t)) in inputs.iter().zip(targets).enumerate() {
            let f = self.features(x.as_ref())?;
            for (c, v) in f.iter().enumerate() {
                phi[(r, c)] = *v;
            }
            phi[(r, h)] = 1.0;
            let t = t.as_ref();
            if t.len() != out {
                return Err(Error::DimensionMismatch {
                    expected: out,
                    got: t.len(),
                });
            }
            for (c, v) in t.iter().enumerate() {
                y[(r, c)] = *v;
            }
        }
        let mut normal = phi.transpose() * &phi;
        for i in 0..=h {
            normal[(i, i)] += ridge;
        }
        let rhs = phi.transpose() * y;
        let chol = normal.cholesky().ok_or_else(|| {
            Error::InvalidParameter("output-layer normal matrix is singular".into())
        })?;
        let sol = chol.solve(&rhs);
        let layer = self.layers.last_mut().unwrap();
        for o in 0..out {
            for c in 0..h {
                layer.weights[o * h + c] = sol[(c, o)];
            }
            layer.bias[o] = sol[(h, o)];
        }
        Ok(())
    }

    /// Mean squared error over a dataset.
    pub fn mse<X: AsRef<[f64]>, Y: AsRef<[f64]>>(
        &self,
        inputs: &[X],
        targets: &[Y],
    ) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for (x, t) in inputs.iter().zip(targets) {
            let y = self.forward(x.as_ref())?;
            let t = t.as_ref();
            if t.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: y.len(),
                    got: t.len(),
                });
            }
            total += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            count += y.len();
        }
        Ok(total / count as f64)
    }

    /// Gradient-based minimization of the mean squared error.
    pub fn train<X: AsRef<[f64]>, Y: AsRef<[f64]>>(
        &mut self,
        inputs: &[X],
        targets: &[Y],
        config: &TrainConfig,
    ) -> Result<TrainReport> {
        config.validate()?;
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        for (x, t) in inputs.iter().zip(targets) {
            self.check_input(x.as_ref())?;
            if t.as_ref().len() != self.out_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.out_dim(),
                    got: t.as_ref().len(),
                });
            }
        }
        let start = Instant::now();
        let n = inputs.len();
        let out_dim = self.out_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut ws = Workspace::new(self);
        let mut grad = vec![0.0; self.param_count()];
        let mut params = self.params_flat();
        let mut adam = AdamState::new(params.len());
        let mut loss_history = Vec::with_capacity(config.epochs);
        let mut psnr_history = Vec::with_capacity(config.epochs);

        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut epoch_sse = 0.0;
            for batch in order.chunks(config.batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let norm = 2.0 / (batch.len() * out_dim) as f64;
                for &i in batch {
                    epoch_sse += self.accumulate(
                        &mut ws,
                        inputs[i].as_ref(),
                        targets[i].as_ref(),
                        norm,
                        &mut grad,
                    );
                }
                match config.optimizer {
                    Optimizer::GradientDescent => {
                        for (p, g) in params.iter_mut().zip(&grad) {
                            *p -= config.learning_rate * g;
                        }
                    }
                    Optimizer::Adam => adam.step(&mut params, &grad, config.learning_rate),
                }
                self.set_params_flat(&params)?;
            }
            let loss = epoch_sse / (n * out_dim) as f64;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            loss_history.push(loss);
            psnr_history.push(mse_to_psnr(loss));
        }
        let final_loss = self.mse(inputs, targets)?;
        if !final_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: config.epochs,
            });
        }
        Ok(TrainReport {
            final_loss,
            loss_history,
            psnr_history,
            wall_time_seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// Adds the scaled gradient of one sample's squared error to `grad` and
    /// returns that squared error.
    fn accumulate(
        &self,
        ws: &mut Workspace,
        x: &[f64],
        t: &[f64],
        norm: f64,
        grad: &mut [f64],
    ) -> f64 {
        let last = self.layers.len() - 1;
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (lo, hi) = ws.acts.split_at_mut(l + 1);
            let input = &lo[l];
            let out = &mut hi[0];
            layer.apply(input, out);
            if l < last {
                let s = self.scales[l];
                let d = &mut ws.dacts[l];
                d.clear();
                for v in out.iter_mut() {
                    let (f, df) = self.activation.eval_with_derivative(*v / s);
                    *v = f;
                    d.push(df / s);
                }
            }
        }
        let y = &ws.acts[last + 1];
        let mut sse = 0.0;
        ws.delta.clear();
        for (a, b) in y.iter().zip(t) {
            let e = a - b;
            sse += e * e;
            ws.delta.push(norm * e);
        }
        let mut offset = self.param_count();
        for l in (0..=last).rev() {
            let layer = &self.layers[l];
            offset -= layer.param_count();
            let input = &ws.acts[l];
            let (gw, gb) =
                grad[offset..offset + layer.param_count()].split_at_mut(layer.weights.len());
            for (o, &d) in ws.delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                gb[o] += d;
            }
            if l > 0 {
                ws.next_delta.clear();
                ws.next_delta.resize(layer.in_dim, 0.0);
                for (o, &d) in ws.delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (nd, w) in ws.next_delta.iter_mut().zip(row) {
                        *nd += w * d;
                    }
                }
                for (nd, df) in ws.next_delta.iter_mut().zip(&ws.dacts[l - 1]) {
                    *nd *= df;
                }
                std::mem::swap(&mut ws.delta, &mut ws.next_delta);
            }
        }
        sse
    }

    /// Checkpoint bytes: one JSON header line, then the parameters as
    /// little-endian `f64` in [`params_flat`](Self::params_flat) order.
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.to_string(),
            shape: self.shape(),
            activation: self.activation.clone(),
            omega: self.scales.clone(),
            seed: self.seed,
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        for p in self.params_flat() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::MalformedHeader("missing checkpoint header".into()))?;
        let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl])
            .map_err(|e| Error::MalformedHeader(format!("checkpoint header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::MalformedHeader(format!(
                "unknown format {:?}",
                header.format
            )));
        }
        if header.shape.len() < 3 {
            return Err(Error::BadShape("checkpoint shape too short".into()));
        }
        let layers: Vec<LayerParams> = header
            .shape
            .windows(2)
            .map(|w| LayerParams::zeros(w[1], w[0]))
            .collect();
        let mut net = Self::with_scales(layers, header.activation, header.omega)?;
        let blob = &bytes[nl + 1..];
        let expected = net.param_count() * 8;
        if blob.len() != expected {
            return Err(Error::TruncatedData {
                expected,
                got: blob.len(),
            });
        }
        let params: Vec<f64> = blob
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        net.set_params_flat(&params)?;
        net.seed = header.seed;
        Ok(net)
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_checkpoint_bytes())?;
        Ok(())
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint_bytes(&std::fs::read(path)?)
    }
}

const CHECKPOINT_FORMAT: &str = "sincinr-checkpoint-v1";

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    shape: Vec<usize>,
    activation: BasisKind,
    omega: Vec<f64>,
    seed: Option<u64>,
}

struct Workspace {
    acts: Vec<Vec<f64>>,
    dacts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl Workspace {
    fn new(net: &InrNetwork) -> Self {
        let shape = net.shape();
        Self {
            acts: shape.iter().map(|&n| Vec::with_capacity(n)).collect(),
            dacts: shape[1..shape.len() - 1]
                .iter()
                .map(|&n| Vec::with_capacity(n))
                .collect(),
            delta: Vec::new(),
            next_delta: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    GradientDescent,
    /// β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl TrainConfig {
    /// A zero learning rate is accepted and leaves parameters untouched.
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 2000,
            batch_size: usize::MAX,
            seed: 0,
            optimizer: Optimizer::Adam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainReport {
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
    pub psnr_history: Vec<f64>,
    pub wall_time_seconds: f64,
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamState {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g;
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g * g;
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= lr * mhat / (vhat.sqrt() + Self::EPS);
        }
    }
}

/// Weights uniform in `±√(6/fan_in)`, zero biases, seeded.
pub fn init_network(shape: &[usize], kind: BasisKind, omega: f64, seed: u64) -> Result<InrNetwork> {
    if shape.len() < 3 {
        return Err(Error::BadShape(format!(
            "shape {shape:?} needs input, hidden and output sizes"
        )));
    }
    if shape.contains(&0) {
        return Err(Error::BadShape(format!(
            "shape {shape:?} has an empty layer"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = shape
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let a = (6.0 / fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-a, a);
            let weights = (0..fan_in * fan_out)
                .map(|_| dist.sample(&mut rng))
                .collect();
            LayerParams {
                out_dim: fan_out,
                in_dim: fan_in,
                weights,
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    let mut net = InrNetwork::new(layers, kind, omega)?;
    net.seed = Some(seed);
    Ok(net)
}

fn range_len(r: &RangeInclusive<i64>) -> usize {
    if r.start() > r.end() {
        0
    } else {
        (r.end() - r.start() + 1) as usize
    }
}

/// One hidden layer of shifted units `F((x − Ωk)/Ω)` for `k` in `k_range`
/// and a zero output layer with `out_dim` outputs.
pub fn shift_network(
    kind: BasisKind,
    omega: f64,
    k_range: RangeInclusive<i64>,
    out_dim: usize,
) -> Result<InrNetwork> {
    let n = range_len(&k_range);
    if n == 0 {
        return Err(Error::EmptyRange);
    }
    let hidden = LayerParams {
        out_dim: n,
        in_dim: 1,
        weights: vec![1.0; n],
        bias: k_range.map(|k| -omega * k as f64).collect(),
    };
    InrNetwork::new(vec![hidden, LayerParams::zeros(out_dim, n)], kind, omega)
}

/// Two-layer network computing `Σ_k a(k) F(x − k)`.
pub fn construct_shift_network(
    coeffs: &ShiftCoefficients,
    kind: BasisKind,
    k_range: RangeInclusive<i64>,
) -> Result<InrNetwork> {
    construct_scaled_shift_network(coeffs, kind, 1.0, k_range)
}

/// Two-layer network computing `Σ_k a(k) F((x − Ωk)/Ω)`.
pub fn construct_scaled_shift_network(
    coeffs: &ShiftCoefficients,
    kind: BasisKind,
    omega: f64,
    k_range: RangeInclusive<i64>,
) -> Result<InrNetwork> {
    let mut net = shift_network(kind, omega, k_range.clone(), 1)?;
    let out = net.layers.last_mut().unwrap();
    for (i, k) in k_range.enumerate() {
        out.weights[i] = coeffs.get(k);
    }
    Ok(net)
}

/// Three-layer network: first hidden layer of `F_{Ω₁}` shifts over
/// `inner_range`, second hidden layer of `F_{Ω₂}` units mixing them with
/// `inner[(k, j)] = a_j(k)`, output weights `outer[k] = b_k`.
pub fn construct_deep_shift_network(
    outer: &ShiftCoefficients,
    inner: &DMatrix<f64>,
    kind: BasisKind,
    omega1: f64,
    omega2: f64,
    outer_range: RangeInclusive<i64>,
    inner_range: RangeInclusive<i64>,
) -> Result<InrNetwork> {
    let n1 = range_len(&inner_range);
    let n2 = range_len(&outer_range);
    if n1 == 0 {
        return Err(Error::EmptyRange);
    }
    if inner.nrows() != n2 {
        return Err(Error::DimensionMismatch {
            expected: n2,
            got: inner.nrows(),
        });
    }
    if inner.ncols() != n1 {
        return Err(Error::DimensionMismatch {
            expected: n1,
            got: inner.ncols(),
        });
    }
    let first = LayerParams {
        out_dim: n1,
        in_dim: 1,
        weights: vec![1.0; n1],
        bias: inner_range.map(|j| -omega1 * j as f64).collect(),
    };
    let mut w2 = Vec::with_capacity(n1 * n2);
    for r in 0..n2 {
        for c in 0..n1 {
            w2.push(inner[(r, c)]);
        }
    }
    let second = LayerParams {
        out_dim: n2,
        in_dim: n1,
        weights: w2,
        bias: vec![0.0; n2],
    };
    let third = LayerParams {
        out_dim: 1,
        in_dim: n2,
        weights: outer_range.map(|k| outer.get(k)).collect(),
        bias: vec![0.0],
    };
    InrNetwork::with_scales(vec![first, second, third], kind, vec![omega1, omega2])
}
