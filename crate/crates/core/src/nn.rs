//! Fully-connected Q-network with hand-written backward passes and Adam.
//!
//! Parameters live in one flat vector, layer after layer, each layer laid out as
//! its row-major `out x in` weight matrix followed by its bias. Gradients and
//! optimizer moments use the same layout, so blending and updating are plain
//! element-wise loops.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HIDDEN_WIDTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerShape {
    in_dim: usize,
    out_dim: usize,
    offset: usize,
}

impl LayerShape {
    fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.in_dim * self.out_dim
    }

    fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.in_dim * self.out_dim;
        start..start + self.out_dim
    }
}

fn layer_shapes(dims: &[usize]) -> Vec<LayerShape> {
    let mut offset = 0;
    dims.windows(2)
        .map(|w| {
            let shape = LayerShape {
                in_dim: w[0],
                out_dim: w[1],
                offset,
            };
            offset += w[0] * w[1] + w[1];
            shape
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    dims: Vec<usize>,
    shapes: Vec<LayerShape>,
    params: Vec<f64>,
}

/// Gradient of a scalar with respect to every parameter of a [`QNetwork`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl GradientSet {
    pub fn zeros_like(net: &QNetwork) -> Self {
        Self {
            dims: net.dims.clone(),
            values: vec![0.0; net.params.len()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn add_assign(&mut self, other: &GradientSet) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::usage("gradient shapes differ"));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        // subgradient convention: exactly-zero inputs count as inactive
        if *x <= 0.0 {
            *x = 0.0;
        }
    }
}

/// Post-activation values of every layer for one batch of inputs.
#[derive(Debug, Clone)]
pub struct BatchActivations {
    rows: usize,
    /// `acts[0]` is the input batch, `acts[l]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl BatchActivations {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Output (Q-values) of the network, row-major `rows x action_dim`.
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("at least the input layer")
    }

    pub fn output_row(&self, row: usize) -> &[f64] {
        let width = self.output().len() / self.rows.max(1);
        &self.output()[row * width..(row + 1) * width]
    }
}

impl QNetwork {
    /// Network with layer widths `dims` (input first, action count last), initialized
    /// uniformly in `±1/sqrt(fan_in)`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::usage(format!("invalid layer widths {dims:?}")));
        }
        let shapes = layer_shapes(dims);
        let total = shapes.last().map(|s| s.bias_range().end).unwrap_or(0);
        let mut params = vec![0.0; total];
        for s in &shapes {
            let bound = 1.0 / (s.in_dim as f64).sqrt();
            for p in &mut params[s.offset..s.bias_range().end] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            shapes,
            params,
        })
    }

    /// `input_dim -> 256 -> 256 -> action_dim` MLP.
    pub fn mlp<R: Rng + ?Sized>(input_dim: usize, action_dim: usize, rng: &mut R) -> Result<Self> {
        Self::new(&[input_dim, HIDDEN_WIDTH, HIDDEN_WIDTH, action_dim], rng)
    }

    /// Build from explicit `(weights, biases)` per layer; weights row-major `out x in`.
    pub fn from_layers(dims: &[usize], layers: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        if dims.len() < 2 || layers.len() != dims.len() - 1 {
            return Err(Error::usage("layer count does not match widths"));
        }
        let shapes = layer_shapes(dims);
        let mut params = Vec::with_capacity(shapes.last().unwrap().bias_range().end);
        for (s, (w, b)) in shapes.iter().zip(layers) {
            if w.len() != s.in_dim * s.out_dim || b.len() != s.out_dim {
                return Err(Error::usage(format!(
                    "layer {}x{} got {} weights and {} biases",
                    s.out_dim,
                    s.in_dim,
                    w.len(),
                    b.len()
                )));
            }
            params.extend_from_slice(w);
            params.extend_from_slice(b);
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("non-finite parameter"));
        }
        Ok(Self {
            dims: dims.to_vec(),
            shapes,
            params,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn action_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.dims[1..self.dims.len() - 1]
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weights and biases of each layer, in order.
    pub fn layers(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.shapes
            .iter()
            .map(|s| {
                (
                    self.params[s.weight_range()].to_vec(),
                    self.params[s.bias_range()].to_vec(),
                )
            })
            .collect()
    }

    pub fn same_shape(&self, other: &QNetwork) -> bool {
        self.dims == other.dims
    }

    fn check_input(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.input_dim() {
            return Err(Error::usage(format!(
                "observation has {} entries, network expects {}",
                obs.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn forward_trace(&self, obs: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.shapes.len() + 1);
        acts.push(obs.to_vec());
        let last = self.shapes.len() - 1;
        for (l, s) in self.shapes.iter().enumerate() {
            let w = &self.params[s.weight_range()];
            let b = &self.params[s.bias_range()];
            let x = &acts[l];
            let mut y: Vec<f64> = (0..s.out_dim)
                .map(|o| dot(&w[o * s.in_dim..(o + 1) * s.in_dim], x) + b[o])
                .collect();
            if l < last {
                relu_in_place(&mut y);
            }
            acts.push(y);
        }
        acts
    }

    /// Q-values for one observation.
    pub fn forward(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.check_input(obs)?;
        Ok(self.forward_trace(obs).pop().unwrap())
    }

    fn backward_trace(
        &self,
        acts: &[Vec<f64>],
        upstream: &[f64],
        mut grads: Option<&mut [f64]>,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let mut delta = upstream.to_vec();
        for l in (0..self.shapes.len()).rev() {
            let s = self.shapes[l];
            let x = &acts[l];
            if let Some(g) = grads.as_deref_mut() {
                let (gw, gb) = g[s.offset..s.bias_range().end].split_at_mut(s.in_dim * s.out_dim);
                for o in 0..s.out_dim {
                    let d = delta[o];
                    if d != 0.0 {
                        for (gi, xi) in gw[o * s.in_dim..(o + 1) * s.in_dim].iter_mut().zip(x) {
                            *gi += d * xi;
                        }
                    }
                    gb[o] += d;
                }
            }
            if l == 0 && !want_input {
                return None;
            }
            let w = &self.params[s.weight_range()];
            let mut prev = vec![0.0; s.in_dim];
            for o in 0..s.out_dim {
                let d = delta[o];
                if d != 0.0 {
                    for (p, wi) in prev.iter_mut().zip(&w[o * s.in_dim..(o + 1) * s.in_dim]) {
                        *p += d * wi;
                    }
                }
            }
            if l > 0 {
                for (p, a) in prev.iter_mut().zip(x) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Some(delta)
    }

    fn check_upstream(&self, upstream: &[f64]) -> Result<()> {
        if upstream.len() != self.action_dim() {
            return Err(Error::usage(format!(
                "upstream has {} entries, network has {} actions",
                upstream.len(),
                self.action_dim()
            )));
        }
        Ok(())
    }

    /// Gradient of `<upstream, forward(obs)>` with respect to all parameters.
    pub fn backward_params(&self, obs: &[f64], upstream: &[f64]) -> Result<GradientSet> {
        self.check_input(obs)?;
        self.check_upstream(upstream)?;
        let acts = self.forward_trace(obs);
        let mut grads = GradientSet::zeros_like(self);
        self.backward_trace(&acts, upstream, Some(&mut grads.values), false);
        Ok(grads)
    }

    /// Gradient of `<upstream, forward(obs)>` with respect to `obs`.
    pub fn backward_input(&self, obs: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        self.check_input(obs)?;
        self.check_upstream(upstream)?;
        let acts = self.forward_trace(obs);
        Ok(self.backward_trace(&acts, upstream, None, true).unwrap())
    }

    /// Forward pass plus input gradient of a loss whose logit gradient is produced by
    /// `loss_grad` from the Q-values. Saves one forward pass over calling both.
    pub fn input_gradient_with<F>(&self, obs: &[f64], loss_grad: F) -> Result<(Vec<f64>, Vec<f64>)>
    where
        F: FnOnce(&[f64]) -> Result<Vec<f64>>,
    {
        self.check_input(obs)?;
        let acts = self.forward_trace(obs);
        let q = acts.last().unwrap().clone();
        let upstream = loss_grad(&q)?;
        self.check_upstream(&upstream)?;
        let g = self.backward_trace(&acts, &upstream, None, true).unwrap();
        Ok((q, g))
    }

    /// Forward pass over `rows` stacked observations (row-major `rows x input_dim`).
    pub fn forward_batch(&self, inputs: &[f64], rows: usize) -> Result<BatchActivations> {
        if inputs.len() != rows * self.input_dim() {
            return Err(Error::usage(format!(
                "batch of {rows} rows needs {} values, got {}",
                rows * self.input_dim(),
                inputs.len()
            )));
        }
        let mut acts = Vec::with_capacity(self.shapes.len() + 1);
        acts.push(inputs.to_vec());
        let last = self.shapes.len() - 1;
        for (l, s) in self.shapes.iter().enumerate() {
            let w = &self.params[s.weight_range()];
            let b = &self.params[s.bias_range()];
            let mut y = Vec::with_capacity(rows * s.out_dim);
            for _ in 0..rows {
                y.extend_from_slice(b);
            }
            let x = &acts[l];
            // y (rows x out) += x (rows x in) * w^T (in x out)
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    s.in_dim,
                    s.out_dim,
                    1.0,
                    x.as_ptr(),
                    s.in_dim as isize,
                    1,
                    w.as_ptr(),
                    1,
                    s.in_dim as isize,
                    1.0,
                    y.as_mut_ptr(),
                    s.out_dim as isize,
                    1,
                );
            }
            if l < last {
                relu_in_place(&mut y);
            }
            acts.push(y);
        }
        Ok(BatchActivations { rows, acts })
    }

    /// Sum over rows of the parameter gradients of `<upstream_row, q_row>`.
    pub fn backward_batch(&self, cache: &BatchActivations, upstream: &[f64]) -> Result<GradientSet> {
        let rows = cache.rows;
        if upstream.len() != rows * self.action_dim() {
            return Err(Error::usage("upstream batch shape mismatch"));
        }
        if cache.acts.len() != self.shapes.len() + 1 || cache.acts[0].len() != rows * self.input_dim() {
            return Err(Error::usage("activation cache does not belong to this network"));
        }
        let mut grads = GradientSet::zeros_like(self);
        let mut delta = upstream.to_vec();
        for l in (0..self.shapes.len()).rev() {
            let s = self.shapes[l];
            let x = &cache.acts[l];
            let (gw, gb) = grads.values[s.offset..s.bias_range().end].split_at_mut(s.in_dim * s.out_dim);
            // gw (out x in) = delta^T (out x rows) * x (rows x in)
            unsafe {
                matrixmultiply::dgemm(
                    s.out_dim,
                    rows,
                    s.in_dim,
                    1.0,
                    delta.as_ptr(),
                    1,
                    s.out_dim as isize,
                    x.as_ptr(),
                    s.in_dim as isize,
                    1,
                    0.0,
                    gw.as_mut_ptr(),
                    s.in_dim as isize,
                    1,
                );
            }
            for r in 0..rows {
                for (g, d) in gb.iter_mut().zip(&delta[r * s.out_dim..(r + 1) * s.out_dim]) {
                    *g += d;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[s.weight_range()];
            let mut prev = vec![0.0; rows * s.in_dim];
            // prev (rows x in) = delta (rows x out) * w (out x in)
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    s.out_dim,
                    s.in_dim,
                    1.0,
                    delta.as_ptr(),
                    s.out_dim as isize,
                    1,
                    w.as_ptr(),
                    s.in_dim as isize,
                    1,
                    0.0,
                    prev.as_mut_ptr(),
                    s.in_dim as isize,
                    1,
                );
            }
            for (p, a) in prev.iter_mut().zip(x) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
        Ok(grads)
    }

    /// `self <- k * online + (1 - k) * self`.
    pub fn polyak_from(&mut self, online: &QNetwork, k: f64) -> Result<()> {
        if !self.same_shape(online) {
            return Err(Error::usage("polyak update between differently shaped networks"));
        }
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::domain(format!("polyak rate must lie in [0,1], got {k}")));
        }
        if k == 1.0 {
            self.params.copy_from_slice(&online.params);
        } else if k > 0.0 {
            for (t, o) in self.params.iter_mut().zip(&online.params) {
                *t = k * o + (1.0 - k) * *t;
            }
        }
        Ok(())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Top-1 and runner-up indices, ties broken by lowest index. Needs at least two entries.
pub fn top_two(values: &[f64]) -> Result<(usize, usize)> {
    if values.len() < 2 {
        return Err(Error::usage("need at least two actions"));
    }
    let first = argmax(values);
    let mut second = if first == 0 { 1 } else { 0 };
    for (i, &v) in values.iter().enumerate() {
        if i != first && v > values[second] {
            second = i;
        }
    }
    Ok((first, second))
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `-sum target * log softmax(logits)` and its gradient `softmax(logits) - target`.
pub fn softmax_cross_entropy(logits: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != target.len() || logits.is_empty() {
        return Err(Error::usage("logits and target differ in length"));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::domain("non-finite logits"));
    }
    let total: f64 = target.iter().sum();
    if (total - 1.0).abs() > 1e-9 || target.iter().any(|&t| t < 0.0) {
        return Err(Error::domain(format!("target is not a distribution (sums to {total})")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let loss = target
        .iter()
        .zip(logits)
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, &z)| -t * (z - log_norm))
        .sum();
    let grad = logits
        .iter()
        .zip(target)
        .map(|(&z, &t)| (z - log_norm).exp() - t)
        .collect();
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(net: &QNetwork, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; net.num_params()],
            v: vec![0.0; net.num_params()],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of `net` along `grads`.
    pub fn step(&mut self, net: &mut QNetwork, grads: &GradientSet) -> Result<()> {
        if grads.dims != net.dims || self.m.len() != net.params.len() {
            return Err(Error::usage("optimizer, network and gradient shapes differ"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in net
            .params
            .iter_mut()
            .zip(&grads.values)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub method: String,
    pub sigma: f64,
    pub lambda: f64,
    pub seed: u64,
    pub train_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub action_dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn from_network(net: &QNetwork, meta: CheckpointMeta) -> Self {
        let (weights, biases) = net.layers().into_iter().unzip();
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            input_dim: net.input_dim(),
            hidden_dims: net.hidden_dims().to_vec(),
            action_dim: net.action_dim(),
            weights,
            biases,
            meta,
        }
    }

    pub fn to_network(&self) -> Result<QNetwork> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_dims);
        dims.push(self.action_dim);
        if self.weights.len() != self.biases.len() {
            return Err(Error::Format("weights and biases list different layer counts".into()));
        }
        let layers: Vec<_> = self
            .weights
            .iter()
            .cloned()
            .zip(self.biases.iter().cloned())
            .collect();
        QNetwork::from_layers(&dims, &layers).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("checkpoint: {e}")))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(CHECKPOINT_FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::Format(format!(
                    "unsupported checkpoint format_version {v} (expected {CHECKPOINT_FORMAT_VERSION})"
                )))
            }
            None => return Err(Error::Format("checkpoint lacks format_version".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Format(format!("checkpoint: {e}")))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
