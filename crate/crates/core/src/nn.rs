//! Single-hidden-layer perceptron: sigmoid hidden units, linear outputs.
//!
//! Parameters live in one flat buffer laid out as `w1` (row-major,
//! `hidden x input`), `b1`, `w2` (row-major, `output x hidden`), `b2`. That
//! buffer is exactly the particle position the swarm optimizer searches, so
//! [`NetworkParams::flatten`] and [`NetworkParams::unflatten`] are copies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    #[serde(rename = "input")]
    pub input_len: usize,
    #[serde(rename = "hidden")]
    pub hidden_len: usize,
    #[serde(rename = "output")]
    pub output_len: usize,
}

impl Topology {
    pub fn new(input_len: usize, hidden_len: usize, output_len: usize) -> Result<Self> {
        let t = Self { input_len, hidden_len, output_len };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 || self.hidden_len == 0 || self.output_len == 0 {
            return Err(Error::InvalidConfig(format!("topology sizes must be >= 1, got {self:?}")));
        }
        Ok(())
    }

    /// Number of scalar parameters.
    pub fn dim(&self) -> usize {
        self.input_len * self.hidden_len + self.hidden_len + self.hidden_len * self.output_len + self.output_len
    }

    fn offsets(&self) -> [usize; 4] {
        let w1 = self.input_len * self.hidden_len;
        let w2 = self.hidden_len * self.output_len;
        [w1, w1 + self.hidden_len, w1 + self.hidden_len + w2, self.dim()]
    }
}

impl Default for Topology {
    fn default() -> Self {
        Self { input_len: 12, hidden_len: 6, output_len: 1 }
    }
}

/// One supervised example in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    topology: Topology,
    data: Vec<f64>,
}

/// Partial derivatives of the loss, shaped like [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(pub NetworkParams);

impl NetworkParams {
    pub fn zeros(topology: Topology) -> Self {
        Self { topology, data: vec![0.0; topology.dim()] }
    }

    pub fn from_parts(topology: Topology, w1: &[f64], b1: &[f64], w2: &[f64], b2: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(topology.dim());
        for part in [w1, b1, w2, b2] {
            data.extend_from_slice(part);
        }
        Self::unflatten(topology, data)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn w1(&self) -> &[f64] {
        let [a, ..] = self.topology.offsets();
        &self.data[..a]
    }

    pub fn b1(&self) -> &[f64] {
        let [a, b, ..] = self.topology.offsets();
        &self.data[a..b]
    }

    pub fn w2(&self) -> &[f64] {
        let [_, b, c, _] = self.topology.offsets();
        &self.data[b..c]
    }

    pub fn b2(&self) -> &[f64] {
        let [_, _, c, d] = self.topology.offsets();
        &self.data[c..d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn unflatten(topology: Topology, flat: Vec<f64>) -> Result<Self> {
        if flat.len() != topology.dim() {
            return Err(Error::DimensionMismatch { expected: topology.dim(), got: flat.len() });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("network parameters must be finite".into()));
        }
        Ok(Self { topology, data: flat })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        forward(self, input)
    }
}

/// Draws every parameter uniformly from `[-range, range]`, in flatten order.
pub fn init_params(topology: Topology, seed: u64, range: f64) -> Result<NetworkParams> {
    topology.validate()?;
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::InvalidConfig(format!("init range must be positive, got {range}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..topology.dim()).map(|_| rng.gen_range(-range..=range)).collect();
    Ok(NetworkParams { topology, data })
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Evaluates the network on a flat parameter slice, writing hidden
/// activations and outputs into caller-provided buffers.
fn forward_into(t: &Topology, flat: &[f64], input: &[f64], hidden: &mut [f64], output: &mut [f64]) {
    let [o1, o2, o3, _] = t.offsets();
    let (w1, b1, w2, b2) = (&flat[..o1], &flat[o1..o2], &flat[o2..o3], &flat[o3..]);
    for (h, (row, b)) in hidden.iter_mut().zip(w1.chunks_exact(t.input_len).zip(b1)) {
        let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b;
        *h = sigmoid(z);
    }
    for (y, (row, b)) in output.iter_mut().zip(w2.chunks_exact(t.hidden_len).zip(b2)) {
        *y = row.iter().zip(hidden.iter()).map(|(w, h)| w * h).sum::<f64>() + b;
    }
}

pub fn forward(params: &NetworkParams, input: &[f64]) -> Result<Vec<f64>> {
    let t = params.topology;
    if input.len() != t.input_len {
        return Err(Error::DimensionMismatch { expected: t.input_len, got: input.len() });
    }
    let mut hidden = vec![0.0; t.hidden_len];
    let mut output = vec![0.0; t.output_len];
    forward_into(&t, &params.data, input, &mut hidden, &mut output);
    Ok(output)
}

fn check_samples(t: &Topology, samples: &[Sample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for s in samples {
        if s.inputs.len() != t.input_len {
            return Err(Error::DimensionMismatch { expected: t.input_len, got: s.inputs.len() });
        }
        if s.targets.len() != t.output_len {
            return Err(Error::DimensionMismatch { expected: t.output_len, got: s.targets.len() });
        }
    }
    Ok(())
}

/// Mean over samples of the summed squared output error, for a flat
/// parameter vector. Shapes are assumed checked.
pub(crate) fn mse_flat(t: &Topology, flat: &[f64], samples: &[Sample]) -> f64 {
    let mut hidden = vec![0.0; t.hidden_len];
    let mut output = vec![0.0; t.output_len];
    let mut total = 0.0;
    for s in samples {
        forward_into(t, flat, &s.inputs, &mut hidden, &mut output);
        total += output.iter().zip(&s.targets).map(|(y, d)| (y - d) * (y - d)).sum::<f64>();
    }
    total / samples.len() as f64
}

pub fn mse_loss(params: &NetworkParams, samples: &[Sample]) -> Result<f64> {
    check_samples(&params.topology, samples)?;
    Ok(mse_flat(&params.topology, &params.data, samples))
}

/// Analytic gradient of [`mse_loss`].
pub fn backprop(params: &NetworkParams, samples: &[Sample]) -> Result<Gradient> {
    let t = params.topology;
    check_samples(&t, samples)?;
    let [o1, o2, o3, _] = t.offsets();
    let w2 = &params.data[o2..o3];
    let mut grad = vec![0.0; t.dim()];
    let mut hidden = vec![0.0; t.hidden_len];
    let mut output = vec![0.0; t.output_len];
    let mut delta_out = vec![0.0; t.output_len];
    let scale = 2.0 / samples.len() as f64;

    for s in samples {
        forward_into(&t, &params.data, &s.inputs, &mut hidden, &mut output);
        for ((d, y), target) in delta_out.iter_mut().zip(&output).zip(&s.targets) {
            *d = scale * (y - target);
        }
        let (g_w1, rest) = grad.split_at_mut(o1);
        let (g_b1, rest) = rest.split_at_mut(o2 - o1);
        let (g_w2, g_b2) = rest.split_at_mut(o3 - o2);
        for (k, &d) in delta_out.iter().enumerate() {
            g_b2[k] += d;
            for (g, h) in g_w2[k * t.hidden_len..(k + 1) * t.hidden_len].iter_mut().zip(&hidden) {
                *g += d * h;
            }
        }
        for (j, &h) in hidden.iter().enumerate() {
            let back: f64 = delta_out
                .iter()
                .enumerate()
                .map(|(k, d)| d * w2[k * t.hidden_len + j])
                .sum();
            let dz = back * h * (1.0 - h);
            g_b1[j] += dz;
            for (g, x) in g_w1[j * t.input_len..(j + 1) * t.input_len].iter_mut().zip(&s.inputs) {
                *g += dz * x;
            }
        }
    }
    Ok(Gradient(NetworkParams { topology: t, data: grad }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BPConfig {
    /// Step size, `alpha`.
    pub learning_rate: f64,
    /// Momentum coefficient, `eta`, in `[0, 1)`.
    pub momentum: f64,
    pub max_epochs: usize,
    pub target_loss: f64,
}

impl Default for BPConfig {
    fn default() -> Self {
        Self { learning_rate: 0.07, momentum: 0.80, max_epochs: 5000, target_loss: 0.005 }
    }
}

impl BPConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.target_loss > 0.0) {
            return bad("target_loss must be positive");
        }
        Ok(())
    }
}

/// `update = -alpha * gradient + eta * previous_update`, applied to `params`.
pub fn momentum_step(
    params: &NetworkParams,
    gradient: &Gradient,
    previous_update: &[f64],
    config: &BPConfig,
) -> Result<(NetworkParams, Vec<f64>)> {
    let d = params.topology.dim();
    if gradient.0.topology != params.topology {
        return Err(Error::DimensionMismatch { expected: d, got: gradient.0.data.len() });
    }
    if previous_update.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: previous_update.len() });
    }
    let update: Vec<f64> = gradient
        .0
        .data
        .iter()
        .zip(previous_update)
        .map(|(g, p)| -config.learning_rate * g + config.momentum * p)
        .collect();
    let data = params.data.iter().zip(&update).map(|(p, u)| p + u).collect();
    Ok((NetworkParams { topology: params.topology, data }, update))
}
