//! Dense feed-forward Q-network with hand-written backpropagation.
//!
//! Hidden layers use rectified linear units, the output layer is linear with
//! one unit per action. Weights are stored row-major as `outputs x inputs`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    /// `out[b] = W in[b] + bias`, optionally rectified.
    fn forward_into(&self, input: &[f64], batch: usize, relu: bool, out: &mut Vec<f64>) {
        out.clear();
        out.resize(batch * self.outputs, 0.0);
        for b in 0..batch {
            let x = &input[b * self.inputs..(b + 1) * self.inputs];
            let y = &mut out[b * self.outputs..(b + 1) * self.outputs];
            for (o, yo) in y.iter_mut().enumerate() {
                let z = self.biases[o] + dot(self.row(o), x);
                *yo = if relu && z < 0.0 { 0.0 } else { z };
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub layers: Vec<Dense>,
}

/// One row of a regression batch: squared error on a single action output.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingBatch {
    /// Row-major `batch x input_len`.
    pub observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub targets: Vec<f64>,
    /// Bound on `|Q - target|` in the gradient; the reported loss is unclipped.
    pub error_clip: Option<f64>,
}

impl TrainingBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Gradients shaped like the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

impl QNetwork {
    /// Uniform He initialization, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`,
    /// zero biases.
    pub fn new(dims: &[usize], rng: &mut StreamRng) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        for layer in &mut net.layers {
            let limit = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::config("layers", format!("invalid layer sizes {dims:?}")));
        }
        Ok(Self {
            layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].inputs];
        dims.extend(self.layers.iter().map(|l| l.outputs));
        dims
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_batch(input, 1)
    }

    /// Q-values for `batch` row-major inputs, returned row-major.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.check_input(inputs, batch)?;
        let mut cur = inputs.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&cur, batch, l < last, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    fn check_input(&self, inputs: &[f64], batch: usize) -> Result<()> {
        if inputs.len() != batch * self.input_len() {
            return Err(Error::Usage(format!(
                "expected {} inputs per row, got {} values for {batch} rows",
                self.input_len(),
                inputs.len()
            )));
        }
        Ok(())
    }

    /// Mean squared error between `targets` and the Q-value of each row's
    /// action, with gradients flowing only through that output.
    pub fn loss_and_gradients(&self, batch: &TrainingBatch) -> Result<(f64, Gradients)> {
        let rows = batch.len();
        if rows == 0 {
            return Err(Error::Usage("empty training batch".into()));
        }
        if batch.targets.len() != rows {
            return Err(Error::Usage("targets and actions differ in length".into()));
        }
        self.check_input(&batch.observations, rows)?;
        let n_out = self.output_len();
        if let Some(&bad) = batch.actions.iter().find(|&&a| a >= n_out) {
            return Err(Error::Usage(format!("action {bad} out of range")));
        }

        // activations[l] is the input of layer l; the last entry is the output
        let last = self.layers.len() - 1;
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.observations.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.forward_into(&activations[l], rows, l < last, &mut out);
            activations.push(out);
        }

        let q = &activations[self.layers.len()];
        let scale = 2.0 / rows as f64;
        let mut loss = 0.0;
        let mut delta = vec![0.0; rows * n_out];
        for b in 0..rows {
            let a = batch.actions[b];
            let err = q[b * n_out + a] - batch.targets[b];
            loss += err * err;
            let g = batch.error_clip.map_or(err, |c| err.clamp(-c, c));
            delta[b * n_out + a] = scale * g;
        }
        loss /= rows as f64;

        let mut grads: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &activations[l];
            let g = &mut grads[l];
            let mut delta_in = if l > 0 { vec![0.0; rows * layer.inputs] } else { Vec::new() };
            for b in 0..rows {
                let x = &input[b * layer.inputs..(b + 1) * layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[b * layer.outputs + o];
                    if d == 0.0 {
                        continue;
                    }
                    g.biases[o] += d;
                    axpy(d, x, &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs]);
                    if l > 0 {
                        axpy(d, layer.row(o), &mut delta_in[b * layer.inputs..(b + 1) * layer.inputs]);
                    }
                }
            }
            if l > 0 {
                // rectifier derivative: zero where the unit was inactive
                for (di, &xi) in delta_in.iter_mut().zip(input.iter()) {
                    if xi <= 0.0 {
                        *di = 0.0;
                    }
                }
                delta = delta_in;
            }
        }
        Ok((loss, Gradients { layers: grads }))
    }

    /// Versioned little-endian encoding: magic, version, layer dims, then
    /// each layer's row-major weights followed by its biases.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.param_count());
        out.extend_from_slice(WEIGHT_MAGIC);
        out.extend_from_slice(&WEIGHT_VERSION.to_le_bytes());
        let dims = self.dims();
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for layer in &self.layers {
            for v in layer.weights.iter().chain(&layer.biases) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = ByteCursor { bytes, pos: 0 };
        if cur.take(4)? != WEIGHT_MAGIC {
            return Err(Error::Format("not a weight file".into()));
        }
        let version = cur.u32()?;
        if version != WEIGHT_VERSION {
            return Err(Error::Format(format!("unsupported weight version {version}")));
        }
        let n = cur.u32()? as usize;
        if !(2..=64).contains(&n) {
            return Err(Error::Format(format!("implausible layer count {n}")));
        }
        let dims: Vec<usize> = (0..n).map(|_| cur.u64().map(|d| d as usize)).collect::<Result<_>>()?;
        let mut net = Self::zeros(&dims).map_err(|e| Error::Format(e.to_string()))?;
        for layer in &mut net.layers {
            for v in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *v = cur.f64()?;
            }
        }
        if cur.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after weights".into()));
        }
        Ok(net)
    }

    /// Loads weights and rejects a file whose layer dims differ from `dims`.
    pub fn from_bytes_expecting(bytes: &[u8], dims: &[usize]) -> Result<Self> {
        let net = Self::from_bytes(bytes)?;
        if net.dims() != dims {
            return Err(Error::Format(format!(
                "weight dims {:?} do not match expected {dims:?}",
                net.dims()
            )));
        }
        Ok(net)
    }

    pub fn clone_weights(&self) -> Self {
        self.clone()
    }
}

const WEIGHT_MAGIC: &[u8; 4] = b"GSQN";
const WEIGHT_VERSION: u32 = 1;

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("truncated weight file".into()))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
    Sgd { lr: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub first_moment: Vec<Dense>,
    pub second_moment: Vec<Dense>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, net: &QNetwork) -> Self {
        let zeros: Vec<Dense> = net
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        Self {
            kind,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
        }
    }
}

pub fn apply_update(net: &mut QNetwork, grads: &Gradients, opt: &mut OptimizerState) {
    opt.step += 1;
    match opt.kind {
        OptimizerKind::Sgd { lr } => {
            for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
                axpy(-lr, &g.weights, &mut layer.weights);
                axpy(-lr, &g.biases, &mut layer.biases);
            }
        }
        OptimizerKind::Adam { lr, beta1, beta2, eps } => {
            let t = opt.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            let step_size = lr / c1;
            let c2_sqrt = c2.sqrt();
            for (((layer, g), m), v) in net
                .layers
                .iter_mut()
                .zip(&grads.layers)
                .zip(&mut opt.first_moment)
                .zip(&mut opt.second_moment)
            {
                let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
                let gs = g.weights.iter().chain(&g.biases);
                let ms = m.weights.iter_mut().chain(m.biases.iter_mut());
                let vs = v.weights.iter_mut().chain(v.biases.iter_mut());
                for (((p, &gi), mi), vi) in params.zip(gs).zip(ms).zip(vs) {
                    *mi = beta1 * *mi + (1.0 - beta1) * gi;
                    *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                    *p -= step_size * *mi / (vi.sqrt() / c2_sqrt + eps);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    /// Independent forward pass over nested vectors.
    fn reference_forward(net: &QNetwork, x: &[f64]) -> Vec<f64> {
        let mut a: Vec<f64> = x.to_vec();
        for (l, layer) in net.layers.iter().enumerate() {
            let w: Vec<Vec<f64>> = layer.weights.chunks(layer.inputs).map(|r| r.to_vec()).collect();
            let mut z: Vec<f64> = w
                .iter()
                .zip(&layer.biases)
                .map(|(row, b)| row.iter().zip(&a).map(|(p, q)| p * q).sum::<f64>() + b)
                .collect();
            if l + 1 < net.layers.len() {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a
    }

    fn random_batch(net: &QNetwork, rows: usize, rng: &mut StreamRng) -> TrainingBatch {
        let n_in = net.input_len();
        TrainingBatch {
            observations: (0..rows * n_in).map(|_| StandardNormal.sample(rng)).collect(),
            actions: (0..rows).map(|_| rng.random_range(0..net.output_len())).collect(),
            targets: (0..rows).map(|_| StandardNormal.sample(rng)).collect(),
            error_clip: None,
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::zeros(&[4, 8, 3]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn single_unit_relu() {
        let mut net = QNetwork::zeros(&[1, 1, 1]).unwrap();
        net.layers[0].weights[0] = 1.0;
        net.layers[1].weights[0] = 1.0;
        assert_eq!(net.forward(&[2.5]).unwrap(), vec![2.5]);
        assert_eq!(net.forward(&[-2.5]).unwrap(), vec![0.0]);
    }

    #[test]
    fn forward_matches_reference() {
        let mut rng = seeded(17);
        let net = QNetwork::new(&[49, 128, 64, 11], &mut rng).unwrap();
        let x: Vec<f64> = (0..49).map(|_| StandardNormal.sample(&mut rng)).collect();
        let fast = net.forward(&x).unwrap();
        let slow = reference_forward(&net, &x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(net.forward(&x[..48]).is_err());
    }

    #[test]
    fn parameter_count_for_layered_config() {
        let net = QNetwork::zeros(&[49, 128, 64, 11]).unwrap();
        assert_eq!(net.param_count(), 49 * 128 + 128 + 128 * 64 + 64 + 64 * 11 + 11);
        assert_eq!(net.param_count(), 15_371);
    }

    #[test]
    fn perfect_predictions_have_zero_loss_and_gradient() {
        let mut rng = seeded(5);
        let net = QNetwork::new(&[3, 5, 2], &mut rng).unwrap();
        let mut batch = random_batch(&net, 4, &mut rng);
        let q = net.forward_batch(&batch.observations, 4).unwrap();
        batch.targets = (0..4).map(|b| q[b * 2 + batch.actions[b]]).collect();
        let (loss, grads) = net.loss_and_gradients(&batch).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grads.max_abs(), 0.0);
    }

    #[test]
    fn linear_gradient_by_hand() {
        // 1 -> 1 -> 1 with an identity first layer: Q = w * x for x > 0
        let mut net = QNetwork::zeros(&[1, 1, 1]).unwrap();
        net.layers[0].weights[0] = 1.0;
        net.layers[1].weights[0] = 0.7;
        let batch = TrainingBatch {
            observations: vec![2.0],
            actions: vec![0],
            targets: vec![3.0],
            error_clip: None,
        };
        let (loss, grads) = net.loss_and_gradients(&batch).unwrap();
        let q = 1.4;
        assert!((loss - (q - 3.0f64).powi(2)).abs() < 1e-12);
        assert!((grads.layers[1].weights[0] - 2.0 * (q - 3.0) * 2.0).abs() < 1e-12);

        let clipped = TrainingBatch {
            error_clip: Some(0.5),
            ..batch
        };
        let (loss_c, grads_c) = net.loss_and_gradients(&clipped).unwrap();
        assert_eq!(loss_c, loss);
        assert!((grads_c.layers[1].weights[0] - 2.0 * -0.5 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = seeded(99);
        let net = QNetwork::new(&[6, 10, 7, 3], &mut rng).unwrap();
        let batch = random_batch(&net, 5, &mut rng);
        let (_, grads) = net.loss_and_gradients(&batch).unwrap();
        let h = 1e-5;
        for l in 0..net.layers.len() {
            for idx in 0..net.layers[l].weights.len() {
                let mut plus = net.clone();
                plus.layers[l].weights[idx] += h;
                let mut minus = net.clone();
                minus.layers[l].weights[idx] -= h;
                let fd = (plus.loss_and_gradients(&batch).unwrap().0
                    - minus.loss_and_gradients(&batch).unwrap().0)
                    / (2.0 * h);
                let an = grads.layers[l].weights[idx];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                assert!(rel < 1e-4, "layer {l} weight {idx}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn sgd_step_is_exact() {
        let mut rng = seeded(2);
        let mut net = QNetwork::new(&[2, 3, 2], &mut rng).unwrap();
        let before = net.clone();
        let batch = random_batch(&net, 3, &mut rng);
        let (_, grads) = net.loss_and_gradients(&batch).unwrap();
        let mut opt = OptimizerState::new(OptimizerKind::Sgd { lr: 0.1 }, &net);
        apply_update(&mut net, &grads, &mut opt);
        for l in 0..2 {
            for i in 0..net.layers[l].weights.len() {
                let expected = before.layers[l].weights[i] - 0.1 * grads.layers[l].weights[i];
                assert_eq!(net.layers[l].weights[i], expected);
            }
        }
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut rng = seeded(3);
        let mut net = QNetwork::new(&[2, 3, 2], &mut rng).unwrap();
        let before = net.clone();
        let zeros = Gradients {
            layers: net.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        };
        let mut opt = OptimizerState::new(OptimizerKind::default(), &net);
        apply_update(&mut net, &zeros, &mut opt);
        assert_eq!(net, before);
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        // single bias parameter fitted to a constant target
        let mut net = QNetwork::zeros(&[1, 1, 1]).unwrap();
        let batch = TrainingBatch {
            observations: vec![0.0],
            actions: vec![0],
            targets: vec![1.7],
            error_clip: None,
        };
        let mut opt = OptimizerState::new(OptimizerKind::default(), &net);
        for _ in 0..10_000 {
            let (_, g) = net.loss_and_gradients(&batch).unwrap();
            apply_update(&mut net, &g, &mut opt);
        }
        assert!((net.layers[1].biases[0] - 1.7).abs() < 1e-3);
    }

    #[test]
    fn weight_file_round_trip_and_dim_check() {
        let net = QNetwork::new(&[10, 128, 64, 6], &mut seeded(8)).unwrap();
        let bytes = net.to_bytes();
        assert_eq!(QNetwork::from_bytes(&bytes).unwrap(), net);
        assert!(QNetwork::from_bytes_expecting(&bytes, &[49, 128, 64, 11]).is_err());
        assert!(QNetwork::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn clone_is_independent() {
        let mut rng = seeded(12);
        let mut net = QNetwork::new(&[4, 6, 3], &mut rng).unwrap();
        let target = net.clone_weights();
        let x = [0.3, -0.2, 1.0, 0.5];
        assert_eq!(net.forward(&x).unwrap(), target.forward(&x).unwrap());
        let snapshot = target.to_bytes();
        let batch = random_batch(&net, 8, &mut rng);
        let (_, g) = net.loss_and_gradients(&batch).unwrap();
        let mut opt = OptimizerState::new(OptimizerKind::default(), &net);
        apply_update(&mut net, &g, &mut opt);
        assert_ne!(net.forward(&x).unwrap(), target.forward(&x).unwrap());
        assert_eq!(target.to_bytes(), snapshot);
    }
}
