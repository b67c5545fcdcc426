//! Fully connected feedforward networks with hand-written backpropagation.

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{check_len, Error, Result};
use crate::numkit::Rng;

pub const NET_MAGIC: &[u8; 4] = b"ICAM";
pub const NET_VERSION: u16 = 1;

/// Hidden-layer nonlinearity. The output layer is always affine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn code(self) -> u16 {
        match self {
            Activation::Tanh => 0,
            Activation::Relu => 1,
            Activation::Identity => 2,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        match code {
            0 => Some(Activation::Tanh),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// A dense network. Layer `i` holds a row-major `dims[i+1] x dims[i]` weight
/// matrix and a bias of length `dims[i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    activation: Activation,
}

/// Parameter-shaped gradient buffers for a [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl NetGrads {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        for t in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            t.fill(0.0);
        }
    }

    /// `self += other`, element by element in a fixed order.
    pub fn add_assign(&mut self, other: &NetGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flat_map(|t| t.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Reusable activation buffers so the training loop does not allocate per record.
#[derive(Debug, Clone)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    pub fn new(net: &DenseNet) -> Self {
        let widest = net.dims.iter().copied().max().unwrap_or(0);
        Self {
            acts: net.dims.iter().map(|&d| vec![0.0; d]).collect(),
            delta: Vec::with_capacity(widest),
            delta_prev: Vec::with_capacity(widest),
        }
    }

    /// Output of the most recent forward pass.
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl DenseNet {
    /// A network with every parameter zero.
    pub fn zeros(dims: &[usize], activation: Activation) -> Result<Self> {
        validate_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            weights: dims.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: dims.windows(2).map(|w| vec![0.0; w[1]]).collect(),
            activation,
        })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn random(dims: &[usize], activation: Activation, rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(dims, activation)?;
        for (layer, w) in net.weights.iter_mut().enumerate() {
            let (fan_in, fan_out) = (dims[layer], dims[layer + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.uniform_in(-limit, limit);
            }
        }
        Ok(net)
    }

    pub fn from_parts(
        dims: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        activation: Activation,
    ) -> Result<Self> {
        validate_dims(&dims)?;
        let layers = dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::shape(format!(
                "expected {layers} layers, got {} weights and {} biases",
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..layers {
            check_len(&format!("layer {l} weights"), weights[l].len(), dims[l + 1] * dims[l])?;
            check_len(&format!("layer {l} biases"), biases[l].len(), dims[l + 1])?;
        }
        let net = Self {
            dims,
            weights,
            biases,
            activation,
        };
        if let Some(layer) = net.first_non_finite_layer() {
            return Err(Error::Numeric(format!("non-finite parameter in layer {layer}")));
        }
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }
    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }
    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }
    pub fn activation(&self) -> Activation {
        self.activation
    }
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }
    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }
    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }
    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Mutable views of every parameter tensor, ordered `w0, b0, w1, b1, ...`.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    fn first_non_finite_layer(&self) -> Option<usize> {
        (0..self.layer_count()).find(|&l| {
            self.weights[l].iter().chain(&self.biases[l]).any(|v| !v.is_finite())
        })
    }

    /// Rounds every parameter to `f32` precision so the in-memory network
    /// matches what the weights file stores.
    pub fn round_to_f32(&mut self) {
        for t in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            crate::numkit::round_f32(t);
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut ws = Workspace::new(self);
        self.forward_ws(x, &mut ws)?;
        Ok(ws.output().to_vec())
    }

    /// Forward pass that keeps every layer's activation in `ws` for a
    /// subsequent [`DenseNet::backward_ws`].
    pub fn forward_ws(&self, x: &[f64], ws: &mut Workspace) -> Result<()> {
        check_len("network input", x.len(), self.input_dim())?;
        ws.acts[0].copy_from_slice(x);
        let last = self.layer_count() - 1;
        for l in 0..self.layer_count() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let (head, tail) = ws.acts.split_at_mut(l + 1);
            let input = &head[l];
            let out = &mut tail[0];
            let w = &self.weights[l];
            for (r, o) in out.iter_mut().enumerate() {
                let row = &w[r * n_in..(r + 1) * n_in];
                let mut acc = self.biases[l][r];
                for (a, b) in row.iter().zip(input.iter()) {
                    acc += a * b;
                }
                *o = if l == last { acc } else { self.activation.apply(acc) };
            }
            debug_assert_eq!(out.len(), n_out);
        }
        Ok(())
    }

    /// Accumulates the gradient of `<grad_out, net(x)>` into `grads`, where
    /// `x` is the input of the forward pass stored in `ws`. When `input_grad`
    /// is given it receives the gradient with respect to `x`.
    pub fn backward_ws(
        &self,
        ws: &mut Workspace,
        grad_out: &[f64],
        grads: &mut NetGrads,
        input_grad: Option<&mut [f64]>,
    ) -> Result<()> {
        check_len("gradient of output", grad_out.len(), self.output_dim())?;
        let Workspace {
            acts,
            delta,
            delta_prev,
        } = ws;
        delta.clear();
        delta.extend_from_slice(grad_out);
        let mut input_grad = input_grad;
        for l in (0..self.layer_count()).rev() {
            let n_in = self.dims[l];
            let input = &acts[l];
            let gw = &mut grads.weights[l];
            for (r, &d) in delta.iter().enumerate() {
                grads.biases[l][r] += d;
                if d != 0.0 {
                    let row = &mut gw[r * n_in..(r + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(input.iter()) {
                        *g += d * a;
                    }
                }
            }
            if l == 0 && input_grad.is_none() {
                break;
            }
            delta_prev.clear();
            delta_prev.resize(n_in, 0.0);
            let w = &self.weights[l];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &w[r * n_in..(r + 1) * n_in];
                for (p, wv) in delta_prev.iter_mut().zip(row.iter()) {
                    *p += d * wv;
                }
            }
            if l == 0 {
                if let Some(g) = input_grad.take() {
                    check_len("input gradient buffer", g.len(), n_in)?;
                    g.copy_from_slice(delta_prev);
                }
            } else {
                for (p, &a) in delta_prev.iter_mut().zip(input.iter()) {
                    *p *= self.activation.derivative_from_output(a);
                }
            }
            std::mem::swap(delta, delta_prev);
        }
        Ok(())
    }

    /// Exact gradients of `<grad_out, net(x)>` with respect to every
    /// parameter and to `x`.
    pub fn backward(&self, x: &[f64], grad_out: &[f64]) -> Result<(NetGrads, Vec<f64>)> {
        let mut ws = Workspace::new(self);
        self.forward_ws(x, &mut ws)?;
        let mut grads = NetGrads::zeros_like(self);
        let mut gx = vec![0.0; self.input_dim()];
        self.backward_ws(&mut ws, grad_out, &mut grads, Some(&mut gx))?;
        Ok((grads, gx))
    }

    pub(crate) fn encode_into(&self, w: &mut ByteWriter) {
        w.bytes(NET_MAGIC);
        w.u16(NET_VERSION);
        w.u16(self.activation.code());
        w.u32(self.dims.len() as u32);
        for &d in &self.dims {
            w.u32(d as u32);
        }
        for l in 0..self.layer_count() {
            w.f32_slice(&self.weights[l]);
            w.f32_slice(&self.biases[l]);
        }
    }

    pub(crate) fn decode_from(r: &mut ByteReader<'_>) -> Result<Self> {
        r.magic(NET_MAGIC)?;
        r.version(NET_VERSION)?;
        let at = r.offset();
        let code = r.u16()?;
        let activation = Activation::from_code(code)
            .ok_or_else(|| Error::format(at, format!("unknown activation code {code}")))?;
        let at = r.offset();
        let n_dims = r.u32()? as usize;
        if n_dims < 2 {
            return Err(Error::format(at, format!("need at least 2 dims, got {n_dims}")));
        }
        let mut dims = Vec::with_capacity(n_dims);
        for _ in 0..n_dims {
            let at = r.offset();
            let d = r.u32()? as usize;
            if d == 0 {
                return Err(Error::format(at, "zero layer width"));
            }
            dims.push(d);
        }
        let mut weights = Vec::with_capacity(n_dims - 1);
        let mut biases = Vec::with_capacity(n_dims - 1);
        for l in 0..n_dims - 1 {
            weights.push(r.f32_vec(dims[l] * dims[l + 1])?);
            biases.push(r.f32_vec(dims[l + 1])?);
        }
        Self::from_parts(dims, weights, biases, activation)
    }

    /// Serializes to the `ICAM` weights format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        self.encode_into(&mut w);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let net = Self::decode_from(&mut r)?;
        r.finish()?;
        Ok(net)
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::shape("a network needs at least input and output dims"));
    }
    if dims.contains(&0) {
        return Err(Error::shape(format!("layer dims must be positive: {dims:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_layer(w: Vec<f64>, b: Vec<f64>, n_in: usize) -> DenseNet {
        let n_out = b.len();
        DenseNet::from_parts(vec![n_in, n_out], vec![w], vec![b], Activation::Tanh).unwrap()
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = DenseNet::zeros(&[3, 5, 2], Activation::Tanh).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer() {
        let net = single_layer(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 2);
        assert_eq!(net.forward(&[1.5, -2.0]).unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn input_length_is_checked() {
        let net = DenseNet::zeros(&[3, 2], Activation::Tanh).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape(_))));
        assert!(matches!(net.backward(&[1.0, 2.0, 3.0], &[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_grad_out_gives_zero_gradients() {
        let mut rng = Rng::new(5);
        let net = DenseNet::random(&[3, 4, 2], Activation::Tanh, &mut rng).unwrap();
        let (g, gx) = net.backward(&[0.1, 0.2, 0.3], &[0.0, 0.0]).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(gx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_layer_gradients() {
        let net = single_layer(vec![0.5, -1.0, 2.0, 0.25, 0.0, 1.0], vec![0.1, -0.2], 3);
        let x = [1.0, 2.0, -3.0];
        let g_out = [0.7, -1.3];
        let (g, gx) = net.backward(&x, &g_out).unwrap();
        assert_eq!(g.biases[0], g_out.to_vec());
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(g.weights[0][r * 3 + c], g_out[r] * x[c]);
            }
        }
        // W^T g_out
        let want = [0.5 * 0.7 + 0.25 * -1.3, -1.0 * 0.7, 2.0 * 0.7 + 1.0 * -1.3];
        for (a, b) in gx.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn random_init_respects_glorot_limit() {
        let mut rng = Rng::new(11);
        let net = DenseNet::random(&[10, 20, 5], Activation::Tanh, &mut rng).unwrap();
        let l0 = (6.0f64 / 30.0).sqrt();
        let l1 = (6.0f64 / 25.0).sqrt();
        assert!(net.weights()[0].iter().all(|v| v.abs() <= l0));
        assert!(net.weights()[1].iter().all(|v| v.abs() <= l1));
    }

    #[test]
    fn init_is_deterministic() {
        let a = DenseNet::random(&[4, 8, 3], Activation::Relu, &mut Rng::new(3)).unwrap();
        let b = DenseNet::random(&[4, 8, 3], Activation::Relu, &mut Rng::new(3)).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn weights_file_round_trip() {
        let mut net = DenseNet::random(&[4, 8, 3], Activation::Relu, &mut Rng::new(3)).unwrap();
        net.round_to_f32();
        let bytes = net.to_bytes();
        assert_eq!(&bytes[..4], b"ICAM");
        let back = DenseNet::from_bytes(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn weights_file_rejects_bad_magic_and_truncation() {
        let net = DenseNet::zeros(&[2, 2], Activation::Tanh).unwrap();
        let mut bytes = net.to_bytes();
        let truncated = &bytes[..bytes.len() - 1];
        assert!(matches!(DenseNet::from_bytes(truncated), Err(Error::Format { .. })));
        bytes[0] = b'X';
        assert!(matches!(DenseNet::from_bytes(&bytes), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn from_parts_rejects_non_finite() {
        let r = DenseNet::from_parts(
            vec![1, 1],
            vec![vec![f64::NAN]],
            vec![vec![0.0]],
            Activation::Tanh,
        );
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}
