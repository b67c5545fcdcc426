//! Adam with bias correction.

use crate::error::{Error, Result};
use crate::numkit::{DenseNet, NetGrads};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Optimizer state over a list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step_count: u64,
}

impl AdamState {
    pub fn new(shapes: &[usize], config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
        }
    }

    /// State for a network, with tensors ordered `w0, b0, w1, b1, ...`.
    pub fn for_net(net: &DenseNet, config: AdamConfig) -> Self {
        let shapes: Vec<usize> = net
            .weights()
            .iter()
            .zip(net.biases())
            .flat_map(|(w, b)| [w.len(), b.len()])
            .collect();
        Self::new(&shapes, config)
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One Adam update over `params`. Every gradient is validated before any
    /// parameter changes; a non-finite entry aborts the whole step.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        self.check_shapes(params.iter().map(|p| p.len()), grads.iter().map(|g| g.len()))?;
        if let Some(t) = grads.iter().position(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Numeric(format!("non-finite gradient in tensor {t}")));
        }
        self.apply(params, grads);
        Ok(())
    }

    /// Adam step on a network; errors name the offending layer.
    pub fn step_net(&mut self, net: &mut DenseNet, grads: &NetGrads) -> Result<()> {
        for (l, (w, b)) in grads.weights.iter().zip(&grads.biases).enumerate() {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite gradient in layer {l} weights")));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite gradient in layer {l} biases")));
            }
        }
        let grad_refs: Vec<&[f64]> = grads
            .weights
            .iter()
            .zip(&grads.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect();
        let mut param_refs = net.param_slices_mut();
        self.check_shapes(
            param_refs.iter().map(|p| p.len()),
            grad_refs.iter().map(|g| g.len()),
        )?;
        self.apply(&mut param_refs, &grad_refs);
        Ok(())
    }

    fn check_shapes(
        &self,
        params: impl ExactSizeIterator<Item = usize>,
        grads: impl ExactSizeIterator<Item = usize>,
    ) -> Result<()> {
        let n = self.first_moment.len();
        if params.len() != n || grads.len() != n {
            return Err(Error::shape(format!(
                "optimizer tracks {n} tensors, got {} params and {} grads",
                params.len(),
                grads.len()
            )));
        }
        for (t, (p, g)) in params.zip(grads).enumerate() {
            let m = self.first_moment[t].len();
            if p != m || g != m {
                return Err(Error::shape(format!(
                    "tensor {t}: state has {m} entries, params {p}, grads {g}"
                )));
            }
        }
        Ok(())
    }

    fn apply(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        self.step_count += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step_count as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (idx, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first_moment[idx];
            let v = &mut self.second_moment[idx];
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
