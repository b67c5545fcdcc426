//! Finite-difference verification of [`DenseNet::backward`].

use crate::error::Result;
use crate::numkit::{DenseNet, NetGrads};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for the relative error, so entries whose true gradient
/// is zero are compared on an absolute scale instead of blowing up.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Where the worst mismatch was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSite {
    Weight { layer: usize, index: usize },
    Bias { layer: usize, index: usize },
    Input { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<ParamSite>,
    pub checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Relative error used throughout the checker.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// `loss = 0.5 * ||y - target||^2`, returning the loss and `dloss/dy`.
pub fn quadratic_probe(target: Vec<f64>) -> impl Fn(&[f64]) -> (f64, Vec<f64>) {
    move |y: &[f64]| {
        let diff: Vec<f64> = y.iter().zip(&target).map(|(a, b)| a - b).collect();
        let loss = 0.5 * diff.iter().map(|d| d * d).sum::<f64>();
        (loss, diff)
    }
}

/// Compares analytic gradients of `probe(net(x))` against central finite
/// differences on every parameter and every input coordinate.
pub fn grad_check<P>(net: &DenseNet, x: &[f64], probe: &P, tolerance: f64) -> Result<GradCheckReport>
where
    P: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let y = net.forward(x)?;
    let (_, g_out) = probe(&y);
    let (grads, gx) = net.backward(x, &g_out)?;
    grad_check_against(net, x, probe, &grads, &gx, tolerance)
}

/// Same as [`grad_check`] but with gradients supplied by the caller, so a
/// stale or tampered gradient can be audited against the current network.
pub fn grad_check_against<P>(
    net: &DenseNet,
    x: &[f64],
    probe: &P,
    grads: &NetGrads,
    input_grad: &[f64],
    tolerance: f64,
) -> Result<GradCheckReport>
where
    P: Fn(&[f64]) -> (f64, Vec<f64>),
{
    assert!(tolerance > 0.0, "tolerance must be positive");
    let loss_at = |n: &DenseNet, input: &[f64]| -> Result<f64> { Ok(probe(&n.forward(input)?).0) };

    let mut worst = (0.0f64, None);
    let mut checked = 0usize;
    let mut record = |err: f64, site: ParamSite| {
        checked += 1;
        if err > worst.0 || worst.1.is_none() {
            worst = (err.max(worst.0), Some(site));
        }
    };

    let mut probe_net = net.clone();
    for layer in 0..net.layer_count() {
        for index in 0..net.weights()[layer].len() {
            let orig = net.weights()[layer][index];
            probe_net.weights_mut()[layer][index] = orig + FD_STEP;
            let up = loss_at(&probe_net, x)?;
            probe_net.weights_mut()[layer][index] = orig - FD_STEP;
            let down = loss_at(&probe_net, x)?;
            probe_net.weights_mut()[layer][index] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            record(rel_error(grads.weights[layer][index], numeric), ParamSite::Weight { layer, index });
        }
        for index in 0..net.biases()[layer].len() {
            let orig = net.biases()[layer][index];
            probe_net.biases_mut()[layer][index] = orig + FD_STEP;
            let up = loss_at(&probe_net, x)?;
            probe_net.biases_mut()[layer][index] = orig - FD_STEP;
            let down = loss_at(&probe_net, x)?;
            probe_net.biases_mut()[layer][index] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            record(rel_error(grads.biases[layer][index], numeric), ParamSite::Bias { layer, index });
        }
    }
    let mut xp = x.to_vec();
    for index in 0..x.len() {
        xp[index] = x[index] + FD_STEP;
        let up = loss_at(net, &xp)?;
        xp[index] = x[index] - FD_STEP;
        let down = loss_at(net, &xp)?;
        xp[index] = x[index];
        let numeric = (up - down) / (2.0 * FD_STEP);
        record(rel_error(input_grad[index], numeric), ParamSite::Input { index });
    }

    let (max_rel_error, site) = worst;
    Ok(GradCheckReport {
        max_rel_error,
        worst: site,
        checked,
        tolerance,
        passed: max_rel_error < tolerance,
    })
}
