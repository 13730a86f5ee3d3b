//! Asymmetric loss over predicted probabilities.
//!
//! Per element, with `p` the predicted probability and `y` the label:
//!
//! ```text
//! y = 1:  L = (1 - p)^gamma_pos * -ln(max(p, eps))
//! y = 0:  p_m = max(p - margin, 0)
//!         L = p_m^gamma_neg * -ln(max(1 - p_m, eps))
//! ```
//!
//! The reported loss is the (optionally class-weighted) arithmetic mean over
//! elements. Gradients are exact and piecewise; at a clamp boundary the
//! left-hand branch is used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AslParams {
    pub gamma_pos: f64,
    pub gamma_neg: f64,
    pub margin: f64,
    pub clip_eps: f64,
}

impl Default for AslParams {
    fn default() -> Self {
        AslParams {
            gamma_pos: 0.0,
            gamma_neg: 4.0,
            margin: 0.05,
            clip_eps: 1e-8,
        }
    }
}

impl AslParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_pos.is_finite() && self.gamma_pos >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "gamma_pos must be >= 0, got {}",
                self.gamma_pos
            )));
        }
        if !(self.gamma_neg.is_finite() && self.gamma_neg >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "gamma_neg must be >= 0, got {}",
                self.gamma_neg
            )));
        }
        if !(0.0..1.0).contains(&self.margin) {
            return Err(Error::InvalidParams(format!(
                "margin must be in [0, 1), got {}",
                self.margin
            )));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps <= 1e-2) {
            return Err(Error::InvalidParams(format!(
                "clip_eps must be in (0, 0.01], got {}",
                self.clip_eps
            )));
        }
        Ok(())
    }

    /// True when the loss collapses to plain binary cross-entropy.
    pub fn is_bce(&self) -> bool {
        self.gamma_pos == 0.0 && self.gamma_neg == 0.0 && self.margin == 0.0
    }
}

/// `x^g` with `0^0 = 1` and `g * x^(g-1)` reported as 0 when `g = 0`.
fn pow_and_slope(x: f64, g: f64) -> (f64, f64) {
    if g == 0.0 {
        (1.0, 0.0)
    } else {
        (x.powf(g), g * x.powf(g - 1.0))
    }
}

/// Unweighted loss of one element and its derivative in `p`.
fn element(p: f64, y: bool, params: &AslParams) -> (f64, f64) {
    let eps = params.clip_eps;
    if y {
        let (focus, dfocus) = pow_and_slope(1.0 - p, params.gamma_pos);
        let (nll, dnll) = if p <= eps {
            (-eps.ln(), 0.0)
        } else {
            (-p.ln(), -1.0 / p)
        };
        // d/dp (1-p)^g = -g (1-p)^(g-1)
        (focus * nll, -dfocus * nll + focus * dnll)
    } else {
        let shifted = p - params.margin;
        if shifted <= 0.0 {
            return (0.0, 0.0);
        }
        let (focus, dfocus) = pow_and_slope(shifted, params.gamma_neg);
        let q = 1.0 - shifted;
        let (nll, dnll) = if q <= eps {
            (-eps.ln(), 0.0)
        } else {
            (-q.ln(), 1.0 / q)
        };
        (focus * nll, dfocus * nll + focus * dnll)
    }
}

/// Asymmetric loss with an optional per-element weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetricLoss {
    params: AslParams,
    class_weights: Option<Vec<f64>>,
}

impl AsymmetricLoss {
    pub fn new(params: AslParams) -> Result<Self> {
        params.validate()?;
        Ok(AsymmetricLoss {
            params,
            class_weights: None,
        })
    }

    /// Multiplies element `j`'s loss by `weights[j]` before averaging.
    pub fn with_class_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParams(format!(
                "class weights must be finite and >= 0, got {w}"
            )));
        }
        self.class_weights = Some(weights);
        Ok(self)
    }

    pub fn params(&self) -> &AslParams {
        &self.params
    }

    fn check(&self, p: &[f64], y: &[bool]) -> Result<()> {
        if p.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: y.len(),
            });
        }
        if let Some(w) = &self.class_weights {
            if w.len() != p.len() {
                return Err(Error::LengthMismatch {
                    left: w.len(),
                    right: p.len(),
                });
            }
        }
        Ok(())
    }

    fn weight(&self, j: usize) -> f64 {
        self.class_weights.as_ref().map_or(1.0, |w| w[j])
    }

    /// Mean loss in nats. An empty input has loss 0.
    pub fn forward(&self, p: &[f64], y: &[bool]) -> Result<f64> {
        self.check(p, y)?;
        if p.is_empty() {
            return Ok(0.0);
        }
        let total: f64 = p
            .iter()
            .zip(y)
            .enumerate()
            .map(|(j, (&pj, &yj))| self.weight(j) * element(pj, yj, &self.params).0)
            .sum();
        Ok(total / p.len() as f64)
    }

    /// Gradient of [`forward`](Self::forward) with respect to `p`.
    pub fn gradient(&self, p: &[f64], y: &[bool]) -> Result<Vec<f64>> {
        self.check(p, y)?;
        let n = p.len() as f64;
        Ok(p.iter()
            .zip(y)
            .enumerate()
            .map(|(j, (&pj, &yj))| self.weight(j) * element(pj, yj, &self.params).1 / n)
            .collect())
    }
}

pub fn asl_forward(p: &[f64], y: &[bool], params: &AslParams) -> Result<f64> {
    AsymmetricLoss::new(*params)?.forward(p, y)
}

pub fn asl_gradient(p: &[f64], y: &[bool], params: &AslParams) -> Result<Vec<f64>> {
    AsymmetricLoss::new(*params)?.gradient(p, y)
}

/// Mean binary cross-entropy with the same log clamp as the loss.
pub fn binary_cross_entropy(p: &[f64], y: &[bool], clip_eps: f64) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&pj, &yj)| {
            let q = if yj { pj } else { 1.0 - pj };
            -q.max(clip_eps).ln()
        })
        .sum();
    total / p.len() as f64
}

/// Result of [`gradient_battery`].
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryReport {
    pub draws: usize,
    pub elements: usize,
    pub mean_loss: f64,
    pub max_rel_grad_error: f64,
    /// Largest `|loss - bce|`; only computed when the parameters reduce the
    /// loss to binary cross-entropy.
    pub max_bce_deviation: Option<f64>,
}

/// Central-difference step used by [`gradient_battery`].
pub const FD_STEP: f64 = 1e-6;

/// Keeps sampled negatives this far from the margin kink.
const KINK_GAP: f64 = 0.01;

/// Relative error `|a - b| / max(|a|, |b|)`, 0 when both are 0.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares analytic gradients against central finite differences on `n`
/// seeded random draws. Each draw is a vector of 1 to 8 elements with
/// probabilities in (0.05, 0.95), labels from a fair coin and random
/// per-element weights; negatives are kept away from the margin kink.
///
/// The loss is separable, so the derivative in `p_j` is differenced on the
/// single-element loss and scaled by `w_j / len`; differencing the full mean
/// would bury small components under cancellation error.
pub fn gradient_battery(params: &AslParams, n: usize, seed: u64) -> Result<BatteryReport> {
    params.validate()?;
    let loss = AsymmetricLoss::new(*params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut report = BatteryReport {
        draws: n,
        elements: 0,
        mean_loss: 0.0,
        max_rel_grad_error: 0.0,
        max_bce_deviation: params.is_bce().then_some(0.0),
    };
    let mut loss_sum = 0.0;
    for _ in 0..n {
        let len = rng.random_range(1..=8usize);
        let mut p = Vec::with_capacity(len);
        let mut y = Vec::with_capacity(len);
        for _ in 0..len {
            let label = rng.random_bool(0.5);
            let mut value = rng.random_range(0.05..0.95);
            while !label && (value - params.margin).abs() < KINK_GAP {
                value = rng.random_range(0.05..0.95);
            }
            p.push(value);
            y.push(label);
        }
        let weights: Vec<f64> = (0..len).map(|_| rng.random_range(0.5..2.0)).collect();
        let weighted = loss.clone().with_class_weights(weights.clone())?;

        let value = weighted.forward(&p, &y)?;
        loss_sum += value;
        let grad = weighted.gradient(&p, &y)?;
        for j in 0..len {
            let f = |x: f64| loss.forward(&[x], &[y[j]]);
            let fd = (f(p[j] + FD_STEP)? - f(p[j] - FD_STEP)?) / (2.0 * FD_STEP);
            let expected = weights[j] * fd / len as f64;
            report.max_rel_grad_error = report.max_rel_grad_error.max(relative_error(grad[j], expected));
        }
        if let Some(dev) = report.max_bce_deviation.as_mut() {
            let unweighted = loss.forward(&p, &y)?;
            *dev = dev.max((unweighted - binary_cross_entropy(&p, &y, params.clip_eps)).abs());
        }
        report.elements += len;
    }
    report.mean_loss = if n == 0 { 0.0 } else { loss_sum / n as f64 };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma_pos: f64, gamma_neg: f64, margin: f64) -> AslParams {
        AslParams {
            gamma_pos,
            gamma_neg,
            margin,
            clip_eps: 1e-8,
        }
    }

    #[test]
    fn reduces_to_log_loss() {
        let v = asl_forward(&[0.5], &[true], &params(0.0, 0.0, 0.0)).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        let g = asl_gradient(&[0.5], &[true], &params(0.0, 0.0, 0.0)).unwrap();
        assert!((g[0] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn margin_clamp_zeroes_negatives() {
        for gamma_neg in [0.0, 1.0, 4.0] {
            let p = params(0.0, gamma_neg, 0.05);
            assert_eq!(asl_forward(&[0.03], &[false], &p).unwrap(), 0.0);
            assert_eq!(asl_gradient(&[0.03], &[false], &p).unwrap(), [0.0]);
        }
    }

    #[test]
    fn focused_positive() {
        let v = asl_forward(&[0.9], &[true], &params(2.0, 0.0, 0.0)).unwrap();
        // 0.1^2 * -ln(0.9)
        assert!((v - 0.001_053_605_156_578_263).abs() < 1e-15);
    }

    #[test]
    fn log_clamp() {
        let p = params(0.0, 0.0, 0.0);
        let v = asl_forward(&[0.0], &[true], &p).unwrap();
        assert!((v + 1e-8f64.ln()).abs() < 1e-12);
        assert_eq!(asl_gradient(&[0.0], &[true], &p).unwrap(), [0.0]);
        let v = asl_forward(&[1.0], &[false], &p).unwrap();
        assert!((v + 1e-8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn class_weights_scale_elements() {
        let p = [0.3, 0.6];
        let y = [true, false];
        let base = AsymmetricLoss::new(AslParams::default()).unwrap();
        let weighted = base.clone().with_class_weights(vec![2.0, 0.0]).unwrap();
        let single = base.forward(&[0.3], &[true]).unwrap();
        assert!((weighted.forward(&p, &y).unwrap() - single).abs() < 1e-15);
        assert!(base.clone().with_class_weights(vec![-1.0]).is_err());
        assert!(matches!(
            weighted.forward(&[0.1], &[true]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn length_mismatch_and_bad_params() {
        assert!(matches!(
            asl_forward(&[0.1, 0.2], &[true], &AslParams::default()),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(asl_forward(&[0.1], &[true], &params(-1.0, 0.0, 0.0)).is_err());
        assert!(asl_forward(&[0.1], &[true], &params(0.0, 0.0, 1.0)).is_err());
        let p = AslParams {
            clip_eps: 0.5,
            ..AslParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn battery_passes_for_defaults() {
        let report = gradient_battery(&AslParams::default(), 200, 3).unwrap();
        assert!(report.max_rel_grad_error <= 1e-6, "{report:?}");
        assert!(report.max_bce_deviation.is_none());
    }
}
