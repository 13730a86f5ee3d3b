//! Asymmetric loss checked against direct evaluation of its formula and
//! against central finite differences.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viewagg::asl::binary_cross_entropy;
use viewagg::{asl_forward, asl_gradient, AslParams, AsymmetricLoss};

fn reference_element(p: f64, y: bool, prm: &AslParams) -> f64 {
    if y {
        (1.0 - p).powf(prm.gamma_pos) * -(p.max(prm.clip_eps)).ln()
    } else {
        let pm = (p - prm.margin).max(0.0);
        if pm == 0.0 {
            return 0.0;
        }
        pm.powf(prm.gamma_neg) * -((1.0 - pm).max(prm.clip_eps)).ln()
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> AslParams {
    AslParams {
        gamma_pos: rng.random_range(0.0..5.0),
        gamma_neg: rng.random_range(0.0..5.0),
        margin: rng.random_range(0.0..0.3),
        clip_eps: 1e-8,
    }
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let prm = random_params(&mut rng);
        let y = rng.random_bool(0.5);
        let mut p: f64 = rng.random_range(0.05..0.95);
        while !y && (p - prm.margin).abs() < 0.01 {
            p = rng.random_range(0.05..0.95);
        }
        let analytic = asl_gradient(&[p], &[y], &prm).unwrap()[0];
        let fd = (reference_element(p + h, y, &prm) - reference_element(p - h, y, &prm)) / (2.0 * h);
        let scale = analytic.abs().max(fd.abs());
        let rel = if scale == 0.0 {
            0.0
        } else {
            (analytic - fd).abs() / scale
        };
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-6, "max relative error {worst}");
}

#[test]
fn vector_gradient_is_per_element_over_len() {
    let prm = AslParams::default();
    let p = [0.2, 0.7, 0.4, 0.9];
    let y = [true, false, false, true];
    let g = asl_gradient(&p, &y, &prm).unwrap();
    for j in 0..p.len() {
        let single = asl_gradient(&p[j..=j], &y[j..=j], &prm).unwrap()[0];
        assert!((g[j] - single / p.len() as f64).abs() < 1e-15);
    }
    let total = asl_forward(&p, &y, &prm).unwrap();
    let mean: f64 = p
        .iter()
        .zip(&y)
        .map(|(&pj, &yj)| reference_element(pj, yj, &prm))
        .sum::<f64>()
        / 4.0;
    assert!((total - mean).abs() < 1e-15);
}

#[test]
fn battery_within_bound_for_random_params() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..10 {
        let prm = random_params(&mut rng);
        let report = viewagg::asl::gradient_battery(&prm, 100, seed).unwrap();
        assert!(report.max_rel_grad_error <= 1e-6, "{prm:?}: {report:?}");
    }
}

#[test]
fn reduces_to_bce() {
    let prm = AslParams {
        gamma_pos: 0.0,
        gamma_neg: 0.0,
        margin: 0.0,
        clip_eps: 1e-8,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let n = rng.random_range(1..20);
        let p: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let bce = -p
            .iter()
            .zip(&y)
            .map(|(&q, &t)| if t { q.ln() } else { (1.0 - q).ln() })
            .sum::<f64>()
            / n as f64;
        let v = asl_forward(&p, &y, &prm).unwrap();
        assert!((v - bce).abs() <= 1e-12);
        assert!((v - binary_cross_entropy(&p, &y, 1e-8)).abs() <= 1e-12);
    }
}

#[test]
fn margin_makes_negatives_free_where_focal_is_not() {
    let asl = AslParams {
        gamma_pos: 0.0,
        gamma_neg: 4.0,
        margin: 0.05,
        clip_eps: 1e-8,
    };
    let focal = AslParams { margin: 0.0, ..asl };
    for p in [0.001, 0.01, 0.03, 0.049] {
        assert_eq!(asl_forward(&[p], &[false], &asl).unwrap(), 0.0);
        assert!(asl_forward(&[p], &[false], &focal).unwrap() > 0.0);
    }
}

#[test]
fn loss_vanishes_at_labels() {
    let prm = AslParams::default();
    assert!(asl_forward(&[1.0 - 1e-12], &[true], &prm).unwrap() < 1e-11);
    assert_eq!(asl_forward(&[prm.margin], &[false], &prm).unwrap(), 0.0);
    assert_eq!(asl_forward(&[0.0], &[false], &prm).unwrap(), 0.0);
}

proptest! {
    #[test]
    fn loss_is_non_negative(
        rows in prop::collection::vec((0.0f64..=1.0, any::<bool>(), 0.0f64..3.0), 1..16),
        gamma_pos in 0.0f64..5.0,
        gamma_neg in 0.0f64..5.0,
        margin in 0.0f64..0.5,
    ) {
        let prm = AslParams { gamma_pos, gamma_neg, margin, clip_eps: 1e-8 };
        let p: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let y: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let w: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let loss = AsymmetricLoss::new(prm).unwrap().with_class_weights(w).unwrap();
        let v = loss.forward(&p, &y).unwrap();
        prop_assert!(v >= 0.0 && v.is_finite());
    }
}
