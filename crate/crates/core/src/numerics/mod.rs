//! Dense linear algebra and sampling primitives used by the two agent networks.
//!
//! Everything is `f64`. Gradients are derived by hand in the agent modules;
//! this module only provides the forward primitives and their elementwise
//! derivatives.

mod matrix;
mod rng;

pub use matrix::Matrix;
pub use rng::{RngStream, RNG_ALGORITHM};

use crate::error::{Error, Result};

/// Tolerance accepted by [`sample_categorical`] on the total probability mass.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of [`sigmoid`] expressed through its output `s = sigmoid(x)`.
pub fn sigmoid_grad_from_output(s: f64) -> f64 {
    s * (1.0 - s)
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Empty("softmax"));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("softmax logits".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    Ok(out)
}

/// `log(sum(exp(logits)))`, max-subtracted.
pub fn log_sum_exp(logits: &[f64]) -> Result<f64> {
    if logits.is_empty() {
        return Err(Error::Empty("log_sum_exp"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite("log_sum_exp logits".into()));
    }
    let sum: f64 = logits.iter().map(|&x| (x - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Draws an index from `p` using exactly one uniform draw from `rng`.
pub fn sample_categorical(p: &[f64], rng: &mut RngStream) -> Result<usize> {
    if p.is_empty() {
        return Err(Error::Empty("sample_categorical"));
    }
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid("probabilities must be finite and non-negative"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized {
            sum,
            tolerance: NORMALIZATION_TOLERANCE,
        });
    }
    let u = rng.uniform() * sum;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            acc += pi;
            last_positive = i;
            if u < acc {
                return Ok(i);
            }
        }
    }
    // Rounding can leave `u` just above the accumulated mass.
    Ok(last_positive)
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Result of [`cosine`]. `zero_norm` flags that one of the inputs had no
/// mass, in which case `value` is defined as 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cosine {
    pub value: f64,
    pub zero_norm: bool,
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<Cosine> {
    if u.len() != v.len() {
        return Err(Error::Shape {
            op: "cosine",
            left: (1, u.len()),
            right: (1, v.len()),
        });
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(Cosine { value: 0.0, zero_norm: true });
    }
    let value = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(Cosine { value, zero_norm: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        for x in [-3.0, -0.7, 0.1, 2.5, 40.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((sigmoid(2.0) - expected).abs() < 1e-15);
        assert!((sigmoid(2.0) - 0.880_797).abs() < 1e-6);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        for c in [-50.0, 0.0, 3.3, 700.0] {
            let p = softmax(&[c; 4]).unwrap();
            for pi in p {
                assert!((pi - 0.25).abs() < 1e-15);
            }
        }
        let p = softmax(&[1.0, 2.0, 3.0]).unwrap();
        for (got, want) in p.iter().zip([0.09003, 0.24473, 0.66524]) {
            assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        }
        assert!(matches!(softmax(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn sample_degenerate_and_validation() {
        let mut rng = RngStream::new(3);
        for _ in 0..1000 {
            assert_eq!(sample_categorical(&[1.0, 0.0], &mut rng).unwrap(), 0);
        }
        assert!(matches!(sample_categorical(&[0.5, 0.6], &mut rng), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn sample_fair_coin_frequency() {
        let mut rng = RngStream::new(17);
        let n = 100_000;
        let zeros = (0..n).filter(|_| sample_categorical(&[0.5, 0.5], &mut rng).unwrap() == 0).count();
        let freq = zeros as f64 / n as f64;
        assert!((0.494..=0.506).contains(&freq), "{freq}");
    }

    #[test]
    fn sample_consumes_one_draw() {
        let mut a = RngStream::new(5);
        let mut b = RngStream::new(5);
        sample_categorical(&[0.2, 0.3, 0.5], &mut a).unwrap();
        b.uniform();
        assert_eq!(a.uniform(), b.uniform());
    }

    #[test]
    fn sample_chi_square() {
        // 17 degrees of freedom, alpha = 0.01 -> critical value 33.409.
        let p: Vec<f64> = {
            let raw: Vec<f64> = (1..=18).map(|i| i as f64).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        };
        let mut rng = RngStream::new(2024);
        let n = 100_000;
        let mut counts = [0usize; 18];
        for _ in 0..n {
            counts[sample_categorical(&p, &mut rng).unwrap()] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&p)
            .map(|(&c, &pi)| {
                let e = pi * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < 33.409, "chi2 = {chi2}");
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine(&v, &v).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap().value, 0.0);
        let c = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        let z = cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(z, Cosine { value: 0.0, zero_norm: true });
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sigmoid_derivative_matches_central_difference() {
        let h = 1e-5;
        for x in [-2.0, -0.3, 0.0, 0.9, 2.0] {
            let fd = (sigmoid(x + h) - sigmoid(x - h)) / (2.0 * h);
            let an = sigmoid_grad_from_output(sigmoid(x));
            assert!((fd - an).abs() / an.abs() < 1e-4);
        }
    }

    #[test]
    fn softmax_jacobian_matches_central_difference() {
        // d p_i / d z_j = p_i (delta_ij - p_j)
        let mut rng = RngStream::new(8);
        let h = 1e-5;
        for _ in 0..20 {
            let z: Vec<f64> = (0..5).map(|_| rng.uniform() * 4.0 - 2.0).collect();
            let p = softmax(&z).unwrap();
            for j in 0..5 {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[j] += h;
                zm[j] -= h;
                let pp = softmax(&zp).unwrap();
                let pm = softmax(&zm).unwrap();
                for i in 0..5 {
                    let fd = (pp[i] - pm[i]) / (2.0 * h);
                    let an = p[i] * (f64::from(u8::from(i == j)) - p[j]);
                    assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-3));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_shift_invariant(
            logits in prop::collection::vec(-1e3f64..1e3, 1..20),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&logits).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
            let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn log_sum_exp_agrees_with_softmax(logits in prop::collection::vec(-30f64..30.0, 1..10)) {
            let lse = log_sum_exp(&logits).unwrap();
            let p = softmax(&logits).unwrap();
            for (z, pi) in logits.iter().zip(&p) {
                prop_assert!(((z - lse).exp() - pi).abs() < 1e-12);
            }
        }
    }
}
