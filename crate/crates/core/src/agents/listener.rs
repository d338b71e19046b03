use crate::error::{Error, Result};
use crate::numerics::{argmax, log_sum_exp, sample_categorical, Matrix, RngStream};

use super::ActionMode;

/// Reference resolver. Embeds both objects with its own D x V map and scores
/// each against the one-hot symbol, so the score of an object is the
/// symbol's column of the map dotted with the object's features.
#[derive(Clone, Debug, PartialEq)]
pub struct ListenerParams {
    pub attribute_map: Matrix,
    pub temperature: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ListenerTrace {
    pub probs: [f64; 2],
    pub choice: usize,
    pub log_prob: f64,
    pub attribute: usize,
    scores: [f64; 2],
}

impl ListenerTrace {
    pub fn scores(&self) -> [f64; 2] {
        self.scores
    }

    pub fn select(&mut self, choice: usize) {
        assert!(choice < 2);
        self.choice = choice;
        let lse = log_sum_exp(&self.scores).expect("scores are finite");
        self.log_prob = self.scores[choice] - lse;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ListenerGrads {
    pub attribute_map: Matrix,
}

impl ListenerGrads {
    pub fn zeros_like(p: &ListenerParams) -> Self {
        ListenerGrads {
            attribute_map: Matrix::zeros(p.attribute_map.rows(), p.attribute_map.cols()),
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.attribute_map.scale(alpha);
    }

    pub fn is_finite(&self) -> bool {
        self.attribute_map.is_finite()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.attribute_map.data().to_vec()
    }
}

impl ListenerParams {
    pub fn dim(&self) -> usize {
        self.attribute_map.rows()
    }

    pub fn vocab(&self) -> usize {
        self.attribute_map.cols()
    }

    pub fn evaluate(&self, first: &[f64], second: &[f64], attribute: usize) -> Result<ListenerTrace> {
        if attribute >= self.vocab() {
            return Err(Error::invalid(format!("attribute {attribute} out of range for vocabulary of {}", self.vocab())));
        }
        for f in [first, second] {
            if f.len() != self.dim() {
                return Err(Error::Shape {
                    op: "listener embedding",
                    left: (1, f.len()),
                    right: self.attribute_map.shape(),
                });
            }
        }
        let score = |x: &[f64]| -> f64 { x.iter().enumerate().map(|(k, xk)| xk * self.attribute_map.get(k, attribute)).sum::<f64>() / self.temperature };
        let scores = [score(first), score(second)];
        let lse = log_sum_exp(&scores)?;
        let probs = [(scores[0] - lse).exp(), (scores[1] - lse).exp()];
        Ok(ListenerTrace {
            probs,
            choice: 0,
            log_prob: scores[0] - lse,
            attribute,
            scores,
        })
    }

    pub fn forward(&self, first: &[f64], second: &[f64], attribute: usize, mode: ActionMode, rng: &mut RngStream) -> Result<ListenerTrace> {
        let mut trace = self.evaluate(first, second, attribute)?;
        let choice = match mode {
            ActionMode::Sampled => sample_categorical(&trace.probs, rng)?,
            ActionMode::Greedy => argmax(&trace.probs).expect("two candidates"),
        };
        trace.select(choice);
        Ok(trace)
    }

    /// Gradient of `advantage * log p(trace.choice)`, added into `grads`.
    /// Only the column of the emitted symbol is touched.
    pub fn accumulate_grad(&self, trace: &ListenerTrace, first: &[f64], second: &[f64], advantage: f64, grads: &mut ListenerGrads) {
        assert!(trace.attribute < self.vocab(), "trace does not match listener vocabulary");
        assert_eq!(first.len(), self.dim(), "trace inputs do not match listener dimension");
        if advantage == 0.0 {
            return;
        }
        let g = |k: usize| {
            let indicator = if k == trace.choice { 1.0 } else { 0.0 };
            advantage * (indicator - trace.probs[k]) / self.temperature
        };
        let (g0, g1) = (g(0), g(1));
        for (k, (x0, x1)) in first.iter().zip(second).enumerate() {
            grads.attribute_map.add_at(k, trace.attribute, g0 * x0 + g1 * x1);
        }
    }

    pub fn backward(&self, trace: &ListenerTrace, first: &[f64], second: &[f64], advantage: f64) -> ListenerGrads {
        let mut g = ListenerGrads::zeros_like(self);
        self.accumulate_grad(trace, first, second, advantage, &mut g);
        g
    }

    pub fn apply(&mut self, grads: &ListenerGrads, step: f64) -> Result<()> {
        self.attribute_map.add_scaled(&grads.attribute_map, step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{init_params, AgentDims, InitScheme};
    use crate::numerics::softmax;

    fn params(d: usize, v: usize, seed: u64) -> ListenerParams {
        let mut rng = RngStream::new(seed);
        init_params(AgentDims { dim: d, vocab: v, hidden: 3 }, InitScheme::Uniform { scale: 1.0 }, &mut rng).1
    }

    fn features(d: usize, rng: &mut RngStream) -> Vec<f64> {
        (0..d).map(|_| rng.uniform_range(-2.0, 2.0)).collect()
    }

    #[test]
    fn identical_objects_split_evenly() {
        let p = params(6, 4, 1);
        let mut rng = RngStream::new(1);
        let f = features(6, &mut rng);
        let t = p.evaluate(&f, &f, 2).unwrap();
        assert_eq!(t.probs, [0.5, 0.5]);
    }

    #[test]
    fn saturates_on_large_margin() {
        let mut p = params(2, 3, 1);
        p.attribute_map = Matrix::from_vec(2, 3, vec![0.0, 10.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let t = p.evaluate(&[1.0, 0.0], &[0.0, 1.0], 1).unwrap();
        assert!(t.probs[0] > 0.9999);
    }

    #[test]
    fn column_shortcut_matches_one_hot_product() {
        let mut rng = RngStream::new(3);
        for seed in 0..20 {
            let p = params(7, 5, seed);
            let (f1, f2) = (features(7, &mut rng), features(7, &mut rng));
            let a = rng.below(5);
            let mut one_hot = vec![0.0; 5];
            one_hot[a] = 1.0;
            let reference = Matrix::from_vec(5, 1, one_hot).unwrap();
            let sim = |f: &[f64]| {
                let row = Matrix::from_vec(1, 7, f.to_vec()).unwrap();
                row.matmul(&p.attribute_map).unwrap().matmul(&reference).unwrap().get(0, 0)
            };
            let want = softmax(&[sim(&f1), sim(&f2)]).unwrap();
            let got = p.evaluate(&f1, &f2, a).unwrap();
            assert!((got.probs[0] - want[0]).abs() < 1e-12);
            assert!((got.probs[1] - want[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn swapping_objects_swaps_probabilities() {
        let p = params(6, 4, 2);
        let mut rng = RngStream::new(9);
        let (f1, f2) = (features(6, &mut rng), features(6, &mut rng));
        let a = p.evaluate(&f1, &f2, 3).unwrap();
        let b = p.evaluate(&f2, &f1, 3).unwrap();
        assert_eq!(a.probs[0], b.probs[1]);
        assert_eq!(a.probs[1], b.probs[0]);
    }

    #[test]
    fn out_of_range_attribute() {
        let p = params(6, 4, 2);
        assert!(p.evaluate(&[0.0; 6], &[0.0; 6], 4).is_err());
    }

    #[test]
    fn finite_differences_and_column_sparsity() {
        let step = 1e-5;
        let mut rng = RngStream::new(33);
        for seed in 0..20 {
            let mut p = params(6, 4, 50 + seed);
            let (f1, f2) = (features(6, &mut rng), features(6, &mut rng));
            let a = rng.below(4);
            let t = p.forward(&f1, &f2, a, ActionMode::Sampled, &mut rng).unwrap();
            let analytic = p.backward(&t, &f1, &f2, 1.0);
            for k in 0..6 {
                for col in 0..4 {
                    let orig = p.attribute_map.get(k, col);
                    p.attribute_map.set(k, col, orig + step);
                    let up = p.evaluate(&f1, &f2, a).unwrap().probs[t.choice].ln();
                    p.attribute_map.set(k, col, orig - step);
                    let down = p.evaluate(&f1, &f2, a).unwrap().probs[t.choice].ln();
                    p.attribute_map.set(k, col, orig);
                    let nu = (up - down) / (2.0 * step);
                    let an = analytic.attribute_map.get(k, col);
                    if col != a {
                        assert_eq!(an, 0.0);
                        assert!(nu.abs() < 1e-9);
                    } else {
                        let err = (an - nu).abs() / an.abs().max(nu.abs()).max(1e-6);
                        assert!(err < 1e-4, "{an} vs {nu}");
                    }
                }
            }
            assert!(p.backward(&t, &f1, &f2, 0.0).flatten().iter().all(|x| *x == 0.0));
        }
    }
}
