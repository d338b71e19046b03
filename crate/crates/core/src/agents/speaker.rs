use crate::error::{Error, Result};
use crate::numerics::{argmax, log_sum_exp, sample_categorical, sigmoid, sigmoid_grad_from_output, Matrix, RngStream};

use super::ActionMode;

/// Referring-expression generator.
///
/// Both objects are embedded into attribute space with one shared map. Each
/// attribute's (referent, context) activation pair then goes through the same
/// two-layer discriminator (linear, sigmoid, linear) to give one logit per
/// attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerParams {
    /// D x V visual-to-attribute map shared by both objects.
    pub attribute_map: Matrix,
    /// 2 x h mixer applied to each attribute's activation pair.
    pub pair_mixer: Matrix,
    /// h x 1 discriminativeness readout.
    pub readout: Matrix,
    pub temperature: f64,
}

/// Forward pass record, holding what the backward pass needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerTrace {
    pub probs: Vec<f64>,
    pub attribute: usize,
    pub log_prob: f64,
    logits: Vec<f64>,
    referent_attrs: Vec<f64>,
    context_attrs: Vec<f64>,
    /// V x h sigmoid activations, row-major.
    hidden: Vec<f64>,
}

impl SpeakerTrace {
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerGrads {
    pub attribute_map: Matrix,
    pub pair_mixer: Matrix,
    pub readout: Matrix,
}

impl SpeakerGrads {
    pub fn zeros_like(p: &SpeakerParams) -> Self {
        SpeakerGrads {
            attribute_map: Matrix::zeros(p.attribute_map.rows(), p.attribute_map.cols()),
            pair_mixer: Matrix::zeros(p.pair_mixer.rows(), p.pair_mixer.cols()),
            readout: Matrix::zeros(p.readout.rows(), p.readout.cols()),
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.attribute_map.scale(alpha);
        self.pair_mixer.scale(alpha);
        self.readout.scale(alpha);
    }

    pub fn is_finite(&self) -> bool {
        self.attribute_map.is_finite() && self.pair_mixer.is_finite() && self.readout.is_finite()
    }

    /// All components in parameter order: attribute map, mixer, readout.
    pub fn flatten(&self) -> Vec<f64> {
        [&self.attribute_map, &self.pair_mixer, &self.readout]
            .iter()
            .flat_map(|m| m.data().iter().copied())
            .collect()
    }
}

impl SpeakerParams {
    pub fn dim(&self) -> usize {
        self.attribute_map.rows()
    }

    pub fn vocab(&self) -> usize {
        self.attribute_map.cols()
    }

    pub fn hidden(&self) -> usize {
        self.pair_mixer.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let (v, h) = (self.vocab(), self.hidden());
        if self.pair_mixer.rows() != 2 {
            return Err(Error::Shape {
                op: "speaker pair mixer",
                left: self.pair_mixer.shape(),
                right: (2, h),
            });
        }
        if self.readout.shape() != (h, 1) {
            return Err(Error::Shape {
                op: "speaker readout",
                left: self.readout.shape(),
                right: (h, 1),
            });
        }
        if v == 0 || !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid("speaker needs V >= 1 and a positive temperature"));
        }
        Ok(())
    }

    /// Computes the attribute distribution without choosing an attribute.
    pub fn evaluate(&self, referent: &[f64], context: &[f64]) -> Result<SpeakerTrace> {
        let r = self.attribute_map.vecmat(referent)?;
        let c = self.attribute_map.vecmat(context)?;
        let h = self.hidden();
        let v = self.vocab();
        let mixer = self.pair_mixer.data();
        let readout = self.readout.data();
        let mut hidden = vec![0.0; v * h];
        let mut logits = vec![0.0; v];
        for a in 0..v {
            let row = &mut hidden[a * h..(a + 1) * h];
            let mut d = 0.0;
            for j in 0..h {
                let s = sigmoid(r[a] * mixer[j] + c[a] * mixer[h + j]);
                row[j] = s;
                d += s * readout[j];
            }
            logits[a] = d / self.temperature;
        }
        let lse = log_sum_exp(&logits)?;
        let probs = logits.iter().map(|z| (z - lse).exp()).collect();
        Ok(SpeakerTrace {
            probs,
            attribute: 0,
            log_prob: logits[0] - lse,
            logits,
            referent_attrs: r,
            context_attrs: c,
            hidden,
        })
    }

    pub fn forward(&self, referent: &[f64], context: &[f64], mode: ActionMode, rng: &mut RngStream) -> Result<SpeakerTrace> {
        let mut trace = self.evaluate(referent, context)?;
        let a = match mode {
            ActionMode::Sampled => sample_categorical(&trace.probs, rng)?,
            ActionMode::Greedy => argmax(&trace.probs).expect("vocab is non-empty"),
        };
        trace.select(a);
        Ok(trace)
    }

    /// Gradient of `advantage * log p(trace.attribute)`, added into `grads`.
    pub fn accumulate_grad(&self, trace: &SpeakerTrace, referent: &[f64], context: &[f64], advantage: f64, grads: &mut SpeakerGrads) {
        assert_eq!(trace.probs.len(), self.vocab(), "trace does not match speaker vocabulary");
        assert_eq!(referent.len(), self.dim(), "trace inputs do not match speaker dimension");
        if advantage == 0.0 {
            return;
        }
        let h = self.hidden();
        let mixer = self.pair_mixer.data();
        let readout = self.readout.data();
        let mut d_ref = vec![0.0; self.vocab()];
        let mut d_ctx = vec![0.0; self.vocab()];
        for (a, p) in trace.probs.iter().enumerate() {
            let indicator = if a == trace.attribute { 1.0 } else { 0.0 };
            let g_logit = advantage * (indicator - p) / self.temperature;
            if g_logit == 0.0 {
                continue;
            }
            let s_row = &trace.hidden[a * h..(a + 1) * h];
            let (ra, ca) = (trace.referent_attrs[a], trace.context_attrs[a]);
            for j in 0..h {
                let s = s_row[j];
                grads.readout.add_at(j, 0, g_logit * s);
                let e = g_logit * readout[j] * sigmoid_grad_from_output(s);
                grads.pair_mixer.add_at(0, j, ra * e);
                grads.pair_mixer.add_at(1, j, ca * e);
                d_ref[a] += e * mixer[j];
                d_ctx[a] += e * mixer[h + j];
            }
        }
        for (k, (&xr, &xc)) in referent.iter().zip(context).enumerate() {
            if xr == 0.0 && xc == 0.0 {
                continue;
            }
            for a in 0..self.vocab() {
                grads.attribute_map.add_at(k, a, xr * d_ref[a] + xc * d_ctx[a]);
            }
        }
    }

    pub fn backward(&self, trace: &SpeakerTrace, referent: &[f64], context: &[f64], advantage: f64) -> SpeakerGrads {
        let mut g = SpeakerGrads::zeros_like(self);
        self.accumulate_grad(trace, referent, context, advantage, &mut g);
        g
    }

    pub fn apply(&mut self, grads: &SpeakerGrads, step: f64) -> Result<()> {
        self.attribute_map.add_scaled(&grads.attribute_map, step)?;
        self.pair_mixer.add_scaled(&grads.pair_mixer, step)?;
        self.readout.add_scaled(&grads.readout, step)?;
        Ok(())
    }

    /// Mutable views of every parameter in gradient-flatten order.
    pub fn parameters_mut(&mut self) -> [&mut Matrix; 3] {
        [&mut self.attribute_map, &mut self.pair_mixer, &mut self.readout]
    }
}

impl SpeakerTrace {
    /// Fixes the emitted attribute (used when replaying or enumerating).
    pub fn select(&mut self, attribute: usize) {
        assert!(attribute < self.probs.len());
        self.attribute = attribute;
        let lse = log_sum_exp(&self.logits).expect("logits are finite");
        self.log_prob = self.logits[attribute] - lse;
    }
}
