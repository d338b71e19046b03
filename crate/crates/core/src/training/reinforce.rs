use super::config::{BaselineMode, TrainConfig};
use crate::agents::{ListenerGrads, ListenerParams, SpeakerGrads, SpeakerParams};
use crate::datasets::Scene;
use crate::error::{Error, Result};
use crate::game::PlayedEpisode;

/// One episode of a batch with the scene it was played on.
pub type BatchItem<'a> = (&'a Scene, PlayedEpisode);

/// Reward baseline shared by both agents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Baseline {
    mode: BaselineMode,
    decay: f64,
    value: f64,
}

impl Baseline {
    pub fn new(mode: BaselineMode, decay: f64, init: f64) -> Self {
        Baseline { mode, decay, value: init }
    }

    pub fn from_config(config: &TrainConfig) -> Self {
        Baseline::new(config.baseline, config.baseline_decay, config.baseline_init)
    }

    /// Value subtracted from rewards; 0 in `None` mode.
    pub fn value(&self) -> f64 {
        match self.mode {
            BaselineMode::None => 0.0,
            BaselineMode::RunningMean => self.value,
        }
    }

    pub fn update(&mut self, mean_reward: f64) {
        if self.mode == BaselineMode::RunningMean {
            self.value = self.decay * self.value + (1.0 - self.decay) * mean_reward;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub mean_reward: f64,
    /// Baseline used for this batch, before its update.
    pub baseline: f64,
}

/// Batch-averaged REINFORCE estimate of the gradient of expected reward:
/// `mean((R - b) * grad log p(action))` for each agent's own action.
pub fn policy_gradient(speaker: &SpeakerParams, listener: &ListenerParams, batch: &[BatchItem<'_>], baseline: f64) -> Result<(SpeakerGrads, ListenerGrads)> {
    if batch.is_empty() {
        return Err(Error::Empty("reinforce batch"));
    }
    let mut gs = SpeakerGrads::zeros_like(speaker);
    let mut gl = ListenerGrads::zeros_like(listener);
    for (scene, played) in batch {
        let advantage = played.episode.reward() - baseline;
        speaker.accumulate_grad(&played.speaker, &scene.referent.feature, &scene.context.feature, advantage, &mut gs);
        let (first, second) = played.listener_inputs(scene);
        listener.accumulate_grad(&played.listener, first, second, advantage, &mut gl);
    }
    let inv = 1.0 / batch.len() as f64;
    gs.scale(inv);
    gl.scale(inv);
    if !gs.is_finite() || !gl.is_finite() {
        let bad: Vec<u64> = batch
            .iter()
            .filter(|(_, p)| !p.speaker.log_prob.is_finite() || !p.listener.log_prob.is_finite())
            .map(|(s, _)| s.id)
            .collect();
        return Err(Error::NonFinite(format!(
            "policy gradient (baseline {baseline}, {} episodes, scenes with non-finite log-probs: {bad:?})",
            batch.len()
        )));
    }
    Ok((gs, gl))
}

/// Gradient-ascent step on both agents, then the baseline update.
pub fn reinforce_step(
    speaker: &mut SpeakerParams,
    listener: &mut ListenerParams,
    batch: &[BatchItem<'_>],
    learning_rate: f64,
    baseline: &mut Baseline,
) -> Result<StepStats> {
    let b = baseline.value();
    let (gs, gl) = policy_gradient(speaker, listener, batch, b)?;
    speaker.apply(&gs, learning_rate)?;
    listener.apply(&gl, learning_rate)?;
    let mean_reward = batch.iter().map(|(_, p)| p.episode.reward()).sum::<f64>() / batch.len() as f64;
    baseline.update(mean_reward);
    Ok(StepStats { mean_reward, baseline: b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{init_params, ActionMode, AgentDims, InitScheme};
    use crate::datasets::{generate_shapes, AttributeSchema, SceneSet, ShapesConfig};
    use crate::game::play_episode;
    use crate::numerics::RngStream;

    fn setup() -> (SceneSet, SpeakerParams, ListenerParams) {
        let set = generate_shapes(
            &AttributeSchema::shapes(),
            &ShapesConfig {
                n_scenes: 40,
                dim: 18,
                seed: 1,
                ..ShapesConfig::default()
            },
        )
        .unwrap();
        let (s, l) = init_params(
            AgentDims { dim: 18, vocab: 5, hidden: 4 },
            InitScheme::Uniform { scale: 0.5 },
            &mut RngStream::new(2),
        );
        (set, s, l)
    }

    fn batch<'a>(set: &'a SceneSet, s: &SpeakerParams, l: &ListenerParams, n: usize, seed: u64) -> Vec<BatchItem<'a>> {
        let mut rng = RngStream::new(seed);
        set.scenes()[..n]
            .iter()
            .map(|sc| (sc, play_episode(sc, s, l, ActionMode::Sampled, &mut rng).unwrap()))
            .collect()
    }

    #[test]
    fn zero_advantage_leaves_params_unchanged() {
        let (set, mut s, mut l) = setup();
        let b = batch(&set, &s, &l, 16, 3);
        // Every reward equals the baseline value of 1.
        let uniform: Vec<BatchItem<'_>> = b
            .into_iter()
            .map(|(sc, mut p)| {
                p.episode.success = true;
                (sc, p)
            })
            .collect();
        let (s0, l0) = (s.clone(), l.clone());
        let mut base = Baseline::new(BaselineMode::RunningMean, 0.99, 1.0);
        reinforce_step(&mut s, &mut l, &uniform, 0.3, &mut base).unwrap();
        assert_eq!(s, s0);
        assert_eq!(l, l0);
    }

    #[test]
    fn all_zero_rewards_without_baseline_are_bit_identical() {
        let (set, mut s, mut l) = setup();
        let failed: Vec<BatchItem<'_>> = batch(&set, &s, &l, 16, 4)
            .into_iter()
            .map(|(sc, mut p)| {
                p.episode.success = false;
                (sc, p)
            })
            .collect();
        let (s0, l0) = (s.clone(), l.clone());
        let mut base = Baseline::new(BaselineMode::None, 0.99, 0.5);
        reinforce_step(&mut s, &mut l, &failed, 0.3, &mut base).unwrap();
        assert_eq!(s, s0);
        assert_eq!(l, l0);
    }

    #[test]
    fn single_episode_update_is_lr_times_score() {
        let (set, mut s, mut l) = setup();
        let one = batch(&set, &s, &l, 1, 5);
        let (scene, played) = &one[0];
        let r = played.episode.reward();
        let want_s = s.backward(&played.speaker, &scene.referent.feature, &scene.context.feature, r);
        let (f, g) = played.listener_inputs(scene);
        let want_l = l.backward(&played.listener, f, g, r);
        let (s0, l0) = (s.clone(), l.clone());
        let mut base = Baseline::new(BaselineMode::None, 0.99, 0.5);
        reinforce_step(&mut s, &mut l, &one, 0.05, &mut base).unwrap();
        let mut exp_s = s0.clone();
        exp_s.apply(&want_s, 0.05).unwrap();
        let mut exp_l = l0.clone();
        exp_l.apply(&want_l, 0.05).unwrap();
        assert_eq!(s, exp_s);
        assert_eq!(l, exp_l);
    }

    #[test]
    fn running_mean_baseline_updates() {
        let mut b = Baseline::new(BaselineMode::RunningMean, 0.9, 0.5);
        b.update(1.0);
        assert!((b.value() - 0.55).abs() < 1e-15);
        let mut n = Baseline::new(BaselineMode::None, 0.9, 0.5);
        n.update(1.0);
        assert_eq!(n.value(), 0.0);
    }

    #[test]
    fn empty_batch_is_error() {
        let (_, s, l) = setup();
        assert!(policy_gradient(&s, &l, &[], 0.0).is_err());
    }
}
