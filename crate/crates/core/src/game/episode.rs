use rayon::prelude::*;

use crate::agents::{ActionMode, ListenerParams, ListenerTrace, SpeakerParams, SpeakerTrace};
use crate::datasets::Scene;
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Record of one game round.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub scene_id: u64,
    /// Listener slot (0 or 1) that held the referent.
    pub referent_slot: usize,
    pub attribute: usize,
    /// Listener slot the listener pointed at.
    pub choice: usize,
    pub success: bool,
    pub speaker_log_prob: f64,
    pub listener_log_prob: f64,
}

impl Episode {
    pub fn reward(&self) -> f64 {
        if self.success {
            1.0
        } else {
            0.0
        }
    }
}

/// An episode together with the forward traces of both agents.
#[derive(Clone, Debug)]
pub struct PlayedEpisode {
    pub episode: Episode,
    pub speaker: SpeakerTrace,
    pub listener: ListenerTrace,
}

impl PlayedEpisode {
    /// Listener inputs in presentation order.
    pub fn listener_inputs<'s>(&self, scene: &'s Scene) -> (&'s [f64], &'s [f64]) {
        listener_order(scene, self.episode.referent_slot)
    }
}

fn listener_order(scene: &Scene, referent_slot: usize) -> (&[f64], &[f64]) {
    if referent_slot == 0 {
        (&scene.referent.feature, &scene.context.feature)
    } else {
        (&scene.context.feature, &scene.referent.feature)
    }
}

/// Plays one round. Draw order on `rng`: speaker action, presentation order,
/// listener action.
pub fn play_episode(scene: &Scene, speaker: &SpeakerParams, listener: &ListenerParams, mode: ActionMode, rng: &mut RngStream) -> Result<PlayedEpisode> {
    let s = speaker.forward(&scene.referent.feature, &scene.context.feature, mode, rng)?;
    let referent_slot = usize::from(rng.coin());
    let (first, second) = listener_order(scene, referent_slot);
    let l = listener.forward(first, second, s.attribute, mode, rng)?;
    let episode = Episode {
        scene_id: scene.id,
        referent_slot,
        attribute: s.attribute,
        choice: l.choice,
        success: l.choice == referent_slot,
        speaker_log_prob: s.log_prob,
        listener_log_prob: l.log_prob,
    };
    Ok(PlayedEpisode {
        episode,
        speaker: s,
        listener: l,
    })
}

/// `batch_size` rounds on scenes drawn uniformly with replacement.
pub fn play_batch(
    scenes: &[&Scene],
    speaker: &SpeakerParams,
    listener: &ListenerParams,
    rng: &mut RngStream,
    batch_size: usize,
) -> Result<Vec<(usize, PlayedEpisode)>> {
    if scenes.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    (0..batch_size)
        .map(|_| {
            let i = rng.below(scenes.len());
            play_episode(scenes[i], speaker, listener, ActionMode::Sampled, rng).map(|e| (i, e))
        })
        .collect()
}

/// Plays every scene once, in parallel. Scene `k` uses substream
/// `first_stream + k` of `rng`, so the result does not depend on scheduling.
pub fn play_scenes(
    scenes: &[&Scene],
    speaker: &SpeakerParams,
    listener: &ListenerParams,
    mode: ActionMode,
    rng: &RngStream,
    first_stream: u64,
) -> Result<Vec<Episode>> {
    scenes
        .par_iter()
        .enumerate()
        .map(|(k, scene)| {
            let mut r = rng.substream(first_stream + k as u64);
            play_episode(scene, speaker, listener, mode, &mut r).map(|p| p.episode)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{init_params, AgentDims, InitScheme};
    use crate::datasets::{generate_shapes, AttributeSchema, SceneSet, ShapesConfig};
    use crate::numerics::Matrix;

    fn scenes(n: usize, noise: f64) -> SceneSet {
        generate_shapes(
            &AttributeSchema::shapes(),
            &ShapesConfig {
                n_scenes: n,
                dim: 18,
                noise_sigma: noise,
                seed: 3,
                ..ShapesConfig::default()
            },
        )
        .unwrap()
    }

    fn agents(seed: u64) -> (SpeakerParams, ListenerParams) {
        init_params(
            AgentDims {
                dim: 18,
                vocab: 18,
                hidden: 20,
            },
            InitScheme::default(),
            &mut RngStream::new(seed),
        )
    }

    #[test]
    fn reward_follows_choice() {
        let set = scenes(50, 0.1);
        let (s, l) = agents(1);
        let mut rng = RngStream::new(2);
        for scene in set.scenes() {
            let p = play_episode(scene, &s, &l, ActionMode::Sampled, &mut rng).unwrap();
            assert_eq!(p.episode.success, p.episode.choice == p.episode.referent_slot);
            assert_eq!(p.listener.attribute, p.episode.attribute);
        }
    }

    #[test]
    fn untrained_agents_at_chance() {
        let set = scenes(1000, 0.1);
        let (s, l) = agents(4);
        let mut rng = RngStream::new(5);
        let n = 10_000;
        let wins = (0..n)
            .filter(|k| {
                play_episode(&set.scenes()[k % 1000], &s, &l, ActionMode::Sampled, &mut rng)
                    .unwrap()
                    .episode
                    .success
            })
            .count();
        let rate = wins as f64 / n as f64;
        assert!((rate - 0.5).abs() <= 0.015, "{rate}");
    }

    #[test]
    fn slot_biased_listener_is_neutralized() {
        // A zero listener map ties both scores, and greedy ties go to slot 0.
        let set = scenes(500, 0.1);
        let (s, mut l) = agents(6);
        l.attribute_map = Matrix::zeros(18, 18);
        let mut rng = RngStream::new(7);
        let n = 20_000;
        let mut slot0 = 0;
        let mut wins = 0;
        for k in 0..n {
            let p = play_episode(&set.scenes()[k % 500], &s, &l, ActionMode::Greedy, &mut rng).unwrap();
            assert_eq!(p.episode.choice, 0);
            slot0 += usize::from(p.episode.referent_slot == 0);
            wins += usize::from(p.episode.success);
        }
        let sigma = (0.25 / n as f64).sqrt();
        for x in [slot0, wins] {
            assert!((x as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn constructed_oracle_pair_always_wins() {
        // Noiseless one-hot features. Listener: identity map, so the score of
        // an object is its value on attribute a. Speaker: identity attribute
        // map and a discriminator computing roughly 20 * (r - c), which peaks
        // on attributes the referent has and the context lacks.
        let set = scenes(2000, 0.0);
        let (mut s, mut l) = agents(8);
        s.attribute_map = Matrix::identity(18);
        s.pair_mixer = Matrix::from_vec(2, 1, vec![40.0, -40.0]).unwrap();
        s.readout = Matrix::from_vec(1, 1, vec![40.0]).unwrap();
        l.attribute_map = Matrix::from_fn(18, 18, |r, c| if r == c { 60.0 } else { 0.0 });
        let mut rng = RngStream::new(9);
        for scene in set.scenes() {
            let p = play_episode(scene, &s, &l, ActionMode::Greedy, &mut rng).unwrap();
            assert!(scene.gold.contains(&p.episode.attribute));
            assert!(p.episode.success);
        }
    }

    #[test]
    fn batch_size_and_determinism() {
        let set = scenes(100, 0.1);
        let refs: Vec<&Scene> = set.scenes().iter().collect();
        let (s, l) = agents(10);
        let a = play_batch(&refs, &s, &l, &mut RngStream::new(3), 32).unwrap();
        let b = play_batch(&refs, &s, &l, &mut RngStream::new(3), 32).unwrap();
        assert_eq!(a.len(), 32);
        let eps = |v: &[(usize, PlayedEpisode)]| v.iter().map(|(i, p)| (*i, p.episode.clone())).collect::<Vec<_>>();
        assert_eq!(eps(&a), eps(&b));
        assert!(matches!(play_batch(&[], &s, &l, &mut RngStream::new(3), 4), Err(Error::Empty(_))));
    }

    #[test]
    fn batch_scene_sampling_is_uniform() {
        let set = scenes(20, 0.1);
        let refs: Vec<&Scene> = set.scenes().iter().collect();
        let (s, l) = agents(10);
        let mut rng = RngStream::new(44);
        let mut counts = [0usize; 20];
        let draws = 100_000;
        for _ in 0..draws / 100 {
            for (i, _) in play_batch(&refs, &s, &l, &mut rng, 100).unwrap() {
                counts[i] += 1;
            }
        }
        let p = 1.0 / 20.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sigma, "{c}");
        }
    }

    #[test]
    fn parallel_play_matches_sequential() {
        let set = scenes(300, 0.1);
        let refs: Vec<&Scene> = set.scenes().iter().collect();
        let (s, l) = agents(12);
        let rng = RngStream::new(99);
        let par = play_scenes(&refs, &s, &l, ActionMode::Sampled, &rng, 7).unwrap();
        let seq: Vec<Episode> = refs
            .iter()
            .enumerate()
            .map(|(k, sc)| play_episode(sc, &s, &l, ActionMode::Sampled, &mut rng.substream(7 + k as u64)).unwrap().episode)
            .collect();
        assert_eq!(par, seq);
    }
}
