use serde::{Deserialize, Serialize};

use crate::training::TrainStats;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSource {
    #[default]
    Heldout,
    Train,
}

/// `(iteration, success)` pairs from the eval points. With `smoothing = Some(w)`
/// each value is the trailing mean over the last `w` points (fewer at the
/// start).
pub fn success_curve(stats: &TrainStats, source: CurveSource, smoothing: Option<usize>) -> Vec<(usize, f64)> {
    let raw: Vec<(usize, f64)> = stats
        .points
        .iter()
        .map(|p| {
            let v = match source {
                CurveSource::Heldout => p.heldout_success,
                CurveSource::Train => p.train_success,
            };
            (p.iteration, v)
        })
        .collect();
    let w = match smoothing {
        None | Some(0) | Some(1) => return raw,
        Some(w) => w,
    };
    let mut out = Vec::with_capacity(raw.len());
    let mut sum = 0.0;
    for i in 0..raw.len() {
        sum += raw[i].1;
        if i >= w {
            sum -= raw[i - w].1;
        }
        let n = (i + 1).min(w);
        out.push((raw[i].0, sum / n as f64));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::EvalPoint;

    fn stats(values: &[f64]) -> TrainStats {
        TrainStats {
            points: values
                .iter()
                .enumerate()
                .map(|(i, &v)| EvalPoint {
                    iteration: i * 100,
                    train_success: 1.0 - v,
                    heldout_success: v,
                    mean_reward: v,
                    baseline: 0.5,
                })
                .collect(),
        }
    }

    #[test]
    fn passes_through() {
        assert_eq!(success_curve(&stats(&[0.5]), CurveSource::Heldout, None), vec![(0, 0.5)]);
        let mono = [0.5, 0.6, 0.7, 0.9];
        let c = success_curve(&stats(&mono), CurveSource::Heldout, None);
        assert!(c.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(c.iter().map(|p| p.1).collect::<Vec<_>>(), mono);
        assert_eq!(success_curve(&stats(&mono), CurveSource::Train, None)[0].1, 0.5);
    }

    #[test]
    fn smoothing_matches_reference_loop() {
        let values: Vec<f64> = (0..23).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let got = success_curve(&stats(&values), CurveSource::Heldout, Some(5));
        for (i, (it, v)) in got.iter().enumerate() {
            let lo = i.saturating_sub(4);
            let mut s = 0.0;
            let mut n = 0;
            for x in &values[lo..=i] {
                s += x;
                n += 1;
            }
            assert_eq!(*it, i * 100);
            assert!((v - s / n as f64).abs() < 1e-12);
        }
    }
}
