//! Tab-separated episode log: one header line, then one episode per line
//! with columns `scene_id referent_slot attribute choice reward
//! speaker_log_prob listener_log_prob`. Log-probabilities are written in
//! shortest round-trip form.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::episode::Episode;
use crate::error::{Error, Result};

pub const EPISODE_LOG_HEADER: &str = "scene_id\treferent_slot\tattribute\tchoice\treward\tspeaker_log_prob\tlistener_log_prob";

pub fn write_episode_log(path: &Path, episodes: &[Episode]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(Error::file(path))?);
    writeln!(w, "{EPISODE_LOG_HEADER}")?;
    write_rows(&mut w, episodes)?;
    w.flush()?;
    Ok(())
}

/// Appends to an existing log, creating it (with header) if absent.
pub fn append_episode_log(path: &Path, episodes: &[Episode]) -> Result<()> {
    let fresh = !path.exists();
    let mut w = BufWriter::new(OpenOptions::new().create(true).append(true).open(path).map_err(Error::file(path))?);
    if fresh {
        writeln!(w, "{EPISODE_LOG_HEADER}")?;
    }
    write_rows(&mut w, episodes)?;
    w.flush()?;
    Ok(())
}

fn write_rows(w: &mut impl Write, episodes: &[Episode]) -> Result<()> {
    for e in episodes {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{:?}\t{:?}",
            e.scene_id,
            e.referent_slot,
            e.attribute,
            e.choice,
            u8::from(e.success),
            e.speaker_log_prob,
            e.listener_log_prob
        )?;
    }
    Ok(())
}

pub fn read_episode_log(path: &Path) -> Result<Vec<Episode>> {
    let reader = BufReader::new(File::open(path).map_err(Error::file(path))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if n == 1 {
            if line.trim() != EPISODE_LOG_HEADER {
                return Err(Error::format(path, n, "missing episode log header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(Error::format(path, n, format!("expected 7 columns, found {}", cols.len())));
        }
        let bad = |what: &str| Error::format(path, n, format!("bad {what}"));
        let slot: usize = cols[1].parse().map_err(|_| bad("referent slot"))?;
        let choice: usize = cols[3].parse().map_err(|_| bad("choice"))?;
        if slot > 1 || choice > 1 {
            return Err(bad("slot index (must be 0 or 1)"));
        }
        let success = match cols[4] {
            "0" => false,
            "1" => true,
            _ => return Err(bad("reward")),
        };
        if success != (slot == choice) {
            return Err(Error::format(path, n, "reward disagrees with choice and referent slot"));
        }
        out.push(Episode {
            scene_id: cols[0].parse().map_err(|_| bad("scene id"))?,
            referent_slot: slot,
            attribute: cols[2].parse().map_err(|_| bad("attribute"))?,
            choice,
            success,
            speaker_log_prob: cols[5].parse().map_err(|_| bad("speaker log prob"))?,
            listener_log_prob: cols[6].parse().map_err(|_| bad("listener log prob"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_episode() -> impl Strategy<Value = Episode> {
        (any::<u64>(), 0usize..2, 0usize..100, 0usize..2, -50.0f64..0.0, -50.0f64..0.0).prop_map(|(id, slot, a, choice, ls, ll)| Episode {
            scene_id: id,
            referent_slot: slot,
            attribute: a,
            choice,
            success: slot == choice,
            speaker_log_prob: ls,
            listener_log_prob: ll,
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn log_round_trip(episodes in prop::collection::vec(arb_episode(), 0..50)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.tsv");
            write_episode_log(&path, &episodes).unwrap();
            prop_assert_eq!(read_episode_log(&path).unwrap(), episodes);
        }
    }

    #[test]
    fn append_extends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        let e = Episode {
            scene_id: 1,
            referent_slot: 1,
            attribute: 2,
            choice: 0,
            success: false,
            speaker_log_prob: -0.1,
            listener_log_prob: -0.2,
        };
        append_episode_log(&path, std::slice::from_ref(&e)).unwrap();
        append_episode_log(&path, &[e.clone(), e.clone()]).unwrap();
        assert_eq!(read_episode_log(&path).unwrap().len(), 3);
    }

    #[test]
    fn inconsistent_reward_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        std::fs::write(&path, format!("{EPISODE_LOG_HEADER}\n0\t0\t1\t0\t0\t-1.0\t-1.0\n")).unwrap();
        let msg = read_episode_log(&path).unwrap_err().to_string();
        assert!(msg.contains("record 2"), "{msg}");
    }
}
