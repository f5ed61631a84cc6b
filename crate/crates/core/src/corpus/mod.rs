//! Corpus construction: segmentation of raw records into trajectories,
//! extraction of r-th-order sequence units with time bins, and vocabularies.

mod file;
mod segment;
mod time;
mod vocab;

pub use file::{read_corpus, write_corpus};
pub use segment::{parse_records, segment, PassageRecord, Trajectory};
pub use time::TimeBinScheme;
pub use vocab::{SequenceVocab, StringVocab, Vocabularies, UNKNOWN_OBJ, UNKNOWN_SEQ};

use crate::{Error, Result};

/// One trajectory unit: an r-th-order sequence, the object it was observed
/// with, and the time bin of the window's mean timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unit {
    pub seq: u32,
    pub obj: u32,
    pub bin: u32,
}

/// A preprocessed trajectory: its dense index, its object, and the ordered
/// units extracted from it. A length-n trajectory yields n - r units.
///
/// Real corpora repeat the trajectory's object across all units; simulated
/// corpora may vary it per unit, in which case `object` is the first unit's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryUnits {
    pub index: u32,
    pub object: u32,
    pub units: Vec<Unit>,
}

impl TrajectoryUnits {
    /// Number of units, i.e. the trajectory length minus the order.
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

/// Extract the n - r sliding windows of a trajectory as units. Window i
/// covers locations i..=i+r; its time is the bin of the floor of the mean of
/// the r + 1 timestamps. With `freeze_vocab` set, unseen sequences map to
/// [`UNKNOWN_SEQ`] instead of extending the vocabulary and unseen objects to
/// [`UNKNOWN_OBJ`].
pub fn extract_units(
    traj: &Trajectory,
    scheme: TimeBinScheme,
    tz_offset_secs: i64,
    vocab: &mut Vocabularies,
    freeze_vocab: bool,
) -> Result<TrajectoryUnits> {
    let r = vocab.order;
    if traj.len() < r + 1 {
        return Err(Error::TrajectoryTooShort {
            len: traj.len(),
            required: r + 1,
        });
    }
    let object = if freeze_vocab {
        vocab.objects.get(&traj.object).unwrap_or(UNKNOWN_OBJ)
    } else {
        vocab.objects.encode(&traj.object)
    };
    let mut units = Vec::with_capacity(traj.len() - r);
    let mut window: Vec<&str> = Vec::with_capacity(r + 1);
    for w in traj.points.windows(r + 1) {
        window.clear();
        window.extend(w.iter().map(|(l, _)| l.as_str()));
        let seq = if freeze_vocab {
            vocab.encode_sequence_frozen(&window)
        } else {
            vocab.encode_sequence(&window)
        };
        let sum: i64 = w.iter().map(|&(_, t)| t).sum();
        let mean_ts = sum.div_euclid(r as i64 + 1);
        units.push(Unit {
            seq,
            obj: object,
            bin: scheme.bin(mean_ts, tz_offset_secs),
        });
    }
    Ok(TrajectoryUnits {
        index: 0,
        object,
        units,
    })
}

/// A fully preprocessed corpus: vocabularies, the time-bin scheme it was
/// built with, and the unit streams of all trajectories.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub vocab: Vocabularies,
    pub scheme: TimeBinScheme,
    pub tz_offset_secs: i64,
    pub trajectories: Vec<TrajectoryUnits>,
}

impl Corpus {
    /// Build a corpus from segmented trajectories, growing the vocabularies.
    /// Trajectories shorter than order + 1 yield no units and are skipped.
    pub fn build(
        trajectories: &[Trajectory],
        order: usize,
        scheme: TimeBinScheme,
        tz_offset_secs: i64,
    ) -> Result<Corpus> {
        let mut vocab = Vocabularies::new(order)?;
        let mut out = Vec::new();
        for traj in trajectories {
            if traj.len() < order + 1 {
                continue;
            }
            let mut tu = extract_units(traj, scheme, tz_offset_secs, &mut vocab, false)?;
            tu.index = out.len() as u32;
            out.push(tu);
        }
        Ok(Corpus {
            vocab,
            scheme,
            tz_offset_secs,
            trajectories: out,
        })
    }

    pub fn num_trajectories(&self) -> usize {
        self.trajectories.len()
    }

    pub fn num_sequences(&self) -> usize {
        self.vocab.num_sequences()
    }

    pub fn num_objects(&self) -> usize {
        self.vocab.num_objects()
    }

    pub fn num_bins(&self) -> usize {
        self.scheme.total_bins() as usize
    }

    pub fn total_units(&self) -> usize {
        self.trajectories.iter().map(|t| t.len()).sum()
    }

    /// A corpus over the selected trajectories, sharing vocabularies and
    /// scheme; trajectory indices are reassigned densely in selection order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        let trajectories = indices
            .iter()
            .enumerate()
            .map(|(new_idx, &old_idx)| {
                let mut tu = self.trajectories[old_idx].clone();
                tu.index = new_idx as u32;
                tu
            })
            .collect();
        Corpus {
            vocab: self.vocab.clone(),
            scheme: self.scheme,
            tz_offset_secs: self.tz_offset_secs,
            trajectories,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(object: &str, points: &[(&str, i64)]) -> Trajectory {
        Trajectory {
            object: object.into(),
            points: points.iter().map(|&(l, t)| (l.into(), t)).collect(),
        }
    }

    // Monday 2023-01-02 00:00 UTC.
    const MONDAY: i64 = 1672617600;

    #[test]
    fn single_window_at_order_two() {
        let t = traj("v", &[("A", 100), ("B", 200), ("C", 300)]);
        let mut vocab = Vocabularies::new(2).unwrap();
        let tu = extract_units(&t, TimeBinScheme::default(), 0, &mut vocab, false).unwrap();
        assert_eq!(tu.len(), 1);
        assert_eq!(vocab.decode_sequence(tu.units[0].seq), vec!["A", "B", "C"]);
    }

    #[test]
    fn sliding_windows_at_order_one() {
        let t = traj("v", &[("A", 100), ("B", 200), ("C", 300), ("D", 400)]);
        let mut vocab = Vocabularies::new(1).unwrap();
        let tu = extract_units(&t, TimeBinScheme::default(), 0, &mut vocab, false).unwrap();
        let seqs: Vec<Vec<&str>> = tu
            .units
            .iter()
            .map(|u| vocab.decode_sequence(u.seq))
            .collect();
        assert_eq!(seqs, vec![vec!["A", "B"], vec!["B", "C"], vec!["C", "D"]]);
    }

    #[test]
    fn unit_bin_comes_from_mean_timestamp() {
        // Monday 07:50, 08:10, 08:30; the mean is 08:10, so bin 4 even though
        // the window starts in bin 3.
        let t = traj(
            "v",
            &[
                ("A", MONDAY + 7 * 3600 + 50 * 60),
                ("B", MONDAY + 8 * 3600 + 10 * 60),
                ("C", MONDAY + 8 * 3600 + 30 * 60),
            ],
        );
        let mut vocab = Vocabularies::new(2).unwrap();
        let tu = extract_units(&t, TimeBinScheme::default(), 0, &mut vocab, false).unwrap();
        assert_eq!(tu.units[0].bin, 4);
    }

    #[test]
    fn short_trajectory_rejected() {
        let t = traj("v", &[("A", 100), ("B", 200)]);
        let mut vocab = Vocabularies::new(2).unwrap();
        let err = extract_units(&t, TimeBinScheme::default(), 0, &mut vocab, false).unwrap_err();
        assert!(matches!(err, Error::TrajectoryTooShort { len: 2, required: 3 }));
    }

    #[test]
    fn window_count_and_overlap_property() {
        // Every trajectory of length n yields n - r units, and consecutive
        // units' sequences overlap in exactly r locations.
        for n in 3..10usize {
            let points: Vec<(String, i64)> = (0..n)
                .map(|i| (format!("L{}", i % 5), 1000 + 60 * i as i64))
                .collect();
            let t = Trajectory {
                object: "v".into(),
                points,
            };
            for r in 1..3usize {
                if n < r + 1 {
                    continue;
                }
                let mut vocab = Vocabularies::new(r).unwrap();
                let tu = extract_units(&t, TimeBinScheme::default(), 0, &mut vocab, false).unwrap();
                assert_eq!(tu.len(), n - r);
                for pair in tu.units.windows(2) {
                    let a = vocab.sequences.key(pair[0].seq);
                    let b = vocab.sequences.key(pair[1].seq);
                    assert_eq!(a[1..], b[..r]);
                }
            }
        }
    }

    #[test]
    fn frozen_extraction_emits_sentinels() {
        let known = traj("v", &[("A", 100), ("B", 200), ("C", 300)]);
        let mut vocab = Vocabularies::new(2).unwrap();
        extract_units(&known, TimeBinScheme::default(), 0, &mut vocab, false).unwrap();

        let novel = traj("w", &[("A", 100), ("B", 200), ("Z", 300), ("C", 400)]);
        let before = vocab.num_sequences();
        let tu = extract_units(&novel, TimeBinScheme::default(), 0, &mut vocab, true).unwrap();
        assert_eq!(vocab.num_sequences(), before);
        assert_eq!(tu.object, UNKNOWN_OBJ);
        assert!(tu.units.iter().all(|u| u.seq == UNKNOWN_SEQ));
    }

    #[test]
    fn build_skips_zero_unit_trajectories() {
        let trajs = vec![
            traj("v", &[("A", 100), ("B", 200), ("C", 300)]),
            traj("w", &[("A", 100), ("B", 200)]),
        ];
        let corpus = Corpus::build(&trajs, 2, TimeBinScheme::default(), 0).unwrap();
        assert_eq!(corpus.num_trajectories(), 1);
        assert_eq!(corpus.trajectories[0].index, 0);
    }

    #[test]
    fn subset_reindexes() {
        let trajs = vec![
            traj("a", &[("A", 100), ("B", 200), ("C", 300)]),
            traj("b", &[("B", 100), ("C", 200), ("D", 300)]),
            traj("c", &[("C", 100), ("D", 200), ("A", 300)]),
        ];
        let corpus = Corpus::build(&trajs, 2, TimeBinScheme::default(), 0).unwrap();
        let sub = corpus.subset(&[2, 0]);
        assert_eq!(sub.num_trajectories(), 2);
        assert_eq!(sub.trajectories[0].index, 0);
        assert_eq!(sub.trajectories[0].object, corpus.trajectories[2].object);
        assert_eq!(sub.num_sequences(), corpus.num_sequences());
    }
}
