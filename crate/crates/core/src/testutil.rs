//! Shared helpers for unit tests.

use crate::corpus::{Corpus, TimeBinScheme, Unit, Vocabularies};
use crate::model::corpus_from_units;

/// Corpus over synthetic ids: `num_seqs` first-order sequences (each with
/// its own location pair), `num_objs` objects, and trajectories given as
/// (object, [(sequence, bin)]) streams.
pub(crate) fn toy_corpus(
    num_seqs: usize,
    num_objs: usize,
    total_bins: u32,
    trajs: &[(u32, &[(u32, u32)])],
) -> Corpus {
    let mut vocab = Vocabularies::new(1).unwrap();
    for s in 0..num_seqs {
        let a = vocab.locations.encode(&format!("p{s}"));
        let b = vocab.locations.encode(&format!("q{s}"));
        vocab.sequences.encode(&[a, b]);
    }
    for o in 0..num_objs {
        vocab.objects.encode(&format!("obj{o}"));
    }
    let scheme = TimeBinScheme::with_total_bins(total_bins).unwrap();
    let units = trajs
        .iter()
        .map(|&(obj, list)| {
            let units = list
                .iter()
                .map(|&(seq, bin)| Unit { seq, obj, bin })
                .collect();
            (obj, units)
        })
        .collect();
    corpus_from_units(vocab, scheme, units)
}
