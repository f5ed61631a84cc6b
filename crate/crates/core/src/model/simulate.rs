//! Generative simulator: samples corpora from the model's own process, for
//! recovery tests and synthetic experiments.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::{Corpus, TimeBinScheme, Unit, Vocabularies};
use crate::{Error, Result};

use super::{corpus_from_units, Mat, ModelConfig, ModelParams};

/// A sampled corpus together with the parameters and per-unit factor
/// assignments that generated it.
#[derive(Debug, Clone)]
pub struct SimCorpus {
    pub corpus: Corpus,
    pub truth: ModelParams,
    pub assignments: Vec<Vec<u32>>,
}

/// Sample a corpus from the generative process: draw the factor-specific
/// sequence/object/time distributions from their Dirichlet priors once, then
/// per trajectory draw its factor mixture and emit units by choosing a
/// factor and sampling the unit's sequence, object, and time bin from that
/// factor's distributions. The object is drawn per unit; each trajectory's
/// `object` field carries its first unit's draw.
///
/// Synthetic location names give sequences a shared-context structure:
/// sequence i is the window `(c<i/fanout>.0 .. c<i/fanout>.<r-1>, x<i%fanout>)`,
/// so groups of `fanout` sequences share their first r locations and differ
/// in the final one. With the object (time) component disabled, all units
/// carry object 0 (bin 0) and the corresponding truth rows are uniform.
pub fn simulate(
    cfg: &ModelConfig,
    num_seqs: usize,
    num_objs: usize,
    total_bins: u32,
    num_trajs: usize,
    units_per_traj: usize,
    fanout: usize,
    seed: u64,
) -> Result<SimCorpus> {
    cfg.validate()?;
    if num_seqs < 1 || num_objs < 1 || num_trajs < 1 || units_per_traj < 1 {
        return Err(Error::Argument(
            "simulation sizes must all be >= 1".into(),
        ));
    }
    if fanout < 1 || fanout > num_seqs {
        return Err(Error::Argument(format!(
            "fanout must be in 1..={num_seqs}, got {fanout}"
        )));
    }
    let scheme = TimeBinScheme::with_total_bins(total_bins)?;
    let bins = scheme.total_bins() as usize;

    let r = cfg.order;
    let mut vocab = Vocabularies::new(r)?;
    let num_contexts = num_seqs.div_ceil(fanout);
    for c in 0..num_contexts {
        for j in 0..r {
            vocab.locations.encode(&format!("c{c}.{j}"));
        }
    }
    let branch_base: Vec<u32> = (0..fanout)
        .map(|b| vocab.locations.encode(&format!("x{b}")))
        .collect();
    for i in 0..num_seqs {
        let ctx = i / fanout;
        let mut key: Vec<u32> = (0..r).map(|j| (ctx * r + j) as u32).collect();
        key.push(branch_base[i % fanout]);
        vocab.sequences.encode(&key);
    }
    let effective_objs = if cfg.components.object { num_objs } else { 1 };
    for o in 0..effective_objs {
        vocab.objects.encode(&format!("obj{o}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let phi = dirichlet_rows(&mut rng, cfg.k, num_seqs, cfg.beta);
    let psi = if cfg.components.object {
        dirichlet_rows(&mut rng, cfg.k, effective_objs, cfg.eta)
    } else {
        uniform_rows(cfg.k, 1)
    };
    let phi_time = if cfg.components.time {
        dirichlet_rows(&mut rng, cfg.k, bins, cfg.gamma)
    } else {
        uniform_rows(cfg.k, bins)
    };

    let mut theta = Mat::zeros(num_trajs, cfg.k);
    let mut streams = Vec::with_capacity(num_trajs);
    let mut assignments = Vec::with_capacity(num_trajs);
    for m in 0..num_trajs {
        let theta_m = sample_dirichlet(&mut rng, &cfg.alpha);
        theta.row_mut(m).copy_from_slice(&theta_m);
        let mut units = Vec::with_capacity(units_per_traj);
        let mut z_m = Vec::with_capacity(units_per_traj);
        for _ in 0..units_per_traj {
            let z = draw(&mut rng, &theta_m);
            let seq = draw(&mut rng, phi.row(z)) as u32;
            let obj = if cfg.components.object {
                draw(&mut rng, psi.row(z)) as u32
            } else {
                0
            };
            let bin = if cfg.components.time {
                draw(&mut rng, phi_time.row(z)) as u32
            } else {
                0
            };
            units.push(Unit { seq, obj, bin });
            z_m.push(z as u32);
        }
        streams.push((units[0].obj, units));
        assignments.push(z_m);
    }

    let corpus = corpus_from_units(vocab, scheme, streams);
    Ok(SimCorpus {
        corpus,
        truth: ModelParams {
            theta,
            phi,
            psi,
            phi_time,
        },
        assignments,
    })
}

fn uniform_rows(rows: usize, cols: usize) -> Mat {
    let mut mat = Mat::zeros(rows, cols);
    let p = 1.0 / cols as f64;
    mat.data_mut().fill(p);
    mat
}

fn dirichlet_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize, prior: f64) -> Mat {
    let mut mat = Mat::zeros(rows, cols);
    let alpha = vec![prior; cols];
    for r in 0..rows {
        let row = sample_dirichlet(rng, &alpha);
        mat.row_mut(r).copy_from_slice(&row);
    }
    mat
}

/// Dirichlet draw via normalized Gamma variates. Draws are clamped away from
/// zero so rows stay strictly positive even at small concentrations.
fn sample_dirichlet(rng: &mut ChaCha8Rng, alpha: &[f64]) -> Vec<f64> {
    let mut draws: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            let g = Gamma::new(a, 1.0).expect("positive shape");
            g.sample(rng).max(1e-300)
        })
        .collect();
    let sum: f64 = draws.iter().sum();
    for d in &mut draws {
        *d /= sum;
    }
    draws
}

fn draw(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_variation(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    #[test]
    fn fixed_seed_reproduces_corpus_exactly() {
        let cfg = ModelConfig::new(3);
        let a = simulate(&cfg, 20, 5, 4, 50, 8, 4, 99).unwrap();
        let b = simulate(&cfg, 20, 5, 4, 50, 8, 4, 99).unwrap();
        assert_eq!(a.corpus.trajectories, b.corpus.trajectories);
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.truth.phi, b.truth.phi);
        let c = simulate(&cfg, 20, 5, 4, 50, 8, 4, 100).unwrap();
        assert_ne!(a.corpus.trajectories, c.corpus.trajectories);
    }

    #[test]
    fn single_factor_frequencies_converge_to_phi() {
        let mut cfg = ModelConfig::new(1);
        cfg.beta = 0.2;
        let sim = simulate(&cfg, 30, 3, 2, 2000, 50, 4, 7).unwrap();
        assert!(sim.assignments.iter().flatten().all(|&z| z == 0));

        let mut freq = vec![0.0; 30];
        let mut n = 0.0;
        for traj in &sim.corpus.trajectories {
            for u in &traj.units {
                freq[u.seq as usize] += 1.0;
                n += 1.0;
            }
        }
        for f in &mut freq {
            *f /= n;
        }
        let tv = total_variation(&freq, sim.truth.phi.row(0));
        assert!(tv < 0.05, "tv = {tv}");
    }

    #[test]
    fn per_factor_histograms_match_ground_truth() {
        // Two concentrated factors; bucket units by their true assignment
        // and compare each empirical histogram to the sampled truth row.
        let mut cfg = ModelConfig::new(2);
        cfg.beta = 0.05;
        let sim = simulate(&cfg, 50, 4, 2, 2500, 40, 5, 13).unwrap();
        let mut freq = vec![vec![0.0f64; 50]; 2];
        let mut n = [0.0f64; 2];
        for (m, traj) in sim.corpus.trajectories.iter().enumerate() {
            for (i, u) in traj.units.iter().enumerate() {
                let z = sim.assignments[m][i] as usize;
                freq[z][u.seq as usize] += 1.0;
                n[z] += 1.0;
            }
        }
        for z in 0..2 {
            for f in &mut freq[z] {
                *f /= n[z];
            }
            let tv = total_variation(&freq[z], sim.truth.phi.row(z));
            assert!(tv < 0.05, "factor {z}: tv = {tv}");
        }
    }

    #[test]
    fn disabled_components_collapse_to_dummies() {
        let mut cfg = ModelConfig::new(2);
        cfg.components.object = false;
        cfg.components.time = false;
        let sim = simulate(&cfg, 10, 5, 4, 20, 6, 2, 5).unwrap();
        assert_eq!(sim.corpus.num_objects(), 1);
        for traj in &sim.corpus.trajectories {
            assert!(traj.units.iter().all(|u| u.obj == 0 && u.bin == 0));
        }
        assert_eq!(sim.truth.psi.cols(), 1);
        assert!(sim.truth.phi_time.row(0).iter().all(|&p| p == 0.25));
    }

    #[test]
    fn sequences_share_contexts_by_fanout() {
        let cfg = ModelConfig::new(1);
        let sim = simulate(&cfg, 8, 2, 2, 5, 3, 4, 1).unwrap();
        let vocab = &sim.corpus.vocab;
        let r = vocab.order;
        // Sequences 0..4 share a context, 4..8 another.
        for group in 0..2 {
            let first = vocab.sequences.key((group * 4) as u32);
            for b in 1..4u32 {
                let other = vocab.sequences.key(group as u32 * 4 + b);
                assert_eq!(first[..r], other[..r]);
                assert_ne!(first[r], other[r]);
            }
        }
        // Branch locations are shared across groups.
        let a = vocab.sequences.key(0);
        let b = vocab.sequences.key(4);
        assert_eq!(a[r], b[r]);
    }

    #[test]
    fn invalid_sizes_rejected() {
        let cfg = ModelConfig::new(2);
        assert!(simulate(&cfg, 0, 2, 2, 5, 3, 1, 1).is_err());
        assert!(simulate(&cfg, 8, 2, 2, 5, 0, 1, 1).is_err());
        assert!(simulate(&cfg, 8, 2, 5, 5, 3, 1, 1).is_err()); // bad bin count
        assert!(simulate(&cfg, 8, 2, 2, 5, 3, 9, 1).is_err()); // fanout > S
    }
}
