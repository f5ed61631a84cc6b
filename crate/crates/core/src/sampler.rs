//! Collapsed Gibbs inference: random initialization, per-unit factor
//! resampling, training sweeps with a log-joint trace, and fold-in of
//! held-out trajectories against frozen global counts.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Unit, UNKNOWN_SEQ};
use crate::model::{estimate_params, log_joint, CountTables, ModelConfig, ModelParams};
use crate::{Error, Result};

/// Sampler state over a borrowed corpus. A sweep resamples every unit in
/// fixed (trajectory, unit) order; sweeps are strictly sequential since each
/// update reads counts written by the previous one.
pub struct Sampler<'c> {
    corpus: &'c Corpus,
    cfg: ModelConfig,
    counts: CountTables,
    rng: ChaCha8Rng,
    iteration: usize,
    log_joint_trace: Vec<f64>,
    beta_sum: f64,
    eta_sum: f64,
    gamma_sum: f64,
}

impl<'c> Sampler<'c> {
    /// Assign every unit a uniformly random factor and build the count
    /// tables. Rejects an empty corpus.
    pub fn init(corpus: &'c Corpus, cfg: ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if corpus.num_trajectories() == 0 || corpus.total_units() == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = CountTables::new(corpus, cfg.k);
        let k = cfg.k as u32;
        for (m, traj) in corpus.trajectories.iter().enumerate() {
            for (i, &unit) in traj.units.iter().enumerate() {
                let z = rng.random_range(0..k);
                counts.add(m, i, unit, z);
            }
        }
        let beta_sum = cfg.beta * corpus.num_sequences() as f64;
        let eta_sum = cfg.eta * corpus.num_objects() as f64;
        let gamma_sum = cfg.gamma * corpus.num_bins() as f64;
        Ok(Sampler {
            corpus,
            cfg,
            counts,
            rng,
            iteration: 0,
            log_joint_trace: Vec::new(),
            beta_sum,
            eta_sum,
            gamma_sum,
        })
    }

    pub fn corpus(&self) -> &'c Corpus {
        self.corpus
    }

    pub fn cfg(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn counts(&self) -> &CountTables {
        &self.counts
    }

    pub fn into_counts(self) -> CountTables {
        self.counts
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Per-sweep collapsed joint log-probabilities, one entry per completed
    /// sweep.
    pub fn log_joint_trace(&self) -> &[f64] {
        &self.log_joint_trace
    }

    /// Remove unit `i` of trajectory `m` from the counts, entering the "-i"
    /// state. Returns the factor it was assigned to.
    pub fn remove_unit(&mut self, m: usize, i: usize) -> u32 {
        let unit = self.corpus.trajectories[m].units[i];
        self.counts.remove(m, i, unit)
    }

    /// Assign unit `i` of trajectory `m` to factor `k` and restore counts.
    pub fn add_unit(&mut self, m: usize, i: usize, k: u32) {
        let unit = self.corpus.trajectories[m].units[i];
        self.counts.add(m, i, unit, k);
    }

    /// The Gibbs conditional over factors for unit `i` of trajectory `m`.
    /// Must be called in the "-i" state (after [`Sampler::remove_unit`]);
    /// entries are strictly positive and sum to 1.
    pub fn conditional(&self, m: usize, i: usize) -> Vec<f64> {
        debug_assert_eq!(
            self.counts.traj_factors(m).iter().sum::<u32>() + 1,
            self.counts.units_per_traj(m),
            "conditional() requires the unit's assignment to be decremented"
        );
        let unit = self.corpus.trajectories[m].units[i];
        let mut weights = vec![0.0; self.cfg.k];
        self.weights_into(m, unit, &mut weights);
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        weights
    }

    /// Unnormalized conditional weights; the constant trajectory-denominator
    /// is dropped since every caller normalizes or samples proportionally.
    #[inline]
    fn weights_into(&self, m: usize, unit: Unit, out: &mut [f64]) {
        let counts = &self.counts;
        let seq = counts.seq_factors(unit.seq as usize);
        let traj = counts.traj_factors(m);
        let totals = counts.factor_totals_slice();
        let cfg = &self.cfg;
        match (cfg.components.object, cfg.components.time) {
            (true, true) => {
                let obj = counts.obj_factors(unit.obj as usize);
                let bin = counts.bin_factors(unit.bin as usize);
                for k in 0..out.len() {
                    let n_k = totals[k] as f64;
                    out[k] = (seq[k] as f64 + cfg.beta) / (n_k + self.beta_sum)
                        * ((obj[k] as f64 + cfg.eta) / (n_k + self.eta_sum))
                        * ((bin[k] as f64 + cfg.gamma) / (n_k + self.gamma_sum))
                        * (traj[k] as f64 + cfg.alpha[k]);
                }
            }
            (true, false) => {
                let obj = counts.obj_factors(unit.obj as usize);
                for k in 0..out.len() {
                    let n_k = totals[k] as f64;
                    out[k] = (seq[k] as f64 + cfg.beta) / (n_k + self.beta_sum)
                        * ((obj[k] as f64 + cfg.eta) / (n_k + self.eta_sum))
                        * (traj[k] as f64 + cfg.alpha[k]);
                }
            }
            (false, true) => {
                let bin = counts.bin_factors(unit.bin as usize);
                for k in 0..out.len() {
                    let n_k = totals[k] as f64;
                    out[k] = (seq[k] as f64 + cfg.beta) / (n_k + self.beta_sum)
                        * ((bin[k] as f64 + cfg.gamma) / (n_k + self.gamma_sum))
                        * (traj[k] as f64 + cfg.alpha[k]);
                }
            }
            (false, false) => {
                for k in 0..out.len() {
                    let n_k = totals[k] as f64;
                    out[k] = (seq[k] as f64 + cfg.beta) / (n_k + self.beta_sum)
                        * (traj[k] as f64 + cfg.alpha[k]);
                }
            }
        }
    }

    /// One full sweep: decrement, resample, and increment every unit in
    /// corpus order, then append the collapsed joint to the trace.
    pub fn sweep(&mut self) {
        let k = self.cfg.k;
        let mut weights = vec![0.0; k];
        for m in 0..self.corpus.trajectories.len() {
            let units = &self.corpus.trajectories[m].units;
            for i in 0..units.len() {
                let unit = units[i];
                self.counts.remove(m, i, unit);
                self.weights_into(m, unit, &mut weights);
                let z = sample_index(&mut self.rng, &weights);
                self.counts.add(m, i, unit, z as u32);
            }
        }
        self.iteration += 1;
        self.log_joint_trace
            .push(log_joint(&self.counts, &self.cfg));
    }
}

/// Inverse-CDF draw from unnormalized weights with a single uniform variate.
#[inline]
fn sample_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Run `iterations` sweeps from a fresh random initialization and return the
/// estimated parameters along with the final sampler state.
///
/// The read-out is the final sample's posterior-mean estimate; with
/// `average_last > 1` the estimates of the last `average_last` sweeps are
/// averaged instead.
pub fn train<'c>(
    corpus: &'c Corpus,
    cfg: &ModelConfig,
    iterations: usize,
    average_last: usize,
    seed: u64,
) -> Result<(ModelParams, Sampler<'c>)> {
    let mut sampler = Sampler::init(corpus, cfg.clone(), seed)?;
    let window = average_last.clamp(1, iterations.max(1));
    let mut accum: Option<ModelParams> = None;
    for it in 0..iterations {
        sampler.sweep();
        if window > 1 && it + window >= iterations {
            let params = estimate_params(&sampler.counts, &sampler.cfg);
            accum = Some(match accum {
                None => params,
                Some(mut acc) => {
                    add_params(&mut acc, &params);
                    acc
                }
            });
        }
    }
    let params = match accum {
        Some(mut acc) => {
            scale_params(&mut acc, 1.0 / window as f64);
            acc
        }
        None => estimate_params(&sampler.counts, &sampler.cfg),
    };
    Ok((params, sampler))
}

fn add_params(acc: &mut ModelParams, other: &ModelParams) {
    for (a, b) in [
        (&mut acc.theta, &other.theta),
        (&mut acc.phi, &other.phi),
        (&mut acc.psi, &other.psi),
        (&mut acc.phi_time, &other.phi_time),
    ] {
        for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
            *x += y;
        }
    }
}

fn scale_params(acc: &mut ModelParams, factor: f64) {
    for mat in [&mut acc.theta, &mut acc.phi, &mut acc.psi, &mut acc.phi_time] {
        for x in mat.data_mut() {
            *x *= factor;
        }
    }
}

/// The frozen global side of fold-in: either literal count tables (training
/// state) or estimated parameters (a loaded model file). Both yield the same
/// per-unit factor likelihoods because a held-out unit never enters the
/// global counts.
#[derive(Clone, Copy)]
pub enum FoldInGlobals<'a> {
    Counts(&'a CountTables),
    Params(&'a ModelParams),
}

/// Result of folding in a held-out unit stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldIn {
    pub theta: Vec<f64>,
    /// Set when the stream had no usable units and `theta` is the prior mean.
    pub prior_fallback: bool,
}

/// Estimate a held-out trajectory's factor mixture: sample assignments for
/// its units with the global counts held fixed and only the local
/// per-factor counts evolving, then read out the posterior mean.
///
/// Units carrying the unknown-sequence sentinel are skipped; if none remain,
/// the prior mean is returned with `prior_fallback` set.
pub fn fold_in(
    units: &[Unit],
    globals: FoldInGlobals<'_>,
    cfg: &ModelConfig,
    iterations: usize,
    seed: u64,
) -> FoldIn {
    let k = cfg.k;
    let alpha_sum = cfg.alpha_sum();
    let known: Vec<Unit> = units
        .iter()
        .copied()
        .filter(|u| u.seq != UNKNOWN_SEQ)
        .collect();
    if known.is_empty() {
        return FoldIn {
            theta: cfg.alpha.iter().map(|&a| a / alpha_sum).collect(),
            prior_fallback: true,
        };
    }

    // Global factors are constant during fold-in; precompute one likelihood
    // row per unit.
    let likelihoods = unit_likelihoods(&known, globals, cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut local = vec![0u32; k];
    let mut z: Vec<u32> = known
        .iter()
        .map(|_| {
            let zi = rng.random_range(0..k as u32);
            local[zi as usize] += 1;
            zi
        })
        .collect();

    let mut weights = vec![0.0; k];
    for _ in 0..iterations {
        for (i, lik) in likelihoods.chunks_exact(k).enumerate() {
            local[z[i] as usize] -= 1;
            for ki in 0..k {
                weights[ki] = lik[ki] * (local[ki] as f64 + cfg.alpha[ki]);
            }
            let zi = sample_index(&mut rng, &weights) as u32;
            z[i] = zi;
            local[zi as usize] += 1;
        }
    }

    let denom = known.len() as f64 + alpha_sum;
    FoldIn {
        theta: (0..k)
            .map(|ki| (local[ki] as f64 + cfg.alpha[ki]) / denom)
            .collect(),
        prior_fallback: false,
    }
}

/// Flattened per-unit likelihood rows (unit-major, K entries each) under the
/// frozen global factors, honoring the active components.
fn unit_likelihoods(units: &[Unit], globals: FoldInGlobals<'_>, cfg: &ModelConfig) -> Vec<f64> {
    let k = cfg.k;
    let mut out = vec![1.0; units.len() * k];
    match globals {
        FoldInGlobals::Counts(counts) => {
            let beta_sum = cfg.beta * counts.num_sequences() as f64;
            let eta_sum = cfg.eta * counts.num_objects() as f64;
            let gamma_sum = cfg.gamma * counts.num_bins() as f64;
            let totals = counts.factor_totals_slice();
            for (u, row) in units.iter().zip(out.chunks_exact_mut(k)) {
                let seq = counts.seq_factors(u.seq as usize);
                for ki in 0..k {
                    row[ki] = (seq[ki] as f64 + cfg.beta) / (totals[ki] as f64 + beta_sum);
                }
                if cfg.components.object {
                    // An unknown object contributes its prior-only factor.
                    for ki in 0..k {
                        let n = if u.obj == crate::corpus::UNKNOWN_OBJ {
                            0
                        } else {
                            counts.obj_factors(u.obj as usize)[ki]
                        };
                        row[ki] *= (n as f64 + cfg.eta) / (totals[ki] as f64 + eta_sum);
                    }
                }
                if cfg.components.time {
                    let bin = counts.bin_factors(u.bin as usize);
                    for ki in 0..k {
                        row[ki] *= (bin[ki] as f64 + cfg.gamma) / (totals[ki] as f64 + gamma_sum);
                    }
                }
            }
        }
        FoldInGlobals::Params(params) => {
            for (u, row) in units.iter().zip(out.chunks_exact_mut(k)) {
                for ki in 0..k {
                    row[ki] = params.phi.at(ki, u.seq as usize);
                }
                if cfg.components.object && u.obj != crate::corpus::UNKNOWN_OBJ {
                    for ki in 0..k {
                        row[ki] *= params.psi.at(ki, u.obj as usize);
                    }
                }
                if cfg.components.time {
                    for ki in 0..k {
                        row[ki] *= params.phi_time.at(ki, u.bin as usize);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::toy_corpus;
    use crate::model::{counts_from_assignments, Components};

    fn tiny_corpus() -> Corpus {
        toy_corpus(
            3,
            2,
            2,
            &[(0, &[(0, 0), (1, 1), (0, 0)]), (1, &[(2, 1), (1, 0), (2, 1)])],
        )
    }

    #[test]
    fn init_is_conservative_and_deterministic() {
        let corpus = tiny_corpus();
        let cfg = ModelConfig::new(3);
        let a = Sampler::init(&corpus, cfg.clone(), 11).unwrap();
        let b = Sampler::init(&corpus, cfg.clone(), 11).unwrap();
        assert_eq!(a.counts().assignments(), b.counts().assignments());
        assert_eq!(a.counts().grand_total(), 6);
        a.counts().check_invariants(&corpus).unwrap();

        let c = Sampler::init(&corpus, cfg, 12).unwrap();
        // Different seed gives a different draw with overwhelming likelihood
        // on six units and three factors; this seed pair does differ.
        assert_ne!(a.counts().assignments(), c.counts().assignments());
    }

    #[test]
    fn single_factor_init_and_sweep_are_trivial() {
        let corpus = tiny_corpus();
        let cfg = ModelConfig::new(1);
        let mut s = Sampler::init(&corpus, cfg, 5).unwrap();
        assert_eq!(s.counts().n_mk(0, 0), 3);
        assert_eq!(s.counts().n_mk(1, 0), 3);
        let before = s.counts().assignments().to_vec();
        s.sweep();
        assert_eq!(s.counts().assignments(), &before[..]);
        assert_eq!(s.iteration(), 1);
        assert_eq!(s.log_joint_trace().len(), 1);
    }

    #[test]
    fn empty_corpus_rejected() {
        let corpus = toy_corpus(2, 1, 2, &[]);
        assert!(matches!(
            Sampler::init(&corpus, ModelConfig::new(2), 1),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn sweep_conserves_counts() {
        let corpus = tiny_corpus();
        let mut s = Sampler::init(&corpus, ModelConfig::new(3), 7).unwrap();
        for _ in 0..20 {
            s.sweep();
            s.counts().check_invariants(&corpus).unwrap();
            assert_eq!(s.counts().grand_total(), 6);
        }
    }

    #[test]
    fn prior_only_conditional_is_uniform() {
        // A single-unit corpus in the "-i" state has all-zero counts, so the
        // conditional reduces to the (symmetric) priors.
        let corpus = toy_corpus(2, 1, 2, &[(0, &[(0, 0)])]);
        let cfg = ModelConfig::new(4);
        let mut s = Sampler::init(&corpus, cfg, 3).unwrap();
        s.remove_unit(0, 0);
        let cond = s.conditional(0, 0);
        for &p in &cond {
            assert!((p - 0.25).abs() < 1e-12);
        }
        s.add_unit(0, 0, 0);
        s.counts().check_invariants(&corpus).unwrap();
    }

    #[test]
    fn conditional_sums_to_one() {
        let corpus = tiny_corpus();
        let mut s = Sampler::init(&corpus, ModelConfig::new(3), 9).unwrap();
        for _ in 0..3 {
            s.sweep();
        }
        for m in 0..2 {
            for i in 0..3 {
                let old = s.remove_unit(m, i);
                let cond = s.conditional(m, i);
                let sum: f64 = cond.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                assert!(cond.iter().all(|&p| p > 0.0));
                s.add_unit(m, i, old);
            }
        }
    }

    #[test]
    #[should_panic(expected = "decremented")]
    #[cfg(debug_assertions)]
    fn conditional_without_decrement_panics_in_debug() {
        let corpus = tiny_corpus();
        let s = Sampler::init(&corpus, ModelConfig::new(2), 1).unwrap();
        let _ = s.conditional(0, 0);
    }

    #[test]
    fn huge_beta_saturates_the_sequence_factor() {
        // As the sequence prior grows, the sequence factor flattens and the
        // conditional approaches the product of the remaining factors.
        let corpus = tiny_corpus();
        let mut cfg = ModelConfig::new(2);
        cfg.beta = 1e12;
        let mut s = Sampler::init(&corpus, cfg.clone(), 17).unwrap();
        s.sweep();
        let old = s.remove_unit(0, 1);
        let cond = s.conditional(0, 1);

        let counts = s.counts();
        let unit = corpus.trajectories[0].units[1];
        let eta_sum = cfg.eta * 2.0;
        let gamma_sum = cfg.gamma * 2.0;
        let mut expect = vec![0.0; 2];
        for k in 0..2 {
            let n_k = counts.factor_total(k) as f64;
            expect[k] = (counts.n_ko(k, unit.obj as usize) as f64 + cfg.eta) / (n_k + eta_sum)
                * ((counts.n_kt(k, unit.bin as usize) as f64 + cfg.gamma) / (n_k + gamma_sum))
                * (counts.n_mk(0, k) as f64 + cfg.alpha[k]);
        }
        let total: f64 = expect.iter().sum();
        for (c, e) in cond.iter().zip(&expect) {
            assert!((c - e / total).abs() < 1e-6, "{c} vs {}", e / total);
        }
        s.add_unit(0, 1, old);
    }

    #[test]
    fn sequence_only_ablation_drops_other_factors() {
        let corpus = tiny_corpus();
        let mut cfg = ModelConfig::new(2);
        cfg.components = Components::sequence_only();
        let mut s = Sampler::init(&corpus, cfg.clone(), 19).unwrap();
        s.sweep();
        let old = s.remove_unit(1, 2);
        let cond = s.conditional(1, 2);

        let counts = s.counts();
        let unit = corpus.trajectories[1].units[2];
        let beta_sum = cfg.beta * 3.0;
        let mut expect = vec![0.0; 2];
        for k in 0..2 {
            let n_k = counts.factor_total(k) as f64;
            expect[k] = (counts.n_ks(k, unit.seq as usize) as f64 + cfg.beta) / (n_k + beta_sum)
                * (counts.n_mk(1, k) as f64 + cfg.alpha[k]);
        }
        let total: f64 = expect.iter().sum();
        for (c, e) in cond.iter().zip(&expect) {
            assert!((c - e / total).abs() < 1e-12);
        }
        s.add_unit(1, 2, old);
    }

    #[test]
    fn train_without_sweeps_returns_init_estimate() {
        let corpus = tiny_corpus();
        let cfg = ModelConfig::new(2);
        let (params, sampler) = train(&corpus, &cfg, 0, 1, 23).unwrap();
        let direct = estimate_params(sampler.counts(), &cfg);
        assert_eq!(params, direct);
        assert_eq!(sampler.iteration(), 0);
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = tiny_corpus();
        let cfg = ModelConfig::new(2);
        let (a, _) = train(&corpus, &cfg, 30, 1, 101).unwrap();
        let (b, _) = train(&corpus, &cfg, 30, 1, 101).unwrap();
        assert_eq!(a, b);
        let (avg_a, _) = train(&corpus, &cfg, 30, 5, 101).unwrap();
        let (avg_b, _) = train(&corpus, &cfg, 30, 5, 101).unwrap();
        assert_eq!(avg_a, avg_b);
        assert_ne!(a.theta, avg_a.theta);
    }

    #[test]
    fn fold_in_prior_mean_on_empty_or_unknown_prefix() {
        let corpus = tiny_corpus();
        let cfg = ModelConfig::new(2).with_symmetric_alpha(0.5);
        let counts = counts_from_assignments(&corpus, 2, &[vec![0, 0, 1], vec![1, 1, 0]]);
        let empty = fold_in(&[], FoldInGlobals::Counts(&counts), &cfg, 20, 1);
        assert!(empty.prior_fallback);
        assert_eq!(empty.theta, vec![0.5, 0.5]);

        let unknown = [Unit {
            seq: UNKNOWN_SEQ,
            obj: 0,
            bin: 0,
        }];
        let f = fold_in(&unknown, FoldInGlobals::Counts(&counts), &cfg, 20, 1);
        assert!(f.prior_fallback);
        assert_eq!(f.theta, vec![0.5, 0.5]);
    }

    #[test]
    fn fold_in_leaves_global_tables_untouched() {
        let corpus = tiny_corpus();
        let cfg = ModelConfig::new(2);
        let counts = counts_from_assignments(&corpus, 2, &[vec![0, 0, 1], vec![1, 1, 0]]);
        let snapshot = counts.clone();
        let units = [Unit { seq: 0, obj: 0, bin: 0 }, Unit { seq: 1, obj: 0, bin: 1 }];
        let f = fold_in(&units, FoldInGlobals::Counts(&counts), &cfg, 20, 3);
        assert!(!f.prior_fallback);
        assert_eq!(counts, snapshot);
        let sum: f64 = f.theta.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fold_in_is_deterministic() {
        let corpus = tiny_corpus();
        let cfg = ModelConfig::new(2);
        let counts = counts_from_assignments(&corpus, 2, &[vec![0, 0, 1], vec![1, 1, 0]]);
        let units = [Unit { seq: 2, obj: 1, bin: 1 }];
        let a = fold_in(&units, FoldInGlobals::Counts(&counts), &cfg, 20, 9);
        let b = fold_in(&units, FoldInGlobals::Counts(&counts), &cfg, 20, 9);
        assert_eq!(a, b);
    }
}
