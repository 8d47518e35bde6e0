//! Event-level Monte Carlo of the loop protocol.
//!
//! Each trial fires the pump `t` times, samples a thermal photon number per
//! bin, samples the herald detector, and keeps the most recently heralded bin
//! in the loop. The stored photons are thinned once by `τ_l` at extraction.
//!
//! Randomness comes from ChaCha8 substreams keyed by `(seed, trial, source)`,
//! so a summary depends only on its inputs and never on how trials are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    transmission, DetectorKind, DetectorModel, OutcomeDistribution, ProtocolConfig, SourceModel,
};

/// Words of keystream reserved for each source within a trial's stream.
const SOURCE_STRIDE: u128 = 1 << 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Loops traversed by the photon kept in memory; `None` if nothing heralded.
    pub herald_loop_index: Option<usize>,
    pub photons_out: usize,
    pub heralded: bool,
}

/// A Monte Carlo estimate of a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_counts(successes: u64, total: u64) -> Option<Self> {
        if total == 0 {
            return None;
        }
        let value = successes as f64 / total as f64;
        Some(Self {
            value,
            std_error: (value * (1.0 - value) / total as f64).sqrt(),
        })
    }

    /// Distance from `expected` in units of the standard error.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = (self.value - expected).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub trials: u64,
    pub sources: usize,
    pub seed: u64,
    pub herald_rate: Estimate,
    /// `None` when no trial heralded.
    pub conditional_fidelity: Option<Estimate>,
    pub unconditional_fidelity: Estimate,
    /// Empirical frequency of each outcome index, no-herald last.
    pub loop_histogram: OutcomeDistribution,
    pub loop_counts: Vec<u64>,
    pub heralded_trials: u64,
    pub single_photon_trials: u64,
}

impl SimulationSummary {
    pub fn conditional_fidelity(&self) -> Result<Estimate> {
        self.conditional_fidelity
            .ok_or(Error::UndefinedConditional("a heralded trial"))
    }

    /// Standard error of histogram bin `u` around a reference probability.
    ///
    /// Uses the larger of the reference and the observed frequency so bins
    /// with vanishing reference mass still get a finite band.
    pub fn histogram_std_error(&self, u: usize, reference: f64) -> f64 {
        let p = reference.max(self.loop_histogram.probabilities()[u]);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Random stream for one source in one trial.
pub fn trial_stream(seed: u64, trial: u64, source: usize) -> ChaCha8Rng {
    substream(&ChaCha8Rng::seed_from_u64(seed), trial, source)
}

fn substream(base: &ChaCha8Rng, trial: u64, source: usize) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial);
    rng.set_word_pos(source as u128 * SOURCE_STRIDE);
    rng
}

/// Thermal photon number by inverting the geometric CDF `P(N ≥ n) = q^n`.
pub fn sample_thermal<R: Rng + ?Sized>(source: &SourceModel, rng: &mut R) -> usize {
    let q = source.ratio();
    // uniform on (0, 1]
    let u = 1.0 - rng.random::<f64>();
    if q <= 0.0 {
        return 0;
    }
    (u.ln() / q.ln()).floor() as usize
}

/// Number of photons surviving a channel of transmission `p`.
pub fn sample_thinning<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> usize {
    if n == 0 {
        return 0;
    }
    Binomial::new(n as u64, p.clamp(0.0, 1.0))
        .expect("probability in range")
        .sample(rng) as usize
}

pub fn sample_herald<R: Rng + ?Sized>(det: &DetectorModel, n: usize, rng: &mut R) -> bool {
    match det.kind() {
        DetectorKind::NumberResolved => sample_thinning(n, det.efficiency(), rng) == 1,
        DetectorKind::Bucket => rng.random_bool(det.herald_prob(n)),
    }
}

/// Runs the pulse train and returns `(loops, photons)` of the bin left in memory.
fn run_train<R: Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> Option<(usize, usize)> {
    let mut stored = None;
    for l in (0..config.time_bins()).rev() {
        let n = sample_thermal(&config.source_at(l), rng);
        if sample_herald(config.detector(), n, rng) {
            // the previous occupant is switched out
            stored = Some((l, n));
        }
    }
    stored
}

fn extract<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    stored: Option<(usize, usize)>,
    rng: &mut R,
) -> TrialOutcome {
    match stored {
        Some((l, n)) => TrialOutcome {
            herald_loop_index: Some(l),
            photons_out: sample_thinning(n, transmission(config.loss(), l), rng),
            heralded: true,
        },
        None => TrialOutcome {
            herald_loop_index: None,
            photons_out: 0,
            heralded: false,
        },
    }
}

/// Simulates one run of the protocol.
pub fn simulate_trial<R: Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> TrialOutcome {
    let stored = run_train(config, rng);
    extract(config, stored, rng)
}

#[derive(Debug, Clone, Default)]
struct Tally {
    heralded: u64,
    single: u64,
    loops: Vec<u64>,
}

impl Tally {
    fn new(time_bins: usize) -> Self {
        Self {
            heralded: 0,
            single: 0,
            loops: vec![0; time_bins + 1],
        }
    }

    fn record(&mut self, outcome: &TrialOutcome, time_bins: usize) {
        self.loops[outcome.herald_loop_index.unwrap_or(time_bins)] += 1;
        if outcome.heralded {
            self.heralded += 1;
            if outcome.photons_out == 1 {
                self.single += 1;
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.heralded += other.heralded;
        self.single += other.single;
        for (a, b) in self.loops.iter_mut().zip(other.loops) {
            *a += b;
        }
        self
    }

    fn summarize(self, trials: u64, sources: usize, seed: u64) -> SimulationSummary {
        let histogram = self
            .loops
            .iter()
            .map(|&count| count as f64 / trials as f64)
            .collect();
        SimulationSummary {
            trials,
            sources,
            seed,
            herald_rate: Estimate::from_counts(self.heralded, trials).expect("trials >= 1"),
            conditional_fidelity: Estimate::from_counts(self.single, self.heralded),
            unconditional_fidelity: Estimate::from_counts(self.single, trials)
                .expect("trials >= 1"),
            loop_histogram: OutcomeDistribution::from_probabilities(histogram)
                .expect("frequencies are valid"),
            loop_counts: self.loops,
            heralded_trials: self.heralded,
            single_photon_trials: self.single,
        }
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    Ok(())
}

/// Runs `trials` independent trials in parallel and aggregates the counts.
pub fn run_simulation(
    config: &ProtocolConfig,
    trials: u64,
    seed: u64,
) -> Result<SimulationSummary> {
    check_trials(trials)?;
    let t = config.time_bins();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let tally = (0..trials)
        .into_par_iter()
        .fold(
            || Tally::new(t),
            |mut tally, trial| {
                let mut rng = substream(&base, trial, 0);
                tally.record(&simulate_trial(config, &mut rng), t);
                tally
            },
        )
        .reduce(|| Tally::new(t), Tally::merge);
    Ok(tally.summarize(trials, 1, seed))
}

/// Runs `m` loop sources side by side and outputs the freshest heralded photon.
///
/// Ties between sources heralding in the same bin go to the lowest source
/// index; tied photons have identical loss so the choice does not bias the
/// fidelity.
pub fn simulate_parallel_sources(
    configs: &[ProtocolConfig],
    trials: u64,
    seed: u64,
) -> Result<SimulationSummary> {
    check_trials(trials)?;
    let first = configs
        .first()
        .ok_or_else(|| Error::invalid("configs", "need at least one source"))?;
    let t = first.time_bins();
    if configs.iter().any(|c| c.time_bins() != t) {
        return Err(Error::invalid(
            "configs",
            "all sources must share the same time-bin count",
        ));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let tally = (0..trials)
        .into_par_iter()
        .fold(
            || Tally::new(t),
            |mut tally, trial| {
                let mut winner: Option<(usize, usize, usize, ChaCha8Rng)> = None;
                for (index, config) in configs.iter().enumerate() {
                    let mut rng = substream(&base, trial, index);
                    if let Some((l, n)) = run_train(config, &mut rng) {
                        if winner.as_ref().is_none_or(|w| l < w.1) {
                            winner = Some((index, l, n, rng));
                        }
                    }
                }
                let outcome = match winner {
                    Some((index, l, n, mut rng)) => {
                        extract(&configs[index], Some((l, n)), &mut rng)
                    }
                    None => extract(first, None, &mut substream(&base, trial, 0)),
                };
                tally.record(&outcome, t);
                tally
            },
        )
        .reduce(|| Tally::new(t), Tally::merge);
    Ok(tally.summarize(trials, configs.len(), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LossModel, PumpSchedule};

    fn config(kind: DetectorKind, nbar: f64, eta: f64, t: usize) -> ProtocolConfig {
        ProtocolConfig::constant(
            nbar,
            t,
            DetectorModel::new(kind, eta).unwrap(),
            LossModel::new(eta, eta).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn lossless_resolved_always_outputs_one_photon() {
        let cfg = config(DetectorKind::NumberResolved, 0.8, 1.0, 6);
        let mut rng = trial_stream(3, 0, 0);
        for _ in 0..5_000 {
            let out = simulate_trial(&cfg, &mut rng);
            if out.heralded {
                assert_eq!(out.photons_out, 1);
            }
        }
        let summary = run_simulation(&cfg, 20_000, 11).unwrap();
        assert_eq!(summary.conditional_fidelity().unwrap().value, 1.0);
    }

    #[test]
    fn vacuum_never_heralds() {
        let cfg = config(DetectorKind::Bucket, 0.0, 0.9, 4);
        let summary = run_simulation(&cfg, 2_000, 0).unwrap();
        assert_eq!(summary.herald_rate.value, 0.0);
        assert_eq!(summary.unconditional_fidelity.value, 0.0);
        assert!(matches!(
            summary.conditional_fidelity(),
            Err(Error::UndefinedConditional(_))
        ));
        assert_eq!(summary.loop_histogram.no_herald(), 1.0);
    }

    #[test]
    fn trial_outcome_invariants() {
        let cfg = ProtocolConfig::new(
            5,
            PumpSchedule::PerBin(vec![0.1, 2.0, 0.0, 0.7, 1.2]),
            DetectorModel::new(DetectorKind::Bucket, 0.7).unwrap(),
            LossModel::new(0.9, 0.95).unwrap(),
        )
        .unwrap();
        for trial in 0..2_000 {
            let out = simulate_trial(&cfg, &mut trial_stream(5, trial, 0));
            match out.herald_loop_index {
                Some(l) => {
                    assert!(out.heralded);
                    assert!(l < 5);
                    assert_ne!(l, 2, "vacuum bin heralded");
                }
                None => {
                    assert!(!out.heralded);
                    assert_eq!(out.photons_out, 0);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_summary() {
        let cfg = config(DetectorKind::Bucket, 0.4, 0.9, 8);
        let a = run_simulation(&cfg, 30_000, 7).unwrap();
        let b = run_simulation(&cfg, 30_000, 7).unwrap();
        assert_eq!(a, b);
        let c = run_simulation(&cfg, 30_000, 8).unwrap();
        assert_ne!(a.loop_counts, c.loop_counts);
    }

    #[test]
    fn summary_independent_of_thread_count() {
        let cfg = config(DetectorKind::NumberResolved, 0.6, 0.9, 5);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = single.install(|| run_simulation(&cfg, 20_000, 42).unwrap());
        let b = many.install(|| run_simulation(&cfg, 20_000, 42).unwrap());
        assert_eq!(a, b);
        let configs = vec![cfg.clone(), cfg.clone(), cfg];
        let a = single.install(|| simulate_parallel_sources(&configs, 10_000, 9).unwrap());
        let b = many.install(|| simulate_parallel_sources(&configs, 10_000, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_frequencies_sum_to_one() {
        let cfg = config(DetectorKind::Bucket, 0.3, 0.95, 7);
        let summary = run_simulation(&cfg, 12_345, 1).unwrap();
        assert_eq!(summary.loop_counts.iter().sum::<u64>(), 12_345);
        let total: f64 = summary.loop_histogram.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_parallel_source_matches_plain_run() {
        let cfg = config(DetectorKind::Bucket, 0.5, 0.9, 4);
        let plain = run_simulation(&cfg, 10_000, 21).unwrap();
        let parallel = simulate_parallel_sources(std::slice::from_ref(&cfg), 10_000, 21).unwrap();
        assert_eq!(plain, parallel);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = config(DetectorKind::Bucket, 0.5, 0.9, 4);
        assert!(run_simulation(&cfg, 0, 0).is_err());
        assert!(simulate_parallel_sources(&[], 10, 0).is_err());
        let other = config(DetectorKind::Bucket, 0.5, 0.9, 5);
        assert!(simulate_parallel_sources(&[cfg, other], 10, 0).is_err());
    }

    #[test]
    fn thermal_sampler_mean() {
        let source = SourceModel::new(1.5).unwrap();
        let mut rng = trial_stream(0, 0, 0);
        let n = 200_000;
        let mean = (0..n)
            .map(|_| sample_thermal(&source, &mut rng) as f64)
            .sum::<f64>()
            / n as f64;
        // variance of a thermal mode is n̄(n̄+1)
        let se = (1.5f64 * 2.5 / n as f64).sqrt();
        assert!((mean - 1.5).abs() < 4.0 * se, "{mean}");
        let zero = SourceModel::new(0.0).unwrap();
        assert_eq!(sample_thermal(&zero, &mut rng), 0);
    }
}
