//! Closed-form heralding probabilities and output fidelities of the loop source.
//!
//! Every closed form has a counterpart with an `_oracle` suffix that evaluates
//! the defining photon-number series directly, truncated per
//! [`SourceModel::truncation_limit`]. The oracles share no algebra with the
//! closed forms and exist so tests (here and downstream) can cross-check them.
//!
//! Time-bins are indexed in reverse chronological order throughout: `l = 0`
//! is the final bin of the train and a photon heralded there traverses no loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    loss_thinning_pmf, thermal_pmf, transmission, DetectorKind, DetectorModel, LossModel,
    OutcomeDistribution, ProtocolConfig, SourceModel,
};

/// Heralding probabilities of one source/detector pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldStats {
    /// Probability that one pump pulse heralds.
    pub single_shot: f64,
    /// Probability that at least one of `t` pulses heralds.
    pub train: f64,
    pub detector_kind: DetectorKind,
}

/// Fidelities of the output bin with the single-photon state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Average over runs with at least one herald; `None` when no herald is possible.
    pub conditional: Option<f64>,
    /// Average over all runs, a failed run counting as zero.
    pub unconditional: f64,
    /// Fidelity after `l` loops for each bin; `None` for bins that can never herald.
    pub per_loop: Vec<Option<f64>>,
    /// Probability that at least one bin heralds.
    pub train_herald_probability: f64,
}

/// Probability that a single pulse heralds.
pub fn herald_single_shot(source: &SourceModel, det: &DetectorModel) -> f64 {
    let x = source.mean_photon_number() * det.efficiency();
    match det.kind() {
        DetectorKind::NumberResolved => x / ((1.0 + x) * (1.0 + x)),
        DetectorKind::Bucket => x / (1.0 + x),
    }
}

pub fn herald_single_shot_oracle(source: &SourceModel, det: &DetectorModel) -> f64 {
    (1..=source.truncation_limit())
        .map(|n| det.herald_prob(n) * thermal_pmf(source, n))
        .sum()
}

/// Probability that at least one of `t` identical pulses heralds.
pub fn herald_train(source: &SourceModel, det: &DetectorModel, t: usize) -> f64 {
    at_least_once(herald_single_shot(source, det), t)
}

pub fn herald_stats(source: &SourceModel, det: &DetectorModel, t: usize) -> HeraldStats {
    let single_shot = herald_single_shot(source, det);
    HeraldStats {
        single_shot,
        train: at_least_once(single_shot, t),
        detector_kind: det.kind(),
    }
}

/// `1 − (1 − p)^t` without cancellation for small `p`.
fn at_least_once(p: f64, t: usize) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    -(t as f64 * (-p).ln_1p()).exp_m1()
}

/// `(1 − (1 − η)^n)/η`, accurate for small `η`.
fn click_over_efficiency(eta: f64, n: usize) -> f64 {
    -(n as f64 * (-eta).ln_1p()).exp_m1() / eta
}

/// Probability that the heralded mode holds `n` photons given a herald.
pub fn prep_pmf(source: &SourceModel, det: &DetectorModel, n: usize) -> Result<f64> {
    if herald_single_shot(source, det) <= 0.0 {
        return Err(Error::UndefinedConditional("heralding"));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let nbar = source.mean_photon_number();
    let eta = det.efficiency();
    let x = 1.0 + eta * nbar;
    let grow = 1.0 + nbar;
    let p = match det.kind() {
        DetectorKind::NumberResolved => {
            let step = (nbar - eta * nbar) / grow;
            n as f64 * step.powi(n as i32 - 1) * x * x / (grow * grow)
        }
        DetectorKind::Bucket => {
            let step = nbar / grow;
            step.powi(n as i32 - 1) * click_over_efficiency(eta, n) * x / (grow * grow)
        }
    };
    Ok(p)
}

pub fn prep_pmf_oracle(source: &SourceModel, det: &DetectorModel, n: usize) -> Result<f64> {
    let norm = herald_single_shot_oracle(source, det);
    if norm <= 0.0 {
        return Err(Error::UndefinedConditional("heralding"));
    }
    Ok(det.herald_prob(n) * thermal_pmf(source, n) / norm)
}

/// Fidelity with `|1⟩` of a heralded photon extracted after `loops` loops.
pub fn fidelity_after_loops(
    source: &SourceModel,
    det: &DetectorModel,
    loss: &LossModel,
    loops: usize,
) -> Result<f64> {
    if herald_single_shot(source, det) <= 0.0 {
        return Err(Error::UndefinedConditional("heralding"));
    }
    Ok(fidelity_at_transmission(
        source.mean_photon_number(),
        det.efficiency(),
        det.kind(),
        transmission(loss, loops),
    ))
}

fn fidelity_at_transmission(nbar: f64, eta: f64, kind: DetectorKind, tau: f64) -> f64 {
    let miss = 1.0 - eta;
    let x = 1.0 + nbar * eta;
    match kind {
        DetectorKind::NumberResolved => {
            let excess = nbar * miss * (1.0 - tau);
            let denom = 1.0 + nbar - excess;
            tau * x * x * (1.0 + nbar + excess) / (denom * denom * denom)
        }
        DetectorKind::Bucket => {
            let numer =
                1.0 + 2.0 * nbar + nbar * nbar * eta + nbar * nbar * tau * miss * (2.0 - tau);
            let a = 1.0 + nbar * tau;
            let b = 1.0 + nbar * (miss * tau + eta);
            tau * x * numer / (a * a * b * b)
        }
    }
}

pub fn fidelity_after_loops_oracle(
    source: &SourceModel,
    det: &DetectorModel,
    loss: &LossModel,
    loops: usize,
) -> Result<f64> {
    let tau = transmission(loss, loops);
    let mut total = 0.0;
    for n in 1..=source.truncation_limit() {
        total += prep_pmf_oracle(source, det, n)? * loss_thinning_pmf(n, tau, 1);
    }
    Ok(total)
}

/// Distribution of the switching outcome under the keep-the-most-recent-herald
/// strategy.
pub fn outcome_distribution(config: &ProtocolConfig) -> OutcomeDistribution {
    let t = config.time_bins();
    let det = config.detector();
    let mut probabilities = Vec::with_capacity(t + 1);
    let mut survive = 1.0;
    for l in 0..t {
        let s = herald_single_shot(&config.source_at(l), det);
        probabilities.push(s * survive);
        survive *= 1.0 - s;
    }
    probabilities.push(survive);
    OutcomeDistribution::from_probabilities(probabilities).expect("probabilities are valid")
}

/// Largest train enumerated by [`outcome_distribution_oracle`].
pub const ENUMERATION_MAX_BINS: usize = 20;

/// Outcome distribution by enumerating all `2^t` herald/no-herald patterns.
pub fn outcome_distribution_oracle(config: &ProtocolConfig) -> Result<OutcomeDistribution> {
    let t = config.time_bins();
    if t > ENUMERATION_MAX_BINS {
        return Err(Error::invalid(
            "time_bins",
            format!("enumeration limited to {ENUMERATION_MAX_BINS} bins"),
        ));
    }
    let singles: Vec<f64> = (0..t)
        .map(|l| herald_single_shot(&config.source_at(l), config.detector()))
        .collect();
    let mut probabilities = vec![0.0; t + 1];
    for pattern in 0u32..(1 << t) {
        // bit l set: bin l heralded
        let weight: f64 = (0..t)
            .map(|l| {
                if pattern >> l & 1 == 1 {
                    singles[l]
                } else {
                    1.0 - singles[l]
                }
            })
            .product();
        let index = if pattern == 0 {
            t
        } else {
            pattern.trailing_zeros() as usize
        };
        probabilities[index] += weight;
    }
    OutcomeDistribution::from_probabilities(probabilities)
}

/// Per-loop fidelities, `None` where the bin's source can never herald.
pub fn per_loop_fidelities(config: &ProtocolConfig) -> Vec<Option<f64>> {
    (0..config.time_bins())
        .map(|l| {
            fidelity_after_loops(&config.source_at(l), config.detector(), config.loss(), l).ok()
        })
        .collect()
}

/// Average output fidelity over runs where at least one bin heralded.
pub fn conditional_fidelity(config: &ProtocolConfig) -> Result<f64> {
    if config.is_constant() {
        let source = config.source_at(0);
        let det = config.detector();
        let s = herald_single_shot(&source, det);
        if s <= 0.0 {
            return Err(Error::UndefinedConditional("a herald in the train"));
        }
        let miss = 1.0 - s;
        let mut weight = 1.0;
        let mut sum = 0.0;
        for l in 0..config.time_bins() {
            sum += fidelity_after_loops(&source, det, config.loss(), l)? * weight;
            weight *= miss;
        }
        Ok(s / at_least_once(s, config.time_bins()) * sum)
    } else {
        let heralds = outcome_distribution(config).herald_probability();
        if heralds <= 0.0 {
            return Err(Error::UndefinedConditional("a herald in the train"));
        }
        Ok(unconditional_fidelity(config) / heralds)
    }
}

/// Average output fidelity over all runs; a run with no herald contributes zero.
pub fn unconditional_fidelity(config: &ProtocolConfig) -> f64 {
    let dist = outcome_distribution(config);
    dist.probabilities()[..config.time_bins()]
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(l, p)| {
            let f = fidelity_after_loops(&config.source_at(l), config.detector(), config.loss(), l)
                .expect("bin with positive herald probability");
            p * f
        })
        .sum()
}

pub fn fidelity_report(config: &ProtocolConfig) -> FidelityReport {
    FidelityReport {
        conditional: conditional_fidelity(config).ok(),
        unconditional: unconditional_fidelity(config),
        per_loop: per_loop_fidelities(config),
        train_herald_probability: outcome_distribution(config).herald_probability(),
    }
}

/// Conditional fidelity when switch and loop are lossless; independent of `t`.
pub fn detector_limited_fidelity(source: &SourceModel, det: &DetectorModel) -> f64 {
    let nbar = source.mean_photon_number();
    let ratio = (1.0 + det.efficiency() * nbar) / (1.0 + nbar);
    match det.kind() {
        DetectorKind::NumberResolved => ratio * ratio,
        DetectorKind::Bucket => ratio / (1.0 + nbar),
    }
}

/// The reference value `η²/n̄` quoted for bucket-detector unconditional
/// fidelity at large `n̄` with all efficiencies equal to `η`.
///
/// The exact large-`n̄` limit of the closed forms is
/// `[1 + (1−η)(2−η)] / (η(2−η)² n̄)`, which coincides with `η²/n̄` only at
/// `η = 1`; see `large_nbar_leading_order`.
pub fn large_nbar_asymptote(eta: f64, nbar: f64) -> f64 {
    eta * eta / nbar
}

/// Leading-order large-`n̄` behaviour of the bucket unconditional fidelity
/// with `η_s = η_f = η_d = η`.
///
/// As `n̄ → ∞` the last bin heralds with certainty, so only `F(0)` at
/// `τ_0 = η` survives.
pub fn large_nbar_leading_order(eta: f64, nbar: f64) -> f64 {
    (1.0 + (1.0 - eta) * (2.0 - eta)) / (eta * (2.0 - eta) * (2.0 - eta) * nbar)
}
