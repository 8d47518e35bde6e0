//! Strategy-level maths: banks of identical loop sources combined by picking
//! the freshest heralded photon, and pump-power optimisation.

mod optimize;

pub use optimize::{
    optimize_constant, optimize_schedule, NbarBounds, ObjectiveKind, OptimizationResult,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OutcomeDistribution;

/// Outcome distribution of `m` sources combined by the freshest-photon rule:
/// entry `u < t` is "the freshest herald across all sources is `u` loops old",
/// entry `t` is "no source heralded".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelDistribution {
    pub source_count: usize,
    pub probabilities: Vec<f64>,
}

impl ParallelDistribution {
    pub fn time_bins(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn no_herald(&self) -> f64 {
        self.probabilities[self.time_bins()]
    }
}

fn check_single_shot(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid(
            "single_shot",
            format!("{s} is not in [0, 1]"),
        ));
    }
    Ok(())
}

fn check_time_bins(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::invalid("time_bins", "must be at least 1"));
    }
    Ok(())
}

/// Single-source outcome distribution for a constant heralding probability.
fn geometric_outcomes(s: f64, t: usize) -> OutcomeDistribution {
    let mut probabilities: Vec<f64> = (0..t).map(|l| s * (1.0 - s).powi(l as i32)).collect();
    probabilities.push((1.0 - s).powi(t as i32));
    OutcomeDistribution::from_probabilities(probabilities).expect("valid probabilities")
}

/// Closed form for two sources: `p₂(j) = S(1−S)^{2j}(2−S)`, `p₂(t) = (1−S)^{2t}`.
pub fn two_source_distribution(s: f64, t: usize) -> Result<ParallelDistribution> {
    check_single_shot(s)?;
    check_time_bins(t)?;
    let miss = 1.0 - s;
    let mut probabilities: Vec<f64> = (0..t)
        .map(|j| s * miss.powi(2 * j as i32) * (2.0 - s))
        .collect();
    probabilities.push(miss.powi(2 * t as i32));
    Ok(ParallelDistribution {
        source_count: 2,
        probabilities,
    })
}

/// Distribution for `m` identical constant-pump sources with single-shot
/// heralding probability `s`.
pub fn m_source_distribution(s: f64, t: usize, m: usize) -> Result<ParallelDistribution> {
    check_single_shot(s)?;
    check_time_bins(t)?;
    parallel_from_distribution(&geometric_outcomes(s, t), m)
}

/// Freshest-of-`m` distribution for `m` independent copies of `single`.
///
/// The minimum of independent outcome indices satisfies
/// `P(min ≥ u) = P(l ≥ u)^m`, so each entry is a difference of powered
/// survival functions.
pub fn parallel_from_distribution(
    single: &OutcomeDistribution,
    m: usize,
) -> Result<ParallelDistribution> {
    if m == 0 {
        return Err(Error::invalid("source_count", "must be at least 1"));
    }
    let t = single.time_bins();
    let powered: Vec<f64> = (0..=t + 1)
        .map(|u| single.survival(u).min(1.0).powi(m as i32))
        .collect();
    let probabilities = (0..=t)
        .map(|u| (powered[u] - powered[u + 1]).max(0.0))
        .collect();
    Ok(ParallelDistribution {
        source_count: m,
        probabilities,
    })
}

/// Largest number of joint outcomes [`m_source_distribution_oracle`] enumerates.
pub const ORACLE_MAX_OUTCOMES: usize = 10_000_000;

/// Freshest-of-`m` distribution by summing over every joint outcome
/// `(j_1, …, j_m)` with the indicator `min(j) = u`.
pub fn m_source_distribution_oracle(s: f64, t: usize, m: usize) -> Result<ParallelDistribution> {
    check_single_shot(s)?;
    check_time_bins(t)?;
    if m == 0 {
        return Err(Error::invalid("source_count", "must be at least 1"));
    }
    let outcomes = (t + 1)
        .checked_pow(m as u32)
        .filter(|&n| n <= ORACLE_MAX_OUTCOMES)
        .ok_or_else(|| Error::invalid("source_count", "too many joint outcomes to enumerate"))?;
    let single = geometric_outcomes(s, t);
    let p = single.probabilities();
    let mut probabilities = vec![0.0; t + 1];
    let mut digits = vec![0usize; m];
    for _ in 0..outcomes {
        let u = *digits.iter().min().expect("m >= 1");
        probabilities[u] += digits.iter().map(|&j| p[j]).product::<f64>();
        // odometer increment in base t+1
        for digit in digits.iter_mut() {
            *digit += 1;
            if *digit <= t {
                break;
            }
            *digit = 0;
        }
    }
    Ok(ParallelDistribution {
        source_count: m,
        probabilities,
    })
}

/// `Σ_u p_m(u)·F(u)` over the heralded outcomes.
pub fn parallel_unconditional_fidelity(
    dist: &ParallelDistribution,
    per_loop_fidelity: &[f64],
) -> Result<f64> {
    let t = dist.time_bins();
    if per_loop_fidelity.len() < t {
        return Err(Error::invalid(
            "per_loop_fidelity",
            format!("{} entries for {} time-bins", per_loop_fidelity.len(), t),
        ));
    }
    Ok(dist.probabilities[..t]
        .iter()
        .zip(per_loop_fidelity)
        .map(|(p, f)| p * f)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{
        fidelity_after_loops, herald_single_shot, outcome_distribution, unconditional_fidelity,
    };
    use crate::model::{DetectorKind, DetectorModel, LossModel, ProtocolConfig, SourceModel};
    use proptest::prelude::*;

    /// Brute force over the `2^{2t}` joint herald patterns of two sources.
    fn two_source_patterns(s: f64, t: usize) -> Vec<f64> {
        let mut out = vec![0.0; t + 1];
        for pattern in 0u32..(1 << (2 * t)) {
            let weight: f64 = (0..2 * t)
                .map(|bit| if pattern >> bit & 1 == 1 { s } else { 1.0 - s })
                .product();
            let freshest = |bits: u32| {
                if bits == 0 {
                    t
                } else {
                    bits.trailing_zeros() as usize
                }
            };
            let mask = (1u32 << t) - 1;
            let u = freshest(pattern & mask).min(freshest(pattern >> t));
            out[u] += weight;
        }
        out
    }

    #[test]
    fn two_source_examples() {
        let certain = two_source_distribution(1.0, 5).unwrap();
        assert_eq!(certain.probabilities, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let half = two_source_distribution(0.5, 2).unwrap();
        assert_eq!(half.probabilities, vec![0.75, 0.1875, 0.0625]);
        let enumerated = two_source_patterns(0.5, 2);
        for (a, b) in half.probabilities.iter().zip(&enumerated) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((half.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-15);

        let never = two_source_distribution(0.0, 3).unwrap();
        assert_eq!(never.probabilities, vec![0.0, 0.0, 0.0, 1.0]);
        assert!(two_source_distribution(1.5, 3).is_err());
    }

    #[test]
    fn one_source_is_outcome_distribution() {
        let det = DetectorModel::new(DetectorKind::Bucket, 0.9).unwrap();
        let cfg = ProtocolConfig::constant(0.3, 6, det, LossModel::lossless()).unwrap();
        let s = herald_single_shot(&cfg.source_at(0), &det);
        let single = outcome_distribution(&cfg);
        let m1 = m_source_distribution(s, 6, 1).unwrap();
        for (a, b) in m1.probabilities.iter().zip(single.probabilities()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn survival_route_matches_enumeration() {
        for &s in &[0.0, 0.05, 0.3, 0.77, 1.0] {
            for t in 1..=4 {
                for m in 1..=3 {
                    let fast = m_source_distribution(s, t, m).unwrap();
                    let slow = m_source_distribution_oracle(s, t, m).unwrap();
                    for (a, b) in fast.probabilities.iter().zip(&slow.probabilities) {
                        assert!((a - b).abs() < 1e-12, "s={s} t={t} m={m}");
                    }
                }
            }
        }
        assert!(m_source_distribution_oracle(0.5, 50, 8).is_err());
    }

    #[test]
    fn four_sources_shift_mass_to_fresh_bins() {
        let det = DetectorModel::new(DetectorKind::Bucket, 0.95).unwrap();
        let s = herald_single_shot(&SourceModel::new(0.1).unwrap(), &det);
        let dists: Vec<_> = (1..=4)
            .map(|m| m_source_distribution(s, 10, m).unwrap())
            .collect();
        for pair in dists.windows(2) {
            assert!(pair[1].no_herald() < pair[0].no_herald());
            assert!(pair[1].probabilities[0] > pair[0].probabilities[0]);
        }
        assert!((dists[3].no_herald() - (1.0 - s).powi(40)).abs() < 1e-14);
    }

    #[test]
    fn single_source_fidelity_matches_unconditional() {
        let det = DetectorModel::new(DetectorKind::NumberResolved, 0.9).unwrap();
        let loss = LossModel::new(0.93, 0.99).unwrap();
        let cfg = ProtocolConfig::constant(0.7, 8, det, loss).unwrap();
        let source = cfg.source_at(0);
        let s = herald_single_shot(&source, &det);
        let per_loop: Vec<f64> = (0..8)
            .map(|l| fidelity_after_loops(&source, &det, &loss, l).unwrap())
            .collect();
        let dist = m_source_distribution(s, 8, 1).unwrap();
        let f = parallel_unconditional_fidelity(&dist, &per_loop).unwrap();
        assert!((f - unconditional_fidelity(&cfg)).abs() < 1e-14);
        assert!(parallel_unconditional_fidelity(&dist, &per_loop[..3]).is_err());
    }

    #[test]
    fn lossy_bucket_regime_where_parallel_sources_hurt() {
        let fbar = |nbar: f64, eta: f64, m: usize| {
            let det = DetectorModel::new(DetectorKind::Bucket, eta).unwrap();
            let loss = LossModel::new(eta, eta).unwrap();
            let source = SourceModel::new(nbar).unwrap();
            let per_loop: Vec<f64> = (0..5)
                .map(|l| fidelity_after_loops(&source, &det, &loss, l).unwrap())
                .collect();
            let dist = m_source_distribution(herald_single_shot(&source, &det), 5, m).unwrap();
            parallel_unconditional_fidelity(&dist, &per_loop).unwrap()
        };
        let worse = (1..=60)
            .flat_map(|i| (0..=20).map(move |j| (i as f64 * 0.05, 0.5 + j as f64 * 0.025)))
            .any(|(nbar, eta)| fbar(nbar, eta, 4) < fbar(nbar, eta, 1));
        assert!(worse);
    }

    proptest! {
        #[test]
        fn two_sources_match_closed_form(s in 0.0f64..=1.0, t in 1usize..40) {
            let closed = two_source_distribution(s, t).unwrap();
            let general = m_source_distribution(s, t, 2).unwrap();
            for (a, b) in closed.probabilities.iter().zip(&general.probabilities) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn parallel_distribution_monotone_in_m(s in 0.0f64..=1.0, t in 1usize..30, m in 1usize..8) {
            let fewer = m_source_distribution(s, t, m).unwrap();
            let more = m_source_distribution(s, t, m + 1).unwrap();
            prop_assert!((more.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(more.no_herald() <= fewer.no_herald());
            prop_assert!(more.probabilities[0] >= fewer.probabilities[0]);
            prop_assert!((more.no_herald() - (1.0 - s).powi(((m + 1) * t) as i32)).abs() < 1e-12);
        }
    }
}
