//! Domain types for the loop source and the elementary probability kernels
//! every other module is built from: thermal photon-number statistics,
//! detector response, loop transmission and binomial loss.

use serde::{Deserialize, Serialize};

use crate::error::{check_mean_photon_number, check_probability, Error, Result};

/// Cumulative thermal mass that every truncated photon-number series must reach.
pub const TRUNCATION_MASS: f64 = 1.0 - 1e-12;

/// Lower bound on the number of photon-number terms kept in a truncated series.
pub const MIN_TRUNCATION: usize = 64;

/// Single-mode SPDC source with thermal photon-number statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    mean_photon_number: f64,
}

impl SourceModel {
    pub fn new(mean_photon_number: f64) -> Result<Self> {
        check_mean_photon_number("mean_photon_number", mean_photon_number)?;
        Ok(Self { mean_photon_number })
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.mean_photon_number
    }

    /// Ratio `n̄/(n̄+1)` between successive photon-number probabilities.
    pub fn ratio(&self) -> f64 {
        self.mean_photon_number / (self.mean_photon_number + 1.0)
    }

    /// Largest photon number kept in truncated series over this source.
    ///
    /// Smallest `N` with `Σ_{n≤N} p(n) ≥ 1 − 1e-12`, never below 64. The
    /// cumulative mass up to `N` is `1 − q^{N+1}` with `q = n̄/(n̄+1)`.
    pub fn truncation_limit(&self) -> usize {
        let q = self.ratio();
        if q <= 0.0 {
            return MIN_TRUNCATION;
        }
        let tail = 1.0 - TRUNCATION_MASS;
        let mut n = ((tail.ln() / q.ln()).ceil() as usize).saturating_sub(1);
        // guard against rounding in the logarithms
        while 1.0 - q.powi(n as i32 + 1) < TRUNCATION_MASS {
            n += 1;
        }
        n.max(MIN_TRUNCATION)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Reports the exact number of detected photons; heralds on a count of one.
    #[serde(rename = "resolved")]
    NumberResolved,
    /// On/off detector; heralds on any click.
    Bucket,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 2] = [DetectorKind::NumberResolved, DetectorKind::Bucket];

    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::NumberResolved => "resolved",
            DetectorKind::Bucket => "bucket",
        }
    }

    /// The outcome that counts as a successful herald.
    pub fn herald_outcome(&self) -> Outcome {
        match self {
            DetectorKind::NumberResolved => Outcome::One,
            DetectorKind::Bucket => Outcome::Click,
        }
    }
}

/// Detection outcomes tracked by the heralding logic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
    Click,
    NoClick,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    kind: DetectorKind,
    efficiency: f64,
}

impl DetectorModel {
    pub fn new(kind: DetectorKind, efficiency: f64) -> Result<Self> {
        check_probability("detector efficiency", efficiency)?;
        Ok(Self { kind, efficiency })
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Probability that this detector heralds given `n` incident photons.
    pub fn herald_prob(&self, n: usize) -> f64 {
        detect_prob(self, self.kind.herald_outcome(), n).expect("herald outcome matches kind")
    }
}

/// Switch and fibre-loop efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    switch_efficiency: f64,
    fibre_efficiency: f64,
}

impl LossModel {
    pub fn new(switch_efficiency: f64, fibre_efficiency: f64) -> Result<Self> {
        check_probability("switch efficiency", switch_efficiency)?;
        check_probability("fibre efficiency", fibre_efficiency)?;
        Ok(Self {
            switch_efficiency,
            fibre_efficiency,
        })
    }

    pub fn lossless() -> Self {
        Self {
            switch_efficiency: 1.0,
            fibre_efficiency: 1.0,
        }
    }

    pub fn switch_efficiency(&self) -> f64 {
        self.switch_efficiency
    }

    pub fn fibre_efficiency(&self) -> f64 {
        self.fibre_efficiency
    }
}

/// Pump power per time-bin, expressed as the mean photon number it produces.
///
/// Per-bin vectors are indexed in reverse chronological order: entry `l` is
/// the bin fired `l` loops before the end of the train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpSchedule {
    Constant(f64),
    PerBin(Vec<f64>),
}

impl PumpSchedule {
    /// Builds a per-bin schedule from values listed in firing order.
    pub fn from_chronological(mut nbars: Vec<f64>) -> Self {
        nbars.reverse();
        PumpSchedule::PerBin(nbars)
    }

    pub fn nbar_at(&self, loops: usize) -> f64 {
        match self {
            PumpSchedule::Constant(nbar) => *nbar,
            PumpSchedule::PerBin(nbars) => nbars[loops],
        }
    }

    /// The schedule expanded to one value per bin, reverse chronological.
    pub fn to_vec(&self, time_bins: usize) -> Vec<f64> {
        (0..time_bins).map(|l| self.nbar_at(l)).collect()
    }
}

/// Everything needed to evaluate one multiplexing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    time_bins: usize,
    pump: PumpSchedule,
    detector: DetectorModel,
    loss: LossModel,
}

impl ProtocolConfig {
    pub fn new(
        time_bins: usize,
        pump: PumpSchedule,
        detector: DetectorModel,
        loss: LossModel,
    ) -> Result<Self> {
        if time_bins == 0 {
            return Err(Error::invalid("time_bins", "must be at least 1"));
        }
        match &pump {
            PumpSchedule::Constant(nbar) => {
                check_mean_photon_number("mean_photon_number", *nbar)?;
            }
            PumpSchedule::PerBin(nbars) => {
                if nbars.len() != time_bins {
                    return Err(Error::invalid(
                        "pump_schedule",
                        format!("{} entries for {} time-bins", nbars.len(), time_bins),
                    ));
                }
                for &nbar in nbars {
                    check_mean_photon_number("mean_photon_number", nbar)?;
                }
            }
        }
        Ok(Self {
            time_bins,
            pump,
            detector,
            loss,
        })
    }

    pub fn constant(
        nbar: f64,
        time_bins: usize,
        detector: DetectorModel,
        loss: LossModel,
    ) -> Result<Self> {
        Self::new(time_bins, PumpSchedule::Constant(nbar), detector, loss)
    }

    pub fn time_bins(&self) -> usize {
        self.time_bins
    }

    pub fn pump(&self) -> &PumpSchedule {
        &self.pump
    }

    pub fn detector(&self) -> &DetectorModel {
        &self.detector
    }

    pub fn loss(&self) -> &LossModel {
        &self.loss
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.pump, PumpSchedule::Constant(_))
    }

    /// Source driving the bin that sits `loops` loops before the end.
    pub fn source_at(&self, loops: usize) -> SourceModel {
        SourceModel {
            mean_photon_number: self.pump.nbar_at(loops),
        }
    }

    /// Same configuration with a different pump schedule.
    pub fn with_pump(&self, pump: PumpSchedule) -> Result<Self> {
        Self::new(self.time_bins, pump, self.detector, self.loss)
    }
}

/// Probability of each switching outcome: entry `l < t` is "the last herald
/// happened `l` loops before the end", entry `t` is "no herald at all".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() < 2 {
            return Err(Error::invalid(
                "probabilities",
                "need at least one time-bin and the no-herald entry",
            ));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(
                "probabilities",
                "entries must be finite and >= 0",
            ));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn time_bins(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn no_herald(&self) -> f64 {
        self.probabilities[self.time_bins()]
    }

    /// Probability that at least one bin heralded.
    pub fn herald_probability(&self) -> f64 {
        self.probabilities[..self.time_bins()].iter().sum()
    }

    /// `P(outcome index ≥ u)` for `u ∈ 0..=t+1`.
    pub fn survival(&self, u: usize) -> f64 {
        self.probabilities
            .get(u..)
            .map_or(0.0, |tail| tail.iter().sum())
    }
}

/// Thermal photon-number probability `p(n) = (1/(n̄+1))·(n̄/(n̄+1))^n`.
pub fn thermal_pmf(source: &SourceModel, n: usize) -> f64 {
    let nbar = source.mean_photon_number;
    if n == 0 {
        return 1.0 / (nbar + 1.0);
    }
    source.ratio().powi(n as i32) / (nbar + 1.0)
}

/// Conditional probability of a detection outcome given `n` incident photons.
pub fn detect_prob(det: &DetectorModel, outcome: Outcome, n: usize) -> Result<f64> {
    let eta = det.efficiency;
    let miss = 1.0 - eta;
    match (det.kind, outcome) {
        (DetectorKind::NumberResolved, Outcome::Zero)
        | (DetectorKind::Bucket, Outcome::NoClick) => Ok(miss.powi(n as i32)),
        (DetectorKind::NumberResolved, Outcome::One) => Ok(if n == 0 {
            0.0
        } else {
            n as f64 * eta * miss.powi(n as i32 - 1)
        }),
        (DetectorKind::Bucket, Outcome::Click) => Ok(1.0 - miss.powi(n as i32)),
        (kind, outcome) => Err(Error::OutcomeMismatch { kind, outcome }),
    }
}

/// Net transmission `τ_l = η_s^{l+1} η_f^l` of a photon stored for `loops` loops.
pub fn transmission(loss: &LossModel, loops: usize) -> f64 {
    let l = loops as i32;
    loss.switch_efficiency.powi(l + 1) * loss.fibre_efficiency.powi(l)
}

/// Probability that exactly `n_out` of `n_in` photons survive a channel of
/// the given transmission.
pub fn loss_thinning_pmf(n_in: usize, transmission: f64, n_out: usize) -> f64 {
    if n_out > n_in {
        return 0.0;
    }
    if n_in == 0 {
        return 1.0;
    }
    if transmission <= 0.0 {
        return if n_out == 0 { 1.0 } else { 0.0 };
    }
    if transmission >= 1.0 {
        return if n_out == n_in { 1.0 } else { 0.0 };
    }
    binomial_pmf(n_out, n_in, transmission, 1.0 - transmission)
}

/// Binomial pmf by Loader's saddle-point expansion, accurate to a few ulps
/// for any `n` (direct products and powers lose ~`n` ulps).
fn binomial_pmf(x: usize, n: usize, p: f64, q: f64) -> f64 {
    let nf = n as f64;
    if x == 0 {
        let lc = if p < 0.1 {
            -deviance(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
        return lc.exp();
    }
    if x == n {
        let lc = if q < 0.1 {
            -deviance(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
        return lc.exp();
    }
    let xf = x as f64;
    let lc = stirling_error(n)
        - stirling_error(x)
        - stirling_error(n - x)
        - deviance(xf, nf * p)
        - deviance(nf - xf, nf * q);
    let lf = std::f64::consts::TAU.ln() + xf.ln() + (-xf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `ln n! − ln(√(2πn)(n/e)^n)`.
fn stirling_error(n: usize) -> f64 {
    const TABLE: [f64; 16] = [
        0.0,
        0.081_061_466_795_327_26,
        0.041_340_695_955_409_3,
        0.027_677_925_684_998_34,
        0.020_790_672_103_765_093,
        0.016_644_691_189_821_192,
        0.013_876_128_823_070_748,
        0.011_896_709_945_891_77,
        0.010_411_265_261_972_096,
        0.009_255_462_182_712_733,
        0.008_330_563_433_362_87,
        0.007_573_675_487_951_841,
        0.006_942_840_107_209_53,
        0.006_408_994_188_004_207,
        0.005_951_370_112_758_848,
        0.005_554_733_551_962_801,
    ];
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n < TABLE.len() {
        return TABLE[n];
    }
    let nf = n as f64;
    let nn = nf * nf;
    if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// `x ln(x/m) + m − x`, evaluated by series when `x ≈ m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        return s;
    }
    x * (x / m).ln() + m - x
}
