//! Pump-power optimisation: a single constant `n̄`, or one `n̄` per time-bin
//! (biased operation).
//!
//! The scalar search scans a 64-point logarithmic grid and refines the best
//! bracket by golden-section search. Per-bin schedules are improved by cyclic
//! coordinate ascent, each coordinate solved by the same scalar search,
//! started from the constant optimum and from three seeded random schedules.

use std::cell::Cell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{conditional_fidelity, unconditional_fidelity};
use crate::error::{Error, Result};
use crate::model::{ProtocolConfig, PumpSchedule};

const GRID_POINTS: usize = 64;
const GOLDEN_TOLERANCE: f64 = 1e-10;
const ASCENT_TOLERANCE: f64 = 1e-8;
const MAX_SWEEPS: usize = 500;
const RESTARTS: usize = 3;
const RESTART_SEED: u64 = 0;
/// Values closer than this count as a tie.
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    ConditionalFidelity,
    UnconditionalFidelity,
}

impl ObjectiveKind {
    pub fn evaluate(&self, config: &ProtocolConfig) -> f64 {
        match self {
            // zero-probability heralding never wins the search
            ObjectiveKind::ConditionalFidelity => conditional_fidelity(config).unwrap_or(0.0),
            ObjectiveKind::UnconditionalFidelity => unconditional_fidelity(config),
        }
    }
}

/// Search interval for the mean photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbarBounds {
    pub lo: f64,
    pub hi: f64,
}

impl NbarBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(Error::invalid(
                "bounds",
                format!("need 0 < lo < hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(Self { lo, hi })
    }
}

impl Default for NbarBounds {
    fn default() -> Self {
        Self { lo: 1e-3, hi: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Reverse chronological when per-bin.
    pub schedule: PumpSchedule,
    pub objective_value: f64,
    pub objective_kind: ObjectiveKind,
    pub evaluations: usize,
}

/// Maximises `f` on `[lo, hi]`; returns `(argmax, max)`.
fn maximize_scalar(mut f: impl FnMut(f64) -> f64, bounds: NbarBounds) -> (f64, f64) {
    let (ln_lo, ln_hi) = (bounds.lo.ln(), bounds.hi.ln());
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            if i == GRID_POINTS - 1 {
                bounds.hi
            } else {
                (ln_lo + (ln_hi - ln_lo) * i as f64 / (GRID_POINTS - 1) as f64).exp()
            }
        })
        .collect();
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    for (i, &v) in values.iter().enumerate() {
        if v > best_value + TIE {
            best = i;
            best_value = v;
        }
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(GRID_POINTS - 1)];

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > GOLDEN_TOLERANCE * (1.0 + a.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (x, v) = if fc >= fd { (c, fc) } else { (d, fd) };
    if v > best_value {
        (x, v)
    } else {
        (grid[best], best_value)
    }
}

/// Best constant pump power for `template` (whose own schedule is ignored).
pub fn optimize_constant(
    template: &ProtocolConfig,
    objective: ObjectiveKind,
    bounds: NbarBounds,
) -> Result<OptimizationResult> {
    let evaluations = Cell::new(0usize);
    let eval = |nbar: f64| {
        evaluations.set(evaluations.get() + 1);
        let config = template
            .with_pump(PumpSchedule::Constant(nbar))
            .expect("bounds are valid mean photon numbers");
        objective.evaluate(&config)
    };
    let (nbar, value) = maximize_scalar(eval, bounds);
    Ok(OptimizationResult {
        schedule: PumpSchedule::Constant(nbar),
        objective_value: value,
        objective_kind: objective,
        evaluations: evaluations.get(),
    })
}

/// Best per-bin pump schedule over `t` bins.
pub fn optimize_schedule(
    template: &ProtocolConfig,
    objective: ObjectiveKind,
    bounds: NbarBounds,
    t: usize,
) -> Result<OptimizationResult> {
    let template = ProtocolConfig::new(
        t,
        PumpSchedule::Constant(bounds.lo),
        *template.detector(),
        *template.loss(),
    )?;
    let constant = optimize_constant(&template, objective, bounds)?;
    let start_nbar = constant.schedule.nbar_at(0);
    let evaluations = Cell::new(constant.evaluations);
    let eval = |schedule: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        let config = template
            .with_pump(PumpSchedule::PerBin(schedule.to_vec()))
            .expect("schedule within bounds");
        objective.evaluate(&config)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let mut starts = vec![vec![start_nbar; t]];
    let (ln_lo, ln_hi) = (bounds.lo.ln(), bounds.hi.ln());
    for _ in 0..RESTARTS {
        starts.push(
            (0..t)
                .map(|_| rng.random_range(ln_lo..ln_hi).exp())
                .collect(),
        );
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let candidate = coordinate_ascent(start, &eval, bounds);
        let better = match &best {
            None => true,
            Some((schedule, value)) => {
                candidate.1 > value + TIE
                    || ((candidate.1 - value).abs() <= TIE && candidate.0 < *schedule)
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    let (schedule, mut value) = best.expect("at least one start");
    // the constant optimum is feasible, never report less
    let schedule = if value < constant.objective_value {
        value = constant.objective_value;
        vec![start_nbar; t]
    } else {
        schedule
    };
    Ok(OptimizationResult {
        schedule: PumpSchedule::PerBin(schedule),
        objective_value: value,
        objective_kind: objective,
        evaluations: evaluations.get(),
    })
}

fn coordinate_ascent(
    mut schedule: Vec<f64>,
    eval: &impl Fn(&[f64]) -> f64,
    bounds: NbarBounds,
) -> (Vec<f64>, f64) {
    let mut value = eval(&schedule);
    for _ in 0..MAX_SWEEPS {
        let mut improved = 0.0f64;
        for l in 0..schedule.len() {
            let mut trial = schedule.clone();
            let (x, v) = maximize_scalar(
                |nbar| {
                    trial[l] = nbar;
                    eval(&trial)
                },
                bounds,
            );
            if v > value {
                improved = improved.max(v - value);
                schedule[l] = x;
                value = v;
            }
        }
        if improved <= ASCENT_TOLERANCE {
            break;
        }
    }
    (schedule, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DetectorKind, DetectorModel, LossModel};

    fn template(kind: DetectorKind, eta: f64, t: usize) -> ProtocolConfig {
        ProtocolConfig::constant(
            1.0,
            t,
            DetectorModel::new(kind, eta).unwrap(),
            LossModel::new(eta, eta).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scalar_search_finds_known_maximum() {
        let bounds = NbarBounds::new(1e-3, 10.0).unwrap();
        let (x, v) = maximize_scalar(|x| -(x - 0.37).powi(2) + 2.0, bounds);
        assert!((x - 0.37).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
        // boundary maximum
        let (x, _) = maximize_scalar(|x| x, bounds);
        assert_eq!(x, 10.0);
    }

    #[test]
    fn bounds_validation() {
        assert!(NbarBounds::new(0.0, 1.0).is_err());
        assert!(NbarBounds::new(2.0, 1.0).is_err());
        assert!(NbarBounds::new(0.1, f64::INFINITY).is_err());
    }

    #[test]
    fn constant_bucket_unconditional_t3() {
        let result = optimize_constant(
            &template(DetectorKind::Bucket, 0.95, 3),
            ObjectiveKind::UnconditionalFidelity,
            NbarBounds::default(),
        )
        .unwrap();
        let nbar = result.schedule.nbar_at(0);
        assert!((nbar - 0.668).abs() < 0.01, "{nbar}");
        assert!((result.objective_value - 0.441).abs() < 0.002);
        assert!(result.evaluations > GRID_POINTS);
    }

    #[test]
    fn constant_bucket_conditional_t50() {
        let result = optimize_constant(
            &template(DetectorKind::Bucket, 0.95, 50),
            ObjectiveKind::ConditionalFidelity,
            NbarBounds::default(),
        )
        .unwrap();
        assert!((result.schedule.nbar_at(0) - 0.34).abs() < 0.01);
    }

    #[test]
    fn perfect_resolved_objective_is_flat() {
        let tpl = template(DetectorKind::NumberResolved, 1.0, 4);
        let result = optimize_constant(
            &tpl,
            ObjectiveKind::ConditionalFidelity,
            NbarBounds::default(),
        )
        .unwrap();
        assert!((result.objective_value - 1.0).abs() < 1e-12);
        let result = optimize_schedule(
            &tpl,
            ObjectiveKind::ConditionalFidelity,
            NbarBounds::default(),
            4,
        )
        .unwrap();
        assert!((result.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn biased_schedule_t3() {
        let result = optimize_schedule(
            &template(DetectorKind::Bucket, 0.95, 3),
            ObjectiveKind::UnconditionalFidelity,
            NbarBounds::default(),
            3,
        )
        .unwrap();
        assert!((result.objective_value - 0.458).abs() < 0.002);
        let PumpSchedule::PerBin(schedule) = &result.schedule else {
            panic!("expected per-bin schedule");
        };
        for (got, want) in schedule.iter().zip([0.466, 0.693, 1.31]) {
            assert!((got - want).abs() < 0.03, "{schedule:?}");
        }
    }

    #[test]
    fn single_bin_schedule_is_constant_optimum() {
        let tpl = template(DetectorKind::NumberResolved, 0.9, 1);
        let constant = optimize_constant(
            &tpl,
            ObjectiveKind::UnconditionalFidelity,
            NbarBounds::default(),
        )
        .unwrap();
        let schedule = optimize_schedule(
            &tpl,
            ObjectiveKind::UnconditionalFidelity,
            NbarBounds::default(),
            1,
        )
        .unwrap();
        assert!((schedule.objective_value - constant.objective_value).abs() < 1e-10);
        assert!((schedule.schedule.nbar_at(0) - constant.schedule.nbar_at(0)).abs() < 1e-4);
    }

    #[test]
    fn schedule_never_worse_than_constant() {
        for (kind, eta, t) in [
            (DetectorKind::Bucket, 0.9, 5),
            (DetectorKind::NumberResolved, 0.8, 4),
            (DetectorKind::NumberResolved, 0.99, 6),
        ] {
            for objective in [
                ObjectiveKind::ConditionalFidelity,
                ObjectiveKind::UnconditionalFidelity,
            ] {
                let tpl = template(kind, eta, t);
                let c = optimize_constant(&tpl, objective, NbarBounds::default()).unwrap();
                let s = optimize_schedule(&tpl, objective, NbarBounds::default(), t).unwrap();
                assert!(s.objective_value >= c.objective_value);
                assert!((0.0..=1.0).contains(&s.objective_value));
            }
        }
    }
}
