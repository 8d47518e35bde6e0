//! Datasets behind the published figures.
//!
//! Every figure's default parameters live in [`FIGURES`]; command-line
//! overrides replace individual entries and are rejected for parameters a
//! figure does not use.

use loopsource_core::analytic::{conditional_fidelity, herald_train, unconditional_fidelity};
use loopsource_core::analytic::{outcome_distribution, per_loop_fidelities};
use loopsource_core::multiplex::{optimize_constant, optimize_schedule, NbarBounds, ObjectiveKind};
use loopsource_core::multiplex::{parallel_from_distribution, parallel_unconditional_fidelity};
use loopsource_core::{DetectorKind, DetectorModel, ProtocolConfig, PumpSchedule, SourceModel};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::params::{self, format_schedule};
use crate::table::{Table, Value};

/// A parameter that can be overridden from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Detector,
    Nbar,
    /// All three efficiencies tied together.
    Eta,
    EtaD,
    EtaS,
    EtaF,
    TimeBins,
    Sources,
    Reoptimize,
}

impl Param {
    pub fn flag(&self) -> &'static str {
        match self {
            Param::Detector => "--detector",
            Param::Nbar => "--nbar",
            Param::Eta => "--eta",
            Param::EtaD => "--eta-d",
            Param::EtaS => "--eta-s",
            Param::EtaF => "--eta-f",
            Param::TimeBins => "--t",
            Param::Sources => "--sources",
            Param::Reoptimize => "--reoptimize",
        }
    }
}

/// Evenly spaced values, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    List(&'static [f64]),
    Linear {
        start: f64,
        stop: f64,
        points: usize,
    },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::List(values) => values.to_vec(),
            Grid::Linear {
                start,
                stop,
                points,
            } => (0..points)
                .map(|i| {
                    let x = start + (stop - start) * i as f64 / (points - 1) as f64;
                    // keep grid points on short decimals
                    (x * 1e12).round() / 1e12
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeBins {
    List(&'static [usize]),
    Range(usize, usize),
}

impl TimeBins {
    pub fn values(&self) -> Vec<usize> {
        match *self {
            TimeBins::List(values) => values.to_vec(),
            TimeBins::Range(lo, hi) => (lo..=hi).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureDefaults {
    pub id: &'static str,
    pub title: &'static str,
    pub detectors: &'static [DetectorKind],
    pub nbar: Grid,
    /// Detector efficiency grid, or the tied efficiency when `tied`.
    pub eta_d: Grid,
    pub eta_s: f64,
    pub eta_f: f64,
    pub tied: bool,
    pub time_bins: TimeBins,
    pub sources: &'static [usize],
    pub overridable: &'static [Param],
}

const BOTH: &[DetectorKind] = &[DetectorKind::NumberResolved, DetectorKind::Bucket];
const BUCKET: &[DetectorKind] = &[DetectorKind::Bucket];
const EFFICIENCY_BANDS: Grid = Grid::List(&[1.0, 0.99, 0.95]);
const NBAR_SURFACE: Grid = Grid::Linear {
    start: 0.05,
    stop: 3.0,
    points: 60,
};
const ETA_SURFACE: Grid = Grid::Linear {
    start: 0.5,
    stop: 1.0,
    points: 51,
};

/// Mean photon numbers optimised for conditional fidelity at long times,
/// per tied efficiency: `(eta, resolved, bucket)`.
pub const CAPTIONED_NBAR: &[(f64, f64, f64)] =
    &[(1.0, 1.0, 0.05), (0.99, 0.90, 0.14), (0.95, 0.95, 0.34)];

pub const FIGURES: &[FigureDefaults] = &[
    FigureDefaults {
        id: "fig2",
        title: "heralding probability against time-bins",
        detectors: BOTH,
        nbar: Grid::List(&[1.0]),
        eta_d: Grid::List(&[1.0]),
        eta_s: 1.0,
        eta_f: 1.0,
        tied: false,
        time_bins: TimeBins::Range(1, 50),
        sources: &[1],
        overridable: &[Param::Nbar, Param::EtaD, Param::TimeBins],
    },
    FigureDefaults {
        id: "fig3",
        title: "conditional fidelity and heralding probability against time-bins",
        detectors: BOTH,
        nbar: Grid::List(&[]),
        eta_d: EFFICIENCY_BANDS,
        eta_s: 1.0,
        eta_f: 1.0,
        tied: true,
        time_bins: TimeBins::Range(1, 50),
        sources: &[1],
        overridable: &[
            Param::Detector,
            Param::Nbar,
            Param::Eta,
            Param::TimeBins,
            Param::Reoptimize,
        ],
    },
    FigureDefaults {
        id: "fig4",
        title: "conditional fidelity against heralding probability, parametrised by time-bins",
        detectors: BOTH,
        nbar: Grid::List(&[]),
        eta_d: EFFICIENCY_BANDS,
        eta_s: 1.0,
        eta_f: 1.0,
        tied: true,
        time_bins: TimeBins::Range(1, 50),
        sources: &[1],
        overridable: &[
            Param::Detector,
            Param::Nbar,
            Param::Eta,
            Param::TimeBins,
            Param::Reoptimize,
        ],
    },
    FigureDefaults {
        id: "fig5",
        title:
            "conditional fidelity against detector efficiency and mean photon number, lossless loop",
        detectors: BOTH,
        nbar: NBAR_SURFACE,
        eta_d: ETA_SURFACE,
        eta_s: 1.0,
        eta_f: 1.0,
        tied: false,
        time_bins: TimeBins::List(&[1]),
        sources: &[1],
        overridable: &[Param::Nbar, Param::EtaD, Param::TimeBins],
    },
    FigureDefaults {
        id: "fig6",
        title: "unconditional fidelity against mean photon number",
        detectors: BOTH,
        nbar: Grid::Linear {
            start: 0.01,
            stop: 3.0,
            points: 300,
        },
        eta_d: EFFICIENCY_BANDS,
        eta_s: 1.0,
        eta_f: 1.0,
        tied: true,
        time_bins: TimeBins::List(&[1, 2, 4, 8, 16, 32, 64]),
        sources: &[1],
        overridable: &[Param::Detector, Param::Nbar, Param::Eta, Param::TimeBins],
    },
    FigureDefaults {
        id: "fig7",
        title: "long-time unconditional fidelity against mean photon number and efficiency",
        detectors: BOTH,
        nbar: NBAR_SURFACE,
        eta_d: ETA_SURFACE,
        eta_s: 1.0,
        eta_f: 1.0,
        tied: true,
        time_bins: TimeBins::List(&[100]),
        sources: &[1],
        overridable: &[Param::Nbar, Param::Eta, Param::TimeBins],
    },
    FigureDefaults {
        id: "fig8",
        title: "maximum unconditional fidelity, constant against biased pumping",
        detectors: BUCKET,
        nbar: Grid::List(&[]),
        eta_d: Grid::List(&[0.99, 0.95]),
        eta_s: 1.0,
        eta_f: 1.0,
        tied: true,
        time_bins: TimeBins::Range(1, 10),
        sources: &[1],
        overridable: &[Param::Detector, Param::Eta, Param::TimeBins],
    },
    FigureDefaults {
        id: "fig9",
        title: "distribution of the last heralded photon for parallel sources",
        detectors: BUCKET,
        nbar: Grid::List(&[0.1]),
        eta_d: Grid::List(&[0.95]),
        eta_s: 1.0,
        eta_f: 1.0,
        tied: true,
        time_bins: TimeBins::List(&[10]),
        sources: &[1, 2, 3, 4],
        overridable: &[
            Param::Detector,
            Param::Nbar,
            Param::Eta,
            Param::TimeBins,
            Param::Sources,
        ],
    },
    FigureDefaults {
        id: "fig10",
        title: "unconditional fidelity of one against four parallel sources",
        detectors: BOTH,
        nbar: NBAR_SURFACE,
        eta_d: Grid::Linear {
            start: 0.5,
            stop: 1.0,
            points: 21,
        },
        eta_s: 1.0,
        eta_f: 1.0,
        tied: true,
        time_bins: TimeBins::List(&[5]),
        sources: &[1, 4],
        overridable: &[
            Param::Detector,
            Param::Nbar,
            Param::Eta,
            Param::TimeBins,
            Param::Sources,
        ],
    },
    FigureDefaults {
        id: "fig11",
        title: "conditional fidelity against heralding probability, parametrised by time-bins",
        detectors: BOTH,
        nbar: Grid::List(&[0.5]),
        eta_d: Grid::List(&[0.8]),
        eta_s: 0.8,
        eta_f: 1.0,
        tied: false,
        time_bins: TimeBins::Range(1, 20),
        sources: &[1],
        overridable: &[
            Param::Detector,
            Param::Nbar,
            Param::Eta,
            Param::EtaD,
            Param::EtaS,
            Param::EtaF,
            Param::TimeBins,
        ],
    },
];

pub fn figure_ids() -> Vec<&'static str> {
    FIGURES.iter().map(|f| f.id).collect()
}

pub fn defaults(id: &str) -> CliResult<&'static FigureDefaults> {
    FIGURES.iter().find(|f| f.id == id).ok_or_else(|| {
        CliError::usage(format!(
            "unknown figure `{id}`; valid ids: {}",
            figure_ids().join(", ")
        ))
    })
}

/// Command-line replacements for figure defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FigureOverrides {
    pub detector: Option<DetectorKind>,
    pub nbar: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub eta_d: Option<Vec<f64>>,
    pub eta_s: Option<Vec<f64>>,
    pub eta_f: Option<Vec<f64>>,
    pub time_bins: Option<Vec<usize>>,
    pub sources: Option<usize>,
    pub reoptimize: bool,
}

impl FigureOverrides {
    fn given(&self) -> Vec<Param> {
        let mut given = Vec::new();
        let flags = [
            (self.detector.is_some(), Param::Detector),
            (self.nbar.is_some(), Param::Nbar),
            (self.eta.is_some(), Param::Eta),
            (self.eta_d.is_some(), Param::EtaD),
            (self.eta_s.is_some(), Param::EtaS),
            (self.eta_f.is_some(), Param::EtaF),
            (self.time_bins.is_some(), Param::TimeBins),
            (self.sources.is_some(), Param::Sources),
            (self.reoptimize, Param::Reoptimize),
        ];
        for (present, param) in flags {
            if present {
                given.push(param);
            }
        }
        given
    }
}

/// Figure parameters after overrides.
#[derive(Debug, Clone, PartialEq)]
struct Resolved {
    detectors: Vec<DetectorKind>,
    nbar: Vec<f64>,
    /// `(eta_d, eta_s, eta_f)` combinations.
    efficiencies: Vec<(f64, f64, f64)>,
    time_bins: Vec<usize>,
    sources: Vec<usize>,
    reoptimize: bool,
    nbar_overridden: bool,
}

fn resolve(fig: &FigureDefaults, overrides: &FigureOverrides) -> CliResult<Resolved> {
    for param in overrides.given() {
        if !fig.overridable.contains(&param) {
            let allowed: Vec<_> = fig.overridable.iter().map(Param::flag).collect();
            return Err(CliError::flag(
                param.flag(),
                format!(
                    "not a parameter of {}; it accepts {}",
                    fig.id,
                    allowed.join(", ")
                ),
            ));
        }
    }
    if let Some(nbar) = &overrides.nbar {
        params::check_nbars("--nbar", nbar)?;
    }
    for (flag, values) in [
        ("--eta", &overrides.eta),
        ("--eta-d", &overrides.eta_d),
        ("--eta-s", &overrides.eta_s),
        ("--eta-f", &overrides.eta_f),
    ] {
        if let Some(values) = values {
            params::check_efficiencies(flag, values)?;
        }
    }

    let detectors = overrides
        .detector
        .map_or_else(|| fig.detectors.to_vec(), |kind| vec![kind]);
    let time_bins = overrides
        .time_bins
        .clone()
        .unwrap_or_else(|| fig.time_bins.values());

    let efficiencies = if fig.tied {
        let etas = overrides.eta.clone().unwrap_or_else(|| fig.eta_d.values());
        etas.into_iter().map(|eta| (eta, eta, eta)).collect()
    } else if let Some(etas) = &overrides.eta {
        etas.iter().map(|&eta| (eta, eta, eta)).collect()
    } else {
        let eta_d = overrides
            .eta_d
            .clone()
            .unwrap_or_else(|| fig.eta_d.values());
        let eta_s = overrides.eta_s.clone().unwrap_or_else(|| vec![fig.eta_s]);
        let eta_f = overrides.eta_f.clone().unwrap_or_else(|| vec![fig.eta_f]);
        let mut combos = Vec::new();
        for &d in &eta_d {
            for &s in &eta_s {
                for &f in &eta_f {
                    combos.push((d, s, f));
                }
            }
        }
        combos
    };
    if overrides.eta.is_some()
        && (overrides.eta_d.is_some() || overrides.eta_s.is_some() || overrides.eta_f.is_some())
    {
        return Err(CliError::flag(
            "--eta",
            "cannot be combined with --eta-d/--eta-s/--eta-f",
        ));
    }

    let sources = match overrides.sources {
        None => fig.sources.to_vec(),
        Some(0) => return Err(CliError::flag("--sources", "must be at least 1")),
        Some(m) if fig.id == "fig9" => (1..=m).collect(),
        Some(m) => vec![1, m],
    };

    Ok(Resolved {
        detectors,
        nbar: overrides.nbar.clone().unwrap_or_else(|| fig.nbar.values()),
        efficiencies,
        time_bins,
        sources,
        reoptimize: overrides.reoptimize,
        nbar_overridden: overrides.nbar.is_some(),
    })
}

fn build(
    kind: DetectorKind,
    nbar: f64,
    (eta_d, eta_s, eta_f): (f64, f64, f64),
    t: usize,
) -> CliResult<ProtocolConfig> {
    params::config(t, PumpSchedule::Constant(nbar), kind, eta_d, eta_s, eta_f)
}

/// Emits the dataset for `id`.
pub fn generate(id: &str, overrides: &FigureOverrides) -> CliResult<Table> {
    let fig = defaults(id)?;
    let params = resolve(fig, overrides)?;
    let mut table = match fig.id {
        "fig2" => fig2(&params)?,
        "fig3" | "fig4" => fig3(&params)?,
        "fig5" => fig5(&params)?,
        "fig6" => fig6(&params)?,
        "fig7" => fig7(&params)?,
        "fig8" => fig8(&params)?,
        "fig9" => fig9(&params)?,
        "fig10" => fig10(&params)?,
        "fig11" => fig11(&params)?,
        _ => unreachable!("every id in FIGURES has a generator"),
    };
    table.set_meta("figure", fig.id);
    table.set_meta("title", fig.title);
    table.set_meta(
        "detectors",
        params
            .detectors
            .iter()
            .map(|k| k.name())
            .collect::<Vec<_>>(),
    );
    table.set_meta("nbar", params.nbar.clone());
    table.set_meta(
        "efficiencies",
        params
            .efficiencies
            .iter()
            .map(|(d, s, f)| json!({"eta_d": d, "eta_s": s, "eta_f": f}))
            .collect::<Vec<_>>(),
    );
    table.set_meta("t", params.time_bins.clone());
    table.set_meta("sources", params.sources.clone());
    table.set_meta("reoptimize", params.reoptimize);
    Ok(table)
}

fn kind_column(prefix: &str, kind: DetectorKind) -> String {
    format!("{prefix}_{}", kind.name())
}

fn fig2(p: &Resolved) -> CliResult<Table> {
    let kinds = &p.detectors;
    let nbar = params::single("--nbar", &p.nbar)?;
    let (eta_d, _, _) = params::single("--eta-d", &p.efficiencies)?;
    let mut columns = vec!["t".to_string()];
    columns.extend(kinds.iter().map(|&k| kind_column("S", k)));
    let mut table = Table::new(columns);
    let source = SourceModel::new(nbar)?;
    let detectors = kinds
        .iter()
        .map(|&k| DetectorModel::new(k, eta_d))
        .collect::<Result<Vec<_>, _>>()?;
    for &t in &p.time_bins {
        let mut row: Vec<Value> = vec![t.into()];
        row.extend(
            detectors
                .iter()
                .map(|det| herald_train(&source, det, t).into()),
        );
        table.push(row);
    }
    Ok(table)
}

/// Captioned mean photon number for a tied efficiency band.
pub fn captioned_nbar(kind: DetectorKind, eta: f64) -> Option<f64> {
    CAPTIONED_NBAR
        .iter()
        .find(|(band, _, _)| (band - eta).abs() < 1e-12)
        .map(|&(_, resolved, bucket)| match kind {
            DetectorKind::NumberResolved => resolved,
            DetectorKind::Bucket => bucket,
        })
}

fn fig3(p: &Resolved) -> CliResult<Table> {
    let mut table = Table::new(["detector", "eta", "nbar", "t", "S_t", "F_cond"]);
    let horizon = p.time_bins.iter().copied().max().unwrap_or(1);
    for &kind in &p.detectors {
        for &etas in &p.efficiencies {
            let eta = etas.0;
            let nbar = if p.nbar_overridden {
                params::single("--nbar", &p.nbar)?
            } else if p.reoptimize && eta < 1.0 {
                // unit efficiency has no interior optimum, keep the caption there
                let template = build(kind, 1.0, etas, horizon)?;
                optimize_constant(
                    &template,
                    ObjectiveKind::ConditionalFidelity,
                    NbarBounds::default(),
                )?
                .schedule
                .nbar_at(0)
            } else {
                captioned_nbar(kind, eta).ok_or_else(|| {
                    CliError::flag(
                        "--eta",
                        format!("no captioned mean photon number for eta={eta}; pass --nbar or --reoptimize"),
                    )
                })?
            };
            for &t in &p.time_bins {
                let config = build(kind, nbar, etas, t)?;
                table.push(vec![
                    kind.name().into(),
                    eta.into(),
                    nbar.into(),
                    t.into(),
                    herald_train(&config.source_at(0), config.detector(), t).into(),
                    conditional_fidelity(&config).ok().into(),
                ]);
            }
        }
    }
    Ok(table)
}

fn surface_columns(kinds: &[DetectorKind], prefixes: &[&str]) -> Vec<String> {
    kinds
        .iter()
        .flat_map(|&k| prefixes.iter().map(move |prefix| kind_column(prefix, k)))
        .collect()
}

fn fig5(p: &Resolved) -> CliResult<Table> {
    let t = params::single("--t", &p.time_bins)?;
    let mut columns = vec!["eta_d".to_string(), "nbar".to_string()];
    columns.extend(surface_columns(&p.detectors, &["F_cond"]));
    let mut table = Table::new(columns);
    for &etas in &p.efficiencies {
        for &nbar in &p.nbar {
            let mut row: Vec<Value> = vec![etas.0.into(), nbar.into()];
            for &kind in &p.detectors {
                let config = build(kind, nbar, etas, t)?;
                row.push(conditional_fidelity(&config).ok().into());
            }
            table.push(row);
        }
    }
    Ok(table)
}

fn fig6(p: &Resolved) -> CliResult<Table> {
    let mut table = Table::new(["detector", "eta", "t", "nbar", "F_uncond"]);
    for &kind in &p.detectors {
        for &etas in &p.efficiencies {
            for &t in &p.time_bins {
                for &nbar in &p.nbar {
                    let config = build(kind, nbar, etas, t)?;
                    table.push(vec![
                        kind.name().into(),
                        etas.0.into(),
                        t.into(),
                        nbar.into(),
                        unconditional_fidelity(&config).into(),
                    ]);
                }
            }
        }
    }
    Ok(table)
}

fn fig7(p: &Resolved) -> CliResult<Table> {
    let t = params::single("--t", &p.time_bins)?;
    let mut columns = vec!["eta".to_string(), "nbar".to_string()];
    columns.extend(surface_columns(
        &p.detectors,
        &["S_t", "F_cond", "F_uncond"],
    ));
    let mut table = Table::new(columns);
    for &etas in &p.efficiencies {
        for &nbar in &p.nbar {
            let mut row: Vec<Value> = vec![etas.0.into(), nbar.into()];
            for &kind in &p.detectors {
                let config = build(kind, nbar, etas, t)?;
                row.push(herald_train(&config.source_at(0), config.detector(), t).into());
                row.push(conditional_fidelity(&config).ok().into());
                row.push(unconditional_fidelity(&config).into());
            }
            table.push(row);
        }
    }
    Ok(table)
}

fn fig8(p: &Resolved) -> CliResult<Table> {
    let mut table = Table::new([
        "detector",
        "eta",
        "t",
        "nbar_constant",
        "F_uncond_constant",
        "F_uncond_biased",
        "schedule_chronological",
    ]);
    let objective = ObjectiveKind::UnconditionalFidelity;
    let bounds = NbarBounds::default();
    for &kind in &p.detectors {
        for &etas in &p.efficiencies {
            for &t in &p.time_bins {
                let template = build(kind, 1.0, etas, t)?;
                let constant = optimize_constant(&template, objective, bounds)?;
                let biased = optimize_schedule(&template, objective, bounds, t)?;
                table.push(vec![
                    kind.name().into(),
                    etas.0.into(),
                    t.into(),
                    constant.schedule.nbar_at(0).into(),
                    constant.objective_value.into(),
                    biased.objective_value.into(),
                    format_schedule(&biased.schedule, t, true).into(),
                ]);
            }
        }
    }
    Ok(table)
}

fn fig9(p: &Resolved) -> CliResult<Table> {
    let kind = params::single("--detector", &p.detectors)?;
    let nbar = params::single("--nbar", &p.nbar)?;
    let etas = params::single("--eta", &p.efficiencies)?;
    let t = params::single("--t", &p.time_bins)?;
    let single = outcome_distribution(&build(kind, nbar, etas, t)?);
    let mut table = Table::new(["sources", "outcome", "probability"]);
    for &m in &p.sources {
        let dist = parallel_from_distribution(&single, m)?;
        for (u, &prob) in dist.probabilities.iter().enumerate() {
            let outcome: Value = if u < t { u.into() } else { "none".into() };
            table.push(vec![m.into(), outcome, prob.into()]);
        }
    }
    Ok(table)
}

fn fig10(p: &Resolved) -> CliResult<Table> {
    let t = params::single("--t", &p.time_bins)?;
    let mut table_columns = vec![
        "detector".to_string(),
        "eta".to_string(),
        "nbar".to_string(),
    ];
    table_columns.extend(p.sources.iter().map(|m| format!("F_uncond_m{m}")));
    let mut table = Table::new(table_columns);
    for &kind in &p.detectors {
        for &etas in &p.efficiencies {
            for &nbar in &p.nbar {
                let config = build(kind, nbar, etas, t)?;
                let single = outcome_distribution(&config);
                let fidelities: Vec<f64> = per_loop_fidelities(&config)
                    .into_iter()
                    .map(|f| f.unwrap_or(0.0))
                    .collect();
                let mut row: Vec<Value> = vec![kind.name().into(), etas.0.into(), nbar.into()];
                for &m in &p.sources {
                    let dist = parallel_from_distribution(&single, m)?;
                    row.push(parallel_unconditional_fidelity(&dist, &fidelities)?.into());
                }
                table.push(row);
            }
        }
    }
    Ok(table)
}

fn fig11(p: &Resolved) -> CliResult<Table> {
    let nbar = params::single("--nbar", &p.nbar)?;
    let mut table = Table::new([
        "detector", "eta_d", "eta_s", "eta_f", "t", "S_t", "F_cond", "F_uncond",
    ]);
    for &kind in &p.detectors {
        for &etas in &p.efficiencies {
            for &t in &p.time_bins {
                let config = build(kind, nbar, etas, t)?;
                table.push(vec![
                    kind.name().into(),
                    etas.0.into(),
                    etas.1.into(),
                    etas.2.into(),
                    t.into(),
                    herald_train(&config.source_at(0), config.detector(), t).into(),
                    conditional_fidelity(&config).ok().into(),
                    unconditional_fidelity(&config).into(),
                ]);
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(table: &Table, name: &str) -> Vec<f64> {
        table
            .column(name)
            .unwrap()
            .into_iter()
            .map(|v| v.unwrap())
            .collect()
    }

    #[test]
    fn ids_are_unique_and_ordered() {
        let ids = figure_ids();
        assert_eq!(ids.len(), 10);
        assert_eq!(ids.first(), Some(&"fig2"));
        assert_eq!(ids.last(), Some(&"fig11"));
    }

    #[test]
    fn unknown_figure_lists_valid_ids() {
        let err = generate("fig12", &FigureOverrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("fig2, fig3"));
    }

    #[test]
    fn fig2_first_row() {
        let table = generate("fig2", &FigureOverrides::default()).unwrap();
        assert_eq!(table.columns, ["t", "S_resolved", "S_bucket"]);
        assert_eq!(table.rows.len(), 50);
        assert!((column(&table, "S_resolved")[0] - 0.25).abs() < 1e-15);
        assert!((column(&table, "S_bucket")[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn override_outside_figure_is_rejected() {
        let overrides = FigureOverrides {
            sources: Some(3),
            ..Default::default()
        };
        let err = generate("fig2", &overrides).unwrap_err();
        assert!(err.to_string().contains("--sources"));
        let overrides = FigureOverrides {
            reoptimize: true,
            ..Default::default()
        };
        assert!(generate("fig5", &overrides).is_err());
    }

    #[test]
    fn fig3_uses_captioned_values() {
        let table = generate("fig3", &FigureOverrides::default()).unwrap();
        assert_eq!(table.rows.len(), 2 * 3 * 50);
        let first = &table.rows[0];
        assert_eq!(first[0], Value::from("resolved"));
        assert_eq!(first[2], Value::Float(1.0));
        let bucket_95 = table
            .rows
            .iter()
            .find(|row| row[0] == Value::from("bucket") && row[1] == Value::Float(0.95))
            .unwrap();
        assert_eq!(bucket_95[2], Value::Float(0.34));
    }

    #[test]
    fn fig3_reoptimize_lands_near_caption() {
        let overrides = FigureOverrides {
            reoptimize: true,
            time_bins: Some(vec![1, 50]),
            eta: Some(vec![0.95]),
            ..Default::default()
        };
        let table = generate("fig3", &overrides).unwrap();
        let resolved = table.rows[0][2].as_f64().unwrap();
        let bucket = table.rows[2][2].as_f64().unwrap();
        assert!((resolved - 0.95).abs() < 0.01, "{resolved}");
        assert!((bucket - 0.34).abs() < 0.01, "{bucket}");
    }

    #[test]
    fn fig7_bucket_wins_at_low_efficiency() {
        let table = generate("fig7", &FigureOverrides::default()).unwrap();
        let eta = column(&table, "eta");
        let resolved = column(&table, "F_uncond_resolved");
        let bucket = column(&table, "F_uncond_bucket");
        let wins = (0..table.rows.len())
            .filter(|&i| eta[i] <= 0.6 && bucket[i] > resolved[i])
            .count();
        assert!(wins > 0);
    }

    #[test]
    fn fig9_rows_sum_to_one() {
        let table = generate("fig9", &FigureOverrides::default()).unwrap();
        assert_eq!(table.rows.len(), 4 * 11);
        for m in 1..=4i64 {
            let total: f64 = table
                .rows
                .iter()
                .filter(|row| row[0] == Value::Int(m))
                .map(|row| row[2].as_f64().unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fig11_trade_off() {
        let table = generate("fig11", &FigureOverrides::default()).unwrap();
        for kind in ["resolved", "bucket"] {
            let rows: Vec<_> = table
                .rows
                .iter()
                .filter(|r| r[0] == Value::from(kind))
                .collect();
            for pair in rows.windows(2) {
                assert!(pair[1][5].as_f64() > pair[0][5].as_f64());
                assert!(pair[1][6].as_f64() < pair[0][6].as_f64());
            }
        }
    }

    #[test]
    fn fig8_biased_never_below_constant() {
        let overrides = FigureOverrides {
            time_bins: Some(vec![1, 3]),
            eta: Some(vec![0.95]),
            ..Default::default()
        };
        let table = generate("fig8", &overrides).unwrap();
        for row in &table.rows {
            assert!(row[5].as_f64().unwrap() >= row[4].as_f64().unwrap() - 1e-12);
        }
        assert!((table.rows[1][5].as_f64().unwrap() - 0.458).abs() < 0.002);
    }
}
