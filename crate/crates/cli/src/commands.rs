use std::fs::File;
use std::io::{self, BufWriter, Write};

use loopsource_core::analytic::{
    conditional_fidelity, fidelity_report, herald_single_shot, herald_train, outcome_distribution,
    per_loop_fidelities, unconditional_fidelity,
};
use loopsource_core::model::transmission;
use loopsource_core::multiplex::{
    optimize_constant, optimize_schedule, NbarBounds, ObjectiveKind, OptimizationResult,
};
use loopsource_core::multiplex::{parallel_from_distribution, parallel_unconditional_fidelity};
use loopsource_core::simulate::{run_simulation, simulate_parallel_sources, SimulationSummary};
use loopsource_core::{DetectorKind, ProtocolConfig, PumpSchedule};
use serde_json::json;

use crate::args::{Cli, Command, Format, ModelArgs, OutputArgs};
use crate::error::{CliError, CliResult};
use crate::feasibility::{feasibility, FeasibilityInput};
use crate::figures::{self, FigureOverrides};
use crate::params::{self, format_schedule};
use crate::table::{Table, Value};

/// Model flags after parsing, before per-command defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelValues {
    pub detector: Option<DetectorKind>,
    pub nbar: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub eta_d: Option<Vec<f64>>,
    pub eta_s: Option<Vec<f64>>,
    pub eta_f: Option<Vec<f64>>,
    pub time_bins: Option<Vec<usize>>,
    pub chronological: bool,
}

impl ModelValues {
    pub fn parse(args: &ModelArgs) -> CliResult<Self> {
        let floats = |flag: &str, text: &Option<String>| -> CliResult<Option<Vec<f64>>> {
            text.as_deref()
                .map(|s| params::parse_f64_list(flag, s))
                .transpose()
        };
        let values = Self {
            detector: args.detector.map(Into::into),
            nbar: floats("--nbar", &args.nbar)?,
            eta: floats("--eta", &args.eta)?,
            eta_d: floats("--eta-d", &args.eta_d)?,
            eta_s: floats("--eta-s", &args.eta_s)?,
            eta_f: floats("--eta-f", &args.eta_f)?,
            time_bins: args
                .t
                .as_deref()
                .map(|s| params::parse_time_bins("--t", s))
                .transpose()?,
            chronological: args.chronological,
        };
        if let Some(nbar) = &values.nbar {
            params::check_nbars("--nbar", nbar)?;
        }
        for (flag, list) in [
            ("--eta", &values.eta),
            ("--eta-d", &values.eta_d),
            ("--eta-s", &values.eta_s),
            ("--eta-f", &values.eta_f),
        ] {
            if let Some(list) = list {
                params::check_efficiencies(flag, list)?;
            }
        }
        Ok(values)
    }

    fn detectors(&self) -> Vec<DetectorKind> {
        self.detector
            .map_or_else(|| DetectorKind::ALL.to_vec(), |kind| vec![kind])
    }

    fn nbars(&self) -> Vec<f64> {
        self.nbar.clone().unwrap_or_else(|| vec![1.0])
    }

    fn time_bins(&self) -> Vec<usize> {
        self.time_bins.clone().unwrap_or_else(|| vec![1])
    }

    /// `(eta_d, eta_s, eta_f)` combinations, unset efficiencies being 1.
    fn efficiencies(&self) -> Vec<(f64, f64, f64)> {
        if let Some(etas) = &self.eta {
            return etas.iter().map(|&eta| (eta, eta, eta)).collect();
        }
        let one = vec![1.0];
        let mut combos = Vec::new();
        for &d in self.eta_d.as_ref().unwrap_or(&one) {
            for &s in self.eta_s.as_ref().unwrap_or(&one) {
                for &f in self.eta_f.as_ref().unwrap_or(&one) {
                    combos.push((d, s, f));
                }
            }
        }
        combos
    }

    /// The one configuration described by the flags; per-bin pumping when
    /// `--nbar` lists one value per time-bin.
    pub fn single_config(&self) -> CliResult<ProtocolConfig> {
        let kind = self.detector.unwrap_or(DetectorKind::Bucket);
        let t = params::single("--t", &self.time_bins())?;
        let (eta_d, eta_s, eta_f) = params::single("--eta", &self.efficiencies())?;
        let pump = params::pump_schedule(&self.nbars(), t, self.chronological)?;
        params::config(t, pump, kind, eta_d, eta_s, eta_f)
    }

    fn record(&self, table: &mut Table) {
        table.set_meta(
            "detectors",
            self.detectors()
                .iter()
                .map(|k| k.name())
                .collect::<Vec<_>>(),
        );
        table.set_meta("nbar", self.nbars());
        table.set_meta(
            "efficiencies",
            self.efficiencies()
                .iter()
                .map(|(d, s, f)| json!({"eta_d": d, "eta_s": s, "eta_f": f}))
                .collect::<Vec<_>>(),
        );
        table.set_meta("t", self.time_bins());
        table.set_meta("chronological", self.chronological);
    }
}

/// Analytic values that a Monte Carlo run of `sources` parallel copies of
/// `config` estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticReference {
    pub herald_probability: f64,
    pub conditional_fidelity: Option<f64>,
    pub unconditional_fidelity: f64,
    /// Outcome index distribution, no-herald last.
    pub outcome_probabilities: Vec<f64>,
}

pub fn analytic_reference(config: &ProtocolConfig, sources: usize) -> CliResult<AnalyticReference> {
    let single = outcome_distribution(config);
    if sources == 1 {
        return Ok(AnalyticReference {
            herald_probability: single.herald_probability(),
            conditional_fidelity: conditional_fidelity(config).ok(),
            unconditional_fidelity: unconditional_fidelity(config),
            outcome_probabilities: single.probabilities().to_vec(),
        });
    }
    let dist = parallel_from_distribution(&single, sources)?;
    let fidelities: Vec<f64> = per_loop_fidelities(config)
        .into_iter()
        .map(|f| f.unwrap_or(0.0))
        .collect();
    let unconditional = parallel_unconditional_fidelity(&dist, &fidelities)?;
    let herald = 1.0 - dist.no_herald();
    Ok(AnalyticReference {
        herald_probability: herald,
        conditional_fidelity: (herald > 0.0).then(|| unconditional / herald),
        unconditional_fidelity: unconditional,
        outcome_probabilities: dist.probabilities,
    })
}

/// Runs a parsed command line, rejecting non-finite results.
pub fn run(cli: &Cli) -> CliResult<Table> {
    let mut table = dispatch(&cli.command)?;
    if let Some((row, column)) = table.find_non_finite() {
        return Err(CliError::NonFinite {
            row,
            column: column.to_string(),
        });
    }
    table.set_meta("tool", env!("CARGO_PKG_NAME"));
    table.set_meta("version", env!("CARGO_PKG_VERSION"));
    table.set_meta("command", cli.command.name());
    Ok(table)
}

fn dispatch(command: &Command) -> CliResult<Table> {
    match command {
        Command::Herald { model, .. } => herald(&ModelValues::parse(model)?),
        Command::Fidelity {
            model, per_loop, ..
        } => fidelity(&ModelValues::parse(model)?, *per_loop),
        Command::Sweep { model, .. } => sweep(&ModelValues::parse(model)?),
        Command::Optimize {
            model,
            objective,
            biased,
            nbar_min,
            nbar_max,
            ..
        } => {
            let bounds = NbarBounds::new(*nbar_min, *nbar_max)
                .map_err(|e| CliError::flag("--nbar-min/--nbar-max", e))?;
            optimize(
                &ModelValues::parse(model)?,
                (*objective).into(),
                *biased,
                bounds,
            )
        }
        Command::Simulate {
            model,
            trials,
            seed,
            sources,
            ..
        } => {
            if *trials == 0 {
                return Err(CliError::flag("--trials", "must be at least 1"));
            }
            monte_carlo(&ModelValues::parse(model)?, *sources, Some(*trials), *seed)
        }
        Command::Parallel {
            model,
            sources,
            trials,
            seed,
            ..
        } => {
            if *trials == Some(0) {
                return Err(CliError::flag("--trials", "must be at least 1"));
            }
            monte_carlo(&ModelValues::parse(model)?, *sources, *trials, *seed)
        }
        Command::Figure {
            id,
            model,
            sources,
            reoptimize,
            ..
        } => {
            if model.chronological {
                return Err(CliError::flag("--chronological", "not a figure parameter"));
            }
            let values = ModelValues::parse(model)?;
            let overrides = FigureOverrides {
                detector: values.detector,
                nbar: values.nbar,
                eta: values.eta,
                eta_d: values.eta_d,
                eta_s: values.eta_s,
                eta_f: values.eta_f,
                time_bins: values.time_bins,
                sources: *sources,
                reoptimize: *reoptimize,
            };
            figures::generate(id, &overrides)
        }
        Command::Feasibility {
            rate,
            attenuation,
            loops,
            eta_s,
            group_index,
            ..
        } => feasibility_table(&FeasibilityInput {
            repetition_rate: *rate,
            attenuation_db_per_km: *attenuation,
            loops: *loops,
            switch_efficiency: *eta_s,
            group_index: *group_index,
        }),
    }
}

fn herald(values: &ModelValues) -> CliResult<Table> {
    let mut table = Table::new(["detector", "nbar", "eta_d", "t", "S", "S_t"]);
    for kind in values.detectors() {
        for &nbar in &values.nbars() {
            for (eta_d, _, _) in values.efficiencies() {
                for &t in &values.time_bins() {
                    let config =
                        params::config(t, PumpSchedule::Constant(nbar), kind, eta_d, 1.0, 1.0)?;
                    let source = config.source_at(0);
                    table.push(vec![
                        kind.name().into(),
                        nbar.into(),
                        eta_d.into(),
                        t.into(),
                        herald_single_shot(&source, config.detector()).into(),
                        herald_train(&source, config.detector(), t).into(),
                    ]);
                }
            }
        }
    }
    values.record(&mut table);
    Ok(table)
}

fn fidelity(values: &ModelValues, per_loop: bool) -> CliResult<Table> {
    let config = values.single_config()?;
    let t = config.time_bins();
    let mut table = if per_loop {
        let dist = outcome_distribution(&config);
        let mut table = Table::new(["loops", "nbar", "transmission", "probability", "F"]);
        for (l, fid) in per_loop_fidelities(&config).into_iter().enumerate() {
            table.push(vec![
                l.into(),
                config.pump().nbar_at(l).into(),
                transmission(config.loss(), l).into(),
                dist.probabilities()[l].into(),
                fid.into(),
            ]);
        }
        table
    } else {
        let report = fidelity_report(&config);
        let mut table = Table::new([
            "detector", "eta_d", "eta_s", "eta_f", "t", "schedule", "S_t", "F_cond", "F_uncond",
        ]);
        table.push(vec![
            config.detector().kind().name().into(),
            config.detector().efficiency().into(),
            config.loss().switch_efficiency().into(),
            config.loss().fibre_efficiency().into(),
            t.into(),
            format_schedule(config.pump(), t, values.chronological).into(),
            report.train_herald_probability.into(),
            report.conditional.into(),
            report.unconditional.into(),
        ]);
        table
    };
    values.record(&mut table);
    Ok(table)
}

fn sweep(values: &ModelValues) -> CliResult<Table> {
    let mut table = Table::new([
        "detector", "nbar", "eta_d", "eta_s", "eta_f", "t", "S", "S_t", "F_cond", "F_uncond",
    ]);
    for kind in values.detectors() {
        for &nbar in &values.nbars() {
            for (eta_d, eta_s, eta_f) in values.efficiencies() {
                for &t in &values.time_bins() {
                    let config =
                        params::config(t, PumpSchedule::Constant(nbar), kind, eta_d, eta_s, eta_f)?;
                    let source = config.source_at(0);
                    table.push(vec![
                        kind.name().into(),
                        nbar.into(),
                        eta_d.into(),
                        eta_s.into(),
                        eta_f.into(),
                        t.into(),
                        herald_single_shot(&source, config.detector()).into(),
                        herald_train(&source, config.detector(), t).into(),
                        conditional_fidelity(&config).ok().into(),
                        unconditional_fidelity(&config).into(),
                    ]);
                }
            }
        }
    }
    values.record(&mut table);
    Ok(table)
}

fn optimize(
    values: &ModelValues,
    objective: ObjectiveKind,
    biased: bool,
    bounds: NbarBounds,
) -> CliResult<Table> {
    if values.nbar.is_some() {
        return Err(CliError::flag(
            "--nbar",
            "optimize searches the mean photon number itself",
        ));
    }
    let template = values.single_config()?;
    let t = template.time_bins();
    let mut table = Table::new([
        "strategy",
        "objective",
        "value",
        "schedule",
        "S_t",
        "F_cond",
        "F_uncond",
        "evaluations",
    ]);
    let objective_name = match objective {
        ObjectiveKind::ConditionalFidelity => "conditional",
        ObjectiveKind::UnconditionalFidelity => "unconditional",
    };
    let mut push = |strategy: &str, result: &OptimizationResult| -> CliResult<()> {
        let config = template.with_pump(result.schedule.clone())?;
        let report = fidelity_report(&config);
        table.push(vec![
            strategy.into(),
            objective_name.into(),
            result.objective_value.into(),
            format_schedule(&result.schedule, t, values.chronological).into(),
            report.train_herald_probability.into(),
            report.conditional.into(),
            report.unconditional.into(),
            result.evaluations.into(),
        ]);
        Ok(())
    };
    push(
        "constant",
        &optimize_constant(&template, objective, bounds)?,
    )?;
    if biased {
        push(
            "biased",
            &optimize_schedule(&template, objective, bounds, t)?,
        )?;
    }
    values.record(&mut table);
    table.set_meta("objective", objective_name);
    table.set_meta("bounds", vec![bounds.lo, bounds.hi]);
    Ok(table)
}

fn monte_carlo(
    values: &ModelValues,
    sources: usize,
    trials: Option<u64>,
    seed: u64,
) -> CliResult<Table> {
    if sources == 0 {
        return Err(CliError::flag("--sources", "must be at least 1"));
    }
    let config = values.single_config()?;
    let t = config.time_bins();
    let reference = analytic_reference(&config, sources)?;
    let summary = match trials {
        Some(trials) if sources == 1 => Some(run_simulation(&config, trials, seed)?),
        Some(trials) => Some(simulate_parallel_sources(
            &vec![config.clone(); sources],
            trials,
            seed,
        )?),
        None => None,
    };

    let mut table = Table::new([
        "quantity",
        "analytic",
        "estimate",
        "std_error",
        "sources",
        "trials",
        "seed",
    ]);
    let trials_value: Value = trials.into();
    let mut push = |quantity: String, analytic: Value, estimate: Option<(f64, f64)>| {
        table.push(vec![
            quantity.into(),
            analytic,
            estimate.map(|e| e.0).into(),
            estimate.map(|e| e.1).into(),
            sources.into(),
            trials_value.clone(),
            seed.into(),
        ]);
    };
    let pair = |e: loopsource_core::simulate::Estimate| (e.value, e.std_error);
    push(
        "herald_probability".into(),
        reference.herald_probability.into(),
        summary.as_ref().map(|s| pair(s.herald_rate)),
    );
    push(
        "conditional_fidelity".into(),
        reference.conditional_fidelity.into(),
        summary
            .as_ref()
            .and_then(|s| s.conditional_fidelity.map(pair)),
    );
    push(
        "unconditional_fidelity".into(),
        reference.unconditional_fidelity.into(),
        summary.as_ref().map(|s| pair(s.unconditional_fidelity)),
    );
    for (u, &prob) in reference.outcome_probabilities.iter().enumerate() {
        let name = if u < t {
            format!("p_loops_{u}")
        } else {
            "p_no_herald".to_string()
        };
        let estimate = summary.as_ref().map(|s: &SimulationSummary| {
            (
                s.loop_histogram.probabilities()[u],
                s.histogram_std_error(u, prob),
            )
        });
        push(name, prob.into(), estimate);
    }
    values.record(&mut table);
    table.set_meta("sources", sources);
    table.set_meta("trials", trials);
    table.set_meta("seed", seed);
    Ok(table)
}

fn feasibility_table(input: &FeasibilityInput) -> CliResult<Table> {
    let report = feasibility(input)?;
    let mut table = Table::new([
        "repetition_rate",
        "bin_separation",
        "fibre_length",
        "total_path_length",
        "fibre_transmission",
        "loops_assessed",
        "switch_efficiency",
        "net_transmission",
    ]);
    table.push(vec![
        report.repetition_rate.into(),
        report.bin_separation.into(),
        report.fibre_length.into(),
        report.total_path_length.into(),
        report.fibre_transmission.into(),
        report.loops_assessed.into(),
        report.switch_efficiency.into(),
        report.net_transmission.into(),
    ]);
    table.set_meta("attenuation_db_per_km", input.attenuation_db_per_km);
    table.set_meta("group_index", input.group_index);
    table.set_meta("loops", input.loops);
    table.set_meta("eta_s", input.switch_efficiency);
    table.set_meta("rate", input.repetition_rate);
    Ok(table)
}

/// Writes `table` to `--out` or standard output.
pub fn emit(table: &Table, output: &OutputArgs) -> CliResult<()> {
    match &output.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write_table(table, output.format, &mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_table(table, output.format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn write_table<W: Write>(table: &Table, format: Format, out: W) -> CliResult<()> {
    match format {
        Format::Csv => table.write_csv(out),
        Format::Json => table.write_json(out),
    }
}
