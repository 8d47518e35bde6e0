//! Flag value parsing shared by the commands.

use loopsource_core::{DetectorKind, DetectorModel, LossModel, ProtocolConfig, PumpSchedule};

use crate::error::{CliError, CliResult};
use crate::table::format_float;

/// Largest time-bin count accepted from the command line.
pub const MAX_TIME_BINS: usize = 100_000;

/// Comma-separated floats, e.g. `0.1,0.5,1`.
pub fn parse_f64_list(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    let values = text
        .split(',')
        .map(|field| {
            let field = field.trim();
            field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::flag(flag, format!("`{field}` is not a finite number")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(values)
}

/// `n`, an inclusive range `a..b` (or `a..=b`), or a comma list.
pub fn parse_time_bins(flag: &str, text: &str) -> CliResult<Vec<usize>> {
    let parse_one = |field: &str| -> CliResult<usize> {
        let field = field.trim();
        let t = field
            .parse::<usize>()
            .map_err(|_| CliError::flag(flag, format!("`{field}` is not a positive integer")))?;
        if t == 0 || t > MAX_TIME_BINS {
            return Err(CliError::flag(
                flag,
                format!("time-bin count must be in 1..={MAX_TIME_BINS}, got {t}"),
            ));
        }
        Ok(t)
    };
    if let Some((lo, hi)) = text.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi) = (parse_one(lo)?, parse_one(hi)?);
        if lo > hi {
            return Err(CliError::flag(flag, format!("empty range {lo}..{hi}")));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(parse_one).collect()
}

pub fn check_efficiencies(flag: &str, values: &[f64]) -> CliResult<()> {
    match values.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(bad) => Err(CliError::flag(
            flag,
            format!("efficiency {bad} outside [0, 1]"),
        )),
        None => Ok(()),
    }
}

pub fn check_nbars(flag: &str, values: &[f64]) -> CliResult<()> {
    match values.iter().find(|x| **x < 0.0) {
        Some(bad) => Err(CliError::flag(
            flag,
            format!("mean photon number {bad} is negative"),
        )),
        None => Ok(()),
    }
}

/// The single value of a list flag, for commands that take exactly one.
pub fn single<T: Copy>(flag: &str, values: &[T]) -> CliResult<T> {
    match values {
        [value] => Ok(*value),
        _ => Err(CliError::flag(flag, "this command takes a single value")),
    }
}

/// Pump schedule from `--nbar` values: one value is a constant pump, `t`
/// values are one per bin (reverse chronological unless `chronological`).
pub fn pump_schedule(nbars: &[f64], t: usize, chronological: bool) -> CliResult<PumpSchedule> {
    match nbars.len() {
        1 => Ok(PumpSchedule::Constant(nbars[0])),
        n if n == t => Ok(if chronological {
            PumpSchedule::from_chronological(nbars.to_vec())
        } else {
            PumpSchedule::PerBin(nbars.to_vec())
        }),
        n => Err(CliError::flag(
            "--nbar",
            format!("expected 1 value or one per time-bin ({t}), got {n}"),
        )),
    }
}

pub fn config(
    t: usize,
    pump: PumpSchedule,
    kind: DetectorKind,
    eta_d: f64,
    eta_s: f64,
    eta_f: f64,
) -> CliResult<ProtocolConfig> {
    let detector = DetectorModel::new(kind, eta_d).map_err(|e| CliError::flag("--eta-d", e))?;
    let loss = LossModel::new(eta_s, eta_f).map_err(|e| CliError::flag("--eta-s/--eta-f", e))?;
    ProtocolConfig::new(t, pump, detector, loss).map_err(|e| CliError::flag("--nbar", e))
}

/// A constant pump as one value, a per-bin schedule as `;`-joined values in
/// chronological or reverse chronological order.
pub fn format_schedule(schedule: &PumpSchedule, t: usize, chronological: bool) -> String {
    if let PumpSchedule::Constant(nbar) = schedule {
        return format_float(*nbar);
    }
    let mut values = schedule.to_vec(t);
    if chronological {
        values.reverse();
    }
    values
        .iter()
        .map(|x| format_float(*x))
        .collect::<Vec<_>>()
        .join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(
            parse_f64_list("--nbar", "0.1, 1,2e-3").unwrap(),
            vec![0.1, 1.0, 2e-3]
        );
        assert!(parse_f64_list("--nbar", "0.1,abc").is_err());
        assert!(parse_f64_list("--nbar", "nan").is_err());
        assert_eq!(parse_time_bins("--t", "3").unwrap(), vec![3]);
        assert_eq!(parse_time_bins("--t", "1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_time_bins("--t", "2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_time_bins("--t", "1,2,4").unwrap(), vec![1, 2, 4]);
        assert!(parse_time_bins("--t", "0").is_err());
        assert!(parse_time_bins("--t", "5..2").is_err());
        assert!(parse_time_bins("--t", "-1").is_err());
    }

    #[test]
    fn errors_name_the_flag() {
        let err = parse_time_bins("--t", "0").unwrap_err();
        assert!(err.to_string().contains("--t"));
        let err = check_efficiencies("--eta-d", &[0.5, 1.2]).unwrap_err();
        assert!(err.to_string().contains("--eta-d"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn schedules() {
        assert_eq!(
            pump_schedule(&[0.5], 4, false).unwrap(),
            PumpSchedule::Constant(0.5)
        );
        assert_eq!(
            pump_schedule(&[1.0, 2.0, 3.0], 3, true).unwrap(),
            PumpSchedule::PerBin(vec![3.0, 2.0, 1.0])
        );
        assert!(pump_schedule(&[1.0, 2.0], 3, false).is_err());
        let schedule = PumpSchedule::PerBin(vec![0.25, 0.5]);
        assert_eq!(
            format_schedule(&schedule, 2, true),
            "5.0000000000000000e-1;2.5000000000000000e-1"
        );
    }
}
