//! Line-oriented `key = value` configuration with unit suffixes.
//!
//! Lengths accept `km` or `m`, times `h` or `s`, velocities `m/s`; bare
//! numbers are dimensionless. Lists are comma separated with one trailing
//! unit applying to every element (`dt_list = 180, 360, 1800, 3600 s`), and
//! ranges use `lo..hi unit` (`pulse = 720..1080 km`). `#` starts a comment.
//! Everything is converted to SI at parse time; [`echo`] renders a resolved
//! config back in display units (km, s) for eyeballing and round-trips.

use std::fmt::Write as _;

use thiserror::Error;

use splitlab_core::advection::{AdvectionConfig, BoundaryKind, StepPulse};
use splitlab_core::splitting::{ScenarioConfig, SplitSequence};
use splitlab_core::{Grid1D, MechanismParams, SolverConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key '{0}'")]
    MissingKey(&'static str),
    #[error("invalid configuration: {0}")]
    Validation(String),
}

/// Keys shared by scenario and sweep configs, already in SI.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentBase {
    /// Domain length in meters (domain starts at x = 0).
    pub domain_length: f64,
    pub u: f64,
    pub dt_internal: f64,
    pub boundary: BoundaryKind,
    pub pulse: StepPulse,
    pub mechanism: MechanismParams,
    pub solver: SolverConfig,
    pub horizon: f64,
    /// RRMS threshold applied to the reference field.
    pub threshold: f64,
}

impl ExperimentBase {
    pub fn grid(&self, dx: f64) -> Result<Grid1D, ConfigError> {
        Grid1D::from_spacing(0.0, self.domain_length, dx)
            .map_err(|e| ConfigError::Validation(e.to_string()))
    }

    pub fn scenario(
        &self,
        dx: f64,
        dt_split: f64,
        sequence: SplitSequence,
    ) -> Result<ScenarioConfig, ConfigError> {
        let cfg = ScenarioConfig {
            grid: self.grid(dx)?,
            advection: AdvectionConfig {
                u: self.u,
                dt_internal: self.dt_internal,
                boundary: self.boundary,
            },
            mechanism: self.mechanism,
            solver: self.solver,
            sequence,
            dt_split,
            horizon: self.horizon,
            pulse: self.pulse,
        };
        cfg.validate()
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        Ok(cfg)
    }
}

/// Which field the RRMS compares against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceSpec {
    /// Exact solution (sequence-appropriate: shifted steady plateau for
    /// split runs, chemistry-free shift for transport-only, unshifted
    /// plateau for chemistry-only).
    Analytic,
    /// The final fields of a named run at the same grid spacing.
    Run {
        sequence: SplitSequence,
        dt_split: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub base: ExperimentBase,
    pub dx: f64,
    pub dt_split: f64,
    pub sequence: SplitSequence,
    pub reference: ReferenceSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ExperimentBase,
    pub dx_list: Vec<f64>,
    pub dt_list: Vec<f64>,
    pub sequences: Vec<SplitSequence>,
    pub reference: ReferenceSpec,
}

/// Parameters of the linear-theory report (`mode = linear`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSpec {
    pub dim: usize,
    pub seed: u64,
    pub trials: usize,
    pub eps_list: Vec<f64>,
}

impl Default for LinearSpec {
    fn default() -> Self {
        Self {
            dim: 3,
            seed: 42,
            trials: 20,
            eps_list: vec![1e-1, 1e-2, 1e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedConfig {
    Scenario(ScenarioSpec),
    Sweep(SweepSpec),
    Linear(LinearSpec),
}

struct RawEntry {
    line: usize,
    value: String,
    used: bool,
}

struct RawConfig {
    entries: Vec<(String, RawEntry)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(String, RawEntry)> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("expected 'key = value', got '{content}'"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    msg: "empty key or value".into(),
                });
            }
            if entries.iter().any(|(k, _)| *k == key) {
                return Err(ConfigError::DuplicateKey { line, key });
            }
            entries.push((
                key,
                RawEntry {
                    line,
                    value,
                    used: false,
                },
            ));
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries
            .iter_mut()
            .find(|(k, _)| k == key)
            .map(|(_, e)| {
                e.used = true;
                (e.line, e.value.clone())
            })
    }

    fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|(k, _)| k == key)
    }

    fn reject_unused(&self) -> Result<(), ConfigError> {
        for (key, entry) in &self.entries {
            if !entry.used {
                return Err(ConfigError::UnknownKey {
                    line: entry.line,
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Dimension expected for a value; controls which unit suffixes are legal.
#[derive(Clone, Copy, PartialEq)]
enum Dim {
    Length,
    Time,
    Velocity,
    None,
}

fn unit_factor(unit: &str, dim: Dim, line: usize) -> Result<f64, ConfigError> {
    let ok = |f| Ok(f);
    match (dim, unit) {
        (Dim::Length, "km") => ok(1000.0),
        (Dim::Length, "m") => ok(1.0),
        (Dim::Time, "h") => ok(3600.0),
        (Dim::Time, "s") => ok(1.0),
        (Dim::Velocity, "m/s") => ok(1.0),
        _ => Err(ConfigError::Parse {
            line,
            msg: format!("unit '{unit}' is not valid here"),
        }),
    }
}

/// Split a token like "22.5 km" or "1e-3" into number text and unit text.
fn split_unit(token: &str) -> (&str, Option<&str>) {
    match token.rfind(|c: char| c.is_ascii_digit() || c == '.') {
        Some(pos) => {
            let (num, unit) = token.split_at(pos + 1);
            let unit = unit.trim();
            if unit.is_empty() {
                (num.trim(), None)
            } else {
                (num.trim(), Some(unit))
            }
        }
        None => (token.trim(), None),
    }
}

fn parse_number(text: &str, line: usize) -> Result<f64, ConfigError> {
    text.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("'{text}' is not a number"),
    })
}

fn parse_scalar(value: &str, dim: Dim, line: usize) -> Result<f64, ConfigError> {
    let (num, unit) = split_unit(value);
    let factor = match (unit, dim) {
        (None, Dim::None) => 1.0,
        (None, _) => {
            return Err(ConfigError::Parse {
                line,
                msg: format!("'{value}' needs a unit"),
            })
        }
        (Some(u), _) => unit_factor(u, dim, line)?,
    };
    Ok(parse_number(num, line)? * factor)
}

/// Comma-separated list; a unit on the final element applies to all.
fn parse_list(value: &str, dim: Dim, line: usize) -> Result<Vec<f64>, ConfigError> {
    let tokens: Vec<&str> = value.split(',').map(str::trim).collect();
    let (_, tail_unit) = split_unit(tokens.last().copied().unwrap_or(""));
    let factor = match (tail_unit, dim) {
        (None, Dim::None) => 1.0,
        (None, _) => {
            return Err(ConfigError::Parse {
                line,
                msg: format!("list '{value}' needs a trailing unit"),
            })
        }
        (Some(u), _) => unit_factor(u, dim, line)?,
    };
    tokens
        .iter()
        .map(|tok| {
            let (num, unit) = split_unit(tok);
            match unit {
                None => Ok(parse_number(num, line)? * factor),
                Some(u) => Ok(parse_number(num, line)? * unit_factor(u, dim, line)?),
            }
        })
        .collect()
}

fn parse_range(value: &str, dim: Dim, line: usize) -> Result<(f64, f64), ConfigError> {
    let Some((lo, hi)) = value.split_once("..") else {
        return Err(ConfigError::Parse {
            line,
            msg: format!("'{value}' is not a 'lo..hi unit' range"),
        });
    };
    let (hi_num, unit) = split_unit(hi.trim());
    let factor = match (unit, dim) {
        (None, Dim::None) => 1.0,
        (None, _) => {
            return Err(ConfigError::Parse {
                line,
                msg: format!("range '{value}' needs a unit"),
            })
        }
        (Some(u), _) => unit_factor(u, dim, line)?,
    };
    Ok((
        parse_number(lo.trim(), line)? * factor,
        parse_number(hi_num, line)? * factor,
    ))
}

fn parse_sequence(value: &str, line: usize) -> Result<SplitSequence, ConfigError> {
    SplitSequence::parse(value).ok_or_else(|| ConfigError::Parse {
        line,
        msg: format!(
            "unknown sequence '{value}' (expected one of {})",
            SplitSequence::ALL.map(|s| s.label()).join(", ")
        ),
    })
}

fn parse_reference(value: &str, line: usize) -> Result<ReferenceSpec, ConfigError> {
    if value == "analytic" {
        return Ok(ReferenceSpec::Analytic);
    }
    if let Some((seq, dt)) = value.split_once('@') {
        let sequence = parse_sequence(seq.trim(), line)?;
        let dt_split = parse_scalar(dt.trim(), Dim::Time, line)?;
        return Ok(ReferenceSpec::Run { sequence, dt_split });
    }
    Err(ConfigError::Parse {
        line,
        msg: format!("reference must be 'analytic' or '<sequence> @ <dt>', got '{value}'"),
    })
}

/// Parse a configuration text into a scenario, sweep, or linear spec.
///
/// The mode is `mode = scenario|sweep|linear` when given, otherwise inferred:
/// list keys (`dx_list`/`dt_list`/`sequences`) imply a sweep.
pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let mut raw = RawConfig::parse(text)?;

    let mode = match raw.take("mode") {
        Some((line, value)) => match value.as_str() {
            "scenario" | "sweep" | "linear" => value,
            other => {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("mode must be scenario, sweep or linear, got '{other}'"),
                })
            }
        },
        None => {
            if raw.has("dx_list") || raw.has("dt_list") || raw.has("sequences") {
                "sweep".into()
            } else {
                "scenario".into()
            }
        }
    };

    let parsed = match mode.as_str() {
        "linear" => ParsedConfig::Linear(parse_linear(&mut raw)?),
        "scenario" => {
            let base = parse_base(&mut raw)?;
            let dx = required(&mut raw, "dx", Dim::Length)?;
            let dt_split = required(&mut raw, "dt_split", Dim::Time)?;
            let (line, seq) = raw
                .take("sequence")
                .ok_or(ConfigError::MissingKey("sequence"))?;
            let sequence = parse_sequence(&seq, line)?;
            let reference = take_reference(&mut raw)?;
            let spec = ScenarioSpec {
                base,
                dx,
                dt_split,
                sequence,
                reference,
            };
            spec.base.scenario(spec.dx, spec.dt_split, spec.sequence)?;
            validate_reference(&spec.base, &[spec.dx], spec.reference)?;
            ParsedConfig::Scenario(spec)
        }
        _ => {
            let base = parse_base(&mut raw)?;
            let (line_dx, dx_raw) = raw
                .take("dx_list")
                .ok_or(ConfigError::MissingKey("dx_list"))?;
            let dx_list = parse_list(&dx_raw, Dim::Length, line_dx)?;
            let (line_dt, dt_raw) = raw
                .take("dt_list")
                .ok_or(ConfigError::MissingKey("dt_list"))?;
            let dt_list = parse_list(&dt_raw, Dim::Time, line_dt)?;
            let (line_seq, seq_raw) = raw
                .take("sequences")
                .ok_or(ConfigError::MissingKey("sequences"))?;
            let sequences = seq_raw
                .split(',')
                .map(|s| parse_sequence(s.trim(), line_seq))
                .collect::<Result<Vec<_>, _>>()?;
            let reference = take_reference(&mut raw)?;
            let spec = SweepSpec {
                base,
                dx_list,
                dt_list,
                sequences,
                reference,
            };
            // Every triple must build a valid scenario now, not mid-sweep.
            for &dx in &spec.dx_list {
                for &dt in &spec.dt_list {
                    for &seq in &spec.sequences {
                        spec.base.scenario(dx, dt, seq)?;
                    }
                }
            }
            validate_reference(&spec.base, &spec.dx_list, spec.reference)?;
            ParsedConfig::Sweep(spec)
        }
    };
    raw.reject_unused()?;
    Ok(parsed)
}

fn required(raw: &mut RawConfig, key: &'static str, dim: Dim) -> Result<f64, ConfigError> {
    let (line, value) = raw.take(key).ok_or(ConfigError::MissingKey(key))?;
    parse_scalar(&value, dim, line)
}

fn optional(
    raw: &mut RawConfig,
    key: &'static str,
    dim: Dim,
    default: f64,
) -> Result<f64, ConfigError> {
    match raw.take(key) {
        Some((line, value)) => parse_scalar(&value, dim, line),
        None => Ok(default),
    }
}

fn take_reference(raw: &mut RawConfig) -> Result<ReferenceSpec, ConfigError> {
    match raw.take("reference") {
        Some((line, value)) => parse_reference(&value, line),
        None => Ok(ReferenceSpec::Analytic),
    }
}

fn validate_reference(
    base: &ExperimentBase,
    dx_list: &[f64],
    reference: ReferenceSpec,
) -> Result<(), ConfigError> {
    if let ReferenceSpec::Run { sequence, dt_split } = reference {
        for &dx in dx_list {
            base.scenario(dx, dt_split, sequence)?;
        }
    }
    Ok(())
}

fn parse_base(raw: &mut RawConfig) -> Result<ExperimentBase, ConfigError> {
    let defaults_mech = MechanismParams::default();
    let defaults_solver = SolverConfig::default();

    let domain_length = required(raw, "L", Dim::Length)?;
    let u = required(raw, "u", Dim::Velocity)?;
    let horizon = required(raw, "horizon", Dim::Time)?;
    let (pulse_line, pulse_raw) = raw.take("pulse").ok_or(ConfigError::MissingKey("pulse"))?;
    let (lo, hi) = parse_range(&pulse_raw, Dim::Length, pulse_line)?;
    let amplitude = optional(raw, "amplitude", Dim::None, 1.0)?;
    let dt_internal = optional(raw, "dt_internal", Dim::Time, 90.0)?;
    let k1 = optional(raw, "k1", Dim::None, defaults_mech.k1)?;
    let k2 = optional(raw, "k2", Dim::None, defaults_mech.k2)?;
    let epsilon = optional(raw, "epsilon", Dim::None, defaults_mech.stiffness_ratio)?;
    let rtol = optional(raw, "rtol", Dim::None, defaults_solver.rtol)?;
    let atol = optional(raw, "atol", Dim::None, defaults_solver.atol)?;
    let threshold = optional(raw, "threshold_a", Dim::None, 1e-4)?;
    let boundary = match raw.take("boundary") {
        None => BoundaryKind::ZeroInflow,
        Some((line, value)) => match value.as_str() {
            "zero_inflow" => BoundaryKind::ZeroInflow,
            "periodic" => BoundaryKind::Periodic,
            other => {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("boundary must be zero_inflow or periodic, got '{other}'"),
                })
            }
        },
    };

    if !(k1 > 0.0) || !(k2 > 0.0) {
        return Err(ConfigError::Validation(format!(
            "reaction rates must be positive, got k1={k1}, k2={k2}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(ConfigError::Validation(format!(
            "stiffness ratio must be positive, got {epsilon}"
        )));
    }
    if !(threshold > 0.0) {
        return Err(ConfigError::Validation(format!(
            "threshold_a must be positive, got {threshold}"
        )));
    }

    Ok(ExperimentBase {
        domain_length,
        u,
        dt_internal,
        boundary,
        pulse: StepPulse { lo, hi, amplitude },
        mechanism: MechanismParams::new(k1, k2, epsilon),
        solver: SolverConfig {
            rtol,
            atol,
            ..SolverConfig::default()
        },
        horizon,
        threshold,
    })
}

fn parse_linear(raw: &mut RawConfig) -> Result<LinearSpec, ConfigError> {
    let defaults = LinearSpec::default();
    let dim = optional(raw, "dim", Dim::None, defaults.dim as f64)? as usize;
    let seed = optional(raw, "seed", Dim::None, defaults.seed as f64)? as u64;
    let trials = optional(raw, "trials", Dim::None, defaults.trials as f64)? as usize;
    let eps_list = match raw.take("eps_list") {
        Some((line, value)) => parse_list(&value, Dim::None, line)?,
        None => defaults.eps_list,
    };
    if eps_list.iter().any(|&e| e <= 0.0) {
        return Err(ConfigError::Validation("eps_list must be positive".into()));
    }
    Ok(LinearSpec {
        dim,
        seed,
        trials,
        eps_list,
    })
}

fn km(x: f64) -> f64 {
    x / 1000.0
}

/// Render a parsed config back as configuration text (display units: km for
/// lengths, s for times). `parse_config(echo(cfg))` equals `cfg`.
pub fn echo(cfg: &ParsedConfig) -> String {
    let mut out = String::new();
    match cfg {
        ParsedConfig::Linear(lin) => {
            let _ = writeln!(out, "mode = linear");
            let _ = writeln!(out, "dim = {}", lin.dim);
            let _ = writeln!(out, "seed = {}", lin.seed);
            let _ = writeln!(out, "trials = {}", lin.trials);
            let eps: Vec<String> = lin.eps_list.iter().map(|e| format!("{e}")).collect();
            let _ = writeln!(out, "eps_list = {}", eps.join(", "));
        }
        ParsedConfig::Scenario(spec) => {
            let _ = writeln!(out, "mode = scenario");
            echo_base(&mut out, &spec.base);
            let _ = writeln!(out, "dx = {} km", km(spec.dx));
            let _ = writeln!(out, "dt_split = {} s", spec.dt_split);
            let _ = writeln!(out, "sequence = {}", spec.sequence);
            echo_reference(&mut out, spec.reference);
        }
        ParsedConfig::Sweep(spec) => {
            let _ = writeln!(out, "mode = sweep");
            echo_base(&mut out, &spec.base);
            let dx: Vec<String> = spec.dx_list.iter().map(|&d| format!("{}", km(d))).collect();
            let _ = writeln!(out, "dx_list = {} km", dx.join(", "));
            let dt: Vec<String> = spec.dt_list.iter().map(|&d| format!("{d}")).collect();
            let _ = writeln!(out, "dt_list = {} s", dt.join(", "));
            let seqs: Vec<&str> = spec.sequences.iter().map(|s| s.label()).collect();
            let _ = writeln!(out, "sequences = {}", seqs.join(", "));
            echo_reference(&mut out, spec.reference);
        }
    }
    out
}

fn echo_base(out: &mut String, base: &ExperimentBase) {
    let _ = writeln!(out, "L = {} km", km(base.domain_length));
    let _ = writeln!(out, "u = {} m/s", base.u);
    let _ = writeln!(out, "horizon = {} s", base.horizon);
    let _ = writeln!(
        out,
        "pulse = {}..{} km",
        km(base.pulse.lo),
        km(base.pulse.hi)
    );
    let _ = writeln!(out, "amplitude = {}", base.pulse.amplitude);
    let _ = writeln!(out, "dt_internal = {} s", base.dt_internal);
    let _ = writeln!(out, "k1 = {}", base.mechanism.k1);
    let _ = writeln!(out, "k2 = {}", base.mechanism.k2);
    let _ = writeln!(out, "epsilon = {}", base.mechanism.stiffness_ratio);
    let _ = writeln!(out, "rtol = {}", base.solver.rtol);
    let _ = writeln!(out, "atol = {}", base.solver.atol);
    let _ = writeln!(out, "threshold_a = {}", base.threshold);
    let boundary = match base.boundary {
        BoundaryKind::ZeroInflow => "zero_inflow",
        BoundaryKind::Periodic => "periodic",
    };
    let _ = writeln!(out, "boundary = {boundary}");
}

fn echo_reference(out: &mut String, reference: ReferenceSpec) {
    match reference {
        ReferenceSpec::Analytic => {
            let _ = writeln!(out, "reference = analytic");
        }
        ReferenceSpec::Run { sequence, dt_split } => {
            let _ = writeln!(out, "reference = {sequence} @ {dt_split} s");
        }
    }
}
