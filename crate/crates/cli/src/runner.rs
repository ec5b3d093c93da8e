//! Scenario and sweep execution with CSV persistence.
//!
//! Every run writes `fields_<key>.csv` with the final state and yields an
//! [`ErrorRecord`] of metrics against the configured reference. Sweeps write
//! one `summary.csv` with a stable column order, rows sorted by
//! (dx, dt, sequence) regardless of execution order, all numbers at full
//! round-trip precision.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use splitlab_core::mechanism::{
    analytic_reference, chemistry_only_reference, transport_only_reference, SpeciesFields,
    STEADY_STATE_GUARD,
};
use splitlab_core::metrics::{l2_error, rrms, rrms_species_mean, Rrms, RrmsConfig};
use splitlab_core::splitting::{run_simulation, SplitSequence};

use crate::config::{ExperimentBase, ReferenceSpec, ScenarioSpec, SweepSpec};
use crate::{fmt_full, HarnessError};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str =
    "dx_km,dt_s,sequence,rrms_NO,rrms_NO2,rrms_O3,rrms_mean,l2_NO,l2_NO2,l2_O3,mass_drift,wall_s";

/// Metrics of one run against its reference, keyed by (dx, dt, sequence).
#[derive(Debug, Clone)]
pub struct ErrorRecord {
    pub dx_km: f64,
    pub dt_s: f64,
    pub sequence: SplitSequence,
    /// Per-species RRMS (NO, NO2, O3); `None` marks an empty threshold set.
    pub rrms: [Option<f64>; 3],
    pub rrms_mean: f64,
    /// Count of species skipped in the mean for empty support.
    pub rrms_skipped: usize,
    pub l2: [f64; 3],
    /// Largest relative drift of the lumped masses over the run.
    pub mass_drift: f64,
    pub wall_s: f64,
}

impl ErrorRecord {
    pub fn key(&self) -> String {
        scenario_key(self.sequence, self.dx_km, self.dt_s)
    }

    fn csv_row(&self) -> String {
        let rrms_col = |v: &Option<f64>| match v {
            Some(x) => fmt_full(*x),
            None => "nan".into(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_full(self.dx_km),
            fmt_full(self.dt_s),
            self.sequence,
            rrms_col(&self.rrms[0]),
            rrms_col(&self.rrms[1]),
            rrms_col(&self.rrms[2]),
            fmt_full(self.rrms_mean),
            fmt_full(self.l2[0]),
            fmt_full(self.l2[1]),
            fmt_full(self.l2[2]),
            fmt_full(self.mass_drift),
            fmt_full(self.wall_s),
        )
    }
}

pub fn scenario_key(sequence: SplitSequence, dx_km: f64, dt_s: f64) -> String {
    format!("{}_dx{}_dt{}", sequence, dx_km, dt_s)
}

/// Reference fields for a run. For the analytic reference the shape depends
/// on which operators the sequence exercises.
pub fn reference_fields(
    base: &ExperimentBase,
    dx: f64,
    sequence: SplitSequence,
    reference: ReferenceSpec,
) -> Result<SpeciesFields, HarnessError> {
    let key = format!("{}_dx{}_reference", sequence, dx / 1000.0);
    let grid = base.grid(dx)?;
    match reference {
        ReferenceSpec::Analytic => {
            let fields = match sequence {
                SplitSequence::TransportOnly => {
                    transport_only_reference(base.horizon, grid, base.pulse, base.u)
                }
                SplitSequence::ChemistryOnly => {
                    chemistry_only_reference(grid, base.pulse, &base.mechanism)
                }
                _ => analytic_reference(
                    base.horizon,
                    grid,
                    base.pulse,
                    base.u,
                    &base.mechanism,
                    STEADY_STATE_GUARD,
                ),
            };
            fields.map_err(|source| HarnessError::Reference { key, source })
        }
        ReferenceSpec::Run {
            sequence: ref_seq,
            dt_split,
        } => {
            let cfg = base.scenario(dx, dt_split, ref_seq)?;
            let out = run_simulation(&cfg).map_err(|source| HarnessError::Simulation {
                key: scenario_key(ref_seq, dx / 1000.0, dt_split),
                source,
            })?;
            Ok(out.fields)
        }
    }
}

fn measure(
    base: &ExperimentBase,
    dx: f64,
    dt_split: f64,
    sequence: SplitSequence,
    reference: &SpeciesFields,
) -> Result<(ErrorRecord, SpeciesFields), HarnessError> {
    let key = scenario_key(sequence, dx / 1000.0, dt_split);
    let cfg = base.scenario(dx, dt_split, sequence)?;
    let out = run_simulation(&cfg).map_err(|source| HarnessError::Simulation {
        key: key.clone(),
        source,
    })?;

    let rrms_cfg = RrmsConfig {
        threshold: base.threshold,
    };
    let mut per_species = [Rrms::EmptySupport; 3];
    let mut l2 = [0.0; 3];
    for (i, (ref_field, test_field)) in reference
        .species()
        .into_iter()
        .zip(out.fields.species())
        .enumerate()
    {
        per_species[i] =
            rrms(ref_field, test_field, &rrms_cfg).map_err(|source| HarnessError::Metrics {
                key: key.clone(),
                source,
            })?;
        l2[i] = l2_error(ref_field, test_field).map_err(|source| HarnessError::Metrics {
            key: key.clone(),
            source,
        })?;
    }
    let mean = rrms_species_mean(&per_species).map_err(|source| HarnessError::Metrics {
        key: key.clone(),
        source,
    })?;
    if mean.skipped > 0 {
        eprintln!(
            "warning: {key}: {} species skipped in the RRMS mean (empty threshold set)",
            mean.skipped
        );
    }

    let record = ErrorRecord {
        dx_km: dx / 1000.0,
        dt_s: dt_split,
        sequence,
        rrms: per_species.map(|r| r.value()),
        rrms_mean: mean.mean,
        rrms_skipped: mean.skipped,
        l2,
        mass_drift: out.diagnostics.lumped_mass_drift(),
        wall_s: out.diagnostics.wall.as_secs_f64(),
    };
    Ok((record, out.fields))
}

/// CSV of per-cell concentrations, columns `x_km,NO,NO2,O3`. Negative
/// round-off is clipped at this output boundary.
pub fn write_fields_csv(path: &Path, fields: &SpeciesFields) -> Result<(), HarnessError> {
    let clamped = fields.clamped_non_negative();
    let grid = clamped.grid();
    let mut text = String::from("x_km,NO,NO2,O3\n");
    for i in 0..grid.n_cells() {
        let s = clamped.at(i);
        text.push_str(&format!(
            "{},{},{},{}\n",
            fmt_full(grid.center(i) / 1000.0),
            fmt_full(s.no),
            fmt_full(s.no2),
            fmt_full(s.o3),
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Run one scenario: write `fields_<key>.csv` into `out_dir` and return the
/// metrics record.
pub fn run_scenario(spec: &ScenarioSpec, out_dir: &Path) -> Result<ErrorRecord, HarnessError> {
    fs::create_dir_all(out_dir)?;
    let reference = reference_fields(&spec.base, spec.dx, spec.sequence, spec.reference)?;
    let (record, fields) = measure(
        &spec.base,
        spec.dx,
        spec.dt_split,
        spec.sequence,
        &reference,
    )?;
    write_fields_csv(
        &out_dir.join(format!("fields_{}.csv", record.key())),
        &fields,
    )?;
    Ok(record)
}

/// Emit the analytic reference for a scenario as `reference_<key>.csv`.
pub fn write_reference_csv(
    base: &ExperimentBase,
    dx: f64,
    sequence: SplitSequence,
    out_dir: &Path,
) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(out_dir)?;
    let fields = reference_fields(base, dx, sequence, ReferenceSpec::Analytic)?;
    let path = out_dir.join(format!("reference_dx{}.csv", dx / 1000.0));
    write_fields_csv(&path, &fields)?;
    Ok(path)
}

/// Run a full sweep on up to `jobs` worker threads. The summary is assembled
/// in (dx, dt, sequence) order regardless of completion order; `jobs = 1`
/// executes fully sequentially.
pub fn run_sweep(
    spec: &SweepSpec,
    out_dir: &Path,
    jobs: usize,
) -> Result<Vec<ErrorRecord>, HarnessError> {
    fs::create_dir_all(out_dir)?;

    // References are shared across rows: one per (dx, sequence-shape).
    let mut references: HashMap<(u64, &'static str), SpeciesFields> = HashMap::new();
    for &dx in &spec.dx_list {
        for &seq in &spec.sequences {
            let shape = reference_shape(seq, spec.reference);
            references
                .entry((dx.to_bits(), shape))
                .or_insert(reference_fields(&spec.base, dx, seq, spec.reference)?);
        }
    }

    let mut triples: Vec<(f64, f64, SplitSequence)> = Vec::new();
    for &dx in &spec.dx_list {
        for &dt in &spec.dt_list {
            for &seq in &spec.sequences {
                triples.push((dx, dt, seq));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("rayon pool");
    let results: Result<Vec<(ErrorRecord, SpeciesFields)>, HarnessError> = pool.install(|| {
        use rayon::prelude::*;
        triples
            .par_iter()
            .map(|&(dx, dt, seq)| {
                let reference = &references[&(dx.to_bits(), reference_shape(seq, spec.reference))];
                measure(&spec.base, dx, dt, seq, reference)
            })
            .collect()
    });

    let mut records = Vec::new();
    for (record, fields) in results? {
        write_fields_csv(
            &out_dir.join(format!("fields_{}.csv", record.key())),
            &fields,
        )?;
        records.push(record);
    }
    records.sort_by(|a, b| {
        (a.dx_km, a.dt_s, a.sequence.label())
            .partial_cmp(&(b.dx_km, b.dt_s, b.sequence.label()))
            .expect("finite keys")
    });

    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for record in &records {
        text.push_str(&record.csv_row());
        text.push('\n');
    }
    fs::write(out_dir.join(SUMMARY_FILE), text)?;
    Ok(records)
}

/// Analytic references differ in shape per sequence family; run references
/// are shared by every row at the same dx.
fn reference_shape(sequence: SplitSequence, reference: ReferenceSpec) -> &'static str {
    match reference {
        ReferenceSpec::Run { .. } => "run",
        ReferenceSpec::Analytic => match sequence {
            SplitSequence::TransportOnly => "transport",
            SplitSequence::ChemistryOnly => "chemistry",
            _ => "coupled",
        },
    }
}

/// A summary row, parsed back from CSV (for plotting and checks).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dx_km: f64,
    pub dt_s: f64,
    pub sequence: String,
    pub rrms_mean: f64,
    pub l2: [f64; 3],
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Figure(format!("{}: empty file", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| -> Result<usize, HarnessError> {
        columns.iter().position(|c| *c == name).ok_or_else(|| {
            HarnessError::Figure(format!("{}: missing column '{name}'", path.display()))
        })
    };
    let (c_dx, c_dt, c_seq, c_mean) = (
        col("dx_km")?,
        col("dt_s")?,
        col("sequence")?,
        col("rrms_mean")?,
    );
    let (c_l2_no, c_l2_no2, c_l2_o3) = (col("l2_NO")?, col("l2_NO2")?, col("l2_O3")?);
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(HarnessError::Figure(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                idx + 2,
                fields.len(),
                columns.len()
            )));
        }
        let num = |i: usize| -> Result<f64, HarnessError> {
            fields[i].parse::<f64>().map_err(|_| {
                HarnessError::Figure(format!(
                    "{}: row {}: '{}' is not a number",
                    path.display(),
                    idx + 2,
                    fields[i]
                ))
            })
        };
        rows.push(SummaryRow {
            dx_km: num(c_dx)?,
            dt_s: num(c_dt)?,
            sequence: fields[c_seq].to_string(),
            rrms_mean: num(c_mean)?,
            l2: [num(c_l2_no)?, num(c_l2_no2)?, num(c_l2_o3)?],
        });
    }
    Ok(rows)
}

/// Per-cell profile parsed back from a fields CSV.
pub struct FieldsProfile {
    pub x_km: Vec<f64>,
    pub o3: Vec<f64>,
}

pub fn read_fields_csv(path: &Path) -> Result<FieldsProfile, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut x_km = Vec::new();
    let mut o3 = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "x_km,NO,NO2,O3" {
                return Err(HarnessError::Figure(format!(
                    "{}: unexpected header '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            continue;
        }
        let parse = |s: &str| s.parse::<f64>().ok();
        if let (Some(x), Some(v)) = (parse(fields[0]), parse(fields[3])) {
            x_km.push(x);
            o3.push(v);
        }
    }
    Ok(FieldsProfile { x_km, o3 })
}
