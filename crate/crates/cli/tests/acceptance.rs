//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture`, and on failure).
//!
//! Criteria needing the full experiment grid share one lazily computed set
//! of runs (5 grid spacings x 4 splitting steps x both Godunov orderings,
//! plus the transport-only controls and the analytic references).

use std::collections::HashMap;
use std::process::Command;
use std::sync::OnceLock;

use splitlab::config::{parse_config, LinearSpec, ParsedConfig};
use splitlab::linear_report::run_report;
use splitlab_core::mechanism::{
    analytic_reference, transport_only_reference, LumpedPair, SpeciesFields, SpeciesTriple,
    STEADY_STATE_GUARD,
};
use splitlab_core::metrics::{
    fit_order, l2_error, numerical_diffusion_estimate, rrms, rrms_species_mean, RrmsConfig,
};
use splitlab_core::splitting::{run_simulation, RunResult, SplitSequence};
use splitlab_core::stiffode::integrate_cell;
use splitlab_core::{MechanismParams, SolverConfig};

const DXS_KM: [f64; 5] = [22.5, 45.0, 90.0, 180.0, 360.0];
const DTS: [f64; 4] = [180.0, 360.0, 1800.0, 3600.0];

struct Lab {
    base: splitlab::config::ExperimentBase,
    /// Coupled runs keyed by (dx_km bits, dt bits, sequence).
    runs: HashMap<(u64, u64, SplitSequence), RunResult>,
    /// Transport-only runs keyed by dx_km bits (dt-independent by design).
    transport: HashMap<u64, RunResult>,
    analytic: HashMap<u64, SpeciesFields>,
    transport_ref: HashMap<u64, SpeciesFields>,
}

fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| {
        let text = std::fs::read_to_string(format!(
            "{}/../../configs/paper_fig1.cfg",
            env!("CARGO_MANIFEST_DIR")
        ))
        .expect("paper_fig1.cfg");
        let ParsedConfig::Sweep(sweep) = parse_config(&text).expect("parse") else {
            panic!("paper_fig1.cfg must be a sweep");
        };
        let base = sweep.base;
        let mut runs = HashMap::new();
        let mut transport = HashMap::new();
        let mut analytic = HashMap::new();
        let mut transport_ref = HashMap::new();
        for dx_km in DXS_KM {
            let dx = dx_km * 1000.0;
            let grid = base.grid(dx).expect("grid");
            analytic.insert(
                dx_km.to_bits(),
                analytic_reference(
                    base.horizon,
                    grid,
                    base.pulse,
                    base.u,
                    &base.mechanism,
                    STEADY_STATE_GUARD,
                )
                .expect("analytic reference"),
            );
            transport_ref.insert(
                dx_km.to_bits(),
                transport_only_reference(base.horizon, grid, base.pulse, base.u)
                    .expect("transport reference"),
            );
            let cfg = base
                .scenario(dx, 3600.0, SplitSequence::TransportOnly)
                .expect("transport scenario");
            transport.insert(
                dx_km.to_bits(),
                run_simulation(&cfg).expect("transport run"),
            );
            for dt in DTS {
                for seq in [SplitSequence::GodunovTC, SplitSequence::GodunovCT] {
                    let cfg = base.scenario(dx, dt, seq).expect("scenario");
                    runs.insert(
                        (dx_km.to_bits(), dt.to_bits(), seq),
                        run_simulation(&cfg).expect("run"),
                    );
                }
            }
        }
        Lab {
            base,
            runs,
            transport,
            analytic,
            transport_ref,
        }
    })
}

fn run(dx_km: f64, dt: f64, seq: SplitSequence) -> &'static RunResult {
    &lab().runs[&(dx_km.to_bits(), dt.to_bits(), seq)]
}

fn mean_rrms(reference: &SpeciesFields, test: &SpeciesFields) -> f64 {
    let cfg = RrmsConfig {
        threshold: lab().base.threshold,
    };
    let values = [
        rrms(&reference.no, &test.no, &cfg).unwrap(),
        rrms(&reference.no2, &test.no2, &cfg).unwrap(),
        rrms(&reference.o3, &test.o3, &cfg).unwrap(),
    ];
    rrms_species_mean(&values).unwrap().mean
}

fn criterion(id: u32, name: &str, pass: bool, detail: String) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("acceptance C{id:02} {name}: {status} ({detail})");
    assert!(pass, "C{id:02} {name}: {detail}");
}

#[test]
fn c01_steady_state_values() {
    let params = MechanismParams::default();
    let s = params.steady_state(LumpedPair::new(2.0, 2.0)).unwrap();
    let sqrt5 = 5f64.sqrt();
    let closed_form_ok = (s.o3 - (sqrt5 - 1.0)).abs() <= 1e-9
        && (s.no - (sqrt5 - 1.0)).abs() <= 1e-9
        && (s.no2 - (3.0 - sqrt5)).abs() <= 1e-9;
    let integrated = integrate_cell(
        SpeciesTriple::uniform(1.0),
        &params,
        3600.0,
        &SolverConfig::default(),
    )
    .unwrap();
    let integration_ok = ((integrated.o3 - s.o3) / s.o3).abs() <= 1e-3
        && ((integrated.no - s.no) / s.no).abs() <= 1e-3
        && ((integrated.no2 - s.no2) / s.no2).abs() <= 1e-3;
    criterion(
        1,
        "steady-state values",
        closed_form_ok && integration_ok,
        format!(
            "closed form (NO, NO2, O3) = ({:.6}, {:.6}, {:.6}); 3600 s integration within 1e-3",
            s.no, s.no2, s.o3
        ),
    );
}

#[test]
fn c02_exact_translation() {
    let mut pass = true;
    let mut detail = String::new();
    for dx_km in DXS_KM {
        let fields = &lab().analytic[&dx_km.to_bits()];
        let grid = fields.grid();
        let hot: Vec<usize> = (0..grid.n_cells())
            .filter(|&i| fields.o3.values()[i] > 0.0)
            .collect();
        let expected = (360.0 / dx_km).round() as usize;
        let inside = hot
            .iter()
            .all(|&i| (1080.0e3..1440.0e3).contains(&grid.center(i)));
        pass &= hot.len() == expected && inside;
        detail.push_str(&format!("dx={dx_km}: {} cells; ", hot.len()));
    }
    criterion(
        2,
        "exact translation to [1080, 1440] km",
        pass,
        detail.trim_end_matches("; ").to_string(),
    );
}

#[test]
fn c03_splitting_order_asymmetry() {
    let reference = &lab().analytic[&180.0f64.to_bits()];
    let mut pass = true;
    let mut detail = String::new();
    for dt in DTS {
        let tc = mean_rrms(reference, &run(180.0, dt, SplitSequence::GodunovTC).fields);
        let ct = mean_rrms(reference, &run(180.0, dt, SplitSequence::GodunovCT).fields);
        pass &= tc <= ct;
        detail.push_str(&format!("dt={dt}: TC {tc:.5} vs CT {ct:.5}; "));
    }
    criterion(
        3,
        "chemistry-last ordering is at least as accurate",
        pass,
        detail.trim_end_matches("; ").to_string(),
    );
}

#[test]
fn c04_splitting_error_bound() {
    // Species-mean RRMS between the two Godunov runs at fixed (dx, dt),
    // with the chemistry-last run as simulation A.
    let mut worst: f64 = 0.0;
    let mut worst_key = String::new();
    let mut overlap_worst: f64 = 0.0;
    for dx_km in DXS_KM {
        let reference = &lab().analytic[&dx_km.to_bits()];
        for dt in DTS {
            let tc = run(dx_km, dt, SplitSequence::GodunovTC);
            let ct = run(dx_km, dt, SplitSequence::GodunovCT);
            let cross = mean_rrms(&tc.fields, &ct.fields);
            if cross > worst {
                worst = cross;
                worst_key = format!("dx={dx_km} km, dt={dt} s");
            }
            // Companion quantity: how far apart the two sequences' error
            // levels against the analytic reference sit.
            let overlap =
                (mean_rrms(reference, &tc.fields) - mean_rrms(reference, &ct.fields)).abs();
            overlap_worst = overlap_worst.max(overlap);
        }
    }
    criterion(
        4,
        "cross-sequence RRMS <= 0.02 at every (dx, dt)",
        worst <= 0.02,
        format!(
            "max field-vs-field RRMS {worst:.4} at {worst_key}; \
             error-level overlap vs analytic <= {overlap_worst:.2e}"
        ),
    );
}

#[test]
fn c05_cross_sequence_spread() {
    let reference = &run(180.0, 3600.0, SplitSequence::GodunovTC).fields;
    let mut max: f64 = 0.0;
    for dt in DTS {
        for seq in [SplitSequence::GodunovTC, SplitSequence::GodunovCT] {
            max = max.max(mean_rrms(reference, &run(180.0, dt, seq).fields));
        }
    }
    criterion(
        5,
        "spread vs chemistry-last dt=3600 s reference in [0.01, 0.12]",
        (0.01..=0.12).contains(&max),
        format!("max species-mean RRMS {max:.4}"),
    );
}

#[test]
fn c06_transport_dominance() {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_key = String::new();
    for dx_km in DXS_KM.iter().copied().filter(|&dx| dx >= 90.0) {
        let reference = &lab().analytic[&dx_km.to_bits()];
        for dt in DTS {
            let tc = run(dx_km, dt, SplitSequence::GodunovTC);
            let ct = run(dx_km, dt, SplitSequence::GodunovCT);
            let cross = mean_rrms(&tc.fields, &ct.fields);
            let err_tc = mean_rrms(reference, &tc.fields);
            let err_ct = mean_rrms(reference, &ct.fields);
            let ratio = cross / err_tc.min(err_ct);
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_key = format!("dx={dx_km} km, dt={dt} s");
            }
        }
    }
    criterion(
        6,
        "cross-sequence RRMS <= 0.1 x error vs analytic (dx >= 90 km)",
        worst_ratio <= 0.1,
        format!("max ratio {worst_ratio:.3} at {worst_key}"),
    );
}

#[test]
fn c07_transport_only_error_resemblance() {
    let mut pass = true;
    let mut detail = String::new();
    for dx_km in DXS_KM {
        let transport = mean_rrms(
            &lab().transport_ref[&dx_km.to_bits()],
            &lab().transport[&dx_km.to_bits()].fields,
        );
        let full = mean_rrms(
            &lab().analytic[&dx_km.to_bits()],
            &run(dx_km, 3600.0, SplitSequence::GodunovTC).fields,
        );
        let ratio = transport / full;
        pass &= (0.5..=2.0).contains(&ratio);
        detail.push_str(&format!("dx={dx_km}: ratio {ratio:.3}; "));
    }
    criterion(
        7,
        "transport-only error within factor 2 of the full run",
        pass,
        detail.trim_end_matches("; ").to_string(),
    );
}

#[test]
fn c08_first_order_step_profile_convergence() {
    let mut l2_points = Vec::new();
    let mut l1_points = Vec::new();
    for dx_km in DXS_KM {
        let reference = &lab().transport_ref[&dx_km.to_bits()];
        let fields = &lab().transport[&dx_km.to_bits()].fields;
        let l2 = l2_error(&reference.o3, &fields.o3).unwrap();
        let dx_m = dx_km * 1000.0;
        l2_points.push((dx_m, l2));
        let l1: f64 = reference
            .o3
            .values()
            .iter()
            .zip(fields.o3.values())
            .map(|(a, b)| (a - b).abs() * dx_m)
            .sum();
        l1_points.push((dx_m, l1));
    }
    let est = fit_order(&l2_points).unwrap();
    let l1_est = fit_order(&l1_points).unwrap();
    criterion(
        8,
        "transport-only L2 convergence order 1.0 +/- 0.3",
        (0.7..=1.3).contains(&est.order),
        format!(
            "L2 order {:.3} (residual {:.2e}); companion L1 order {:.3}",
            est.order, est.residual, l1_est.order
        ),
    );
}

#[test]
fn c09_linear_theory_orders() {
    let rows = run_report(&LinearSpec::default()).unwrap();
    let relevant: Vec<_> = rows
        .iter()
        .filter(|r| {
            r.name.contains("godunov_order")
                || r.name.contains("strang_order")
                || r.name.contains("commuting_pairs")
        })
        .collect();
    let pass = relevant.iter().all(|r| r.pass);
    let detail = relevant
        .iter()
        .map(|r| format!("{} = {:.4}", r.name, r.value))
        .collect::<Vec<_>>()
        .join("; ");
    criterion(
        9,
        "linear splitting orders (1 and 2) + commuting exactness",
        pass,
        detail,
    );
}

#[test]
fn c10_commutator_law_and_stiff_scaling() {
    let rows = run_report(&LinearSpec::default()).unwrap();
    let relevant: Vec<_> = rows
        .iter()
        .filter(|r| r.name.contains("commutator_ratio") || r.name.contains("stiff_scaling"))
        .collect();
    let pass = relevant.iter().all(|r| r.pass);
    let detail = relevant
        .iter()
        .map(|r| format!("{} = {:.4}", r.name, r.value))
        .collect::<Vec<_>>()
        .join("; ");
    criterion(
        10,
        "commutator local-error law + 1/eps scaling",
        pass,
        detail,
    );
}

#[test]
fn c11_conservation_suite() {
    // Per-cell chemistry conserves the lumped species.
    let params = MechanismParams::default();
    let solver = SolverConfig::default();
    let mut cell_ok = true;
    let mut seed = 0x243F_6A88_85A3_08D3u64; // simple LCG over the unit cube
    let mut next = || {
        seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0
    };
    let mut worst_cell: f64 = 0.0;
    for _ in 0..100 {
        let y0 = SpeciesTriple::new(next(), next(), next());
        let out = integrate_cell(y0, &params, 3600.0, &solver).unwrap();
        let (l0, l1) = (y0.lumped(), out.lumped());
        let drift =
            ((l1.nox - l0.nox).abs() / (1.0 + l0.nox)).max((l1.ox - l0.ox).abs() / (1.0 + l0.ox));
        worst_cell = worst_cell.max(drift);
        cell_ok &= drift <= 1e-12;
    }

    // Advected mass per species.
    let mut transport_ok = true;
    let mut worst_transport: f64 = 0.0;
    for dx_km in DXS_KM {
        for drift in lab().transport[&dx_km.to_bits()]
            .diagnostics
            .species_mass_drift()
        {
            worst_transport = worst_transport.max(drift);
            transport_ok &= drift <= 1e-12;
        }
    }

    // End-to-end lumped mass over every coupled 10 h run.
    let mut coupled_ok = true;
    let mut worst_coupled: f64 = 0.0;
    for result in lab().runs.values() {
        let drift = result.diagnostics.lumped_mass_drift();
        worst_coupled = worst_coupled.max(drift);
        coupled_ok &= drift <= 1e-11;
    }

    criterion(
        11,
        "conservation (cell chemistry 1e-12, transport 1e-12, end-to-end 1e-11)",
        cell_ok && transport_ok && coupled_ok,
        format!(
            "worst cell {worst_cell:.2e}, transport {worst_transport:.2e}, coupled {worst_coupled:.2e}"
        ),
    );
}

#[test]
fn c12_numerical_diffusion_band() {
    let mut pass = true;
    let mut detail = String::new();
    for dx_km in DXS_KM {
        let d = numerical_diffusion_estimate(10.0, dx_km * 1000.0);
        pass &= (2.25e5..=3.6e6).contains(&d);
        detail.push_str(&format!("dx={dx_km}: {d:.3e}; "));
    }
    criterion(
        12,
        "numerical diffusion u*dx within [2.25e5, 3.6e6] m^2/s",
        pass,
        detail.trim_end_matches("; ").to_string(),
    );
}

#[test]
fn c13_sweep_determinism() {
    let bin = env!("CARGO_BIN_EXE_splitlab");
    let cfg = format!(
        "{}/../../configs/paper_fig3.cfg",
        env!("CARGO_MANIFEST_DIR")
    );
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [dir_a.path(), dir_b.path()] {
        let status = Command::new(bin)
            .args(["sweep", &cfg, "--jobs", "1", "--out"])
            .arg(dir)
            .status()
            .expect("spawn splitlab");
        assert!(status.success(), "sweep exited with {status}");
    }
    let strip_wall = |text: &str| -> String {
        text.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head).unwrap_or(l))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = std::fs::read_to_string(dir_a.path().join("summary.csv")).unwrap();
    let b = std::fs::read_to_string(dir_b.path().join("summary.csv")).unwrap();
    let identical = strip_wall(&a) == strip_wall(&b);
    criterion(
        13,
        "consecutive --jobs 1 sweeps byte-identical (wall column excluded)",
        identical,
        format!("{} summary bytes compared", a.len()),
    );
}
