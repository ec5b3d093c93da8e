//! Configuration parsing: shipped presets, units, validation diagnostics.

use splitlab::config::{echo, parse_config, ConfigError, ParsedConfig, ReferenceSpec};
use splitlab_core::splitting::SplitSequence;

fn preset(name: &str) -> String {
    let path = format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

#[test]
fn paper_fig1_parses_to_the_full_sweep() {
    let ParsedConfig::Sweep(spec) = parse_config(&preset("paper_fig1.cfg")).unwrap() else {
        panic!("paper_fig1.cfg must parse as a sweep");
    };
    assert_eq!(
        spec.dx_list,
        vec![22_500.0, 45_000.0, 90_000.0, 180_000.0, 360_000.0]
    );
    assert_eq!(spec.dt_list, vec![180.0, 360.0, 1800.0, 3600.0]);
    assert_eq!(
        spec.sequences,
        vec![SplitSequence::GodunovTC, SplitSequence::GodunovCT]
    );
    assert_eq!(spec.reference, ReferenceSpec::Analytic);
    assert_eq!(spec.base.domain_length, 3.0e6);
    assert_eq!(spec.base.u, 10.0);
    assert_eq!(spec.base.horizon, 36_000.0);
    assert_eq!(spec.base.dt_internal, 90.0);
    assert_eq!(spec.base.solver.rtol, 1e-3);
    assert_eq!(spec.base.threshold, 1e-4);
    assert_eq!(
        (spec.base.pulse.lo, spec.base.pulse.hi),
        (720.0e3, 1080.0e3)
    );
    assert_eq!(spec.base.pulse.amplitude, 1.0);
    assert_eq!(spec.base.mechanism.k1, 1000.0);
    assert_eq!(spec.base.mechanism.k2, 2000.0);
}

#[test]
fn other_presets_parse() {
    assert!(matches!(
        parse_config(&preset("paper_fig2.cfg")).unwrap(),
        ParsedConfig::Sweep(_)
    ));
    let ParsedConfig::Sweep(fig3) = parse_config(&preset("paper_fig3.cfg")).unwrap() else {
        panic!("paper_fig3.cfg must parse as a sweep");
    };
    assert_eq!(
        fig3.reference,
        ReferenceSpec::Run {
            sequence: SplitSequence::GodunovTC,
            dt_split: 3600.0
        }
    );
    let ParsedConfig::Linear(lin) = parse_config(&preset("linear_theory.cfg")).unwrap() else {
        panic!("linear_theory.cfg must parse as linear");
    };
    assert_eq!(lin.dim, 3);
    assert_eq!(lin.eps_list, vec![0.1, 0.01, 0.001]);
}

fn scenario_text(dt_split: &str) -> String {
    format!(
        "L = 3000 km\nu = 10 m/s\nhorizon = 36000 s\npulse = 720..1080 km\n\
         dx = 180 km\ndt_split = {dt_split}\nsequence = godunov_tc\n"
    )
}

#[test]
fn horizon_divisibility_check() {
    // 36000 / 1000 is integral, 36000 / 700 is not.
    assert!(parse_config(&scenario_text("1000 s")).is_ok());
    let err = parse_config(&scenario_text("700 s")).unwrap_err();
    assert!(matches!(err, ConfigError::Validation(_)), "{err}");
    assert!(err.to_string().contains("integer multiple"), "{err}");
}

#[test]
fn echo_round_trips_units() {
    let cfg = parse_config(&scenario_text("3600 s")).unwrap();
    let echoed = echo(&cfg);
    assert!(echoed.contains("u = 10 m/s"), "{echoed}");
    assert!(echoed.contains("L = 3000 km"), "{echoed}");
    assert!(echoed.contains("pulse = 720..1080 km"), "{echoed}");
    let reparsed = parse_config(&echoed).unwrap();
    assert_eq!(reparsed, cfg);
}

#[test]
fn sweep_echo_round_trips() {
    let cfg = parse_config(&preset("paper_fig3.cfg")).unwrap();
    assert_eq!(parse_config(&echo(&cfg)).unwrap(), cfg);
}

#[test]
fn unknown_key_is_rejected_with_line_number() {
    let text = format!("{}frobnicate = 7\n", scenario_text("3600 s"));
    match parse_config(&text) {
        Err(ConfigError::UnknownKey { line, key }) => {
            assert_eq!(key, "frobnicate");
            assert_eq!(line, 8);
        }
        other => panic!("expected UnknownKey, got {other:?}"),
    }
}

#[test]
fn duplicate_and_malformed_keys() {
    let text = format!("{}dx = 90 km\n", scenario_text("3600 s"));
    assert!(matches!(
        parse_config(&text),
        Err(ConfigError::DuplicateKey { .. })
    ));
    assert!(matches!(
        parse_config("just some words\n"),
        Err(ConfigError::Parse { line: 1, .. })
    ));
}

#[test]
fn missing_required_key() {
    let text = "L = 3000 km\nu = 10 m/s\nhorizon = 10 h\npulse = 720..1080 km\ndx = 180 km\nsequence = godunov_tc\n";
    assert_eq!(
        parse_config(text).unwrap_err(),
        ConfigError::MissingKey("dt_split")
    );
}

#[test]
fn units_and_defaults() {
    let text = "L = 3000 km\nu = 10 m/s\nhorizon = 10 h\npulse = 720..1080 km\n\
                dx = 180 km\ndt_split = 1 h\nsequence = chemistry_only\n";
    let ParsedConfig::Scenario(spec) = parse_config(text).unwrap() else {
        panic!("scenario expected");
    };
    assert_eq!(spec.base.horizon, 36_000.0); // 10 h
    assert_eq!(spec.dt_split, 3600.0); // 1 h
    assert_eq!(spec.base.dt_internal, 90.0); // default
    assert_eq!(spec.base.solver.rtol, 1e-3); // default
    assert_eq!(spec.base.mechanism.stiffness_ratio, 1e-2); // default
}

#[test]
fn bad_units_are_rejected() {
    let text = scenario_text("3600 s").replace("u = 10 m/s", "u = 10 km");
    assert!(matches!(
        parse_config(&text),
        Err(ConfigError::Parse { .. })
    ));
    let text = scenario_text("3600 s").replace("dx = 180 km", "dx = 180");
    assert!(matches!(
        parse_config(&text),
        Err(ConfigError::Parse { .. })
    ));
}

#[test]
fn reference_syntax() {
    let good = format!(
        "{}reference = godunov_ct @ 1800 s\n",
        scenario_text("3600 s")
    );
    let ParsedConfig::Scenario(spec) = parse_config(&good).unwrap() else {
        panic!("scenario expected");
    };
    assert_eq!(
        spec.reference,
        ReferenceSpec::Run {
            sequence: SplitSequence::GodunovCT,
            dt_split: 1800.0
        }
    );
    let bad = format!("{}reference = nearest_neighbor\n", scenario_text("3600 s"));
    assert!(matches!(parse_config(&bad), Err(ConfigError::Parse { .. })));
}

#[test]
fn nonpositive_rates_are_rejected() {
    let text = format!("{}k1 = 0\n", scenario_text("3600 s"));
    assert!(matches!(
        parse_config(&text),
        Err(ConfigError::Validation(_))
    ));
}
