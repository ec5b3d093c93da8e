//! Linear-theory verification report behind `splitlab linear`: convergence
//! orders on random systems, exactness under commutation, the commutator
//! local-error law, and the stiff 1/eps scaling.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splitlab_core::linear::{
    commutator_local_error, expm_apply, global_error_ladder, observed_order, split_solve_linear,
    LinearSequence, LinearSystem,
};

use crate::config::LinearSpec;
use crate::{fmt_full, HarnessError};

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let norm = one_norm(&m).max(f64::MIN_POSITIVE);
    m * (scale / norm)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

/// A random pair with spectral-scale <= 1 and a commutator large enough to
/// carry a measurable splitting error.
fn random_noncommuting_system(rng: &mut ChaCha8Rng, n: usize) -> LinearSystem {
    loop {
        let a = random_matrix(rng, n, 1.0);
        let b = random_matrix(rng, n, 1.0);
        let v0 = random_vector(rng, n);
        let sys = LinearSystem::new(a, b, v0).expect("valid random system");
        if one_norm(&sys.commutator()) >= 0.05 && sys.v0.norm() >= 0.1 {
            return sys;
        }
    }
}

fn nilpotent_pair() -> LinearSystem {
    LinearSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
        DVector::from_vec(vec![1.0, 0.0]),
    )
    .expect("nilpotent pair")
}

/// Run every check; returns the rows and whether all of them passed.
pub fn run_report(spec: &LinearSpec) -> Result<Vec<CheckRow>, HarnessError> {
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Order laws on random non-commuting systems.
    let mut godunov_lo = f64::INFINITY;
    let mut godunov_hi = f64::NEG_INFINITY;
    let mut strang_lo = f64::INFINITY;
    let mut strang_hi = f64::NEG_INFINITY;
    for _ in 0..spec.trials {
        let sys = random_noncommuting_system(&mut rng, spec.dim);
        let (dts, errs) = global_error_ladder(&sys, LinearSequence::GodunovAB, 5..=10)
            .map_err(|e| HarnessError::Figure(e.to_string()))?;
        let slope = observed_order(&dts, &errs).map_err(|e| HarnessError::Figure(e.to_string()))?;
        godunov_lo = godunov_lo.min(slope);
        godunov_hi = godunov_hi.max(slope);
        let (dts, errs) = global_error_ladder(&sys, LinearSequence::StrangAverage, 5..=10)
            .map_err(|e| HarnessError::Figure(e.to_string()))?;
        let slope = observed_order(&dts, &errs).map_err(|e| HarnessError::Figure(e.to_string()))?;
        strang_lo = strang_lo.min(slope);
        strang_hi = strang_hi.max(slope);
    }
    rows.push(CheckRow {
        name: format!("godunov_order_min_over_{}_trials", spec.trials),
        value: godunov_lo,
        bound: "in [0.9, 1.1]".into(),
        pass: (0.9..=1.1).contains(&godunov_lo) && (0.9..=1.1).contains(&godunov_hi),
    });
    rows.push(CheckRow {
        name: format!("godunov_order_max_over_{}_trials", spec.trials),
        value: godunov_hi,
        bound: "in [0.9, 1.1]".into(),
        pass: (0.9..=1.1).contains(&godunov_hi),
    });
    rows.push(CheckRow {
        name: format!("strang_order_min_over_{}_trials", spec.trials),
        value: strang_lo,
        bound: "in [1.9, 2.1]".into(),
        pass: (1.9..=2.1).contains(&strang_lo) && (1.9..=2.1).contains(&strang_hi),
    });
    rows.push(CheckRow {
        name: format!("strang_order_max_over_{}_trials", spec.trials),
        value: strang_hi,
        bound: "in [1.9, 2.1]".into(),
        pass: (1.9..=2.1).contains(&strang_hi),
    });

    // Exactness for commuting pairs, simultaneously diagonal in a random
    // orthogonal basis.
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let q = DMatrix::from_fn(spec.dim, spec.dim, |_, _| rng.gen_range(-1.0..1.0f64))
            .qr()
            .q();
        let d1 = DMatrix::from_diagonal(&random_vector(&mut rng, spec.dim));
        let d2 = DMatrix::from_diagonal(&random_vector(&mut rng, spec.dim));
        let a = &q * d1 * q.transpose();
        let b = &q * d2 * q.transpose();
        let v0 = random_vector(&mut rng, spec.dim);
        let sys = LinearSystem::new(a.clone(), b.clone(), v0.clone())
            .map_err(|e| HarnessError::Figure(e.to_string()))?;
        let exact =
            expm_apply(&(a + b), 1.0, &v0).map_err(|e| HarnessError::Figure(e.to_string()))?;
        for seq in [
            LinearSequence::GodunovAB,
            LinearSequence::GodunovBA,
            LinearSequence::StrangAverage,
        ] {
            let out = split_solve_linear(&sys, 0.25, 4, seq)
                .map_err(|e| HarnessError::Figure(e.to_string()))?;
            worst = worst.max((out - &exact).norm() / exact.norm().max(1e-300));
        }
    }
    rows.push(CheckRow {
        name: "commuting_pairs_worst_relative_error".into(),
        value: worst,
        bound: "<= 1e-10".into(),
        pass: worst <= 1e-10,
    });

    // Commutator local-error law on the closed-form nilpotent pair.
    let sys = nilpotent_pair();
    let out =
        commutator_local_error(&sys, 1e-4).map_err(|e| HarnessError::Figure(e.to_string()))?;
    let ratio = out.measured.norm() / out.predicted.norm();
    rows.push(CheckRow {
        name: "commutator_ratio_nilpotent_dt_1e-4".into(),
        value: ratio,
        bound: "in [0.9, 1.1]".into(),
        pass: (0.9..=1.1).contains(&ratio),
    });

    // Stiff scaling: local error grows like 1/eps when the first operator is
    // chi/eps. Checked pairwise across the eps ladder.
    let chi = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    let slow = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let v0 = DVector::from_vec(vec![1.0, 0.5]);
    let dt = 1e-4;
    let mut magnitudes = Vec::new();
    for &eps in &spec.eps_list {
        let sys = LinearSystem::new(&chi / eps, slow.clone(), v0.clone())
            .map_err(|e| HarnessError::Figure(e.to_string()))?;
        let out =
            commutator_local_error(&sys, dt).map_err(|e| HarnessError::Figure(e.to_string()))?;
        magnitudes.push((eps, out.measured.norm()));
    }
    for pair in magnitudes.windows(2) {
        let (eps_a, err_a) = pair[0];
        let (eps_b, err_b) = pair[1];
        let expected = eps_a / eps_b;
        let growth = err_b / err_a;
        let pass = growth >= expected / 2.0 && growth <= expected * 2.0;
        rows.push(CheckRow {
            name: format!("stiff_scaling_eps_{eps_a}_to_{eps_b}"),
            value: growth,
            bound: format!("within 2x of {expected}"),
            pass,
        });
    }

    Ok(rows)
}

pub fn write_report_csv(rows: &[CheckRow], path: &Path) -> Result<(), HarnessError> {
    let mut text = String::from("check,value,bound,pass\n");
    for row in rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            row.name,
            fmt_full(row.value),
            row.bound.replace(',', ";"),
            row.pass
        ));
    }
    fs::write(path, text)?;
    Ok(())
}
