//! Matrix-level verification bed for the linear splitting theory.
//!
//! For `dv/dt = (A + B) v` the exact propagator is `exp((A + B) t)`.
//! Splitting integrates the factors in sequence; per step the `A`-then-`B`
//! (Godunov) composition is `exp(B dt) exp(A dt)`, exact when `A` and `B`
//! commute and first-order accurate otherwise, with leading local error
//! `(AB - BA)/2 dt^2 v`. Averaging the two Godunov orderings yields a
//! second-order method. With `A` scaled by `1/eps` the local error inherits
//! the `1/eps` factor, which is the stiff blow-up mechanism this module
//! measures.
//!
//! Everything here works on small dense systems (dimension 2..=16) where the
//! matrix exponential can serve as a machine-precision oracle.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::metrics::least_squares_line;

/// Scaled 1-norm target for the scaling-and-squaring exponential. Each
/// squaring roughly doubles the accumulated rounding error, so the target
/// trades series length against squaring count: at 2^-1 a norm-1e3 input
/// needs 11 squarings (amplification ~2e-13), comfortably inside the 1e-12
/// accuracy budget.
const EXPM_SCALE_TARGET: f64 = 0.5;
/// Truncation order of the Taylor series on the scaled matrix; at a scaled
/// norm of 1/2 the order-16 remainder is ~1e-19, far below f64 resolution.
const EXPM_SERIES_ORDER: usize = 16;

pub const DIM_MIN: usize = 2;
pub const DIM_MAX: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum LinearError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator dimensions disagree: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("dimension {0} outside the supported range {DIM_MIN}..={DIM_MAX}")]
    DimensionOutOfRange(usize),
    #[error("vector length {got} does not match operator dimension {expected}")]
    VectorLength { expected: usize, got: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("order fit needs at least 2 usable (positive) points, got {0}")]
    TooFewUsablePoints(usize),
    #[error("dts and errors must have equal lengths, got {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// A split linear evolution problem `dv/dt = A v + B v, v(0) = v0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub v0: DVector<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, v0: DVector<f64>) -> Result<Self, LinearError> {
        if !a.is_square() {
            return Err(LinearError::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if !b.is_square() {
            return Err(LinearError::NotSquare {
                rows: b.nrows(),
                cols: b.ncols(),
            });
        }
        if a.nrows() != b.nrows() {
            return Err(LinearError::DimensionMismatch(a.nrows(), b.nrows()));
        }
        if !(DIM_MIN..=DIM_MAX).contains(&a.nrows()) {
            return Err(LinearError::DimensionOutOfRange(a.nrows()));
        }
        if v0.len() != a.nrows() {
            return Err(LinearError::VectorLength {
                expected: a.nrows(),
                got: v0.len(),
            });
        }
        if a.iter()
            .chain(b.iter())
            .chain(v0.iter())
            .any(|x| !x.is_finite())
        {
            return Err(LinearError::NonFinite);
        }
        Ok(Self { a, b, v0 })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Commutator `AB - BA`.
    pub fn commutator(&self) -> DMatrix<f64> {
        &self.a * &self.b - &self.b * &self.a
    }
}

/// Operator composition per splitting step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSequence {
    /// `exp(B dt) exp(A dt)` (A integrated first).
    GodunovAB,
    /// `exp(A dt) exp(B dt)` (B integrated first).
    GodunovBA,
    /// Per-step average of the two Godunov orderings; second order.
    StrangAverage,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring on a truncated Taylor series.
/// The squaring count is chosen so the scaled 1-norm is at most
/// [`EXPM_SCALE_TARGET`]; relative accuracy is 1e-12 or better for 1-norms
/// up to 1e3.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>, LinearError> {
    if !m.is_square() {
        return Err(LinearError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LinearError::NonFinite);
    }
    let n = m.nrows();
    let norm = one_norm(m);
    let squarings = if norm <= EXPM_SCALE_TARGET {
        0
    } else {
        (norm / EXPM_SCALE_TARGET).log2().ceil() as u32
    };
    let scaled = m / 2f64.powi(squarings as i32);

    // Horner evaluation of I + S (I + S/2 (I + ... S/N)).
    let identity = DMatrix::<f64>::identity(n, n);
    let mut series = identity.clone();
    for k in (1..=EXPM_SERIES_ORDER).rev() {
        series = &identity + (&scaled * series) / k as f64;
    }
    let mut result = series;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Apply `exp(m t)` to `v`.
pub fn expm_apply(m: &DMatrix<f64>, t: f64, v: &DVector<f64>) -> Result<DVector<f64>, LinearError> {
    if v.len() != m.nrows() {
        return Err(LinearError::VectorLength {
            expected: m.nrows(),
            got: v.len(),
        });
    }
    Ok(expm(&(m * t))? * v)
}

/// March `n_steps` splitting steps of size `dt` with exact sub-flows.
pub fn split_solve_linear(
    sys: &LinearSystem,
    dt: f64,
    n_steps: usize,
    sequence: LinearSequence,
) -> Result<DVector<f64>, LinearError> {
    let ea = expm(&(&sys.a * dt))?;
    let eb = expm(&(&sys.b * dt))?;
    let mut v = sys.v0.clone();
    for _ in 0..n_steps {
        v = match sequence {
            LinearSequence::GodunovAB => &eb * (&ea * &v),
            LinearSequence::GodunovBA => &ea * (&eb * &v),
            LinearSequence::StrangAverage => (&eb * (&ea * &v) + &ea * (&eb * &v)) * 0.5,
        };
    }
    Ok(v)
}

/// One-step local error of the A-then-B Godunov composition, measured
/// against the exact flow, next to the leading-order prediction
/// `(AB - BA)/2 dt^2 v0`.
pub struct CommutatorError {
    pub measured: DVector<f64>,
    pub predicted: DVector<f64>,
}

pub fn commutator_local_error(sys: &LinearSystem, dt: f64) -> Result<CommutatorError, LinearError> {
    let exact = expm_apply(&(&sys.a + &sys.b), dt, &sys.v0)?;
    let split = split_solve_linear(sys, dt, 1, LinearSequence::GodunovAB)?;
    let measured = exact - split;
    let predicted = (sys.commutator() * (0.5 * dt * dt)) * &sys.v0;
    Ok(CommutatorError {
        measured,
        predicted,
    })
}

/// Least-squares slope of `log(error)` against `log(dt)`. Zero errors are
/// excluded; fewer than two usable points is an error.
pub fn observed_order(dts: &[f64], errors: &[f64]) -> Result<f64, LinearError> {
    if dts.len() != errors.len() {
        return Err(LinearError::LengthMismatch(dts.len(), errors.len()));
    }
    let usable: Vec<(f64, f64)> = dts
        .iter()
        .zip(errors)
        .filter(|&(&h, &e)| h > 0.0 && e > 0.0 && e.is_finite())
        .map(|(&h, &e)| (h.ln(), e.ln()))
        .collect();
    if usable.len() < 2 {
        return Err(LinearError::TooFewUsablePoints(usable.len()));
    }
    let (slope, _, _) = least_squares_line(&usable);
    Ok(slope)
}

/// Global splitting error at `t = 1` over a dyadic dt ladder; convenience
/// for the order studies.
pub fn global_error_ladder(
    sys: &LinearSystem,
    sequence: LinearSequence,
    dt_exponents: std::ops::RangeInclusive<u32>,
) -> Result<(Vec<f64>, Vec<f64>), LinearError> {
    let exact = expm_apply(&(&sys.a + &sys.b), 1.0, &sys.v0)?;
    let mut dts = Vec::new();
    let mut errors = Vec::new();
    for k in dt_exponents {
        let n_steps = 1usize << k;
        let dt = 1.0 / n_steps as f64;
        let approx = split_solve_linear(sys, dt, n_steps, sequence)?;
        dts.push(dt);
        errors.push((&approx - &exact).norm());
    }
    Ok((dts, errors))
}
