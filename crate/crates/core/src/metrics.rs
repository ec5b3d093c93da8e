//! Error metrics between fields: thresholded relative RMS, L2 norms,
//! species averaging, convergence-order fits, and the numerical-diffusion
//! diagnostic.

use thiserror::Error;

use crate::advection::Field1D;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("no species with a non-empty threshold set")]
    AllSpeciesEmpty,
    #[error("fit needs at least {needed} positive points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("fit data must be positive, got ({h}, {error})")]
    NonPositiveData { h: f64, error: f64 },
}

/// Threshold for the relative RMS: only cells where the reference exceeds
/// `threshold` enter the sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrmsConfig {
    pub threshold: f64,
}

impl Default for RrmsConfig {
    fn default() -> Self {
        Self { threshold: 1e-4 }
    }
}

/// Outcome of an RRMS evaluation. An empty threshold set is a distinguished
/// state, not a silent zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rrms {
    Value(f64),
    EmptySupport,
}

impl Rrms {
    pub fn value(&self) -> Option<f64> {
        match self {
            Rrms::Value(v) => Some(*v),
            Rrms::EmptySupport => None,
        }
    }
}

/// Modified relative root mean square between a reference field (simulation
/// A, denominator and threshold carrier) and a test field:
/// `sqrt(1/M * sum_{ref > a} |(ref - test) / ref|^2)`.
///
/// Asymmetric by construction; swap the arguments and you measure something
/// else.
pub fn rrms(reference: &Field1D, test: &Field1D, cfg: &RrmsConfig) -> Result<Rrms, MetricsError> {
    if reference.grid() != test.grid() {
        return Err(MetricsError::GridMismatch);
    }
    let mut count = 0usize;
    let mut sum_sq = 0.0;
    for (r, t) in reference.values().iter().zip(test.values()) {
        if *r > cfg.threshold {
            let rel = (r - t) / r;
            sum_sq += rel * rel;
            count += 1;
        }
    }
    if count == 0 {
        return Ok(Rrms::EmptySupport);
    }
    Ok(Rrms::Value((sum_sq / count as f64).sqrt()))
}

/// Species-averaged RRMS with the skip count for empty-support species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesMeanRrms {
    pub mean: f64,
    /// Number of species excluded because their threshold set was empty.
    pub skipped: usize,
}

/// Arithmetic mean of per-species RRMS values, skipping (and counting)
/// empty-support species. Errors when every species is empty.
pub fn rrms_species_mean(values: &[Rrms]) -> Result<SpeciesMeanRrms, MetricsError> {
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for v in values {
        match v {
            Rrms::Value(x) => {
                sum += x;
                used += 1;
            }
            Rrms::EmptySupport => skipped += 1,
        }
    }
    if used == 0 {
        return Err(MetricsError::AllSpeciesEmpty);
    }
    Ok(SpeciesMeanRrms {
        mean: sum / used as f64,
        skipped,
    })
}

/// Grid-weighted L2 difference `sqrt(sum (ref - test)^2 * dx)`.
pub fn l2_error(reference: &Field1D, test: &Field1D) -> Result<f64, MetricsError> {
    if reference.grid() != test.grid() {
        return Err(MetricsError::GridMismatch);
    }
    let dx = reference.grid().dx();
    let sum: f64 = reference
        .values()
        .iter()
        .zip(test.values())
        .map(|(r, t)| (r - t) * (r - t) * dx)
        .sum();
    Ok(sum.sqrt())
}

/// Single-term power-law fit `error = constant * h^order` from a log-log
/// least-squares regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceEstimate {
    pub order: f64,
    pub constant: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
}

/// Fit a convergence order from `(h, error)` samples. Needs at least three
/// strictly positive points.
pub fn fit_order(points: &[(f64, f64)]) -> Result<ConvergenceEstimate, MetricsError> {
    for &(h, error) in points {
        if !(h > 0.0) || !(error > 0.0) {
            return Err(MetricsError::NonPositiveData { h, error });
        }
    }
    if points.len() < 3 {
        return Err(MetricsError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let (slope, intercept, residual) = least_squares_line(&logs);
    Ok(ConvergenceEstimate {
        order: slope,
        constant: intercept.exp(),
        residual,
    })
}

/// Ordinary least squares through `(x, y)` pairs; returns
/// `(slope, intercept, rms_residual)`.
pub(crate) fn least_squares_line(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    (slope, intercept, (ss_res / n).sqrt())
}

/// Effective numerical diffusivity of a first-order advection scheme,
/// `D ~ u * dx`, in m^2/s.
pub fn numerical_diffusion_estimate(u: f64, dx: f64) -> f64 {
    u * dx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advection::Grid1D;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn field(grid: Grid1D, values: &[f64]) -> Field1D {
        let mut f = Field1D::zeros(grid);
        f.values_mut().copy_from_slice(values);
        f
    }

    fn grid4() -> Grid1D {
        Grid1D::new(0.0, 4.0, 4).unwrap()
    }

    #[test]
    fn rrms_identical_fields() {
        let g = grid4();
        let a = field(g, &[1.0, 2.0, 0.0, 0.5]);
        let out = rrms(&a, &a, &RrmsConfig::default()).unwrap();
        assert_eq!(out, Rrms::Value(0.0));
    }

    #[test]
    fn rrms_uniform_ten_percent() {
        let g = grid4();
        let reference = field(g, &[1.0, 2.0, 0.0, 0.0]);
        let test = field(g, &[1.1, 2.2, 0.0, 0.0]);
        let out = rrms(&reference, &test, &RrmsConfig::default()).unwrap();
        assert_relative_eq!(out.value().unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn rrms_threshold_excludes_small_reference_cells() {
        let g = grid4();
        let reference = field(g, &[1.0, 1e-6, 0.0, 0.0]);
        let test = field(g, &[2.0, 999.0, 0.0, 0.0]);
        let out = rrms(&reference, &test, &RrmsConfig { threshold: 1e-4 }).unwrap();
        assert_relative_eq!(out.value().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rrms_empty_support_is_signaled() {
        let g = grid4();
        let reference = field(g, &[0.0; 4]);
        let test = field(g, &[1.0; 4]);
        let out = rrms(&reference, &test, &RrmsConfig::default()).unwrap();
        assert_eq!(out, Rrms::EmptySupport);
    }

    #[test]
    fn rrms_grid_mismatch() {
        let a = Field1D::zeros(grid4());
        let b = Field1D::zeros(Grid1D::new(0.0, 5.0, 5).unwrap());
        assert_eq!(
            rrms(&a, &b, &RrmsConfig::default()),
            Err(MetricsError::GridMismatch)
        );
    }

    #[test]
    fn rrms_is_asymmetric() {
        let g = grid4();
        let a = field(g, &[1.0, 2.0, 3.0, 4.0]);
        let b = field(g, &[1.5, 1.0, 4.0, 2.0]);
        let cfg = RrmsConfig::default();
        let ab = rrms(&a, &b, &cfg).unwrap().value().unwrap();
        let ba = rrms(&b, &a, &cfg).unwrap().value().unwrap();
        assert!((ab - ba).abs() > 1e-6, "ab={ab}, ba={ba}");
    }

    proptest! {
        // Scale invariance: scaling both fields and the threshold by c > 0
        // leaves the RRMS unchanged.
        #[test]
        fn rrms_scale_invariance(values in proptest::collection::vec(0.0f64..10.0, 4),
                                 noise in proptest::collection::vec(-0.5f64..0.5, 4),
                                 c in 1e-3f64..1e3) {
            let g = grid4();
            let reference = field(g, &values);
            let test_values: Vec<f64> =
                values.iter().zip(&noise).map(|(v, n)| v + n).collect();
            let test = field(g, &test_values);
            let scaled_ref = field(g, &values.iter().map(|v| v * c).collect::<Vec<_>>());
            let scaled_test =
                field(g, &test_values.iter().map(|v| v * c).collect::<Vec<_>>());
            let base = rrms(&reference, &test, &RrmsConfig { threshold: 1e-4 }).unwrap();
            let scaled =
                rrms(&scaled_ref, &scaled_test, &RrmsConfig { threshold: 1e-4 * c }).unwrap();
            match (base, scaled) {
                (Rrms::Value(a), Rrms::Value(b)) => {
                    prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
                }
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn species_mean_basics() {
        let all = [Rrms::Value(0.01), Rrms::Value(0.01), Rrms::Value(0.01)];
        assert_relative_eq!(rrms_species_mean(&all).unwrap().mean, 0.01, epsilon = 1e-15);
        let mixed = [Rrms::Value(0.03), Rrms::Value(0.0), Rrms::Value(0.0)];
        assert_relative_eq!(
            rrms_species_mean(&mixed).unwrap().mean,
            0.01,
            epsilon = 1e-15
        );
    }

    #[test]
    fn species_mean_skips_empty_support() {
        let values = [Rrms::Value(0.02), Rrms::EmptySupport, Rrms::Value(0.04)];
        let out = rrms_species_mean(&values).unwrap();
        assert_relative_eq!(out.mean, 0.03, epsilon = 1e-15);
        assert_eq!(out.skipped, 1);
        assert_eq!(
            rrms_species_mean(&[Rrms::EmptySupport; 3]),
            Err(MetricsError::AllSpeciesEmpty)
        );
    }

    #[test]
    fn l2_basics() {
        let g = grid4();
        let a = field(g, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(l2_error(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b.values_mut()[2] += 0.5;
        assert_relative_eq!(l2_error(&a, &b).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn l2_one_cell_shifted_step() {
        // Step of amplitude 1 shifted by one 180 km cell: two discrepant
        // cells, error sqrt(2 * 1.8e5).
        let g = Grid1D::from_spacing(0.0, 1.8e6, 180.0e3).unwrap();
        let a = crate::advection::make_step_profile(g, 360.0e3, 720.0e3, 1.0).unwrap();
        let b = crate::advection::make_step_profile(g, 540.0e3, 900.0e3, 1.0).unwrap();
        assert_relative_eq!(
            l2_error(&a, &b).unwrap(),
            (2.0f64 * 1.8e5).sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn fit_order_exact_power_law() {
        let points: Vec<(f64, f64)> = [0.1, 0.2, 0.4, 0.8]
            .iter()
            .map(|&h| (h, 3.0 * h * h))
            .collect();
        let est = fit_order(&points).unwrap();
        assert_relative_eq!(est.order, 2.0, epsilon = 1e-9);
        assert_relative_eq!(est.constant, 3.0, epsilon = 1e-9);
        assert!(est.residual <= 1e-12);
    }

    #[test]
    fn fit_order_recovers_synthetic_exponents() {
        for p in [0.5f64, 1.0, 2.0, 3.0] {
            let points: Vec<(f64, f64)> = [0.05, 0.1, 0.2, 0.4, 0.8]
                .iter()
                .map(|&h: &f64| (h, 1.7 * h.powf(p)))
                .collect();
            let est = fit_order(&points).unwrap();
            assert_relative_eq!(est.order, p, epsilon = 1e-6);
        }
    }

    #[test]
    fn fit_order_rejects_bad_data() {
        assert!(matches!(
            fit_order(&[(0.1, 1.0), (0.2, 0.0), (0.4, 1.0)]),
            Err(MetricsError::NonPositiveData { .. })
        ));
        assert!(matches!(
            fit_order(&[(0.1, 1.0), (0.2, 2.0)]),
            Err(MetricsError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn diffusion_diagnostic() {
        assert_eq!(numerical_diffusion_estimate(10.0, 180.0e3), 1.8e6);
        assert_eq!(numerical_diffusion_estimate(0.0, 180.0e3), 0.0);
        assert_eq!(numerical_diffusion_estimate(10.0, 22.5e3), 2.25e5);
    }
}
