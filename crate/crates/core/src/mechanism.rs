//! Three-species NOx-O3 chemistry: right-hand side, Jacobian, lumped
//! invariants and the closed-form steady state / reference solution.
//!
//! The mechanism is the two-reaction cycle
//!
//! ```text
//! NO + O3 --k1--> NO2        NO2 --k2--> NO + O3
//! ```
//!
//! Every reaction converts one unit of NO and one unit of O3 into one unit
//! of NO2 or back, so the lumped sums `NOx = NO + NO2` and `Ox = O3 + NO2`
//! are exact invariants of the chemistry. That structure is what makes a
//! closed-form steady state possible: fixing the initial lumped values turns
//! the equilibrium condition into a quadratic for the O3 steady state.

use thiserror::Error;

use crate::advection::{AdvectionError, Field1D, Grid1D, StepPulse};

/// Default guard factor for [`analytic_reference`]: the requested time must
/// exceed `guard / min(k1, k2)` before the steady-state profile is valid.
pub const STEADY_STATE_GUARD: f64 = 100.0;

#[derive(Debug, Error, PartialEq)]
pub enum MechanismError {
    #[error("lumped concentrations must be non-negative, got nox={nox}, ox={ox}")]
    NegativeLumped { nox: f64, ox: f64 },
    #[error("t={t} s is before the chemical steady state is reached (needs t >= {t_min} s)")]
    BeforeSteadyState { t: f64, t_min: f64 },
    #[error(transparent)]
    Profile(#[from] AdvectionError),
}

/// Concentrations of (NO, NO2, O3) at one grid cell, dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpeciesTriple {
    pub no: f64,
    pub no2: f64,
    pub o3: f64,
}

impl SpeciesTriple {
    pub const ZERO: SpeciesTriple = SpeciesTriple {
        no: 0.0,
        no2: 0.0,
        o3: 0.0,
    };

    pub fn new(no: f64, no2: f64, o3: f64) -> Self {
        Self { no, no2, o3 }
    }

    /// All three species at the same concentration.
    pub fn uniform(c: f64) -> Self {
        Self::new(c, c, c)
    }

    pub fn lumped(&self) -> LumpedPair {
        LumpedPair {
            nox: self.no + self.no2,
            ox: self.o3 + self.no2,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.no.is_finite() && self.no2.is_finite() && self.o3.is_finite()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.no, self.no2, self.o3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            no: a[0],
            no2: a[1],
            o3: a[2],
        }
    }
}

/// Lumped species `NOx = NO + NO2` and `Ox = O3 + NO2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpedPair {
    pub nox: f64,
    pub ox: f64,
}

impl LumpedPair {
    pub fn new(nox: f64, ox: f64) -> Self {
        Self { nox, ox }
    }
}

/// Reaction rates of the mechanism plus the diagnostic stiffness ratio of
/// the configuration (slow transport time scale over fast chemistry time
/// scale). The ratio is carried for reporting; the integrator consumes `k1`
/// and `k2` directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismParams {
    pub k1: f64,
    pub k2: f64,
    pub stiffness_ratio: f64,
}

impl Default for MechanismParams {
    /// The standard configuration of the built-in experiments: k1 = 1000,
    /// k2 = 2000, stiffness ratio of order 1e-2 for a 10 m/s flow.
    fn default() -> Self {
        Self {
            k1: 1000.0,
            k2: 2000.0,
            stiffness_ratio: 1e-2,
        }
    }
}

impl MechanismParams {
    pub fn new(k1: f64, k2: f64, stiffness_ratio: f64) -> Self {
        Self {
            k1,
            k2,
            stiffness_ratio,
        }
    }

    /// Rate ratio `r = k2 / k1` appearing in the steady-state quadratic.
    pub fn rate_ratio(&self) -> f64 {
        self.k2 / self.k1
    }

    /// Net forward reaction flux `k1 * NO * O3 - k2 * NO2`. Zero exactly at
    /// chemical equilibrium.
    pub fn reaction_flux(&self, s: SpeciesTriple) -> f64 {
        self.k1 * s.no * s.o3 - self.k2 * s.no2
    }

    /// Time derivatives of the three species.
    ///
    /// All three components are built from the single flux value, so
    /// `d(NO) + d(NO2) = 0` and `d(O3) + d(NO2) = 0` hold bit-exactly and
    /// the NO and O3 derivatives are identical.
    pub fn rhs(&self, s: SpeciesTriple) -> SpeciesTriple {
        let flux = self.reaction_flux(s);
        SpeciesTriple {
            no: -flux,
            no2: flux,
            o3: -flux,
        }
    }

    /// Analytic Jacobian of [`Self::rhs`], rows and columns ordered
    /// (NO, NO2, O3). Rows are exact negations of each other, mirroring the
    /// rank-one structure of the mechanism.
    pub fn jacobian(&self, s: SpeciesTriple) -> [[f64; 3]; 3] {
        let d_no = self.k1 * s.o3; // d flux / d NO
        let d_no2 = -self.k2; // d flux / d NO2
        let d_o3 = self.k1 * s.no; // d flux / d O3
        [
            [-d_no, -d_no2, -d_o3],
            [d_no, d_no2, d_o3],
            [-d_no, -d_no2, -d_o3],
        ]
    }

    /// Closed-form chemical steady state for given initial lumped values.
    ///
    /// Solving `flux = 0` under the lumped constraints gives a quadratic for
    /// the O3 steady state whose physically relevant (positive) root is
    ///
    /// ```text
    /// O3* = ( -(r + NOx0 - Ox0) + sqrt((r + NOx0 - Ox0)^2 + 4 r Ox0) ) / 2
    /// ```
    ///
    /// with `r = k2 / k1`. The implementation uses the conjugate form when
    /// the linear coefficient is positive to avoid cancellation.
    pub fn steady_state(&self, ic: LumpedPair) -> Result<SpeciesTriple, MechanismError> {
        if ic.nox < 0.0 || ic.ox < 0.0 {
            return Err(MechanismError::NegativeLumped {
                nox: ic.nox,
                ox: ic.ox,
            });
        }
        let r = self.rate_ratio();
        let b = r + ic.nox - ic.ox;
        let disc = (b * b + 4.0 * r * ic.ox).sqrt();
        let o3 = if b > 0.0 {
            2.0 * r * ic.ox / (b + disc)
        } else {
            0.5 * (disc - b)
        };
        let no2 = ic.ox - o3;
        let no = ic.nox - no2;
        Ok(SpeciesTriple { no, no2, o3 })
    }
}

/// One [`Field1D`] per species, all on the same grid. This is the state the
/// splitting drivers evolve.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesFields {
    pub no: Field1D,
    pub no2: Field1D,
    pub o3: Field1D,
}

impl SpeciesFields {
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            no: Field1D::zeros(grid),
            no2: Field1D::zeros(grid),
            o3: Field1D::zeros(grid),
        }
    }

    /// Initial condition of the experiments: the same step profile in every
    /// species.
    pub fn uniform_pulse(grid: Grid1D, pulse: StepPulse) -> Result<Self, AdvectionError> {
        let p = pulse.profile(grid)?;
        Ok(Self {
            no: p.clone(),
            no2: p.clone(),
            o3: p,
        })
    }

    pub fn grid(&self) -> Grid1D {
        self.no.grid()
    }

    pub fn n_cells(&self) -> usize {
        self.no.len()
    }

    pub fn at(&self, i: usize) -> SpeciesTriple {
        SpeciesTriple {
            no: self.no.values()[i],
            no2: self.no2.values()[i],
            o3: self.o3.values()[i],
        }
    }

    pub fn set(&mut self, i: usize, s: SpeciesTriple) {
        self.no.values_mut()[i] = s.no;
        self.no2.values_mut()[i] = s.no2;
        self.o3.values_mut()[i] = s.o3;
    }

    pub fn species(&self) -> [&Field1D; 3] {
        [&self.no, &self.no2, &self.o3]
    }

    /// Per-species total masses (NO, NO2, O3).
    pub fn masses(&self) -> [f64; 3] {
        [self.no.mass(), self.no2.mass(), self.o3.mass()]
    }

    /// Total lumped masses (NOx, Ox); conserved by both operators.
    pub fn lumped_masses(&self) -> (f64, f64) {
        let [m_no, m_no2, m_o3] = self.masses();
        (m_no + m_no2, m_o3 + m_no2)
    }

    pub fn clamped_non_negative(&self) -> Self {
        Self {
            no: self.no.clamped_non_negative(),
            no2: self.no2.clamped_non_negative(),
            o3: self.o3.clamped_non_negative(),
        }
    }
}

/// Exact solution of the coupled system once chemistry has equilibrated: the
/// per-species steady-state values of the initial lumped pulse, advected by
/// `u * t`.
///
/// Valid only for `t >= guard / min(k1, k2)`; `t` below the guard (default
/// [`STEADY_STATE_GUARD`]) is rejected because the plateau has not reached
/// equilibrium yet.
pub fn analytic_reference(
    t: f64,
    grid: Grid1D,
    pulse: StepPulse,
    u: f64,
    params: &MechanismParams,
    guard: f64,
) -> Result<SpeciesFields, MechanismError> {
    let t_min = guard / params.k1.min(params.k2);
    if !(t >= t_min) {
        return Err(MechanismError::BeforeSteadyState { t, t_min });
    }
    let plateau = params.steady_state(SpeciesTriple::uniform(pulse.amplitude).lumped())?;
    let shifted = pulse.shifted(u * t);
    let shape = make_unit_profile(grid, shifted)?;
    Ok(scaled_fields(&shape, plateau))
}

/// Chemistry-free reference: the initial pulse advected by `u * t`, amplitude
/// unchanged in every species. This is the exact solution of transport-only
/// runs for any `t`.
pub fn transport_only_reference(
    t: f64,
    grid: Grid1D,
    pulse: StepPulse,
    u: f64,
) -> Result<SpeciesFields, MechanismError> {
    let shifted = pulse.shifted(u * t);
    let shape = make_unit_profile(grid, shifted)?;
    let amp = SpeciesTriple::uniform(pulse.amplitude);
    Ok(scaled_fields(&shape, amp))
}

/// Reference for chemistry-only runs: the steady-state plateau at the
/// unshifted pulse location.
pub fn chemistry_only_reference(
    grid: Grid1D,
    pulse: StepPulse,
    params: &MechanismParams,
) -> Result<SpeciesFields, MechanismError> {
    let plateau = params.steady_state(SpeciesTriple::uniform(pulse.amplitude).lumped())?;
    let shape = make_unit_profile(grid, pulse)?;
    Ok(scaled_fields(&shape, plateau))
}

fn make_unit_profile(grid: Grid1D, pulse: StepPulse) -> Result<Field1D, MechanismError> {
    Ok(crate::advection::make_step_profile(
        grid, pulse.lo, pulse.hi, 1.0,
    )?)
}

fn scaled_fields(shape: &Field1D, level: SpeciesTriple) -> SpeciesFields {
    let scale = |c: f64| {
        let mut f = shape.clone();
        for v in f.values_mut() {
            *v *= c;
        }
        f
    };
    SpeciesFields {
        no: scale(level.no),
        no2: scale(level.no2),
        o3: scale(level.o3),
    }
}
