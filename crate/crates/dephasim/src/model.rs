//! Shared problem types and their validation.
//!
//! Every type that crosses a module boundary lives here together with its
//! invariants. Validation is structural and total: [`Validate::check`]
//! reports *every* violated invariant, not just the first one found, so a
//! bad config file surfaces all of its problems in one pass.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance on |ρ - ρ†| entries.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Default tolerance on |tr ρ - 1|.
pub const TRACE_TOL: f64 = 1e-12;
/// Default floor on eigenvalues of ρ; small negative dust from roundoff is
/// accepted down to this level.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// The dephasing system: a harmonic oscillator of frequency `omega0`,
/// represented on its lowest `dim` Fock levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub omega0: f64,
    pub dim: usize,
}

/// One bath oscillator: frequency `omega` and dimensionless coupling
/// `lambda` (the displacement of the mode per system quantum, in units of
/// its own zero-point length).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathMode {
    pub lambda: f64,
    pub omega: f64,
}

/// An explicit, finite list of bath modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteBath {
    pub modes: Vec<BathMode>,
}

/// Bath temperature in energy units (k_B folded in); `kt = 0` is the vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Temperature {
    pub kt: f64,
}

impl Temperature {
    pub const ZERO: Temperature = Temperature { kt: 0.0 };

    pub fn is_zero(self) -> bool {
        self.kt == 0.0
    }
}

/// Ohmic spectral density with exponential ultraviolet cutoff and a sharp
/// infrared cutoff:
///
/// ```text
/// J(ω) = coupling_c · ω · exp(-ω / cutoff_upper)   for ω ≥ cutoff_lower
///      = 0                                          otherwise
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OhmicSpectralDensity {
    pub coupling_c: f64,
    pub cutoff_upper: f64,
    pub cutoff_lower: f64,
}

impl OhmicSpectralDensity {
    /// Evaluate J(ω). Zero below the infrared cutoff and for ω ≤ 0.
    pub fn j(&self, omega: f64) -> f64 {
        if omega < self.cutoff_lower || omega <= 0.0 {
            0.0
        } else {
            self.coupling_c * omega * (-omega / self.cutoff_upper).exp()
        }
    }
}

/// Tolerances used when admitting a matrix as a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixTolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub eigenvalue_floor: f64,
}

impl Default for MatrixTolerances {
    fn default() -> Self {
        MatrixTolerances {
            hermiticity: HERMITICITY_TOL,
            trace: TRACE_TOL,
            eigenvalue_floor: EIGENVALUE_FLOOR,
        }
    }
}

/// A validated density matrix. Construction enforces hermiticity, unit
/// trace, and positive semidefiniteness (up to [`MatrixTolerances`]);
/// the stored entries are exactly those supplied, not a cleaned-up copy.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Admit `entries` as a density matrix under the default tolerances.
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self, ValidationReport> {
        Self::from_matrix_with(entries, &MatrixTolerances::default())
    }

    /// Admit `entries` under caller-supplied tolerances.
    pub fn from_matrix_with(
        entries: DMatrix<Complex64>,
        tol: &MatrixTolerances,
    ) -> Result<Self, ValidationReport> {
        let mut violations = Vec::new();
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            violations.push(InvariantViolation::NonSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
            return Err(ValidationReport { violations });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            violations.push(InvariantViolation::NonFinite {
                what: "density matrix entry".into(),
            });
            return Err(ValidationReport { violations });
        }
        let d = entries.nrows();
        let mut max_asym = 0.0f64;
        for n in 0..d {
            for m in n..d {
                let asym = (entries[(n, m)] - entries[(m, n)].conj()).norm();
                max_asym = max_asym.max(asym);
            }
        }
        if max_asym > tol.hermiticity {
            violations.push(InvariantViolation::NonHermitian { max_asymmetry: max_asym });
        }
        let trace: Complex64 = (0..d).map(|n| entries[(n, n)]).sum();
        if (trace - Complex64::new(1.0, 0.0)).norm() > tol.trace {
            violations.push(InvariantViolation::TraceNotOne { trace: trace.re });
        }
        // Eigenvalues are only meaningful once the matrix is (near-)Hermitian;
        // symmetrize the copy handed to the eigensolver so tolerance-level
        // asymmetry cannot perturb the spectrum check.
        if max_asym <= tol.hermiticity {
            let herm = (&entries + entries.adjoint()).scale(0.5);
            let min_eig = herm
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if min_eig < tol.eigenvalue_floor {
                violations.push(InvariantViolation::NotPositiveSemidefinite {
                    min_eigenvalue: min_eig,
                });
            }
        }
        if violations.is_empty() {
            Ok(DensityMatrix { entries })
        } else {
            Err(ValidationReport { violations })
        }
    }

    /// The projector |ψ⟩⟨ψ| / ⟨ψ|ψ⟩ onto a (not necessarily normalized)
    /// state vector.
    pub fn pure_state(amplitudes: &[Complex64]) -> Result<Self, ValidationReport> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if amplitudes.is_empty() || norm_sq == 0.0 || !norm_sq.is_finite() {
            return Err(ValidationReport {
                violations: vec![InvariantViolation::ZeroStateVector],
            });
        }
        let d = amplitudes.len();
        let entries = DMatrix::from_fn(d, d, |n, m| {
            amplitudes[n] * amplitudes[m].conj() / norm_sq
        });
        Self::from_matrix(entries)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entry(&self, n: usize, m: usize) -> Complex64 {
        self.entries[(n, m)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Real part of the trace (the imaginary part is zero to within the
    /// admission tolerance).
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|n| self.entries[(n, n)].re).sum()
    }

    /// tr ρ², equal to 1 exactly iff the state is pure.
    pub fn purity(&self) -> f64 {
        let sq = &self.entries * &self.entries;
        (0..self.dim()).map(|n| sq[(n, n)].re).sum()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()).scale(0.5);
        herm.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let d = self.dim();
        let rows: Vec<Vec<(f64, f64)>> = (0..d)
            .map(|n| (0..d).map(|m| (self.entries[(n, m)].re, self.entries[(n, m)].im)).collect())
            .collect();
        rows.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<(f64, f64)>> = Vec::deserialize(de)?;
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(serde::de::Error::custom("density matrix must be square and nonempty"));
        }
        let entries = DMatrix::from_fn(d, d, |n, m| Complex64::new(rows[n][m].0, rows[n][m].1));
        DensityMatrix::from_matrix(entries).map_err(serde::de::Error::custom)
    }
}

/// Which computation produced a [`GammaSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMethod {
    FiniteSum,
    Quadrature,
    VacuumClosedForm,
    ThermalClosedForm,
    ShortTime,
    HighTemperature,
    Manual,
}

impl fmt::Display for GammaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GammaMethod::FiniteSum => "finite-sum",
            GammaMethod::Quadrature => "quadrature",
            GammaMethod::VacuumClosedForm => "vacuum-closed-form",
            GammaMethod::ThermalClosedForm => "thermal-closed-form",
            GammaMethod::ShortTime => "short-time",
            GammaMethod::HighTemperature => "high-temperature",
            GammaMethod::Manual => "manual",
        };
        f.write_str(s)
    }
}

/// A sampled dephasing exponent Γ(t) on a strictly increasing time grid,
/// tagged with the method and scalar parameters that produced it.
///
/// Invariants: `times` strictly increasing with `times[0] ≥ 0`; `values`
/// the same length, finite and ≥ 0; if the grid contains t = 0 the value
/// there is exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    method: GammaMethod,
    params: BTreeMap<String, f64>,
}

impl GammaSeries {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        method: GammaMethod,
        params: BTreeMap<String, f64>,
    ) -> Result<Self, ValidationReport> {
        let mut violations = grid_violations(&times);
        if times.len() != values.len() {
            violations.push(InvariantViolation::LengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        for (k, (&t, &v)) in times.iter().zip(values.iter()).enumerate() {
            if !v.is_finite() {
                violations.push(InvariantViolation::NonFinite {
                    what: format!("gamma value at index {k}"),
                });
            } else if v < 0.0 {
                violations.push(InvariantViolation::NegativeGamma { index: k, value: v });
            } else if t == 0.0 && v != 0.0 {
                violations.push(InvariantViolation::NonzeroAtTimeZero { value: v });
            }
        }
        if violations.is_empty() {
            Ok(GammaSeries { times, values, method, params })
        } else {
            Err(ValidationReport { violations })
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> GammaMethod {
        self.method
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().cloned().zip(self.values.iter().cloned())
    }
}

#[derive(Serialize, Deserialize)]
struct GammaSeriesRepr {
    times: Vec<f64>,
    values: Vec<f64>,
    method: GammaMethod,
    params: BTreeMap<String, f64>,
}

impl Serialize for GammaSeries {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        GammaSeriesRepr {
            times: self.times.clone(),
            values: self.values.clone(),
            method: self.method,
            params: self.params.clone(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for GammaSeries {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let repr = GammaSeriesRepr::deserialize(de)?;
        GammaSeries::new(repr.times, repr.values, repr.method, repr.params)
            .map_err(serde::de::Error::custom)
    }
}

/// Check a time grid: nonempty, finite, first point ≥ 0, strictly increasing.
pub(crate) fn grid_violations(times: &[f64]) -> Vec<InvariantViolation> {
    let mut violations = Vec::new();
    if times.is_empty() {
        violations.push(InvariantViolation::EmptyGrid);
        return violations;
    }
    for (k, &t) in times.iter().enumerate() {
        if !t.is_finite() {
            violations.push(InvariantViolation::NonFinite {
                what: format!("time grid point at index {k}"),
            });
            return violations;
        }
    }
    if times[0] < 0.0 {
        violations.push(InvariantViolation::NegativeTime { value: times[0] });
    }
    for k in 1..times.len() {
        if times[k] <= times[k - 1] {
            violations.push(InvariantViolation::NonMonotonicGrid { index: k });
        }
    }
    violations
}

/// One violated invariant, with enough context to locate and fix it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantViolation {
    #[error("{what} is not finite")]
    NonFinite { what: String },
    #[error("frequency must be positive: {what} = {value}")]
    NonPositiveFrequency { what: String, value: f64 },
    #[error("system dimension must be at least 2, got {dim}")]
    DimensionTooSmall { dim: usize },
    #[error("bath must contain at least one mode")]
    EmptyBath,
    #[error("temperature must be nonnegative, got kt = {value}")]
    NegativeTemperature { value: f64 },
    #[error("coupling must be nonnegative, got {value}")]
    NegativeCoupling { value: f64 },
    #[error("infrared cutoff must lie strictly below the ultraviolet cutoff: lower = {lower}, upper = {upper}")]
    CutoffOrderViolation { lower: f64, upper: f64 },
    #[error("matrix must be square and nonempty, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |rho[n,m] - conj(rho[m,n])| = {max_asymmetry:e}")]
    NonHermitian { max_asymmetry: f64 },
    #[error("trace must equal 1, got {trace}")]
    TraceNotOne { trace: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue = {min_eigenvalue:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("state vector must be nonempty with positive norm")]
    ZeroStateVector,
    #[error("time grid is empty")]
    EmptyGrid,
    #[error("time grid must be strictly increasing (violation at index {index})")]
    NonMonotonicGrid { index: usize },
    #[error("time must be nonnegative, got {value}")]
    NegativeTime { value: f64 },
    #[error("gamma values must be nonnegative, got {value} at index {index}")]
    NegativeGamma { index: usize, value: f64 },
    #[error("gamma at t = 0 must be exactly 0, got {value}")]
    NonzeroAtTimeZero { value: f64 },
    #[error("times and values must have equal length: {times} vs {values}")]
    LengthMismatch { times: usize, values: usize },
    #[error("grid endpoints must satisfy start < stop (start = {start}, stop = {stop}); equal endpoints require count = 1")]
    BadGridEndpoints { start: f64, stop: f64 },
    #[error("log spacing requires start > 0, got {start}")]
    LogGridNotPositive { start: f64 },
    #[error("bath cutoff must be at least 2, got {value} for mode {index}")]
    CutoffTooSmall { index: usize, value: usize },
    #[error("one Fock cutoff per bath mode required: {modes} modes but {cutoffs} cutoffs")]
    CutoffCountMismatch { modes: usize, cutoffs: usize },
    #[error("initial state dimension {state} does not match system dimension {system}")]
    StateDimensionMismatch { state: usize, system: usize },
    #[error("tolerance must be nonnegative, got {value}")]
    NegativeTolerance { value: f64 },
    #[error("at least one of abs_tol ({abs_tol}) and rel_tol ({rel_tol}) must be positive")]
    NoPositiveTolerance { abs_tol: f64, rel_tol: f64 },
    #[error("max_subdivisions must be at least 1")]
    ZeroSubdivisions,
}

/// All invariants a value violates, reported together.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationReport {
    pub violations: Vec<InvariantViolation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} invariant violation(s):", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl From<InvariantViolation> for ValidationReport {
    fn from(v: InvariantViolation) -> Self {
        ValidationReport { violations: vec![v] }
    }
}

/// Structural validation. `check` accumulates every violation.
pub trait Validate {
    fn check(&self) -> Result<(), ValidationReport>;
}

/// Validate by value: returns the input unchanged if all invariants hold.
pub fn validate<T: Validate>(value: T) -> Result<T, ValidationReport> {
    value.check()?;
    Ok(value)
}

fn finite_or(violations: &mut Vec<InvariantViolation>, value: f64, what: &str) -> bool {
    if value.is_finite() {
        true
    } else {
        violations.push(InvariantViolation::NonFinite { what: what.into() });
        false
    }
}

impl Validate for SystemSpec {
    fn check(&self) -> Result<(), ValidationReport> {
        let mut violations = Vec::new();
        if finite_or(&mut violations, self.omega0, "omega0") && self.omega0 <= 0.0 {
            violations.push(InvariantViolation::NonPositiveFrequency {
                what: "omega0".into(),
                value: self.omega0,
            });
        }
        if self.dim < 2 {
            violations.push(InvariantViolation::DimensionTooSmall { dim: self.dim });
        }
        if violations.is_empty() { Ok(()) } else { Err(ValidationReport { violations }) }
    }
}

impl Validate for BathMode {
    fn check(&self) -> Result<(), ValidationReport> {
        let mut violations = Vec::new();
        finite_or(&mut violations, self.lambda, "lambda");
        if finite_or(&mut violations, self.omega, "omega") && self.omega <= 0.0 {
            violations.push(InvariantViolation::NonPositiveFrequency {
                what: "omega".into(),
                value: self.omega,
            });
        }
        if violations.is_empty() { Ok(()) } else { Err(ValidationReport { violations }) }
    }
}

impl Validate for FiniteBath {
    fn check(&self) -> Result<(), ValidationReport> {
        let mut violations = Vec::new();
        if self.modes.is_empty() {
            violations.push(InvariantViolation::EmptyBath);
        }
        for mode in &self.modes {
            if let Err(report) = mode.check() {
                violations.extend(report.violations);
            }
        }
        if violations.is_empty() { Ok(()) } else { Err(ValidationReport { violations }) }
    }
}

impl Validate for Temperature {
    fn check(&self) -> Result<(), ValidationReport> {
        let mut violations = Vec::new();
        if finite_or(&mut violations, self.kt, "kt") && self.kt < 0.0 {
            violations.push(InvariantViolation::NegativeTemperature { value: self.kt });
        }
        if violations.is_empty() { Ok(()) } else { Err(ValidationReport { violations }) }
    }
}

impl Validate for OhmicSpectralDensity {
    fn check(&self) -> Result<(), ValidationReport> {
        let mut violations = Vec::new();
        if finite_or(&mut violations, self.coupling_c, "coupling_c") && self.coupling_c < 0.0 {
            violations.push(InvariantViolation::NegativeCoupling { value: self.coupling_c });
        }
        let upper_ok =
            finite_or(&mut violations, self.cutoff_upper, "cutoff_upper") && self.cutoff_upper > 0.0;
        if !upper_ok && self.cutoff_upper.is_finite() {
            violations.push(InvariantViolation::NonPositiveFrequency {
                what: "cutoff_upper".into(),
                value: self.cutoff_upper,
            });
        }
        let lower_ok =
            finite_or(&mut violations, self.cutoff_lower, "cutoff_lower") && self.cutoff_lower >= 0.0;
        if !lower_ok && self.cutoff_lower.is_finite() {
            violations.push(InvariantViolation::NegativeTime { value: self.cutoff_lower });
        }
        if upper_ok && lower_ok && self.cutoff_lower >= self.cutoff_upper {
            violations.push(InvariantViolation::CutoffOrderViolation {
                lower: self.cutoff_lower,
                upper: self.cutoff_upper,
            });
        }
        if violations.is_empty() { Ok(()) } else { Err(ValidationReport { violations }) }
    }
}

impl Validate for DensityMatrix {
    fn check(&self) -> Result<(), ValidationReport> {
        // Already enforced at construction; re-checking is cheap insurance
        // for values that crossed a serialization boundary.
        DensityMatrix::from_matrix(self.entries.clone()).map(|_| ())
    }
}

impl Validate for GammaSeries {
    fn check(&self) -> Result<(), ValidationReport> {
        GammaSeries::new(
            self.times.clone(),
            self.values.clone(),
            self.method,
            self.params.clone(),
        )
        .map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn valid_system_passes_and_validation_is_idempotent() {
        let sys = SystemSpec { omega0: 1.0, dim: 3 };
        let once = validate(sys).unwrap();
        let twice = validate(once).unwrap();
        assert_eq!(sys, twice);
    }

    #[test]
    fn negative_mode_frequency_is_rejected() {
        let report = validate(BathMode { lambda: 0.1, omega: -2.0 }).unwrap_err();
        assert!(matches!(
            report.violations[0],
            InvariantViolation::NonPositiveFrequency { .. }
        ));
    }

    #[test]
    fn all_violations_are_reported_not_just_the_first() {
        let bath = FiniteBath {
            modes: vec![
                BathMode { lambda: 0.1, omega: -1.0 },
                BathMode { lambda: f64::NAN, omega: 2.0 },
            ],
        };
        let report = validate(bath).unwrap_err();
        assert_eq!(report.violations.len(), 2);
    }

    #[test]
    fn cutoff_order_is_enforced() {
        let sd = OhmicSpectralDensity { coupling_c: 0.5, cutoff_upper: 1.0, cutoff_lower: 2.0 };
        let report = validate(sd).unwrap_err();
        assert!(matches!(
            report.violations[0],
            InvariantViolation::CutoffOrderViolation { .. }
        ));
        let ok = OhmicSpectralDensity { coupling_c: 0.5, cutoff_upper: 2.0, cutoff_lower: 0.0 };
        validate(ok).unwrap();
    }

    #[test]
    fn spectral_density_vanishes_below_infrared_cutoff() {
        let sd = OhmicSpectralDensity { coupling_c: 2.0, cutoff_upper: 10.0, cutoff_lower: 0.5 };
        assert_eq!(sd.j(0.4), 0.0);
        assert_eq!(sd.j(-1.0), 0.0);
        let expected = 2.0 * 1.5 * (-0.15f64).exp();
        assert!((sd.j(1.5) - expected).abs() < 1e-15);
    }

    #[test]
    fn density_matrix_accepts_a_valid_state() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.3, 0.1), c(0.3, -0.1), c(0.3, 0.0)]);
        let rho = DensityMatrix::from_matrix(m.clone()).unwrap();
        assert_eq!(rho.dim(), 2);
        assert_eq!(rho.entry(0, 1), c(0.3, 0.1));
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_matrix_rejects_non_hermitian_input() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.3, 0.0), c(0.5, 0.0)]);
        let report = DensityMatrix::from_matrix(m).unwrap_err();
        let has = report.violations.iter().any(|v| {
            matches!(v, InvariantViolation::NonHermitian { max_asymmetry } if (max_asymmetry - 0.2).abs() < 1e-15)
        });
        assert!(has, "{report}");
    }

    #[test]
    fn density_matrix_rejects_bad_trace_and_reports_it_alongside_psd() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.8, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.4, 0.0)]);
        let report = DensityMatrix::from_matrix(m).unwrap_err();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, InvariantViolation::TraceNotOne { trace } if (trace - 1.2).abs() < 1e-15)));
    }

    #[test]
    fn density_matrix_rejects_negative_eigenvalues() {
        // Hermitian, unit trace, but indefinite: det = 0.24 - 0.26 < 0
        let m = DMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.5, 0.1), c(0.5, -0.1), c(0.4, 0.0)]);
        let report = DensityMatrix::from_matrix(m).unwrap_err();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, InvariantViolation::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn eigenvalue_floor_tolerates_roundoff_dust() {
        let eps = 1e-11;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(0.5 + eps, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5 - eps, 0.0)],
        );
        // min eigenvalue ~ -1e-22/... tiny negative; must be admitted
        DensityMatrix::from_matrix(m).unwrap();
    }

    #[test]
    fn eigenvalue_floor_is_overridable() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.5, 0.1), c(0.5, -0.1), c(0.4, 0.0)]);
        let loose = MatrixTolerances { eigenvalue_floor: -1.0, ..Default::default() };
        DensityMatrix::from_matrix_with(m, &loose).unwrap();
    }

    #[test]
    fn pure_state_normalizes() {
        let rho = DensityMatrix::pure_state(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((rho.entry(0, 1).re - 0.5).abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_matrix_round_trips_through_json_bit_exactly() {
        let rho = DensityMatrix::pure_state(&[c(0.6, 0.3), c(-0.2, 0.7), c(0.1, 0.0)]).unwrap();
        let json = serde_json::to_string(&rho).unwrap();
        let back: DensityMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(rho, back);
    }

    #[test]
    fn density_matrix_deserialization_validates() {
        let json = "[[[0.5,0.0],[0.1,0.0]],[[0.3,0.0],[0.5,0.0]]]";
        assert!(serde_json::from_str::<DensityMatrix>(json).is_err());
    }

    #[test]
    fn gamma_series_enforces_grid_and_value_invariants() {
        let err = GammaSeries::new(
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.5, 0.5],
            GammaMethod::Manual,
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(err
            .violations
            .iter()
            .any(|v| matches!(v, InvariantViolation::NonMonotonicGrid { index: 2 })));

        let err = GammaSeries::new(vec![], vec![], GammaMethod::Manual, BTreeMap::new()).unwrap_err();
        assert!(matches!(err.violations[0], InvariantViolation::EmptyGrid));

        let err = GammaSeries::new(
            vec![0.0, 1.0],
            vec![0.1, 0.5],
            GammaMethod::Manual,
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(err
            .violations
            .iter()
            .any(|v| matches!(v, InvariantViolation::NonzeroAtTimeZero { .. })));

        let err = GammaSeries::new(
            vec![0.0, 1.0],
            vec![0.0, -0.5],
            GammaMethod::Manual,
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(err
            .violations
            .iter()
            .any(|v| matches!(v, InvariantViolation::NegativeGamma { index: 1, .. })));
    }

    #[test]
    fn gamma_series_round_trips_through_json() {
        let mut params = BTreeMap::new();
        params.insert("omega0".to_string(), 1.0);
        let series = GammaSeries::new(
            vec![0.0, 0.5, 1.25],
            vec![0.0, 0.125, 0.3],
            GammaMethod::FiniteSum,
            params,
        )
        .unwrap();
        let json = serde_json::to_string(&series).unwrap();
        assert!(json.contains("finite-sum"));
        let back: GammaSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(series, back);
    }

    #[test]
    fn unknown_fields_are_rejected_in_configs() {
        let json = r#"{"omega0": 1.0, "dim": 3, "extra": 1}"#;
        assert!(serde_json::from_str::<SystemSpec>(json).is_err());
    }
}
