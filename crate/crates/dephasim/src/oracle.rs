//! Brute-force verification: exact propagation on truncated Fock spaces.
//!
//! Nothing here knows the dephasing law. The full Hamiltonian
//!
//! ```text
//! H = ω₀ N_s ⊗ 1  +  ω₀ N_s ⊗ Σ_i λ_i (a_i† + a_i)  +  1 ⊗ Σ_i ω_i a_i† a_i
//! ```
//!
//! is assembled dense on the product of the system ladder and one truncated
//! Fock ladder per bath mode, diagonalized once, and the initially decoupled
//! universe state is advanced exactly at each requested time. Tracing out the
//! bath gives reduced density matrices that an entirely independent code path
//! (the analytic Γ) must reproduce — [`compare`] reports the worst
//! magnitude discrepancy.
//!
//! Basis ordering is fixed for reproducibility: the system index varies
//! slowest, then bath modes in declaration order, the last mode's Fock index
//! fastest. Only magnitudes are compared: free-evolution and interaction
//! phases are picture-dependent, the modulus is not.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::jacobi_eigen;
use crate::model::{
    grid_violations, DensityMatrix, FiniteBath, GammaSeries, InvariantViolation, SystemSpec,
    Temperature, Validate, ValidationReport,
};

/// A run is rejected when any mode's top Fock level holds more population
/// than this at any sampled time.
pub const DEFAULT_LEAK_TOL: f64 = 1e-8;

/// Certification bound on the scaled eigendecomposition residual.
pub const DEFAULT_EIGEN_RESIDUAL_TOL: f64 = 1e-12;

/// Largest tolerated |trace ρ_U(t) − 1| before a run is rejected outright.
pub const NORM_DEFECT_TOL: f64 = 1e-10;

/// How close the top eigenvalue of `rho_s0` must be to 1 before the
/// state-vector route is taken (at zero temperature).
const PURE_STATE_TOL: f64 = 1e-12;

/// Largest total Hilbert-space dimension per propagation route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimensionBudget {
    pub pure: usize,
    pub mixed: usize,
}

impl Default for DimensionBudget {
    fn default() -> Self {
        DimensionBudget { pure: 4096, mixed: 256 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleOptions {
    pub budget: DimensionBudget,
    pub leak_tol: f64,
    pub eigen_residual_tol: f64,
    /// Propagate the full density matrix even when the state-vector route
    /// would apply; the two routes must agree and tests exploit that.
    pub force_density_matrix_route: bool,
    /// Also track how far the universe spectrum drifts from its t = 0 value
    /// (density-matrix route only; a direct unitarity certificate).
    pub track_universe_spectrum: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            budget: DimensionBudget::default(),
            leak_tol: DEFAULT_LEAK_TOL,
            eigen_residual_tol: DEFAULT_EIGEN_RESIDUAL_TOL,
            force_density_matrix_route: false,
            track_universe_spectrum: false,
        }
    }
}

/// A complete brute-force run description: system, explicit bath with
/// per-mode Fock cutoffs, initial system state (bath starts thermal at
/// `temp`), and the sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleScenario {
    pub system: SystemSpec,
    pub bath: FiniteBath,
    pub bath_cutoffs: Vec<usize>,
    pub temp: Temperature,
    pub rho_s0: DensityMatrix,
    pub times: Vec<f64>,
}

impl OracleScenario {
    /// dim · Π dᵢ, saturating on overflow (the budget check rejects it).
    pub fn total_dimension(&self) -> usize {
        self.bath_cutoffs
            .iter()
            .fold(self.system.dim, |acc, &d| acc.saturating_mul(d))
    }
}

impl Validate for OracleScenario {
    fn check(&self) -> Result<(), ValidationReport> {
        let mut violations = Vec::new();
        if let Err(r) = self.system.check() {
            violations.extend(r.violations);
        }
        if let Err(r) = self.bath.check() {
            violations.extend(r.violations);
        }
        if let Err(r) = self.temp.check() {
            violations.extend(r.violations);
        }
        if self.bath_cutoffs.len() != self.bath.modes.len() {
            violations.push(InvariantViolation::CutoffCountMismatch {
                modes: self.bath.modes.len(),
                cutoffs: self.bath_cutoffs.len(),
            });
        }
        for (index, &d) in self.bath_cutoffs.iter().enumerate() {
            if d < 2 {
                violations.push(InvariantViolation::CutoffTooSmall { index, value: d });
            }
        }
        if self.rho_s0.dim() != self.system.dim {
            violations.push(InvariantViolation::StateDimensionMismatch {
                state: self.rho_s0.dim(),
                system: self.system.dim,
            });
        }
        violations.extend(grid_violations(&self.times));
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ValidationReport { violations })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Validation(#[from] ValidationReport),
    #[error("total Hilbert dimension {total} exceeds the {route}-route budget of {budget}")]
    DimensionBudgetExceeded { total: usize, budget: usize, route: &'static str },
    #[error("truncation inadequate: mode {mode} top-level population {population:e} at t = {time} exceeds leak_tol {leak_tol:e}")]
    TruncationInadequate { mode: usize, population: f64, time: f64, leak_tol: f64 },
    #[error("eigendecomposition not certified: scaled residual {residual:e} exceeds {tolerance:e}")]
    EigenCertificationFailed { residual: f64, tolerance: f64 },
    #[error("propagation lost unitarity: |trace - 1| = {defect:e} at t = {time}")]
    UnitarityLost { defect: f64, time: f64 },
    #[error("time grids do not match (oracle: {oracle_len} points, series: {series_len}, first differing index: {first_unequal:?})")]
    GridMismatch { oracle_len: usize, series_len: usize, first_unequal: Option<usize> },
    #[error("oracle result is internally inconsistent: {what}")]
    MalformedResult { what: String },
}

/// Per-time truncation and unitarity bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimePointDiagnostics {
    pub time: f64,
    /// |trace ρ_U(t) − 1| (or the state-norm defect on the pure route).
    pub norm_defect: f64,
    /// Population of the top Fock level, one entry per bath mode.
    pub top_level_population: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleResult {
    pub times: Vec<f64>,
    /// Echo of the initial system state the magnitudes are measured against.
    pub initial: DensityMatrix,
    pub reduced: Vec<DensityMatrix>,
    pub diagnostics: Vec<TimePointDiagnostics>,
    /// Scaled eigendecomposition residual actually achieved.
    pub eigen_residual: f64,
    /// Max drift of the universe spectrum from t = 0, when tracked.
    pub universe_spectrum_drift: Option<f64>,
}

/// Worst absolute discrepancy between oracle magnitudes and the analytic
/// law |ρ_nm(0)|·e^{−(n−m)²Γ(t)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonReport {
    pub max_abs_deviation: f64,
    pub worst_pair: (usize, usize),
    pub worst_time: f64,
    pub per_time_max: Vec<f64>,
}

/// Mode strides and decode tables for the fixed product-basis ordering.
struct BasisLayout {
    sys_dim: usize,
    bath_total: usize,
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
}

impl BasisLayout {
    fn new(sys_dim: usize, cutoffs: &[usize]) -> BasisLayout {
        let mut strides = vec![1usize; cutoffs.len()];
        for i in (0..cutoffs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cutoffs[i + 1];
        }
        let bath_total = cutoffs.iter().product();
        BasisLayout { sys_dim, bath_total, cutoffs: cutoffs.to_vec(), strides }
    }

    fn total(&self) -> usize {
        self.sys_dim * self.bath_total
    }

    fn fock_index(&self, bath_config: usize, mode: usize) -> usize {
        (bath_config / self.strides[mode]) % self.cutoffs[mode]
    }
}

/// Assemble the dense (real, exactly symmetric) Hamiltonian on the truncated
/// product basis. Fails if the scenario is invalid or larger than the
/// default pure-route budget; [`evolve_exact_with`] applies route-aware
/// budgets itself.
pub fn build_hamiltonian(scn: &OracleScenario) -> Result<DMatrix<f64>, OracleError> {
    scn.check()?;
    let total = scn.total_dimension();
    let budget = DimensionBudget::default().pure;
    if total > budget {
        return Err(OracleError::DimensionBudgetExceeded { total, budget, route: "pure" });
    }
    Ok(assemble_hamiltonian(scn))
}

fn assemble_hamiltonian(scn: &OracleScenario) -> DMatrix<f64> {
    let layout = BasisLayout::new(scn.system.dim, &scn.bath_cutoffs);
    let omega0 = scn.system.omega0;
    let mut h = DMatrix::<f64>::zeros(layout.total(), layout.total());
    for idx in 0..layout.total() {
        let n = idx / layout.bath_total;
        let b = idx % layout.bath_total;
        let mut diag = omega0 * n as f64;
        for (i, mode) in scn.bath.modes.iter().enumerate() {
            let k = layout.fock_index(b, i);
            diag += mode.omega * k as f64;
            // coupling ω₀ n λ_i (a† + a): raises k by one, clipped at the top
            if k + 1 < layout.cutoffs[i] {
                let up = idx + layout.strides[i];
                let element = omega0 * n as f64 * mode.lambda * ((k + 1) as f64).sqrt();
                h[(up, idx)] += element;
                h[(idx, up)] += element;
            }
        }
        h[(idx, idx)] = diag;
    }
    h
}

/// Thermal state of one truncated mode: diagonal Boltzmann populations
/// normalized over the d retained levels; the exact ground state at kT = 0.
pub fn thermal_mode_state(omega: f64, temp: Temperature, d: usize) -> DMatrix<f64> {
    assert!(d >= 2, "mode cutoff must be at least 2");
    assert!(omega > 0.0, "mode frequency must be positive");
    DMatrix::from_diagonal(&DVector::from_vec(thermal_populations(omega, temp, d)))
}

fn thermal_populations(omega: f64, temp: Temperature, d: usize) -> Vec<f64> {
    if temp.is_zero() {
        let mut p = vec![0.0; d];
        p[0] = 1.0;
        return p;
    }
    let ratio = (-omega / temp.kt).exp();
    let mut p = Vec::with_capacity(d);
    let mut w = 1.0;
    for _ in 0..d {
        p.push(w);
        w *= ratio;
    }
    let z: f64 = p.iter().sum();
    for w in &mut p {
        *w /= z;
    }
    p
}

pub fn evolve_exact(scn: &OracleScenario) -> Result<OracleResult, OracleError> {
    evolve_exact_with(scn, &OracleOptions::default())
}

pub fn evolve_exact_with(
    scn: &OracleScenario,
    opts: &OracleOptions,
) -> Result<OracleResult, OracleError> {
    scn.check()?;
    let layout = BasisLayout::new(scn.system.dim, &scn.bath_cutoffs);
    let pure_amplitudes = if scn.temp.is_zero() && !opts.force_density_matrix_route {
        extract_pure_state(&scn.rho_s0)
    } else {
        None
    };
    let route = if pure_amplitudes.is_some() { "pure" } else { "mixed" };
    let budget =
        if pure_amplitudes.is_some() { opts.budget.pure } else { opts.budget.mixed };
    let total = scn.total_dimension();
    if total > budget {
        return Err(OracleError::DimensionBudgetExceeded { total, budget, route });
    }

    let h = assemble_hamiltonian(scn);
    let (frequencies, eigenvectors) = diagonalize_hamiltonian(&h, &layout);
    let eigen_residual = certify_eigendecomposition(&h, &eigenvectors, &frequencies);
    if eigen_residual > opts.eigen_residual_tol {
        return Err(OracleError::EigenCertificationFailed {
            residual: eigen_residual,
            tolerance: opts.eigen_residual_tol,
        });
    }
    drop(h);

    // per-mode lists of bath configurations sitting on the top Fock level
    let top_configs: Vec<Vec<usize>> = (0..layout.cutoffs.len())
        .map(|i| {
            (0..layout.bath_total)
                .filter(|&b| layout.fock_index(b, i) == layout.cutoffs[i] - 1)
                .collect()
        })
        .collect();

    match pure_amplitudes {
        Some(amplitudes) => propagate_pure(
            scn,
            opts,
            &layout,
            &eigenvectors,
            &frequencies,
            eigen_residual,
            &top_configs,
            &amplitudes,
        ),
        None => propagate_mixed(
            scn,
            opts,
            &layout,
            &eigenvectors,
            &frequencies,
            eigen_residual,
            &top_configs,
        ),
    }
}

/// The coupling is diagonal in the system index ([H, N_s ⊗ 1] = 0), so in
/// this ordering H is exactly block diagonal with one `bath_total`-sized
/// block per system level; each block is diagonalized independently. The
/// certificate is still computed against the full matrix, so the block
/// shortcut is verified rather than trusted.
fn diagonalize_hamiltonian(
    h: &DMatrix<f64>,
    layout: &BasisLayout,
) -> (DVector<f64>, DMatrix<f64>) {
    let b = layout.bath_total;
    let mut lambda = DVector::<f64>::zeros(layout.total());
    let mut v = DMatrix::<f64>::zeros(layout.total(), layout.total());
    for n in 0..layout.sys_dim {
        let block = h.view((n * b, n * b), (b, b)).into_owned();
        let (lb, vb) = jacobi_eigen(&block);
        lambda.rows_mut(n * b, b).copy_from(&lb);
        v.view_mut((n * b, n * b), (b, b)).copy_from(&vb);
    }
    (lambda, v)
}

/// Largest of the scaled decomposition residual ‖HV − VΛ‖_max / max(1, ‖H‖_max)
/// and the orthogonality defect ‖VᵀV − 1‖_max.
fn certify_eigendecomposition(
    h: &DMatrix<f64>,
    v: &DMatrix<f64>,
    lambda: &DVector<f64>,
) -> f64 {
    let mut residual = h * v;
    for (j, mut col) in residual.column_iter_mut().enumerate() {
        col.axpy(-lambda[j], &v.column(j), 1.0);
    }
    let scale = h.amax().max(1.0);
    let mut ortho = v.tr_mul(v);
    for j in 0..ortho.nrows() {
        ortho[(j, j)] -= 1.0;
    }
    (residual.amax() / scale).max(ortho.amax())
}

/// Dominant eigenvector of `rho` scaled to unit norm, when the top
/// eigenvalue is within [`PURE_STATE_TOL`] of 1.
fn extract_pure_state(rho: &DensityMatrix) -> Option<DVector<Complex64>> {
    let eig = rho.matrix().clone().symmetric_eigen();
    let (argmax, &max_ev) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("density matrix is nonempty");
    if (1.0 - max_ev).abs() > PURE_STATE_TOL {
        return None;
    }
    let col = eig.eigenvectors.column(argmax);
    let norm = col.norm();
    Some(col.map(|z| z / norm))
}

fn real_mul_complex(v: &DMatrix<f64>, x: &DVector<Complex64>) -> DVector<Complex64> {
    let re = v * x.map(|z| z.re);
    let im = v * x.map(|z| z.im);
    DVector::from_fn(re.len(), |i, _| Complex64::new(re[i], im[i]))
}

fn real_tr_mul_complex(v: &DMatrix<f64>, x: &DVector<Complex64>) -> DVector<Complex64> {
    let re = v.tr_mul(&x.map(|z| z.re));
    let im = v.tr_mul(&x.map(|z| z.im));
    DVector::from_fn(re.len(), |i, _| Complex64::new(re[i], im[i]))
}

#[allow(clippy::too_many_arguments)]
fn propagate_pure(
    scn: &OracleScenario,
    opts: &OracleOptions,
    layout: &BasisLayout,
    v: &DMatrix<f64>,
    lambda: &DVector<f64>,
    eigen_residual: f64,
    top_configs: &[Vec<usize>],
    amplitudes: &DVector<Complex64>,
) -> Result<OracleResult, OracleError> {
    // decoupled start: bath in the vacuum, so only b = 0 entries are set
    let mut psi0 = DVector::<Complex64>::zeros(layout.total());
    for n in 0..layout.sys_dim {
        psi0[n * layout.bath_total] = amplitudes[n];
    }
    let w0 = real_tr_mul_complex(v, &psi0);

    let mut reduced = Vec::with_capacity(scn.times.len());
    let mut diagnostics = Vec::with_capacity(scn.times.len());
    for &t in &scn.times {
        let wt = DVector::from_fn(w0.len(), |j, _| {
            w0[j] * Complex64::from_polar(1.0, -lambda[j] * t)
        });
        let psi = real_mul_complex(v, &wt);

        let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let norm_defect = (norm_sq - 1.0).abs();
        if norm_defect > NORM_DEFECT_TOL {
            return Err(OracleError::UnitarityLost { defect: norm_defect, time: t });
        }
        let top_level_population = top_configs
            .iter()
            .map(|configs| {
                let mut pop = 0.0;
                for n in 0..layout.sys_dim {
                    for &b in configs {
                        pop += psi[n * layout.bath_total + b].norm_sqr();
                    }
                }
                pop
            })
            .collect::<Vec<f64>>();
        for (mode, &population) in top_level_population.iter().enumerate() {
            if population > opts.leak_tol {
                return Err(OracleError::TruncationInadequate {
                    mode,
                    population,
                    time: t,
                    leak_tol: opts.leak_tol,
                });
            }
        }

        let mut red = DMatrix::<Complex64>::zeros(layout.sys_dim, layout.sys_dim);
        for n in 0..layout.sys_dim {
            for m in 0..layout.sys_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..layout.bath_total {
                    acc += psi[n * layout.bath_total + b]
                        * psi[m * layout.bath_total + b].conj();
                }
                red[(n, m)] = acc;
            }
        }
        reduced.push(admit_reduced(red)?);
        diagnostics.push(TimePointDiagnostics { time: t, norm_defect, top_level_population });
    }

    Ok(OracleResult {
        times: scn.times.clone(),
        initial: scn.rho_s0.clone(),
        reduced,
        diagnostics,
        eigen_residual,
        universe_spectrum_drift: None,
    })
}

fn propagate_mixed(
    scn: &OracleScenario,
    opts: &OracleOptions,
    layout: &BasisLayout,
    v: &DMatrix<f64>,
    lambda: &DVector<f64>,
    eigen_residual: f64,
    top_configs: &[Vec<usize>],
) -> Result<OracleResult, OracleError> {
    // thermal weight of each bath configuration
    let mode_populations: Vec<Vec<f64>> = scn
        .bath
        .modes
        .iter()
        .zip(&scn.bath_cutoffs)
        .map(|(mode, &d)| thermal_populations(mode.omega, scn.temp, d))
        .collect();
    let weights: Vec<f64> = (0..layout.bath_total)
        .map(|b| {
            mode_populations
                .iter()
                .enumerate()
                .map(|(i, p)| p[layout.fock_index(b, i)])
                .product()
        })
        .collect();

    let total = layout.total();
    let mut rho_u0 = DMatrix::<Complex64>::zeros(total, total);
    for n in 0..layout.sys_dim {
        for m in 0..layout.sys_dim {
            let s = scn.rho_s0.entry(n, m);
            for (b, &w) in weights.iter().enumerate() {
                rho_u0[(n * layout.bath_total + b, m * layout.bath_total + b)] = s * w;
            }
        }
    }

    let initial_spectrum = if opts.track_universe_spectrum {
        Some(hermitian_spectrum(&rho_u0))
    } else {
        None
    };

    let vc = v.map(|x| Complex64::new(x, 0.0));
    let w = vc.ad_mul(&rho_u0) * &vc;
    drop(rho_u0);

    let mut reduced = Vec::with_capacity(scn.times.len());
    let mut diagnostics = Vec::with_capacity(scn.times.len());
    let mut spectrum_drift = 0.0f64;
    for &t in &scn.times {
        let phases: Vec<Complex64> =
            lambda.iter().map(|&l| Complex64::from_polar(1.0, -l * t)).collect();
        let mut wt = w.clone();
        for j in 0..total {
            for k in 0..total {
                wt[(j, k)] *= phases[j] * phases[k].conj();
            }
        }
        let rho_t = &vc * wt * vc.adjoint();

        let trace: f64 = (0..total).map(|i| rho_t[(i, i)].re).sum();
        let norm_defect = (trace - 1.0).abs();
        if norm_defect > NORM_DEFECT_TOL {
            return Err(OracleError::UnitarityLost { defect: norm_defect, time: t });
        }
        let top_level_population = top_configs
            .iter()
            .map(|configs| {
                let mut pop = 0.0;
                for n in 0..layout.sys_dim {
                    for &b in configs {
                        let idx = n * layout.bath_total + b;
                        pop += rho_t[(idx, idx)].re;
                    }
                }
                pop
            })
            .collect::<Vec<f64>>();
        for (mode, &population) in top_level_population.iter().enumerate() {
            if population > opts.leak_tol {
                return Err(OracleError::TruncationInadequate {
                    mode,
                    population,
                    time: t,
                    leak_tol: opts.leak_tol,
                });
            }
        }
        if let Some(ref spectrum0) = initial_spectrum {
            let spectrum_t = hermitian_spectrum(&rho_t);
            let drift = spectrum0
                .iter()
                .zip(&spectrum_t)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            spectrum_drift = spectrum_drift.max(drift);
        }

        let mut red = DMatrix::<Complex64>::zeros(layout.sys_dim, layout.sys_dim);
        for n in 0..layout.sys_dim {
            for m in 0..layout.sys_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..layout.bath_total {
                    acc += rho_t[(n * layout.bath_total + b, m * layout.bath_total + b)];
                }
                red[(n, m)] = acc;
            }
        }
        reduced.push(admit_reduced(red)?);
        diagnostics.push(TimePointDiagnostics { time: t, norm_defect, top_level_population });
    }

    Ok(OracleResult {
        times: scn.times.clone(),
        initial: scn.rho_s0.clone(),
        reduced,
        diagnostics,
        eigen_residual,
        universe_spectrum_drift: initial_spectrum.map(|_| spectrum_drift),
    })
}

/// Ascending eigenvalues of a (numerically) Hermitian complex matrix.
fn hermitian_spectrum(m: &DMatrix<Complex64>) -> Vec<f64> {
    let herm = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = herm.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Hermitize away propagation roundoff and re-admit through validation.
fn admit_reduced(red: DMatrix<Complex64>) -> Result<DensityMatrix, OracleError> {
    let herm = (&red + red.adjoint()).scale(0.5);
    Ok(DensityMatrix::from_matrix(herm)?)
}

/// Worst |measured| vs |predicted| magnitude discrepancy over every matrix
/// element and time: predicted = |ρ_nm(0)|·e^{−(n−m)²Γ(t)}.
pub fn compare(result: &OracleResult, gamma: &GammaSeries) -> Result<ComparisonReport, OracleError> {
    if result.reduced.len() != result.times.len() {
        return Err(OracleError::MalformedResult {
            what: format!(
                "{} reduced matrices for {} time points",
                result.reduced.len(),
                result.times.len()
            ),
        });
    }
    let series_times = gamma.times();
    if result.times.len() != series_times.len() {
        return Err(OracleError::GridMismatch {
            oracle_len: result.times.len(),
            series_len: series_times.len(),
            first_unequal: None,
        });
    }
    if let Some(i) = (0..series_times.len()).find(|&i| result.times[i] != series_times[i]) {
        return Err(OracleError::GridMismatch {
            oracle_len: result.times.len(),
            series_len: series_times.len(),
            first_unequal: Some(i),
        });
    }

    let dim = result.initial.dim();
    let mut max_abs_deviation = 0.0f64;
    let mut worst_pair = (0, 0);
    let mut worst_time = result.times[0];
    let mut per_time_max = Vec::with_capacity(result.times.len());
    for (ti, rho_t) in result.reduced.iter().enumerate() {
        if rho_t.dim() != dim {
            return Err(OracleError::MalformedResult {
                what: format!(
                    "reduced matrix at index {ti} has dimension {} (expected {dim})",
                    rho_t.dim()
                ),
            });
        }
        let g = gamma.values()[ti];
        let mut time_max = 0.0f64;
        for n in 0..dim {
            for m in 0..dim {
                let gap = n.abs_diff(m) as f64;
                let predicted = result.initial.entry(n, m).norm() * (-gap * gap * g).exp();
                let deviation = (rho_t.entry(n, m).norm() - predicted).abs();
                time_max = time_max.max(deviation);
                if deviation > max_abs_deviation {
                    max_abs_deviation = deviation;
                    worst_pair = (n, m);
                    worst_time = result.times[ti];
                }
            }
        }
        per_time_max.push(time_max);
    }
    Ok(ComparisonReport { max_abs_deviation, worst_pair, worst_time, per_time_max })
}
