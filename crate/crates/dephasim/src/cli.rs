//! Config ingestion, job dispatch, and plot-ready artifact emission.
//!
//! A run is one JSON config describing exactly one job, executed into one
//! output artifact (CSV or JSON). Every artifact embeds the library version
//! and the full effective config, and identical configs produce
//! byte-identical files: artifacts are diffable and auditable after the
//! fact. Writes are atomic (temp file + rename), exit codes are 0 success,
//! 1 validation failure, 2 numerical failure.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuum::{
    gamma_high_temperature, gamma_quadrature, gamma_short_time, gamma_therm_closed,
    gamma_vac_closed, ContinuumError, QuadratureConfig,
};
use crate::evolution::{coherence_l1, dephase, DephasingMap, EvolutionError};
use crate::finite_bath::{
    detect_periodicity, gamma_finite_series, verify_recurrence, FiniteBathError,
    DEFAULT_MAX_DENOMINATOR, DEFAULT_RATIO_TOL,
};
use crate::math::kahan_sum;
use crate::model::{
    DensityMatrix, FiniteBath, GammaMethod, GammaSeries, InvariantViolation,
    OhmicSpectralDensity, SystemSpec, Temperature, Validate, ValidationReport,
};
use crate::oracle::{
    compare, evolve_exact_with, OracleError, OracleOptions, OracleResult, OracleScenario,
};

/// Config format version accepted by this build.
pub const CONFIG_SCHEMA_VERSION: u64 = 1;

/// Band used by the summary statistic `fraction_in_band`.
pub const SUMMARY_BAND: (f64, f64) = (5.0, 15.0);

/// Default burn-in before taking the post-transient minimum.
pub const DEFAULT_T_BURN: f64 = 1.0;

const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("config version {found} not supported (this build reads version {expected})")]
    SchemaVersion { found: u64, expected: u64 },
    #[error("config job is `{config_job}` but the `{subcommand}` subcommand was invoked")]
    JobMismatch { subcommand: String, config_job: String },
    #[error("referenced input does not exist: {path}")]
    MissingInput { path: PathBuf },
    #[error("output path {path} collides with an input artifact")]
    OutputCollision { path: PathBuf },
    #[error("{message}")]
    InvalidJob { message: String },
    #[error("series is empty")]
    EmptySeries,
    #[error(transparent)]
    Validation(#[from] ValidationReport),
    #[error(transparent)]
    Finite(#[from] FiniteBathError),
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Process exit code for an error: 2 for numerical failures (the inputs were
/// valid but the computation could not meet its contract), 1 for everything
/// else.
pub fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Continuum(ContinuumError::ToleranceNotMet { .. })
        | CliError::Oracle(OracleError::TruncationInadequate { .. })
        | CliError::Oracle(OracleError::EigenCertificationFailed { .. })
        | CliError::Oracle(OracleError::UnitarityLost { .. }) => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// A sampling grid with exact endpoints: the first emitted point is `start`
/// and the last is `stop`, bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let n = self.count;
        (0..n)
            .map(|k| {
                if k == 0 {
                    self.start
                } else if k == n - 1 {
                    self.stop
                } else {
                    let f = k as f64 / (n - 1) as f64;
                    match self.spacing {
                        Spacing::Linear => self.start + f * (self.stop - self.start),
                        Spacing::Log => {
                            let (a, b) = (self.start.ln(), self.stop.ln());
                            (a + f * (b - a)).exp()
                        }
                    }
                }
            })
            .collect()
    }
}

impl Validate for GridSpec {
    fn check(&self) -> Result<(), ValidationReport> {
        let mut violations = Vec::new();
        if self.count == 0 {
            violations.push(InvariantViolation::EmptyGrid);
        }
        for (what, v) in [("grid start", self.start), ("grid stop", self.stop)] {
            if !v.is_finite() {
                violations.push(InvariantViolation::NonFinite { what: what.into() });
            }
        }
        if self.start < 0.0 {
            violations.push(InvariantViolation::NegativeTime { value: self.start });
        }
        let order_ok = if self.count == 1 { self.start == self.stop } else { self.start < self.stop };
        if self.start.is_finite() && self.stop.is_finite() && !order_ok {
            violations.push(InvariantViolation::BadGridEndpoints {
                start: self.start,
                stop: self.stop,
            });
        }
        if self.spacing == Spacing::Log && self.start <= 0.0 {
            violations.push(InvariantViolation::LogGridNotPositive { start: self.start });
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ValidationReport { violations })
        }
    }
}

fn default_t_burn() -> f64 {
    DEFAULT_T_BURN
}

/// Request for the Γ-series summary block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRequest {
    #[serde(default = "default_t_burn")]
    pub t_burn: f64,
}

/// Summary statistics over a Γ series: plateau location and persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSummary {
    pub mean: f64,
    /// Minimum of Γ over t ≥ t_burn; `None` when no sample qualifies.
    pub min_after_burn: Option<f64>,
    pub max: f64,
    /// Fraction of all samples inside [`SUMMARY_BAND`].
    pub fraction_in_band: f64,
    pub t_burn: f64,
    pub band: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteJob {
    pub system: SystemSpec,
    pub bath: FiniteBath,
    pub temp: Temperature,
    pub grid: GridSpec,
    #[serde(default)]
    pub summary: Option<SummaryRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuumJob {
    pub spectral_density: OhmicSpectralDensity,
    pub temp: Temperature,
    pub grid: GridSpec,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub summary: Option<SummaryRequest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormKind {
    Vacuum,
    Thermal,
    ShortTime,
    HighTemperature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormJob {
    pub spectral_density: OhmicSpectralDensity,
    pub temp: Temperature,
    pub grid: GridSpec,
    pub form: ClosedFormKind,
    #[serde(default)]
    pub summary: Option<SummaryRequest>,
}

fn default_source() -> GammaMethod {
    GammaMethod::Manual
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveJob {
    pub rho0: DensityMatrix,
    pub gamma: f64,
    #[serde(default = "default_source")]
    pub source: GammaMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleJob {
    pub system: SystemSpec,
    pub bath: FiniteBath,
    pub bath_cutoffs: Vec<usize>,
    pub temp: Temperature,
    pub rho_s0: DensityMatrix,
    pub grid: GridSpec,
    #[serde(default)]
    pub options: OracleOptions,
}

impl OracleJob {
    fn scenario(&self) -> OracleScenario {
        OracleScenario {
            system: self.system,
            bath: self.bath.clone(),
            bath_cutoffs: self.bath_cutoffs.clone(),
            temp: self.temp,
            rho_s0: self.rho_s0.clone(),
            times: self.grid.points(),
        }
    }
}

fn default_ratio_tol() -> f64 {
    DEFAULT_RATIO_TOL
}

fn default_max_denominator() -> u64 {
    DEFAULT_MAX_DENOMINATOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicityJob {
    pub bath: FiniteBath,
    /// System spec used only to evaluate the recurrence residual Γ(T).
    pub system: SystemSpec,
    #[serde(default = "default_ratio_tol")]
    pub tol: f64,
    #[serde(default = "default_max_denominator")]
    pub max_denominator: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareJob {
    /// JSON artifact produced by an `oracle` job.
    pub oracle_artifact: PathBuf,
    /// JSON artifact produced by a `finite`, `continuum`, or `closed_form` job.
    pub gamma_artifact: PathBuf,
}

/// Exactly one job per config, keyed by job name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum JobSpec {
    Finite(FiniteJob),
    Continuum(ContinuumJob),
    ClosedForm(ClosedFormJob),
    Evolve(EvolveJob),
    Oracle(OracleJob),
    Periodicity(PeriodicityJob),
    Compare(CompareJob),
}

/// The job name as it appears in configs and on the command line.
pub fn job_name(job: &JobSpec) -> &'static str {
    match job {
        JobSpec::Finite(_) => "finite",
        JobSpec::Continuum(_) => "continuum",
        JobSpec::ClosedForm(_) => "closed_form",
        JobSpec::Evolve(_) => "evolve",
        JobSpec::Oracle(_) => "oracle",
        JobSpec::Periodicity(_) => "periodicity",
        JobSpec::Compare(_) => "compare",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u64,
    pub job: JobSpec,
    pub output: OutputSpec,
}

impl RunConfig {
    /// Structural validation plus the filesystem invariants (referenced
    /// inputs exist, output does not collide with an input).
    pub fn check(&self) -> Result<(), CliError> {
        if self.version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::SchemaVersion {
                found: self.version,
                expected: CONFIG_SCHEMA_VERSION,
            });
        }
        match &self.job {
            JobSpec::Finite(job) => {
                job.system.check()?;
                job.bath.check()?;
                job.temp.check()?;
                job.grid.check()?;
            }
            JobSpec::Continuum(job) => {
                job.spectral_density.check()?;
                job.temp.check()?;
                job.grid.check()?;
                job.quadrature.check()?;
            }
            JobSpec::ClosedForm(job) => {
                job.spectral_density.check()?;
                job.temp.check()?;
                job.grid.check()?;
                if job.form == ClosedFormKind::Vacuum && !job.temp.is_zero() {
                    return Err(CliError::InvalidJob {
                        message: format!(
                            "the vacuum closed form is a kT = 0 result; got kt = {} \
                             (use form = \"thermal\" or temp.kt = 0)",
                            job.temp.kt
                        ),
                    });
                }
            }
            JobSpec::Evolve(job) => {
                DephasingMap::new(job.gamma, job.source)?;
            }
            JobSpec::Oracle(job) => {
                job.grid.check()?;
                job.scenario().check()?;
            }
            JobSpec::Periodicity(job) => {
                job.bath.check()?;
                job.system.check()?;
                if !job.tol.is_finite() || job.tol < 0.0 {
                    return Err(CliError::Finite(FiniteBathError::InvalidTolerance {
                        value: job.tol,
                    }));
                }
                if job.max_denominator == 0 {
                    return Err(CliError::Finite(FiniteBathError::InvalidMaxDenominator));
                }
            }
            JobSpec::Compare(job) => {
                for input in [&job.oracle_artifact, &job.gamma_artifact] {
                    if !input.is_file() {
                        return Err(CliError::MissingInput { path: input.clone() });
                    }
                    if same_path(input, &self.output.path) {
                        return Err(CliError::OutputCollision {
                            path: self.output.path.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// True when the two paths clearly name the same file.
fn same_path(a: &Path, b: &Path) -> bool {
    if a == b {
        return true;
    }
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(ca), Ok(cb)) => ca == cb,
        _ => false,
    }
}

/// Everything a run writes: the version that produced it, the effective
/// config, any regime warnings, and the job's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact<T> {
    pub dephasim_version: String,
    pub config: RunConfig,
    pub warnings: Vec<String>,
    pub result: T,
}

/// Result payload of the series-producing jobs (finite, continuum,
/// closed_form); `compare` reads this back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesOutput {
    pub series: GammaSeries,
    pub summary: Option<FigureSummary>,
}

/// Result payload of the evolve job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveOutput {
    pub rho_t: DensityMatrix,
    pub coherence_l1_initial: f64,
    pub coherence_l1_final: f64,
}

/// JSON-friendly view of a periodicity verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicityOutput {
    pub periodic: bool,
    pub period: Option<f64>,
    /// Accepted frequency ratios ω_i/ω_0 as exact fractions.
    pub ratios: Vec<RatioEntry>,
    /// Integers n_i with T = n_i·(2π/ω_i), as decimal strings (they can
    /// exceed u64 for adversarial denominators).
    pub recurrence_integers: Vec<String>,
    /// Mode pair that defeated rationalization, when aperiodic.
    pub witness: Option<(usize, usize)>,
    /// Γ(T) evaluated at the reported period, when periodic.
    pub recurrence_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioEntry {
    pub mode: usize,
    pub numerator: u64,
    pub denominator: u64,
}

/// Result payload of the compare job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareOutput {
    pub max_abs_deviation: f64,
    pub worst_pair: (usize, usize),
    pub worst_time: f64,
    pub times: Vec<f64>,
    pub per_time_max: Vec<f64>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|source| CliError::Parse { path: path.to_path_buf(), source })?;
    config.check()?;
    Ok(config)
}

/// Execute the configured job and write its artifact. Returns the path
/// written.
pub fn run(config: &RunConfig) -> Result<PathBuf, CliError> {
    config.check()?;
    let (body, warnings) = match &config.job {
        JobSpec::Finite(job) => run_series_job(config, series_finite(job)?, job.summary)?,
        JobSpec::Continuum(job) => {
            run_series_job(config, series_continuum(job)?, job.summary)?
        }
        JobSpec::ClosedForm(job) => {
            run_series_job(config, series_closed_form(job)?, job.summary)?
        }
        JobSpec::Evolve(job) => run_evolve(config, job)?,
        JobSpec::Oracle(job) => run_oracle(config, job)?,
        JobSpec::Periodicity(job) => run_periodicity(config, job)?,
        JobSpec::Compare(job) => run_compare(config, job)?,
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    write_atomic(&config.output.path, &body)?;
    Ok(config.output.path.clone())
}

/// Summary statistics for a Γ series.
pub fn summarize(series: &GammaSeries, t_burn: f64) -> FigureSummary {
    let values = series.values();
    let times = series.times();
    let mean = kahan_sum(values.iter().copied()) / values.len() as f64;
    let min_after_burn = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= t_burn)
        .map(|(_, &g)| g)
        .min_by(f64::total_cmp);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let in_band = values
        .iter()
        .filter(|&&g| (SUMMARY_BAND.0..=SUMMARY_BAND.1).contains(&g))
        .count();
    FigureSummary {
        mean,
        min_after_burn,
        max,
        fraction_in_band: in_band as f64 / values.len() as f64,
        t_burn,
        band: SUMMARY_BAND,
    }
}

/// Render a Γ series as plot-ready CSV: a `t,gamma` table, 17 significant
/// digits per value (lossless f64 round-trip), plus an optional summary
/// comment block.
pub fn emit_figure_data(
    series: &GammaSeries,
    summary: Option<&SummaryRequest>,
) -> Result<String, CliError> {
    if series.times().is_empty() {
        return Err(CliError::EmptySeries);
    }
    let mut out = String::from("t,gamma\n");
    for (&t, &g) in series.times().iter().zip(series.values()) {
        out.push_str(&format!("{t:.16e},{g:.16e}\n"));
    }
    if let Some(request) = summary {
        let s = summarize(series, request.t_burn);
        out.push_str(&format!("# mean = {:.16e}\n", s.mean));
        match s.min_after_burn {
            Some(m) => {
                out.push_str(&format!("# min_after_burn(t_burn = {}) = {m:.16e}\n", s.t_burn))
            }
            None => out.push_str(&format!("# min_after_burn(t_burn = {}) = n/a\n", s.t_burn)),
        }
        out.push_str(&format!("# max = {:.16e}\n", s.max));
        out.push_str(&format!(
            "# fraction_in_[{},{}] = {:.16e}\n",
            s.band.0, s.band.1, s.fraction_in_band
        ));
    }
    Ok(out)
}

fn series_finite(job: &FiniteJob) -> Result<(GammaSeries, Vec<String>), CliError> {
    let series =
        gamma_finite_series(&job.bath, &job.system, job.temp, &job.grid.points())?;
    Ok((series, Vec::new()))
}

fn series_continuum(job: &ContinuumJob) -> Result<(GammaSeries, Vec<String>), CliError> {
    let times = job.grid.points();
    let mut values = Vec::with_capacity(times.len());
    let mut max_error = 0.0f64;
    let mut max_tail = 0.0f64;
    for &t in &times {
        let estimate = gamma_quadrature(&job.spectral_density, job.temp, t, &job.quadrature)?;
        max_error = max_error.max(estimate.error_estimate);
        max_tail = max_tail.max(estimate.tail_bound);
        values.push(estimate.value);
    }
    let mut params = BTreeMap::new();
    params.insert("abs_tol".into(), job.quadrature.abs_tol);
    params.insert("rel_tol".into(), job.quadrature.rel_tol);
    params.insert("max_error_estimate".into(), max_error);
    params.insert("max_tail_bound".into(), max_tail);
    let series = GammaSeries::new(times, values, GammaMethod::Quadrature, params)?;
    Ok((series, Vec::new()))
}

fn series_closed_form(job: &ClosedFormJob) -> Result<(GammaSeries, Vec<String>), CliError> {
    let times = job.grid.points();
    let mut values = Vec::with_capacity(times.len());
    let mut warnings: Vec<String> = Vec::new();
    let mut record = |w: Option<String>| {
        if let Some(w) = w {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
    };
    let method = match job.form {
        ClosedFormKind::Vacuum => GammaMethod::VacuumClosedForm,
        ClosedFormKind::Thermal => GammaMethod::ThermalClosedForm,
        ClosedFormKind::ShortTime => GammaMethod::ShortTime,
        ClosedFormKind::HighTemperature => GammaMethod::HighTemperature,
    };
    for &t in &times {
        let value = match job.form {
            ClosedFormKind::Vacuum => gamma_vac_closed(&job.spectral_density, t)?,
            ClosedFormKind::Thermal => {
                let v = gamma_therm_closed(&job.spectral_density, job.temp, t)?;
                record(v.warning.map(|w| w.to_string()));
                v.value
            }
            ClosedFormKind::ShortTime => {
                let v = gamma_short_time(&job.spectral_density, job.temp, t)?;
                record(v.warning.map(|w| w.to_string()));
                v.value
            }
            ClosedFormKind::HighTemperature => {
                let v = gamma_high_temperature(&job.spectral_density, job.temp, t)?;
                record(v.warning.map(|w| w.to_string()));
                v.value
            }
        };
        values.push(value);
    }
    let series = GammaSeries::new(times, values, method, BTreeMap::new())?;
    Ok((series, warnings))
}

type JobOutput = (Vec<u8>, Vec<String>);

fn run_series_job(
    config: &RunConfig,
    (series, warnings): (GammaSeries, Vec<String>),
    summary: Option<SummaryRequest>,
) -> Result<JobOutput, CliError> {
    let body = match config.output.format {
        OutputFormat::Csv => {
            let mut text = csv_preamble(config)?;
            text.push_str(&emit_figure_data(&series, summary.as_ref())?);
            text.into_bytes()
        }
        OutputFormat::Json => {
            let result = SeriesOutput {
                summary: summary.map(|req| summarize(&series, req.t_burn)),
                series,
            };
            render_json(config, &warnings, &result)?
        }
    };
    Ok((body, warnings))
}

fn run_evolve(config: &RunConfig, job: &EvolveJob) -> Result<JobOutput, CliError> {
    let map = DephasingMap::new(job.gamma, job.source)?;
    let rho_t = dephase(&job.rho0, &map)?;
    let result = EvolveOutput {
        coherence_l1_initial: coherence_l1(&job.rho0),
        coherence_l1_final: coherence_l1(&rho_t),
        rho_t,
    };
    let body = match config.output.format {
        OutputFormat::Csv => {
            let mut text = csv_preamble(config)?;
            text.push_str("n,m,re,im,abs\n");
            let d = result.rho_t.dim();
            for n in 0..d {
                for m in 0..d {
                    let z = result.rho_t.entry(n, m);
                    text.push_str(&format!(
                        "{n},{m},{:.16e},{:.16e},{:.16e}\n",
                        z.re,
                        z.im,
                        z.norm()
                    ));
                }
            }
            text.push_str(&format!(
                "# coherence_l1: {:.16e} -> {:.16e}\n",
                result.coherence_l1_initial, result.coherence_l1_final
            ));
            text.into_bytes()
        }
        OutputFormat::Json => render_json(config, &[], &result)?,
    };
    Ok((body, Vec::new()))
}

fn run_oracle(config: &RunConfig, job: &OracleJob) -> Result<JobOutput, CliError> {
    let result = evolve_exact_with(&job.scenario(), &job.options)?;
    let body = match config.output.format {
        OutputFormat::Csv => {
            let mut text = csv_preamble(config)?;
            let d = result.initial.dim();
            let mut header = String::from("t");
            for n in 0..d {
                for m in n..d {
                    header.push_str(&format!(",abs_rho_{n}_{m}"));
                }
            }
            header.push_str(",norm_defect\n");
            text.push_str(&header);
            for (i, rho_t) in result.reduced.iter().enumerate() {
                text.push_str(&format!("{:.16e}", result.times[i]));
                for n in 0..d {
                    for m in n..d {
                        text.push_str(&format!(",{:.16e}", rho_t.entry(n, m).norm()));
                    }
                }
                text.push_str(&format!(",{:.16e}\n", result.diagnostics[i].norm_defect));
            }
            text.into_bytes()
        }
        OutputFormat::Json => render_json(config, &[], &result)?,
    };
    Ok((body, Vec::new()))
}

fn run_periodicity(config: &RunConfig, job: &PeriodicityJob) -> Result<JobOutput, CliError> {
    let report = detect_periodicity(&job.bath, job.tol, job.max_denominator)?;
    let recurrence_residual = if report.periodic {
        Some(verify_recurrence(&job.bath, &job.system, &report)?)
    } else {
        None
    };
    let result = PeriodicityOutput {
        periodic: report.periodic,
        period: report.period,
        ratios: report
            .ratios
            .iter()
            .enumerate()
            .map(|(mode, r)| RatioEntry {
                mode,
                numerator: r.numerator,
                denominator: r.denominator,
            })
            .collect(),
        recurrence_integers: report.rationalizations.iter().map(|n| n.to_string()).collect(),
        witness: report.witness,
        recurrence_residual,
    };
    let body = match config.output.format {
        OutputFormat::Csv => {
            let mut text = csv_preamble(config)?;
            text.push_str("key,value\n");
            text.push_str(&format!("periodic,{}\n", result.periodic));
            match result.period {
                Some(p) => text.push_str(&format!("period,{p:.16e}\n")),
                None => text.push_str("period,\n"),
            }
            for r in &result.ratios {
                text.push_str(&format!("ratio_{},{}/{}\n", r.mode, r.numerator, r.denominator));
            }
            for (i, n) in result.recurrence_integers.iter().enumerate() {
                text.push_str(&format!("recurrence_integer_{i},{n}\n"));
            }
            if let Some((a, b)) = result.witness {
                text.push_str(&format!("witness,{a}:{b}\n"));
            }
            if let Some(res) = result.recurrence_residual {
                text.push_str(&format!("recurrence_residual,{res:.16e}\n"));
            }
            text.into_bytes()
        }
        OutputFormat::Json => render_json(config, &[], &result)?,
    };
    Ok((body, Vec::new()))
}

fn run_compare(config: &RunConfig, job: &CompareJob) -> Result<JobOutput, CliError> {
    let oracle: Artifact<OracleResult> = load_artifact(&job.oracle_artifact)?;
    let gamma: Artifact<SeriesOutput> = load_artifact(&job.gamma_artifact)?;
    let report = compare(&oracle.result, &gamma.result.series)?;
    let result = CompareOutput {
        max_abs_deviation: report.max_abs_deviation,
        worst_pair: report.worst_pair,
        worst_time: report.worst_time,
        times: oracle.result.times.clone(),
        per_time_max: report.per_time_max,
    };
    let body = match config.output.format {
        OutputFormat::Csv => {
            let mut text = csv_preamble(config)?;
            text.push_str("t,max_deviation\n");
            for (&t, &dev) in result.times.iter().zip(&result.per_time_max) {
                text.push_str(&format!("{t:.16e},{dev:.16e}\n"));
            }
            text.push_str(&format!("# max_abs_deviation = {:.16e}\n", result.max_abs_deviation));
            text.into_bytes()
        }
        OutputFormat::Json => render_json(config, &[], &result)?,
    };
    Ok((body, Vec::new()))
}

fn load_artifact<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Artifact<T>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text)
        .map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
}

/// `# dephasim <version>` and a one-line config echo, so a CSV artifact is
/// self-describing just like the JSON ones.
fn csv_preamble(config: &RunConfig) -> Result<String, CliError> {
    let echo = serde_json::to_string(config).map_err(|source| CliError::Parse {
        path: config.output.path.clone(),
        source,
    })?;
    Ok(format!("# dephasim {LIBRARY_VERSION}\n# config = {echo}\n"))
}

fn render_json<T: Serialize>(
    config: &RunConfig,
    warnings: &[String],
    result: &T,
) -> Result<Vec<u8>, CliError> {
    let artifact = Artifact {
        dephasim_version: LIBRARY_VERSION.to_string(),
        config: config.clone(),
        warnings: warnings.to_vec(),
        result,
    };
    let mut text = serde_json::to_string_pretty(&artifact).map_err(|source| {
        CliError::Parse { path: config.output.path.clone(), source }
    })?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Write through a temp file in the destination directory, then rename:
/// readers never observe a half-written artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let wrap = |source: std::io::Error| CliError::Write { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(wrap)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.flush().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}
