//! Harmonic tidal analysis and prediction.
//!
//! Sea level is modelled as an intercept, an optional linear trend and a sum
//! of cosines at known constituent frequencies:
//!
//! ```text
//! y(t) = a0 + a1 t + sum_k A_k cos(sigma_k t + phi_k)
//! ```
//!
//! Analysis solves the equivalent real form `B_k cos(sigma_k t) + C_k sin(sigma_k t)`
//! by ordinary least squares (Householder QR) and converts each `(B_k, C_k)`
//! pair to amplitude and phase. Time is in hours, elevation in metres,
//! frequencies in radians per hour and phases in degrees.

mod catalog;
mod design;
mod io;
mod ols;
mod polar;
mod types;

pub use catalog::{catalog_names, constituent_frequency, M2_PERIOD_HOURS};
pub use design::{build_design_matrix, DesignMatrix};
pub use io::{read_series_csv, series_from_csv_str, series_to_csv_string, write_series_csv};
pub use ols::{normal_equations_solve, ols_fit, residual_orthogonality, HouseholderQr, OlsFit};
pub use polar::{normalize_degrees, polar_to_raw, raw_to_polar};
pub use types::{
    Constituent, ConstituentSet, FitConfig, HarmonicComponent, RawCoefficients, TidalSolution,
    TimeSeries,
};

use thiserror::Error;

/// Errors raised by the harmonic engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarmonicError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown constituent '{0}'")]
    UnknownConstituent(String),
    #[error("under-determined fit: {rows} observations for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("ill-conditioned design matrix: reciprocal condition estimate {rcond:e}")]
    IllConditioned { rcond: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, HarmonicError>;

/// Non-fatal diagnostics produced by an analysis.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisWarning {
    /// Two constituents cannot be separated over the record span.
    RayleighUnresolved {
        first: String,
        second: String,
        separation: f64,
        span: f64,
    },
}

impl std::fmt::Display for AnalysisWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnalysisWarning::RayleighUnresolved {
                first,
                second,
                separation,
                span,
            } => write!(
                f,
                "{first} and {second} are not resolvable: |dsigma| * T = {:.4} < 2pi (T = {span} h)",
                separation * span
            ),
        }
    }
}

/// Full result of an analysis, including the raw coefficients and the
/// least-squares certificate.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub solution: TidalSolution,
    pub raw: RawCoefficients,
    /// `||X^T r|| / ||y||` for the fitted residual `r`.
    pub orthogonality: f64,
    pub rcond: f64,
    pub warnings: Vec<AnalysisWarning>,
}

/// Fits the harmonic model to `series` and returns amplitudes and phases.
pub fn analyze(
    series: &TimeSeries,
    constituents: &ConstituentSet,
    config: &FitConfig,
) -> Result<TidalSolution> {
    analyze_detailed(series, constituents, config).map(|a| a.solution)
}

/// Like [`analyze`], but keeps the raw coefficients, the residual certificate
/// and any Rayleigh warnings.
pub fn analyze_detailed(
    series: &TimeSeries,
    constituents: &ConstituentSet,
    config: &FitConfig,
) -> Result<Analysis> {
    config.validate()?;
    if constituents.is_empty() {
        return Err(HarmonicError::InvalidInput(
            "constituent set is empty".to_string(),
        ));
    }

    let warnings = if config.rayleigh_check {
        rayleigh_warnings(series, constituents)
    } else {
        Vec::new()
    };
    for w in &warnings {
        log::warn!("{w}");
    }

    let design = build_design_matrix(series.times(), constituents, config.include_trend)?;
    let fit = ols_fit(&design, series.elevations(), config.min_conditioning)?;
    let raw = RawCoefficients::from_beta(&fit.beta, config.include_trend, constituents.len());
    let orthogonality = residual_orthogonality(&design, series.elevations(), &fit.beta);
    let solution = TidalSolution::from_raw(&raw, constituents);

    Ok(Analysis {
        solution,
        raw,
        orthogonality,
        rcond: fit.rcond,
        warnings,
    })
}

fn rayleigh_warnings(series: &TimeSeries, constituents: &ConstituentSet) -> Vec<AnalysisWarning> {
    let span = series.span();
    let members = constituents.members();
    let mut out = Vec::new();
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            let separation = (a.frequency - b.frequency).abs();
            if separation * span < std::f64::consts::TAU {
                out.push(AnalysisWarning::RayleighUnresolved {
                    first: a.name.clone(),
                    second: b.name.clone(),
                    separation,
                    span,
                });
            }
        }
    }
    out
}

/// Evaluates the fitted model at `times`.
pub fn predict(solution: &TidalSolution, times: &[f64]) -> Result<TimeSeries> {
    if let Some(bad) = times.iter().find(|t| !t.is_finite()) {
        return Err(HarmonicError::InvalidInput(format!(
            "non-finite prediction time {bad}"
        )));
    }
    let elevations = times.iter().map(|&t| solution.evaluate(t)).collect();
    TimeSeries::new(times.to_vec(), elevations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> ConstituentSet {
        ConstituentSet::from_names(&["M2"]).unwrap()
    }

    fn model_series(a0: f64, a1: f64, amp: f64, phase_deg: f64, n: usize) -> TimeSeries {
        let sigma = constituent_frequency("M2").unwrap().frequency;
        let times: Vec<f64> = (0..n).map(|j| j as f64).collect();
        let elev = times
            .iter()
            .map(|&t| a0 + a1 * t + amp * (sigma * t + phase_deg.to_radians()).cos())
            .collect();
        TimeSeries::new(times, elev).unwrap()
    }

    #[test]
    fn recovers_generating_parameters() {
        let series = model_series(0.3, 0.0, 1.2, 40.0, 336);
        let sol = analyze(&series, &m2(), &FitConfig::default()).unwrap();
        assert!((sol.a0 - 0.3).abs() < 1e-6);
        assert!(sol.a1.abs() < 1e-6);
        assert!((sol.components[0].amplitude - 1.2).abs() < 1e-6);
        assert!((sol.components[0].phase_deg - 40.0).abs() < 1e-6);
    }

    #[test]
    fn constant_series_has_no_oscillation() {
        let series = TimeSeries::new((0..48).map(f64::from).collect(), vec![5.0; 48]).unwrap();
        let sol = analyze(&series, &m2(), &FitConfig::default()).unwrap();
        assert!((sol.a0 - 5.0).abs() < 1e-9);
        assert!(sol.a1.abs() < 1e-9);
        assert!(sol.components[0].amplitude < 1e-9);
    }

    #[test]
    fn three_points_cannot_fit_trend_and_m2() {
        let series = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![0.1, 0.2, 0.3]).unwrap();
        let err = analyze(&series, &m2(), &FitConfig::default()).unwrap_err();
        assert_eq!(err, HarmonicError::Underdetermined { rows: 3, cols: 4 });
    }

    #[test]
    fn empty_constituent_set_is_rejected() {
        let series = model_series(0.0, 0.0, 1.0, 0.0, 24);
        let empty = ConstituentSet::new(Vec::new()).unwrap();
        assert!(matches!(
            analyze(&series, &empty, &FitConfig::default()),
            Err(HarmonicError::InvalidInput(_))
        ));
    }

    #[test]
    fn rayleigh_warning_for_short_record() {
        // M2 and S2 need roughly 355 h to separate.
        let set = ConstituentSet::from_names(&["M2", "S2"]).unwrap();
        let series = model_series(0.0, 0.0, 1.0, 10.0, 100);
        let analysis = analyze_detailed(&series, &set, &FitConfig::default()).unwrap();
        assert_eq!(analysis.warnings.len(), 1);

        let long = model_series(0.0, 0.0, 1.0, 10.0, 400);
        let analysis = analyze_detailed(&long, &set, &FitConfig::default()).unwrap();
        assert!(analysis.warnings.is_empty());

        let quiet = FitConfig {
            rayleigh_check: false,
            ..FitConfig::default()
        };
        let analysis = analyze_detailed(&series, &set, &quiet).unwrap();
        assert!(analysis.warnings.is_empty());
    }

    #[test]
    fn predict_constant_and_pure_cosine() {
        let m2 = m2();
        let constant = TidalSolution::new(1.0, 0.0, &m2, &[(0.0, 0.0)]);
        let out = predict(&constant, &[0.0, 3.7, -12.0]).unwrap();
        assert!(out.elevations().iter().all(|&y| y == 1.0));

        let cosine = TidalSolution::new(0.0, 0.0, &m2, &[(2.0, 0.0)]);
        assert_eq!(predict(&cosine, &[0.0]).unwrap().elevations()[0], 2.0);
    }

    #[test]
    fn analyze_then_predict_reproduces_noise_free_input() {
        let series = model_series(-0.4, 0.0007, 2.1, 300.0, 240);
        let sol = analyze(&series, &m2(), &FitConfig::default()).unwrap();
        let back = predict(&sol, series.times()).unwrap();
        for (a, b) in back.elevations().iter().zip(series.elevations()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn predict_rejects_non_finite_times() {
        let sol = TidalSolution::new(0.0, 0.0, &m2(), &[(1.0, 0.0)]);
        assert!(predict(&sol, &[f64::NAN]).is_err());
    }
}
