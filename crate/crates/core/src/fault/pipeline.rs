//! Instrumented copy of the analysis pipeline.
//!
//! Mirrors `harmonic::analyze_detailed` operation for operation so that, with
//! `fault == None`, results are bit-identical to the reference.

use std::f64::consts::TAU;

use super::Fault;
use crate::engine::EngineError;
use crate::harmonic::{
    normalize_degrees, ConstituentSet, DesignMatrix, FitConfig, HarmonicError, HouseholderQr,
    TidalSolution, TimeSeries,
};

pub(super) fn analyze(
    series: &TimeSeries,
    constituents: &ConstituentSet,
    config: &FitConfig,
    fault: Option<Fault>,
) -> Result<TidalSolution, EngineError> {
    let on = |f: Fault| fault == Some(f);
    config.validate()?;
    if constituents.is_empty() {
        return Err(HarmonicError::InvalidInput("constituent set is empty".to_string()).into());
    }

    let rayleigh = config.rayleigh_check != on(Fault::RayleighFlagNegated);
    if rayleigh {
        let span = series.span();
        let members = constituents.members();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                let separation = (a.frequency - b.frequency).abs();
                let unresolved = if on(Fault::RayleighCheckInverted) {
                    separation * span >= TAU
                } else {
                    separation * span < TAU
                };
                if unresolved {
                    log::warn!(
                        "{} and {} are not resolvable (T = {span} h)",
                        a.name,
                        b.name
                    );
                }
            }
        }
    }

    let include_trend = config.include_trend != on(Fault::TrendFlagNegated);
    let trend = match fault {
        Some(Fault::TrendBranchForced) => true,
        Some(Fault::TrendBranchSkipped) => false,
        _ => include_trend,
    };
    let intercept = !on(Fault::InterceptColumnDisabled);

    let times = series.times();
    let elevations = series.elevations();
    let m = if on(Fault::DesignDropsLastSample) {
        times.len() - 1
    } else {
        times.len()
    };
    if m == 0 {
        return Err(HarmonicError::InvalidInput("no sample times".to_string()).into());
    }
    let t_last = times[m - 1];
    let t_end = times[..m].iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let n = usize::from(intercept) + usize::from(trend) + 2 * constituents.len();
    let mut data = Vec::with_capacity(m * n);
    for j in 0..m {
        let t = if on(Fault::DesignTimeLagged) {
            times[j.saturating_sub(1)]
        } else {
            times[j]
        };
        if intercept {
            data.push(1.0);
        }
        if trend {
            data.push(match fault {
                Some(Fault::DesignTrendReadsElevation) => elevations[j],
                Some(Fault::DesignTrendFromLastSample) => t - t_last,
                _ => t,
            });
        }
        for c in constituents.members() {
            let frequency = if on(Fault::DesignFrequencyCycles) {
                c.frequency / TAU
            } else {
                c.frequency
            };
            let (s, co) = (frequency * t).sin_cos();
            if on(Fault::DesignSincosSwapped) {
                data.push(s);
                data.push(co);
            } else {
                data.push(co);
                data.push(s);
            }
        }
    }

    let underdetermined = if on(Fault::DofCheckStrict) {
        m <= n
    } else {
        m < n
    };
    if underdetermined {
        return Err(HarmonicError::Underdetermined { rows: m, cols: n }.into());
    }
    let design = DesignMatrix::from_row_major(m, n, data)?;
    let qr = HouseholderQr::factor(&design)?;
    let rcond = qr.rcond_estimate();
    let reject = match fault {
        Some(Fault::ConditioningGuardSkipped) => false,
        Some(Fault::ConditioningCheckInverted) => rcond >= config.min_conditioning,
        _ => rcond.is_nan() || rcond < config.min_conditioning,
    };
    if reject {
        return Err(HarmonicError::IllConditioned { rcond }.into());
    }

    let mut qty = elevations[..m].to_vec();
    let reflectors = if on(Fault::QtySkipsLastReflector) {
        n - 1
    } else {
        n
    };
    for k in 0..reflectors {
        qr.apply_reflector(k, &mut qty);
    }
    let mut beta = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = qty[i];
        let start = if on(Fault::BacksubSkipsNeighbor) {
            i + 2
        } else {
            i + 1
        };
        for (j, b) in beta.iter().enumerate().skip(start) {
            acc -= qr.r(i, j) * b;
        }
        beta[i] = if on(Fault::BacksubDivideToMultiply) {
            acc * qr.r_diag(i)
        } else {
            acc / qr.r_diag(i)
        };
    }

    let slot = |k: usize| {
        beta.get(k)
            .copied()
            .ok_or_else(|| EngineError::Crash(format!("coefficient index {k} out of range")))
    };
    let a0 = if !intercept {
        0.0
    } else if on(Fault::OutputInterceptReadsTrendSlot) {
        slot(1)?
    } else {
        slot(0)?
    };
    let offset = usize::from(intercept) + usize::from(trend);
    let a1 = if trend {
        let v = slot(offset - 1)?;
        if on(Fault::TrendSignFlipped) {
            -v
        } else {
            v
        }
    } else {
        0.0
    };

    let mut polar = Vec::with_capacity(constituents.len());
    for (k, c) in constituents.members().iter().enumerate() {
        let b = slot(offset + 2 * k)?;
        let cc = slot(offset + 2 * k + 1)?;
        polar.push(to_polar(b, cc, c.frequency, trend, t_end, fault));
    }
    Ok(TidalSolution::new(a0, a1, constituents, &polar))
}

fn to_polar(
    b: f64,
    c: f64,
    frequency: f64,
    trend: bool,
    t_end: f64,
    fault: Option<Fault>,
) -> (f64, f64) {
    let on = |f: Fault| fault == Some(f);
    let amplitude = match fault {
        Some(Fault::AmplitudeMissingSquares) => (b + c).abs().sqrt(),
        Some(Fault::AmplitudeAbsSum) => b.abs() + c.abs(),
        _ => b.hypot(c),
    };
    let zero = if on(Fault::ZeroAmplitudeCheckInverted) {
        amplitude != 0.0
    } else {
        amplitude == 0.0
    };
    if zero {
        return (0.0, 0.0);
    }
    let angle = if on(Fault::PhaseSignFlipped) {
        c.atan2(b)
    } else {
        (-c).atan2(b)
    };
    let mut deg = if on(Fault::PhaseRadianFactor) {
        angle
    } else {
        angle.to_degrees()
    };
    if trend && on(Fault::PhaseRefDefect) {
        deg += (frequency * t_end).to_degrees();
    }
    let phase = match fault {
        Some(Fault::PhaseWrapSkipped) => deg,
        Some(Fault::PhaseWrapForced) => 0.0,
        _ => normalize_degrees(deg),
    };
    (amplitude, phase)
}
