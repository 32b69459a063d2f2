use std::f64::consts::TAU;

use rand::Rng;

use super::{AppendTime, MrError, MrId, MrOptions, MrParams, SCALE_RANGE, SHIFT_RANGE};
use crate::engine::TapInput;
use crate::harmonic::{predict, FitConfig, TidalSolution, TimeSeries};

/// Fit configuration a relation's source case is run with: MR6 fits without
/// trend, every other relation with one.
pub fn source_config_for(mr: MrId) -> FitConfig {
    FitConfig::with_trend(mr != MrId::MR6)
}

fn check_preconditions(mr: MrId, input: &TapInput) -> Result<(), MrError> {
    let need_trend = match mr {
        MrId::MR6 => false,
        MrId::MR7 => true,
        _ => return Ok(()),
    };
    if input.constituents.len() != 1 {
        return Err(MrError::Precondition {
            mr,
            reason: format!(
                "needs exactly one constituent, got {}",
                input.constituents.len()
            ),
        });
    }
    if input.config.include_trend != need_trend {
        return Err(MrError::Precondition {
            mr,
            reason: format!(
                "needs a fit {} a trend",
                if need_trend { "with" } else { "without" }
            ),
        });
    }
    Ok(())
}

/// Draws the transformation parameters for one follow-up case.
pub fn draw_params<R: Rng + ?Sized>(
    mr: MrId,
    source: &TapInput,
    options: &MrOptions,
    rng: &mut R,
) -> Result<MrParams, MrError> {
    let times = source.series.times();
    Ok(match mr {
        MrId::MR1 => {
            let (lo, hi) = times
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
                    (lo.min(t), hi.max(t))
                });
            let span = hi - lo;
            let time = match options.append_time {
                AppendTime::NextStep => {
                    let step = match times {
                        [.., a, b] if b > a => b - a,
                        _ => 1.0,
                    };
                    hi + step
                }
                AppendTime::WithinRecord if span > 0.0 => rng.random_range(lo..hi),
                AppendTime::WithinRecord => lo,
                AppendTime::BeyondRecord => hi + rng.random_range(0.0..=span.max(1.0)),
            };
            MrParams::Append { time }
        }
        MrId::MR2 => MrParams::Reflect,
        MrId::MR3 => MrParams::Shift {
            h: rng.random_range(SHIFT_RANGE.0..=SHIFT_RANGE.1),
        },
        MrId::MR4 => MrParams::Scale {
            gamma: rng.random_range(SCALE_RANGE.0..=SCALE_RANGE.1),
        },
        MrId::MR5 => {
            let m = times.len();
            if m < 2 {
                return Err(MrError::Precondition {
                    mr,
                    reason: "needs at least two samples".to_string(),
                });
            }
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            MrParams::Swap { i, j }
        }
        MrId::MR6 => MrParams::Cancel,
        MrId::MR7 => MrParams::PeriodShift,
    })
}

/// Builds the follow-up input of `mr` from a source input and the engine's
/// output on it.
pub fn mr_followup(
    mr: MrId,
    source: &TapInput,
    source_output: &TidalSolution,
    params: &MrParams,
) -> Result<TapInput, MrError> {
    if params.mr() != mr {
        return Err(MrError::ParamMismatch {
            mr,
            params: *params,
        });
    }
    check_preconditions(mr, source)?;

    let times = source.series.times();
    let elev = source.series.elevations();
    let (new_times, new_elev): (Vec<f64>, Vec<f64>) = match *params {
        MrParams::Append { time } => {
            let predicted = predict(source_output, &[time])?.elevations()[0];
            let mut t = times.to_vec();
            let mut y = elev.to_vec();
            t.push(time);
            y.push(predicted);
            (t, y)
        }
        MrParams::Reflect => (times.to_vec(), elev.iter().map(|y| -y).collect()),
        MrParams::Shift { h } => {
            if !h.is_finite() {
                return Err(MrError::InvalidParams(format!("shift h = {h}")));
            }
            (times.to_vec(), elev.iter().map(|y| y + h).collect())
        }
        MrParams::Scale { gamma } => {
            if !(gamma.is_finite() && gamma > 0.0) {
                return Err(MrError::InvalidParams(format!(
                    "scale gamma must be positive, got {gamma}"
                )));
            }
            (times.to_vec(), elev.iter().map(|y| gamma * y).collect())
        }
        MrParams::Swap { i, j } => {
            let m = times.len();
            if i >= m || j >= m {
                return Err(MrError::InvalidParams(format!(
                    "swap ({i}, {j}) out of range for {m} samples"
                )));
            }
            let mut t = times.to_vec();
            let mut y = elev.to_vec();
            t.swap(i, j);
            y.swap(i, j);
            (t, y)
        }
        MrParams::Cancel => {
            let name = &source.constituents.members()[0].name;
            let comp = source_output
                .component(name)
                .ok_or_else(|| MrError::Precondition {
                    mr,
                    reason: format!("source output has no {name} component"),
                })?;
            let phase = comp.phase_deg.to_radians();
            let y = times
                .iter()
                .zip(elev)
                .map(|(&t, &y)| y - comp.amplitude * (comp.frequency * t + phase).cos())
                .collect();
            (times.to_vec(), y)
        }
        MrParams::PeriodShift => {
            let shift = TAU / source.constituents.members()[0].frequency;
            (times.iter().map(|t| t + shift).collect(), elev.to_vec())
        }
    };

    Ok(TapInput {
        series: TimeSeries::new(new_times, new_elev)?,
        constituents: source.constituents.clone(),
        config: source.config,
    })
}
