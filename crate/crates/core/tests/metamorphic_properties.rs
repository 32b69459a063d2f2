//! Relations applied to the reference engine on noise-free and noisy inputs.

use proptest::prelude::*;
use tapmt_core::harmonic::constituent_frequency;
use tapmt_core::metamorphic::{
    assess, circular_distance, draw_case, mr_expected_relation, mr_followup, run_campaign,
    source_config_for, CampaignConfig, MrId, MrOptions, MrParams, Tolerance, VerdictStatus,
};
use tapmt_core::signal::Seed;
use tapmt_core::{ConstituentSet, ReferenceEngine, TapEngine, TapInput, TimeSeries};

fn m2_input(a0: f64, a1: f64, amp: f64, phase: f64, n: usize, trend: bool) -> TapInput {
    let m2 = constituent_frequency("M2").unwrap().frequency;
    let times: Vec<f64> = (0..n).map(|j| j as f64).collect();
    let elev = times
        .iter()
        .map(|&t| a0 + a1 * t + amp * (m2 * t + phase.to_radians()).cos())
        .collect();
    TapInput::new(
        TimeSeries::new(times, elev).unwrap(),
        ConstituentSet::from_names(&["M2"]).unwrap(),
        tapmt_core::FitConfig::with_trend(trend),
    )
}

/// Largest delta between follow-up output and expectation.
fn worst_delta(mr: MrId, input: &TapInput, params: MrParams) -> f64 {
    let source = ReferenceEngine.analyze(input).unwrap();
    let follow = mr_followup(mr, input, &source, &params).unwrap();
    let out = ReferenceEngine.analyze(&follow).unwrap();
    let e = mr_expected_relation(mr, &source, &params, &MrOptions::default()).unwrap();
    let v = assess(&e, &out, &Tolerance::uniform(1e-9));
    v.details.iter().map(|d| d.delta).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regression_relations_are_tight_on_noise_free_input(
        a0 in -1.0f64..1.0, a1 in -0.001f64..0.001, amp in 0.1f64..3.0, phase in 0.0f64..360.0,
        n in 168usize..=720, h in -5.0f64..5.0, gamma in 0.1f64..10.0,
    ) {
        let input = m2_input(a0, a1, amp, phase, n, true);
        prop_assert!(worst_delta(MrId::MR2, &input, MrParams::Reflect) < 1e-9);
        let shift = MrParams::Shift { h };
        prop_assert!(worst_delta(MrId::MR3, &input, shift) < 1e-9);
        let scale = MrParams::Scale { gamma };
        prop_assert!(worst_delta(MrId::MR4, &input, scale) < 1e-9);
    }

    #[test]
    fn swapping_samples_is_exact(
        a0 in -1.0f64..1.0, amp in 0.1f64..3.0, phase in 0.0f64..360.0,
        i in 0usize..168, j in 0usize..168,
    ) {
        let input = m2_input(a0, 0.0005, amp, phase, 200, true);
        let swap = MrParams::Swap { i, j };
        prop_assert!(worst_delta(MrId::MR5, &input, swap) < 1e-10);
    }

    #[test]
    fn period_shift_and_append_hold(
        a0 in -1.0f64..1.0, a1 in -0.001f64..0.001, amp in 0.1f64..3.0, phase in 0.0f64..360.0,
        n in 168usize..=720,
    ) {
        let input = m2_input(a0, a1, amp, phase, n, true);
        prop_assert!(worst_delta(MrId::MR7, &input, MrParams::PeriodShift) < 1e-8);
        let append = MrParams::Append { time: n as f64 };
        prop_assert!(worst_delta(MrId::MR1, &input, append) < 1e-8);
    }

    #[test]
    fn cancellation_leaves_nothing(
        a0 in -1.0f64..1.0, amp in 0.1f64..3.0, phase in 0.0f64..360.0, n in 168usize..=720,
    ) {
        let input = m2_input(a0, 0.0, amp, phase, n, false);
        prop_assert!(worst_delta(MrId::MR6, &input, MrParams::Cancel) < 1e-9);
    }
}

#[test]
fn source_configs() {
    for mr in MrId::ALL {
        assert_eq!(source_config_for(mr).include_trend, mr != MrId::MR6);
    }
}

#[test]
fn reflect_strict_phase_flip_holds_for_the_reference() {
    let input = m2_input(0.2, 0.0003, 1.1, 33.0, 300, true);
    let source = ReferenceEngine.analyze(&input).unwrap();
    let follow = mr_followup(MrId::MR2, &input, &source, &MrParams::Reflect).unwrap();
    let out = ReferenceEngine.analyze(&follow).unwrap();
    let strict = MrOptions {
        strict_mr2: true,
        ..MrOptions::default()
    };
    let e = mr_expected_relation(MrId::MR2, &source, &MrParams::Reflect, &strict).unwrap();
    assert_eq!(
        assess(&e, &out, &Tolerance::default()).status,
        VerdictStatus::Satisfied
    );
    assert!(circular_distance(out.components[0].phase_deg, 213.0) < 1e-6);
}

#[test]
fn noisy_campaign_is_clean_and_repeatable() {
    let config = CampaignConfig {
        n_cases: 30,
        master_seed: Seed(77),
        ..CampaignConfig::default()
    };
    let a = run_campaign(&ReferenceEngine, &config).unwrap();
    assert_eq!(a.total_violations(), 0);
    let b = run_campaign(
        &ReferenceEngine,
        &CampaignConfig {
            workers: 4,
            ..config.clone()
        },
    )
    .unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn adding_cases_extends_the_report() {
    let short = run_campaign(
        &ReferenceEngine,
        &CampaignConfig {
            n_cases: 5,
            ..CampaignConfig::default()
        },
    )
    .unwrap();
    let long = run_campaign(
        &ReferenceEngine,
        &CampaignConfig {
            n_cases: 12,
            ..CampaignConfig::default()
        },
    )
    .unwrap();
    assert_eq!(short.cases[..], long.cases[..5]);
}

#[test]
fn campaign_cases_follow_documented_ranges() {
    for i in 0..50 {
        let case = draw_case(Seed(1234), i);
        assert_eq!(case.series.len(), case.spec.count);
        assert!((168..=720).contains(&case.spec.count));
        assert!(case.spec.noise_std <= 0.05);
    }
}
