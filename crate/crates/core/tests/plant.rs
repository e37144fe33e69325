use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use cardioscope::plant::{apply_tool, step_pump, tip_pose, Plant as GenericPlant};
use cardioscope::{BalloonGeometry, Plant, PumpConfig, PumpState, ToolModel};

const QUANTUM_ML: f64 = 0.4 / 6400.0;

fn inserted() -> ToolModel {
    ToolModel::default().with_inserted(true)
}

#[test]
fn pump_full_speed_for_one_second() {
    let cfg = PumpConfig::default();
    let p = step_pump(&cfg, &PumpState::default(), 450.0, 1.0).unwrap();
    assert_eq!(p.microstep_count, 48_000);
    assert_abs_diff_eq!(p.infused_volume(&cfg), 3.0, epsilon = 1e-12);
}

#[test]
fn pump_holds_volume_at_zero_speed() {
    let cfg = PumpConfig::default();
    let start = PumpState::at_microsteps(16_000);
    let p = step_pump(&cfg, &start, 0.0, 10.0).unwrap();
    assert_eq!(p.microstep_count, 16_000);
    assert_abs_diff_eq!(p.infused_volume(&cfg), 1.0, epsilon = 1e-12);
}

#[test]
fn pump_quantizes_to_whole_microsteps() {
    let cfg = PumpConfig::default();
    assert_abs_diff_eq!(cfg.volume_quantum_ml(), 62.5e-6, epsilon = 1e-18);
    let p = step_pump(&cfg, &PumpState::default(), 100.0, 1.0).unwrap();
    // 100 rpm for 1 s is 6400 * 100 / 60 = 10666.67 microsteps.
    assert_eq!(p.microstep_count, 10_667);
    assert_abs_diff_eq!(p.infused_volume(&cfg), 0.666_687_5, epsilon = 1e-12);
}

#[test]
fn held_speed_integrates_over_fine_steps() {
    let plant = Plant::default();
    let mut s = plant.initial_state();
    for _ in 0..3600 {
        s = plant.step(&s, 100.0, 0.001).unwrap();
    }
    assert_eq!(s.pump.microstep_count, 38_400);
    assert_abs_diff_eq!(s.volume_ml, 2.4, epsilon = 1e-12);
    assert_abs_diff_eq!(s.time_s, 3.6, epsilon = 1e-9);
    let (_, alpha) = plant.curve.response(2.4).unwrap();
    assert_abs_diff_eq!(s.angle_deg, alpha, epsilon = 1e-9);
}

#[test]
fn idle_step_changes_only_time() {
    let plant = Plant::default();
    let s0 = plant.initial_state();
    let s1 = plant.step(&s0, 0.0, 0.033).unwrap();
    assert_eq!(s1.volume_ml, s0.volume_ml);
    assert_eq!(s1.angle_deg, s0.angle_deg);
    assert_abs_diff_eq!(s1.time_s, 0.033);
}

#[test]
fn response_examples() {
    let plant = Plant::default();
    let (d2, a) = plant.curve.response(0.8).unwrap();
    assert_abs_diff_eq!(d2, 8.0, epsilon = 1e-12);
    assert_eq!(a, 0.0);
    let (d2, a) = plant.curve.response(0.0).unwrap();
    assert_eq!(a, 0.0);
    assert!(d2 < 8.0);
    let (d2, a) = plant.curve.response(4.0).unwrap();
    assert!(d2 <= 11.0);
    assert_abs_diff_eq!(a, 100.0, epsilon = 1e-9);
    assert!(plant.curve.response(4.01).is_err());
}

#[test]
fn tool_examples() {
    assert_eq!(apply_tool(100.0, &inserted()), 87.0);
    assert_eq!(apply_tool(0.0, &inserted()), 0.0);
    assert_eq!(apply_tool(50.0, &inserted()), 43.5);
    assert_eq!(apply_tool(50.0, &ToolModel::default()), 50.0);
    let plant = Plant::default();
    let s = plant.state_at_volume(4.0, true).unwrap();
    assert_abs_diff_eq!(s.angle_deg, 87.0, epsilon = 1e-9);
}

#[test]
fn tip_examples() {
    let g = BalloonGeometry::default();
    assert_eq!(g.l2_mm, 15.0);
    let p = tip_pose(0.0, 37.0, &g);
    assert_abs_diff_eq!(p[0], 0.0);
    assert_abs_diff_eq!(p[1], 0.0);
    assert_abs_diff_eq!(p[2], 15.0);
    // Quarter circle of arc length 15: radius 30 / pi.
    let r = 30.0 / std::f64::consts::PI;
    let p = tip_pose(90.0, 0.0, &g);
    assert_abs_diff_eq!(p[0], r, epsilon = 1e-12);
    assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(p[2], r, epsilon = 1e-12);
    assert_abs_diff_eq!(p[0], 9.549, epsilon = 5e-4);
    let q = tip_pose(90.0, 180.0, &g);
    assert_abs_diff_eq!(q[0], -r, epsilon = 1e-12);
    assert_abs_diff_eq!(q[1], 0.0, epsilon = 1e-12);
}

#[test]
fn single_precision_plant_tracks_double() {
    let p32: GenericPlant<f32> = GenericPlant::default();
    let p64 = Plant::default();
    for k in 0..=40 {
        let v = 0.1 * f64::from(k);
        let a = p64.state_at_volume(v, true).unwrap();
        let b = p32.state_at_volume(v as f32, true).unwrap();
        assert!((f64::from(b.angle_deg) - a.angle_deg).abs() < 1e-3, "{v}");
        assert!((f64::from(b.face_diameter_mm) - a.face_diameter_mm).abs() < 1e-4, "{v}");
    }
}

proptest! {
    #[test]
    fn volume_is_a_whole_number_of_quanta(rpms in prop::collection::vec(-450.0..450.0f64, 1..200), dt in 1e-4..0.05f64) {
        let plant = Plant::default();
        let mut s = plant.initial_state();
        for rpm in rpms {
            s = plant.step(&s, rpm, dt).unwrap();
            let n = s.pump.microstep_count;
            prop_assert!((0..=64_000).contains(&n));
            prop_assert_eq!(s.volume_ml, n as f64 * plant.pump.volume_quantum_ml());
            prop_assert!((s.volume_ml - n as f64 * QUANTUM_ML).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_speed_tracks_exact_displacement(rpm in 0.0..450.0f64, n in 1usize..3000, dt in 1e-4..0.01f64) {
        let cfg = PumpConfig::default();
        let mut p = PumpState::default();
        for _ in 0..n {
            p = step_pump(&cfg, &p, rpm, dt).unwrap();
        }
        let exact = rpm / 60.0 * dt * n as f64 * 6400.0;
        prop_assume!(exact < 64_000.0);
        prop_assert!((p.microstep_count as f64 - exact).abs() <= 0.5 + 1e-6);
    }

    #[test]
    fn decoupling_holds_everywhere(v in 0.0..=4.0f64) {
        let plant = Plant::default();
        let s = plant.state_at_volume(v, false).unwrap();
        prop_assert!(s.angle_deg <= 0.0 || s.face_diameter_mm >= 8.0);
        prop_assert!(s.face_diameter_mm <= 11.0);
        prop_assert!((0.0..=100.0).contains(&s.angle_deg));
    }

    #[test]
    fn response_is_monotone(a in 0.0..=4.0f64, b in 0.0..=4.0f64) {
        let plant = Plant::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (d_lo, a_lo) = plant.curve.response(lo).unwrap();
        let (d_hi, a_hi) = plant.curve.response(hi).unwrap();
        prop_assert!(a_lo <= a_hi);
        prop_assert!(d_lo <= d_hi);
    }

    #[test]
    fn tool_offset_is_bounded(free in 0.0..=100.0f64) {
        let bent = apply_tool(free, &inserted());
        prop_assert!(bent <= free);
        prop_assert!(free - bent <= 13.0);
        prop_assert!(bent >= 0.0);
        prop_assert!((free - bent - 13.0 * free / 100.0).abs() < 1e-12);
    }

    #[test]
    fn tool_round_trip_restores_angle(v in 0.8..=4.0f64) {
        let plant = Plant::default();
        let s = plant.state_at_volume(v, false).unwrap();
        let back = plant.set_tool(&plant.set_tool(&s, true), false);
        prop_assert_eq!(back.angle_deg, s.angle_deg);
    }

    #[test]
    fn arc_tip_stays_within_arc_length(alpha in 0.0..=180.0f64, roll in -180.0..180.0f64) {
        let g = BalloonGeometry::default();
        let p = tip_pose(alpha, roll, &g);
        let chord = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        prop_assert!(chord <= g.l2_mm + 1e-9);
        // Chord of a circular arc: 2 (L / a) sin(a / 2).
        let a = alpha.to_radians();
        let expected = if a < 1e-9 { g.l2_mm } else { 2.0 * g.l2_mm / a * (a / 2.0).sin() };
        prop_assert!((chord - expected).abs() < 1e-9);
    }
}
