//! Canonical scenarios behind the reproduced figures. The CLI, the bundled
//! scenario files and the acceptance suite all build from these.

use super::scenario::{Event, Scenario, TwoToneSpec};
use crate::control::Method;
use crate::devices::Board;

/// Interference alternates with a quiet level, climbing each time.
pub const APPEARANCE_LEVELS_DBM: [f64; 12] = [-9.5, -22.5, -6.5, -22.5, -4.5, -22.5, -2.5, -22.5, -1.0, -22.5, 0.0, -22.5];
pub const QUIET_DBM: f64 = -22.5;
/// Loop periods before the first edge and between edges.
pub const LEAD_PERIODS: f64 = 6.0;
pub const DWELL_PERIODS: f64 = 12.0;

fn stepped(name: &str, method: Method, levels: &[f64]) -> Scenario {
    let mut sc = Scenario::new(name, Board::FeedbackOnly, 3.0, 1.0, Vec::new());
    sc.controller.method = method;
    sc.initial_dbm = QUIET_DBM;
    let p = sc.timing().period_us();
    sc.events = levels
        .iter()
        .enumerate()
        .map(|(i, &dbm)| Event { t_us: p * (LEAD_PERIODS + DWELL_PERIODS * i as f64), dbm })
        .collect();
    sc.duration_us = p * (LEAD_PERIODS + DWELL_PERIODS * levels.len() as f64);
    sc
}

/// Interference switched on and off at rising levels, 3 GHz, feedback-only.
pub fn appearance_sequence(method: Method) -> Scenario {
    stepped(&format!("appearance-{method}"), method, &APPEARANCE_LEVELS_DBM)
}

/// 1 dB staircase from -12.5 up to -0.5 dBm and back.
pub fn staircase_levels() -> Vec<f64> {
    let up: Vec<f64> = (0..=12).map(|i| -12.5 + f64::from(i)).collect();
    up.iter().chain(up.iter().rev().skip(1)).copied().collect()
}

pub fn staircase(method: Method) -> Scenario {
    stepped(&format!("staircase-{method}"), method, &staircase_levels())
}

/// FF+FB board: appearance, increase and disappearance from a floor-level
/// start.
pub fn fffb_sequence() -> Scenario {
    let mut sc = Scenario::new(
        "ff+fb",
        Board::FfFb,
        3.0,
        4860.0,
        vec![Event { t_us: 1620.0, dbm: -5.5 }, Event { t_us: 2916.0, dbm: -2.5 }, Event { t_us: 3726.0, dbm: -30.0 }],
    );
    sc.controller.method = Method::FfFb;
    sc.initial_dbm = -30.0;
    sc
}

/// Two-tone levels from well below the gate to the top of the range, with
/// the LUT controller against fixed nominal bias.
pub const TWO_TONE_LEVELS_DBM: [f64; 9] = [-20.0, -15.0, -11.0, -9.0, -7.0, -5.0, -3.0, -1.0, 0.0];

pub fn two_tone_sweep() -> Scenario {
    let mut sc = stepped("two-tone", Method::Lut, &TWO_TONE_LEVELS_DBM);
    sc.two_tone = Some(TwoToneSpec { tone_spacing_mhz: 1.0 });
    sc
}

/// Sweep powers for the settled-bias comparison.
pub fn settled_sweep_powers() -> Vec<f64> {
    (0..=12).map(|i| -12.0 + f64::from(i)).collect()
}

/// Every bundled scenario with its file stem.
pub fn bundled() -> Vec<(&'static str, Scenario)> {
    vec![
        ("fig17a", appearance_sequence(Method::Incremental)),
        ("fig17b", appearance_sequence(Method::Lut)),
        ("fig17c", appearance_sequence(Method::OneShotIncremental)),
        ("fig17d", staircase(Method::Incremental)),
        ("fig17e", staircase(Method::Lut)),
        ("fig17f", staircase(Method::OneShotIncremental)),
        ("fig20", fffb_sequence()),
        ("fig12", two_tone_sweep()),
    ]
}
