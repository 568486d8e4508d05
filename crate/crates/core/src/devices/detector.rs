use serde::Serialize;

use crate::characterization::EdCharacterization;
use crate::error::{Error, Result};

/// Envelope detector: static curve plus first-order dynamics.
///
/// `tau = rise_time / ln 10`, so a step from rest reaches 90 % of its
/// amplitude exactly at `rise_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeDetector {
    pub characterization: EdCharacterization,
    pub tau_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdReading {
    pub v: f64,
    /// Input below the detector's sensitivity; `v` is the floor value.
    pub below_floor: bool,
}

impl EnvelopeDetector {
    pub fn new(characterization: EdCharacterization) -> Self {
        let tau_us = characterization.rise_time_us / std::f64::consts::LN_10;
        Self { characterization, tau_us }
    }

    pub fn rise_time_us(&self) -> f64 {
        self.characterization.rise_time_us
    }

    pub fn floor_v(&self, f: f64) -> Result<f64> {
        self.characterization.vout(self.characterization.input_range.0, f)
    }

    pub fn static_output(&self, pin_dbm: f64, f: f64) -> Result<EdReading> {
        let (lo, hi) = self.characterization.input_range;
        if pin_dbm > hi {
            return Err(Error::Saturation(format!("{pin_dbm:.2} dBm above the {hi} dBm detector limit")));
        }
        if pin_dbm < lo {
            return Ok(EdReading { v: self.floor_v(f)?, below_floor: true });
        }
        Ok(EdReading { v: self.characterization.vout(pin_dbm, f)?, below_floor: false })
    }

    /// Output `t_since_step` after a step from no input to `pin_dbm`.
    pub fn ed_output(&self, pin_dbm: f64, f: f64, t_since_step: f64) -> Result<f64> {
        let v0 = self.floor_v(f)?;
        let v1 = self.static_output(pin_dbm, f)?.v;
        Ok(v0 + (v1 - v0) * first_order_step(t_since_step, self.tau_us))
    }

    /// Input power implied by an output voltage.
    pub fn inverse(&self, v: f64, f: f64) -> Result<f64> {
        self.characterization.inverse(v, f)
    }
}

/// Unit step response of `1 / (1 + s tau)`.
pub fn first_order_step(t: f64, tau: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if tau <= 0.0 {
        1.0
    } else {
        -(-t / tau).exp_m1()
    }
}

/// Unit step response of two cascaded first-order sections.
pub fn cascade_step(t: f64, tau_a: f64, tau_b: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if tau_a <= 0.0 {
        return first_order_step(t, tau_b);
    }
    if tau_b <= 0.0 {
        return first_order_step(t, tau_a);
    }
    if (tau_a - tau_b).abs() < 1e-12 * tau_a.max(tau_b) {
        let x = t / tau_a;
        return 1.0 - (1.0 + x) * (-x).exp();
    }
    1.0 - (tau_a * (-t / tau_a).exp() - tau_b * (-t / tau_b).exp()) / (tau_a - tau_b)
}
