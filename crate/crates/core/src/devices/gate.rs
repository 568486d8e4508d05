use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const Z0_OHM: f64 = 50.0;
const MAX_ITER: usize = 200;
/// Residual target of the self-consistent solve, volts.
const RESIDUAL_V: f64 = 1e-9;

/// Gate current of the GaN device under RF drive.
///
/// `I_G = I_leak + I_s * exp((A_rf + V_G) / (n V_T))`, where `A_rf` is the
/// RF voltage amplitude across 50 ohm. The saturation current is set so that
/// `I_G` crosses zero at `turn_on_pin_dbm` for `V_G = turn_on_vg_v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateCurrentModel {
    pub leakage_low_power_ua: f64,
    pub shockley_ideality: f64,
    pub thermal_voltage_v: f64,
    pub turn_on_pin_dbm: f64,
    pub turn_on_vg_v: f64,
    pub r_series_ohm: f64,
    /// Lowest gate voltage the device tolerates.
    pub vg_floor_v: f64,
}

impl Default for GateCurrentModel {
    fn default() -> Self {
        Self {
            leakage_low_power_ua: -10.0,
            shockley_ideality: 20.0,
            thermal_voltage_v: 0.02585,
            turn_on_pin_dbm: 20.0,
            turn_on_vg_v: -2.5,
            r_series_ohm: 5030.0,
            vg_floor_v: -20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateOperatingPoint {
    pub ig_ma: f64,
    pub vg_effective: f64,
}

fn rf_amplitude_v(pin_dbm: f64) -> f64 {
    let p_w = 10f64.powf((pin_dbm - 30.0) / 10.0);
    (2.0 * Z0_OHM * p_w).sqrt()
}

impl GateCurrentModel {
    fn n_vt(&self) -> f64 {
        self.shockley_ideality * self.thermal_voltage_v
    }

    pub fn shockley_saturation_current_a(&self) -> f64 {
        let arg = (rf_amplitude_v(self.turn_on_pin_dbm) + self.turn_on_vg_v) / self.n_vt();
        -self.leakage_low_power_ua * 1e-6 * (-arg).exp()
    }

    /// Gate current in mA at a given gate voltage (no series drop).
    pub fn ig_ma(&self, pin_dbm: f64, vg: f64) -> f64 {
        let i_s = self.shockley_saturation_current_a();
        let arg = (rf_amplitude_v(pin_dbm) + vg) / self.n_vt();
        (self.leakage_low_power_ua * 1e-6 + i_s * arg.exp()) * 1e3
    }

    fn dig_dv_ma(&self, pin_dbm: f64, vg: f64) -> f64 {
        let i_s = self.shockley_saturation_current_a();
        let arg = (rf_amplitude_v(pin_dbm) + vg) / self.n_vt();
        i_s * arg.exp() / self.n_vt() * 1e3
    }

    /// Solve `vg = vc - I_G(vg) * rs` for the gate voltage seen by the device.
    ///
    /// `I_G` is increasing in `vg`, so the residual is strictly increasing and
    /// the root is unique; a safeguarded Newton iteration finds it.
    pub fn gate_current(&self, pin_dbm: f64, vc: f64, rs: f64) -> Result<GateOperatingPoint> {
        if !(rs >= 0.0) {
            return Err(Error::NonConvergence(format!("series resistance {rs} ohm")));
        }
        if rs == 0.0 {
            return Ok(GateOperatingPoint { ig_ma: self.ig_ma(pin_dbm, vc), vg_effective: vc });
        }
        let g = |v: f64| v - vc + self.ig_ma(pin_dbm, v) * 1e-3 * rs;
        let mut lo = self.vg_floor_v;
        let mut hi = vc + self.leakage_low_power_ua.abs() * 1e-6 * rs;
        if hi < lo {
            return Err(Error::GateOverstress(format!("V_G would fall below {} V", self.vg_floor_v)));
        }
        if g(lo) > 0.0 {
            return Err(Error::GateOverstress(format!(
                "input {pin_dbm} dBm through {rs} ohm pulls V_G below {} V",
                self.vg_floor_v
            )));
        }
        let mut v = vc.clamp(lo, hi);
        for _ in 0..MAX_ITER {
            let r = g(v);
            if r.abs() < RESIDUAL_V {
                return Ok(GateOperatingPoint { ig_ma: self.ig_ma(pin_dbm, v), vg_effective: v });
            }
            if r > 0.0 {
                hi = v;
            } else {
                lo = v;
            }
            let slope = 1.0 + self.dig_dv_ma(pin_dbm, v) * 1e-3 * rs;
            let newton = v - r / slope;
            v = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        Err(Error::NonConvergence(format!("gate solve at {pin_dbm} dBm, rs {rs} ohm")))
    }
}
