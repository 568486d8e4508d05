use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchState {
    /// Low-resistance path in parallel with R_S: fast settling.
    Closed,
    /// Only R_S in series: slow settling, gate-current limited.
    Open,
}

/// DPP + buffer + resistor/switch pair driving the LNA gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasNetwork {
    pub dpp_taps: u16,
    pub dpp_v_min: f64,
    pub dpp_v_max: f64,
    /// 1 % settling of the DPP output itself.
    pub dpp_settle_us: f64,
    pub switch_state: SwitchState,
    pub switch_t_on_ns: f64,
    pub switch_t_off_ns: f64,
    pub r_series_ohm: f64,
    pub r_switch_ohm: f64,
    /// Gate decoupling capacitance.
    pub c_gate_nf: f64,
}

impl Default for BiasNetwork {
    fn default() -> Self {
        Self {
            dpp_taps: 256,
            dpp_v_min: -5.0,
            dpp_v_max: 0.0,
            dpp_settle_us: 5.0,
            switch_state: SwitchState::Closed,
            switch_t_on_ns: 80.0,
            switch_t_off_ns: 45.0,
            r_series_ohm: 5030.0,
            r_switch_ohm: 2.5,
            c_gate_nf: 10.0,
        }
    }
}

/// First-order move of the gate voltage after one command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VgTrajectory {
    pub from: f64,
    /// Tap voltage actually produced.
    pub to: f64,
    pub tau_us: f64,
    /// Time to come within 1 % of the step; 0 when nothing moves.
    pub settle_us: f64,
    /// The requested target lay outside the DPP range.
    pub clamped: bool,
}

impl VgTrajectory {
    pub fn at(&self, t_us: f64) -> f64 {
        if t_us <= 0.0 || self.tau_us <= 0.0 {
            return if t_us <= 0.0 { self.from } else { self.to };
        }
        self.to + (self.from - self.to) * (-t_us / self.tau_us).exp()
    }
}

impl BiasNetwork {
    fn lsb(&self) -> f64 {
        (self.dpp_v_max - self.dpp_v_min) / f64::from(self.dpp_taps - 1)
    }

    pub fn tap_for(&self, v: f64) -> u16 {
        let t = ((v - self.dpp_v_min) / self.lsb()).round();
        t.clamp(0.0, f64::from(self.dpp_taps - 1)) as u16
    }

    pub fn tap_voltage(&self, tap: u16) -> f64 {
        self.dpp_v_min + f64::from(tap.min(self.dpp_taps - 1)) * self.lsb()
    }

    pub fn quantize(&self, v: f64) -> f64 {
        self.tap_voltage(self.tap_for(v))
    }

    pub fn half_tap_v(&self) -> f64 {
        self.lsb() / 2.0
    }

    pub fn r_effective_ohm(&self) -> f64 {
        match self.switch_state {
            SwitchState::Closed => self.r_series_ohm * self.r_switch_ohm / (self.r_series_ohm + self.r_switch_ohm),
            SwitchState::Open => self.r_series_ohm,
        }
    }

    /// DPP and RC sections lumped into one time constant.
    pub fn tau_us(&self) -> f64 {
        let tau_dpp = self.dpp_settle_us / 100f64.ln();
        tau_dpp + self.r_effective_ohm() * self.c_gate_nf * 1e-3
    }

    /// T_VG: 1 % settling after a command.
    pub fn settle_time_us(&self) -> f64 {
        100f64.ln() * self.tau_us()
    }

    /// Delay before a switch toggle takes effect.
    pub fn switch_delay_us(&self, to: SwitchState) -> f64 {
        if to == self.switch_state {
            0.0
        } else {
            match to {
                SwitchState::Closed => self.switch_t_on_ns * 1e-3,
                SwitchState::Open => self.switch_t_off_ns * 1e-3,
            }
        }
    }

    pub fn set_vg(&self, current: f64, target: f64) -> VgTrajectory {
        let clamped = target < self.dpp_v_min || target > self.dpp_v_max;
        let to = self.quantize(target);
        let settle_us = if to == current { 0.0 } else { self.settle_time_us() };
        VgTrajectory { from: current, to, tau_us: self.tau_us(), settle_us, clamped }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_step_settles_instantly() {
        let b = BiasNetwork::default();
        let v = b.quantize(-2.5);
        assert_eq!(b.set_vg(v, -2.5).settle_us, 0.0);
    }

    #[test]
    fn closed_switch_step_in_four_to_ten_us() {
        let b = BiasNetwork::default();
        let tr = b.set_vg(b.quantize(-2.5), -2.4);
        assert!(tr.settle_us >= 4.0 && tr.settle_us <= 10.0, "{}", tr.settle_us);
        let resid = (tr.at(tr.settle_us) - tr.to).abs() / (tr.to - tr.from).abs();
        assert!((resid - 0.01).abs() < 1e-9);
    }

    #[test]
    fn quantization_error_bounded() {
        let b = BiasNetwork::default();
        for i in 0..=500 {
            let v = -5.0 + i as f64 * 0.01;
            assert!((b.quantize(v) - v).abs() <= b.half_tap_v() + 1e-12);
        }
    }

    #[test]
    fn out_of_range_target_is_clamped_and_flagged() {
        let b = BiasNetwork::default();
        let tr = b.set_vg(-2.0, 1.0);
        assert!(tr.clamped);
        assert_eq!(tr.to, 0.0);
    }

    #[test]
    fn switch_delays() {
        let b = BiasNetwork::default();
        assert_eq!(b.switch_delay_us(SwitchState::Closed), 0.0);
        assert!((b.switch_delay_us(SwitchState::Open) - 0.045).abs() < 1e-12);
    }
}
