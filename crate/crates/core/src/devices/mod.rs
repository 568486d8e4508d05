//! Behavioral device models and the static receive chain built from them.
//!
//! Feedback-only board: `pin -> LNA -> coupler -> out`, ED2 on the coupled
//! port. The FF+FB board adds an input coupler whose coupled port feeds ED1.

mod adc;
mod bias;
mod detector;
mod gate;
mod lna;

pub use adc::{display_counts, AdcModel, AdcSample};
pub use bias::{BiasNetwork, SwitchState, VgTrajectory};
pub use detector::{cascade_step, first_order_step, EdReading, EnvelopeDetector};
pub use gate::{GateCurrentModel, GateOperatingPoint};
pub use lna::{LnaModel, TwoTone, PIN_MAX_DBM, VG_CLAMP_SLACK};

use serde::{Deserialize, Serialize};

use crate::characterization::{Bundle, CouplerCharacterization};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Board {
    FeedbackOnly,
    FfFb,
}

impl std::str::FromStr for Board {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', '+'], "").as_str() {
            "feedbackonly" | "fb" => Ok(Board::FeedbackOnly),
            "fffb" => Ok(Board::FfFb),
            _ => Err(crate::Error::Parse(format!("unknown board '{s}'"))),
        }
    }
}

/// Device parameters a scenario may override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceConfig {
    pub vd: f64,
    pub compression_knee_sharpness: f64,
    pub oip3_dbm: f64,
    pub t_lna_us: f64,
    pub adc_reference_v: f64,
    pub bias: BiasNetwork,
    pub gate: GateCurrentModel,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            vd: 10.0,
            compression_knee_sharpness: 1.0,
            oip3_dbm: 30.0,
            t_lna_us: 1.0,
            adc_reference_v: 3.0,
            bias: BiasNetwork::default(),
            gate: GateCurrentModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverChain {
    pub board: Board,
    pub lna: LnaModel,
    pub ed1: EnvelopeDetector,
    pub ed2: EnvelopeDetector,
    pub coupler: CouplerCharacterization,
    pub bias: BiasNetwork,
    pub gate: GateCurrentModel,
    pub adc: AdcModel,
}

impl ReceiverChain {
    pub fn new(bundle: &Bundle, board: Board) -> Self {
        Self::with_config(bundle, board, &DeviceConfig::default())
    }

    pub fn with_config(bundle: &Bundle, board: Board, cfg: &DeviceConfig) -> Self {
        let mut lna = LnaModel::new(bundle.lna.clone());
        lna.vd = cfg.vd;
        lna.compression_knee_sharpness = cfg.compression_knee_sharpness;
        lna.oip3_dbm = cfg.oip3_dbm;
        lna.response_delay_us = cfg.t_lna_us;
        Self {
            board,
            lna,
            ed1: EnvelopeDetector::new(bundle.ed1.clone()),
            ed2: EnvelopeDetector::new(bundle.ed2.clone()),
            coupler: bundle.coupler.clone(),
            bias: cfg.bias.clone(),
            gate: cfg.gate.clone(),
            adc: AdcModel { reference_v: cfg.adc_reference_v, ..AdcModel::default() },
        }
    }

    /// Power reaching the LNA input.
    pub fn lna_input_dbm(&self, pin: f64, f: f64) -> Result<f64> {
        Ok(match self.board {
            Board::FeedbackOnly => pin,
            Board::FfFb => pin - self.coupler.insertion_loss_db(f)?,
        })
    }

    pub fn ed1_input_dbm(&self, pin: f64, f: f64) -> Result<f64> {
        Ok(pin - self.coupler.coupling_db(f)?)
    }

    /// Gate operating point once the bias network has settled on the tap
    /// nearest `vg_cmd`.
    pub fn settled_gate(&self, vg_cmd: f64, pin: f64, f: f64) -> Result<GateOperatingPoint> {
        let tap = self.bias.quantize(vg_cmd);
        self.gate.gate_current(self.lna_input_dbm(pin, f)?, tap, self.bias.r_effective_ohm())
    }

    pub fn lna_output_dbm(&self, pin: f64, vg_eff: f64, f: f64) -> Result<f64> {
        self.lna.lna_output(self.lna_input_dbm(pin, f)?, vg_eff, f)
    }

    /// Board output after the output coupler's through path.
    pub fn board_output_dbm(&self, pin: f64, vg_eff: f64, f: f64) -> Result<f64> {
        Ok(self.lna_output_dbm(pin, vg_eff, f)? - self.coupler.insertion_loss_db(f)?)
    }

    pub fn ed2_input_dbm(&self, pin: f64, vg_eff: f64, f: f64) -> Result<f64> {
        Ok(self.lna_output_dbm(pin, vg_eff, f)? - self.coupler.coupling_db(f)?)
    }

    pub fn ed2_static(&self, pin: f64, vg_eff: f64, f: f64) -> Result<EdReading> {
        self.ed2.static_output(self.ed2_input_dbm(pin, vg_eff, f)?, f)
    }

    pub fn ed1_static(&self, pin: f64, f: f64) -> Result<EdReading> {
        self.ed1.static_output(self.ed1_input_dbm(pin, f)?, f)
    }

    /// Settled ED2 code for a constant input at a commanded bias.
    pub fn ed2_code_settled(&self, pin: f64, vg_cmd: f64, f: f64) -> Result<u16> {
        let vg = self.settled_gate(vg_cmd, pin, f)?.vg_effective;
        Ok(self.adc.adc_sample(self.ed2_static(pin, vg, f)?.v, 0.0, false).code)
    }

    pub fn ed1_code(&self, pin: f64, f: f64) -> Result<u16> {
        Ok(self.adc.adc_sample(self.ed1_static(pin, f)?.v, 0.0, false).code)
    }

    /// T_VG of the bias network.
    pub fn t_vg_us(&self) -> f64 {
        self.bias.settle_time_us()
    }

    /// How long ED2 readings stay contaminated after a bias command.
    pub fn command_transient_us(&self) -> f64 {
        self.t_vg_us() + self.lna.response_delay_us + self.ed2.rise_time_us()
    }
}
