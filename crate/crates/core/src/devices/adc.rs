use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdcModel {
    pub resolution_bits: u32,
    pub reference_v: f64,
    pub sample_period_us: f64,
}

impl Default for AdcModel {
    fn default() -> Self {
        Self { resolution_bits: 16, reference_v: 3.0, sample_period_us: 42.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdcSample {
    pub code: u16,
    /// Taken while an upstream transient was still active.
    pub contaminated: bool,
    /// Input was outside [0, reference].
    pub clipped: bool,
}

impl AdcModel {
    pub fn full_scale(&self) -> u32 {
        (1u32 << self.resolution_bits) - 1
    }

    pub fn adc_sample(&self, v: f64, _t_us: f64, transient_active: bool) -> AdcSample {
        let fs = f64::from(self.full_scale());
        let x = (v / self.reference_v * fs).round();
        let clipped = !(0.0..=fs).contains(&x);
        AdcSample { code: x.clamp(0.0, fs) as u16, contaminated: transient_active, clipped }
    }

    pub fn code_to_volts(&self, code: u16) -> f64 {
        f64::from(code) * self.reference_v / f64::from(self.full_scale())
    }

    /// Code step per volt.
    pub fn codes_per_volt(&self) -> f64 {
        f64::from(self.full_scale()) / self.reference_v
    }
}

/// Reading in the firmware's 0.1 mV-per-count display convention.
pub fn display_counts(v: f64) -> i64 {
    (v * 1e4).round() as i64
}
