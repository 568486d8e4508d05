use serde::Serialize;

use crate::characterization::LnaCharacterization;
use crate::error::{Error, Result};

/// Absolute input rating of the amplifier.
pub const PIN_MAX_DBM: f64 = 30.0;
/// Bias queries this close outside the characterized V_G span are clamped
/// onto it: the DPP tap grid cannot land exactly on the lattice end points.
pub const VG_CLAMP_SLACK: f64 = 0.01;
/// Two equal tones carry 3.01 dB more total power than one.
const TWO_TONE_DB: f64 = 3.010_299_956_639_812;

#[derive(Debug, Clone, PartialEq)]
pub struct LnaModel {
    pub characterization: LnaCharacterization,
    pub vd: f64,
    /// Rapp smoothness `p`. The P1dB anchor is exact for any positive value.
    pub compression_knee_sharpness: f64,
    /// OIP3 at the nominal bias point; other biases keep the same
    /// OIP3 - P1dB,OUT offset.
    pub oip3_dbm: f64,
    pub nominal_vg: f64,
    pub nominal_freq_ghz: f64,
    /// Bias-to-output propagation delay T_LNA.
    pub response_delay_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoTone {
    /// Per-tone output of the wanted signal, including compression.
    pub fundamental_dbm: f64,
    pub im3_dbm: f64,
    /// Wanted tone minus IM3 product.
    pub im3_compression_dbc: f64,
}

impl LnaModel {
    pub fn new(characterization: LnaCharacterization) -> Self {
        let vd = characterization.vd_nominal;
        Self {
            characterization,
            vd,
            compression_knee_sharpness: 1.0,
            oip3_dbm: 30.0,
            nominal_vg: -2.4,
            nominal_freq_ghz: 3.0,
            response_delay_us: 1.0,
        }
    }

    fn vg_q(&self, vg: f64) -> Result<f64> {
        let (lo, hi) = self.characterization.vg_range;
        if !(vg >= lo - VG_CLAMP_SLACK && vg <= hi + VG_CLAMP_SLACK) {
            return Err(Error::OutOfRange(format!("V_G {vg} V outside [{lo}, {hi}]")));
        }
        Ok(vg.clamp(lo, hi))
    }

    pub fn small_signal_gain(&self, vg: f64, f: f64) -> Result<f64> {
        self.characterization.gain(f, self.vg_q(vg)?, self.vd)
    }

    pub fn p1db_in(&self, vg: f64, f: f64) -> Result<f64> {
        self.characterization.p1db_in(f, self.vg_q(vg)?)
    }

    pub fn nf(&self, vg: f64, f: f64) -> Result<f64> {
        self.characterization.nf(f, self.vg_q(vg)?)
    }

    pub fn drain_current_ma(&self, vg: f64) -> Result<f64> {
        self.characterization.id_ma(self.vg_q(vg)?, self.vd)
    }

    /// DC power V_D * I_D in watts.
    pub fn power_w(&self, vg: f64) -> Result<f64> {
        Ok(self.vd * self.drain_current_ma(vg)? * 1e-3)
    }

    /// Gain compression in dB for an input `d = pin - P1dB,IN` dB from the
    /// anchor. `compression(0) == 1` for every `p`.
    pub fn compression_at(&self, d: f64) -> f64 {
        let p = self.compression_knee_sharpness;
        let k = 10f64.powf(p / 10.0) - 1.0;
        (10.0 / p) * (k * 10f64.powf(p * d / 10.0)).ln_1p() / std::f64::consts::LN_10
    }

    pub fn compression_db(&self, pin: f64, vg: f64, f: f64) -> Result<f64> {
        Ok(self.compression_at(pin - self.p1db_in(vg, f)?))
    }

    /// Output power for a single-carrier input.
    pub fn lna_output(&self, pin: f64, vg: f64, f: f64) -> Result<f64> {
        if pin > PIN_MAX_DBM {
            return Err(Error::OutOfRange(format!("input {pin} dBm above the {PIN_MAX_DBM} dBm rating")));
        }
        let g = self.small_signal_gain(vg, f)?;
        Ok(pin + g - self.compression_db(pin, vg, f)?)
    }

    pub fn p1db_out(&self, vg: f64, f: f64) -> Result<f64> {
        Ok(self.p1db_in(vg, f)? + self.small_signal_gain(vg, f)? - 1.0)
    }

    fn oip3_offset(&self) -> Result<f64> {
        Ok(self.oip3_dbm - self.p1db_out(self.nominal_vg, self.nominal_freq_ghz)?)
    }

    pub fn oip3(&self, vg: f64, f: f64) -> Result<f64> {
        Ok(self.p1db_out(vg, f)? + self.oip3_offset()?)
    }

    /// Two equal tones of `pin_per_tone` each, `tone_spacing_mhz` apart
    /// around `f`. The IM3 product comes from the memoryless cubic term
    /// (3:1 slope against the linear per-tone output); the wanted tone is
    /// compressed by the total drive.
    pub fn lna_im3_two_tone(&self, pin_per_tone: f64, vg: f64, f: f64, tone_spacing_mhz: f64) -> Result<TwoTone> {
        let half = tone_spacing_mhz * 1e-3 / 2.0;
        let fs = self.characterization.freqs();
        if !(tone_spacing_mhz >= 0.0) || f - half < fs[0] || f + half > fs[fs.len() - 1] {
            return Err(Error::OutOfRange(format!("tones at {f} GHz +/- {half} GHz outside the band")));
        }
        let total = pin_per_tone + TWO_TONE_DB;
        let fundamental = self.lna_output(total, vg, f)? - TWO_TONE_DB;
        let linear = pin_per_tone + self.small_signal_gain(vg, f)?;
        let im3 = 3.0 * linear - 2.0 * self.oip3(vg, f)?;
        Ok(TwoTone { fundamental_dbm: fundamental, im3_dbm: im3, im3_compression_dbc: fundamental - im3 })
    }

    /// Extrapolated output intercept of the wanted and IM3 lines measured at
    /// `pin_per_tone`.
    pub fn extrapolated_oip3(&self, pin_per_tone: f64, vg: f64, f: f64) -> Result<f64> {
        let t = self.lna_im3_two_tone(pin_per_tone, vg, f, 1.0)?;
        let linear = pin_per_tone + self.small_signal_gain(vg, f)?;
        Ok(linear + (linear - t.im3_dbm) / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterization::Bundle;

    fn lna() -> LnaModel {
        LnaModel::new(Bundle::bundled().lna)
    }

    #[test]
    fn output_at_p1db_is_one_db_compressed() {
        let m = lna();
        for &vg in &[-2.7, -2.45, -2.1] {
            let p1 = m.p1db_in(vg, 3.0).unwrap();
            let g = m.small_signal_gain(vg, 3.0).unwrap();
            assert!((m.lna_output(p1, vg, 3.0).unwrap() - (p1 + g - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn minus_six_dbm_at_minus_2v5() {
        let m = lna();
        let g = m.small_signal_gain(-2.5, 3.0).unwrap();
        let out = m.lna_output(-6.0, -2.5, 3.0).unwrap();
        assert!((out - (g - 1.0 - 6.0)).abs() < 1.0);
    }

    #[test]
    fn flat_gain_twenty_below_p1db() {
        let m = lna();
        let p1 = m.p1db_in(-2.4, 3.0).unwrap();
        let g = m.small_signal_gain(-2.4, 3.0).unwrap();
        assert!((m.lna_output(p1 - 20.0, -2.4, 3.0).unwrap() - (p1 - 20.0 + g)).abs() < 0.05);
    }

    #[test]
    fn rejects_overdrive_and_bad_bias() {
        let m = lna();
        assert!(matches!(m.lna_output(31.0, -2.4, 3.0), Err(Error::OutOfRange(_))));
        assert!(matches!(m.lna_output(0.0, -2.8, 3.0), Err(Error::OutOfRange(_))));
        assert!(matches!(m.lna_output(0.0, -2.4, 7.0), Err(Error::OutOfRange(_))));
        // Half a DPP tap outside is clamped, not rejected.
        assert!(m.lna_output(0.0, -2.705, 3.0).is_ok());
    }

    #[test]
    fn oip3_is_thirty_at_nominal() {
        let m = lna();
        assert!((m.oip3(-2.4, 3.0).unwrap() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn im3_forty_below_when_twenty_below_oip3() {
        let m = lna();
        let g = m.small_signal_gain(-2.4, 3.0).unwrap();
        let pin = 30.0 - 20.0 - g;
        let t = m.lna_im3_two_tone(pin, -2.4, 3.0, 1.0).unwrap();
        assert!((t.im3_dbm - (10.0 - 40.0)).abs() < 1e-9);
    }

    #[test]
    fn tones_must_stay_in_band() {
        let m = lna();
        assert!(m.lna_im3_two_tone(-20.0, -2.4, 6.0, 10.0).is_err());
        assert!(m.lna_im3_two_tone(-20.0, -2.4, 5.9, 10.0).is_ok());
    }
}
