use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::lattice::LatticeVg;
use crate::devices::{Board, ReceiverChain};
use crate::error::{Error, Result};

/// Code-delta thresholds of the triple set-point decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSetPointThresholds {
    pub th_pos: i32,
    pub th_neg: i32,
    pub th_negneg: i32,
}

impl TripleSetPointThresholds {
    pub fn new(th_pos: i32, th_neg: i32, th_negneg: i32) -> Result<Self> {
        let t = Self { th_pos, th_neg, th_negneg };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.th_negneg < self.th_neg && self.th_neg < 0 && self.th_pos > 0 {
            Ok(())
        } else {
            Err(Error::InvariantViolation(format!(
                "thresholds need --Th < -Th < 0 < +Th, got {} / {} / {}",
                self.th_negneg, self.th_neg, self.th_pos
            )))
        }
    }

    /// Negative thresholds as fractions of `+Th`, kept strictly ordered.
    pub fn from_positive(th_pos: i32, neg_ratio: f64, negneg_ratio: f64) -> Result<Self> {
        if th_pos <= 0 || !(neg_ratio > 0.0) || !(negneg_ratio > neg_ratio) {
            return Err(Error::InvariantViolation(format!(
                "cannot scale thresholds from +Th = {th_pos} with ratios {neg_ratio} / {negneg_ratio}"
            )));
        }
        let th_neg = -((neg_ratio * f64::from(th_pos)).round() as i32).max(1);
        let th_negneg = (-(negneg_ratio * f64::from(th_pos)).round() as i32).min(th_neg - 1);
        Self::new(th_pos, th_neg, th_negneg)
    }
}

/// `"auto"` or explicit code deltas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdSetting {
    #[default]
    Auto,
    Manual(TripleSetPointThresholds),
}

impl Serialize for ThresholdSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ThresholdSetting::Auto => s.serialize_str("auto"),
            ThresholdSetting::Manual(t) => t.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ThresholdSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Manual(TripleSetPointThresholds),
        }
        match Raw::deserialize(d)? {
            Raw::Name(n) if n == "auto" => Ok(ThresholdSetting::Auto),
            Raw::Name(n) => Err(serde::de::Error::custom(format!("unknown threshold setting '{n}'"))),
            Raw::Manual(t) => t.validate().map(|_| ThresholdSetting::Manual(t)).map_err(serde::de::Error::custom),
        }
    }
}

/// ED2-code change for one V_G step at a P1dB crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeterminingStep {
    pub freq_ghz: f64,
    /// LNA input power.
    pub pin_dbm: f64,
    pub from: LatticeVg,
    pub to: LatticeVg,
    pub code_step: i32,
}

/// Board input that puts `pin_lna` at the LNA.
pub fn board_input_for(chain: &ReceiverChain, pin_lna: f64, f: f64) -> Result<f64> {
    Ok(match chain.board {
        Board::FeedbackOnly => pin_lna,
        Board::FfFb => pin_lna + chain.coupler.insertion_loss_db(f)?,
    })
}

/// Step across which P1dB,IN passes `pin_lna`: from the highest lattice V_G
/// whose P1dB is at or below `pin_lna` to its successor. `None` when the
/// power lies outside the tuning span.
pub fn determining_step(chain: &ReceiverChain, pin_lna: f64, f: f64) -> Result<Option<DeterminingStep>> {
    let mut from = None;
    for vg in LatticeVg::all() {
        if chain.lna.p1db_in(vg.volts(), f)? <= pin_lna {
            from = Some(vg);
        }
    }
    let Some(from) = from else { return Ok(None) };
    let Some(to) = from.up() else { return Ok(None) };
    let pin = board_input_for(chain, pin_lna, f)?;
    let lo = chain.ed2_code_settled(pin, from.volts(), f)?;
    let hi = chain.ed2_code_settled(pin, to.volts(), f)?;
    Ok(Some(DeterminingStep { freq_ghz: f, pin_dbm: pin_lna, from, to, code_step: i32::from(hi) - i32::from(lo) }))
}

/// Determining steps at every lattice P1dB crossing for each frequency.
pub fn determining_steps(chain: &ReceiverChain, freqs: &[f64]) -> Result<Vec<DeterminingStep>> {
    let mut out = Vec::new();
    for &f in freqs {
        for vg in LatticeVg::all().take(LatticeVg::COUNT - 1) {
            let pin = chain.lna.p1db_in(vg.volts(), f)?;
            if let Some(s) = determining_step(chain, pin, f)? {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// `+Th` as the smallest determining step over the given cases, so that no
/// crossing inside the range is missed.
pub fn threshold_from_steps(steps: &[DeterminingStep], neg_ratio: f64, negneg_ratio: f64) -> Result<TripleSetPointThresholds> {
    let th = steps
        .iter()
        .map(|s| s.code_step)
        .min()
        .ok_or_else(|| Error::InvariantViolation("no determining step in range".into()))?;
    if th <= 0 {
        return Err(Error::InvariantViolation(format!("non-positive determining step {th}")));
    }
    TripleSetPointThresholds::from_positive(th, neg_ratio, negneg_ratio)
}

pub fn choose_linearity_threshold(
    chain: &ReceiverChain,
    freqs: &[f64],
    neg_ratio: f64,
    negneg_ratio: f64,
) -> Result<TripleSetPointThresholds> {
    threshold_from_steps(&determining_steps(chain, freqs)?, neg_ratio, negneg_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterization::Bundle;

    fn chain() -> ReceiverChain {
        ReceiverChain::new(&Bundle::bundled(), Board::FeedbackOnly)
    }

    #[test]
    fn ratios_keep_order() {
        let t = TripleSetPointThresholds::from_positive(1, 0.5, 1.5).unwrap();
        assert!(t.th_negneg < t.th_neg && t.th_neg < 0);
        let t = TripleSetPointThresholds::from_positive(200, 0.5, 1.5).unwrap();
        assert_eq!((t.th_neg, t.th_negneg), (-100, -300));
        assert!(TripleSetPointThresholds::new(5, 1, -3).is_err());
    }

    #[test]
    fn singleton_threshold_is_that_step() {
        let c = chain();
        let pin = c.lna.p1db_in(-2.5, 3.0).unwrap();
        let s = determining_step(&c, pin, 3.0).unwrap().unwrap();
        assert_eq!((s.from.volts(), s.to.volts()), (-2.5, -2.4));
        let t = threshold_from_steps(&[s], 0.5, 1.5).unwrap();
        assert_eq!(t.th_pos, s.code_step);
    }

    #[test]
    fn no_step_outside_span() {
        let c = chain();
        assert!(determining_step(&c, -20.0, 3.0).unwrap().is_none());
        assert!(determining_step(&c, 5.0, 3.0).unwrap().is_none());
    }

    #[test]
    fn steps_shrink_with_power_and_threshold_comes_from_the_top() {
        let c = chain();
        for f in [2.5, 2.75, 3.0] {
            let steps = determining_steps(&c, &[f]).unwrap();
            assert_eq!(steps.len(), LatticeVg::COUNT - 1);
            assert!(steps.windows(2).all(|w| w[1].pin_dbm > w[0].pin_dbm && w[1].code_step < w[0].code_step));
            let th = threshold_from_steps(&steps, 0.5, 1.5).unwrap();
            assert_eq!(th.th_pos, steps.last().unwrap().code_step);
        }
    }

    #[test]
    fn setting_serde() {
        let a: ThresholdSetting = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(a, ThresholdSetting::Auto);
        let m: ThresholdSetting = serde_json::from_str(r#"{"th_pos":10,"th_neg":-5,"th_negneg":-15}"#).unwrap();
        assert!(matches!(m, ThresholdSetting::Manual(_)));
        assert!(serde_json::from_str::<ThresholdSetting>(r#"{"th_pos":10,"th_neg":5,"th_negneg":-15}"#).is_err());
        assert!(serde_json::from_str::<ThresholdSetting>("\"manual\"").is_err());
        assert_eq!(serde_json::to_string(&ThresholdSetting::Auto).unwrap(), "\"auto\"");
    }
}
