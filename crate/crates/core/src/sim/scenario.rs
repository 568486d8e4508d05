use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::ControllerConfig;
use crate::devices::{Board, DeviceConfig, PIN_MAX_DBM};
use crate::error::{Error, Result};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// Input power steps to `dbm` at `t_us`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub t_us: f64,
    pub dbm: f64,
}

/// Cycle timing: two ADC samples `t_s_us` apart, then `t_process_us` of
/// processing before the decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    pub t_s_us: f64,
    pub t_process_us: f64,
}

impl TimingConfig {
    pub fn for_board(board: Board) -> Self {
        match board {
            Board::FeedbackOnly => Self { t_s_us: 42.0, t_process_us: 1.0 },
            Board::FfFb => Self { t_s_us: 40.0, t_process_us: 1.0 },
        }
    }

    pub fn period_us(&self) -> f64 {
        2.0 * self.t_s_us + self.t_process_us
    }
}

/// Two equal tones sharing the scenario power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoToneSpec {
    pub tone_spacing_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub frequency_ghz: f64,
    pub board: Board,
    pub duration_us: f64,
    /// Input power before the first event.
    #[serde(default = "default_initial_dbm")]
    pub initial_dbm: f64,
    pub events: Vec<Event>,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub devices: DeviceConfig,
    #[serde(default)]
    pub timing: Option<TimingConfig>,
    #[serde(default)]
    pub rng_seed: u64,
    /// Standard deviation of additive code noise; 0 disables it.
    #[serde(default)]
    pub noise_sigma_lsb: f64,
    #[serde(default)]
    pub two_tone: Option<TwoToneSpec>,
}

fn default_initial_dbm() -> f64 {
    -40.0
}

impl Scenario {
    pub fn new(name: &str, board: Board, frequency_ghz: f64, duration_us: f64, events: Vec<Event>) -> Self {
        Self {
            schema_version: SCENARIO_SCHEMA_VERSION,
            name: name.into(),
            frequency_ghz,
            board,
            duration_us,
            initial_dbm: default_initial_dbm(),
            events,
            controller: ControllerConfig::default(),
            devices: DeviceConfig::default(),
            timing: None,
            rng_seed: 0,
            noise_sigma_lsb: 0.0,
            two_tone: None,
        }
    }

    pub fn timing(&self) -> TimingConfig {
        self.timing.unwrap_or_else(|| TimingConfig::for_board(self.board))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return bad(format!("schema_version {} unsupported (expected {SCENARIO_SCHEMA_VERSION})", self.schema_version));
        }
        if !(self.duration_us > 0.0 && self.duration_us.is_finite()) {
            return bad(format!("duration_us must be positive, got {}", self.duration_us));
        }
        if !self.frequency_ghz.is_finite() || self.frequency_ghz <= 0.0 {
            return bad(format!("frequency_ghz must be positive, got {}", self.frequency_ghz));
        }
        let t = self.timing();
        if !(t.t_s_us > 0.0 && t.t_process_us >= 0.0) {
            return bad("timing needs t_s_us > 0 and t_process_us >= 0".into());
        }
        if !(self.noise_sigma_lsb >= 0.0) {
            return bad("noise_sigma_lsb must be non-negative".into());
        }
        if !(self.initial_dbm <= PIN_MAX_DBM) {
            return bad(format!("initial_dbm {} exceeds the {PIN_MAX_DBM} dBm rating", self.initial_dbm));
        }
        let mut prev = f64::NEG_INFINITY;
        for e in &self.events {
            if !(e.t_us > prev) {
                return bad(format!("event times must be strictly increasing (t = {})", e.t_us));
            }
            if !(0.0..=self.duration_us).contains(&e.t_us) {
                return bad(format!("event at {} us lies outside [0, duration]", e.t_us));
            }
            if !(e.dbm <= PIN_MAX_DBM) || !e.dbm.is_finite() {
                return bad(format!("event power {} dBm exceeds the {PIN_MAX_DBM} dBm rating", e.dbm));
            }
            prev = e.t_us;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Input power in force at `t` (edges take effect at their own instant).
    pub fn power_at(&self, t: f64) -> f64 {
        self.events.iter().take_while(|e| e.t_us <= t).last().map_or(self.initial_dbm, |e| e.dbm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc() -> Scenario {
        Scenario::new("t", Board::FeedbackOnly, 3.0, 1000.0, vec![Event { t_us: 100.0, dbm: -5.0 }])
    }

    #[test]
    fn json_round_trip() {
        let s = sc();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn invariants() {
        let mut s = sc();
        s.events.push(Event { t_us: 100.0, dbm: -3.0 });
        assert!(matches!(s.validate(), Err(Error::Scenario(_))));
        let mut s = sc();
        s.events[0].dbm = 31.0;
        assert!(s.validate().is_err());
        let mut s = sc();
        s.schema_version = 2;
        assert!(s.validate().is_err());
        assert!(matches!(Scenario::from_json("{"), Err(Error::Parse(_))));
        assert!(Scenario::from_json(r#"{"schema_version":1,"frequency_ghz":3,"board":"FfFb","duration_us":5,"events":[],"bogus":1}"#).is_err());
    }

    #[test]
    fn power_lookup() {
        let s = sc();
        assert_eq!(s.power_at(99.0), -40.0);
        assert_eq!(s.power_at(100.0), -5.0);
    }
}
