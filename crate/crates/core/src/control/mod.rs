//! Bias adaptation controllers.
//!
//! The step functions are pure: they map (state, sample, tables) to an
//! action. [`Controller`] wraps them with the cycle bookkeeping shared by
//! all methods: the interference gate, confirmation cycles after jumps and
//! reverts, and the settled flag the simulator turns into markers.

mod fffb;
mod lattice;
mod lut;
mod threshold;

pub use fffb::{fffb_step, FfFbContext, GainObservation};
pub use lattice::{parse_lattice, LatticeVg};
pub use lut::{LutBin, LutTable};
pub use threshold::{
    board_input_for, choose_linearity_threshold, determining_step, determining_steps, threshold_from_steps,
    DeterminingStep, ThresholdSetting, TripleSetPointThresholds,
};

use std::cmp::Ordering;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::devices::{AdcSample, ReceiverChain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Incremental,
    Lut,
    OneShotIncremental,
    FfFb,
    /// Never adapts; the reference for nominal-bias comparisons.
    FixedBias,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', '+', ' '], "").as_str() {
            "incremental" | "inc" => Ok(Method::Incremental),
            "lut" => Ok(Method::Lut),
            "oneshotincremental" | "oneshot" => Ok(Method::OneShotIncremental),
            "fffb" => Ok(Method::FfFb),
            "fixedbias" | "fixed" | "nominal" => Ok(Method::FixedBias),
            _ => Err(Error::Parse(format!("unknown method '{s}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Incremental => "incremental",
            Method::Lut => "lut",
            Method::OneShotIncremental => "one-shot",
            Method::FfFb => "ff+fb",
            Method::FixedBias => "fixed-bias",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Idle,
    Incrementing,
    Decrementing,
    Settled,
}

/// Triple set-point outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    IncVg,
    DecVg,
    Hold,
    RevertToPrev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub method: Method,
    pub mode: Mode,
    /// V_G2: bias under which `cur_sample` was taken.
    pub vg_cmd: LatticeVg,
    /// V_G1: bias under which `ref_sample` was taken.
    pub vg_prev: LatticeVg,
    pub ref_sample: Option<u16>,
    pub cur_sample: Option<u16>,
    pub err: Option<i32>,
}

impl ControllerState {
    pub fn initial(method: Method, vg: LatticeVg) -> Self {
        Self { method, mode: Mode::Idle, vg_cmd: vg, vg_prev: vg, ref_sample: None, cur_sample: None, err: None }
    }
}

fn bound_checked(action: Action, vg: LatticeVg) -> Result<Action> {
    match action {
        Action::IncVg if vg == LatticeVg::MAX => Err(Error::AtBound { vg: vg.volts() }),
        Action::DecVg if vg == LatticeVg::MIN => Err(Error::AtBound { vg: vg.volts() }),
        a => Ok(a),
    }
}

/// Triple set-point decision on `err = sample - ref`.
///
/// | V_G2 vs V_G1 | err > +Th | -Th <= err <= +Th | --Th <= err < -Th | err < --Th   |
/// |--------------|-----------|-------------------|-------------------|--------------|
/// | equal        | IncVg     | Hold              | DecVg             | DecVg        |
/// | greater      | IncVg     | RevertToPrev      | RevertToPrev      | RevertToPrev |
/// | less         | Hold      | Hold              | DecVg             | RevertToPrev |
pub fn incremental_step(state: &ControllerState, sample: &AdcSample, th: &TripleSetPointThresholds) -> Result<Action> {
    if sample.contaminated {
        return Err(Error::ContaminatedSample);
    }
    let r = state.ref_sample.ok_or_else(|| Error::InvariantViolation("no reference sample".into()))?;
    let err = i32::from(sample.code) - i32::from(r);
    let action = match state.vg_cmd.cmp(&state.vg_prev) {
        Ordering::Equal if err > th.th_pos => Action::IncVg,
        Ordering::Equal if err < th.th_neg => Action::DecVg,
        Ordering::Equal => Action::Hold,
        Ordering::Greater if err > th.th_pos => Action::IncVg,
        Ordering::Greater => Action::RevertToPrev,
        Ordering::Less if err < th.th_negneg => Action::RevertToPrev,
        Ordering::Less if err < th.th_neg => Action::DecVg,
        Ordering::Less => Action::Hold,
    };
    bound_checked(action, state.vg_cmd)
}

/// Where a LUT miss sends the bias: the most linear setting.
pub const LUT_FALLBACK: LatticeVg = LatticeVg::MAX;

/// Target bias for a reading. On `LutMiss` the caller applies
/// [`LUT_FALLBACK`].
pub fn lut_step(state: &ControllerState, sample: &AdcSample, lut: &LutTable) -> Result<LatticeVg> {
    if sample.contaminated {
        return Err(Error::ContaminatedSample);
    }
    lut.lookup(state.vg_cmd, sample.code).map(|b| b.vg_target)
}

/// Rough target from the underestimating table; refinement continues with
/// [`incremental_step`].
pub fn one_shot_step(state: &ControllerState, sample: &AdcSample, one_shot_table: &LutTable) -> Result<LatticeVg> {
    lut_step(state, sample, one_shot_table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub method: Method,
    pub thresholds: ThresholdSetting,
    pub th_neg_ratio: f64,
    pub th_negneg_ratio: f64,
    /// Frequencies over which automatic thresholds are chosen.
    pub threshold_freqs_ghz: Vec<f64>,
    /// Pre-generated LUT; generated from the characterization when absent.
    pub lut_path: Option<PathBuf>,
    pub calibration_freq_ghz: f64,
    /// Readings within this many codes of the last one count as unchanged.
    pub deadband_lsb: u16,
    /// Input power whose ED2 code at minimum bias gates adaptation.
    pub interference_threshold_dbm: f64,
    pub fffb_tol_db: f64,
    /// Headroom required below P1dB,IN before FF+FB steps down.
    pub fffb_dec_margin_db: f64,
    /// ED1 inputs within this margin of its floor use a doubled window.
    pub near_floor_margin_db: f64,
    pub fixed_vg: LatticeVg,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            method: Method::Incremental,
            thresholds: ThresholdSetting::Auto,
            th_neg_ratio: 0.5,
            th_negneg_ratio: 1.5,
            threshold_freqs_ghz: vec![2.5, 2.75, 3.0],
            lut_path: None,
            calibration_freq_ghz: 3.0,
            deadband_lsb: 8,
            interference_threshold_dbm: -12.5,
            fffb_tol_db: 1.0,
            fffb_dec_margin_db: 0.5,
            near_floor_margin_db: 17.0,
            fixed_vg: LatticeVg::new(3).expect("lattice index"),
        }
    }
}

/// What the controller did at the end of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlAction {
    Hold,
    IncVg,
    DecVg,
    RevertToPrev,
    /// Table-driven move, possibly by several steps.
    Jump,
    /// Interference gone: back to minimum bias.
    Reset,
    /// Reference taken after a move; no decision made.
    Confirm,
    /// No clean sample in the window.
    Resample,
}

impl fmt::Display for ControlAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Samples gathered over one control cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleInput {
    pub ed2: AdcSample,
    pub ed1: Option<AdcSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub action: ControlAction,
    pub vg_cmd: LatticeVg,
    /// At rest on a clean sample with nothing pending.
    pub settled: bool,
    /// Next cycle should use the doubled sampling window.
    pub long_window_next: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pending {
    None,
    Confirm,
    /// One-shot landed; next cycle probes one step up.
    Probe,
}

#[derive(Debug, Clone)]
pub struct Controller {
    pub config: ControllerConfig,
    pub state: ControllerState,
    pub thresholds: Option<TripleSetPointThresholds>,
    pub lut: Option<LutTable>,
    pub one_shot: Option<LutTable>,
    /// ED2 code at the interference threshold, minimum bias.
    pub gate_code: u16,
    fffb: Option<FfFbContext>,
    pending: Pending,
    last_code: Option<u16>,
    reading_moved: bool,
    long_window: bool,
}

impl Controller {
    pub fn new(config: &ControllerConfig, chain: &ReceiverChain) -> Result<Self> {
        let f_cal = config.calibration_freq_ghz;
        let needs_th = matches!(config.method, Method::Incremental | Method::OneShotIncremental);
        let thresholds = match (needs_th, config.thresholds) {
            (false, _) => None,
            (true, ThresholdSetting::Manual(t)) => Some(t),
            (true, ThresholdSetting::Auto) => Some(choose_linearity_threshold(
                chain,
                &config.threshold_freqs_ghz,
                config.th_neg_ratio,
                config.th_negneg_ratio,
            )?),
        };
        let lut = match config.method {
            Method::Lut | Method::OneShotIncremental => Some(match &config.lut_path {
                Some(p) => LutTable::load(p)?,
                None => LutTable::generate(chain, f_cal)?,
            }),
            _ => None,
        };
        let one_shot = match config.method {
            Method::OneShotIncremental => lut.as_ref().map(LutTable::shifted_down),
            _ => None,
        };
        let gate_code = chain.ed2_code_settled(config.interference_threshold_dbm, LatticeVg::MIN.volts(), f_cal)?;
        let fffb = (config.method == Method::FfFb).then(|| FfFbContext::new(chain.clone(), config));
        let start = if config.method == Method::FixedBias { config.fixed_vg } else { LatticeVg::MIN };
        Ok(Self {
            config: config.clone(),
            state: ControllerState::initial(config.method, start),
            thresholds,
            lut,
            one_shot,
            gate_code,
            fffb,
            pending: Pending::None,
            last_code: None,
            reading_moved: false,
            // Until ED1 shows a usable input, assume it is near its floor.
            long_window: config.method == Method::FfFb,
        })
    }

    pub fn vg_cmd(&self) -> LatticeVg {
        self.state.vg_cmd
    }

    /// Whether the cycle whose first window produced `ed1` should take a
    /// second window. Both the previous reading and this one must sit near
    /// the ED1 floor.
    pub fn extend_window(&self, ed1: &AdcSample) -> bool {
        self.long_window && self.fffb.as_ref().is_some_and(|c| c.near_floor(ed1))
    }

    fn engaged(&self, code: u16) -> bool {
        u32::from(code) + u32::from(self.config.deadband_lsb) >= u32::from(self.gate_code)
    }

    /// Moves the command and records the sample it was decided on.
    fn commit(&mut self, code: u16, to: LatticeVg, mode: Mode) {
        self.state.vg_prev = self.state.vg_cmd;
        self.state.vg_cmd = to;
        self.state.mode = mode;
        self.state.ref_sample = Some(code);
        self.last_code = Some(code);
    }

    fn decision(&self, action: ControlAction, settled: bool, note: Option<String>) -> Decision {
        Decision { action, vg_cmd: self.state.vg_cmd, settled, long_window_next: self.long_window, note }
    }

    /// One control cycle.
    pub fn step(&mut self, input: &CycleInput) -> Decision {
        if self.config.method == Method::FixedBias {
            return self.decision(ControlAction::Hold, !input.ed2.contaminated, None);
        }
        if input.ed2.contaminated || input.ed1.is_some_and(|s| s.contaminated) {
            return self.decision(ControlAction::Resample, false, None);
        }
        if let Some(ctx) = &self.fffb {
            self.long_window = input.ed1.map(|s| ctx.near_floor(&s)).unwrap_or(false);
        }
        let code = input.ed2.code;
        self.state.cur_sample = Some(code);
        self.state.err = self.state.ref_sample.map(|r| i32::from(code) - i32::from(r));

        if !self.engaged(code) {
            let vg = self.state.vg_cmd;
            return if vg != LatticeVg::MIN {
                self.commit(code, LatticeVg::MIN, Mode::Idle);
                self.pending = Pending::Confirm;
                self.decision(ControlAction::Reset, false, None)
            } else if self.pending != Pending::None {
                self.commit(code, vg, Mode::Idle);
                self.pending = Pending::None;
                self.decision(ControlAction::Confirm, true, None)
            } else {
                self.commit(code, vg, Mode::Idle);
                self.decision(ControlAction::Hold, true, None)
            };
        }
        match self.config.method {
            Method::Incremental => self.step_incremental(&input.ed2),
            Method::Lut => self.step_lut(&input.ed2),
            Method::OneShotIncremental => self.step_one_shot(&input.ed2),
            Method::FfFb => self.step_fffb(input),
            Method::FixedBias => unreachable!("handled above"),
        }
    }

    fn confirm(&mut self, code: u16) -> Decision {
        let vg = self.state.vg_cmd;
        self.commit(code, vg, Mode::Settled);
        self.pending = Pending::None;
        self.decision(ControlAction::Confirm, true, None)
    }

    /// Applies a triple set-point action; bounds settle in place.
    fn apply_incremental(&mut self, code: u16, action: Result<Action>) -> Decision {
        let vg = self.state.vg_cmd;
        match action {
            Ok(Action::IncVg) => {
                self.commit(code, vg.up().expect("bound checked"), Mode::Incrementing);
                self.decision(ControlAction::IncVg, false, None)
            }
            Ok(Action::DecVg) => {
                self.commit(code, vg.down().expect("bound checked"), Mode::Decrementing);
                self.decision(ControlAction::DecVg, false, None)
            }
            Ok(Action::Hold) => {
                self.commit(code, vg, Mode::Settled);
                self.decision(ControlAction::Hold, true, None)
            }
            Ok(Action::RevertToPrev) => {
                let back = self.state.vg_prev;
                self.commit(code, back, Mode::Settled);
                self.pending = Pending::Confirm;
                self.decision(ControlAction::RevertToPrev, false, None)
            }
            Err(Error::AtBound { vg: v }) => {
                self.commit(code, vg, Mode::Settled);
                self.decision(ControlAction::Hold, true, Some(format!("AtBound at {v:.1} V")))
            }
            Err(e) => {
                self.state.ref_sample = Some(code);
                self.decision(ControlAction::Hold, false, Some(e.to_string()))
            }
        }
    }

    fn step_incremental(&mut self, s: &AdcSample) -> Decision {
        if self.pending == Pending::Confirm {
            return self.confirm(s.code);
        }
        if self.state.ref_sample.is_none() {
            let vg = self.state.vg_cmd;
            self.commit(s.code, vg, Mode::Idle);
            return self.decision(ControlAction::Confirm, false, None);
        }
        let th = self.thresholds.expect("incremental controller has thresholds");
        let a = incremental_step(&self.state, s, &th);
        self.apply_incremental(s.code, a)
    }

    fn step_lut(&mut self, s: &AdcSample) -> Decision {
        if self.pending == Pending::Confirm {
            return self.confirm(s.code);
        }
        let vg = self.state.vg_cmd;
        let unchanged = self
            .last_code
            .is_some_and(|c| (i32::from(s.code) - i32::from(c)).unsigned_abs() <= u32::from(self.config.deadband_lsb));
        // A reading that just moved is looked up once more after it stops,
        // so a detector tail cannot leave the bias one bin short.
        let was_moving = std::mem::replace(&mut self.reading_moved, !unchanged);
        if unchanged && !was_moving && self.state.mode == Mode::Settled {
            self.commit(s.code, vg, Mode::Settled);
            return self.decision(ControlAction::Hold, true, None);
        }
        let lut = self.lut.as_ref().expect("LUT controller has a table");
        let (target, note) = match lut_step(&self.state, s, lut) {
            Ok(v) => (v, None),
            Err(e) => (LUT_FALLBACK, Some(e.to_string())),
        };
        // Upper-edge hysteresis: a power exactly at P1dB of the current bias
        // is covered by it, so a reading within the dead-band above the top
        // of its own bin does not step up. Without this a level on a bin
        // edge flips between neighbours.
        let db = i32::from(self.config.deadband_lsb);
        let just_above_own_bin = target > vg
            && lut
                .rows
                .get(&vg)
                .and_then(|r| r.iter().find(|b| b.vg_target == vg))
                .is_some_and(|b| i32::from(s.code) <= i32::from(b.code_hi) + db);
        if target == vg || (note.is_none() && just_above_own_bin) {
            self.commit(s.code, vg, Mode::Settled);
            return self.decision(ControlAction::Hold, true, note);
        }
        self.commit(s.code, target, Mode::Settled);
        self.pending = Pending::Confirm;
        self.decision(ControlAction::Jump, false, note)
    }

    fn step_one_shot(&mut self, s: &AdcSample) -> Decision {
        let vg = self.state.vg_cmd;
        match self.pending {
            Pending::Confirm => return self.confirm(s.code),
            Pending::Probe => {
                self.pending = Pending::None;
                let a = bound_checked(Action::IncVg, vg);
                return self.apply_incremental(s.code, a);
            }
            Pending::None => {}
        }
        let th = self.thresholds.expect("one-shot controller has thresholds");
        if self.state.mode == Mode::Incrementing {
            let a = incremental_step(&self.state, s, &th);
            return self.apply_incremental(s.code, a);
        }
        // Monitoring: any change beyond the dead-band triggers a rough jump.
        let changed = match self.state.err {
            Some(err) => err > th.th_pos || err < th.th_neg,
            None => true,
        };
        if !changed {
            self.commit(s.code, vg, Mode::Settled);
            return self.decision(ControlAction::Hold, true, None);
        }
        let table = self.one_shot.as_ref().expect("one-shot controller has a table");
        let (target, note) = match one_shot_step(&self.state, s, table) {
            Ok(v) => (v, None),
            Err(e) => (LUT_FALLBACK, Some(e.to_string())),
        };
        self.commit(s.code, target, Mode::Settled);
        self.pending = Pending::Probe;
        self.decision(ControlAction::Jump, false, note)
    }

    fn step_fffb(&mut self, input: &CycleInput) -> Decision {
        let vg = self.state.vg_cmd;
        let code = input.ed2.code;
        let ctx = self.fffb.as_ref().expect("FF+FB controller has a context");
        let Some(ed1) = input.ed1 else {
            return self.decision(ControlAction::Resample, false, Some("no ED1 sample".into()));
        };
        let expected = match ctx.expected_gain_db(vg) {
            Ok(g) => g,
            Err(e) => return self.decision(ControlAction::Hold, false, Some(e.to_string())),
        };
        match fffb_step(&ed1, &input.ed2, expected, self.config.fffb_tol_db, ctx, vg) {
            Ok(Action::IncVg) => {
                self.commit(code, vg.up().expect("bound checked"), Mode::Incrementing);
                self.decision(ControlAction::IncVg, false, None)
            }
            Ok(Action::DecVg) => {
                self.commit(code, vg.down().expect("bound checked"), Mode::Decrementing);
                self.decision(ControlAction::DecVg, false, None)
            }
            Ok(_) => {
                self.commit(code, vg, Mode::Settled);
                self.decision(ControlAction::Hold, true, None)
            }
            Err(Error::AtBound { vg: v }) => {
                self.commit(code, vg, Mode::Settled);
                self.decision(ControlAction::Hold, true, Some(format!("AtBound at {v:.1} V")))
            }
            Err(e) => {
                self.long_window = true;
                self.commit(code, vg, Mode::Settled);
                self.decision(ControlAction::Hold, true, Some(e.to_string()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterization::Bundle;
    use crate::devices::Board;

    fn th() -> TripleSetPointThresholds {
        TripleSetPointThresholds::new(100, -50, -150).unwrap()
    }

    fn st(v1: u8, v2: u8, r: u16) -> ControllerState {
        ControllerState {
            vg_prev: LatticeVg::new(v1).unwrap(),
            vg_cmd: LatticeVg::new(v2).unwrap(),
            ref_sample: Some(r),
            ..ControllerState::initial(Method::Incremental, LatticeVg::MIN)
        }
    }

    fn s(code: u16) -> AdcSample {
        AdcSample { code, contaminated: false, clipped: false }
    }

    #[test]
    fn decision_table() {
        let t = th();
        let cases = [
            (2, 2, 1000, Action::Hold),
            (2, 2, 1101, Action::IncVg),
            (2, 2, 1100, Action::Hold),
            (2, 2, 949, Action::DecVg),
            (2, 3, 1101, Action::IncVg),
            (2, 3, 1100, Action::RevertToPrev),
            (2, 3, 500, Action::RevertToPrev),
            (3, 2, 849, Action::RevertToPrev),
            (3, 2, 850, Action::DecVg),
            (3, 2, 949, Action::DecVg),
            (3, 2, 950, Action::Hold),
            (3, 2, 1300, Action::Hold),
        ];
        for (v1, v2, code, want) in cases {
            assert_eq!(incremental_step(&st(v1, v2, 1000), &s(code), &t).unwrap(), want, "{v1} {v2} {code}");
        }
    }

    #[test]
    fn errors() {
        let t = th();
        let mut c = s(5000);
        c.contaminated = true;
        assert_eq!(incremental_step(&st(2, 2, 1000), &c, &t), Err(Error::ContaminatedSample));
        assert!(matches!(incremental_step(&st(6, 6, 1000), &s(5000), &t), Err(Error::AtBound { .. })));
        assert!(matches!(incremental_step(&st(0, 0, 1000), &s(0), &t), Err(Error::AtBound { .. })));
        let mut no_ref = st(2, 2, 0);
        no_ref.ref_sample = None;
        assert!(incremental_step(&no_ref, &s(0), &t).is_err());
    }

    fn chain() -> ReceiverChain {
        ReceiverChain::new(&Bundle::bundled(), Board::FeedbackOnly)
    }

    #[test]
    fn lut_holds_on_its_own_bin_edge() {
        // A level exactly at P1dB(-2.6 V) reads one code into the next bin
        // while the detector tail decays; the controller must not flip.
        let c = chain();
        let mut ctl = Controller::new(&ControllerConfig { method: Method::Lut, ..Default::default() }, &c).unwrap();
        let at = |v: f64| c.ed2_code_settled(-8.5, v, 3.0).unwrap();
        ctl.step(&CycleInput { ed2: s(c.ed2_code_settled(-22.5, -2.7, 3.0).unwrap()), ed1: None });
        let d = ctl.step(&CycleInput { ed2: s(at(-2.7)), ed1: None });
        assert_eq!((d.action, d.vg_cmd.volts()), (ControlAction::Jump, -2.6));
        ctl.step(&CycleInput { ed2: s(at(-2.6) + 48), ed1: None });
        for tail in [1, 0, 0] {
            let d = ctl.step(&CycleInput { ed2: s(at(-2.6) + tail), ed1: None });
            assert_eq!((d.action, d.vg_cmd.volts()), (ControlAction::Hold, -2.6));
        }
    }

    #[test]
    fn lut_controller_jumps_then_confirms() {
        let c = chain();
        let mut ctl = Controller::new(&ControllerConfig { method: Method::Lut, ..Default::default() }, &c).unwrap();
        let off = c.ed2_code_settled(-22.5, -2.7, 3.0).unwrap();
        let d = ctl.step(&CycleInput { ed2: s(off), ed1: None });
        assert_eq!((d.action, d.settled), (ControlAction::Hold, true));
        let on = c.ed2_code_settled(-6.5, ctl.vg_cmd().volts(), 3.0).unwrap();
        let d = ctl.step(&CycleInput { ed2: s(on), ed1: None });
        assert_eq!((d.action, d.vg_cmd.volts()), (ControlAction::Jump, -2.5));
        let on = c.ed2_code_settled(-6.5, -2.5, 3.0).unwrap();
        let d = ctl.step(&CycleInput { ed2: s(on), ed1: None });
        assert_eq!((d.action, d.settled), (ControlAction::Confirm, true));
        let d = ctl.step(&CycleInput { ed2: s(off), ed1: None });
        assert_eq!((d.action, d.vg_cmd), (ControlAction::Reset, LatticeVg::MIN));
        let d = ctl.step(&CycleInput { ed2: s(off), ed1: None });
        assert_eq!((d.action, d.settled), (ControlAction::Confirm, true));
    }

    #[test]
    fn one_shot_from_minus_5_dbm_lands_on_minus_2_5() {
        let c = chain();
        let cfg = ControllerConfig { method: Method::OneShotIncremental, ..Default::default() };
        let ctl = Controller::new(&cfg, &c).unwrap();
        let code = c.ed2_code_settled(-5.0, -2.7, 3.0).unwrap();
        let st = ControllerState::initial(Method::OneShotIncremental, LatticeVg::MIN);
        let v = one_shot_step(&st, &s(code), ctl.one_shot.as_ref().unwrap()).unwrap();
        assert_eq!(v.volts(), -2.5);
        let floor = ctl.lut.as_ref().unwrap().code_min(LatticeVg::new(4).unwrap()).unwrap();
        let st = ControllerState::initial(Method::OneShotIncremental, LatticeVg::new(4).unwrap());
        assert_eq!(one_shot_step(&st, &s(floor), ctl.one_shot.as_ref().unwrap()).unwrap(), LatticeVg::MIN);
    }

    #[test]
    fn lut_miss_falls_back_to_max_linearity() {
        let c = chain();
        let lut = LutTable::generate(&c, 3.0).unwrap();
        let st = ControllerState::initial(Method::Lut, LatticeVg::MIN);
        assert!(matches!(lut_step(&st, &s(0), &lut), Err(Error::LutMiss { .. })));
    }

    #[test]
    fn fixed_bias_never_moves() {
        let c = chain();
        let cfg = ControllerConfig { method: Method::FixedBias, ..Default::default() };
        let mut ctl = Controller::new(&cfg, &c).unwrap();
        for code in [0u16, 30000, 65535] {
            assert_eq!(ctl.step(&CycleInput { ed2: s(code), ed1: None }).vg_cmd.volts(), -2.4);
        }
    }

    #[test]
    fn method_names() {
        assert_eq!("one-shot".parse::<Method>().unwrap(), Method::OneShotIncremental);
        assert_eq!("ff+fb".parse::<Method>().unwrap(), Method::FfFb);
        assert!("x".parse::<Method>().is_err());
    }
}
