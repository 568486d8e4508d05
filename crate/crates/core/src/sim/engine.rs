use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::scenario::{Scenario, TimingConfig};
use crate::characterization::Bundle;
use crate::control::{ControlAction, Controller, CycleInput, TripleSetPointThresholds};
use crate::devices::{cascade_step, first_order_step, AdcSample, Board, ReceiverChain, VgTrajectory};
use crate::error::{Error, Result};

/// Components older than this many time constants have fully settled.
const PRUNE_TAUS: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Response {
    First { tau: f64 },
    Cascade { delay: f64, tau_a: f64, tau_b: f64 },
}

impl Response {
    fn h(&self, dt: f64) -> f64 {
        match *self {
            Response::First { tau } => first_order_step(dt, tau),
            Response::Cascade { delay, tau_a, tau_b } => cascade_step(dt - delay, tau_a, tau_b),
        }
    }

    fn horizon(&self) -> f64 {
        match *self {
            Response::First { tau } => PRUNE_TAUS * tau,
            Response::Cascade { delay, tau_a, tau_b } => delay + PRUNE_TAUS * (tau_a + tau_b),
        }
    }
}

/// Detector output as a settled value minus the unfinished parts of every
/// step applied to it. Once all steps finish the output equals the settled
/// value exactly.
#[derive(Debug, Clone)]
struct DetectorState {
    v_final: f64,
    steps: Vec<(f64, f64, Response)>,
}

impl DetectorState {
    fn new(v: f64) -> Self {
        Self { v_final: v, steps: Vec::new() }
    }

    fn retarget(&mut self, t0: f64, v: f64, r: Response) {
        let dv = v - self.v_final;
        if dv != 0.0 {
            self.steps.push((t0, dv, r));
        }
        self.v_final = v;
    }

    fn at(&mut self, t: f64) -> f64 {
        self.steps.retain(|(t0, _, r)| t - t0 <= r.horizon());
        self.v_final - self.steps.iter().map(|(t0, dv, r)| dv * (1.0 - r.h(t - t0))).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MarkerKind {
    Edge,
    AdaptationStart,
    Settle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marker {
    pub t_us: f64,
    pub kind: MarkerKind,
    pub vg_v: f64,
}

/// One trace row, taken at an ADC sample or a decision instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t_us: f64,
    pub pin_dbm: f64,
    pub vg_cmd_v: f64,
    pub vg_effective_v: f64,
    pub ed1_v: Option<f64>,
    pub ed2_v: f64,
    pub ed1_code: Option<u16>,
    pub ed1_contaminated: Option<bool>,
    pub ed2_code: Option<u16>,
    pub ed2_contaminated: Option<bool>,
    pub action: Option<ControlAction>,
    pub lna_gain_db: f64,
    pub p_out_dbm: f64,
    pub i_d_ma: f64,
    pub lna_power_w: f64,
    pub i_g_ma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRecord {
    pub t_us: f64,
    pub action: ControlAction,
    pub vg_cmd_v: f64,
    pub settled: bool,
    /// Length of the cycle that ended with this decision.
    pub cycle_us: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Halt {
    pub t_us: f64,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub t_s_us: f64,
    pub t_process_us: f64,
    pub period_us: f64,
    pub t_vg_us: f64,
    pub t_lna_us: f64,
    pub t_ed2_us: f64,
    pub command_transient_us: f64,
    /// First sample after a command is already clean.
    pub sampling_outlasts_transient: bool,
    /// Second sample after a command is clean.
    pub second_sample_clean: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub scenario: Scenario,
    pub timing: TimingReport,
    pub thresholds: Option<TripleSetPointThresholds>,
    pub gate_code: u16,
    pub rows: Vec<TraceRow>,
    pub decisions: Vec<DecisionRecord>,
    pub markers: Vec<Marker>,
    pub halt: Option<Halt>,
}

struct Engine {
    chain: ReceiverChain,
    f: f64,
    pin: f64,
    vg_cmd: f64,
    traj: VgTrajectory,
    t_cmd: f64,
    ed1: DetectorState,
    ed2: DetectorState,
    /// (start, end) of windows in which ED2 / ED1 readings are contaminated.
    ed2_windows: Vec<(f64, f64)>,
    ed1_windows: Vec<(f64, f64)>,
    noise: Option<(ChaCha8Rng, Normal<f64>)>,
}

impl Engine {
    fn ed2_target(&self) -> Result<f64> {
        let vg = self.chain.settled_gate(self.vg_cmd, self.pin, self.f)?.vg_effective;
        Ok(self.chain.ed2_static(self.pin, vg, self.f)?.v)
    }

    fn ed1_target(&self) -> Result<f64> {
        Ok(self.chain.ed1_static(self.pin, self.f)?.v)
    }

    fn has_ed1(&self) -> bool {
        self.chain.board == Board::FfFb
    }

    fn apply_edge(&mut self, t: f64, dbm: f64) -> Result<()> {
        self.pin = dbm;
        let v2 = self.ed2_target()?;
        self.ed2.retarget(t, v2, Response::First { tau: self.chain.ed2.tau_us });
        self.ed2_windows.push((t, t + self.chain.ed2.rise_time_us()));
        if self.has_ed1() {
            let v1 = self.ed1_target()?;
            self.ed1.retarget(t, v1, Response::First { tau: self.chain.ed1.tau_us });
            self.ed1_windows.push((t, t + self.chain.ed1.rise_time_us()));
        }
        Ok(())
    }

    fn apply_command(&mut self, t: f64, vg: f64) -> Result<()> {
        let here = self.traj.at(t - self.t_cmd);
        let traj = self.chain.bias.set_vg(here, vg);
        self.vg_cmd = vg;
        if traj.to == self.traj.to {
            return Ok(());
        }
        self.traj = traj;
        self.t_cmd = t;
        let v2 = self.ed2_target()?;
        let r = Response::Cascade {
            delay: self.chain.lna.response_delay_us,
            tau_a: self.chain.bias.tau_us(),
            tau_b: self.chain.ed2.tau_us,
        };
        self.ed2.retarget(t, v2, r);
        self.ed2_windows.push((t, t + self.chain.command_transient_us()));
        Ok(())
    }

    fn sample(&mut self, v: f64, t: f64, windows: &[(f64, f64)]) -> AdcSample {
        let active = windows.iter().any(|&(a, b)| t >= a && t < b);
        let mut s = self.chain.adc.adc_sample(v, t, active);
        if let Some((rng, dist)) = &mut self.noise {
            let n = dist.sample(rng).round();
            let fs = f64::from(self.chain.adc.full_scale());
            s.code = (f64::from(s.code) + n).clamp(0.0, fs) as u16;
        }
        s
    }

    fn row(&mut self, t: f64) -> Result<TraceRow> {
        let f = self.f;
        let pin_lna = self.chain.lna_input_dbm(self.pin, f)?;
        let gate = self.chain.settled_gate(self.vg_cmd, self.pin, f)?;
        // Gate-current drop tracks the settled operating point.
        let drop = gate.vg_effective - self.chain.bias.quantize(self.vg_cmd);
        let vg_eff = self.traj.at(t - self.t_cmd) + drop;
        let out = self.chain.lna.lna_output(pin_lna, vg_eff, f)?;
        let ed1_v = if self.has_ed1() { Some(self.ed1.at(t)) } else { None };
        Ok(TraceRow {
            t_us: t,
            pin_dbm: self.pin,
            vg_cmd_v: self.vg_cmd,
            vg_effective_v: vg_eff,
            ed1_v,
            ed2_v: self.ed2.at(t),
            ed1_code: None,
            ed1_contaminated: None,
            ed2_code: None,
            ed2_contaminated: None,
            action: None,
            lna_gain_db: out - pin_lna,
            p_out_dbm: out - self.chain.coupler.insertion_loss_db(f)?,
            i_d_ma: self.chain.lna.drain_current_ma(vg_eff)?,
            lna_power_w: self.chain.lna.power_w(vg_eff)?,
            i_g_ma: gate.ig_ma,
        })
    }
}

fn timing_report(chain: &ReceiverChain, t: &TimingConfig) -> TimingReport {
    let ct = chain.command_transient_us();
    TimingReport {
        t_s_us: t.t_s_us,
        t_process_us: t.t_process_us,
        period_us: t.period_us(),
        t_vg_us: chain.t_vg_us(),
        t_lna_us: chain.lna.response_delay_us,
        t_ed2_us: chain.ed2.rise_time_us(),
        command_transient_us: ct,
        sampling_outlasts_transient: t.t_s_us > ct,
        second_sample_clean: 2.0 * t.t_s_us >= ct,
    }
}

/// Averages the clean samples of a window; contaminated when none is clean.
fn combine(samples: &[AdcSample]) -> AdcSample {
    let clean: Vec<&AdcSample> = samples.iter().filter(|s| !s.contaminated).collect();
    if clean.is_empty() {
        return *samples.last().expect("window has samples");
    }
    let sum: u32 = clean.iter().map(|s| u32::from(s.code)).sum();
    let n = clean.len() as u32;
    AdcSample { code: ((sum + n / 2) / n) as u16, contaminated: false, clipped: clean.iter().any(|s| s.clipped) }
}

/// Runs a scenario against the given characterization.
///
/// Device failures mid-run stop the simulation and are reported in
/// [`SimulationTrace::halt`] with the trace recorded so far.
pub fn run_with(sc: &Scenario, bundle: &Bundle) -> Result<SimulationTrace> {
    sc.validate()?;
    let chain = ReceiverChain::with_config(bundle, sc.board, &sc.devices);
    let f = sc.frequency_ghz;
    let freqs = chain.lna.characterization.freqs();
    if f < freqs[0] || f > freqs[freqs.len() - 1] {
        return Err(Error::Scenario(format!("frequency {f} GHz outside the characterized {}..{} GHz", freqs[0], freqs[freqs.len() - 1])));
    }
    let mut ctl = Controller::new(&sc.controller, &chain)?;
    let timing = sc.timing();
    let period = timing.period_us();
    let mut trace = SimulationTrace {
        scenario: sc.clone(),
        timing: timing_report(&chain, &timing),
        thresholds: ctl.thresholds,
        gate_code: ctl.gate_code,
        rows: Vec::new(),
        decisions: Vec::new(),
        markers: Vec::new(),
        halt: None,
    };
    match simulate(sc, chain, &mut ctl, timing, period, &mut trace) {
        Ok(()) => {}
        Err((t, e)) => trace.halt = Some(Halt { t_us: t, kind: e.kind().into(), message: e.to_string() }),
    }
    Ok(trace)
}

pub fn run(sc: &Scenario) -> Result<SimulationTrace> {
    run_with(sc, &Bundle::bundled())
}

fn simulate(
    sc: &Scenario,
    chain: ReceiverChain,
    ctl: &mut Controller,
    timing: TimingConfig,
    period: f64,
    trace: &mut SimulationTrace,
) -> std::result::Result<(), (f64, Error)> {
    let at = |t: f64| move |e: Error| (t, e);
    let f = sc.frequency_ghz;
    let pin0 = sc.power_at(0.0);
    let vg0 = ctl.vg_cmd().volts();
    let tap = chain.bias.quantize(vg0);
    let traj = VgTrajectory { from: tap, to: tap, tau_us: chain.bias.tau_us(), settle_us: 0.0, clamped: false };
    let noise = (sc.noise_sigma_lsb > 0.0).then(|| {
        (ChaCha8Rng::seed_from_u64(sc.rng_seed), Normal::new(0.0, sc.noise_sigma_lsb).expect("sigma is finite"))
    });
    let mut eng = Engine {
        chain,
        f,
        pin: pin0,
        vg_cmd: vg0,
        traj,
        t_cmd: 0.0,
        ed1: DetectorState::new(0.0),
        ed2: DetectorState::new(0.0),
        ed2_windows: Vec::new(),
        ed1_windows: Vec::new(),
        noise,
    };
    eng.ed2 = DetectorState::new(eng.ed2_target().map_err(at(0.0))?);
    if eng.has_ed1() {
        eng.ed1 = DetectorState::new(eng.ed1_target().map_err(at(0.0))?);
    }
    trace.rows.push(eng.row(0.0).map_err(at(0.0))?);

    let mut next_event = sc.events.iter().take_while(|e| e.t_us <= 0.0).count();
    let mut t_dec = 0.0;
    let mut prev_settled = true;
    let mut edge_pending = false;
    let mut awaiting_start = false;

    loop {
        if t_dec + period > sc.duration_us + 1e-9 {
            break;
        }
        let mut ed2s = Vec::new();
        let mut ed1s = Vec::new();
        let mut offsets = vec![timing.t_s_us, 2.0 * timing.t_s_us];
        let mut cycle = period;
        let mut k = 0;
        while k < offsets.len() {
            let t = t_dec + offsets[k];
            while let Some(e) = sc.events.get(next_event).filter(|e| e.t_us <= t) {
                eng.apply_edge(e.t_us, e.dbm).map_err(at(e.t_us))?;
                trace.markers.push(Marker { t_us: e.t_us, kind: MarkerKind::Edge, vg_v: eng.vg_cmd });
                edge_pending = true;
                awaiting_start = true;
                next_event += 1;
            }
            let mut row = eng.row(t).map_err(at(t))?;
            let w2 = eng.ed2_windows.clone();
            let s2 = eng.sample(row.ed2_v, t, &w2);
            row.ed2_code = Some(s2.code);
            row.ed2_contaminated = Some(s2.contaminated);
            ed2s.push(s2);
            if let Some(v1) = row.ed1_v {
                let w1 = eng.ed1_windows.clone();
                let s1 = eng.sample(v1, t, &w1);
                row.ed1_code = Some(s1.code);
                row.ed1_contaminated = Some(s1.contaminated);
                ed1s.push(s1);
            }
            trace.rows.push(row);
            k += 1;
            let can_extend = k == 2 && t_dec + 2.0 * period <= sc.duration_us + 1e-9;
            if can_extend && !ed1s.is_empty() && ctl.extend_window(&combine(&ed1s)) {
                offsets.extend([period + timing.t_s_us, period + 2.0 * timing.t_s_us]);
                cycle = 2.0 * period;
            }
        }
        t_dec += cycle;
        // Edges up to and including the decision instant land before the
        // command; they were not seen by this cycle's samples.
        let mut late_edge = false;
        while let Some(e) = sc.events.get(next_event).filter(|e| e.t_us <= t_dec) {
            eng.apply_edge(e.t_us, e.dbm).map_err(at(e.t_us))?;
            trace.markers.push(Marker { t_us: e.t_us, kind: MarkerKind::Edge, vg_v: eng.vg_cmd });
            late_edge = true;
            next_event += 1;
        }
        let input = CycleInput { ed2: combine(&ed2s), ed1: (!ed1s.is_empty()).then(|| combine(&ed1s)) };
        let d = ctl.step(&input);
        let moved = d.vg_cmd.volts() != eng.vg_cmd;
        eng.apply_command(t_dec, d.vg_cmd.volts()).map_err(at(t_dec))?;
        eng.ed2_windows.retain(|&(_, b)| b > t_dec);
        eng.ed1_windows.retain(|&(_, b)| b > t_dec);

        if awaiting_start && moved {
            trace.markers.push(Marker { t_us: t_dec, kind: MarkerKind::AdaptationStart, vg_v: eng.vg_cmd });
            awaiting_start = false;
        }
        if d.settled && (!prev_settled || edge_pending) {
            trace.markers.push(Marker { t_us: t_dec, kind: MarkerKind::Settle, vg_v: eng.vg_cmd });
        }
        if d.settled {
            awaiting_start = false;
        }
        prev_settled = d.settled;
        edge_pending = late_edge;
        if late_edge {
            awaiting_start = true;
        }
        trace.decisions.push(DecisionRecord {
            t_us: t_dec,
            action: d.action,
            vg_cmd_v: d.vg_cmd.volts(),
            settled: d.settled,
            cycle_us: cycle,
            note: d.note.clone(),
        });
        let mut row = eng.row(t_dec).map_err(at(t_dec))?;
        row.action = Some(d.action);
        trace.rows.push(row);
    }
    while let Some(e) = sc.events.get(next_event).filter(|e| e.t_us <= sc.duration_us) {
        eng.apply_edge(e.t_us, e.dbm).map_err(at(e.t_us))?;
        trace.markers.push(Marker { t_us: e.t_us, kind: MarkerKind::Edge, vg_v: eng.vg_cmd });
        next_event += 1;
    }
    let mut end = eng.row(sc.duration_us).map_err(at(sc.duration_us))?;
    if trace.rows.last().is_some_and(|r| r.t_us == sc.duration_us) {
        end.action = trace.rows.last().and_then(|r| r.action);
        trace.rows.pop();
    }
    trace.rows.push(end);
    Ok(())
}
