use serde::Serialize;

use super::engine::{run_with, Halt, MarkerKind, SimulationTrace, TimingReport};
use super::scenario::{Event, Scenario, TwoToneSpec};
use crate::characterization::Bundle;
use crate::control::{LatticeVg, Method, TripleSetPointThresholds};
use crate::devices::{Board, ReceiverChain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EpisodeKind {
    Appearance,
    Disappearance,
    Increase,
    Decrease,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Episode {
    pub kind: EpisodeKind,
    pub edge_t_us: f64,
    pub from_dbm: f64,
    pub to_dbm: f64,
    pub vg_before_v: f64,
    pub settle_t_us: Option<f64>,
    pub adaptation_time_us: Option<f64>,
    pub vg_settled_v: Option<f64>,
    /// Decisions from the edge up to the final settle.
    pub n_cycles: usize,
    /// The same span counted in normal loop periods; a doubled window counts
    /// twice.
    pub n_steps: usize,
    pub expected_vg_v: Option<f64>,
    /// The command went past its final value on the way there.
    pub overshoot: bool,
}

/// Lowest lattice bias whose P1dB,IN covers the board input power.
pub fn expected_vg(chain: &ReceiverChain, pin: f64, f: f64) -> Result<Option<LatticeVg>> {
    let pin_lna = chain.lna_input_dbm(pin, f)?;
    for vg in LatticeVg::all() {
        if chain.lna.p1db_in(vg.volts(), f)? >= pin_lna {
            return Ok(Some(vg));
        }
    }
    Ok(None)
}

/// Adaptation episodes, one per edge that crosses or stays above the
/// interference threshold.
pub fn episodes(trace: &SimulationTrace, bundle: &Bundle) -> Result<Vec<Episode>> {
    let sc = &trace.scenario;
    let chain = ReceiverChain::with_config(bundle, sc.board, &sc.devices);
    let gate = sc.controller.interference_threshold_dbm;
    let period = trace.timing.period_us;
    let settles: Vec<f64> = trace.markers.iter().filter(|m| m.kind == MarkerKind::Settle).map(|m| m.t_us).collect();
    let mut out = Vec::new();
    let mut prev_dbm = sc.initial_dbm;
    for (i, e) in sc.events.iter().enumerate() {
        let from = prev_dbm;
        prev_dbm = e.dbm;
        if e.t_us <= 0.0 {
            continue;
        }
        let kind = match (from >= gate, e.dbm >= gate) {
            (false, false) => continue,
            (false, true) => EpisodeKind::Appearance,
            (true, false) => EpisodeKind::Disappearance,
            (true, true) if e.dbm >= from => EpisodeKind::Increase,
            (true, true) => EpisodeKind::Decrease,
        };
        let end = sc.events.get(i + 1).map_or(f64::INFINITY, |n| n.t_us);
        let settle = settles.iter().copied().rfind(|&t| t > e.t_us && t <= end);
        let vg_before = trace
            .decisions
            .iter()
            .take_while(|d| d.t_us <= e.t_us)
            .last()
            .map_or(trace.rows[0].vg_cmd_v, |d| d.vg_cmd_v);
        let span: Vec<_> = trace
            .decisions
            .iter()
            .filter(|d| d.t_us > e.t_us && settle.is_some_and(|s| d.t_us <= s))
            .collect();
        let vg_settled = span.last().map(|d| d.vg_cmd_v).or(settle.map(|_| vg_before));
        let n_steps = span.iter().map(|d| (d.cycle_us / period).round() as usize).sum();
        let overshoot = vg_settled.is_some_and(|fin| {
            let mut path = vec![vg_before];
            path.extend(span.iter().map(|d| d.vg_cmd_v));
            if fin >= vg_before {
                path.windows(2).any(|w| w[1] < w[0]) || path.iter().any(|&v| v > fin)
            } else {
                path.windows(2).any(|w| w[1] > w[0]) || path.iter().any(|&v| v < fin)
            }
        });
        out.push(Episode {
            kind,
            edge_t_us: e.t_us,
            from_dbm: from,
            to_dbm: e.dbm,
            vg_before_v: vg_before,
            settle_t_us: settle,
            adaptation_time_us: settle.map(|s| s - e.t_us),
            vg_settled_v: vg_settled,
            n_cycles: span.len(),
            n_steps,
            expected_vg_v: expected_vg(&chain, e.dbm, sc.frequency_ghz)?.map(LatticeVg::volts),
            overshoot,
        });
    }
    Ok(out)
}

/// Time from the edge at `event_time` to the final settle of its episode.
/// Edges that stay below the interference threshold never engage the
/// controller.
pub fn measure_adaptation_time(trace: &SimulationTrace, event_time: f64) -> Result<f64> {
    let sc = &trace.scenario;
    let none = Error::NoAdaptation(event_time);
    let i = sc.events.iter().position(|e| (e.t_us - event_time).abs() < 1e-9).ok_or(none.clone())?;
    let gate = sc.controller.interference_threshold_dbm;
    let from = if i == 0 { sc.initial_dbm } else { sc.events[i - 1].dbm };
    if from < gate && sc.events[i].dbm < gate {
        return Err(none);
    }
    let end = sc.events.get(i + 1).map_or(f64::INFINITY, |n| n.t_us);
    trace
        .markers
        .iter()
        .filter(|m| m.kind == MarkerKind::Settle && m.t_us > event_time && m.t_us <= end)
        .map(|m| m.t_us - event_time)
        .next_back()
        .ok_or(none)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub duration_us: f64,
    pub energy_j: f64,
    pub mean_power_w: f64,
}

/// LNA energy, holding each row's power until the next row.
pub fn energy(trace: &SimulationTrace) -> EnergyReport {
    let mut e = 0.0;
    for w in trace.rows.windows(2) {
        e += w[0].lna_power_w * (w[1].t_us - w[0].t_us) * 1e-6;
    }
    let d = trace.rows.last().map_or(0.0, |r| r.t_us) - trace.rows.first().map_or(0.0, |r| r.t_us);
    EnergyReport { duration_us: d, energy_j: e, mean_power_w: if d > 0.0 { e / (d * 1e-6) } else { 0.0 } }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub method: Method,
    pub board: Board,
    pub frequency_ghz: f64,
    pub rng_seed: u64,
    pub timing: TimingReport,
    pub thresholds: Option<TripleSetPointThresholds>,
    pub gate_code: u16,
    pub episodes: Vec<Episode>,
    pub energy: EnergyReport,
    pub final_vg_v: f64,
    pub halt: Option<Halt>,
}

pub fn summarize(trace: &SimulationTrace, bundle: &Bundle) -> Result<Summary> {
    let sc = &trace.scenario;
    Ok(Summary {
        scenario: sc.name.clone(),
        method: sc.controller.method,
        board: sc.board,
        frequency_ghz: sc.frequency_ghz,
        rng_seed: sc.rng_seed,
        timing: trace.timing.clone(),
        thresholds: trace.thresholds,
        gate_code: trace.gate_code,
        episodes: episodes(trace, bundle)?,
        energy: energy(trace),
        final_vg_v: trace.rows.last().map_or(f64::NAN, |r| r.vg_cmd_v),
        halt: trace.halt.clone(),
    })
}

pub const TRACE_HEADER: &str = "t_us,pin_dbm,vg_cmd_v,vg_effective_v,ed1_v,ed2_v,ed1_code,ed1_contaminated,ed2_code,ed2_contaminated,action,lna_gain_db,p_out_dbm,i_d_ma,lna_power_w,i_g_ma";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Trace rows as CSV; floats use shortest round-trip formatting so equal
/// traces give equal bytes.
pub fn trace_csv(trace: &SimulationTrace) -> String {
    let mut s = String::with_capacity(trace.rows.len() * 160);
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in &trace.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.t_us,
            r.pin_dbm,
            r.vg_cmd_v,
            r.vg_effective_v,
            opt(r.ed1_v),
            r.ed2_v,
            opt(r.ed1_code),
            opt(r.ed1_contaminated),
            opt(r.ed2_code),
            opt(r.ed2_contaminated),
            opt(r.action),
            r.lna_gain_db,
            r.p_out_dbm,
            r.i_d_ma,
            r.lna_power_w,
            r.i_g_ma
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub vg_v: f64,
    pub power_w: f64,
    pub im3_compression_dbc: f64,
    pub gain_compression_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub pin_dbm: f64,
    pub adaptive: OperatingPoint,
    pub nominal: OperatingPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub frequency_ghz: f64,
    pub nominal_vg_v: f64,
    pub rows: Vec<ComparisonRow>,
    /// P1dB,IN span the adaptive system can reach.
    pub adaptive_linear_range_dbm: (f64, f64),
    pub nominal_p1db_dbm: f64,
}

impl ComparisonReport {
    /// Adaptive spends less below `low_below_dbm` and keeps more IM3
    /// margin at or above `high_from_dbm`.
    pub fn adaptive_dominates(&self, low_below_dbm: f64, high_from_dbm: f64) -> bool {
        let low = self.rows.iter().filter(|r| r.pin_dbm < low_below_dbm);
        let high = self.rows.iter().filter(|r| r.pin_dbm >= high_from_dbm);
        let mut n = 0;
        let ok_low = low.inspect(|_| n += 1).all(|r| r.adaptive.power_w < r.nominal.power_w);
        let mut m = 0;
        let ok_high = high
            .inspect(|_| m += 1)
            .all(|r| r.adaptive.im3_compression_dbc > r.nominal.im3_compression_dbc);
        ok_low && ok_high && n > 0 && m > 0
    }
}

fn operating_point(chain: &ReceiverChain, pin: f64, vg: f64, f: f64, tt: &TwoToneSpec) -> Result<OperatingPoint> {
    let vg_eff = chain.settled_gate(vg, pin, f)?.vg_effective;
    let pin_lna = chain.lna_input_dbm(pin, f)?;
    let per_tone = pin_lna - 10.0 * 2f64.log10();
    let two = chain.lna.lna_im3_two_tone(per_tone, vg_eff, f, tt.tone_spacing_mhz)?;
    Ok(OperatingPoint {
        vg_v: vg,
        power_w: chain.lna.power_w(vg_eff)?,
        im3_compression_dbc: two.im3_compression_dbc,
        gain_compression_db: chain.lna.compression_db(pin_lna, vg_eff, f)?,
    })
}

/// Bias held at the end of each event's interval.
fn settled_per_event(trace: &SimulationTrace) -> Vec<(f64, f64)> {
    let ev = &trace.scenario.events;
    ev.iter()
        .enumerate()
        .map(|(i, e)| {
            let end = ev.get(i + 1).map_or(f64::INFINITY, |n| n.t_us);
            let vg = trace
                .decisions
                .iter()
                .take_while(|d| d.t_us < end)
                .last()
                .map_or(trace.rows[0].vg_cmd_v, |d| d.vg_cmd_v);
            (e.dbm, vg)
        })
        .collect()
}

/// Runs the scenario as given and with fixed nominal bias, and compares
/// the operating point each run settles to at every input level.
pub fn compare_adaptive_vs_nominal(sc: &Scenario, bundle: &Bundle) -> Result<ComparisonReport> {
    let tt = sc.two_tone.ok_or_else(|| Error::Scenario("comparison needs a two_tone descriptor".into()))?;
    let adaptive = run_with(sc, bundle)?;
    let mut nominal_sc = sc.clone();
    nominal_sc.controller.method = Method::FixedBias;
    let nominal = run_with(&nominal_sc, bundle)?;
    for t in [&adaptive, &nominal] {
        if let Some(h) = &t.halt {
            return Err(Error::Model(format!("run halted at {} us: {}", h.t_us, h.message)));
        }
    }
    let chain = ReceiverChain::with_config(bundle, sc.board, &sc.devices);
    let f = sc.frequency_ghz;
    let mut rows = Vec::new();
    for ((pin, va), (_, vn)) in settled_per_event(&adaptive).into_iter().zip(settled_per_event(&nominal)) {
        if rows.iter().any(|r: &ComparisonRow| r.pin_dbm == pin) {
            continue;
        }
        rows.push(ComparisonRow {
            pin_dbm: pin,
            adaptive: operating_point(&chain, pin, va, f, &tt)?,
            nominal: operating_point(&chain, pin, vn, f, &tt)?,
        });
    }
    rows.sort_by(|a, b| a.pin_dbm.total_cmp(&b.pin_dbm));
    let nominal_vg = sc.controller.fixed_vg.volts();
    Ok(ComparisonReport {
        frequency_ghz: f,
        nominal_vg_v: nominal_vg,
        rows,
        adaptive_linear_range_dbm: (
            chain.lna.p1db_in(LatticeVg::MIN.volts(), f)?,
            chain.lna.p1db_in(LatticeVg::MAX.volts(), f)?,
        ),
        nominal_p1db_dbm: chain.lna.p1db_in(nominal_vg, f)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub pin_dbm: f64,
    pub settled_vg_v: f64,
    pub expected_vg_v: Option<f64>,
    pub adaptation_time_us: Option<f64>,
}

/// Level used between sweep points: well below the interference gate.
pub const SWEEP_OFF_DBM: f64 = -22.5;

/// Scenario that idles at [`SWEEP_OFF_DBM`], steps to `pin`, and runs long
/// enough for any method to settle.
pub fn sweep_point_scenario(template: &Scenario, pin: f64) -> Scenario {
    let p = template.timing().period_us();
    let edge = 6.0 * p;
    let mut sc = template.clone();
    sc.name = format!("{}@{pin}dBm", template.name);
    sc.initial_dbm = SWEEP_OFF_DBM;
    sc.events = vec![Event { t_us: edge, dbm: pin }];
    sc.duration_us = edge + 30.0 * p;
    sc
}

/// Settled versus expected bias for each input power.
pub fn settled_vg_sweep_with(template: &Scenario, powers: &[f64], bundle: &Bundle) -> Result<Vec<SweepRow>> {
    let chain = ReceiverChain::with_config(bundle, template.board, &template.devices);
    powers
        .iter()
        .map(|&pin| {
            let sc = sweep_point_scenario(template, pin);
            let tr = run_with(&sc, bundle)?;
            if let Some(h) = &tr.halt {
                return Err(Error::Model(format!("sweep point {pin} dBm halted: {}", h.message)));
            }
            let edge = sc.events[0].t_us;
            Ok(SweepRow {
                pin_dbm: pin,
                settled_vg_v: tr.decisions.last().map_or(tr.rows[0].vg_cmd_v, |d| d.vg_cmd_v),
                expected_vg_v: expected_vg(&chain, pin, sc.frequency_ghz)?.map(LatticeVg::volts),
                adaptation_time_us: measure_adaptation_time(&tr, edge).ok(),
            })
        })
        .collect()
}

pub fn settled_vg_sweep(method: Method, freq: f64, powers: &[f64], bundle: &Bundle) -> Result<Vec<SweepRow>> {
    let board = if method == Method::FfFb { Board::FfFb } else { Board::FeedbackOnly };
    let mut t = Scenario::new(&format!("sweep-{method}"), board, freq, 1.0, Vec::new());
    t.controller.method = method;
    settled_vg_sweep_with(&t, powers, bundle)
}
