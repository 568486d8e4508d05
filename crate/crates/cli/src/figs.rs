use std::fmt::Write as _;

use serde_json::json;

use rfadapt::characterization::Bundle;
use rfadapt::control::Method;
use rfadapt::looptheory::{self, LoopParams};
use rfadapt::sim::{self, recipes, Scenario};
use rfadapt::{Error, Result};

use crate::output::OutputSet;

pub const FIGURE_IDS: [&str; 11] =
    ["fig14", "fig15", "fig17a", "fig17b", "fig17c", "fig17d", "fig17e", "fig17f", "fig18", "fig19", "fig20"];

/// Accepts the data-figure aliases as well.
pub fn canonical_id(id: &str) -> Result<&'static str> {
    let id = match id {
        "fig11" | "fig18/11" => "fig18",
        "fig12" | "fig19/12" => "fig19",
        other => other,
    };
    FIGURE_IDS.iter().copied().find(|f| *f == id).ok_or_else(|| {
        Error::Parse(format!("unknown figure id '{id}' (known: {}, all)", FIGURE_IDS.join(", ")))
    })
}

pub struct FigureOutput {
    pub config: serde_json::Value,
    pub tolerances: serde_json::Value,
    pub results: serde_json::Value,
}

fn step_csv(y: &[f64], period: f64) -> String {
    let mut s = String::from("t_us,value\n");
    for (i, v) in y.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i as f64 * period, v);
    }
    s
}

fn fig14(out: &mut OutputSet) -> Result<FigureOutput> {
    let mut results = serde_json::Map::new();
    let mut config = Vec::new();
    for (k, target) in [(0.6, 436.0), (0.4, 771.0)] {
        let p = LoopParams { k_vg_kg: k, f_load_khz: 100.0, t_s_us: 50.0, ..LoopParams::default() };
        let y = looptheory::closed_loop_step(&p, 40)?;
        out.write(&format!("fig14_k{k}.csv"), step_csv(&y, p.loop_period_us()).as_bytes())?;
        let t = looptheory::loop_settling_time(&p)?;
        results.insert(format!("k{k}"), json!({ "settling_us": t, "target_us": target }));
        config.push(p);
    }
    Ok(FigureOutput {
        config: json!(config),
        tolerances: json!({ "settling_relative": 0.20, "band": looptheory::DEFAULT_TOLERANCE }),
        results: results.into(),
    })
}

fn fig15(out: &mut OutputSet) -> Result<FigureOutput> {
    let p = LoopParams { k_vg_kg: 0.6, ..LoopParams::default() };
    let pts = looptheory::sweep_adaptation_vs_ts(&p, &looptheory::default_ts_grid())?;
    let mut s = String::from("ts_us,t_adapt_us,feasible\n");
    for q in &pts {
        let _ = writeln!(s, "{},{},{}", q.ts_us, q.t_adapt_us, q.feasible);
    }
    out.write("fig15.csv", s.as_bytes())?;
    let xy: Vec<(f64, f64)> = pts.iter().filter(|q| q.feasible).map(|q| (q.ts_us, q.t_adapt_us)).collect();
    let fit = looptheory::linear_fit(&xy).ok_or_else(|| Error::Model("too few feasible points".into()))?;
    let min = pts
        .iter()
        .filter(|q| q.feasible)
        .min_by(|a, b| a.t_adapt_us.total_cmp(&b.t_adapt_us))
        .ok_or_else(|| Error::Model("no feasible point".into()))?;
    Ok(FigureOutput {
        config: json!(p),
        tolerances: json!({ "r2_min": 0.99, "min_t_adapt_relative": 0.25 }),
        results: json!({ "fit": fit, "min": min, "target_min_us": 150.0 }),
    })
}

fn trace_figure(out: &mut OutputSet, id: &str, sc: &Scenario, bundle: &Bundle) -> Result<FigureOutput> {
    let tr = sim::run_with(sc, bundle)?;
    let summary = sim::summarize(&tr, bundle)?;
    out.write(&format!("{id}.trace.csv"), sim::trace_csv(&tr).as_bytes())?;
    out.write_json(&format!("{id}.summary.json"), &summary)?;
    let targets = match id {
        "fig17a" => json!({ "appearance_us": 580.0, "disappearance_us": 170.0 }),
        "fig17b" => json!({ "appearance_us": 180.0, "disappearance_us": 170.0 }),
        "fig17c" => json!({ "appearance_us": 450.0, "disappearance_us": 170.0 }),
        "fig20" => json!({ "appearance_us": 770.0, "increase_us": 140.0, "disappearance_us": 250.0, "overshoot": false }),
        _ => json!({ "settled_vg": "same on up and down passes" }),
    };
    Ok(FigureOutput {
        config: serde_json::to_value(sc).map_err(|e| Error::Io(e.to_string()))?,
        tolerances: json!({ "time_relative": 0.25, "targets": targets }),
        results: json!({ "episodes": summary.episodes.len(), "halt": summary.halt }),
    })
}

fn fig18(out: &mut OutputSet, bundle: &Bundle) -> Result<FigureOutput> {
    let powers = recipes::settled_sweep_powers();
    let mut s = String::from("method,freq_ghz,pin_dbm,settled_vg_v,expected_vg_v,adaptation_time_us\n");
    let mut cases = Vec::new();
    for f in [3.0, 2.5] {
        for m in [Method::Incremental, Method::Lut, Method::OneShotIncremental] {
            for r in sim::settled_vg_sweep(m, f, &powers, bundle)? {
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{m},{f},{},{},{},{}",
                    r.pin_dbm,
                    r.settled_vg_v,
                    opt(r.expected_vg_v),
                    opt(r.adaptation_time_us)
                );
            }
            cases.push(json!({ "method": m.to_string(), "freq_ghz": f }));
        }
    }
    out.write("fig18.csv", s.as_bytes())?;
    Ok(FigureOutput {
        config: json!({ "powers_dbm": powers, "cases": cases, "calibration_freq_ghz": 3.0 }),
        tolerances: json!({ "lut_3ghz": "exact lattice match", "incremental": ">= expected", "lut_2_5ghz": "underestimates somewhere" }),
        results: serde_json::Value::Null,
    })
}

fn fig19(out: &mut OutputSet, bundle: &Bundle) -> Result<FigureOutput> {
    let sc = recipes::two_tone_sweep();
    let r = sim::compare_adaptive_vs_nominal(&sc, bundle)?;
    let mut s = String::from(
        "pin_dbm,adaptive_vg_v,adaptive_power_w,adaptive_im3_compression_dbc,adaptive_gain_compression_db,\
         nominal_vg_v,nominal_power_w,nominal_im3_compression_dbc,nominal_gain_compression_db\n",
    );
    for row in &r.rows {
        let (a, n) = (&row.adaptive, &row.nominal);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            row.pin_dbm,
            a.vg_v,
            a.power_w,
            a.im3_compression_dbc,
            a.gain_compression_db,
            n.vg_v,
            n.power_w,
            n.im3_compression_dbc,
            n.gain_compression_db
        );
    }
    out.write("fig19.csv", s.as_bytes())?;
    let dominates = r.adaptive_dominates(sc.controller.interference_threshold_dbm, r.nominal_p1db_dbm);
    Ok(FigureOutput {
        config: serde_json::to_value(&sc).map_err(|e| Error::Io(e.to_string()))?,
        tolerances: json!({ "adaptive_dominates": true }),
        results: json!({
            "adaptive_dominates": dominates,
            "adaptive_linear_range_dbm": r.adaptive_linear_range_dbm,
            "nominal_p1db_dbm": r.nominal_p1db_dbm,
        }),
    })
}

/// Writes the data behind figure `id` into `out`.
pub fn emit(id: &str, out: &mut OutputSet, bundle: &Bundle) -> Result<FigureOutput> {
    let scenario = |stem: &str| {
        recipes::bundled().into_iter().find(|(s, _)| *s == stem).map(|(_, sc)| sc).expect("bundled recipe")
    };
    match canonical_id(id)? {
        "fig14" => fig14(out),
        "fig15" => fig15(out),
        "fig18" => fig18(out, bundle),
        "fig19" => fig19(out, bundle),
        other => trace_figure(out, other, &scenario(other), bundle),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_resolve() {
        assert_eq!(canonical_id("fig11").unwrap(), "fig18");
        assert_eq!(canonical_id("fig19/12").unwrap(), "fig19");
        assert_eq!(canonical_id("fig17d").unwrap(), "fig17d");
        assert!(matches!(canonical_id("fig99"), Err(Error::Parse(_))));
    }

    #[test]
    fn trace_figures_have_recipes() {
        let stems: Vec<&str> = recipes::bundled().iter().map(|(s, _)| *s).collect();
        for id in FIGURE_IDS.iter().filter(|f| f.starts_with("fig17") || **f == "fig20") {
            assert!(stems.contains(id), "{id}");
        }
    }
}
