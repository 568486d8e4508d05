//! `rfadapt` command-line front end: runs scenarios and sweeps, emits the
//! data behind the reproduced figures, validates characterization files and
//! exposes the loop-theory analyses.

mod figs;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use rfadapt::characterization::{self, Bundle, Kind};
use rfadapt::control::{LatticeVg, Method};
use rfadapt::devices::{Board, ReceiverChain};
use rfadapt::looptheory::{self, LoopParams};
use rfadapt::sim::{self, Scenario, SweepRow};
use rfadapt::{Error, Result};

use output::{sha256_hex, OutputSet};

#[derive(Parser, Debug)]
#[command(name = "rfadapt", version, about = "Interference-adaptive LNA bias control simulator")]
struct Cli {
    /// Characterization directory; overrides $RFADAPT_DATA and the bundled data.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Overrides {
    /// Replaces the scenario's noise seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    board: Option<Board>,
    #[arg(long = "freq-ghz")]
    freq_ghz: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one scenario; writes trace CSV, summary JSON and a manifest.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Settled bias against input power, one simulation per point in parallel.
    Sweep {
        /// Template scenario; its events are replaced per point.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Range `start:stop:step` or a comma list, in dBm.
        #[arg(long, allow_hyphen_values = true, default_value = "-12:0:1")]
        powers: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Emit the data behind a figure (or `all`) as CSV with a manifest.
    Figs {
        id: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check characterization files rule by rule. Always exits 0 with a report.
    Validate {
        /// Files to check; defaults to the active data set.
        paths: Vec<PathBuf>,
        /// Dataset kind (lna, ed, coupler); inferred from the file name if absent.
        #[arg(long)]
        kind: Option<Kind>,
    },
    /// Loop-theory analyses: step response, poles, and adaptation time vs T_s.
    Loop {
        #[arg(long, default_value_t = 0.6)]
        k: f64,
        #[arg(long = "f-load-khz", default_value_t = 100.0)]
        f_load_khz: f64,
        #[arg(long = "ts-us", default_value_t = 50.0)]
        ts_us: f64,
        #[arg(long = "tp-us", default_value_t = 0.0)]
        tp_us: f64,
        #[arg(long, default_value_t = 40)]
        samples: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

struct Data {
    bundle: Bundle,
    source: String,
    fingerprint: String,
}

fn load_data(flag: Option<&Path>) -> Result<Data> {
    let dir = flag.map(Path::to_path_buf).or_else(|| std::env::var_os(characterization::DATA_ENV).map(PathBuf::from));
    match dir {
        Some(dir) => {
            // Fail fast: every file must exist before anything runs.
            let mut texts = String::new();
            for (p, _) in Bundle::paths(&dir) {
                let t = std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                texts.push_str(&t);
            }
            Ok(Data { bundle: Bundle::from_dir(&dir)?, source: dir.display().to_string(), fingerprint: sha256_hex(texts.as_bytes()) })
        }
        None => {
            let texts: String = [characterization::LNA_FILE, characterization::ED1_FILE, characterization::ED2_FILE, characterization::COUPLER_FILE]
                .iter()
                .filter_map(|f| Bundle::bundled_text(f))
                .collect();
            Ok(Data { bundle: Bundle::bundled(), source: "bundled".into(), fingerprint: sha256_hex(texts.as_bytes()) })
        }
    }
}

fn load_scenario(path: &Path, o: &Overrides) -> Result<Scenario> {
    let mut sc = Scenario::load(path)?;
    if let Some(s) = o.seed {
        sc.rng_seed = s;
    }
    if let Some(m) = o.method {
        sc.controller.method = m;
    }
    if let Some(b) = o.board {
        sc.board = b;
    }
    if let Some(f) = o.freq_ghz {
        sc.frequency_ghz = f;
    }
    if let Some(lut) = &sc.controller.lut_path {
        let resolved = if lut.is_relative() { path.parent().unwrap_or(Path::new(".")).join(lut) } else { lut.clone() };
        if !resolved.exists() {
            return Err(Error::Io(format!("{}: LUT file not found", resolved.display())));
        }
        sc.controller.lut_path = Some(resolved);
    }
    sc.validate()?;
    Ok(sc)
}

fn config_json(sc: &Scenario, data: &Data) -> serde_json::Value {
    json!({ "scenario": sc, "data_fingerprint": data.fingerprint })
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_run(scenario: &Path, out: &Path, o: &Overrides, data: &Data) -> Result<Option<Error>> {
    let sc = load_scenario(scenario, o)?;
    let stem = file_stem(scenario);
    let tr = sim::run_with(&sc, &data.bundle)?;
    let summary = sim::summarize(&tr, &data.bundle)?;
    let mut set = OutputSet::new(out);
    set.write(&format!("{stem}.trace.csv"), sim::trace_csv(&tr).as_bytes())?;
    set.write_json(&format!("{stem}.summary.json"), &summary)?;
    let times: Vec<_> = summary.episodes.iter().map(|e| json!({ "kind": e.kind, "edge_t_us": e.edge_t_us, "adaptation_time_us": e.adaptation_time_us })).collect();
    set.finish(
        &format!("{stem}.manifest.json"),
        format!("run --scenario {}", scenario.display()),
        &config_json(&sc, data),
        sc.rng_seed,
        &data.source,
        serde_json::Value::Null,
        json!({ "episodes": times }),
    )?;
    println!("{}", serde_json::to_string(&json!({ "scenario": stem, "episodes": times, "halt": summary.halt })).unwrap_or_default());
    Ok(tr.halt.map(|h| Error::Model(format!("simulation halted at {} us: {}", h.t_us, h.message))))
}

fn parse_powers(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Parse(format!("powers '{s}': expected start:stop:step or a comma list"));
    if s.contains(':') {
        let v: Vec<f64> = s.split(':').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        let [a, b, step] = v[..] else { return Err(bad()) };
        if step.is_nan() || step <= 0.0 || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| a + step * i as f64).collect())
    } else {
        s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect()
    }
}

fn cmd_sweep(template: Option<&Path>, powers: &str, out: &Path, o: &Overrides, data: &Data) -> Result<()> {
    let powers = parse_powers(powers)?;
    let mut tpl = match template {
        Some(p) => load_scenario(p, o)?,
        None => {
            let method = o.method.unwrap_or(Method::Incremental);
            let board = o.board.unwrap_or(if method == Method::FfFb { Board::FfFb } else { Board::FeedbackOnly });
            let mut sc = Scenario::new(&format!("sweep-{method}"), board, o.freq_ghz.unwrap_or(3.0), 1.0, Vec::new());
            sc.controller.method = method;
            sc.rng_seed = o.seed.unwrap_or(0);
            sc
        }
    };
    tpl.events.clear();
    let chain = ReceiverChain::with_config(&data.bundle, tpl.board, &tpl.devices);
    let points: Vec<(Scenario, String)> = powers
        .iter()
        .map(|&p| (sim::sweep_point_scenario(&tpl, p), format!("points/{p}dBm.trace.csv")))
        .collect();
    // Each run owns its state and its output file; only the bundle is shared.
    let rows: Vec<(SweepRow, String, String)> = points
        .par_iter()
        .map(|(sc, name)| -> Result<(SweepRow, String, String)> {
            let tr = sim::run_with(sc, &data.bundle)?;
            if let Some(h) = &tr.halt {
                return Err(Error::Model(format!("{}: halted at {} us: {}", sc.name, h.t_us, h.message)));
            }
            let csv = sim::trace_csv(&tr);
            output::write_atomic(&out.join(name), csv.as_bytes())?;
            let pin = sc.events[0].dbm;
            let row = SweepRow {
                pin_dbm: pin,
                settled_vg_v: tr.decisions.last().map_or(tr.rows[0].vg_cmd_v, |d| d.vg_cmd_v),
                expected_vg_v: sim::expected_vg(&chain, pin, sc.frequency_ghz)?.map(LatticeVg::volts),
                adaptation_time_us: sim::measure_adaptation_time(&tr, sc.events[0].t_us).ok(),
            };
            Ok((row, name.clone(), sha256_hex(csv.as_bytes())))
        })
        .collect::<Result<_>>()?;
    let mut s = String::from("pin_dbm,settled_vg_v,expected_vg_v,adaptation_time_us\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (r, _, _) in &rows {
        let _ = writeln!(s, "{},{},{},{}", r.pin_dbm, r.settled_vg_v, opt(r.expected_vg_v), opt(r.adaptation_time_us));
    }
    let mut set = OutputSet::new(out);
    set.write("sweep.csv", s.as_bytes())?;
    let traces: Vec<_> = rows.iter().map(|(_, n, h)| json!({ "path": n, "sha256": h })).collect();
    set.finish(
        "sweep.manifest.json",
        format!("sweep --powers {}", powers.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
        &json!({ "template": tpl, "powers": powers, "data_fingerprint": data.fingerprint }),
        tpl.rng_seed,
        &data.source,
        serde_json::Value::Null,
        json!({ "point_traces": traces }),
    )?;
    print!("{s}");
    Ok(())
}

fn cmd_figs(id: &str, out: &Path, data: &Data) -> Result<()> {
    let ids: Vec<&str> = if id == "all" { figs::FIGURE_IDS.to_vec() } else { vec![figs::canonical_id(id)?] };
    for id in ids {
        let mut set = OutputSet::new(out);
        let fig = figs::emit(id, &mut set, &data.bundle)?;
        let seed = fig.config.get("rng_seed").and_then(serde_json::Value::as_u64).unwrap_or(0);
        set.finish(
            &format!("{id}.manifest.json"),
            format!("figs {id}"),
            &json!({ "figure": id, "config": fig.config, "data_fingerprint": data.fingerprint }),
            seed,
            &data.source,
            fig.tolerances,
            fig.results,
        )?;
        println!("{id}: written to {}", out.display());
    }
    Ok(())
}

fn infer_kind(path: &Path) -> Option<Kind> {
    let name = path.file_name()?.to_string_lossy().to_ascii_lowercase();
    if name.contains("lna") {
        Some(Kind::Lna)
    } else if name.contains("coupler") {
        Some(Kind::Coupler)
    } else if name.starts_with("ed") {
        Some(Kind::Ed)
    } else {
        None
    }
}

fn validate_text(label: &str, text: &str, kind: Kind) -> Vec<(bool, String)> {
    match characterization::parse_characterization_unchecked(text, kind) {
        Err(e) => vec![(false, format!("{label} {}: {e}", e.kind()))],
        Ok(set) => set
            .rules()
            .into_iter()
            .map(|r| (r.passed, format!("{label} {}: {}", r.rule, r.detail)))
            .collect(),
    }
}

fn cmd_validate(paths: &[PathBuf], kind: Option<Kind>, data_flag: Option<&Path>) -> usize {
    let mut lines = Vec::new();
    let dir = data_flag.map(Path::to_path_buf).or_else(|| std::env::var_os(characterization::DATA_ENV).map(PathBuf::from));
    let targets: Vec<(PathBuf, Option<Kind>)> = if !paths.is_empty() {
        paths.iter().map(|p| (p.clone(), kind.or_else(|| infer_kind(p)))).collect()
    } else if let Some(dir) = &dir {
        Bundle::paths(dir).into_iter().map(|(p, k)| (p, Some(k))).collect()
    } else {
        Vec::new()
    };
    if paths.is_empty() && dir.is_none() {
        for (name, k) in [
            (characterization::LNA_FILE, Kind::Lna),
            (characterization::ED1_FILE, Kind::Ed),
            (characterization::ED2_FILE, Kind::Ed),
            (characterization::COUPLER_FILE, Kind::Coupler),
        ] {
            let text = Bundle::bundled_text(name).unwrap_or_default();
            lines.extend(validate_text(&format!("bundled/{name}"), text, k));
        }
    }
    for (p, k) in targets {
        let label = p.display().to_string();
        let Some(k) = k else {
            lines.push((false, format!("{label} kind: cannot infer dataset kind, pass --kind")));
            continue;
        };
        match std::fs::read_to_string(&p) {
            Ok(text) => lines.extend(validate_text(&label, &text, k)),
            Err(e) => lines.push((false, format!("{label} IoError: {e}"))),
        }
    }
    let mut failed = 0;
    for (ok, l) in &lines {
        println!("{} {l}", if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("{} rules, {failed} failed", lines.len());
    failed
}

fn cmd_loop(p: LoopParams, samples: usize, out: &Path) -> Result<()> {
    let mut set = OutputSet::new(out);
    let poles = looptheory::pole_magnitudes(&p);
    let step = looptheory::closed_loop_step(&p, samples);
    let settling = looptheory::loop_settling_time(&p).ok();
    if let Ok(y) = &step {
        let mut s = String::from("t_us,value\n");
        for (i, v) in y.iter().enumerate() {
            let _ = writeln!(s, "{},{}", i as f64 * p.loop_period_us(), v);
        }
        set.write("loop_step.csv", s.as_bytes())?;
    }
    let pts = looptheory::sweep_adaptation_vs_ts(&p, &looptheory::default_ts_grid())?;
    let mut s = String::from("ts_us,t_adapt_us,feasible\n");
    for q in &pts {
        let _ = writeln!(s, "{},{},{}", q.ts_us, q.t_adapt_us, q.feasible);
    }
    set.write("loop_sweep.csv", s.as_bytes())?;
    let n = settling.map(|t| (t / p.loop_period_us()).round() as u32);
    let report = json!({
        "params": p,
        "pole_magnitudes": poles,
        "stable": step.is_ok(),
        "settling_time_us": settling,
        "steps": n,
        "adaptation_time": n.map(|n| looptheory::adaptation_time(n, &p)),
    });
    set.write_json("loop.json", &report)?;
    set.finish("loop.manifest.json", "loop".into(), &json!(p), 0, "none", serde_json::Value::Null, serde_json::Value::Null)?;
    println!("{report}");
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Parse(_) | Error::Scenario(_) | Error::Range(_) | Error::InvariantViolation(_) => 2,
        _ => 1,
    }
}

fn fail(e: &Error) -> ExitCode {
    let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
    eprintln!("{body}");
    ExitCode::from(exit_code(e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Validate { paths, kind } = &cli.command {
        cmd_validate(paths, *kind, cli.data.as_deref());
        return ExitCode::SUCCESS;
    }
    if let Command::Loop { k, f_load_khz, ts_us, tp_us, samples, out } = &cli.command {
        let p = LoopParams { k_vg_kg: *k, f_load_khz: *f_load_khz, t_s_us: *ts_us, t_process_us: *tp_us, ..LoopParams::default() };
        return cmd_loop(p, *samples, out).map_or_else(|e| fail(&e), |()| ExitCode::SUCCESS);
    }
    let data = match load_data(cli.data.as_deref()) {
        Ok(d) => d,
        Err(e) => return fail(&e),
    };
    let res = match &cli.command {
        Command::Run { scenario, out, overrides } => match cmd_run(scenario, out, overrides, &data) {
            Ok(None) => Ok(()),
            Ok(Some(halt)) => Err(halt),
            Err(e) => Err(e),
        },
        Command::Sweep { scenario, powers, out, overrides } => cmd_sweep(scenario.as_deref(), powers, out, overrides, &data),
        Command::Figs { id, out } => cmd_figs(id, out, &data),
        Command::Validate { .. } | Command::Loop { .. } => unreachable!("handled above"),
    };
    res.map_or_else(|e| fail(&e), |()| ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_ranges() {
        assert_eq!(parse_powers("-12:0:3").unwrap(), vec![-12.0, -9.0, -6.0, -3.0, 0.0]);
        assert_eq!(parse_powers("-5, -1").unwrap(), vec![-5.0, -1.0]);
        assert!(parse_powers("0:-1:1").is_err());
        assert!(parse_powers("a").is_err());
    }

    #[test]
    fn kinds_from_names() {
        assert_eq!(infer_kind(Path::new("x/lna_3ghz.csv")), Some(Kind::Lna));
        assert_eq!(infer_kind(Path::new("ed2.csv")), Some(Kind::Ed));
        assert_eq!(infer_kind(Path::new("coupler.csv")), Some(Kind::Coupler));
        assert_eq!(infer_kind(Path::new("other.csv")), None);
    }

    #[test]
    fn cli_parses() {
        Cli::command_check();
    }

    impl Cli {
        fn command_check() {
            use clap::CommandFactory;
            Cli::command().debug_assert();
        }
    }
}
