//! Device characterization tables: loading, validation and piecewise-linear
//! interpolation.
//!
//! Three CSV layouts are understood (UTF-8, header row, `.` decimal):
//!
//! * LNA: `freq_ghz,vg_v,vd_v,gain_db,id_ma,p1db_in_dbm,nf_db`
//! * envelope detector: `freq_ghz,pin_dbm,vout_v` plus `# rise_time_us=<x>`
//!   (optional `# vout_min_v=`, `# vout_max_v=`)
//! * coupler: `freq_ghz,s21_db,s31_db,s11_db`
//!
//! Values are written back with Rust's shortest round-trip float formatting,
//! so load -> write -> load is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest and highest gate bias the front-end is allowed to use.
pub const VG_OPERATING_MIN: f64 = -2.7;
pub const VG_OPERATING_MAX: f64 = -2.1;
pub const VD_NOMINAL: f64 = 10.0;

const HULL_EPS: f64 = 1e-9;
const GAIN_SPAN_LIMIT_DB: f64 = 4.0;
const COUPLER_TOL_DB: f64 = 0.05;

/// Rectangular grid over `axes.len()` dimensions, last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Parse("grid needs at least one axis".into()));
        }
        for (i, ax) in axes.iter().enumerate() {
            if ax.is_empty() {
                return Err(Error::Parse(format!("axis {i} is empty")));
            }
            if ax.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Parse(format!("axis {i} is not strictly increasing")));
            }
        }
        let n: usize = axes.iter().map(Vec::len).product();
        if n != values.len() {
            return Err(Error::Parse(format!(
                "grid holds {} values, axes imply {n}",
                values.len()
            )));
        }
        Ok(Self { axes, values })
    }

    pub fn axis(&self, i: usize) -> &[f64] {
        &self.axes[i]
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn flat(&self, idx: &[usize]) -> usize {
        let mut k = 0;
        for (d, &i) in idx.iter().enumerate() {
            k = k * self.axes[d].len() + i;
        }
        k
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.flat(idx)]
    }

    /// Multilinear interpolation. Exact at nodes, never extrapolates.
    pub fn interp(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.ndim() {
            return Err(Error::OutOfRange(format!(
                "query has {} coordinates, grid has {}",
                q.len(),
                self.ndim()
            )));
        }
        let mut seg = Vec::with_capacity(q.len());
        for (d, (&x, ax)) in q.iter().zip(&self.axes).enumerate() {
            seg.push(locate(ax, x).ok_or_else(|| {
                Error::OutOfRange(format!(
                    "coordinate {d} = {x} outside [{}, {}]",
                    ax[0],
                    ax[ax.len() - 1]
                ))
            })?);
        }
        let mut acc = 0.0;
        let mut idx = vec![0usize; q.len()];
        for corner in 0..(1usize << q.len()) {
            let mut w = 1.0;
            for (d, &(i, t)) in seg.iter().enumerate() {
                let hi = (corner >> d) & 1 == 1;
                if hi {
                    if t == 0.0 {
                        w = 0.0;
                        break;
                    }
                    idx[d] = i + 1;
                    w *= t;
                } else {
                    idx[d] = i;
                    w *= 1.0 - t;
                }
            }
            if w != 0.0 {
                acc += w * self.at(&idx);
            }
        }
        Ok(acc)
    }
}

/// Segment index and fractional position of `x` on `ax`.
fn locate(ax: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = ax.len();
    if !x.is_finite() || x < ax[0] - HULL_EPS || x > ax[n - 1] + HULL_EPS {
        return None;
    }
    if n == 1 {
        return Some((0, 0.0));
    }
    let x = x.clamp(ax[0], ax[n - 1]);
    // Largest i with ax[i] <= x, capped so that i + 1 is valid.
    let i = match ax.binary_search_by(|a| a.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    };
    let t = (x - ax[i]) / (ax[i + 1] - ax[i]);
    Some((i, t))
}

/// Free-function form of [`Grid::interp`].
pub fn interp(table: &Grid, query: &[f64]) -> Result<f64> {
    table.interp(query)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Lna,
    Ed,
    Coupler,
}

impl std::str::FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lna" => Ok(Kind::Lna),
            "ed" => Ok(Kind::Ed),
            "coupler" => Ok(Kind::Coupler),
            _ => Err(Error::Parse(format!("unknown characterization kind '{s}'"))),
        }
    }
}

/// Outcome of one named validation rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleCheck {
    pub rule: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    range_error: bool,
}

impl RuleCheck {
    fn new(rule: &'static str, passed: bool, detail: String) -> Self {
        Self { rule, passed, detail, range_error: false }
    }

    fn range(rule: &'static str, passed: bool, detail: String) -> Self {
        Self { rule, passed, detail, range_error: true }
    }

    fn into_error(self) -> Error {
        let msg = format!("{}: {}", self.rule, self.detail);
        if self.range_error {
            Error::Range(msg)
        } else {
            Error::InvariantViolation(msg)
        }
    }
}

fn first_failure(checks: Vec<RuleCheck>) -> Result<()> {
    match checks.into_iter().find(|c| !c.passed) {
        Some(c) => Err(c.into_error()),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// CSV plumbing

struct CsvText {
    meta: BTreeMap<String, String>,
    rows: Vec<Vec<f64>>,
}

fn read_csv(text: &str, columns: &[&str]) -> Result<CsvText> {
    let mut meta = BTreeMap::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let got: Vec<&str> = header.iter().collect();
    if got != columns {
        return Err(Error::Parse(format!(
            "expected columns {}, found {}",
            columns.join(","),
            got.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", n + 2)))?;
        let mut row = Vec::with_capacity(columns.len());
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Parse(format!("row {}: column {} = '{field}' is not a number", n + 2, columns[c]))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("row {}: non-finite {}", n + 2, columns[c])));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok(CsvText { meta, rows })
}

fn unique_sorted(vals: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = vals.collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

fn pos(ax: &[f64], x: f64) -> usize {
    ax.binary_search_by(|a| a.partial_cmp(&x).unwrap()).expect("value taken from this axis")
}

/// Axis values per key column, and value columns flattened in row-major key order.
type Dense = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Scatter rows into a dense grid over `key_cols`, one value vector per
/// `val_cols` entry. Fails unless every key combination occurs exactly once.
fn dense(rows: &[Vec<f64>], key_cols: &[usize], val_cols: &[usize]) -> Result<Dense> {
    let axes: Vec<Vec<f64>> = key_cols.iter().map(|&c| unique_sorted(rows.iter().map(|r| r[c]))).collect();
    let n: usize = axes.iter().map(Vec::len).product();
    if rows.len() != n {
        return Err(Error::Parse(format!("grid is not rectangular: {} rows for {n} key combinations", rows.len())));
    }
    let mut vals = vec![vec![f64::NAN; n]; val_cols.len()];
    let mut seen = vec![false; n];
    for r in rows {
        let mut k = 0;
        for (d, &c) in key_cols.iter().enumerate() {
            k = k * axes[d].len() + pos(&axes[d], r[c]);
        }
        if seen[k] {
            return Err(Error::Parse(format!("duplicate grid point {:?}", key_cols.iter().map(|&c| r[c]).collect::<Vec<_>>())));
        }
        seen[k] = true;
        for (j, &c) in val_cols.iter().enumerate() {
            vals[j][k] = r[c];
        }
    }
    Ok((axes, vals))
}

fn num(x: f64) -> String {
    format!("{x}")
}

// ---------------------------------------------------------------------------
// LNA

#[derive(Debug, Clone, PartialEq)]
pub struct LnaCharacterization {
    /// (freq GHz, V_G V, V_D V) -> gain dB
    pub gain_table: Grid,
    /// (V_G V, V_D V) -> I_D mA
    pub id_table: Grid,
    /// (freq GHz, V_G V) -> P1dB,IN dBm
    pub p1db_in_table: Grid,
    /// (freq GHz, V_G V) -> NF dB
    pub nf_table: Grid,
    pub vg_range: (f64, f64),
    pub vd_nominal: f64,
}

const LNA_COLUMNS: [&str; 7] = ["freq_ghz", "vg_v", "vd_v", "gain_db", "id_ma", "p1db_in_dbm", "nf_db"];

impl LnaCharacterization {
    /// Parse without running the invariant rules. Structural problems
    /// (shape, duplicated points, bias-independent columns that vary) are
    /// still reported.
    pub fn parse_unchecked(text: &str) -> Result<Self> {
        let csv = read_csv(text, &LNA_COLUMNS)?;
        let (axes, vals) = dense(&csv.rows, &[0, 1, 2], &[3, 4, 5, 6])?;
        let (fs, vgs, vds) = (&axes[0], &axes[1], &axes[2]);
        let (nf_, nv, nd) = (fs.len(), vgs.len(), vds.len());
        let at = |i: usize, j: usize, k: usize| (i * nv + j) * nd + k;

        let mut id = vec![0.0; nv * nd];
        let mut p1 = vec![0.0; nf_ * nv];
        let mut nf = vec![0.0; nf_ * nv];
        for i in 0..nf_ {
            for j in 0..nv {
                for k in 0..nd {
                    let x = at(i, j, k);
                    if i == 0 {
                        id[j * nd + k] = vals[1][x];
                    } else if vals[1][x] != id[j * nd + k] {
                        return Err(Error::InvariantViolation(format!(
                            "id_ma varies with frequency at vg={} vd={}",
                            vgs[j], vds[k]
                        )));
                    }
                    if k == 0 {
                        p1[i * nv + j] = vals[2][x];
                        nf[i * nv + j] = vals[3][x];
                    } else if vals[2][x] != p1[i * nv + j] || vals[3][x] != nf[i * nv + j] {
                        return Err(Error::InvariantViolation(format!(
                            "p1db_in_dbm/nf_db vary with vd at f={} vg={}",
                            fs[i], vgs[j]
                        )));
                    }
                }
            }
        }
        let vd_nominal = if vds.contains(&VD_NOMINAL) { VD_NOMINAL } else { vds[vds.len() / 2] };
        Ok(Self {
            gain_table: Grid::new(axes.clone(), vals[0].clone())?,
            id_table: Grid::new(vec![vgs.clone(), vds.clone()], id)?,
            p1db_in_table: Grid::new(vec![fs.clone(), vgs.clone()], p1)?,
            nf_table: Grid::new(vec![fs.clone(), vgs.clone()], nf)?,
            vg_range: (vgs[0], vgs[nv - 1]),
            vd_nominal,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c = Self::parse_unchecked(text)?;
        first_failure(c.rules())?;
        Ok(c)
    }

    pub fn freqs(&self) -> &[f64] {
        self.p1db_in_table.axis(0)
    }

    pub fn vgs(&self) -> &[f64] {
        self.p1db_in_table.axis(1)
    }

    pub fn vds(&self) -> &[f64] {
        self.id_table.axis(1)
    }

    pub fn gain(&self, f: f64, vg: f64, vd: f64) -> Result<f64> {
        self.gain_table.interp(&[f, vg, vd])
    }

    pub fn id_ma(&self, vg: f64, vd: f64) -> Result<f64> {
        self.id_table.interp(&[vg, vd])
    }

    pub fn p1db_in(&self, f: f64, vg: f64) -> Result<f64> {
        self.p1db_in_table.interp(&[f, vg])
    }

    pub fn nf(&self, f: f64, vg: f64) -> Result<f64> {
        self.nf_table.interp(&[f, vg])
    }

    /// Every invariant as a named pass/fail entry.
    pub fn rules(&self) -> Vec<RuleCheck> {
        let fs = self.freqs();
        let vgs = self.vgs();
        let vds = self.vds();
        let mut out = Vec::new();

        let (lo, hi) = self.vg_range;
        out.push(RuleCheck::range(
            "vg_grid_covers_operating_range",
            lo <= VG_OPERATING_MIN + HULL_EPS && hi >= VG_OPERATING_MAX - HULL_EPS,
            format!("grid V_G [{lo}, {hi}] must cover [{VG_OPERATING_MIN}, {VG_OPERATING_MAX}]"),
        ));
        out.push(RuleCheck::new(
            "vg_range_within_operating_limits",
            lo >= VG_OPERATING_MIN - HULL_EPS && hi <= VG_OPERATING_MAX + HULL_EPS,
            format!("grid V_G [{lo}, {hi}] must lie inside [{VG_OPERATING_MIN}, {VG_OPERATING_MAX}]"),
        ));
        out.push(RuleCheck::range(
            "vd_nominal_on_grid",
            vds.contains(&VD_NOMINAL),
            format!("V_D grid {vds:?} must contain {VD_NOMINAL} V"),
        ));

        let mut bad = None;
        'p1: for (i, f) in fs.iter().enumerate() {
            for j in 1..vgs.len() {
                if self.p1db_in_table.at(&[i, j]) < self.p1db_in_table.at(&[i, j - 1]) {
                    bad = Some(format!("P1dB,IN decreases between V_G {} and {} at {f} GHz", vgs[j - 1], vgs[j]));
                    break 'p1;
                }
            }
        }
        out.push(RuleCheck::new("p1db_monotone_in_vg", bad.is_none(), bad.unwrap_or_else(|| "ok".into())));

        let mut bad = None;
        'id: for (k, vd) in vds.iter().enumerate() {
            for j in 1..vgs.len() {
                if self.id_table.at(&[j, k]) <= self.id_table.at(&[j - 1, k]) {
                    bad = Some(format!("I_D not increasing between V_G {} and {} at V_D {vd}", vgs[j - 1], vgs[j]));
                    break 'id;
                }
            }
        }
        out.push(RuleCheck::new("id_strictly_increasing_in_vg", bad.is_none(), bad.unwrap_or_else(|| "ok".into())));

        let mut worst = 0.0f64;
        for i in 0..fs.len() {
            for k in 0..vds.len() {
                let g: Vec<f64> = (0..vgs.len()).map(|j| self.gain_table.at(&[i, j, k])).collect();
                let span = g.iter().cloned().fold(f64::MIN, f64::max) - g.iter().cloned().fold(f64::MAX, f64::min);
                worst = worst.max(span);
            }
        }
        out.push(RuleCheck::new(
            "gain_span_over_vg_below_4db",
            worst < GAIN_SPAN_LIMIT_DB,
            format!("largest gain span over V_G is {worst:.3} dB"),
        ));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = LNA_COLUMNS.join(",");
        s.push('\n');
        for (i, f) in self.freqs().iter().enumerate() {
            for (j, vg) in self.vgs().iter().enumerate() {
                for (k, vd) in self.vds().iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        num(*f),
                        num(*vg),
                        num(*vd),
                        num(self.gain_table.at(&[i, j, k])),
                        num(self.id_table.at(&[j, k])),
                        num(self.p1db_in_table.at(&[i, j])),
                        num(self.nf_table.at(&[i, j]))
                    );
                }
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Envelope detector

#[derive(Debug, Clone, PartialEq)]
pub struct EdCharacterization {
    /// (freq GHz, input dBm) -> output V
    pub curve: Grid,
    pub rise_time_us: f64,
    pub input_range: (f64, f64),
    pub output_range: (f64, f64),
}

const ED_COLUMNS: [&str; 3] = ["freq_ghz", "pin_dbm", "vout_v"];

impl EdCharacterization {
    pub fn parse_unchecked(text: &str) -> Result<Self> {
        let csv = read_csv(text, &ED_COLUMNS)?;
        let meta = |key: &str| -> Result<Option<f64>> {
            csv.meta
                .get(key)
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("metadata {key}='{v}' is not a number"))))
                .transpose()
        };
        let rise_time_us = meta("rise_time_us")?.ok_or_else(|| Error::Parse("missing '# rise_time_us=' line".into()))?;
        let (axes, vals) = dense(&csv.rows, &[0, 1], &[2])?;
        let lo = vals[0].iter().cloned().fold(f64::MAX, f64::min);
        let hi = vals[0].iter().cloned().fold(f64::MIN, f64::max);
        let output_range = (meta("vout_min_v")?.unwrap_or(lo), meta("vout_max_v")?.unwrap_or(hi));
        let pins = &axes[1];
        let input_range = (pins[0], pins[pins.len() - 1]);
        Ok(Self { curve: Grid::new(axes, vals[0].clone())?, rise_time_us, input_range, output_range })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c = Self::parse_unchecked(text)?;
        first_failure(c.rules())?;
        Ok(c)
    }

    pub fn freqs(&self) -> &[f64] {
        self.curve.axis(0)
    }

    pub fn pins(&self) -> &[f64] {
        self.curve.axis(1)
    }

    pub fn rules(&self) -> Vec<RuleCheck> {
        let mut out = Vec::new();
        let np = self.pins().len();
        let mut bad = None;
        'c: for (i, f) in self.freqs().iter().enumerate() {
            for j in 1..np {
                if self.curve.at(&[i, j]) <= self.curve.at(&[i, j - 1]) {
                    bad = Some(format!("output not increasing at {f} GHz, {} dBm", self.pins()[j]));
                    break 'c;
                }
            }
        }
        out.push(RuleCheck::new("curve_strictly_increasing", bad.is_none(), bad.unwrap_or_else(|| "ok".into())));
        let (vlo, vhi) = self.output_range;
        let inside = self.curve.values().iter().all(|&v| v >= vlo - HULL_EPS && v <= vhi + HULL_EPS);
        out.push(RuleCheck::new(
            "output_within_range",
            inside,
            format!("all outputs must lie in [{vlo}, {vhi}] V"),
        ));
        out.push(RuleCheck::new(
            "rise_time_positive",
            self.rise_time_us > 0.0,
            format!("rise time {} us", self.rise_time_us),
        ));
        out
    }

    /// Static transfer curve value.
    pub fn vout(&self, pin_dbm: f64, f_ghz: f64) -> Result<f64> {
        self.curve.interp(&[f_ghz, pin_dbm])
    }

    /// Input power producing `v` on the interpolated curve at `f_ghz`;
    /// clamps to the input range when `v` lies outside the curve's span.
    pub fn inverse(&self, v: f64, f_ghz: f64) -> Result<f64> {
        let pins = self.pins();
        let col: Vec<f64> = pins.iter().map(|&p| self.vout(p, f_ghz)).collect::<Result<_>>()?;
        if v <= col[0] {
            return Ok(pins[0]);
        }
        let n = col.len();
        if v >= col[n - 1] {
            return Ok(pins[n - 1]);
        }
        // The interpolated column is piecewise linear between pin nodes.
        let j = col.partition_point(|&c| c < v);
        let (p0, p1, v0, v1) = (pins[j - 1], pins[j], col[j - 1], col[j]);
        Ok(p0 + (p1 - p0) * (v - v0) / (v1 - v0))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# rise_time_us={}", num(self.rise_time_us));
        let _ = writeln!(s, "# vout_min_v={}", num(self.output_range.0));
        let _ = writeln!(s, "# vout_max_v={}", num(self.output_range.1));
        s.push_str(&ED_COLUMNS.join(","));
        s.push('\n');
        for (i, f) in self.freqs().iter().enumerate() {
            for (j, p) in self.pins().iter().enumerate() {
                let _ = writeln!(s, "{},{},{}", num(*f), num(*p), num(self.curve.at(&[i, j])));
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Coupler

#[derive(Debug, Clone, PartialEq)]
pub struct CouplerCharacterization {
    pub s21: Grid,
    pub s31: Grid,
    pub s11: Grid,
}

const COUPLER_COLUMNS: [&str; 4] = ["freq_ghz", "s21_db", "s31_db", "s11_db"];

impl CouplerCharacterization {
    pub fn parse_unchecked(text: &str) -> Result<Self> {
        let csv = read_csv(text, &COUPLER_COLUMNS)?;
        let (axes, vals) = dense(&csv.rows, &[0], &[1, 2, 3])?;
        Ok(Self {
            s21: Grid::new(axes.clone(), vals[0].clone())?,
            s31: Grid::new(axes.clone(), vals[1].clone())?,
            s11: Grid::new(axes, vals[2].clone())?,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c = Self::parse_unchecked(text)?;
        first_failure(c.rules())?;
        Ok(c)
    }

    pub fn freqs(&self) -> &[f64] {
        self.s21.axis(0)
    }

    /// Through-port loss, positive dB.
    pub fn insertion_loss_db(&self, f: f64) -> Result<f64> {
        Ok(-self.s21.interp(&[f])?)
    }

    /// Coupled-port attenuation, positive dB.
    pub fn coupling_db(&self, f: f64) -> Result<f64> {
        Ok(-self.s31.interp(&[f])?)
    }

    /// S11 in dB (negative).
    pub fn return_loss_db(&self, f: f64) -> Result<f64> {
        self.s11.interp(&[f])
    }

    pub fn rules(&self) -> Vec<RuleCheck> {
        let t = COUPLER_TOL_DB;
        let il: Vec<f64> = self.s21.values().iter().map(|v| -v).collect();
        let cp: Vec<f64> = self.s31.values().iter().map(|v| -v).collect();
        let within = |xs: &[f64], lo: f64, hi: f64| xs.iter().all(|&x| x >= lo - t && x <= hi + t);
        vec![
            RuleCheck::new(
                "insertion_loss_within_0.18_0.42_db",
                within(&il, 0.18, 0.42),
                format!("insertion loss spans {:?}", span(&il)),
            ),
            RuleCheck::new(
                "coupling_within_16_20.5_db",
                within(&cp, 16.0, 20.5),
                format!("coupling spans {:?}", span(&cp)),
            ),
            RuleCheck::new(
                "return_loss_below_minus_19_db",
                self.s11.values().iter().all(|&x| x <= -19.0 + t),
                format!("S11 spans {:?}", span(self.s11.values())),
            ),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = COUPLER_COLUMNS.join(",");
        s.push('\n');
        for (i, f) in self.freqs().iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                num(*f),
                num(self.s21.at(&[i])),
                num(self.s31.at(&[i])),
                num(self.s11.at(&[i]))
            );
        }
        s
    }
}

fn span(xs: &[f64]) -> (f64, f64) {
    (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max))
}

// ---------------------------------------------------------------------------
// Sets and files

#[derive(Debug, Clone, PartialEq)]
pub enum CharacterizationSet {
    Lna(LnaCharacterization),
    Ed(EdCharacterization),
    Coupler(CouplerCharacterization),
}

impl CharacterizationSet {
    pub fn kind(&self) -> Kind {
        match self {
            Self::Lna(_) => Kind::Lna,
            Self::Ed(_) => Kind::Ed,
            Self::Coupler(_) => Kind::Coupler,
        }
    }

    pub fn rules(&self) -> Vec<RuleCheck> {
        match self {
            Self::Lna(c) => c.rules(),
            Self::Ed(c) => c.rules(),
            Self::Coupler(c) => c.rules(),
        }
    }

    pub fn to_csv(&self) -> String {
        match self {
            Self::Lna(c) => c.to_csv(),
            Self::Ed(c) => c.to_csv(),
            Self::Coupler(c) => c.to_csv(),
        }
    }
}

pub fn parse_characterization(text: &str, kind: Kind) -> Result<CharacterizationSet> {
    Ok(match kind {
        Kind::Lna => CharacterizationSet::Lna(LnaCharacterization::parse(text)?),
        Kind::Ed => CharacterizationSet::Ed(EdCharacterization::parse(text)?),
        Kind::Coupler => CharacterizationSet::Coupler(CouplerCharacterization::parse(text)?),
    })
}

/// Parse structure only; pair with [`CharacterizationSet::rules`] to get a
/// per-rule report instead of the first failure.
pub fn parse_characterization_unchecked(text: &str, kind: Kind) -> Result<CharacterizationSet> {
    Ok(match kind {
        Kind::Lna => CharacterizationSet::Lna(LnaCharacterization::parse_unchecked(text)?),
        Kind::Ed => CharacterizationSet::Ed(EdCharacterization::parse_unchecked(text)?),
        Kind::Coupler => CharacterizationSet::Coupler(CouplerCharacterization::parse_unchecked(text)?),
    })
}

pub fn load_characterization(path: &Path, kind: Kind) -> Result<CharacterizationSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_characterization(&text, kind)
}

pub fn write_characterization(set: &CharacterizationSet, path: &Path) -> Result<()> {
    std::fs::write(path, set.to_csv()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Everything the receiver chain needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub lna: LnaCharacterization,
    pub ed1: EdCharacterization,
    pub ed2: EdCharacterization,
    pub coupler: CouplerCharacterization,
}

pub const LNA_FILE: &str = "lna_3ghz.csv";
pub const ED1_FILE: &str = "ed1.csv";
pub const ED2_FILE: &str = "ed2.csv";
pub const COUPLER_FILE: &str = "coupler.csv";
pub const DATA_ENV: &str = "RFADAPT_DATA";

const BUNDLED_LNA: &str = include_str!("../data/lna_3ghz.csv");
const BUNDLED_ED1: &str = include_str!("../data/ed1.csv");
const BUNDLED_ED2: &str = include_str!("../data/ed2.csv");
const BUNDLED_COUPLER: &str = include_str!("../data/coupler.csv");

impl Bundle {
    /// The datasets compiled into the library.
    pub fn bundled() -> Self {
        Self {
            lna: LnaCharacterization::parse(BUNDLED_LNA).expect("bundled LNA data is valid"),
            ed1: EdCharacterization::parse(BUNDLED_ED1).expect("bundled ED1 data is valid"),
            ed2: EdCharacterization::parse(BUNDLED_ED2).expect("bundled ED2 data is valid"),
            coupler: CouplerCharacterization::parse(BUNDLED_COUPLER).expect("bundled coupler data is valid"),
        }
    }

    pub fn bundled_text(kind_file: &str) -> Option<&'static str> {
        match kind_file {
            LNA_FILE => Some(BUNDLED_LNA),
            ED1_FILE => Some(BUNDLED_ED1),
            ED2_FILE => Some(BUNDLED_ED2),
            COUPLER_FILE => Some(BUNDLED_COUPLER),
            _ => None,
        }
    }

    pub fn paths(dir: &Path) -> [(PathBuf, Kind); 4] {
        [
            (dir.join(LNA_FILE), Kind::Lna),
            (dir.join(ED1_FILE), Kind::Ed),
            (dir.join(ED2_FILE), Kind::Ed),
            (dir.join(COUPLER_FILE), Kind::Coupler),
        ]
    }

    pub fn from_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
        };
        Ok(Self {
            lna: LnaCharacterization::parse(&read(LNA_FILE)?)?,
            ed1: EdCharacterization::parse(&read(ED1_FILE)?)?,
            ed2: EdCharacterization::parse(&read(ED2_FILE)?)?,
            coupler: CouplerCharacterization::parse(&read(COUPLER_FILE)?)?,
        })
    }

    /// `$RFADAPT_DATA` if set, otherwise the compiled-in data.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(DATA_ENV) {
            Some(dir) => Self::from_dir(Path::new(&dir)),
            None => Ok(Self::bundled()),
        }
    }
}
