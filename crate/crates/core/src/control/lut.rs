use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::lattice::{parse_lattice, LatticeVg};
use super::threshold::board_input_for;
use crate::devices::ReceiverChain;
use crate::error::{Error, Result};

/// One code interval of a LUT row, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LutBin {
    pub code_lo: u16,
    pub code_hi: u16,
    pub vg_target: LatticeVg,
    pub p1db_in_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LutTable {
    pub calibration_freq_ghz: f64,
    /// Keyed by the V_G at which the reading was taken.
    pub rows: BTreeMap<LatticeVg, Vec<LutBin>>,
}

const HEADER: &str = "vg_current_v,code_lo,code_hi,vg_target_v,p1db_in_dbm";

impl LutTable {
    /// Calibrates against the chain at `f_cal`. In row `V_r`, the bin for
    /// target `V_k` ends at the code the chain reads at `V_r` when the input
    /// sits exactly at P1dB,IN(`V_k`).
    pub fn generate(chain: &ReceiverChain, f_cal: f64) -> Result<Self> {
        let code_min = chain.adc.adc_sample(chain.ed2.floor_v(f_cal)?, 0.0, false).code;
        let full = chain.adc.full_scale() as u16;
        let mut rows = BTreeMap::new();
        for row in LatticeVg::all() {
            let mut bins = Vec::new();
            let mut lo = code_min;
            for k in LatticeVg::all() {
                let p1db = chain.lna.p1db_in(k.volts(), f_cal)?;
                let hi = if k == LatticeVg::MAX {
                    full
                } else {
                    let pin = board_input_for(chain, p1db, f_cal)?;
                    chain.ed2_code_settled(pin, row.volts(), f_cal)?
                };
                if hi >= lo {
                    bins.push(LutBin { code_lo: lo, code_hi: hi, vg_target: k, p1db_in_dbm: p1db });
                    lo = hi.saturating_add(1);
                }
                if hi == full {
                    break;
                }
            }
            rows.insert(row, bins);
        }
        let t = Self { calibration_freq_ghz: f_cal, rows };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvariantViolation(m));
        if self.rows.len() != LatticeVg::COUNT {
            return bad(format!("LUT has {} rows, expected {}", self.rows.len(), LatticeVg::COUNT));
        }
        for (vg, bins) in &self.rows {
            if bins.is_empty() {
                return bad(format!("empty LUT row at {vg} V"));
            }
            if bins.last().map(|b| b.code_hi) != Some(u16::MAX) {
                return bad(format!("LUT row {vg} V does not reach full scale"));
            }
            let mut prev: Option<&LutBin> = None;
            for b in bins {
                if b.code_lo > b.code_hi {
                    return bad(format!("inverted bin in row {vg} V"));
                }
                if let Some(p) = prev {
                    if u32::from(b.code_lo) != u32::from(p.code_hi) + 1 {
                        return bad(format!("bins overlap or leave a gap in row {vg} V at code {}", b.code_lo));
                    }
                    if b.vg_target < p.vg_target {
                        return bad(format!("targets decrease with code in row {vg} V"));
                    }
                }
                prev = Some(b);
            }
        }
        Ok(())
    }

    /// Lowest code covered; below it the reading is off the detector.
    pub fn code_min(&self, vg: LatticeVg) -> Option<u16> {
        self.rows.get(&vg).and_then(|b| b.first()).map(|b| b.code_lo)
    }

    pub fn lookup(&self, vg: LatticeVg, code: u16) -> Result<&LutBin> {
        self.rows
            .get(&vg)
            .and_then(|bins| bins.iter().find(|b| (b.code_lo..=b.code_hi).contains(&code)))
            .ok_or(Error::LutMiss { code, vg: vg.volts() })
    }

    /// Table aiming one step below this one, for rough tuning that is
    /// then refined upward.
    pub fn shifted_down(&self) -> Self {
        let mut t = self.clone();
        let p1db: BTreeMap<LatticeVg, f64> =
            self.rows.values().flatten().map(|b| (b.vg_target, b.p1db_in_dbm)).collect();
        for bins in t.rows.values_mut() {
            for b in bins.iter_mut() {
                if let Some(d) = b.vg_target.down() {
                    b.vg_target = d;
                    b.p1db_in_dbm = p1db.get(&d).copied().unwrap_or(b.p1db_in_dbm);
                }
            }
        }
        t
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# calibration_freq_ghz={}\n{HEADER}\n", self.calibration_freq_ghz);
        for (vg, bins) in &self.rows {
            for b in bins {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    vg.volts(),
                    b.code_lo,
                    b.code_hi,
                    b.vg_target.volts(),
                    b.p1db_in_dbm
                ));
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut f_cal = None;
        let mut body = String::new();
        for line in text.lines() {
            if let Some(meta) = line.trim().strip_prefix('#') {
                if let Some((k, v)) = meta.split_once('=') {
                    if k.trim() == "calibration_freq_ghz" {
                        f_cal = Some(v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("calibration_freq_ghz: {e}")))?);
                    }
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let f_cal = f_cal.ok_or_else(|| Error::Parse("LUT missing calibration_freq_ghz metadata".into()))?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>().join(",") != HEADER {
            return Err(Error::Parse(format!("LUT header must be '{HEADER}'")));
        }
        let mut rows: BTreeMap<LatticeVg, Vec<LutBin>> = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let num = |j: usize| -> Result<f64> {
                rec[j].parse::<f64>().map_err(|e| Error::Parse(format!("LUT line {}: {e}", i + 2)))
            };
            let code = |j: usize| -> Result<u16> {
                rec[j].parse::<u16>().map_err(|e| Error::Parse(format!("LUT line {}: {e}", i + 2)))
            };
            let vg = parse_lattice(num(0)?)?;
            rows.entry(vg).or_default().push(LutBin {
                code_lo: code(1)?,
                code_hi: code(2)?,
                vg_target: parse_lattice(num(3)?)?,
                p1db_in_dbm: num(4)?,
            });
        }
        for bins in rows.values_mut() {
            bins.sort_by_key(|b| b.code_lo);
        }
        let t = Self { calibration_freq_ghz: f_cal, rows };
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterization::Bundle;
    use crate::devices::Board;

    fn lut() -> (ReceiverChain, LutTable) {
        let c = ReceiverChain::new(&Bundle::bundled(), Board::FeedbackOnly);
        let t = LutTable::generate(&c, 3.0).unwrap();
        (c, t)
    }

    #[test]
    fn reading_at_minimum_bias_maps_to_minus_2_5() {
        let (c, t) = lut();
        let code = c.adc.adc_sample(0.7438, 0.0, false).code;
        let b = t.lookup(LatticeVg::MIN, code).unwrap();
        assert_eq!(b.vg_target.volts(), -2.5);
        assert_eq!(b.p1db_in_dbm, -6.0);
    }

    #[test]
    fn reduced_interference_and_floor() {
        let (c, t) = lut();
        let code = c.ed2_code_settled(-9.0, -2.7, 3.0).unwrap();
        let b = t.lookup(LatticeVg::MIN, code).unwrap();
        assert_eq!((b.vg_target.volts(), b.p1db_in_dbm), (-2.6, -8.5));
        let floor = t.code_min(LatticeVg::MIN).unwrap();
        assert_eq!(t.lookup(LatticeVg::MIN, floor).unwrap().vg_target, LatticeVg::MIN);
        assert!(matches!(t.lookup(LatticeVg::MIN, floor - 1), Err(Error::LutMiss { .. })));
    }

    #[test]
    fn boundary_power_maps_to_its_own_bias_in_every_row() {
        let (c, t) = lut();
        for row in LatticeVg::all() {
            for k in LatticeVg::all() {
                let p = c.lna.p1db_in(k.volts(), 3.0).unwrap();
                let code = c.ed2_code_settled(p, row.volts(), 3.0).unwrap();
                assert_eq!(t.lookup(row, code).unwrap().vg_target, k, "row {row} target {k}");
            }
        }
    }

    #[test]
    fn csv_round_trip_and_shift() {
        let (_, t) = lut();
        let back = LutTable::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        let s = t.shifted_down();
        s.validate().unwrap();
        for (a, b) in t.rows.values().flatten().zip(s.rows.values().flatten()) {
            assert_eq!(b.vg_target, a.vg_target.down().unwrap_or(LatticeVg::MIN));
        }
    }

    #[test]
    fn rejects_gapped_table() {
        let (_, t) = lut();
        let mut bad = t.clone();
        bad.rows.get_mut(&LatticeVg::MIN).unwrap()[1].code_lo += 1;
        assert!(bad.validate().is_err());
    }
}
