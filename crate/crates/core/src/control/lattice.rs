use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const VG_BASE: f64 = -2.7;
const VG_STEP: f64 = 0.1;
const N: u8 = 7;

/// Gate command on the 0.1 V lattice -2.7 V ..= -2.1 V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeVg(u8);

impl LatticeVg {
    pub const MIN: LatticeVg = LatticeVg(0);
    pub const MAX: LatticeVg = LatticeVg(N - 1);
    pub const COUNT: usize = N as usize;

    pub fn new(index: u8) -> Option<Self> {
        (index < N).then_some(Self(index))
    }

    pub fn from_volts(v: f64) -> Option<Self> {
        let i = ((v - VG_BASE) / VG_STEP).round();
        if !(0.0..f64::from(N)).contains(&i) {
            return None;
        }
        let snapped = Self(i as u8);
        ((snapped.volts() - v).abs() < 1e-6).then_some(snapped)
    }

    pub fn volts(self) -> f64 {
        // Written out per index so the values are the decimal literals.
        [-2.7, -2.6, -2.5, -2.4, -2.3, -2.2, -2.1][self.0 as usize]
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn up(self) -> Option<Self> {
        Self::new(self.0 + 1)
    }

    pub fn down(self) -> Option<Self> {
        self.0.checked_sub(1).map(Self)
    }

    pub fn all() -> impl DoubleEndedIterator<Item = LatticeVg> + Clone {
        (0..N).map(Self)
    }
}

impl fmt::Display for LatticeVg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.volts())
    }
}

impl Serialize for LatticeVg {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.volts())
    }
}

impl<'de> Deserialize<'de> for LatticeVg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Self::from_volts(v).ok_or_else(|| serde::de::Error::custom(format!("{v} V is not on the V_G lattice")))
    }
}

pub fn parse_lattice(v: f64) -> Result<LatticeVg> {
    LatticeVg::from_volts(v).ok_or_else(|| Error::Parse(format!("{v} V is not on the V_G lattice")))
}
