//! Discrete-time model of the bias adaptation loop.
//!
//! Plant and integrator give
//! `G_OL(z) = K (1 - a) z / ((z - a)(z - 1))`, `a = exp(-F_Load T_s)`,
//! closed with unity feedback. One loop update consumes two ADC samples, so
//! the response is indexed in steps of `2 T_s`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two samples of the ADC window must span at least this long.
pub const MIN_WINDOW_US: f64 = 25.0;
pub const DEFAULT_TOLERANCE: f64 = 0.02;
pub const TS_MIN_US: f64 = 2.0;
pub const TS_MAX_US: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopParams {
    /// Product K_VG * K_G; the factors are never needed separately.
    pub k_vg_kg: f64,
    pub f_load_khz: f64,
    pub t_s_us: f64,
    pub t_process_us: f64,
    pub t_vg_us: f64,
    pub t_lna_us: f64,
    pub t_ed_us: f64,
}

impl Default for LoopParams {
    fn default() -> Self {
        Self { k_vg_kg: 0.6, f_load_khz: 100.0, t_s_us: 50.0, t_process_us: 0.0, t_vg_us: 10.0, t_lna_us: 1.0, t_ed_us: 7.0 }
    }
}

impl LoopParams {
    /// Open-loop pole `exp(-F_Load T_s)`.
    pub fn a(&self) -> f64 {
        (-self.f_load_khz * 1e-3 * self.t_s_us).exp()
    }

    pub fn loop_period_us(&self) -> f64 {
        2.0 * self.t_s_us
    }

    /// Necessary condition for a stable discrete loop.
    pub fn k_in_stability_region(&self) -> bool {
        self.k_vg_kg > 0.0 && self.k_vg_kg < 2.0
    }

    /// Sampling must outlast bias settling, LNA delay and detector rise.
    pub fn sampling_outlasts_transient(&self) -> bool {
        self.t_s_us > self.t_vg_us + self.t_lna_us + self.t_ed_us
    }

    pub fn window_feasible(&self) -> bool {
        2.0 * self.t_s_us >= MIN_WINDOW_US
    }
}

/// Rational function of `z`, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteTransferFunction {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    pub sample_period_us: f64,
}

impl DiscreteTransferFunction {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>, sample_period_us: f64) -> Result<Self> {
        let lead = *denominator.first().ok_or_else(|| Error::InvariantViolation("empty denominator".into()))?;
        if lead == 0.0 {
            return Err(Error::InvariantViolation("denominator leading coefficient is zero".into()));
        }
        if numerator.len() > denominator.len() {
            return Err(Error::InvariantViolation("improper transfer function".into()));
        }
        let denominator: Vec<f64> = denominator.iter().map(|c| c / lead).collect();
        let numerator: Vec<f64> = numerator.iter().map(|c| c / lead).collect();
        Ok(Self { numerator, denominator, sample_period_us })
    }

    pub fn order(&self) -> usize {
        self.denominator.len() - 1
    }

    /// Numerator padded to the denominator's length.
    fn num_padded(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.denominator.len() - self.numerator.len()];
        b.extend_from_slice(&self.numerator);
        b
    }

    /// Unity negative feedback around `self`.
    pub fn feedback(&self) -> Result<Self> {
        let b = self.num_padded();
        let den: Vec<f64> = self.denominator.iter().zip(&b).map(|(d, n)| d + n).collect();
        Self::new(trim_leading(self.numerator.clone()), den, self.sample_period_us)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        roots(&self.denominator)
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.iter().all(|&c| c == 0.0)
    }

    /// `H(1)`.
    pub fn dc_gain(&self) -> f64 {
        self.numerator.iter().sum::<f64>() / self.denominator.iter().sum::<f64>()
    }

    /// Response to `u[k] = 1` for `k >= 0`, samples `0..n`.
    pub fn step(&self, n: usize) -> Vec<f64> {
        let b = self.num_padded();
        let d = &self.denominator;
        let mut y = vec![0.0; n];
        for k in 0..n {
            let mut acc = 0.0;
            for (i, bi) in b.iter().enumerate() {
                if k >= i {
                    acc += bi;
                }
            }
            for i in 1..d.len() {
                if k >= i {
                    acc -= d[i] * y[k - i];
                }
            }
            y[k] = acc;
        }
        y
    }
}

fn trim_leading(mut v: Vec<f64>) -> Vec<f64> {
    while v.len() > 1 && v[0] == 0.0 {
        v.remove(0);
    }
    v
}

/// Roots of a real polynomial by Durand-Kerner iteration.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c = trim_leading(coeffs.to_vec());
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[0];
    let monic: Vec<f64> = c.iter().map(|x| x / lead).collect();
    let eval = |z: Complex64| monic.iter().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a);
    let radius = 1.0 + monic[1..].iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius.min(2.0)).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    z.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    z
}

/// Open-loop transfer function, sampled at the loop period.
pub fn open_loop_tf(p: &LoopParams) -> DiscreteTransferFunction {
    let a = p.a();
    let k = p.k_vg_kg;
    DiscreteTransferFunction::new(vec![k * (1.0 - a), 0.0], vec![1.0, -(1.0 + a), a], p.loop_period_us())
        .expect("monic second-order denominator")
}

pub fn closed_loop_tf(p: &LoopParams) -> DiscreteTransferFunction {
    open_loop_tf(p).feedback().expect("proper open loop")
}

pub fn pole_magnitudes(p: &LoopParams) -> Vec<f64> {
    closed_loop_tf(p).poles().iter().map(|z| z.norm()).collect()
}

/// Closed-loop unit-step response, one value per loop update.
pub fn closed_loop_step(p: &LoopParams, n_samples: usize) -> Result<Vec<f64>> {
    let cl = closed_loop_tf(p);
    let mags: Vec<f64> = cl.poles().iter().map(|z| z.norm()).collect();
    if cl.is_zero() || mags.iter().any(|&m| m >= 1.0) {
        return Err(Error::Unstable { pole_magnitudes: mags });
    }
    Ok(cl.step(n_samples))
}

/// Time after which the response stays within `tolerance_fraction` of
/// `final_value`: the index following the last out-of-band sample, times
/// `period_us`.
pub fn settling_time_to(response: &[f64], final_value: f64, tolerance_fraction: f64, period_us: f64) -> Result<f64> {
    if response.iter().any(|v| !v.is_finite()) || !final_value.is_finite() {
        return Err(Error::NoConvergence);
    }
    let band = tolerance_fraction * final_value.abs();
    match response.iter().rposition(|v| (v - final_value).abs() > band) {
        None => Ok(0.0),
        Some(i) if i + 1 == response.len() => Err(Error::NoConvergence),
        Some(i) => Ok((i + 1) as f64 * period_us),
    }
}

/// As [`settling_time_to`], taking the last sample as the final value. The
/// last quarter of the sequence must already sit inside half the band.
pub fn settling_time(response: &[f64], tolerance_fraction: f64, period_us: f64) -> Result<f64> {
    let last = *response.last().ok_or(Error::NoConvergence)?;
    let tail = &response[response.len() - response.len().div_ceil(4)..];
    let half_band = 0.5 * tolerance_fraction * last.abs();
    if tail.iter().any(|v| !v.is_finite() || (v - last).abs() > half_band) {
        return Err(Error::NoConvergence);
    }
    settling_time_to(response, last, tolerance_fraction, period_us)
}

/// Settling time of the closed loop for the default 2 % band.
pub fn loop_settling_time(p: &LoopParams) -> Result<f64> {
    let y = closed_loop_step(p, 400)?;
    settling_time_to(&y, 1.0, DEFAULT_TOLERANCE, p.loop_period_us())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptationTime {
    pub t_us: f64,
    pub sampling_outlasts_transient: bool,
    pub warning: Option<String>,
}

/// `T_adapt = N (2 T_s + T_process)`.
pub fn adaptation_time(n_steps: u32, p: &LoopParams) -> AdaptationTime {
    let t_us = f64::from(n_steps) * (2.0 * p.t_s_us + p.t_process_us);
    let ok = p.sampling_outlasts_transient();
    let warning = (!ok).then(|| {
        format!(
            "T_s = {} us does not exceed T_VG + T_LNA + T_ED = {} us",
            p.t_s_us,
            p.t_vg_us + p.t_lna_us + p.t_ed_us
        )
    });
    AdaptationTime { t_us, sampling_outlasts_transient: ok, warning }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub ts_us: f64,
    pub n_steps: u32,
    pub t_adapt_us: f64,
    pub feasible: bool,
}

pub fn sweep_adaptation_vs_ts(p: &LoopParams, ts_range: &[f64]) -> Result<Vec<SweepPoint>> {
    ts_range
        .iter()
        .map(|&ts| {
            if !(TS_MIN_US..=TS_MAX_US).contains(&ts) {
                return Err(Error::OutOfRange(format!("T_s {ts} us outside [{TS_MIN_US}, {TS_MAX_US}]")));
            }
            let q = LoopParams { t_s_us: ts, ..*p };
            let settle = loop_settling_time(&q)?;
            let n = (settle / q.loop_period_us()).round() as u32;
            Ok(SweepPoint {
                ts_us: ts,
                n_steps: n,
                t_adapt_us: adaptation_time(n, &q).t_us,
                feasible: q.sampling_outlasts_transient() && q.window_feasible(),
            })
        })
        .collect()
}

/// T_s grid spanning the 2 us .. 1 ms design space.
pub fn default_ts_grid() -> Vec<f64> {
    let mut v: Vec<f64> = (2..=30).map(f64::from).collect();
    v.extend((35..=100).step_by(5).map(f64::from));
    v.extend((125..=1000).step_by(25).map(f64::from));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xy: &[(f64, f64)]) -> Option<LinearFit> {
    let n = xy.len() as f64;
    if xy.len() < 2 {
        return None;
    }
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig(k: f64) -> LoopParams {
        LoopParams { k_vg_kg: k, f_load_khz: 100.0, t_s_us: 50.0, ..Default::default() }
    }

    #[test]
    fn open_loop_coefficients() {
        let p = fig(0.6);
        let a = (-5.0f64).exp();
        let g = open_loop_tf(&p);
        assert_eq!(g.denominator, vec![1.0, -(1.0 + a), a]);
        assert_eq!(g.numerator, vec![0.6 * (1.0 - a), 0.0]);
        assert_eq!(g.sample_period_us, 100.0);
    }

    #[test]
    fn fast_plant_collapses_to_integrator() {
        let p = LoopParams { f_load_khz: 1e9, ..fig(0.6) };
        let g = open_loop_tf(&p);
        assert_eq!(g.denominator, vec![1.0, -1.0, 0.0]);
        assert_eq!(g.numerator, vec![0.6, 0.0]);
    }

    #[test]
    fn zero_gain_is_unstable_report() {
        assert!(open_loop_tf(&fig(0.0)).is_zero());
        assert!(matches!(closed_loop_step(&fig(0.0), 10), Err(Error::Unstable { .. })));
        assert!(matches!(closed_loop_step(&fig(2.5), 10), Err(Error::Unstable { .. })));
    }

    #[test]
    fn roots_of_known_cubic() {
        let r = roots(&[1.0, -6.0, 11.0, -6.0]);
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in re.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn step_reaches_unity() {
        let y = closed_loop_step(&fig(0.6), 200).unwrap();
        assert!((y[199] - 1.0).abs() < 1e-12);
        assert_eq!(y[0], 0.0);
    }

    #[test]
    fn settling_examples() {
        assert_eq!(settling_time(&[0.7; 12], 0.02, 100.0).unwrap(), 0.0);
        // 1 - r^n with r = 0.5: ceil(ln 0.02 / ln 0.5) = 6.
        let y: Vec<f64> = (0..40).map(|n| 1.0 - 0.5f64.powi(n)).collect();
        assert_eq!(settling_time_to(&y, 1.0, 0.02, 100.0).unwrap(), 600.0);
        let osc: Vec<f64> = (0..40).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(settling_time(&osc, 0.02, 1.0), Err(Error::NoConvergence));
    }

    #[test]
    fn adaptation_time_direct_arithmetic() {
        let p = LoopParams { t_s_us: 50.0, t_process_us: 1.0, ..Default::default() };
        assert_eq!(adaptation_time(6, &p).t_us, 606.0);
        assert_eq!(adaptation_time(0, &p).t_us, 0.0);
    }

    #[test]
    fn sweep_rejects_out_of_range() {
        assert!(sweep_adaptation_vs_ts(&LoopParams::default(), &[1.0]).is_err());
    }

    #[test]
    fn fit_of_exact_line() {
        let f = linear_fit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
    }
}
