use proptest::prelude::*;
use rfadapt::looptheory::{self, LoopParams};

fn params(k: f64, f_load: f64, ts: f64) -> LoopParams {
    LoopParams { k_vg_kg: k, f_load_khz: f_load, t_s_us: ts, ..LoopParams::default() }
}

/// Roots of `z^2 - (1 + a - K(1 - a)) z + a` by the quadratic formula.
fn quadratic_pole_magnitudes(k: f64, a: f64) -> Vec<f64> {
    let b = -(1.0 + a - k * (1.0 - a));
    let disc = b * b - 4.0 * a;
    if disc >= 0.0 {
        let s = disc.sqrt();
        vec![((-b + s) / 2.0).abs(), ((-b - s) / 2.0).abs()]
    } else {
        vec![a.sqrt(), a.sqrt()]
    }
}

proptest! {
    #[test]
    fn poles_match_quadratic_formula(k in 0.01..1.99f64, f_load in 1.0..500.0f64, ts in 2.0..200.0f64) {
        let p = params(k, f_load, ts);
        let mut got = looptheory::pole_magnitudes(&p);
        let mut want = quadratic_pole_magnitudes(k, p.a());
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        prop_assert_eq!(got.len(), 2);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-9, "{:?} vs {:?}", got, want);
        }
    }

    #[test]
    fn stable_loops_have_unit_dc_gain(k in 0.05..1.0f64, f_load in 1.0..500.0f64, ts in 2.0..200.0f64) {
        let tf = looptheory::closed_loop_tf(&params(k, f_load, ts));
        prop_assert!((tf.dc_gain() - 1.0).abs() < 1e-9);
        let y = looptheory::closed_loop_step(&params(k, f_load, ts), 3000).unwrap();
        prop_assert!((y.last().unwrap() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn higher_gain_settles_no_slower() {
    let t: Vec<f64> = (1..=9)
        .map(|i| looptheory::loop_settling_time(&params(f64::from(i) / 10.0, 100.0, 50.0)).unwrap())
        .collect();
    assert!(t.windows(2).all(|w| w[1] <= w[0]), "{t:?}");
}
