use proptest::prelude::*;
use rfadapt::characterization::Bundle;
use rfadapt::control::{
    incremental_step, Action, ControlAction, Controller, ControllerConfig, ControllerState, CycleInput, LatticeVg, Method,
    TripleSetPointThresholds,
};
use rfadapt::devices::{AdcSample, Board, ReceiverChain};

fn sample(code: u16) -> AdcSample {
    AdcSample { code, contaminated: false, clipped: false }
}

fn chain() -> ReceiverChain {
    ReceiverChain::new(&Bundle::bundled(), Board::FeedbackOnly)
}

fn methods() -> impl Strategy<Value = Method> {
    prop_oneof![Just(Method::Incremental), Just(Method::Lut), Just(Method::OneShotIncremental)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Any reading sequence keeps the command on the lattice and moves at
    /// most one lattice step per cycle for the incremental method.
    #[test]
    fn commands_stay_on_lattice(method in methods(), codes in prop::collection::vec(0u16..40_000, 1..60)) {
        let c = chain();
        let mut ctl = Controller::new(&ControllerConfig { method, ..Default::default() }, &c).unwrap();
        let mut prev = ctl.vg_cmd();
        for code in codes {
            let d = ctl.step(&CycleInput { ed2: sample(code), ed1: None });
            prop_assert!(LatticeVg::all().any(|v| v == d.vg_cmd));
            if method == Method::Incremental && d.action != ControlAction::Reset {
                prop_assert!(d.vg_cmd.index().abs_diff(prev.index()) <= 1);
            }
            prev = d.vg_cmd;
        }
    }

    /// A constant input power settles within a bounded number of cycles and
    /// then stays put.
    #[test]
    fn constant_input_terminates(method in methods(), pin in -22.5..0.5f64) {
        let c = chain();
        let mut ctl = Controller::new(&ControllerConfig { method, ..Default::default() }, &c).unwrap();
        let read = |vg: LatticeVg| sample(c.ed2_code_settled(pin, vg.volts(), 3.0).unwrap());
        let budget = 3 * LatticeVg::COUNT + 4;
        let mut settled_at = None;
        for i in 0..budget {
            let d = ctl.step(&CycleInput { ed2: read(ctl.vg_cmd()), ed1: None });
            if d.settled && settled_at.is_none() {
                settled_at = Some((i, d.vg_cmd));
            }
        }
        let (_, vg) = settled_at.expect("settles within budget");
        for _ in 0..5 {
            let d = ctl.step(&CycleInput { ed2: read(ctl.vg_cmd()), ed1: None });
            prop_assert!(d.settled);
            prop_assert_eq!(d.vg_cmd, ctl.vg_cmd());
        }
        let _ = vg;
    }

    /// The incremental decision is a pure function of state and sample.
    #[test]
    fn incremental_decision_is_pure(v1 in 0u8..7, v2 in 0u8..7, r in 0u16..60_000, code in 0u16..60_000, dirty in any::<bool>()) {
        let th = TripleSetPointThresholds::new(300, -150, -450).unwrap();
        let st = ControllerState {
            vg_prev: LatticeVg::new(v1).unwrap(),
            vg_cmd: LatticeVg::new(v2).unwrap(),
            ref_sample: Some(r),
            ..ControllerState::initial(Method::Incremental, LatticeVg::MIN)
        };
        let before = st.clone();
        let s = AdcSample { code, contaminated: dirty, clipped: false };
        let a = incremental_step(&st, &s, &th);
        prop_assert_eq!(&a, &incremental_step(&st, &s, &th));
        prop_assert_eq!(&st, &before);
        if let Ok(act) = a {
            let to = match act {
                Action::IncVg => st.vg_cmd.up(),
                Action::DecVg => st.vg_cmd.down(),
                Action::Hold => Some(st.vg_cmd),
                Action::RevertToPrev => Some(st.vg_prev),
            };
            prop_assert!(to.is_some());
        }
    }
}
