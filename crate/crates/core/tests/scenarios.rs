use std::path::Path;

use rfadapt::characterization::Bundle;
use rfadapt::control::{LatticeVg, Method};
use rfadapt::sim::{self, recipes, EpisodeKind, Scenario};

fn scenario_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/scenarios"))
}

#[test]
fn bundled_files_match_recipes() {
    for (stem, sc) in recipes::bundled() {
        let loaded = Scenario::load(&scenario_dir().join(format!("{stem}.json"))).unwrap();
        assert_eq!(loaded, sc, "{stem}");
    }
}

#[test]
fn lut_staircase_is_symmetric_and_shows_every_step() {
    let b = Bundle::bundled();
    let tr = sim::run(&recipes::staircase(Method::Lut)).unwrap();
    let eps = sim::episodes(&tr, &b).unwrap();
    let levels = recipes::staircase_levels();
    assert_eq!(eps.len(), levels.len());
    let settled: Vec<f64> = eps.iter().map(|e| e.vg_settled_v.unwrap()).collect();
    let n = settled.len();
    for i in 0..n / 2 {
        assert_eq!(settled[i], settled[n - 1 - i], "level {} dBm", levels[i]);
    }
    for vg in LatticeVg::all() {
        assert!(settled.contains(&vg.volts()), "{vg} never reached");
    }
    // A jump and its confirmation, plus at most one lookup deferred by the
    // detector tail on each side.
    assert!(eps.iter().all(|e| e.n_cycles <= 4 && !e.overshoot));
}

#[test]
fn every_episode_under_a_millisecond() {
    let b = Bundle::bundled();
    for (stem, sc) in recipes::bundled() {
        let tr = sim::run(&sc).unwrap();
        assert!(tr.halt.is_none(), "{stem}");
        for e in sim::episodes(&tr, &b).unwrap() {
            let t = e.adaptation_time_us.unwrap_or_else(|| panic!("{stem}: unsettled episode at {}", e.edge_t_us));
            assert!(t < 1000.0, "{stem}: {t} us at {}", e.edge_t_us);
        }
    }
}

#[test]
fn fffb_sequence_has_the_three_episode_kinds() {
    let b = Bundle::bundled();
    let tr = sim::run(&recipes::fffb_sequence()).unwrap();
    let kinds: Vec<EpisodeKind> = sim::episodes(&tr, &b).unwrap().iter().map(|e| e.kind).collect();
    assert_eq!(kinds, [EpisodeKind::Appearance, EpisodeKind::Increase, EpisodeKind::Disappearance]);
}
