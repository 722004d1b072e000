use oilbench::harness::{self, ScheduleSpec, PRESETS};
use oilbench::{preset, Algo, ExperimentConfig, ScheduleKind};

fn small(name: &str, algo: Algo, rounds: usize) -> ExperimentConfig {
    ExperimentConfig { algo, seeds: vec![1, 2], ..preset(name).unwrap() }.with_rounds(rounds)
}

fn json(records: &[oilbench::RunRecord]) -> String {
    serde_json::to_string(records).unwrap()
}

#[test]
fn presets_validate() {
    for name in PRESETS {
        let cfg = preset(name).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.name, name);
        assert_eq!(cfg.hash(), preset(name).unwrap().hash());
    }
    assert!(preset("nope").is_err());
}

#[test]
fn runs_are_deterministic_and_job_count_independent() {
    for (name, algo) in [("toy_adversarial", Algo::Ftrl), ("gridworld_adversarial", Algo::Ogd)] {
        let cfg = small(name, algo, 12);
        let serial = harness::run_batch(&cfg, 1).unwrap();
        let parallel = harness::run_batch(&cfg, 0).unwrap();
        assert_eq!(json(&serial), json(&parallel), "{name}");
        assert_ne!(serial[0].rows, serial[1].rows, "seeds should differ");
    }
}

#[test]
fn rows_and_checkpoints() {
    let cfg = small("toy_simple", Algo::Ftl, 20);
    let rec = harness::run(&cfg, 7).unwrap();
    assert!(rec.complete);
    assert_eq!(rec.rows.len(), 20);
    for (i, r) in rec.rows.iter().enumerate() {
        assert_eq!(r.round, i + 1);
        assert_eq!(r.env_steps, (i + 1) * cfg.interactions_per_round);
        assert!(r.cumulative_regret.unwrap() >= -1e-9);
    }
    let cum: f64 = rec.rows.iter().map(|r| r.loss).sum();
    assert!((rec.final_avg_cumulative_loss() - cum / 20.0).abs() < 1e-12);
}

#[test]
fn schedule_override_changes_iterates() {
    let base = small("toy_adversarial", Algo::Ogd, 10);
    let a = harness::with_eta(&base, 0.01).unwrap();
    let b = harness::with_eta(&base, 0.1).unwrap();
    assert_eq!(a.schedule, ScheduleSpec::Fixed { schedule: ScheduleKind::Constant { eta: 0.01 } });
    assert_ne!(a.hash(), b.hash());
    assert_ne!(harness::run(&a, 1).unwrap().rows, harness::run(&b, 1).unwrap().rows);
    assert!(harness::with_eta(&small("toy_adversarial", Algo::Ftl, 10), 0.1).is_err());
}

#[test]
fn grid_search_ranks_by_pilot_loss() {
    let base = small("toy_adversarial", Algo::Ogd, 10);
    let grid = [1e-3, 1e-2, 1e-1];
    let ranking = harness::grid_search(&base, &grid, 20, 1, 1).unwrap();
    assert_eq!(ranking.len(), 3);
    for pair in ranking.windows(2) {
        assert!(pair[0].avg_cumulative_loss <= pair[1].avg_cumulative_loss);
    }
}
