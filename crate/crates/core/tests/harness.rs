use std::collections::BTreeMap;
use std::path::Path;

use batchbo_core::error::Error;
use batchbo_core::harness::metrics::{aggregate_z, first_encounter, first_encounter_series, z_score, TaskScores};
use batchbo_core::harness::output::{emit_outputs, load_result, rank_results, strip_wall_clock, write_final_table, write_rank_table};
use batchbo_core::harness::{run_experiment, run_experiment_with, ExperimentConfig, Planner, Proposal, StrategyFactory, StrategyKind};
use batchbo_core::objective::{Dataset, Direction, Domain, Objective};

fn tiny(strategy: StrategyKind, repeats: usize, epochs: usize) -> ExperimentConfig {
    ExperimentConfig {
        strategy,
        n_repeats: repeats,
        n_epochs: epochs,
        ..ExperimentConfig::default()
    }
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn full_protocol_spends_ninety_evaluations() {
    let res = run_experiment(&tiny(StrategyKind::Qei, 2, 10), 1).unwrap();
    assert_eq!(res.repeats.len(), 2);
    for r in &res.repeats {
        assert_eq!(r.evaluations(), 90);
        assert_eq!(r.epochs.len(), 10);
        let mut prev = r.initial_best.unwrap();
        for e in &r.epochs {
            assert!(e.best_so_far <= prev);
            assert!(e.regret.unwrap() >= 0.0);
            assert!(e.wall_seconds > 0.0);
            prev = e.best_so_far;
        }
    }
    assert_eq!(res.repeats[0].seed, 42);
    assert_eq!(res.repeats[1].seed, 43);
}

#[test]
fn same_seed_gives_identical_results() {
    for kind in [StrategyKind::Kmbbo, StrategyKind::Thompson, StrategyKind::Lp] {
        let cfg = tiny(kind, 2, 2);
        let a = run_experiment(&cfg, 1).unwrap();
        let b = run_experiment(&cfg, 2).unwrap();
        let mut ja = serde_json::to_value(&a).unwrap();
        let mut jb = serde_json::to_value(&b).unwrap();
        strip_wall_clock(&mut ja);
        strip_wall_clock(&mut jb);
        assert_eq!(ja, jb, "{}", kind.name());
        assert!(ja.to_string().contains("\"best_so_far\""));
        assert!(!ja.to_string().contains("wall_seconds"));
    }
}

struct AlwaysFails;

struct FailingPlanner;

impl Planner for FailingPlanner {
    fn propose(&mut self, _: &Dataset, _: u64) -> batchbo_core::error::Result<Proposal> {
        Err(Error::StrategyFailure {
            strategy: "broken".into(),
            reason: "always".into(),
        })
    }
}

impl StrategyFactory for AlwaysFails {
    fn name(&self) -> String {
        "broken".into()
    }

    fn planner(&self, _: &Objective, _: u64) -> batchbo_core::error::Result<Box<dyn Planner>> {
        Ok(Box::new(FailingPlanner))
    }
}

struct FailsAtSetup;

impl StrategyFactory for FailsAtSetup {
    fn name(&self) -> String {
        "no-setup".into()
    }

    fn planner(&self, _: &Objective, _: u64) -> batchbo_core::error::Result<Box<dyn Planner>> {
        Err(Error::Parameter("cannot build".into()))
    }
}

#[test]
fn failing_strategy_is_accounted_not_dropped() {
    let cfg = tiny(StrategyKind::Kmbbo, 5, 3);
    let obj = cfg.resolve_objective().unwrap();
    for factory in [&AlwaysFails as &dyn StrategyFactory, &FailsAtSetup] {
        let res = run_experiment_with(&cfg, &obj, factory, 2).unwrap();
        assert!(res.repeats.is_empty());
        assert_eq!(res.failures.len(), 5);
        assert_eq!(res.n_repeats(), 5);
        assert!(res.failures.iter().all(|f| f.failure.is_some()));
        assert_eq!(res.summary.n_successful, 0);
        assert!(res.summary.final_stats.is_none());
        assert!(res.summary.epochs.iter().all(|e| e.stats.is_none()));
        assert!(res.summary.mean_epoch_wall_seconds.is_none());

        let dir = tempfile::tempdir().unwrap();
        emit_outputs(&res, dir.path()).unwrap();
        let table = read_csv(&dir.path().join("final_performance.csv"));
        assert_eq!(table[1][6..], ["0".to_string(), "5".to_string()]);
    }
}

/// Constant objective: every design already sits at the optimum.
fn flat_objective() -> Objective {
    Objective::new(
        "flat",
        Domain::continuous(vec![(0.0, 1.0)]).unwrap(),
        Direction::Minimize,
        Some(1.0),
        |_: &[f64]| 1.0,
    )
}

#[test]
fn first_encounter_examples() {
    assert_eq!(first_encounter_series(&[5.0, 3.0, 0.005], 0.01), Some(2));
    assert_eq!(first_encounter_series(&[5.0, 3.0, 0.5], 0.01), None);
    assert_eq!(first_encounter_series(&[5.0, 3.0], f64::INFINITY), Some(0));

    let cfg = tiny(StrategyKind::Qei, 3, 2);
    let flat = flat_objective();
    let res = run_experiment_with(&cfg, &flat, &cfg, 1).unwrap();
    assert_eq!(first_encounter(&res, 0.0).unwrap(), vec![Some(0); res.repeats.len()]);

    let res = run_experiment(&cfg, 1).unwrap();
    assert_eq!(first_encounter(&res, f64::INFINITY).unwrap(), vec![Some(0); 3]);
    let tol = res.encounter_tol.unwrap();
    assert_eq!(res.summary.first_encounter.clone().unwrap(), first_encounter(&res, tol).unwrap());

    let unknown = Objective::new(
        "unknown",
        Domain::continuous(vec![(0.0, 1.0)]).unwrap(),
        Direction::Maximize,
        None,
        |x: &[f64]| x[0],
    );
    let res = run_experiment_with(&cfg, &unknown, &cfg, 1).unwrap();
    assert_eq!(res.summary.metric, "best-value");
    assert!(matches!(first_encounter(&res, 0.1), Err(Error::MetricUnavailable(_))));
}

#[test]
fn artifacts_have_fixed_shapes_and_round_trip() {
    let res = run_experiment(&tiny(StrategyKind::Cl, 3, 4), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&res, &dir.path().join("nested")).unwrap();

    let q = read_csv(&files.quantiles);
    assert_eq!(q.len(), 4 + 1);
    assert_eq!(
        q[0].join(","),
        "epoch,metric,n,mean,std_across_repeats,bootstrap_std_of_mean,q10,q25,q50,q75,q90"
    );
    let enc = read_csv(&files.first_encounter);
    assert_eq!(enc[0].join(","), "tolerance,epoch,count");
    assert_eq!(enc.len(), 1 + 5 + 1);
    let total: usize = enc[1..].iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    assert_eq!(total, 3);
    assert_eq!(read_csv(&files.final_table)[0].join(","), "task,strategy,metric,mean,std_dev,bootstrap_std,n_successful,n_failed");

    let back = load_result(&files.json).unwrap();
    assert_eq!(back, res);
    assert_eq!(load_result(&dir.path().join("nested")).unwrap().summary, res.summary);

    let mut raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files.json).unwrap()).unwrap();
    raw["schema_version"] = serde_json::json!(99);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, raw.to_string()).unwrap();
    assert!(load_result(&bad).is_err());
}

#[test]
fn final_table_matches_golden() {
    let res = run_experiment(&tiny(StrategyKind::Kmbbo, 2, 2), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("final.csv");
    write_final_table(&[&res], &path).unwrap();
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/final_performance_branin_kmbbo.csv")).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), golden);
}

fn named(v: &[(&str, f64)]) -> Vec<(String, f64)> {
    v.iter().map(|(n, s)| (n.to_string(), *s)).collect()
}

#[test]
fn z_score_examples() {
    let z = z_score(&named(&[("a", 1.0), ("b", 3.0), ("c", 5.0)])).unwrap();
    assert_eq!(z.values.iter().map(|v| v.1).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
    assert!(!z.degenerate);

    let z = z_score(&named(&[("kmbbo", 0.00523), ("qei", 0.803)])).unwrap();
    assert_eq!(z.values.iter().map(|v| v.1).collect::<Vec<_>>(), vec![0.0, 1.0]);

    let z = z_score(&named(&[("a", 2.0), ("b", 2.0), ("c", 2.0)])).unwrap();
    assert!(z.degenerate);
    assert!(z.values.iter().all(|v| v.1 == 0.0));

    assert!(z_score(&named(&[("a", 1.0)])).is_err());
    assert!(z_score(&named(&[("a", 1.0), ("b", f64::NAN)])).is_err());
}

fn task(name: &str, rows: &[(&str, f64, f64)]) -> TaskScores {
    TaskScores {
        task: name.into(),
        scores: rows.iter().map(|(s, a, b)| (s.to_string(), (*a, *b))).collect::<BTreeMap<_, _>>(),
    }
}

#[test]
fn aggregate_matches_hand_computed_golden() {
    let tasks = vec![
        task("A", &[("s1", 1.0, 0.1), ("s2", 3.0, 0.2), ("s3", 5.0, 0.3)]),
        task("B", &[("s1", 10.0, 1.0), ("s2", 0.0, 3.0), ("s3", 5.0, 2.0)]),
        task("C", &[("s1", 0.2, 0.5), ("s2", 0.6, 0.1), ("s3", 1.0, 0.3)]),
    ];
    let agg = aggregate_z(&tasks).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rank.csv");
    write_rank_table(&agg, &path).unwrap();

    let golden = read_csv(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/aggregate_z_3x3.csv"));
    let got = read_csv(&path);
    assert_eq!(got[0], golden[0]);
    assert_eq!(got.len(), golden.len());
    for (g, w) in got[1..].iter().zip(&golden[1..]) {
        assert_eq!(g[0], w[0]);
        for c in 1..3 {
            let (a, b): (f64, f64) = (g[c].parse().unwrap(), w[c].parse().unwrap());
            assert!((a - b).abs() < 1e-12, "{}: {a} vs {b}", g[0]);
        }
    }

    // single task: aggregate equals that task's Z
    let one = aggregate_z(&tasks[..1]).unwrap();
    assert_eq!(one.rows.iter().map(|r| r.performance).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);

    // best everywhere -> 0
    let dom = aggregate_z(&[task("A", &[("x", 0.0, 0.0), ("y", 1.0, 1.0)]), task("B", &[("x", 3.0, 0.1), ("y", 4.0, 0.2)])]).unwrap();
    assert_eq!((dom.rows[0].performance, dom.rows[0].variance), (0.0, 0.0));

    // a strategy missing from one task is excluded
    let partial = aggregate_z(&[
        task("A", &[("x", 0.0, 0.0), ("y", 1.0, 1.0), ("z", 2.0, 2.0)]),
        task("B", &[("x", 1.0, 0.1), ("y", 0.0, 0.2)]),
    ])
    .unwrap();
    assert_eq!(partial.excluded, vec!["z".to_string()]);
    assert_eq!(partial.rows.len(), 2);

    assert!(aggregate_z(&[]).is_err());
}

#[test]
fn ranking_from_results() {
    let a = run_experiment(&tiny(StrategyKind::Qei, 2, 1), 1).unwrap();
    let b = run_experiment(&tiny(StrategyKind::Thompson, 2, 1), 1).unwrap();
    let (tasks, agg) = rank_results(&[a.clone(), b]).unwrap();
    assert_eq!(tasks.len(), 1);
    assert_eq!(tasks[0].scores.len(), 2);
    assert!(agg.rows.iter().all(|r| (0.0..=1.0).contains(&r.performance)));
    assert!(agg.rows.iter().any(|r| r.performance == 0.0));
    assert!(rank_results(&[a.clone(), a]).is_err());
}
