use hypercount::bounds::{bound_jlr, bound_wasserstein};
use hypercount::harness::config::{ExperimentConfig, Output};
use hypercount::harness::plot::{plot_series, write_outputs};
use hypercount::harness::slope::loglog_slope;
use hypercount::harness::sweep::{run_sweep, Row, SweepTable};
use hypercount::moments::{Arithmetic, Guards};
use hypercount::{Pattern, ScheduleSpec};
use proptest::prelude::*;

fn config(pattern: &str, schedule: &[&str], n_grid: Vec<u64>, outputs: Vec<Output>) -> ExperimentConfig {
    ExperimentConfig {
        pattern: pattern.into(),
        schedule: schedule.iter().map(|s| s.to_string()).collect(),
        n_grid,
        reps: 20_000,
        seed: 5,
        outputs,
        output_dir: "out".into(),
        delta: 0.01,
        arithmetic: Arithmetic::Float,
        hoeffding_reps: 50,
        guards: Guards::default(),
    }
}

fn rows<'a>(t: &'a SweepTable, quantity: &str) -> Vec<&'a Row> {
    t.rows.iter().filter(|r| r.quantity == quantity).collect()
}

fn arb_output() -> impl Strategy<Value = Output> {
    prop_oneof![
        Just(Output::Moments),
        Just(Output::Bounds),
        Just(Output::Conditions),
        Just(Output::Distances),
        Just(Output::HoeffdingVerify),
        Just(Output::Kurtosis),
    ]
}

proptest! {
    #[test]
    fn config_roundtrips(
        grid in prop::collection::btree_set(1u64..10_000, 1..6),
        reps in 1usize..100_000,
        seed in any::<u64>(),
        outputs in prop::collection::vec(arb_output(), 0..6),
        delta in 0.001f64..0.5,
        rational in any::<bool>(),
    ) {
        let mut cfg = config("p.txt", &["p2=0.5", "q1=2*n^-3/2"], grid.into_iter().collect(), outputs);
        cfg.reps = reps;
        cfg.seed = seed;
        cfg.delta = delta;
        cfg.arithmetic = if rational { Arithmetic::Rational } else { Arithmetic::Float };
        prop_assert_eq!(ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
    }
}

#[test]
fn load_resolves_pattern_next_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tri.txt"), Pattern::named("triangle").unwrap().to_text()).unwrap();
    let cfg = config("tri.txt", &["p2=0.5"], vec![5], vec![Output::Bounds]);
    let path = dir.path().join("exp.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    assert_eq!(loaded.pattern, dir.path().join("tri.txt"));
    assert_eq!(loaded.read_pattern().unwrap(), Pattern::named("triangle").unwrap());
}

#[test]
fn empty_outputs_give_a_header_only_table() {
    let tri = Pattern::named("triangle").unwrap();
    let cfg = config("t.txt", &["p2=0.5"], vec![5, 6], vec![]);
    let table = run_sweep(&cfg, &tri, 2).unwrap();
    assert!(table.rows.is_empty());
    assert_eq!(table.to_csv().unwrap(), "n,quantity,value,lower,upper,witness,status\n");
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&table, dir.path()).unwrap();
    assert_eq!(written.len(), 2);
}

#[test]
fn near_one_sweep_reproduces_bound_rows() {
    let p = Pattern::named("loop-pair").unwrap();
    let sched = ["q1=n^-3", "q2=n^-1"];
    let cfg = config("lp.txt", &sched, vec![100, 1000, 10_000], vec![Output::Moments, Output::Bounds]);
    let table = run_sweep(&cfg, &p, 4).unwrap();
    // exact moments are out of reach at these n
    assert!(rows(&table, "mean").iter().all(|r| r.is_skipped() && r.value.is_none()));
    assert!(table.has_skips());
    let spec_at = |n: u64| ScheduleSpec::parse_assignments(&sched).unwrap().at(n as f64).unwrap();
    for r in rows(&table, "bound_wasserstein") {
        assert_eq!(r.value.unwrap(), bound_wasserstein(&p, r.n as f64, &spec_at(r.n)).unwrap().value);
    }
    let jlr: Vec<(f64, f64)> = rows(&table, "bound_jlr").iter().map(|r| (r.n as f64, r.value.unwrap())).collect();
    assert_eq!(jlr[0].1, bound_jlr(&p, 100.0, &spec_at(100)).unwrap().value);
    assert!((loglog_slope(&jlr).unwrap() - 1.5).abs() < 0.05);
    let sufficient = rows(&table, "bound_sufficient_weighted");
    assert!(sufficient.iter().all(|r| (r.value.unwrap() - 1.0).abs() < 0.02));
}

#[test]
fn triangle_distance_rows_decrease() {
    let tri = Pattern::named("triangle").unwrap();
    let cfg = config("t.txt", &["p2=0.5"], vec![6, 12, 24], vec![Output::Distances]);
    let table = run_sweep(&cfg, &tri, 4).unwrap();
    let dk = rows(&table, "dk_empirical");
    assert_eq!(dk.len(), 3);
    for w in dk.windows(2) {
        let radius = w[0].upper.unwrap() - w[0].value.unwrap();
        assert!(w[1].value.unwrap() <= w[0].value.unwrap() + 2.0 * radius);
    }
    let plots = plot_series(&table).unwrap();
    let body = &plots["dk_empirical"];
    assert_eq!(body.lines().count(), 4);
    assert_eq!(body.lines().next().unwrap(), "n,value,lower,upper");
    assert!(body.lines().skip(1).all(|l| l.split(',').all(|f| !f.is_empty())));
}

#[test]
fn plot_files_are_sorted_by_quantity_and_n() {
    let tri = Pattern::named("triangle").unwrap();
    let cfg = config("t.txt", &["p2=0.5"], vec![4, 5, 6], vec![Output::Moments, Output::Kurtosis]);
    let table = run_sweep(&cfg, &tri, 3).unwrap();
    let plots = plot_series(&table).unwrap();
    let keys: Vec<&String> = plots.keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let mean = &plots["mean"];
    let ns: Vec<&str> = mean.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, ["4", "5", "6"]);
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&table, dir.path()).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("plot/mean.csv")).unwrap(), *mean);
}

#[test]
fn isolated_vertices_scale_sweep_moments() {
    // one 2-edge plus an isolated vertex: C(n, 2) p (n - 2) copies
    let p = Pattern::new(3, &[[0usize, 1]]).unwrap();
    let cfg = config("e.txt", &["p2=0.5"], vec![5], vec![Output::Moments]);
    let table = run_sweep(&cfg, &p, 1).unwrap();
    assert_eq!(rows(&table, "mean")[0].value.unwrap(), 15.0);
}

#[test]
fn invalid_configs_are_rejected() {
    let tri = Pattern::named("triangle").unwrap();
    assert!(run_sweep(&config("t.txt", &["p2=0.5"], vec![6, 5], vec![]), &tri, 1).is_err());
    assert!(run_sweep(&config("t.txt", &["p3=0.5"], vec![6], vec![]), &tri, 1).is_err());
    let mut one_rep = config("t.txt", &["p2=0.5"], vec![6], vec![Output::Distances]);
    one_rep.reps = 1;
    assert!(run_sweep(&one_rep, &tri, 1).is_err());
}
