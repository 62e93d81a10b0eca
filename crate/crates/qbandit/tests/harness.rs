//! End-to-end behaviour of the experiment harness: config parsing, seeded
//! determinism across thread counts, trace persistence and fits.

use std::path::PathBuf;

use qbandit::environments::{Action, NoiseModel};
use qbandit::harness::{
    aggregate, fit_scaling, read_trace_csv, run_episode, run_experiment, write_outputs,
    write_trace_csv, EnvironmentConfig, ExperimentConfig, FitModel, PolicyConfig, TaskConfig,
    CSV_HEADER,
};
use qbandit::policies::WeightRule;
use qbandit::Error;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn shipped_configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(config_path(""))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

fn vvn_task() -> TaskConfig {
    TaskConfig::Bandit {
        environment: EnvironmentConfig::PureState { state: None },
        policy: PolicyConfig::Vvn {
            lambda0: 2.0,
            k: 10,
            weight: WeightRule::Constant(0.3),
            delta: 0.1,
        },
    }
}

fn csv_bytes(trace: &qbandit::EpisodeTrace) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace_csv(trace, &mut out).unwrap();
    out
}

#[test]
fn shipped_configs_parse_validate_and_round_trip() {
    let paths = shipped_configs();
    assert!(paths.len() >= 5, "{paths:?}");
    for p in paths {
        let cfg = ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let text = cfg.to_toml().unwrap();
        assert_eq!(
            ExperimentConfig::from_toml(&text).unwrap(),
            cfg,
            "{}",
            p.display()
        );
    }
}

#[test]
fn shipped_configs_run_for_a_few_rounds() {
    for p in shipped_configs() {
        let mut cfg = ExperimentConfig::load(&p).unwrap();
        cfg.rounds = 50;
        let traces = run_experiment(&cfg).unwrap();
        assert_eq!(traces.len(), cfg.seed_list().len());
        for t in &traces {
            assert_eq!(t.records.len(), 50, "{}", p.display());
            let cum = t.cumulative_regret();
            if t.records.iter().all(|r| r.inst_regret >= 0.0) {
                assert!(cum.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }
}

#[test]
fn single_round_gives_single_record() {
    let cfg = ExperimentConfig::new(1, vec![3], vvn_task());
    let traces = run_experiment(&cfg).unwrap();
    assert_eq!(traces.len(), 1);
    assert_eq!(traces[0].records.len(), 1);
    assert_eq!(traces[0].records[0].round, 1);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let cfg = ExperimentConfig::new(500, vec![11], vvn_task());
    let a = run_episode(&cfg, 11).unwrap();
    let b = run_episode(&cfg, 11).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    let c = run_episode(&cfg, 12).unwrap();
    assert_ne!(csv_bytes(&a), csv_bytes(&c));
}

#[test]
fn output_is_independent_of_thread_count() {
    let mut cfg = ExperimentConfig::new(300, (0..8).collect(), vvn_task());
    cfg.telemetry.eigenvalues = true;
    cfg.telemetry.coverage = true;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.len(), 8);
    for (a, b) in one.iter().zip(&four) {
        assert_eq!(a.seed, b.seed);
        assert_eq!(csv_bytes(a), csv_bytes(b));
    }
    // Results follow the config's seed order.
    let seeds: Vec<u64> = one.iter().map(|t| t.seed).collect();
    assert_eq!(seeds, (0..8).collect::<Vec<_>>());
}

#[test]
fn aggregation_ignores_seed_order() {
    let cfg = ExperimentConfig::new(200, vec![5, 1, 9, 3], vvn_task());
    let traces = run_experiment(&cfg).unwrap();
    let series: Vec<Vec<f64>> = traces.iter().map(|t| t.cumulative_regret()).collect();
    let mut reversed = series.clone();
    reversed.reverse();
    assert_eq!(aggregate(&series).unwrap(), aggregate(&reversed).unwrap());
}

#[test]
fn written_traces_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(120, vec![2, 4], vvn_task());
    cfg.telemetry.eigenvalues = true;
    let traces = run_experiment(&cfg).unwrap();
    let files = write_outputs(&traces, dir.path(), 0).unwrap();
    assert_eq!(files.len(), 2);
    for (t, f) in traces.iter().zip(&files) {
        let bytes = std::fs::read(f).unwrap();
        let header = String::from_utf8_lossy(&bytes);
        assert!(header.starts_with(&CSV_HEADER.join(",")));
        let back = read_trace_csv(bytes.as_slice()).unwrap();
        assert_eq!(back, t.records);
        assert!(back.iter().any(|r| r.lmin.is_some()));
        let again = csv_bytes(&qbandit::EpisodeTrace {
            records: back,
            ..t.clone()
        });
        assert_eq!(again, bytes);
    }
}

#[test]
fn recommender_and_extraction_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut qcb = ExperimentConfig::load(&config_path("qcb_ising.toml")).unwrap();
    qcb.rounds = 300;
    let traces = run_experiment(&qcb).unwrap();
    let files = write_outputs(&traces, dir.path(), 200).unwrap();
    let map = files
        .iter()
        .find(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("phase_map_")
        })
        .expect("phase map written");
    let text = std::fs::read_to_string(map).unwrap();
    assert!(text.starts_with("param1,param2,arm\n"));
    assert_eq!(text.lines().count(), 1 + 100);

    let mut jc = ExperimentConfig::load(&config_path("jc_extraction.toml")).unwrap();
    jc.rounds = 100;
    jc.seed_count = Some(1);
    let traces = run_experiment(&jc).unwrap();
    let files = write_outputs(&traces, dir.path(), 0).unwrap();
    let ledger = files
        .iter()
        .find(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("ledger_")
        })
        .expect("ledger written");
    let text = std::fs::read_to_string(ledger).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(traces[0].records.iter().all(|r| r.inst_regret >= -1e-12));
}

#[test]
fn incompatible_pairings_are_config_errors() {
    let sphere = EnvironmentConfig::Sphere {
        dim: 3,
        theta: None,
        noise: NoiseModel::GaussianConst { sigma: 1.0 },
    };
    let cfg = ExperimentConfig::new(
        10,
        vec![0],
        TaskConfig::Bandit {
            environment: sphere,
            policy: PolicyConfig::Ucb {
                eta: 1.0,
                delta: None,
            },
        },
    );
    match run_experiment(&cfg) {
        Err(Error::Config(msg)) => assert!(msg.contains("ucb"), "{msg}"),
        other => panic!("expected a config error, got {other:?}"),
    }
    let discrete = ExperimentConfig::from_toml(
        r#"
schema_version = 1
rounds = 10
seeds = [0]
[task]
kind = "bandit"
environment = { kind = "discrete", state = [0.0, 0.0, 1.0], arms = [{ direction = [0.0, 0.0, 1.0] }] }
policy = { kind = "vvn", lambda0 = 2.0, k = 10 }
"#,
    );
    assert!(matches!(discrete, Err(Error::Config(_))), "{discrete:?}");
}

#[test]
fn malformed_configs_are_rejected() {
    let base = std::fs::read_to_string(config_path("ucb_pauli.toml")).unwrap();
    for (from, to) in [
        ("schema_version = 1", "schema_version = 2"),
        ("rounds = 10000", "rounds = 0"),
        ("seed_count = 20", "seeds = [1, 1]"),
        ("seed_count = 20", "seeds = []"),
        ("kind = \"ucb\"", "kind = \"ucb\"\nbogus = 1"),
    ] {
        let text = base.replace(from, to);
        assert_ne!(text, base);
        assert!(ExperimentConfig::from_toml(&text).is_err(), "{to}");
    }
    let mut cfg = ExperimentConfig::new(10, vec![0], vvn_task());
    if let TaskConfig::Bandit { policy, .. } = &mut cfg.task {
        *policy = PolicyConfig::Vvn {
            lambda0: 0.5,
            k: 10,
            weight: WeightRule::Theory,
            delta: 0.1,
        };
    }
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
}

#[test]
fn ucb_trace_records_arm_indices() {
    let mut cfg = ExperimentConfig::load(&config_path("ucb_pauli.toml")).unwrap();
    cfg.rounds = 100;
    let t = run_episode(&cfg, 0).unwrap();
    assert!(t
        .records
        .iter()
        .all(|r| matches!(r.action, Action::Index(0) | Action::Index(1))));
    let bytes = csv_bytes(&t);
    assert_eq!(read_trace_csv(bytes.as_slice()).unwrap(), t.records);
}

#[test]
fn fits_separate_polylog_from_root_growth() {
    let t: Vec<f64> = (1..=200).map(|i| 50.0 * i as f64).collect();
    let polylog: Vec<f64> = t.iter().map(|x| 2.5 * x.ln().powi(2) + 4.0).collect();
    let root: Vec<f64> = t.iter().map(|x| 0.9 * x.sqrt()).collect();
    let lsq = fit_scaling(&t, &polylog, FitModel::LogSquared).unwrap();
    let sq = fit_scaling(&t, &polylog, FitModel::Sqrt).unwrap();
    assert!(lsq.residual < sq.residual);
    assert!((lsq.coefficients[0] - 2.5).abs() < 1e-9);
    assert!((lsq.coefficients[1] - 4.0).abs() < 1e-7);
    let lsq = fit_scaling(&t, &root, FitModel::LogSquared).unwrap();
    let sq = fit_scaling(&t, &root, FitModel::Sqrt).unwrap();
    assert!(sq.residual < lsq.residual);
    for m in FitModel::ALL {
        let f = fit_scaling(&t, &root, m).unwrap();
        assert!(f.residual >= 0.0, "{m:?}");
        assert!(f.predict(t[10]).is_finite(), "{m:?}");
        if !m.is_log_linear() {
            let rss = f.rss(&t, &root);
            assert!(
                (rss - f.residual).abs() <= 1e-6 * f.residual.max(1.0),
                "{m:?} {rss} {}",
                f.residual
            );
        }
    }
}
