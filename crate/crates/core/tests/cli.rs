use std::fs;
use std::path::{Path, PathBuf};

use tollsim::cli::output::{read_matrix, read_slopes, read_summary, read_trace, Metadata, SummaryRow};
use tollsim::cli::{main_with_args, slope_rows, EXIT_OK, EXIT_USAGE};
use tollsim::scenarios::{PolicyName, ScenarioConfig};
use tollsim::verify::reduced_sioux_falls;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("tollsim").chain(args.iter().copied()))
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    assert_eq!(run(&["run", "--config", "/no/such/file.toml", "--out", o]), EXIT_USAGE);
    assert_eq!(run(&["bogus"]), EXIT_USAGE);
    assert_eq!(run(&["run", "--out", o]), EXIT_USAGE);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "kind = \"lower_bound\"\nhorizon = 0\n").unwrap();
    let o = dir.path().join("out");
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]), EXIT_USAGE);
    fs::write(&cfg, "kind = \"lower_bound\"\nhorizon = 10\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(run(&["sweep", "--config", c, "--horizons", "10,20", "--out", o.to_str().unwrap()]), EXIT_USAGE);
}

#[test]
fn run_writes_a_complete_bundle_deterministically() {
    let cfg_path = configs().join("lower_bound.toml");
    let cfg = ScenarioConfig::load(&cfg_path).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(run(&["run", "--config", cfg_path.to_str().unwrap(), "--out", d.path().to_str().unwrap()]), EXIT_OK);
    }
    let t = cfg.horizon as usize;
    let summary = read_summary(&a.path().join("summary.csv")).unwrap();
    assert_eq!(summary.len(), cfg.seeds.len() * cfg.policies.len());
    for row in &summary {
        let dir = a.path().join(format!("{}_s{}_T{}", row.policy, row.seed, row.horizon));
        assert_eq!(read_trace(&dir.join("trace.csv")).unwrap().len(), t);
        assert_eq!(read_matrix(&dir.join("tolls.csv")).unwrap().len(), t);
        assert_eq!(read_matrix(&dir.join("flows.csv")).unwrap().len(), t);
        assert!(row.regret.unwrap() <= row.regret_bound);
    }
    let meta = Metadata::read(&a.path().join("metadata.toml")).unwrap();
    assert_eq!(meta.config, cfg);
    assert_eq!(meta.seeds, cfg.seeds);
    assert_eq!(meta.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(files(a.path()), files(b.path()));
}

#[test]
fn sweep_on_the_lower_bound() {
    let cfg_path = configs().join("lower_bound.toml");
    let out = tempfile::tempdir().unwrap();
    let code = run(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--horizons",
        "100,1000,10000",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(out.path().join("slopes.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("violation_slope"));
    let slopes = read_slopes(&out.path().join("slopes.csv")).unwrap();
    let og: Vec<_> = slopes.iter().filter(|r| r.policy == "online_gradient").collect();
    assert_eq!(og.len(), 3);
    assert!(og.iter().all(|r| r.violation_slope.is_some() && r.runs == 3));
    assert_eq!(Metadata::read(&out.path().join("metadata.toml")).unwrap().horizons, vec![100, 1000, 10000]);
}

#[test]
fn synthetic_sqrt_series_fits_half() {
    let rows: Vec<SummaryRow> = [100u64, 1000, 10_000]
        .iter()
        .map(|&t| SummaryRow {
            policy: "online_gradient".into(),
            seed: 1,
            horizon: t,
            step: None,
            regret: Some((t as f64).sqrt()),
            normalized_regret: None,
            violation_linf: (t as f64).sqrt(),
            violation_l2: 0.0,
            violation_argmax: 0,
            normalized_violation: 0.0,
            mean_travel_time: 0.0,
            normalized_travel_time: None,
            regret_bound: 0.0,
            violation_bound: 0.0,
            max_toll: 0.0,
        })
        .collect();
    let fit = slope_rows(&rows, &[PolicyName::OnlineGradient], &[100, 1000, 10_000]);
    assert_eq!(fit.len(), 3);
    for r in &fit {
        assert!((r.violation_slope.unwrap() - 0.5).abs() < 1e-12);
        assert!((r.regret_slope.unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn shipped_configs_match_the_acceptance_setup() {
    let reduced = ScenarioConfig::load(configs().join("sioux_falls_reduced.toml")).unwrap();
    let sweep = ScenarioConfig::load(configs().join("sioux_falls_sweep.toml")).unwrap();
    let want = reduced_sioux_falls(100);
    for cfg in [&reduced, &sweep] {
        assert_eq!(cfg.demand_scale, want.demand_scale);
        assert_eq!(cfg.capacity_scale, want.capacity_scale);
        assert_eq!(cfg.step, want.step);
        assert_eq!(cfg.step_scale, want.step_scale);
        assert_eq!(cfg.od_resample_prob, want.od_resample_prob);
    }
    assert_eq!(sweep.seeds, want.seeds);
    assert_eq!(sweep.oracle_every, want.oracle_every);
    assert_eq!(ScenarioConfig::from_toml(&reduced.to_toml()).unwrap(), reduced);
}

#[test]
fn data_dir_env_var_is_honoured() {
    // Only this test touches the variable.
    let dir = tempfile::tempdir().unwrap();
    std::env::set_var(tollsim::scenarios::DATA_DIR_ENV, dir.path());
    let cfg = ScenarioConfig::new(tollsim::scenarios::ScenarioKind::SiouxFalls, 5);
    assert_eq!(cfg.resolve_data_dir(), dir.path());
    let cfg_path = dir.path().join("sf.toml");
    fs::write(&cfg_path, "kind = \"sioux_falls\"\nhorizon = 5\n").unwrap();
    let out = dir.path().join("out");
    // No TNTP files there.
    assert_eq!(run(&["run", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_USAGE);
    std::env::remove_var(tollsim::scenarios::DATA_DIR_ENV);
}
