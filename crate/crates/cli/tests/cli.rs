use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qsd_cli::commands::failure_log_path;
use qsd_cli::config::{dump_config, parse_config};
use qsd_cli::csvio::{read_result, read_sweep, write_result};
use qsd_cli::engine::{simulate, solve_fields};
use qsd_cli::fieldcache::{decode, encode};
use qsd_core::trajectory::Method;
use qsd_core::ParameterSet;

const BIN: &str = env!("CARGO_BIN_EXE_cascade-qsd");

fn config(method: &str, extra: &str) -> String {
    format!(
        "# small Bell-state run\nmodel.g = 1\nmodel.kappa1 = 1\nmodel.kappa2 = 1\nmodel.omega_s = 2\n\
         bath.Gamma = 1\nbath.gamma = 5\nsim.t_max = 0.5\nsim.dt = 0.01\nsim.n_traj = 150\nsim.seed = 11\n\
         sim.initial_state = bell_psi_plus\nsim.method = {method}\n{extra}"
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(BIN);
    c.args(args);
    match threads {
        Some(n) => c.env("CASCADE_QSD_THREADS", n),
        None => c.env_remove("CASCADE_QSD_THREADS"),
    };
    c.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.cfg", &config("qsd", "sweep.parameter = g\nsweep.values = 0.5, 1\n"));
    let o = cli(&["dump-config", s(&cfg)], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let dumped = String::from_utf8(o.stdout).unwrap();
    assert!(dumped.contains("sim.eom_variant = as_printed"));
    let reparsed = parse_config(&dumped).unwrap();
    assert_eq!(reparsed, parse_config(&fs::read_to_string(&cfg).unwrap()).unwrap());
    assert_eq!(dump_config(&reparsed), dumped);
}

#[test]
fn config_errors_exit_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", &config("qsd", "this line is wrong\n"));
    let o = cli(&["run", s(&bad)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 14"), "{}", stderr(&o));

    let missing = write(dir.path(), "missing.cfg", "model.g = 1\n");
    let o = cli(&["dump-config", s(&missing)], None);
    assert_eq!(o.status.code(), Some(2));
    for key in ["model.kappa1", "bath.gamma", "sim.method"] {
        assert!(stderr(&o).contains(key), "{}", stderr(&o));
    }

    let domain = write(dir.path(), "domain.cfg", &config("qsd", "").replace("bath.gamma = 5", "bath.gamma = -1"));
    let o = cli(&["run", s(&domain)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bath.gamma"), "{}", stderr(&o));
}

#[test]
fn result_csv_round_trips_exactly() {
    let c = parse_config(&config("qsd", "")).unwrap();
    let r = simulate(&c.params, c.method, None).unwrap();
    let mut buf = Vec::new();
    write_result(&mut buf, &r).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("# generator = cascade-qsd"));
    assert_eq!(text.lines().find(|l| !l.starts_with('#')).unwrap().split(',').count(), 25);

    let t = read_result(BufReader::new(&buf[..])).unwrap();
    assert_eq!(t.times, r.times);
    assert_eq!(t.rho, r.rho);
    assert_eq!(t.trace_raw, r.rho_raw_trace);
    assert_eq!(t.concurrence, r.concurrence);
    assert_eq!(t.concurrence_stderr, r.concurrence_stderr);
    assert_eq!(t.min_eig, r.min_eig);
    let prov: Vec<&str> = t.provenance.iter().map(|(k, _)| k.as_str()).collect();
    for key in ["parameter_hash", "seed", "method", "eom_variant", "generator"] {
        assert!(prov.contains(&key));
    }
}

#[test]
fn run_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", &config("qsd", ""));
    let mut outputs = Vec::new();
    for threads in [Some("1"), Some("3"), None] {
        let out = dir.path().join(format!("out_{threads:?}.csv"));
        let o = cli(&["run", s(&cfg), "--output", s(&out)], threads);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(&out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", &config("closed", "").replace("bath.Gamma = 1", "bath.Gamma = 0"));
    let o = cli(&["run", s(&cfg)], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CASCADE_QSD_THREADS"));
}

#[test]
fn quadrature_with_bath_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.cfg", &config("quadrature", ""));
    let o = cli(&["run", s(&cfg)], None);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn compare_reports_and_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let qsd = dir.path().join("qsd.csv");
    let oracle = dir.path().join("oracle.csv");
    for (m, out) in [("qsd", &qsd), ("oracle", &oracle)] {
        let cfg = write(dir.path(), &format!("{m}.cfg"), &config(m, ""));
        assert!(cli(&["run", s(&cfg), "-o", s(out)], None).status.success());
    }
    let o = cli(&["compare", s(&qsd), s(&qsd)], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("max_trace_distance = 0.0"), "{text}");

    let o = cli(&["compare", s(&qsd), s(&oracle)], None);
    let text = String::from_utf8(o.stdout).unwrap();
    for key in ["max_trace_distance", "mean_trace_distance", "max_concurrence_diff"] {
        assert!(text.contains(key));
    }
    assert_eq!(o.status.code(), Some(0), "{text}");
    let o = cli(&["compare", s(&qsd), s(&oracle), "--threshold", "1e-6"], None);
    assert_eq!(o.status.code(), Some(1));

    let short = dir.path().join("short.csv");
    let cfg = write(dir.path(), "short.cfg", &config("oracle", "").replace("sim.t_max = 0.5", "sim.t_max = 0.3"));
    assert!(cli(&["run", s(&cfg), "-o", s(&short)], None).status.success());
    let o = cli(&["compare", s(&qsd), s(&short)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("time grids differ"));
}

#[test]
fn sweep_rows_ordered_by_value_then_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let cfg = write(dir.path(), "s.cfg", &config("oracle", &format!("sweep.parameter = g\nsweep.values = 1.5, 0.5\noutput.path = {}\n", s(&out))));
    let o = cli(&["sweep", s(&cfg)], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_sweep(BufReader::new(fs::File::open(&out).unwrap())).unwrap();
    assert_eq!(rows.len(), 2 * 51);
    assert!(rows[..51].iter().all(|r| r[0] == 0.5));
    assert!(rows[51..].iter().all(|r| r[0] == 1.5));
    assert!(rows[..51].windows(2).all(|w| w[0][1] < w[1][1]));
    assert!(!failure_log_path(&out).exists());
}

#[test]
fn sweep_logs_failed_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let base = config("quadrature", &format!("sweep.parameter = Gamma\nsweep.values = 0, 1\noutput.path = {}\n", s(&out)));
    let cfg = write(dir.path(), "s.cfg", &base.replace("bath.Gamma = 1", "bath.Gamma = 0"));
    let o = cli(&["sweep", s(&cfg)], None);
    assert_eq!(o.status.code(), Some(1));
    let rows = read_sweep(BufReader::new(fs::File::open(&out).unwrap())).unwrap();
    assert!(rows.len() == 51 && rows.iter().all(|r| r[0] == 0.0));
    let log = fs::read_to_string(failure_log_path(&out)).unwrap();
    assert!(log.starts_with("Gamma = 1.0"), "{log}");
}

#[test]
fn field_cache_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = ParameterSet { t_max: 0.3, n_traj: 64, ..Default::default() };
    let fresh = solve_fields(&p, None).unwrap();
    let (decoded, key) = decode(&encode(&fresh, "k")).unwrap();
    assert_eq!(decoded, fresh);
    assert!(key.starts_with('k'));

    let cache = dir.path().join("fields");
    let stored = solve_fields(&p, Some(&cache)).unwrap();
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    let loaded = solve_fields(&p, Some(&cache)).unwrap();
    assert_eq!(stored, loaded);
    assert_eq!(simulate(&p, Method::Qsd, Some(&cache)).unwrap(), simulate(&p, Method::Qsd, None).unwrap());

    let mut bytes = encode(&fresh, "k");
    bytes.pop();
    assert!(decode(&bytes).is_err());
}

#[test]
fn noise_check_passes_on_sampled_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "n.cfg", &config("qsd", ""));
    let o = cli(&["noise-check", s(&cfg), "--paths", "1000"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8(o.stdout).unwrap().contains("cov_y_beta"));
}
