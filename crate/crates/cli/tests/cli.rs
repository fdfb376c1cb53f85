use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use deepwave_cli::{
    apply_overrides, list_files, load_config, run_command, Command, ConfigError, Overrides, RunConfig, RunManifest,
    TaskStatus, MANIFEST_FILE, OUT_ENV,
};

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn config(text: &str, out: &Path) -> RunConfig {
    let mut c = RunConfig::parse(text).unwrap();
    c.out = out.to_path_buf();
    c
}

/// Files on disk are exactly the indexed ones plus the manifest.
fn check_index(m: &RunManifest, out: &Path) {
    let mut want = m.files.clone();
    want.push(MANIFEST_FILE.to_string());
    want.sort();
    assert_eq!(list_files(out).unwrap(), want);
    let mut per_task: Vec<&String> = m.tasks.iter().flat_map(|t| &t.files).collect();
    per_task.sort();
    let before = per_task.len();
    per_task.dedup();
    assert_eq!(before, per_task.len(), "a file is claimed by two tasks");
    assert_eq!(per_task.len(), m.files.len());
}

fn bin() -> Proc {
    let mut c = Proc::new(env!("CARGO_BIN_EXE_deepwave"));
    c.env_remove(OUT_ENV);
    c
}

const IDENTITIES: &str = "command = \"verify-identities\"\nmu = [-1.0, 1.0]\n[grid]\nkind = \"line\"\nn = 4096\nlength = 200.0\n[identities]\nfamily_size = 6\n";

#[test]
fn load_config_from_file() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "a.toml", "command = \"stokes-continue\"\n[grid]\nkind = \"periodic\"\nn = 64\n");
    let c = load_config(&p).unwrap();
    assert_eq!(c.command, Command::StokesContinue);
    assert_eq!(c.seed, 0);
    assert_eq!(c.grid.build().unwrap().length(), 2.0 * std::f64::consts::PI);
    assert!(matches!(load_config(&d.path().join("missing.toml")), Err(ConfigError::Io { .. })));
}

#[test]
fn unknown_nested_key_is_named() {
    let text = "command = \"spectrum\"\n[grid]\nkind = \"line\"\nn = 64\n[tolerances]\ngrvity = 9.8\n";
    let e = RunConfig::parse(text).unwrap_err();
    let msg = e.to_string();
    assert!(msg.contains("grvity") && msg.contains("line 6"), "{msg}");
}

#[test]
fn overrides_follow_precedence() {
    let mut c = RunConfig::parse(IDENTITIES).unwrap();
    let env = Some(PathBuf::from("env-out"));
    apply_overrides(&mut c, &Overrides::default(), env.clone()).unwrap();
    assert_eq!(c.out, PathBuf::from("env-out"));
    let o = Overrides { out: Some("flag-out".into()), seed: Some(7), tolerance_scale: Some(10.0) };
    apply_overrides(&mut c, &o, env).unwrap();
    assert_eq!(c.out, PathBuf::from("flag-out"));
    assert_eq!(c.seed, 7);
    assert!((c.tolerances.identity - 1e-4).abs() < 1e-18);
    let bad = Overrides { tolerance_scale: Some(-1.0), ..Overrides::default() };
    assert!(
        matches!(apply_overrides(&mut c, &bad, None), Err(ConfigError::Invalid { ref key, .. }) if key == "tolerance-scale")
    );
}

#[test]
fn verify_identities_all_pass() {
    let d = tempfile::tempdir().unwrap();
    let m = run_command(&config(IDENTITIES, d.path()), Some(1)).unwrap();
    assert_eq!(m.exit_code(), 0, "{:?}", m.tasks);
    assert_eq!(m.tasks.len(), 7);
    check_index(&m, d.path());
    let csv = fs::read_to_string(d.path().join("identities.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("name,lhs,rhs,defect,tolerance,passed"));
    // per profile: commutator, skew pairing, one Pohozaev row per μ
    assert_eq!(csv.lines().count(), 1 + 6 * 4);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn stokes_continue_writes_branch() {
    let d = tempfile::tempdir().unwrap();
    let text = "command = \"stokes-continue\"\nmu = [0.98]\n[grid]\nkind = \"periodic\"\nn = 64\n[stokes]\nsteps = 4\n";
    let m = run_command(&config(text, d.path()), None).unwrap();
    assert_eq!(m.exit_code(), 0, "{:?}", m.tasks);
    check_index(&m, d.path());
    let csv = fs::read_to_string(d.path().join("branch.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("mu,amplitude,residual,iterations"));
    assert_eq!(csv.lines().count(), 1 + 5);
    let first: Vec<f64> = csv.lines().nth(1).unwrap().split(',').take(2).map(|v| v.parse().unwrap()).collect();
    assert!((first[1] - 0.02f64.sqrt()).abs() < 1e-12);
    assert!(first[0] > 0.97 && first[0] < 0.99);
}

#[test]
fn stokes_above_onset_needs_an_amplitude() {
    let d = tempfile::tempdir().unwrap();
    let text = "command = \"stokes-continue\"\nmu = [1.2]\n[grid]\nkind = \"periodic\"\nn = 64\n";
    let m = run_command(&config(text, d.path()), None).unwrap();
    assert_eq!(m.exit_code(), 1);
    assert!(m.tasks[0].message.as_deref().unwrap().contains("stokes.amplitude"));
}

#[test]
fn probe_campaign_of_twelve() {
    let d = tempfile::tempdir().unwrap();
    let text = "command = \"solitary-probe\"\nmu = [1.0]\n[grid]\nkind = \"line\"\nn = 1024\nlength = 50.0\n[probe]\nmax_iter = 30\n";
    let m = run_command(&config(text, d.path()), None).unwrap();
    check_index(&m, d.path());
    let jsons: Vec<_> = m.files.iter().filter(|f| f.starts_with("probes/") && f.ends_with(".json")).collect();
    assert_eq!(jsons.len(), 12);
    let csv = fs::read_to_string(d.path().join("probes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    let one = fs::read_to_string(d.path().join(jsons[0])).unwrap();
    assert!(one.contains("\"certificate\": {"));
    assert!(one.contains("\"decay\": {") || one.contains("\"decay\": null"));
}

#[test]
fn spectrum_and_operator_export() {
    let d = tempfile::tempdir().unwrap();
    let text = "command = \"spectrum\"\nmu = [-1.0, -0.5]\n[grid]\nkind = \"line\"\nn = 128\nlength = 40.0\n[spectrum]\nexport_operator = true\neigenvectors = 2\n";
    let m = run_command(&config(text, d.path()), None).unwrap();
    assert_eq!(m.exit_code(), 0, "{:?}", m.tasks);
    check_index(&m, d.path());
    let bytes = fs::read(d.path().join("operator_mu-1.bin")).unwrap();
    let nl = bytes.iter().position(|b| *b == b'\n').unwrap();
    assert_eq!(bytes.len() - nl - 1, 128 * 128 * 8);
    assert!(m.files.contains(&"eigenvector1_mu-0.5.csv".to_string()));
}

#[test]
fn linear_solve_rejects_nonpositive_mu_per_task() {
    let d = tempfile::tempdir().unwrap();
    let text = "command = \"linear-solve\"\nmu = [1.0, -1.0]\n[grid]\nkind = \"line\"\nn = 4096\nlength = 200.0\n[[templates]]\nname = \"g\"\nshape = \"gaussian\"\nwidth = 10.0\n";
    let m = run_command(&config(text, d.path()), None).unwrap();
    let status: Vec<TaskStatus> = m.tasks.iter().map(|t| t.status).collect();
    assert_eq!(status, vec![TaskStatus::Ok, TaskStatus::Failed, TaskStatus::Ok]);
    assert_eq!(m.exit_code(), 1);
    check_index(&m, d.path());
}

#[test]
fn bvp_check_passes_on_periodic_data() {
    let d = tempfile::tempdir().unwrap();
    let text = "command = \"bvp-check\"\nmu = [0.5, 2.0]\n[grid]\nkind = \"periodic\"\nn = 64\n";
    let m = run_command(&config(text, d.path()), None).unwrap();
    assert_eq!(m.exit_code(), 0, "{:?}", m.tasks);
    let csv = fs::read_to_string(d.path().join("bvp_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let text = "command = \"solitary-probe\"\nmu = [0.5, 2.0]\n[grid]\nkind = \"line\"\nn = 512\nlength = 40.0\n[probe]\nmax_iter = 10\n[[templates]]\nname = \"a\"\nshape = \"sech2\"\namplitude = 0.2\n[[templates]]\nname = \"b\"\nshape = \"packet\"\namplitude = -0.2\nwidth = 4.0\n";
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m1 = run_command(&config(text, d1.path()), Some(1)).unwrap();
    let m2 = run_command(&config(text, d2.path()), Some(3)).unwrap();
    assert_eq!(m1.files, m2.files);
    for f in &m1.files {
        assert_eq!(fs::read(d1.path().join(f)).unwrap(), fs::read(d2.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn binary_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let ok = write(d.path(), "ok.toml", "command = \"bvp-check\"\n[grid]\nkind = \"periodic\"\nn = 32\n");
    let out = d.path().join("run");
    let s = bin().args(["--config", ok.to_str().unwrap(), "--out", out.to_str().unwrap()]).status().unwrap();
    assert_eq!(s.code(), Some(0));
    assert!(out.join(MANIFEST_FILE).exists());

    let bad = write(d.path(), "bad.toml", "command = \"bvp-check\"\ngrvity = 1\n[grid]\nkind = \"periodic\"\nn = 32\n");
    let o = bin().args(["--config", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grvity"));

    let neg = write(
        d.path(),
        "neg.toml",
        "command = \"bvp-check\"\n[grid]\nkind = \"periodic\"\nn = 32\n[tolerances]\nidentity = -1\n",
    );
    assert_eq!(bin().args(["--config", neg.to_str().unwrap()]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["--config", "/nonexistent.toml"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["--bogus"]).status().unwrap().code(), Some(2));

    let failing = write(
        d.path(),
        "fail.toml",
        "command = \"linear-solve\"\nmu = [-1.0]\n[grid]\nkind = \"line\"\nn = 256\nlength = 40.0\n",
    );
    let s = bin().args(["--config", failing.to_str().unwrap(), "--out", out.to_str().unwrap()]).status().unwrap();
    assert_eq!(s.code(), Some(1));
}

#[test]
fn environment_overrides_config_but_not_flag() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "c.toml",
        "command = \"bvp-check\"\nout = \"from-file\"\n[grid]\nkind = \"periodic\"\nn = 32\n",
    );
    let (env_dir, flag_dir) = (d.path().join("env"), d.path().join("flag"));
    let s = bin().env(OUT_ENV, &env_dir).args(["--config", cfg.to_str().unwrap()]).status().unwrap();
    assert_eq!(s.code(), Some(0));
    assert!(env_dir.join(MANIFEST_FILE).exists());
    let s = bin()
        .env(OUT_ENV, &env_dir)
        .args(["--config", cfg.to_str().unwrap(), "--out", flag_dir.to_str().unwrap(), "--threads", "1"])
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    assert!(flag_dir.join(MANIFEST_FILE).exists());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 6);
}
