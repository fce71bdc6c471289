use std::path::Path;
use std::process::Command;

use cvqkd_cli::certificate::CertificateFile;
use cvqkd_cli::commands::{self, certificate_rate, RunOptions};
use cvqkd_cli::config::RunConfig;
use cvqkd_cli::CliError;
use tempfile::TempDir;

const SMALL: &str = "
[scheme]
alpha = 0.9
cutoff = 5

[channel]
distance_km = 10.0

[solver]
max_iter = 40
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cvqkd"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn operators_default_and_tiny_cutoff_pass() {
    let dir = TempDir::new().unwrap();
    let (code, stdout, _) = run(dir.path(), &["operators"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("Σ_z R^z"));
    let cfg = write(dir.path(), "c2.toml", "[scheme]\ncutoff = 2\n");
    let (code, _, _) = run(dir.path(), &["--config", cfg.to_str().unwrap(), "operators"]);
    assert_eq!(code, 0);
    let report = commands::operators(&RunConfig::from_toml("").unwrap()).unwrap();
    let key = report.checks.iter().find(|c| c.name.starts_with("key regions")).unwrap();
    assert!(key.value < 1e-9);
}

#[test]
fn invalid_config_and_missing_file_exit_codes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[scheme]\ndelta_amp = 0.9\ndelta_mod = 0.5\n");
    let (code, _, stderr) = run(dir.path(), &["--config", cfg.to_str().unwrap(), "operators"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("scheme.delta_mod"), "{stderr}");
    let (code, _, _) = run(dir.path(), &["--config", "does-not-exist.toml", "operators"]);
    assert_eq!(code, 3);
}

#[test]
fn asymptotic_point_cache_verify_and_tamper() {
    let dir = TempDir::new().unwrap();
    let cfg = RunConfig::from_toml(SMALL).unwrap();
    let opts = RunOptions::new(dir.path().join("out"));
    let rows = commands::asymptotic(&cfg, &opts).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert!(row.ok(), "{}", row.status);
    assert_eq!(row.best, 1);
    assert!(!row.cached);
    assert!(row.rate > 0.0 && row.rate < 0.2, "rate {}", row.rate);
    assert!(row.lower_bound <= row.primal_ub + 1e-9);
    let certs: Vec<_> = std::fs::read_dir(&opts.cache).unwrap().collect();
    assert_eq!(certs.len(), 1);
    let csv = std::fs::read_to_string(opts.out.join("asymptotic.csv")).unwrap();
    assert!(csv.starts_with("D,xi,alpha,rate,primal_ub,lower_bound,gap,eps_prime,iterations"));

    let again = commands::asymptotic(&cfg, &opts).unwrap();
    assert!(again[0].cached);
    assert_eq!(again[0].rate, row.rate);

    let path = Path::new(&row.certificate);
    let file = CertificateFile::read(path).unwrap();
    let report = commands::verify(path, None).unwrap();
    assert!(report.certified);
    assert!(report.eps_prime_consistent);

    let (code, stdout, _) = run(dir.path(), &["verify", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("certified"));

    let mut tampered = file.clone();
    tampered.nu_pe[0] += 1.0;
    let bad = dir.path().join("tampered.json");
    tampered.save(&bad).unwrap();
    let report = commands::verify(&bad, None).unwrap();
    assert!(!report.certified);
    assert!(report.lambda_min < 0.0);
    let (code, _, stderr) = run(dir.path(), &["verify", bad.to_str().unwrap()]);
    assert_eq!(code, 1, "{stderr}");

    let other = RunConfig::from_toml("[scheme]\nalpha = 0.9\ncutoff = 6\n").unwrap();
    assert!(matches!(commands::verify(path, Some(&other)), Err(CliError::HashMismatch { .. })));
    let mut echoed = file.clone();
    echoed.scheme.cutoff = 6;
    let moved = dir.path().join("echo.json");
    echoed.save(&moved).unwrap();
    assert!(matches!(commands::verify(&moved, None), Err(CliError::HashMismatch { .. })));
}

#[test]
fn certificate_round_trip_is_exact() {
    let dir = TempDir::new().unwrap();
    let cfg = RunConfig::from_toml(SMALL).unwrap();
    let opts = RunOptions::new(dir.path());
    let rows = commands::asymptotic(&cfg, &opts).unwrap();
    let path = Path::new(&rows[0].certificate);
    let file = CertificateFile::read(path).unwrap();
    let copy = dir.path().join("copy.json");
    file.save(&copy).unwrap();
    let back = CertificateFile::read(&copy).unwrap();
    assert_eq!(back, file);
    let (a, b) = (file.certificate().unwrap(), back.certificate().unwrap());
    assert_eq!(a, b);
    let (r1, _) = certificate_rate(&file).unwrap();
    let (r2, _) = certificate_rate(&back).unwrap();
    assert!((r1 - r2).abs() <= 1e-12);
    assert!((r1 - rows[0].rate).abs() <= 1e-12);
}

#[test]
fn distance_sweep_and_finite_rates_are_ordered() {
    let dir = TempDir::new().unwrap();
    let text = "
[scheme]
alpha = 0.9
cutoff = 5

[channel]
distance_km_grid = [5.0, 15.0, 30.0]
excess_noise = 0.01

[protocol]
f_ec = 0.01

[security]
n_grid = [1e12, 1e13, 1e14, 1e15]

[solver]
max_iter = 40
";
    let cfg = RunConfig::from_toml(text).unwrap();
    let opts = RunOptions::new(dir.path());

    let missing = commands::finite(&cfg, &opts).unwrap_err();
    assert!(matches!(missing, CliError::MissingCertificate(_)));
    assert!(missing.to_string().contains("asymptotic"));

    let rows = commands::asymptotic(&cfg, &opts).unwrap();
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        assert!(w[1].rate <= w[0].rate + 1e-9, "{} then {}", w[0].rate, w[1].rate);
    }
    let finite = commands::finite(&cfg, &opts).unwrap();
    assert_eq!(finite.len(), 12);
    for d in [5.0, 15.0, 30.0] {
        let series: Vec<f64> = finite.iter().filter(|r| r.distance_km == d).map(|r| r.finite_rate).collect();
        assert_eq!(series.len(), 4);
        for w in series.windows(2) {
            assert!(w[1] >= w[0], "{series:?}");
        }
        let asym = finite.iter().find(|r| r.distance_km == d).unwrap().asymptotic_rate;
        assert!(series.iter().all(|&r| r <= asym + 1e-9));
    }
    let near = finite.iter().find(|r| r.distance_km == 5.0 && r.n == 1e12).unwrap();
    assert!(near.finite_rate > 0.0, "{near:?}");
}

#[test]
fn mc_check_is_reproducible_and_sensitive() {
    let dir = TempDir::new().unwrap();
    let base = "[scheme]\ncutoff = 5\n[mc]\nsamples = 400000\ntrials = 500\n";
    let cfg = RunConfig::from_toml(base).unwrap();
    let mut opts = RunOptions::new(dir.path());
    opts.seed = 7;
    let a = commands::mc_check(&cfg, &opts).unwrap();
    let b = commands::mc_check(&cfg, &opts).unwrap();
    assert_eq!(a.to_string(), b.to_string());
    assert!(a.pass(), "{a}");

    let wrong = RunConfig::from_toml(&format!("{base}reference_excess_noise = 0.3\n")).unwrap();
    let r = commands::mc_check(&wrong, &opts).unwrap();
    assert!(!r.flagged().is_empty(), "{r}");

    let cfg_path = write(dir.path(), "wrong.toml", &format!("{base}reference_excess_noise = 0.3\n"));
    let (code, _, _) = run(dir.path(), &["--config", cfg_path.to_str().unwrap(), "mc-check"]);
    assert_eq!(code, 1);
}
