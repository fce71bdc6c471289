//! Subcommand implementations. Each returns structured rows or a report; `main`
//! handles printing and exit codes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cvqkd_core::convex::{DualCertificate, ObjectiveContext};
use cvqkd_core::finite::{asymptotic_rate, delta_tol_pe, delta_tol_tom, optimize_rate, RateCandidate};
use cvqkd_core::fock::{build_g_map, constraint_matrices, ic_povm, key_region_operator, pe_region_operator, ModulationScheme};
use cvqkd_core::honest::{assemble_p0, ec_leak_rate, sample_counts, HonestChannel, HonestStatistics};
use cvqkd_core::linalg::{identity_residual, lambda_min, trace_prod, CMat};
use cvqkd_core::pipeline::Certifier;
use cvqkd_core::tradeoff::{min_tradeoff_from_crossover, output_dimension, rebalance_dual, MinTradeoff};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{cache_path, operator_hash, CertificateFile, Diagnostics, VerifyReport};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Flags shared by the compute subcommands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub cache: PathBuf,
    pub workers: usize,
    pub seed: u64,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        let out = out.into();
        let cache = out.join("certificates");
        Self { out, cache, workers: 1, seed: 0 }
    }

    fn pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| CliError::Io(format!("worker pool: {e}")))
    }
}

fn sum(ops: &[CMat]) -> CMat {
    ops.iter().skip(1).fold(ops[0].clone(), |acc, a| acc + a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorReport {
    pub cutoff: usize,
    pub m: usize,
    pub checks: Vec<Check>,
}

impl OperatorReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl std::fmt::Display for OperatorReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "operators at N_c = {}, m = {}", self.cutoff, self.m)?;
        for c in &self.checks {
            let verdict = if c.pass { "ok" } else { "FAIL" };
            if c.limit >= 1.0 {
                writeln!(f, "  {:<34} {:>10}  need  {}  {verdict}", c.name, c.value, c.limit)?;
            } else {
                writeln!(f, "  {:<34} {:>10.3e}  limit {:.0e}  {verdict}", c.name, c.value, c.limit)?;
            }
        }
        Ok(())
    }
}

fn below(name: &str, value: f64, limit: f64) -> Check {
    Check { name: name.into(), value, limit, pass: value <= limit }
}

/// Builds every operator family and checks completeness, positivity and span.
pub fn operators(cfg: &RunConfig) -> CliResult<OperatorReport> {
    let scheme = cfg.scheme(cfg.alphas()?[0])?;
    let nc = scheme.cutoff;
    let key: Vec<CMat> = (0..4).map(|z| key_region_operator(z, nc)).collect::<Result<_, _>>()?;
    let pe: Vec<CMat> = (0..scheme.m()).map(|z| pe_region_operator(z, &scheme)).collect::<Result<_, _>>()?;
    let g = build_g_map(nc)?;
    let povm = ic_povm();
    let min_eig = key.iter().chain(&pe).chain(&povm).map(lambda_min).fold(f64::INFINITY, f64::min);
    let gram = nalgebra::DMatrix::from_fn(16, 16, |i, j| trace_prod(&povm[i], &povm[j]));
    let rank = gram.symmetric_eigenvalues().iter().filter(|&&v| v > 1e-10).count();
    let checks = vec![
        below("key regions Σ_z R^z − 1", identity_residual(&sum(&key)), 1e-9),
        below("PE regions Σ_z R̃^z − 1", identity_residual(&sum(&pe)), 1e-9),
        below("G†G − 1", identity_residual(&g.kraus_sum()), 1e-8),
        below("IC-POVM Σ Γ − 1", identity_residual(&sum(&povm)), 1e-12),
        below("negative eigenvalue magnitude", (-min_eig).max(0.0), 1e-12),
        Check { name: "IC-POVM operator-span rank".into(), value: rank as f64, limit: 16.0, pass: rank == 16 },
    ];
    Ok(OperatorReport { cutoff: nc, m: scheme.m(), checks })
}

/// One asymptotic CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticRow {
    #[serde(rename = "D")]
    pub distance_km: f64,
    pub xi: f64,
    pub alpha: f64,
    pub rate: f64,
    pub primal_ub: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub eps_prime: f64,
    pub iterations: usize,
    /// 1 on the rate-maximizing amplitude of each `(D, ξ)` group.
    pub best: u8,
    pub status: String,
    pub cutoff: usize,
    pub delta_amp: f64,
    pub delta_mod: f64,
    pub attenuation_db_per_km: f64,
    pub f_ec: f64,
    pub cached: bool,
    pub certificate: String,
}

impl AsymptoticRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path.display(), e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(path.display(), e))?;
    }
    w.flush().map_err(|e| CliError::io(path.display(), e))
}

/// Loads a cached certificate for this point, if one exists and still verifies.
fn cached(path: &Path, scheme: &ModulationScheme, channel: &HonestChannel, f_ec: f64) -> Option<CertificateFile> {
    if !path.exists() {
        return None;
    }
    let (file, _) = CertificateFile::load_verified(path).ok()?;
    file.matches(scheme, channel, f_ec).then_some(file)
}

fn solve_point(
    certifier: &Certifier,
    cfg: &RunConfig,
    opts: &RunOptions,
    distance_km: f64,
    xi: f64,
    alpha: f64,
) -> CliResult<(CertificateFile, bool, PathBuf)> {
    let f_ec = cfg.protocol.f_ec;
    let scheme = cfg.scheme(alpha)?;
    let channel = cfg.channel(distance_km, xi)?;
    let path = cache_path(&opts.cache, &scheme, &channel, f_ec);
    if let Some(file) = cached(&path, &scheme, &channel, f_ec) {
        return Ok((file, true, path));
    }
    let t = Instant::now();
    let point = certifier.certify(alpha, channel, f_ec)?;
    let file =
        CertificateFile::new(&scheme, &channel, f_ec, point.certificate(), certifier.constraints(), Diagnostics::of(&point.fw));
    file.save(&path)?;
    eprintln!(
        "certified D={distance_km} ξ={xi} α={alpha}: {} iterations, {:.1} s",
        file.diagnostics.iterations,
        t.elapsed().as_secs_f64()
    );
    Ok((file, false, path))
}

/// Asymptotic rate implied by a certificate file, recomputed from its echo.
pub fn certificate_rate(file: &CertificateFile) -> CliResult<(f64, f64)> {
    let scheme = file.scheme.build()?;
    let channel = file.channel.build()?;
    let stats = HonestStatistics::compute(&channel, &scheme)?;
    let cert = file.certificate()?;
    let leak = ec_leak_rate(&stats.ec, file.f_ec, 1.0, false);
    Ok((asymptotic_rate(&cert, &stats, leak), cert.bound(&stats.rhs())))
}

/// Runs Frank-Wolfe (or reuses cached certificates) on every `(D, ξ, α)` point and
/// writes the CSV. Per-point failures are recorded in the `status` column.
pub fn asymptotic(cfg: &RunConfig, opts: &RunOptions) -> CliResult<Vec<AsymptoticRow>> {
    let s = &cfg.scheme;
    let certifier = Certifier::new(s.delta_amp, s.delta_mod, s.cutoff, cfg.fw_options())?;
    let mut points = Vec::new();
    for d in cfg.distances()? {
        for xi in cfg.excess_noises()? {
            for alpha in cfg.alphas()? {
                points.push((d, xi, alpha));
            }
        }
    }
    let blank = |d: f64, xi: f64, alpha: f64, status: String| AsymptoticRow {
        distance_km: d,
        xi,
        alpha,
        rate: f64::NAN,
        primal_ub: f64::NAN,
        lower_bound: f64::NAN,
        gap: f64::NAN,
        eps_prime: f64::NAN,
        iterations: 0,
        best: 0,
        status,
        cutoff: s.cutoff,
        delta_amp: s.delta_amp,
        delta_mod: s.delta_mod,
        attenuation_db_per_km: cfg.channel.attenuation_db_per_km,
        f_ec: cfg.protocol.f_ec,
        cached: false,
        certificate: String::new(),
    };
    let pool = opts.pool()?;
    let mut rows: Vec<AsymptoticRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&(d, xi, alpha)| {
                let solved = solve_point(&certifier, cfg, opts, d, xi, alpha)
                    .and_then(|(file, was_cached, path)| certificate_rate(&file).map(|r| (file, was_cached, path, r)));
                match solved {
                    Ok((file, was_cached, path, (rate, lb))) => AsymptoticRow {
                        rate,
                        primal_ub: file.diagnostics.upper_bound,
                        lower_bound: lb,
                        gap: file.diagnostics.gap,
                        eps_prime: file.eps_prime,
                        iterations: file.diagnostics.iterations,
                        status: "ok".into(),
                        cached: was_cached,
                        certificate: path.display().to_string(),
                        ..blank(d, xi, alpha, String::new())
                    },
                    Err(e) => blank(d, xi, alpha, e.to_string()),
                }
            })
            .collect()
    });
    rows.sort_by(|a, b| {
        a.distance_km.total_cmp(&b.distance_km).then(a.xi.total_cmp(&b.xi)).then(a.alpha.total_cmp(&b.alpha))
    });
    mark_best(&mut rows);
    write_csv(&opts.out.join(&cfg.output.asymptotic_csv), &rows)?;
    Ok(rows)
}

fn mark_best(rows: &mut [AsymptoticRow]) {
    let mut start = 0;
    while start < rows.len() {
        let key = (rows[start].distance_km, rows[start].xi);
        let end = start + rows[start..].iter().take_while(|r| (r.distance_km, r.xi) == key).count();
        let best = (start..end).filter(|&i| rows[i].ok()).max_by(|&i, &j| rows[i].rate.total_cmp(&rows[j].rate).then(j.cmp(&i)));
        if let Some(i) = best {
            rows[i].best = 1;
        }
        start = end;
    }
}

/// One finite-size CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteRow {
    #[serde(rename = "D")]
    pub distance_km: f64,
    pub xi: f64,
    pub n: f64,
    pub alpha: f64,
    pub a: f64,
    pub p_key: f64,
    pub p_pe_cond: f64,
    pub finite_rate: f64,
    pub asymptotic_rate: f64,
    pub delta_pe: f64,
    pub delta_tom: f64,
    pub gap: f64,
    pub eps_prime: f64,
    pub status: String,
    pub cutoff: usize,
    pub delta_amp: f64,
    pub delta_mod: f64,
    pub attenuation_db_per_km: f64,
    pub f_ec: f64,
    pub eps: f64,
    pub eps_phys_na: f64,
    pub eps_tom: f64,
    pub eps_ec: f64,
    pub eps_ec_c: f64,
    pub eps_pe_c: f64,
}

struct Loaded {
    alpha: f64,
    stats: HonestStatistics,
    tuned: Vec<(f64, DualCertificate)>,
    gap: f64,
}

/// Grid-optimized finite-size rates from cached certificates.
pub fn finite(cfg: &RunConfig, opts: &RunOptions) -> CliResult<Vec<FiniteRow>> {
    let s = &cfg.scheme;
    let f_ec = cfg.protocol.f_ec;
    let grid = cfg.rate_grid();
    let probe = cfg.scheme(cfg.alphas()?[0])?;
    let constraints = constraint_matrices(&probe)?;
    let ctx = ObjectiveContext::new(s.cutoff)?;
    let d_o = output_dimension(probe.m());
    let mut groups = Vec::new();
    for d in cfg.distances()? {
        for xi in cfg.excess_noises()? {
            let channel = cfg.channel(d, xi)?;
            let mut paths = Vec::new();
            for alpha in cfg.alphas()? {
                let scheme = cfg.scheme(alpha)?;
                let path = cache_path(&opts.cache, &scheme, &channel, f_ec);
                if !path.exists() {
                    return Err(CliError::MissingCertificate(format!("D={d} km, ξ={xi}, α={alpha} ({})", path.display())));
                }
                paths.push((alpha, path));
            }
            groups.push((d, xi, channel, paths));
        }
    }
    let pool = opts.pool()?;
    let results: Vec<CliResult<Vec<FiniteRow>>> = pool.install(|| {
        groups
            .par_iter()
            .map(|(d, xi, channel, paths)| {
                let mut loaded = Vec::new();
                for (alpha, path) in paths {
                    let (file, _) = CertificateFile::load_verified(path)?;
                    let scheme = cfg.scheme(*alpha)?;
                    if !file.matches(&scheme, channel, f_ec) {
                        return Err(CliError::Invariant(format!("{} does not match the configured point", path.display())));
                    }
                    let stats = HonestStatistics::compute(channel, &scheme)?;
                    let cert = file.certificate()?;
                    let tuned = grid
                        .p_pe_cond
                        .iter()
                        .map(|&p| Ok((p, rebalance_dual(&cert, &ctx, &constraints, &stats, p)?)))
                        .collect::<CliResult<Vec<_>>>()?;
                    loaded.push(Loaded { alpha: *alpha, stats, tuned, gap: file.diagnostics.gap });
                }
                let candidates: Vec<RateCandidate<'_>> = loaded
                    .iter()
                    .map(|l| RateCandidate { alpha: l.alpha, certificates: &l.tuned, stats: &l.stats, gap: l.gap })
                    .collect();
                let mut rows = Vec::new();
                for n in cfg.block_sizes()? {
                    let sec = cfg.security(n);
                    let base = FiniteRow {
                        distance_km: *d,
                        xi: *xi,
                        n,
                        alpha: f64::NAN,
                        a: f64::NAN,
                        p_key: f64::NAN,
                        p_pe_cond: f64::NAN,
                        finite_rate: f64::NAN,
                        asymptotic_rate: f64::NAN,
                        delta_pe: f64::NAN,
                        delta_tom: f64::NAN,
                        gap: f64::NAN,
                        eps_prime: f64::NAN,
                        status: String::new(),
                        cutoff: s.cutoff,
                        delta_amp: s.delta_amp,
                        delta_mod: s.delta_mod,
                        attenuation_db_per_km: cfg.channel.attenuation_db_per_km,
                        f_ec,
                        eps: sec.eps,
                        eps_phys_na: sec.eps_phys_na,
                        eps_tom: sec.eps_tom,
                        eps_ec: sec.eps_ec,
                        eps_ec_c: sec.eps_ec_c,
                        eps_pe_c: sec.eps_pe_c,
                    };
                    rows.push(match optimize_rate(&candidates, &grid, &sec, cfg.leak_model(), d_o) {
                        Ok(p) => FiniteRow {
                            alpha: p.alpha,
                            a: p.a,
                            p_key: p.p_key,
                            p_pe_cond: p.p_pe_cond,
                            finite_rate: p.finite_rate,
                            asymptotic_rate: p.asymptotic_rate,
                            delta_pe: p.delta_pe,
                            delta_tom: p.delta_tom,
                            gap: p.gap,
                            eps_prime: p.eps_prime,
                            status: "ok".into(),
                            ..base
                        },
                        Err(e) => FiniteRow { status: CliError::from(e).to_string(), ..base },
                    });
                }
                Ok(rows)
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| a.distance_km.total_cmp(&b.distance_km).then(a.xi.total_cmp(&b.xi)).then(a.n.total_cmp(&b.n)));
    write_csv(&opts.out.join(&cfg.output.finite_csv), &rows)?;
    Ok(rows)
}

/// Re-verifies a certificate file. With a config, the operators rebuilt from the
/// configured geometry must also match the stored hash.
pub fn verify(path: &Path, cfg: Option<&RunConfig>) -> CliResult<VerifyReport> {
    let file = CertificateFile::read(path)?;
    if let Some(cfg) = cfg {
        let scheme = cfg.scheme(file.scheme.alpha)?;
        let rebuilt = operator_hash(&constraint_matrices(&scheme)?);
        if rebuilt != file.constraint_hash || !cfg.alphas()?.contains(&file.scheme.alpha) {
            return Err(CliError::HashMismatch { stored: file.constraint_hash.clone(), rebuilt });
        }
    }
    file.verify()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellCheck {
    pub x: usize,
    pub z: usize,
    pub count: u64,
    pub expected: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationCheck {
    pub n: u64,
    pub delta_pe: f64,
    pub delta_tom: f64,
    pub violations_pe: f64,
    pub violations_tom: f64,
    pub eps_fail: f64,
}

impl ConcentrationCheck {
    pub fn pass(&self) -> bool {
        self.violations_pe <= self.eps_fail && self.violations_tom <= self.eps_fail
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub samples: u64,
    pub seed: u64,
    pub reference_xi: f64,
    pub cells: Vec<CellCheck>,
    pub statistic_source: String,
    pub concentration: Vec<ConcentrationCheck>,
}

impl McReport {
    pub const Z_LIMIT: f64 = 4.0;

    pub fn flagged(&self) -> Vec<&CellCheck> {
        self.cells.iter().filter(|c| c.z_score.abs() > Self::Z_LIMIT).collect()
    }

    pub fn pass(&self) -> bool {
        self.flagged().is_empty() && self.concentration.iter().all(ConcentrationCheck::pass)
    }
}

impl std::fmt::Display for McReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let max_z = self.cells.iter().map(|c| c.z_score.abs()).fold(0.0, f64::max);
        writeln!(f, "sampled {} rounds (seed {}), analytic reference ξ = {}", self.samples, self.seed, self.reference_xi)?;
        writeln!(f, "  {} cells, max |z| = {:.3}, limit {}", self.cells.len(), max_z, Self::Z_LIMIT)?;
        for c in self.flagged() {
            writeln!(f, "  FLAG x={} z={}: count {} expected {:.1} z-score {:.2}", c.x, c.z, c.count, c.expected, c.z_score)?;
        }
        writeln!(f, "concentration statistic: {}", self.statistic_source)?;
        for c in &self.concentration {
            writeln!(
                f,
                "  n={}: δ_PE {:.4e} violated {:.2e}, δ_tom {:.4e} violated {:.2e}, budget {:.0e}  {}",
                c.n,
                c.delta_pe,
                c.violations_pe,
                c.delta_tom,
                c.violations_tom,
                c.eps_fail,
                if c.pass() { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "status: {}", if self.pass() { "pass" } else { "FAIL" })
    }
}

fn multinomial(n: u64, p: &[f64], rng: &mut ChaCha20Rng) -> CliResult<Vec<u64>> {
    let mut out = vec![0u64; p.len()];
    let mut left = n;
    let mut mass = 1.0f64;
    for (i, &pi) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == p.len() {
            out[i] = left;
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, q).map_err(|e| CliError::Invariant(format!("binomial draw: {e}")))?.sample(rng);
        out[i] = k;
        left -= k;
        mass -= pi;
    }
    Ok(out)
}

/// Samples heterodyne rounds against the analytic statistics, then checks the
/// concentration radii by repeated multinomial draws.
pub fn mc_check(cfg: &RunConfig, opts: &RunOptions) -> CliResult<McReport> {
    let alpha = cfg.alphas()?[0];
    let scheme = cfg.scheme(alpha)?;
    let xi = cfg.excess_noises()?[0];
    let channel = cfg.channel(cfg.distances()?[0], xi)?;
    let reference_xi = cfg.mc.reference_excess_noise.unwrap_or(xi);
    let reference = HonestStatistics::compute(&cfg.channel(channel.distance_km, reference_xi)?, &scheme)?;
    let n = cfg.mc.samples;
    let counts = sample_counts(&channel, &scheme, n, opts.seed);
    let m = scheme.m();
    let cells = counts
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let p = reference.pe[i / m][i % m];
            let expected = n as f64 * p;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            let z_score = if sd > 0.0 { (k as f64 - expected) / sd } else if k == 0 { 0.0 } else { f64::INFINITY };
            CellCheck { x: i / m, z: i % m, count: k, expected, z_score }
        })
        .collect();

    let stats = HonestStatistics::compute(&channel, &scheme)?;
    let (p_key, p_pe_cond) = (0.5, 0.5);
    let path = cache_path(&opts.cache, &scheme, &channel, cfg.protocol.f_ec);
    let (mt, statistic_source) = match CertificateFile::load_verified(&path) {
        Ok((file, _)) => (min_tradeoff_from_crossover(&file.certificate()?, p_key, p_pe_cond)?, format!("min-tradeoff of {}", path.display())),
        Err(_) => {
            let mut rng: ChaCha20Rng = rand::SeedableRng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
            let mut draw = |len: usize| (0..len).map(|_| -rng.random::<f64>()).collect::<Vec<f64>>();
            let mt = MinTradeoff {
                h_pe: draw(4 * m),
                h_tom: draw(16),
                constant: 0.0,
                max_g: 0.0,
                min_g: 0.0,
                p_key,
                p_pe_cond,
            };
            (mt, "random coefficients in [−1, 0] (no cached certificate)".to_string())
        }
    };
    let p0 = assemble_p0(p_key, (1.0 - p_key) * p_pe_cond, (1.0 - p_key) * (1.0 - p_pe_cond), &stats)?;
    let pi = p0.to_vec();
    let (n_pe, n_tom) = (p0.pe.len(), p0.tom.len());
    let dot = |h: &[f64], q: &[f64]| h.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
    let eps_fail = cfg.mc.eps_fail;
    let mut rng: ChaCha20Rng = rand::SeedableRng::seed_from_u64(opts.seed);
    let mut concentration = Vec::new();
    for &nc in &cfg.mc.concentration_n {
        let d_pe = delta_tol_pe(&mt, &p0, nc as f64, eps_fail)?;
        let d_tom = delta_tol_tom(&mt, &p0, nc as f64, eps_fail)?;
        let (mut v_pe, mut v_tom) = (0usize, 0usize);
        for _ in 0..cfg.mc.trials {
            let freq: Vec<f64> = multinomial(nc, &pi, &mut rng)?.iter().map(|&k| k as f64 / nc as f64).collect();
            if (dot(&mt.h_pe, &freq[..n_pe]) - dot(&mt.h_pe, &p0.pe)).abs() > d_pe {
                v_pe += 1;
            }
            if (dot(&mt.h_tom, &freq[n_pe..n_pe + n_tom]) - dot(&mt.h_tom, &p0.tom)).abs() > d_tom {
                v_tom += 1;
            }
        }
        let t = cfg.mc.trials as f64;
        concentration.push(ConcentrationCheck {
            n: nc,
            delta_pe: d_pe,
            delta_tom: d_tom,
            violations_pe: v_pe as f64 / t,
            violations_tom: v_tom as f64 / t,
            eps_fail,
        });
    }
    Ok(McReport { samples: n, seed: opts.seed, reference_xi, cells, statistic_source, concentration })
}
