//! Versioned JSON certificate files.

use std::path::{Path, PathBuf};

use cvqkd_core::convex::{gradient_exact, DualCertificate, FwResult, ObjectiveContext};
use cvqkd_core::fock::{constraint_matrices, ModulationScheme};
use cvqkd_core::honest::HonestChannel;
use cvqkd_core::linalg::{c, hermiticity_residual, CMat};
use cvqkd_core::sdp::verify_dual_certificate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeEcho {
    pub alpha: f64,
    pub delta_amp: f64,
    pub delta_mod: f64,
    pub cutoff: usize,
}

impl SchemeEcho {
    pub fn of(s: &ModulationScheme) -> Self {
        Self { alpha: s.alpha, delta_amp: s.delta_amp, delta_mod: s.delta_mod, cutoff: s.cutoff }
    }

    pub fn build(&self) -> CliResult<ModulationScheme> {
        Ok(ModulationScheme::new(self.alpha, self.delta_amp, self.delta_mod, self.cutoff)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEcho {
    pub distance_km: f64,
    pub attenuation_db_per_km: f64,
    pub excess_noise: f64,
}

impl ChannelEcho {
    pub fn of(ch: &HonestChannel) -> Self {
        Self { distance_km: ch.distance_km, attenuation_db_per_km: ch.attenuation_db_per_km, excess_noise: ch.excess_noise }
    }

    pub fn build(&self) -> CliResult<HonestChannel> {
        Ok(HonestChannel::new(self.distance_km, self.attenuation_db_per_km, self.excess_noise)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    /// Best Frank-Wolfe primal value.
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Diagnostics {
    pub fn of(fw: &FwResult) -> Self {
        Self {
            upper_bound: fw.upper_bound,
            lower_bound: fw.lower_bound,
            gap: fw.trace.final_gap,
            iterations: fw.trace.records.len(),
            converged: fw.trace.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub version: u32,
    pub scheme: SchemeEcho,
    pub channel: ChannelEcho,
    pub f_ec: f64,
    pub nu_pe: Vec<f64>,
    pub nu_tom: Vec<f64>,
    pub g0: f64,
    pub eps_prime: f64,
    pub primal_ub: f64,
    pub lambda_min: f64,
    /// Row-major `(re, im)` pairs.
    pub rho_tilde: Vec<Vec<[f64; 2]>>,
    /// SHA-256 of the constraint operators, hex encoded.
    pub constraint_hash: String,
    pub diagnostics: Diagnostics,
}

/// SHA-256 over the dimensions and little-endian entries of every operator.
pub fn operator_hash(ops: &[CMat]) -> String {
    let mut h = Sha256::new();
    h.update((ops.len() as u64).to_le_bytes());
    for a in ops {
        h.update((a.nrows() as u64).to_le_bytes());
        h.update((a.ncols() as u64).to_le_bytes());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                h.update(a[(i, j)].re.to_le_bytes());
                h.update(a[(i, j)].im.to_le_bytes());
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn matrix_to_pairs(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn pairs_to_matrix(rows: &[Vec<[f64; 2]>]) -> CliResult<CMat> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Invariant("rho_tilde must be a nonempty square matrix".into()));
    }
    Ok(CMat::from_fn(d, d, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

/// Outcome of re-checking a certificate against rebuilt operators.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub hash: String,
    pub lambda_min: f64,
    pub residual: f64,
    pub certified: bool,
    /// `ε′` covers the Hermiticity defect of the stored state and recomputed gradient.
    pub eps_prime_consistent: bool,
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "constraint hash   {}", self.hash)?;
        writeln!(f, "slack λ_min       {:.6e} (eigen residual {:.1e})", self.lambda_min, self.residual)?;
        writeln!(f, "ε′ consistency    {}", if self.eps_prime_consistent { "ok" } else { "inconsistent" })?;
        write!(f, "status            {}", if self.certified { "certified" } else { "uncertified" })
    }
}

impl CertificateFile {
    pub fn new(
        scheme: &ModulationScheme,
        channel: &HonestChannel,
        f_ec: f64,
        cert: &DualCertificate,
        constraints: &[CMat],
        diagnostics: Diagnostics,
    ) -> Self {
        Self {
            version: FORMAT_VERSION,
            scheme: SchemeEcho::of(scheme),
            channel: ChannelEcho::of(channel),
            f_ec,
            nu_pe: cert.nu_pe.clone(),
            nu_tom: cert.nu_tom.clone(),
            g0: cert.g0,
            eps_prime: cert.eps_prime,
            primal_ub: cert.primal_ub,
            lambda_min: cert.lambda_min,
            rho_tilde: matrix_to_pairs(&cert.rho_tilde),
            constraint_hash: operator_hash(constraints),
            diagnostics,
        }
    }

    pub fn certificate(&self) -> CliResult<DualCertificate> {
        Ok(DualCertificate {
            nu_pe: self.nu_pe.clone(),
            nu_tom: self.nu_tom.clone(),
            g0: self.g0,
            eps_prime: self.eps_prime,
            primal_ub: self.primal_ub,
            lambda_min: self.lambda_min,
            rho_tilde: pairs_to_matrix(&self.rho_tilde)?,
        })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
        }
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::io(path.display(), e))?;
        std::fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
    }

    /// Parses a file without verifying it.
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        let file: Self = serde_json::from_str(&text).map_err(|e| CliError::io(path.display(), e))?;
        if file.version != FORMAT_VERSION {
            return Err(CliError::Invariant(format!("unsupported certificate version {}", file.version)));
        }
        Ok(file)
    }

    /// Rebuilds the constraint operators from the echoed scheme, checks the content
    /// hash, and recomputes the dual slack at the stored reference state.
    pub fn verify(&self) -> CliResult<VerifyReport> {
        let scheme = self.scheme.build()?;
        let constraints = constraint_matrices(&scheme)?;
        let rebuilt = operator_hash(&constraints);
        if rebuilt != self.constraint_hash {
            return Err(CliError::HashMismatch { stored: self.constraint_hash.clone(), rebuilt });
        }
        let cert = self.certificate()?;
        if cert.rho_tilde.nrows() != constraints[0].nrows() || cert.nu().len() != constraints.len() {
            return Err(CliError::Invariant("certificate dimensions do not match the rebuilt operators".into()));
        }
        let ctx = ObjectiveContext::new(scheme.cutoff)?;
        let grad = gradient_exact(&cert.rho_tilde, &ctx)?;
        let check = verify_dual_certificate(&grad, &constraints, &cert.nu());
        let herm = hermiticity_residual(&cert.rho_tilde).max(hermiticity_residual(&grad));
        Ok(VerifyReport {
            hash: rebuilt,
            lambda_min: check.lambda_min,
            residual: check.residual,
            certified: check.certified,
            eps_prime_consistent: self.eps_prime.is_finite() && self.eps_prime >= herm,
        })
    }

    /// Reads and verifies; uncertified files are rejected.
    pub fn load_verified(path: &Path) -> CliResult<(Self, VerifyReport)> {
        let file = Self::read(path)?;
        let report = file.verify()?;
        if !report.certified {
            return Err(CliError::Invariant(format!(
                "{}: dual slack λ_min = {:e} is negative, certificate rejected",
                path.display(),
                report.lambda_min
            )));
        }
        Ok((file, report))
    }

    pub fn matches(&self, scheme: &ModulationScheme, channel: &HonestChannel, f_ec: f64) -> bool {
        self.scheme == SchemeEcho::of(scheme) && self.channel == ChannelEcho::of(channel) && self.f_ec == f_ec
    }
}

/// Cache file name for one operating point.
pub fn cache_path(dir: &Path, scheme: &ModulationScheme, channel: &HonestChannel, f_ec: f64) -> PathBuf {
    dir.join(format!(
        "cert_nc{}_amp{}_mod{}_alpha{}_d{}_att{}_xi{}_f{}.json",
        scheme.cutoff,
        scheme.delta_amp,
        scheme.delta_mod,
        scheme.alpha,
        channel.distance_km,
        channel.attenuation_db_per_km,
        channel.excess_noise,
        f_ec
    ))
}
