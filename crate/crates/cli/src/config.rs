//! Run configuration: a flat TOML file with units in the key names.

use std::path::Path;

use cvqkd_core::convex::FwOptions;
use cvqkd_core::finite::{completeness_check, LeakModel, RateGrid, SecurityParams};
use cvqkd_core::fock::ModulationScheme;
use cvqkd_core::honest::HonestChannel;
use cvqkd_core::sdp::SdpOptions;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scheme: SchemeBlock,
    pub channel: ChannelBlock,
    pub protocol: ProtocolBlock,
    pub security: SecurityBlock,
    pub solver: SolverBlock,
    pub output: OutputBlock,
    pub mc: McBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeBlock {
    pub alpha: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub delta_amp: f64,
    pub delta_mod: f64,
    pub cutoff: usize,
}

impl Default for SchemeBlock {
    fn default() -> Self {
        Self { alpha: None, alpha_grid: None, delta_amp: 0.9, delta_mod: 0.9, cutoff: 10 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelBlock {
    pub distance_km: Option<f64>,
    pub distance_km_grid: Option<Vec<f64>>,
    pub attenuation_db_per_km: f64,
    pub excess_noise: Option<f64>,
    pub excess_noise_grid: Option<Vec<f64>>,
}

impl Default for ChannelBlock {
    fn default() -> Self {
        Self {
            distance_km: None,
            distance_km_grid: None,
            attenuation_db_per_km: 0.2,
            excess_noise: None,
            excess_noise_grid: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolBlock {
    /// Error-correction inefficiency `f` in `(1 + f) H(Ẑ|X̂)`.
    pub f_ec: f64,
    /// Charge leakage only on key rounds (`p^key` factor).
    pub leak_scaled_by_p_key: bool,
}

impl Default for ProtocolBlock {
    fn default() -> Self {
        Self { f_ec: 0.0, leak_scaled_by_p_key: true }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SecurityBlock {
    pub n: Option<f64>,
    pub n_grid: Option<Vec<f64>>,
    pub eps: f64,
    pub eps_phys_na: f64,
    pub eps_tom: f64,
    pub eps_ec: f64,
    pub eps_ec_c: f64,
    pub eps_pe_c: f64,
    pub a_grid: Option<Vec<f64>>,
    pub p_key_grid: Option<Vec<f64>>,
    pub p_pe_cond_grid: Option<Vec<f64>>,
}

impl Default for SecurityBlock {
    fn default() -> Self {
        Self {
            n: None,
            n_grid: None,
            eps: 1e-9,
            eps_phys_na: 1e-3,
            eps_tom: 1e-8,
            eps_ec: 1e-10,
            eps_ec_c: 1e-6,
            eps_pe_c: 1e-6,
            a_grid: None,
            p_key_grid: None,
            p_pe_cond_grid: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub max_iter: usize,
    pub gap_tol: f64,
    /// Iterations between lower-bound evaluations.
    pub bound_every: usize,
    pub line_tol: f64,
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let fw = FwOptions::default();
        Self {
            max_iter: fw.max_iter,
            gap_tol: fw.gap_tol,
            bound_every: fw.bound_every,
            line_tol: fw.line_tol,
            sdp_tol: fw.sdp.tol,
            sdp_max_iter: fw.sdp.max_iter,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub asymptotic_csv: String,
    pub finite_csv: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { asymptotic_csv: "asymptotic.csv".into(), finite_csv: "finite.csv".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McBlock {
    pub samples: u64,
    /// Excess noise used for the analytic reference; defaults to the channel value.
    pub reference_excess_noise: Option<f64>,
    pub concentration_n: Vec<u64>,
    pub trials: usize,
    pub eps_fail: f64,
}

impl Default for McBlock {
    fn default() -> Self {
        Self { samples: 1_000_000, reference_excess_noise: None, concentration_n: vec![10_000], trials: 2_000, eps_fail: 1e-2 }
    }
}

fn one_or_grid(block: &str, key: &str, single: Option<f64>, grid: &Option<Vec<f64>>, default: f64) -> CliResult<Vec<f64>> {
    match (single, grid) {
        (Some(_), Some(_)) => Err(CliError::config(format!("{block}.{key}_grid"), format!("set either `{key}` or `{key}_grid`, not both"))),
        (Some(v), None) => Ok(vec![v]),
        (None, Some(g)) if g.is_empty() => Err(CliError::config(format!("{block}.{key}_grid"), "must be nonempty")),
        (None, Some(g)) => Ok(g.clone()),
        (None, None) => Ok(vec![default]),
    }
}

fn grid_key(block: &str, key: &str, grid: bool) -> String {
    if grid {
        format!("{block}.{key}_grid")
    } else {
        format!("{block}.{key}")
    }
}

fn prefixed(block: &'static str, grid_keys: &'static [&'static str], grid: bool) -> impl Fn(cvqkd_core::Error) -> CliError {
    move |e| match CliError::from(e) {
        CliError::Config { key, reason } => {
            let key = if grid_keys.contains(&key.as_str()) { grid_key(block, &key, grid) } else { format!("{block}.{key}") };
            CliError::Config { key, reason }
        }
        other => other,
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(toml_key(&e), e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::from_toml(&text)
    }

    pub fn alphas(&self) -> CliResult<Vec<f64>> {
        one_or_grid("scheme", "alpha", self.scheme.alpha, &self.scheme.alpha_grid, 0.9)
    }

    pub fn distances(&self) -> CliResult<Vec<f64>> {
        one_or_grid("channel", "distance_km", self.channel.distance_km, &self.channel.distance_km_grid, 10.0)
    }

    pub fn excess_noises(&self) -> CliResult<Vec<f64>> {
        one_or_grid("channel", "excess_noise", self.channel.excess_noise, &self.channel.excess_noise_grid, 0.02)
    }

    pub fn block_sizes(&self) -> CliResult<Vec<f64>> {
        one_or_grid("security", "n", self.security.n, &self.security.n_grid, 1e12)
    }

    pub fn scheme(&self, alpha: f64) -> CliResult<ModulationScheme> {
        let s = &self.scheme;
        ModulationScheme::new(alpha, s.delta_amp, s.delta_mod, s.cutoff)
            .map_err(prefixed("scheme", &["alpha"], s.alpha_grid.is_some()))
    }

    pub fn channel(&self, distance_km: f64, excess_noise: f64) -> CliResult<HonestChannel> {
        HonestChannel::new(distance_km, self.channel.attenuation_db_per_km, excess_noise)
            .map_err(prefixed("channel", &["distance_km", "excess_noise"], false))
    }

    pub fn fw_options(&self) -> FwOptions {
        let s = &self.solver;
        FwOptions {
            max_iter: s.max_iter,
            gap_tol: s.gap_tol,
            bound_every: s.bound_every,
            line_tol: s.line_tol,
            sdp: SdpOptions { tol: s.sdp_tol, max_iter: s.sdp_max_iter },
            ..FwOptions::default()
        }
    }

    pub fn leak_model(&self) -> LeakModel {
        LeakModel { f_ec: self.protocol.f_ec, scale_by_p_key: self.protocol.leak_scaled_by_p_key }
    }

    pub fn rate_grid(&self) -> RateGrid {
        let d = RateGrid::default();
        let s = &self.security;
        RateGrid {
            a: s.a_grid.clone().unwrap_or(d.a),
            p_key: s.p_key_grid.clone().unwrap_or(d.p_key),
            p_pe_cond: s.p_pe_cond_grid.clone().unwrap_or(d.p_pe_cond),
        }
    }

    /// Security parameters at block size `n`, with `a` taken from the first grid entry.
    pub fn security(&self, n: f64) -> SecurityParams {
        let s = &self.security;
        SecurityParams {
            n,
            eps: s.eps,
            eps_phys_na: s.eps_phys_na,
            eps_tom: s.eps_tom,
            eps_ec: s.eps_ec,
            eps_ec_c: s.eps_ec_c,
            eps_pe_c: s.eps_pe_c,
            a: self.rate_grid().a.first().copied().unwrap_or(1.0 + 1e-3),
        }
    }

    /// Checks every module precondition; errors name the offending key.
    pub fn validate(&self) -> CliResult<()> {
        for alpha in self.alphas()? {
            self.scheme(alpha)?;
        }
        let att = self.channel.attenuation_db_per_km;
        for d in self.distances()? {
            HonestChannel::new(d, att, 0.0)
                .map_err(prefixed("channel", &["distance_km"], self.channel.distance_km_grid.is_some()))?;
        }
        for xi in self.excess_noises()? {
            HonestChannel::new(0.0, att, xi)
                .map_err(prefixed("channel", &["excess_noise"], self.channel.excess_noise_grid.is_some()))?;
        }
        if !(self.protocol.f_ec.is_finite() && self.protocol.f_ec >= 0.0) {
            return Err(CliError::config("protocol.f_ec", format!("must be ≥ 0, got {}", self.protocol.f_ec)));
        }
        self.rate_grid().validate().map_err(prefixed("security", &[], false))?;
        for n in self.block_sizes()? {
            self.security(n).validate().map_err(prefixed("security", &["n"], self.security.n_grid.is_some()))?;
        }
        if !completeness_check(&self.security(1e12)) {
            return Err(CliError::config("security.eps_phys_na", "must be below 1 − eps_pe_c − eps_ec_c"));
        }
        let s = &self.solver;
        if s.max_iter == 0 {
            return Err(CliError::config("solver.max_iter", "must be at least 1"));
        }
        if s.bound_every == 0 {
            return Err(CliError::config("solver.bound_every", "must be at least 1"));
        }
        for (key, v) in [("solver.gap_tol", s.gap_tol), ("solver.line_tol", s.line_tol), ("solver.sdp_tol", s.sdp_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::config(key, format!("must be positive, got {v}")));
            }
        }
        if s.sdp_max_iter == 0 {
            return Err(CliError::config("solver.sdp_max_iter", "must be at least 1"));
        }
        for (key, name) in [("output.asymptotic_csv", &self.output.asymptotic_csv), ("output.finite_csv", &self.output.finite_csv)] {
            if name.is_empty() {
                return Err(CliError::config(key, "must be a nonempty file name"));
            }
        }
        let mc = &self.mc;
        if mc.samples == 0 {
            return Err(CliError::config("mc.samples", "must be at least 1"));
        }
        if mc.trials == 0 {
            return Err(CliError::config("mc.trials", "must be at least 1"));
        }
        if mc.concentration_n.contains(&0) {
            return Err(CliError::config("mc.concentration_n", "entries must be at least 1"));
        }
        if !(mc.eps_fail > 0.0 && mc.eps_fail < 1.0) {
            return Err(CliError::config("mc.eps_fail", format!("must lie in (0, 1), got {}", mc.eps_fail)));
        }
        if let Some(xi) = mc.reference_excess_noise {
            if !(xi.is_finite() && xi >= 0.0) {
                return Err(CliError::config("mc.reference_excess_noise", format!("must be ≥ 0, got {xi}")));
            }
        }
        Ok(())
    }
}

fn toml_key(e: &toml::de::Error) -> String {
    let msg = e.message();
    msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "<document>".into())
}
