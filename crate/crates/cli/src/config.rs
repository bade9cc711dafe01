use std::f64::consts::{E, PI};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use winding_core::mc::{RadialBin, WalkConfig};
use winding_core::stats::{BinSpec, DEFAULT_RESAMPLES};
use winding_core::winding_laws::EXP_REGIME_X_MIN;
use winding_core::QuadControl;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything needed to reproduce one invocation. Artifacts embed the
/// resolved form, with every default filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<TableConfig>,
}

impl ExperimentConfig {
    /// Reads TOML, or JSON for `.json`. A JSON or CSV artifact written by this
    /// tool is accepted too; its embedded config is used.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let cfg = match ext {
            "json" => {
                let mut v: serde_json::Value =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                let embedded = v.get("config").is_some() && (v.get("rows").is_some() || v.get("report").is_some());
                if embedded {
                    v = v["config"].take();
                }
                serde_json::from_value(v).with_context(|| format!("parsing config in {}", path.display()))?
            }
            "csv" => {
                let line = text
                    .lines()
                    .find_map(|l| l.strip_prefix("# config: "))
                    .with_context(|| format!("{} has no embedded config line", path.display()))?;
                serde_json::from_str(line).with_context(|| format!("parsing config in {}", path.display()))?
            }
            _ => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        };
        Ok(cfg)
    }

    /// Tags the config with the running command, refusing a config written
    /// for another one.
    pub fn claim(&mut self, command: &str) -> Result<()> {
        match &self.command {
            Some(c) if c != command => bail!("config was written for `{c}`, not `{command}`"),
            _ => self.command = Some(command.to_string()),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    Spitzer,
    Numeric,
    ConeNumeric,
    ConeClosed,
    RegimeGaussian,
    RegimeExponential,
}

impl Law {
    pub fn name(self) -> &'static str {
        match self {
            Law::Spitzer => "spitzer",
            Law::Numeric => "numeric",
            Law::ConeNumeric => "cone-numeric",
            Law::ConeClosed => "cone-closed",
            Law::RegimeGaussian => "regime-gaussian",
            Law::RegimeExponential => "regime-exponential",
        }
    }

    /// The variable the law is naturally written in.
    pub fn native_axis(self) -> Axis {
        match self {
            Law::Numeric | Law::ConeNumeric | Law::ConeClosed => Axis::Dtheta,
            _ => Axis::X,
        }
    }
}

/// x = 2Δθ/ln t, or the raw winding Δθ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Dtheta,
}

impl Axis {
    pub fn column(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Dtheta => "dtheta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    /// lo, lo + step, …, up to hi inclusive (within rounding).
    pub fn points(&self) -> Result<Vec<f64>> {
        let GridSpec { lo, hi, step } = *self;
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || !(step > 0.0) || hi < lo {
            bail!("invalid grid lo={lo}, hi={hi}, step={step}: need finite lo <= hi and step > 0");
        }
        let n = ((hi - lo) / step * (1.0 + 1e-12)).floor() as usize + 1;
        if n > 10_000_000 {
            bail!("grid has {n} points, more than 1e7");
        }
        Ok((0..n).map(|i| lo + i as f64 * step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub law: Option<Law>,
    pub beta: f64,
    pub delta: f64,
    pub t: f64,
    /// Bessel argument r₁r₂/t of the finite-time law.
    pub z: f64,
    pub axis: Option<Axis>,
    pub grid: GridSpec,
    /// Support edge of the exponential regime.
    pub x_min: f64,
    pub quad: QuadControl,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            law: None,
            beta: 2.0 * PI,
            delta: 0.0,
            t: 1e4,
            z: 1.0,
            axis: None,
            grid: GridSpec {
                lo: -5.0,
                hi: 5.0,
                step: 0.1,
            },
            x_min: EXP_REGIME_X_MIN,
            quad: QuadControl::new(1e-13, 1e-10).expect("valid tolerances"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub r_start: f64,
    pub t_total: f64,
    pub n_paths: usize,
    pub dt_max: Option<f64>,
    pub dt_radius_factor: Option<f64>,
    pub r_floor: Option<f64>,
    /// Halve dt_max and the radius factor relative to the values above.
    pub refined: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            r_start: 1.0,
            t_total: 100.0,
            n_paths: 10_000,
            dt_max: None,
            dt_radius_factor: None,
            r_floor: None,
            refined: false,
        }
    }
}

impl SimulateConfig {
    pub fn walk(&self, seed: u64) -> Result<WalkConfig> {
        let mut w = WalkConfig::new(self.r_start, self.t_total, self.n_paths, seed)?;
        if let Some(v) = self.dt_max {
            w.dt_max = v;
        }
        if let Some(v) = self.dt_radius_factor {
            w.dt_radius_factor = v;
        }
        if let Some(v) = self.r_floor {
            w.r_floor = v;
        }
        if self.refined {
            w = w.refined();
        }
        w.validate()?;
        Ok(w)
    }

    /// Pins every step parameter to its resolved value so the embedded
    /// config no longer depends on defaults.
    pub fn resolved(&self, w: &WalkConfig) -> Self {
        Self {
            r_start: w.r_start,
            t_total: w.t_total,
            n_paths: w.n_paths,
            dt_max: Some(w.dt_max),
            dt_radius_factor: Some(w.dt_radius_factor),
            r_floor: Some(w.r_floor),
            refined: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    SpitzerKs,
    CharfnMatch,
    FeynmanKacIdentity,
    ConeHistogram,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::SpitzerKs => "spitzer-ks",
            CheckKind::CharfnMatch => "charfn-match",
            CheckKind::FeynmanKacIdentity => "feynman-kac-identity",
            CheckKind::ConeHistogram => "cone-histogram",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub check: Option<CheckKind>,
    pub samples: Vec<PathBuf>,
    /// Largest KS distance accepted by spitzer-ks.
    pub ks_max: f64,
    /// Slack, in combined bootstrap standard errors, allowed when KS is
    /// required to be non-increasing across sample files.
    pub monotone_sigmas: f64,
    pub resamples: usize,
    pub alphas: Vec<f64>,
    /// Radial bin for conditioning; centred on r_start when absent.
    pub r_bin: Option<RadialBin>,
    pub bin_width: f64,
    pub sigmas: f64,
    pub beta: f64,
    pub delta: f64,
    pub bins: BinSpec,
    /// Largest |imaginary part| accepted where its bootstrap error is smaller
    /// than this, i.e. where the imaginary part is round-off.
    pub imag_abs_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            check: None,
            samples: Vec::new(),
            ks_max: 0.05,
            monotone_sigmas: 0.0,
            resamples: DEFAULT_RESAMPLES,
            alphas: vec![0.5, 1.0, 2.0],
            r_bin: None,
            bin_width: 0.1,
            sigmas: 3.0,
            beta: 2.0 * PI,
            delta: 0.5,
            bins: BinSpec::new(-PI, PI, 12).expect("valid bins"),
            imag_abs_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableConfig {
    pub betas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub ts: Vec<f64>,
    pub dthetas: Vec<f64>,
    pub max_rel: f64,
    pub quad: QuadControl,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            betas: vec![PI / 2.0, PI, 2.0 * PI],
            deltas: vec![0.1, 0.5, 1.0],
            ts: vec![E * E, E.powi(4)],
            dthetas: vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0],
            max_rel: 1e-6,
            quad: QuadControl::new(1e-14, 1e-12).expect("valid tolerances"),
        }
    }
}
