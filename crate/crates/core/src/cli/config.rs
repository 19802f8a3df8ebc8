use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, SpaceKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    TightenCurve,
    TightenSweepout,
    Verify,
    MainThm,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::TightenCurve => "tighten_curve",
            Mode::TightenSweepout => "tighten_sweepout",
            Mode::Verify => "verify",
            Mode::MainThm => "main_thm",
        }
    }
}

pub const DEFAULT_N_SLICES: usize = 33;
pub const DEFAULT_SWEEPS: usize = 50;
pub const DEFAULT_MAX_ITERS: usize = 5000;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DELTA: [f64; 3] = [0.1, 0.05, 0.02];
pub const DEFAULT_OUT: &str = "catk-out";

/// A validated run description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub space: ModelSpace,
    pub l: usize,
    pub n_slices: usize,
    pub sweeps: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Band half-widths as fractions of the width.
    pub delta: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    /// Break count of the built-in initial curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breaks: Option<usize>,
    /// Curve JSON replacing the built-in initial curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    kind: Option<SpaceKind>,
    curvature: Option<f64>,
    periods: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    space: Option<RawSpace>,
    l: Option<usize>,
    n_slices: Option<usize>,
    sweeps: Option<usize>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    delta: Option<Vec<f64>>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    breaks: Option<usize>,
    curve: Option<PathBuf>,
}

/// Command-line values that win over the document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub space: Option<SpaceKind>,
    pub curvature: Option<f64>,
    pub breaks: Option<usize>,
    pub slices: Option<usize>,
    pub sweeps: Option<usize>,
    pub tol: Option<f64>,
    pub delta: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &Overrides::default())
}

/// Parses a TOML document, applies `ov`, fills defaults and validates.
pub fn parse_config_with(text: &str, ov: &Overrides) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mode = ov
        .mode
        .or(raw.mode)
        .ok_or_else(|| Error::Config("missing `mode` (tighten_curve, tighten_sweepout, verify, main_thm)".into()))?;
    let rs = raw.space.unwrap_or_default();
    let kind = ov.space.or(rs.kind).unwrap_or(SpaceKind::Sphere);
    let curvature = ov.curvature.or(rs.curvature).unwrap_or(match kind {
        SpaceKind::Sphere => 1.0,
        SpaceKind::Hyperbolic => -1.0,
        SpaceKind::Euclidean | SpaceKind::FlatTorus => 0.0,
    });
    let periods = match kind {
        SpaceKind::FlatTorus => Some(rs.periods.unwrap_or([1.0, 1.0])),
        _ if rs.periods.is_some() => {
            return Err(Error::Config(format!(
                "`periods` only applies to flat_torus, not {}",
                kind.name()
            )));
        }
        _ => None,
    };
    let space = ModelSpace::new(kind, curvature, periods)?;
    let cfg = RunConfig {
        mode,
        space,
        l: raw.l.unwrap_or(crate::birkhoff::DEFAULT_L),
        n_slices: ov.slices.or(raw.n_slices).unwrap_or(DEFAULT_N_SLICES),
        sweeps: ov.sweeps.or(raw.sweeps).unwrap_or(DEFAULT_SWEEPS),
        max_iters: raw.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
        tol: ov.tol.or(raw.tol).unwrap_or(DEFAULT_TOL),
        delta: ov.delta.clone().or(raw.delta).unwrap_or_else(|| DEFAULT_DELTA.to_vec()),
        seed: ov.seed.or(raw.seed).unwrap_or(DEFAULT_SEED),
        out: ov.out.clone().or(raw.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        breaks: ov.breaks.or(raw.breaks),
        curve: raw.curve,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("l", self.l),
            ("n_slices", self.n_slices),
            ("max_iters", self.max_iters),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("`{name}` must be positive")));
            }
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("`tol` must be positive, got {}", self.tol)));
        }
        if self.breaks == Some(0) {
            return Err(Error::Config("`breaks` must be positive".into()));
        }
        let sweepout_mode = matches!(self.mode, Mode::TightenSweepout | Mode::MainThm);
        if sweepout_mode
            && self.space.kind() == SpaceKind::Sphere
            && (self.n_slices < 3 || self.n_slices.is_multiple_of(2))
        {
            return Err(Error::Config(format!(
                "`n_slices` must be odd and at least 3, got {}",
                self.n_slices
            )));
        }
        if sweepout_mode && !matches!(self.space.kind(), SpaceKind::Sphere | SpaceKind::FlatTorus) {
            return Err(Error::Config(format!(
                "{} runs need a sphere or a flat torus, got {}",
                self.mode.name(),
                self.space.kind().name()
            )));
        }
        if self.mode == Mode::MainThm && (self.delta.is_empty() || self.delta.iter().any(|d| !(*d > 0.0))) {
            return Err(Error::Config("`delta` needs at least one positive fraction".into()));
        }
        Ok(())
    }

    /// TOML text that [`parse_config`] maps back to `self`.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
