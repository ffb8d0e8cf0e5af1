//! Batch experiment driver: a TOML config in, plot-ready CSV tables and a
//! run manifest out.
//!
//! Exit codes: `0` success, `2` config, `3` IET, `4` induction, `5` roof,
//! `6` log-Puiseux, `7` saddle, `8` weak-mixing diagnostics, `9` I/O.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exact::{ExactScalar, DEFAULT_RADICAND};
use crate::iet::{Iet, IetError, IetFileError, IetSpec, Interval, KeaneReport, ScalarText};
use crate::induction::{self, InductionError, DEFAULT_KMAX, DEFAULT_RETURN_CAP};
use crate::log_puiseux::{self, PuiseuxError};
use crate::numerics::{fmt_f64, CsvTable};
use crate::ode::Tolerances;
use crate::roof::{self, KindText, RoofError, RoofFunction, RoofSpec, TermKind, DEFAULT_OFFSET};
use crate::saddle::{self, SaddleError, SaddleModel, SaddleSpec, Shape, DEFAULT_ANGULAR_RESOLUTION};
use crate::weakmix::{self, DiagnosticConfig, WeakMixError, DEFAULT_RESAMPLE_BUDGET};

#[derive(Parser, Debug, Clone)]
#[command(name = "surface-flows", version, about = "Experiments on special flows over interval exchanges")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment config; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// First-return map to a base interval.
    Induce,
    /// T-cut partition with certificates.
    Partition,
    /// Finite-depth Keane check.
    Keane,
    /// Logarithmic-growth audit of the roof.
    Growth,
    /// Weyl-sum sweep over frequencies.
    Weakmix,
    /// Birkhoff stretch certificate.
    Stretch,
    /// Sector area, passing time and dA/dh table.
    Saddle,
    /// Closed form versus quadrature oracle for the sector integrals.
    Bkl,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Induce => "induce",
            Command::Partition => "partition",
            Command::Keane => "keane",
            Command::Growth => "growth",
            Command::Weakmix => "weakmix",
            Command::Stretch => "stretch",
            Command::Saddle => "saddle",
            Command::Bkl => "bkl",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Iet(#[from] IetError),
    #[error(transparent)]
    Induction(#[from] InductionError),
    #[error(transparent)]
    Roof(#[from] RoofError),
    #[error(transparent)]
    Puiseux(#[from] PuiseuxError),
    #[error(transparent)]
    Saddle(#[from] SaddleError),
    #[error(transparent)]
    WeakMix(#[from] WeakMixError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Iet(_) => 3,
            CliError::Induction(_) | CliError::WeakMix(WeakMixError::Induction(_)) => 4,
            CliError::Roof(_) | CliError::WeakMix(WeakMixError::Roof(_)) => 5,
            CliError::Puiseux(_) => 6,
            CliError::Saddle(_) => 7,
            CliError::WeakMix(_) => 8,
            CliError::Io { .. } => 9,
        }
    }
}

impl From<IetFileError> for CliError {
    fn from(e: IetFileError) -> Self {
        match e {
            IetFileError::Parse(p) => CliError::Config(p.to_string()),
            IetFileError::Iet(i) => CliError::Iet(i),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

// ---------------------------------------------------------------- config

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IetPreset {
    GoldenRotation,
}

/// Where the IET comes from: exactly one of `preset`, `rotation`, `file`,
/// `inline`; the golden rotation when all are absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IetSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<IetPreset>,
    /// Rotation `x ↦ x + β mod 1` in `Q(√d)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation: Option<ScalarText>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inline: Option<IetSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoofPreset {
    CanonicalLog,
    Kochergin,
    Constant,
}

/// Roof source: a preset anchored at the IET discontinuities, a file or an
/// inline description. Defaults to the canonical log roof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoofSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<RoofPreset>,
    pub kind: KindText,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    pub c_left: f64,
    pub c_right: f64,
    pub offset: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard_band: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inline: Option<RoofSpec>,
}

impl Default for RoofSource {
    fn default() -> Self {
        RoofSource {
            preset: None,
            kind: KindText::Log,
            exponent: None,
            c_left: 1.0,
            c_right: 1.0,
            offset: DEFAULT_OFFSET,
            guard_band: None,
            file: None,
            inline: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaddlePreset {
    Xy,
    Monkey,
    Degenerate,
}

/// Saddle source; defaults to `H = xy` on the unit disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaddleSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<SaddlePreset>,
    pub rho: f64,
    pub shape: Shape,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inline: Option<SaddleSpec>,
}

impl Default for SaddleSource {
    fn default() -> Self {
        SaddleSource { preset: None, rho: 1.0, shape: Shape::Disk, file: None, inline: None }
    }
}

fn zero_text() -> ScalarText {
    ScalarText::Pair(["0".into(), "0".into()])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InduceParams {
    pub left: ScalarText,
    /// Defaults to `α = (√5 − 1)/2`.
    pub right: ScalarText,
    pub return_cap: usize,
}

impl Default for InduceParams {
    fn default() -> Self {
        InduceParams {
            left: zero_text(),
            right: ScalarText::Pair(["-1/2".into(), "1/2".into()]),
            return_cap: DEFAULT_RETURN_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionParams {
    pub epsilon: ScalarText,
    pub kmax: usize,
    pub return_cap: usize,
}

impl Default for PartitionParams {
    fn default() -> Self {
        PartitionParams {
            epsilon: ScalarText::Pair(["1/5".into(), "0".into()]),
            kmax: DEFAULT_KMAX,
            return_cap: DEFAULT_RETURN_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeaneParams {
    pub depth: usize,
}

impl Default for KeaneParams {
    fn default() -> Self {
        KeaneParams { depth: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthParams {
    pub c: f64,
    pub b: f64,
    pub grid: usize,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams { c: 1.0, b: 0.0, grid: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakmixParams {
    /// Frequencies to sweep.
    pub s: Vec<f64>,
    pub n: usize,
    pub samples: usize,
    pub resample_budget: usize,
}

impl Default for WeakmixParams {
    fn default() -> Self {
        WeakmixParams { s: vec![0.5, 1.0, 2.0], n: 1 << 16, samples: 8, resample_budget: DEFAULT_RESAMPLE_BUDGET }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularitySource {
    /// Exact anchors of the roof singularities.
    Roof,
    /// Discontinuities of the IET.
    Iet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StretchParams {
    pub epsilon: ScalarText,
    pub kmax: usize,
    pub return_cap: usize,
    pub s: f64,
    /// Interior sample points per tower base.
    pub grid: usize,
    pub singularities: SingularitySource,
}

impl Default for StretchParams {
    fn default() -> Self {
        StretchParams {
            epsilon: ScalarText::Pair(["1/20".into(), "0".into()]),
            kmax: DEFAULT_KMAX,
            return_cap: DEFAULT_RETURN_CAP,
            s: 1.0,
            grid: 16,
            singularities: SingularitySource::Roof,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParams {
    pub n: u32,
    pub k0: i64,
    pub terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaddleRunParams {
    pub hs: Vec<f64>,
    /// Any angle inside the sector's boundary arc; sector 0 when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector_angle: Option<f64>,
    pub angular_resolution: usize,
    pub rtol: f64,
    pub atol: f64,
    pub event_tol: f64,
    pub max_steps: usize,
    /// Optional log-Puiseux fit of `τ(h)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitParams>,
}

impl Default for SaddleRunParams {
    fn default() -> Self {
        let t = Tolerances::default();
        SaddleRunParams {
            hs: vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
            sector_angle: None,
            angular_resolution: DEFAULT_ANGULAR_RESOLUTION,
            rtol: t.rtol,
            atol: t.atol,
            event_tol: t.event_tol,
            max_steps: t.max_steps,
            fit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BklParams {
    pub kl_max: u32,
    pub nm_max: u32,
    pub hs: Vec<f64>,
    pub tol: f64,
}

impl Default for BklParams {
    fn default() -> Self {
        BklParams { kl_max: 3, nm_max: 3, hs: vec![1e-3, 1e-2, 1e-1], tol: 1e-12 }
    }
}

/// One experiment: model sources plus per-command budgets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// When set, must match the subcommand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    pub seed: u64,
    pub iet: IetSource,
    pub roof: RoofSource,
    pub saddle: SaddleSource,
    pub induce: InduceParams,
    pub partition: PartitionParams,
    pub keane: KeaneParams,
    pub growth: GrowthParams,
    pub weakmix: WeakmixParams,
    pub stretch: StretchParams,
    pub saddle_run: SaddleRunParams,
    pub bkl: BklParams,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive")))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Reads a config file; relative model paths are resolved against its
    /// directory and must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for f in [&mut cfg.iet.file, &mut cfg.roof.file, &mut cfg.saddle.file].into_iter().flatten() {
            *f = resolve(dir, f);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the resolved config.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let sources = [
            self.iet.preset.is_some(),
            self.iet.rotation.is_some(),
            self.iet.file.is_some(),
            self.iet.inline.is_some(),
        ];
        if sources.iter().filter(|&&b| b).count() > 1 {
            return Err(config_err("[iet] takes at most one of preset, rotation, file, inline"));
        }
        if self.roof.preset.is_some() as u8 + self.roof.file.is_some() as u8 + self.roof.inline.is_some() as u8 > 1 {
            return Err(config_err("[roof] takes at most one of preset, file, inline"));
        }
        if self.saddle.preset.is_some() as u8 + self.saddle.file.is_some() as u8 + self.saddle.inline.is_some() as u8
            > 1
        {
            return Err(config_err("[saddle] takes at most one of preset, file, inline"));
        }
        for f in [&self.iet.file, &self.roof.file, &self.saddle.file].into_iter().flatten() {
            if !f.is_file() {
                return Err(config_err(format!("referenced file {} does not exist", f.display())));
            }
        }
        positive("roof.offset", self.roof.offset)?;
        positive("saddle.rho", self.saddle.rho)?;
        nonzero("induce.return_cap", self.induce.return_cap)?;
        nonzero("partition.kmax", self.partition.kmax)?;
        nonzero("partition.return_cap", self.partition.return_cap)?;
        nonzero("keane.depth", self.keane.depth)?;
        positive("growth.c", self.growth.c)?;
        if !(self.growth.b >= 0.0 && self.growth.b.is_finite()) {
            return Err(config_err("growth.b must be non-negative"));
        }
        nonzero("growth.grid", self.growth.grid)?;
        if self.weakmix.s.is_empty() {
            return Err(config_err("weakmix.s must list at least one frequency"));
        }
        nonzero("weakmix.n", self.weakmix.n)?;
        nonzero("weakmix.samples", self.weakmix.samples)?;
        nonzero("weakmix.resample_budget", self.weakmix.resample_budget)?;
        nonzero("stretch.kmax", self.stretch.kmax)?;
        nonzero("stretch.return_cap", self.stretch.return_cap)?;
        nonzero("stretch.grid", self.stretch.grid)?;
        let r = &self.saddle_run;
        if r.hs.is_empty() {
            return Err(config_err("saddle_run.hs must not be empty"));
        }
        for &h in &r.hs {
            positive("saddle_run.hs entry", h)?;
        }
        nonzero("saddle_run.angular_resolution", r.angular_resolution)?;
        positive("saddle_run.rtol", r.rtol)?;
        positive("saddle_run.atol", r.atol)?;
        positive("saddle_run.event_tol", r.event_tol)?;
        nonzero("saddle_run.max_steps", r.max_steps)?;
        if self.bkl.hs.is_empty() {
            return Err(config_err("bkl.hs must not be empty"));
        }
        for &h in &self.bkl.hs {
            positive("bkl.hs entry", h)?;
        }
        positive("bkl.tol", self.bkl.tol)?;
        if self.bkl.nm_max == 0 {
            return Err(config_err("bkl.nm_max must be positive"));
        }
        Ok(())
    }

    pub fn build_iet(&self) -> Result<Iet> {
        let src = &self.iet;
        let d = src.d.unwrap_or(DEFAULT_RADICAND);
        if let Some(beta) = &src.rotation {
            let b = beta.to_scalar(d).map_err(IetError::from)?;
            return Ok(Iet::rotation(&b)?);
        }
        if let Some(f) = &src.file {
            let text = fs::read_to_string(f).map_err(|source| CliError::Io { path: f.clone(), source })?;
            return Ok(Iet::from_toml(&text)?);
        }
        if let Some(spec) = &src.inline {
            return Ok(Iet::from_spec(spec)?);
        }
        Ok(Iet::golden_rotation())
    }

    pub fn build_roof(&self, t: &Iet) -> Result<RoofFunction> {
        let src = &self.roof;
        let f = if let Some(path) = &src.file {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            RoofSpec::from_toml(&text)?.build()?
        } else if let Some(spec) = &src.inline {
            spec.build()?
        } else {
            match src.preset.unwrap_or(RoofPreset::CanonicalLog) {
                RoofPreset::CanonicalLog => RoofFunction::canonical_log(t)?,
                RoofPreset::Constant => RoofFunction::constant(src.offset)?,
                RoofPreset::Kochergin => {
                    let kind = match (src.kind, src.exponent) {
                        (KindText::Log, None) => TermKind::Log,
                        (KindText::Power, Some(r)) => TermKind::Power { r },
                        (KindText::LogPower, Some(r)) => TermKind::LogPower { r },
                        _ => return Err(config_err("roof.exponent is required for power kinds and forbidden for log")),
                    };
                    RoofFunction::kochergin(t, kind, src.c_left, src.c_right, src.offset)?
                }
            }
        };
        match src.guard_band {
            Some(g) => Ok(f.with_guard_band(g)?),
            None => Ok(f),
        }
    }

    pub fn build_saddle(&self) -> Result<SaddleModel> {
        let src = &self.saddle;
        if let Some(path) = &src.file {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            return Ok(SaddleSpec::from_toml(&text)?.build()?);
        }
        if let Some(spec) = &src.inline {
            return Ok(spec.build()?);
        }
        Ok(match src.preset.unwrap_or(SaddlePreset::Xy) {
            SaddlePreset::Xy => SaddleModel::xy(src.rho, src.shape)?,
            SaddlePreset::Monkey => SaddleModel::monkey(src.rho, src.shape)?,
            SaddlePreset::Degenerate => SaddleModel::degenerate(src.rho, src.shape)?,
        })
    }
}

// ---------------------------------------------------------------- outputs

/// Files written and headline numbers of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutcome {
    pub outputs: Vec<String>,
    pub summary: toml::Table,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_sha256: &'a str,
    outputs: &'a [String],
    summary: &'a toml::Table,
    config: &'a ExperimentConfig,
}

struct Writer<'a> {
    dir: &'a Path,
    comments: Vec<String>,
    outcome: RunOutcome,
}

impl Writer<'_> {
    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
        self.outcome.outputs.push(name.to_string());
        Ok(())
    }

    fn write_csv(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        let text = table.render(&self.comments);
        self.write_text(name, &text)
    }

    fn note(&mut self, key: &str, v: impl Into<toml::Value>) {
        self.outcome.summary.insert(key.to_string(), v.into());
    }
}

fn log(verbose: bool, msg: impl AsRef<str>) {
    if verbose {
        eprintln!("[surface-flows] {}", msg.as_ref());
    }
}

/// Runs one subcommand: loads the config, writes outputs under `--out`
/// and a `manifest.toml` naming them.
pub fn run(cli: &Cli) -> Result<RunOutcome> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(c) = &cfg.command {
        if c != cli.command.name() {
            return Err(config_err(format!("config is for `{c}`, not `{}`", cli.command.name())));
        }
    }
    if cli.threads == Some(0) {
        return Err(config_err("--threads must be positive"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| config_err(e.to_string()))?;
    fs::create_dir_all(&cli.out).map_err(|source| CliError::Io { path: cli.out.clone(), source })?;

    let hash = cfg.sha256();
    let mut w = Writer {
        dir: &cli.out,
        comments: vec![
            format!("config_sha256={hash}"),
            format!("command={}", cli.command.name()),
            format!("seed={}", cfg.seed),
        ],
        outcome: RunOutcome::default(),
    };
    log(cli.verbose, format!("{} (config {hash})", cli.command.name()));
    pool.install(|| dispatch(cli.command, &cfg, &mut w, cli.verbose))?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        seed: cfg.seed,
        config_sha256: &hash,
        outputs: &w.outcome.outputs.clone(),
        summary: &w.outcome.summary,
        config: &cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| config_err(e.to_string()))?;
    w.write_text("manifest.toml", &text)?;
    log(cli.verbose, format!("wrote {} files to {}", w.outcome.outputs.len(), cli.out.display()));
    Ok(w.outcome)
}

fn dispatch(cmd: Command, cfg: &ExperimentConfig, w: &mut Writer<'_>, verbose: bool) -> Result<()> {
    match cmd {
        Command::Induce => run_induce(cfg, w),
        Command::Partition => run_partition(cfg, w),
        Command::Keane => run_keane(cfg, w),
        Command::Growth => run_growth(cfg, w),
        Command::Weakmix => run_weakmix(cfg, w, verbose),
        Command::Stretch => run_stretch(cfg, w),
        Command::Saddle => run_saddle(cfg, w, verbose),
        Command::Bkl => run_bkl(cfg, w),
    }
}

fn scalar(text: &ScalarText, t: &Iet) -> Result<ExactScalar> {
    text.to_scalar(t.radicand()).map_err(|e| CliError::Iet(e.into()))
}

fn run_induce(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<()> {
    let t = cfg.build_iet()?;
    let p = &cfg.induce;
    let base = Interval::new(scalar(&p.left, &t)?, scalar(&p.right, &t)?)?;
    let ind = induction::induce(&t, &base, p.return_cap)?;
    let mut table =
        CsvTable::new(["cell", "left", "right", "left_approx", "return_time_steps", "translation", "itinerary"]);
    for (i, c) in ind.cells.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            ExactScalar::to_string(&c.interval.left),
            ExactScalar::to_string(&c.interval.right),
            fmt_f64(c.interval.left.to_f64()),
            c.return_time.to_string(),
            ExactScalar::to_string(&c.translation),
            c.itinerary.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
        ]);
    }
    w.write_csv("induced.csv", &table)?;
    if let Ok(r) = ind.rescaled(t.radicand()) {
        w.write_text("induced_rescaled.toml", &r.to_toml())?;
    }
    w.note("cells", ind.cells.len() as i64);
    w.note("identity", ind.is_identity());
    Ok(())
}

fn run_partition(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<()> {
    let t = cfg.build_iet()?;
    let p = &cfg.partition;
    let eps = scalar(&p.epsilon, &t)?;
    let part = induction::tcut_partition(&t, &eps, p.kmax, p.return_cap)?;
    w.write_text("partition.toml", &part.to_toml())?;
    let mut table = CsvTable::new([
        "cell",
        "left",
        "right",
        "item",
        "point",
        "tcut_index_steps",
        "left_return_time_steps",
        "passes",
    ]);
    for (i, c) in part.certificates.iter().enumerate() {
        let (l, r) = (ExactScalar::to_string(&c.cell.left), ExactScalar::to_string(&c.cell.right));
        for d in &c.discontinuities {
            table.push(vec![
                i.to_string(),
                l.clone(),
                r.clone(),
                "discontinuity".into(),
                ExactScalar::to_string(&d.point),
                d.tcut_index.map_or("NA".into(), |k| k.to_string()),
                "NA".into(),
                d.tcut_index.is_some().to_string(),
            ]);
        }
        if let Some(re) = &c.right_end {
            table.push(vec![
                i.to_string(),
                l.clone(),
                r.clone(),
                "right_end".into(),
                ExactScalar::to_string(&re.point),
                re.witnesses.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                re.left_return_time.to_string(),
                (!re.witnesses.is_empty()).to_string(),
            ]);
        }
    }
    w.write_csv("certificates.csv", &table)?;
    w.note("k", part.k as i64);
    w.note("mesh", part.partition.mesh.to_f64());
    w.note("all_certified", part.all_certified());
    Ok(())
}

fn run_keane(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<()> {
    let t = cfg.build_iet()?;
    let report = t.is_keane_to_depth(cfg.keane.depth)?;
    let mut table = CsvTable::new(["depth_steps", "holds", "j", "n_steps", "k", "m_steps"]);
    let depth = cfg.keane.depth.to_string();
    match &report {
        KeaneReport::Certified { .. } => {
            table.push(vec![depth, "true".into(), "NA".into(), "NA".into(), "NA".into(), "NA".into()])
        }
        KeaneReport::Violated(v) => {
            table.push(vec![depth, "false".into(), v.j.to_string(), v.n.to_string(), v.k.to_string(), v.m.to_string()])
        }
    }
    w.write_csv("keane.csv", &table)?;
    w.note("holds", report.holds());
    Ok(())
}

fn run_growth(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<()> {
    let t = cfg.build_iet()?;
    let f = cfg.build_roof(&t)?;
    let g = &cfg.growth;
    let rep = roof::conformance_check(&t, &f, g.c, g.b, g.grid)?;
    w.write_csv("growth.csv", &rep.growth.to_csv())?;
    w.note("passes", rep.passes());
    w.note("discontinuities_covered", rep.discontinuities_covered);
    if let Some(reason) = &rep.growth.structural_failure {
        w.note("structural_failure", reason.as_str());
    } else {
        w.note("worst_margin", rep.growth.worst_margin);
        w.note("argmin", rep.growth.argmin);
    }
    Ok(())
}

fn run_weakmix(cfg: &ExperimentConfig, w: &mut Writer<'_>, verbose: bool) -> Result<()> {
    let t = cfg.build_iet()?;
    let f = cfg.build_roof(&t)?;
    let p = &cfg.weakmix;
    let base =
        DiagnosticConfig { s: p.s[0], n: p.n, samples: p.samples, seed: cfg.seed, resample_budget: p.resample_budget };
    let mut all = CsvTable::new(["s_freq", "N_steps", "sample_id", "W_N"]);
    let mut defects = Vec::new();
    for &s in &p.s {
        log(verbose, format!("weakmix s = {s}"));
        let c = DiagnosticConfig { s, ..base.clone() };
        let samples = weakmix::weyl_diagnostic(&t, &f, &c)?;
        all.rows.extend(weakmix::weyl_csv(s, &samples).rows);
        let finals: Vec<f64> = samples.iter().map(|x| x.final_value()).collect();
        defects.push(weakmix::DefectRow {
            s,
            n: p.n,
            mean: finals.iter().sum::<f64>() / finals.len() as f64,
            max: finals.iter().copied().fold(0.0, f64::max),
        });
    }
    w.write_csv("weyl.csv", &all)?;
    w.write_csv("defect.csv", &weakmix::defect_csv(&defects))?;
    w.note("max_W_N", defects.iter().map(|d| d.max).fold(0.0, f64::max));
    Ok(())
}

fn run_stretch(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<()> {
    let t = cfg.build_iet()?;
    let f = cfg.build_roof(&t)?;
    let p = &cfg.stretch;
    let sing: Vec<ExactScalar> = match p.singularities {
        SingularitySource::Iet => t.discontinuities(),
        SingularitySource::Roof => f
            .singularities()
            .iter()
            .map(|s| s.anchor.clone().ok_or_else(|| config_err("stretch needs exact singularity anchors")))
            .collect::<Result<_>>()?,
    };
    let eps = scalar(&p.epsilon, &t)?;
    let part = induction::tcut_partition(&t, &eps, p.kmax, p.return_cap)?;
    let rep = weakmix::stretch_certificate(&t, &f, &part.partition, &sing, p.s, p.grid, p.return_cap)?;
    w.write_csv("stretch.csv", &rep.to_csv())?;
    w.note("passes", rep.passes());
    w.note("towers", rep.towers.len() as i64);
    if let Some(m) = rep.global_min {
        w.note("global_min", m);
    }
    Ok(())
}

fn run_saddle(cfg: &ExperimentConfig, w: &mut Writer<'_>, verbose: bool) -> Result<()> {
    let m = cfg.build_saddle()?;
    let p = &cfg.saddle_run;
    let secs = saddle::sectors(&m, p.angular_resolution)?;
    let mut table = CsvTable::new(["sector", "arc_start_rad", "arc_end_rad", "sign", "h0"]);
    for s in &secs {
        table.push(vec![
            s.id.to_string(),
            fmt_f64(s.arc_start),
            fmt_f64(s.arc_end),
            fmt_f64(s.sign),
            fmt_f64(saddle::sector_h0(&m, s)),
        ]);
    }
    w.write_csv("sectors.csv", &table)?;
    let sector = match p.sector_angle {
        Some(a) => saddle::sector_at(&secs, a)
            .ok_or_else(|| config_err(format!("saddle_run.sector_angle {a} lies on a separatrix")))?,
        None => secs[0],
    };
    log(verbose, format!("sector {} of {}", sector.id, secs.len()));
    let tol = Tolerances { rtol: p.rtol, atol: p.atol, max_steps: p.max_steps, event_tol: p.event_tol };
    let rep = saddle::verify_da_dh(&m, &sector, &p.hs, &tol)?;
    w.write_csv("saddle.csv", &rep.to_csv())?;
    w.note("separatrices", secs.len() as i64);
    w.note("sector", sector.id as i64);
    w.note("max_deviation", rep.max_deviation);
    if let Some(fit) = &p.fit {
        let samples: Vec<(f64, f64)> = rep.rows.iter().map(|r| (r.h, r.tau)).collect();
        let fr = log_puiseux::lp_fit(&samples, fit.n, fit.k0, fit.terms)?;
        let series = toml::Value::try_from(&fr.series).map_err(|e| config_err(e.to_string()))?;
        w.outcome.summary.insert("tau_fit".into(), series);
        w.note("tau_fit_residual", fr.max_relative_residual);
    }
    Ok(())
}

fn run_bkl(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<()> {
    let p = &cfg.bkl;
    let rows = log_puiseux::bkl_table(p.kl_max, p.nm_max, &p.hs, p.tol)?;
    w.write_csv("bkl.csv", &log_puiseux::bkl_csv(&rows))?;
    w.note("rows", rows.len() as i64);
    w.note("max_relative_error", rows.iter().map(|r| r.relative_error).fold(0.0, f64::max));
    Ok(())
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Renders the exit-code table used in `--help`-adjacent docs.
pub fn exit_code_table() -> String {
    let mut s = String::new();
    for (code, what) in [
        (0, "success"),
        (2, "config"),
        (3, "iet"),
        (4, "induction"),
        (5, "roof"),
        (6, "log-puiseux"),
        (7, "saddle"),
        (8, "weakmix"),
        (9, "io"),
    ] {
        let _ = writeln!(s, "{code}\t{what}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.sha256(), c.sha256());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_budgets() {
        assert!(matches!(ExperimentConfig::from_toml("bogus = 1"), Err(CliError::Config(_))));
        let c = ExperimentConfig::from_toml("[weakmix]\nn = 0").unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let c =
            ExperimentConfig::from_toml("[iet]\npreset = \"golden-rotation\"\nrotation = [\"1/3\", \"0\"]").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn builds_sources() {
        let c = ExperimentConfig::from_toml(
            "[iet]\nrotation = [\"1/3\", \"0\"]\n[roof]\npreset = \"kochergin\"\nc_left = 2.0\n[saddle]\npreset = \"monkey\"",
        )
        .unwrap();
        let t = c.build_iet().unwrap();
        assert_eq!(t, Iet::rotation(&ExactScalar::from_ratio(1, 3)).unwrap());
        assert_eq!(c.build_roof(&t).unwrap().singularities().len(), 1);
        assert_eq!(saddle::sectors(&c.build_saddle().unwrap(), 720).unwrap().len(), 6);
    }

    #[test]
    fn exit_codes_are_distinct() {
        let errs = [
            CliError::Config(String::new()),
            CliError::Iet(IetError::NotCovering),
            CliError::Induction(InductionError::NoDiscontinuities),
            CliError::Roof(RoofError::BadGuardBand(0.0)),
            CliError::Saddle(SaddleError::ZeroHamiltonian),
            CliError::WeakMix(WeakMixError::BadConfig(String::new())),
            CliError::Io { path: PathBuf::new(), source: std::io::Error::other("x") },
        ];
        let codes: Vec<i32> = errs.iter().map(CliError::exit_code).collect();
        assert_eq!(codes, vec![2, 3, 4, 5, 7, 8, 9]);
        assert!(exit_code_table().starts_with("0\tsuccess"));
    }
}
