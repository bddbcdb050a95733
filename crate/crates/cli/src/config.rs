//! Command line and config file parsing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use morphcolor::{MorphParams, PostParams, ProxNorm};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProxNormArg {
    Squared,
    Euclidean,
}

impl From<ProxNormArg> for ProxNorm {
    fn from(v: ProxNormArg) -> Self {
        match v {
            ProxNormArg::Squared => ProxNorm::Squared,
            ProxNormArg::Euclidean => ProxNorm::Euclidean,
        }
    }
}

/// Colorize a gray image with the colors of an exemplar.
#[derive(Parser, Debug, Default)]
#[command(name = "morphcolor", version, about)]
pub struct Args {
    /// Color exemplar (PNG, PPM or PGM).
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Gray image to colorize.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Output PNG.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Number of deformations along the path.
    #[arg(long)]
    pub k_steps: Option<usize>,
    /// Pyramid levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Alternation sweeps per level.
    #[arg(long)]
    pub outer_iters: Option<usize>,
    /// Gauss-Newton iterations per registration.
    #[arg(long)]
    pub reg_iters: Option<usize>,
    /// Relative energy decrease below which a level stops.
    #[arg(long, allow_negative_numbers = true)]
    pub energy_tol: Option<f64>,
    /// Luminance coupling of the chrominance TV.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Fidelity weight of the chrominance TV.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Iteration cap of the primal-dual solvers.
    #[arg(long)]
    pub max_pd_iters: Option<usize>,
    /// Normalization of the dual prox.
    #[arg(long, value_enum)]
    pub prox_norm: Option<ProxNormArg>,
    /// Skip the chrominance TV cleanup and debiasing.
    #[arg(long)]
    pub no_postprocess: bool,
    /// Rescale the source to the target size instead of failing.
    #[arg(long)]
    pub resize_source: bool,
    /// Write the colorized image path as one montage PNG.
    #[arg(long, value_name = "PATH")]
    pub export_montage: Option<PathBuf>,
    /// Write the path images and the unprocessed colorization here.
    #[arg(long, value_name = "DIR")]
    pub export_intermediates: Option<PathBuf>,
    /// Also write the source RGB pulled back through the deformation.
    #[arg(long)]
    pub emit_rgb_diagnostic: bool,
    /// key=value file with defaults for any of the options above.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub source_path: PathBuf,
    pub target_path: PathBuf,
    pub output_path: PathBuf,
    pub morph: MorphParams,
    pub post: Option<PostParams>,
    pub resize_source: bool,
    pub export_montage: Option<PathBuf>,
    pub export_intermediates: Option<PathBuf>,
    pub emit_rgb_diagnostic: bool,
}

#[derive(Debug)]
pub enum Parsed {
    Run(Box<PipelineConfig>),
    /// Help or version text to print before exiting successfully.
    Info(String),
}

const KEYS: &[&str] = &[
    "source",
    "target",
    "out",
    "mu",
    "lambda",
    "k-steps",
    "levels",
    "outer-iters",
    "reg-iters",
    "energy-tol",
    "gamma",
    "alpha",
    "max-pd-iters",
    "prox-norm",
    "no-postprocess",
    "resize-source",
    "export-montage",
    "export-intermediates",
    "emit-rgb-diagnostic",
];

/// Reads `key = value` lines. Blank lines and text after `#` are ignored;
/// underscores in keys are accepted in place of dashes.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value, got '{line}'", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key '{key}'", n + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_text(&text)
}

struct Layered<'a> {
    file: &'a BTreeMap<String, String>,
}

impl Layered<'_> {
    fn value<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("invalid value '{raw}' for --{key}"))),
        }
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.value::<bool>(None, key)?.unwrap_or(false))
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.file.get(key).map(PathBuf::from))
    }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{key} must be positive, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{key} must be at least {min}, got {v}")))
    }
}

fn required(p: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
    match p {
        Some(p) if !p.as_os_str().is_empty() => Ok(p),
        _ => Err(CliError::Usage(format!("missing required option --{key}"))),
    }
}

/// Merges flags over the optional config file over the defaults.
pub fn resolve(args: Args) -> Result<PipelineConfig, CliError> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let l = Layered { file: &file };
    let dm = MorphParams::default();
    let dp = PostParams::default();

    let morph = MorphParams {
        mu: positive("mu", l.value(args.mu, "mu")?.unwrap_or(dm.mu))?,
        lambda: positive("lambda", l.value(args.lambda, "lambda")?.unwrap_or(dm.lambda))?,
        k_steps: at_least("k-steps", l.value(args.k_steps, "k-steps")?.unwrap_or(dm.k_steps), 2)?,
        pyramid_levels: at_least("levels", l.value(args.levels, "levels")?.unwrap_or(dm.pyramid_levels), 1)?,
        outer_iterations: at_least(
            "outer-iters",
            l.value(args.outer_iters, "outer-iters")?.unwrap_or(dm.outer_iterations),
            1,
        )?,
        reg_iterations: at_least("reg-iters", l.value(args.reg_iters, "reg-iters")?.unwrap_or(dm.reg_iterations), 1)?,
        energy_tol: {
            let v = l.value(args.energy_tol, "energy-tol")?.unwrap_or(dm.energy_tol);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("--energy-tol must be nonnegative, got {v}")));
            }
            v
        },
    };

    let post = PostParams {
        gamma: positive("gamma", l.value(args.gamma, "gamma")?.unwrap_or(dp.gamma))?,
        alpha: positive("alpha", l.value(args.alpha, "alpha")?.unwrap_or(dp.alpha))?,
        max_iterations: at_least(
            "max-pd-iters",
            l.value(args.max_pd_iters, "max-pd-iters")?.unwrap_or(dp.max_iterations),
            1,
        )?,
        prox_norm: match l.value(args.prox_norm.map(|v| format!("{v:?}").to_lowercase()), "prox-norm")? {
            None => dp.prox_norm,
            Some(s) => ProxNormArg::from_str(&s, true)
                .map_err(|_| CliError::Usage(format!("invalid value '{s}' for --prox-norm")))?
                .into(),
        },
        ..dp
    };

    let no_post = l.switch(args.no_postprocess, "no-postprocess")?;
    Ok(PipelineConfig {
        source_path: required(l.path(args.source, "source"), "source")?,
        target_path: required(l.path(args.target, "target"), "target")?,
        output_path: required(l.path(args.out, "out"), "out")?,
        morph,
        post: (!no_post).then_some(post),
        resize_source: l.switch(args.resize_source, "resize-source")?,
        export_montage: l.path(args.export_montage, "export-montage"),
        export_intermediates: l.path(args.export_intermediates, "export-intermediates"),
        emit_rgb_diagnostic: l.switch(args.emit_rgb_diagnostic, "emit-rgb-diagnostic")?,
    })
}

pub fn parse_config<I, T>(argv: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Args::try_parse_from(argv) {
        Ok(args) => Ok(Parsed::Run(Box::new(resolve(args)?))),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                Ok(Parsed::Info(e.to_string()))
            }
            _ => Err(CliError::Usage(e.to_string().trim_end().to_string())),
        },
    }
}
