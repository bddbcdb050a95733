//! Command line front end: file handling, logging and exit codes around
//! [`morphcolor::colorize_from_exemplar`].

pub mod config;
pub mod imageio;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use morphcolor::grid::resample;
use morphcolor::pipeline::{colorize_from_exemplar_with_observer, path_montage, rgb_transport, PipelineParams};
use morphcolor::{rgb_to_yuv, yuv_to_rgb, ColorImage, Error, YuvImage};

pub use config::{parse_config, resolve, Args, Parsed, PipelineConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DIMENSIONS: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Dimensions(String),
    #[error("solver failed: {0}")]
    Solver(Error),
    #[error(transparent)]
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Dimensions(_) => EXIT_DIMENSIONS,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Core(_) => EXIT_FAILURE,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_solver_failure() => CliError::Solver(e),
            Error::DimensionMismatch { .. } => CliError::Dimensions(e.to_string()),
            e => CliError::Core(e),
        }
    }
}

/// Writes one `key=value` line to `log`.
fn log_line(log: &mut dyn Write, fields: &[(&str, String)]) {
    let line: Vec<String> = fields
        .iter()
        .map(|(k, v)| {
            if v.contains(' ') {
                format!("{k}={v:?}")
            } else {
                format!("{k}={v}")
            }
        })
        .collect();
    let _ = writeln!(log, "{}", line.join(" "));
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output: ColorImage,
    pub final_energy: f64,
    pub written: Vec<PathBuf>,
}

fn resize_color(img: &ColorImage, width: usize, height: usize) -> Result<ColorImage, CliError> {
    let channels = (0..3)
        .map(|i| resample(&img.channel(i), width, height))
        .collect::<Result<Vec<_>, _>>()?;
    let pixels = (0..width * height)
        .map(|k| std::array::from_fn(|i| channels[i].values()[k]))
        .collect();
    Ok(ColorImage::clamped(width, height, pixels)?)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.png"))
}

/// Runs the pipeline described by `config`, logging progress to `log`.
pub fn run(config: &PipelineConfig, log: &mut dyn Write) -> Result<RunSummary, CliError> {
    let source = imageio::load_color(&config.source_path)?;
    let target_img = imageio::load_color(&config.target_path)?;
    let target_gray = target_img.is_gray(imageio::GRAY_TOLERANCE);
    let target = rgb_to_yuv(&target_img).y;
    log_line(
        log,
        &[
            ("event", "load".into()),
            ("source", config.source_path.display().to_string()),
            ("source_size", format!("{}x{}", source.width(), source.height())),
            ("target", config.target_path.display().to_string()),
            ("target_size", format!("{}x{}", target.width(), target.height())),
            ("target_gray", target_gray.to_string()),
        ],
    );

    let source = if source.dims() == target.dims() {
        source
    } else if config.resize_source {
        log_line(
            log,
            &[
                ("event", "resize_source".into()),
                ("size", format!("{}x{}", target.width(), target.height())),
            ],
        );
        resize_color(&source, target.width(), target.height())?
    } else {
        return Err(CliError::Dimensions(format!(
            "source and target must have equal dimensions (source {}x{}, target {}x{}); pass --resize-source to rescale the source",
            source.width(),
            source.height(),
            target.width(),
            target.height()
        )));
    };

    let params = PipelineParams {
        morph: config.morph.clone(),
        post: config.post.clone(),
    };
    let out = colorize_from_exemplar_with_observer(&source, &target, &params, |r| {
        log_line(
            log,
            &[
                ("event", "sweep".into()),
                ("level", r.level.to_string()),
                ("size", format!("{}x{}", r.width, r.height)),
                ("sweep", r.sweep.to_string()),
                ("energy", format!("{:.9e}", r.energy)),
            ],
        );
    })?;
    if let Some(post) = &out.post {
        for (stage, report) in [("tv", &post.tv), ("debias", &post.debias)] {
            log_line(
                log,
                &[
                    ("event", "postprocess".into()),
                    ("stage", stage.into()),
                    ("iterations", report.iterations.to_string()),
                    ("converged", report.converged.to_string()),
                    ("change", format!("{:.3e}", report.final_change)),
                ],
            );
        }
        log_line(log, &[("event", "debias".into()), ("rho", format!("{:.6}", post.rho))]);
    }

    let mut written = Vec::new();
    imageio::save_color(&config.output_path, &out.image)?;
    written.push(config.output_path.clone());

    let source_yuv = rgb_to_yuv(&source);
    if let Some(path) = &config.export_montage {
        let montage = path_montage(&out.morph, &source_yuv.u, &source_yuv.v, 4)?;
        imageio::save_color(path, &montage)?;
        written.push(path.clone());
    }
    if let Some(dir) = &config.export_intermediates {
        fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.clone(),
            message: e.to_string(),
        })?;
        let template = dir.join("template.png");
        imageio::save_gray(&template, &out.template)?;
        written.push(template);
        for (k, im) in out.morph.images.iter().enumerate() {
            let p = dir.join(format!("path_{k:03}.png"));
            imageio::save_gray(&p, im)?;
            written.push(p);
        }
        let raw = yuv_to_rgb(&YuvImage::new(target.clone(), out.transported.u.clone(), out.transported.v.clone())?);
        let p = dir.join("unprocessed.png");
        imageio::save_color(&p, &raw)?;
        written.push(p);
    }
    if config.emit_rgb_diagnostic {
        let p = sibling(&config.output_path, "_rgb_transport");
        imageio::save_color(&p, &rgb_transport(&source, &out.phi)?)?;
        written.push(p);
    }

    log_line(
        log,
        &[
            ("event", "done".into()),
            ("out", config.output_path.display().to_string()),
            ("final_energy", format!("{:.9e}", out.morph.final_energy())),
        ],
    );
    Ok(RunSummary {
        output: out.image,
        final_energy: out.morph.final_energy(),
        written,
    })
}

/// Parses `argv`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, log: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = parse_config(argv).and_then(|parsed| match parsed {
        Parsed::Info(text) => {
            let _ = write!(stdout, "{text}");
            Ok(())
        }
        Parsed::Run(config) => run(&config, log).map(|_| ()),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = e.exit_code();
            log_line(
                log,
                &[("event", "error".into()), ("code", code.to_string()), ("message", e.to_string())],
            );
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 64);
        assert_eq!(
            CliError::from(Error::DimensionMismatch {
                expected: (2, 2),
                found: (3, 3)
            })
            .exit_code(),
            3
        );
        assert_eq!(
            CliError::from(Error::Divergence {
                stage: "primal-dual",
                detail: String::new()
            })
            .exit_code(),
            4
        );
        assert_eq!(
            CliError::from(Error::NonDiffeomorphic {
                step: 1,
                det: -1.0,
                row: 0,
                col: 0
            })
            .exit_code(),
            4
        );
        assert_eq!(CliError::from(Error::DegenerateLuminance).exit_code(), 1);
    }

    #[test]
    fn log_quotes_spaces() {
        let mut buf = Vec::new();
        log_line(&mut buf, &[("a", "1".into()), ("msg", "two words".into())]);
        assert_eq!(String::from_utf8(buf).unwrap(), "a=1 msg=\"two words\"\n");
    }

    #[test]
    fn sibling_name() {
        assert_eq!(sibling(Path::new("/tmp/out.png"), "_rgb"), PathBuf::from("/tmp/out_rgb.png"));
    }
}
