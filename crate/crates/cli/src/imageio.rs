//! PNG / PPM / PGM input and 8-bit PNG output.

use std::path::Path;

use image::{GrayImage, ImageFormat, RgbImage};
use morphcolor::{ColorImage, ScalarField};

use crate::CliError;

/// Channels of a gray pixel may differ by this much.
pub const GRAY_TOLERANCE: f64 = 1.0 / 255.0;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Loads any supported image as RGB in `[0, 1]`. Gray files get three equal
/// channels.
pub fn load_color(path: &Path) -> Result<ColorImage, CliError> {
    let img = image::open(path).map_err(|e| io_error(path, e))?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    ColorImage::from_rgb8(w, h, img.as_raw()).map_err(|e| io_error(path, e))
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn save_color(path: &Path, img: &ColorImage) -> Result<(), CliError> {
    let buf = RgbImage::from_raw(img.width() as u32, img.height() as u32, img.to_rgb8())
        .expect("buffer size matches dimensions");
    buf.save_with_format(path, ImageFormat::Png).map_err(|e| io_error(path, e))
}

/// Writes a scalar field as an 8-bit gray PNG, clamping to `[0, 1]`.
pub fn save_gray(path: &Path, f: &ScalarField) -> Result<(), CliError> {
    let bytes = f.values().iter().map(|&v| to_byte(v)).collect();
    let buf = GrayImage::from_raw(f.width() as u32, f.height() as u32, bytes).expect("buffer size matches dimensions");
    buf.save_with_format(path, ImageFormat::Png).map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_file_names_the_path() {
        let err = load_color(Path::new("/nonexistent/input.png")).unwrap_err();
        assert_eq!(err.exit_code(), crate::EXIT_IO);
        assert!(err.to_string().contains("/nonexistent/input.png"));
    }

    #[test]
    fn byte_rounding() {
        assert_eq!(to_byte(-0.1), 0);
        assert_eq!(to_byte(0.5), 128);
        assert_eq!(to_byte(2.0), 255);
    }
}
