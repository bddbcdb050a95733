//! RGB <-> YUV conversion and luminance normalization.
//!
//! Channel values are in `[0, 1]`. The two matrices are used with exactly the
//! printed coefficients; they are inverse to each other only up to about
//! `1e-5`, so a round trip is not exact.

use crate::error::{Error, Result};
use crate::grid::{check_dims, same_dims, ScalarField};

/// Rows map `(R, G, B)` to `Y`, `U`, `V`.
pub const RGB_TO_YUV: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.14713, -0.28886, 0.436],
    [0.615, -0.51498, -0.10001],
];

/// Rows map `(Y, U, V)` to `R`, `G`, `B`.
pub const YUV_TO_RGB: [[f64; 3]; 3] = [
    [1.0, 0.0, 1.13983],
    [1.0, -0.39465, -0.58060],
    [1.0, 2.03211, 0.0],
];

#[inline]
fn apply(m: &[[f64; 3]; 3], x: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2],
        m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2],
        m[2][0] * x[0] + m[2][1] * x[1] + m[2][2] * x[2],
    ]
}

/// Converts one RGB triple to YUV.
#[inline]
pub fn rgb_to_yuv_pixel(rgb: [f64; 3]) -> [f64; 3] {
    apply(&RGB_TO_YUV, rgb)
}

/// Converts one YUV triple to RGB without clamping.
#[inline]
pub fn yuv_to_rgb_pixel(yuv: [f64; 3]) -> [f64; 3] {
    apply(&YUV_TO_RGB, yuv)
}

/// An RGB image with every channel in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl ColorImage {
    /// Builds an image from row-major pixels. Values outside `[0, 1]` or
    /// non-finite values are rejected.
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        check_dims(width, height)?;
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        for (k, px) in pixels.iter().enumerate() {
            if px.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: k / width,
                    col: k % width,
                });
            }
            if px.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidInput(format!(
                    "pixel ({}, {}) = {:?} is outside [0, 1]",
                    k / width,
                    k % width,
                    px
                )));
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from finite pixels, clamping every channel to `[0, 1]`.
    pub fn clamped(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        let pixels = pixels
            .into_iter()
            .map(|px| px.map(|v| if v.is_nan() { v } else { v.clamp(0.0, 1.0) }))
            .collect();
        Self::new(width, height, pixels)
    }

    /// Builds an image from 8-bit samples.
    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != 3 * width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} bytes, got {}",
                3 * width * height,
                bytes.len()
            )));
        }
        let pixels = bytes
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]].map(|b| b as f64 / 255.0))
            .collect();
        Self::new(width, height, pixels)
    }

    /// Gray image with all three channels equal to `gray`, clamped to `[0, 1]`.
    pub fn from_gray(gray: &ScalarField) -> Self {
        let pixels = gray
            .values()
            .iter()
            .map(|&v| [v.clamp(0.0, 1.0); 3])
            .collect();
        Self {
            width: gray.width(),
            height: gray.height(),
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> [f64; 3] {
        self.pixels[row * self.width + col]
    }

    /// One channel (0 = R, 1 = G, 2 = B) as a scalar field.
    pub fn channel(&self, index: usize) -> ScalarField {
        ScalarField::from_raw(
            self.width,
            self.height,
            self.pixels.iter().map(|px| px[index]).collect(),
        )
    }

    /// Rounds every channel to the nearest 8-bit level.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|px| px.map(|v| (v * 255.0).round() as u8))
            .collect()
    }

    /// True when all channels of every pixel agree within `tolerance`.
    pub fn is_gray(&self, tolerance: f64) -> bool {
        self.pixels.iter().all(|px| {
            (px[0] - px[1]).abs() <= tolerance
                && (px[1] - px[2]).abs() <= tolerance
                && (px[0] - px[2]).abs() <= tolerance
        })
    }
}

/// Planar YUV image.
#[derive(Clone, Debug, PartialEq)]
pub struct YuvImage {
    pub y: ScalarField,
    pub u: ScalarField,
    pub v: ScalarField,
}

impl YuvImage {
    pub fn new(y: ScalarField, u: ScalarField, v: ScalarField) -> Result<Self> {
        same_dims(&y, &u)?;
        same_dims(&y, &v)?;
        Ok(Self { y, u, v })
    }
}

pub fn rgb_to_yuv(c: &ColorImage) -> YuvImage {
    let (w, h) = c.dims();
    let yuv: Vec<[f64; 3]> = c.pixels.iter().map(|&px| rgb_to_yuv_pixel(px)).collect();
    let plane = |i: usize| ScalarField::from_raw(w, h, yuv.iter().map(|p| p[i]).collect());
    YuvImage {
        y: plane(0),
        u: plane(1),
        v: plane(2),
    }
}

/// Inverse conversion followed by a per-channel clamp to `[0, 1]`.
pub fn yuv_to_rgb(y: &YuvImage) -> ColorImage {
    let pixels = unclamped_rgb(y)
        .into_iter()
        .map(|px| px.map(|v| v.clamp(0.0, 1.0)))
        .collect();
    ColorImage {
        width: y.y.width(),
        height: y.y.height(),
        pixels,
    }
}

/// Inverse conversion without the gamut clamp.
pub fn unclamped_rgb(y: &YuvImage) -> Vec<[f64; 3]> {
    y.y.values()
        .iter()
        .zip(y.u.values())
        .zip(y.v.values())
        .map(|((&l, &u), &v)| yuv_to_rgb_pixel([l, u, v]))
        .collect()
}

/// Affine luminance remapping: matches the mean and the (population)
/// variance of `source_y` to those of `target`.
pub fn luminance_remap(source_y: &ScalarField, target: &ScalarField) -> Result<ScalarField> {
    let var_source = source_y.variance();
    if var_source <= 0.0 {
        return Err(Error::DegenerateLuminance);
    }
    let mean_source = source_y.mean();
    let mean_target = target.mean();
    let scale = (target.variance() / var_source).sqrt();
    Ok(source_y.map(|v| scale * (v - mean_source) + mean_target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(px: [f64; 3]) -> ColorImage {
        ColorImage::new(2, 2, vec![px; 4]).unwrap()
    }

    #[test]
    fn forward_matrix_columns() {
        assert_eq!(rgb_to_yuv_pixel([0.0; 3]), [0.0; 3]);
        assert_eq!(rgb_to_yuv_pixel([1.0, 0.0, 0.0]), [0.299, -0.14713, 0.615]);
        let white = rgb_to_yuv_pixel([1.0; 3]);
        // exact row sums of the printed matrix
        for (got, want) in white.iter().zip([1.0, 0.00001, 0.00001]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn inverse_matrix_columns() {
        assert_eq!(yuv_to_rgb_pixel([0.0; 3]), [0.0; 3]);
        assert_eq!(yuv_to_rgb_pixel([1.0, 0.0, 0.0]), [1.0, 1.0, 1.0]);
        let img = YuvImage::new(
            ScalarField::constant(2, 2, 0.0),
            ScalarField::constant(2, 2, 0.0),
            ScalarField::constant(2, 2, 0.0),
        )
        .unwrap();
        assert_eq!(yuv_to_rgb(&img), single([0.0; 3]));
    }

    #[test]
    fn round_trip_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pixels: Vec<[f64; 3]> = (0..64 * 64).map(|_| rng.gen::<[f64; 3]>()).collect();
        let img = ColorImage::new(64, 64, pixels).unwrap();
        let back = yuv_to_rgb(&rgb_to_yuv(&img));
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            for ch in 0..3 {
                assert!((a[ch] - b[ch]).abs() < 2e-3);
            }
        }
    }

    #[test]
    fn out_of_gamut_is_clamped() {
        let y = ScalarField::constant(2, 2, 0.0);
        let yuv = YuvImage::new(y.clone(), y.map(|_| 0.3), y.map(|_| -0.4)).unwrap();
        let rgb = yuv_to_rgb(&yuv);
        assert!(rgb.pixels().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn color_image_rejects_out_of_range() {
        assert!(ColorImage::new(2, 2, vec![[1.5, 0.0, 0.0]; 4]).is_err());
        assert!(ColorImage::clamped(2, 2, vec![[1.5, -0.1, 0.5]; 4]).is_ok());
    }

    #[test]
    fn remap_identity_when_statistics_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = ScalarField::from_fn(6, 5, |_, _| rng.gen());
        let out = luminance_remap(&s, &s).unwrap();
        for (a, b) in s.values().iter().zip(out.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn remap_two_level_example() {
        let s = ScalarField::from_fn(2, 2, |r, _| r as f64);
        let t = ScalarField::from_fn(2, 2, |r, _| 2.0 * r as f64);
        let out = luminance_remap(&s, &t).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn remap_to_constant_target() {
        let s = ScalarField::from_fn(3, 3, |r, c| (r * 3 + c) as f64);
        let t = ScalarField::constant(3, 3, 0.4);
        let out = luminance_remap(&s, &t).unwrap();
        assert!(out.values().iter().all(|&v| (v - 0.4).abs() < 1e-15));
    }

    #[test]
    fn remap_constant_source_is_an_error() {
        let s = ScalarField::constant(3, 3, 0.5);
        let t = ScalarField::from_fn(3, 3, |r, _| r as f64);
        assert_eq!(luminance_remap(&s, &t), Err(Error::DegenerateLuminance));
    }

    proptest::proptest! {
        #[test]
        fn forward_conversion_is_linear(
            a in proptest::array::uniform3(0.0f64..1.0),
            b in proptest::array::uniform3(0.0f64..1.0),
            t in 0.0f64..1.0,
        ) {
            let mix: [f64; 3] = std::array::from_fn(|i| t * a[i] + (1.0 - t) * b[i]);
            let lhs = rgb_to_yuv_pixel(mix);
            let (ya, yb) = (rgb_to_yuv_pixel(a), rgb_to_yuv_pixel(b));
            for i in 0..3 {
                proptest::prop_assert!((lhs[i] - (t * ya[i] + (1.0 - t) * yb[i])).abs() < 1e-12);
            }
        }

        #[test]
        fn inverse_conversion_stays_in_gamut(
            l in -1.0f64..2.0, u in -1.0f64..1.0, v in -1.0f64..1.0,
        ) {
            let y = ScalarField::constant(2, 2, l);
            let img = YuvImage::new(y.clone(), y.map(|_| u), y.map(|_| v)).unwrap();
            let rgb = yuv_to_rgb(&img);
            proptest::prop_assert!(rgb.pixels().iter().flatten().all(|c| (0.0..=1.0).contains(c)));
        }

        #[test]
        fn remap_matches_moments_and_is_idempotent(
            src in proptest::collection::vec(0.0f64..1.0, 16),
            tgt in proptest::collection::vec(0.0f64..1.0, 16),
        ) {
            let s = ScalarField::new(4, 4, src).unwrap();
            let t = ScalarField::new(4, 4, tgt).unwrap();
            proptest::prop_assume!(s.variance() > 1e-6);
            let once = luminance_remap(&s, &t).unwrap();
            let scale = t.mean().abs().max(1e-3);
            proptest::prop_assert!((once.mean() - t.mean()).abs() <= 1e-10 * scale);
            proptest::prop_assert!((once.variance() - t.variance()).abs() <= 1e-10 * t.variance().max(1e-3));
            if once.variance() > 1e-6 {
                let twice = luminance_remap(&once, &t).unwrap();
                for (a, b) in once.values().iter().zip(twice.values()) {
                    proptest::prop_assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }
}
