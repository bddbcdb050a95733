//! Chrominance transport through the composed deformation and reassembly of
//! the colorized image.

use rayon::prelude::*;

use crate::colorspace::{yuv_to_rgb, ColorImage, YuvImage};
use crate::error::{Error, Result};
use crate::grid::{bilinear_sample, same_dims, CoordinateMap, ScalarField};

/// Samples both chrominance planes at `phi(x)` for every target pixel.
pub fn transfer_chrominance(
    phi: &CoordinateMap,
    u_src: &ScalarField,
    v_src: &ScalarField,
) -> Result<(ScalarField, ScalarField)> {
    same_dims(u_src, v_src)?;
    if phi.dims() != u_src.dims() {
        return Err(Error::DimensionMismatch {
            expected: u_src.dims(),
            found: phi.dims(),
        });
    }
    Ok((sample_along(phi, u_src), sample_along(phi, v_src)))
}

/// `f(phi(x))` on the grid of `phi`.
pub fn sample_along(phi: &CoordinateMap, f: &ScalarField) -> ScalarField {
    let (w, h) = phi.dims();
    let values = phi
        .points()
        .par_iter()
        .map(|&p| bilinear_sample(f, p))
        .collect();
    ScalarField::from_raw(w, h, values)
}

/// Combines the target luminance with transported chrominance.
pub fn colorize(y_tar: &ScalarField, u_tar: &ScalarField, v_tar: &ScalarField) -> Result<ColorImage> {
    let yuv = YuvImage::new(y_tar.clone(), u_tar.clone(), v_tar.clone())?;
    Ok(yuv_to_rgb(&yuv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorspace::rgb_to_yuv;
    use crate::grid::Point2;

    fn planes() -> (ScalarField, ScalarField) {
        (
            ScalarField::from_fn(6, 5, |r, c| 0.1 * r as f64 - 0.05 * c as f64),
            ScalarField::from_fn(6, 5, |r, c| ((r * 6 + c) as f64 / 29.0 - 0.5) * 0.3),
        )
    }

    #[test]
    fn identity_map_copies_planes() {
        let (u, v) = planes();
        let (ut, vt) = transfer_chrominance(&CoordinateMap::identity(6, 5), &u, &v).unwrap();
        assert_eq!(ut, u);
        assert_eq!(vt, v);
    }

    #[test]
    fn constant_map_gives_constant_planes() {
        let (u, v) = planes();
        let p = Point2::new(2.3, 4.6);
        let phi = CoordinateMap::new(6, 5, vec![p; 30]).unwrap();
        let (ut, vt) = transfer_chrominance(&phi, &u, &v).unwrap();
        assert!(ut.values().iter().all(|&x| x == bilinear_sample(&u, p)));
        assert!(vt.values().iter().all(|&x| x == bilinear_sample(&v, p)));
    }

    #[test]
    fn integer_translation_shifts_planes() {
        let (u, v) = planes();
        let points = (0..5)
            .flat_map(|r| (0..6).map(move |c| (r, c)))
            .map(|(r, c)| ScalarField::point((r + 1).min(4), (c + 2).min(5)))
            .collect();
        let phi = CoordinateMap::new(6, 5, points).unwrap();
        let (ut, _) = transfer_chrominance(&phi, &u, &v).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(ut.get(r, c), u.get(r + 1, c + 2));
            }
        }
    }

    #[test]
    fn offsets_commute_with_transport() {
        let (u, v) = planes();
        let phi = CoordinateMap::new(
            6,
            5,
            (0..30).map(|k| Point2::new(1.0 + (k % 5) as f64 * 0.9, 1.3 + (k / 5) as f64 * 0.7)).collect(),
        )
        .unwrap();
        let (ut, _) = transfer_chrominance(&phi, &u, &v).unwrap();
        let (shifted, _) = transfer_chrominance(&phi, &u.map(|x| x + 0.25), &v).unwrap();
        for (a, b) in ut.values().iter().zip(shifted.values()) {
            assert!((a + 0.25 - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_chrominance_is_gray() {
        let y = ScalarField::from_fn(4, 4, |r, c| (r * 4 + c) as f64 / 15.0);
        let zero = ScalarField::zeros(4, 4);
        let rgb = colorize(&y, &zero, &zero).unwrap();
        for (px, l) in rgb.pixels().iter().zip(y.values()) {
            for ch in px {
                assert!((ch - l).abs() < 2e-3);
            }
        }
    }

    #[test]
    fn dark_target_is_clamped() {
        let y = ScalarField::zeros(4, 4);
        let u = ScalarField::constant(4, 4, 0.05);
        let v = ScalarField::constant(4, 4, -0.03);
        let rgb = colorize(&y, &u, &v).unwrap();
        assert!(rgb.pixels().iter().flatten().all(|c| (0.0..=1.0).contains(c)));
    }

    #[test]
    fn luminance_is_preserved_when_unclamped() {
        let y = ScalarField::from_fn(5, 5, |r, c| 0.3 + 0.4 * ((r + c) as f64 / 8.0));
        let (u, v) = (ScalarField::constant(5, 5, 0.04), ScalarField::constant(5, 5, -0.05));
        let rgb = colorize(&y, &u, &v).unwrap();
        let back = rgb_to_yuv(&rgb);
        for (a, b) in back.y.values().iter().zip(y.values()) {
            assert!((a - b).abs() < 2e-3);
        }
    }
}
