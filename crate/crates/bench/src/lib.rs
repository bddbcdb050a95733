//! Synthetic inputs shared by the benchmarks.

use morphcolor::{ScalarField, VectorField2};

/// Gaussian bump of width `sigma` centered at the 0-based pixel `(row, col)`.
pub fn blob(width: usize, height: usize, center: (f64, f64), sigma: f64) -> ScalarField {
    ScalarField::from_fn(width, height, |r, c| {
        let d = (r as f64 - center.0).powi(2) + (c as f64 - center.1).powi(2);
        (-d / (2.0 * sigma * sigma)).exp()
    })
}

/// A smooth swirl with displacements below one pixel.
pub fn swirl(width: usize, height: usize) -> VectorField2 {
    let (cy, cx) = (height as f64 / 2.0, width as f64 / 2.0);
    VectorField2::from_fn(width, height, |r, c| {
        let (dy, dx) = (r as f64 - cy, c as f64 - cx);
        let fall = (-(dy * dy + dx * dx) / (width * height) as f64 * 8.0).exp();
        (0.8 * fall * dx / cx, -0.8 * fall * dy / cy)
    })
}
