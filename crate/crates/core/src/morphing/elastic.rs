//! Linearized elastic potential of a displacement field.
//!
//! The strain `eps = (grad v + grad v^T) / 2` is assembled from the forward
//! differences of [`crate::grid::gradient`], so the derivatives live on the
//! cell faces between pixel centers.

use crate::grid::{
    diff_cols, diff_cols_adjoint_add, diff_rows, diff_rows_adjoint_add, ScalarField, VectorField2,
};

/// Per-pixel strain components `(e11, e22, e12)`.
fn strain(v1: &[f64], v2: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = w * h;
    let (mut d1v1, mut d2v1, mut d1v2, mut d2v2) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    diff_rows(v1, w, h, &mut d1v1);
    diff_cols(v1, w, h, &mut d2v1);
    diff_rows(v2, w, h, &mut d1v2);
    diff_cols(v2, w, h, &mut d2v2);
    let e12 = d2v1.iter().zip(&d1v2).map(|(a, b)| 0.5 * (a + b)).collect();
    (d1v1, d2v2, e12)
}

/// Pixel-wise integrand `mu * tr(eps^T eps) + lambda / 2 * tr(eps)^2`.
pub fn elastic_density(v: &VectorField2, mu: f64, lambda: f64) -> ScalarField {
    let (w, h) = v.dims();
    let (e11, e22, e12) = strain(v.c1.values(), v.c2.values(), w, h);
    let values = (0..w * h)
        .map(|k| {
            let tr = e11[k] + e22[k];
            mu * (e11[k] * e11[k] + e22[k] * e22[k] + 2.0 * e12[k] * e12[k])
                + 0.5 * lambda * tr * tr
        })
        .collect();
    ScalarField::from_raw(w, h, values)
}

/// Discrete elastic potential, summed over all pixels.
pub fn elastic_potential(v: &VectorField2, mu: f64, lambda: f64) -> f64 {
    elastic_density(v, mu, lambda).values().iter().sum()
}

/// Gradient of [`elastic_potential`] with respect to the flattened
/// components. The potential is quadratic, so this is also the Hessian
/// applied to `(v1, v2)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn elastic_gradient_flat(
    v1: &[f64],
    v2: &[f64],
    w: usize,
    h: usize,
    mu: f64,
    lambda: f64,
    out1: &mut [f64],
    out2: &mut [f64],
) {
    let (e11, e22, e12) = strain(v1, v2, w, h);
    let n = w * h;
    let mut s11 = vec![0.0; n];
    let mut s22 = vec![0.0; n];
    let mut s12 = vec![0.0; n];
    for k in 0..n {
        let tr = e11[k] + e22[k];
        s11[k] = 2.0 * mu * e11[k] + lambda * tr;
        s22[k] = 2.0 * mu * e22[k] + lambda * tr;
        s12[k] = 2.0 * mu * e12[k];
    }
    out1.fill(0.0);
    out2.fill(0.0);
    diff_rows_adjoint_add(&s11, w, h, out1);
    diff_cols_adjoint_add(&s12, w, h, out1);
    diff_cols_adjoint_add(&s22, w, h, out2);
    diff_rows_adjoint_add(&s12, w, h, out2);
}

pub fn elastic_gradient(v: &VectorField2, mu: f64, lambda: f64) -> VectorField2 {
    let (w, h) = v.dims();
    let mut g1 = vec![0.0; w * h];
    let mut g2 = vec![0.0; w * h];
    elastic_gradient_flat(v.c1.values(), v.c2.values(), w, h, mu, lambda, &mut g1, &mut g2);
    VectorField2 {
        c1: ScalarField::from_raw(w, h, g1),
        c2: ScalarField::from_raw(w, h, g2),
    }
}
