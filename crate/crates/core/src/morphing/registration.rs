//! Elastic image registration: minimize
//! `||fixed - moving(x - v(x))||^2 + S(v)` over the displacement `v`.
//!
//! Gauss-Newton with an Armijo backtracking line search. The normal equations
//! are solved matrix-free by Jacobi-preconditioned conjugate gradients. Steps
//! that would fold the grid (a non-positive Jacobian determinant) are
//! rejected during the line search.

use rayon::prelude::*;

use super::elastic::{elastic_gradient_flat, elastic_potential};
use super::MorphParams;
use crate::error::{Error, Result};
use crate::grid::{
    bilinear_sample, jacobian_determinant, same_dims, warp, Point2, ScalarField, VectorField2,
};

/// Relative residual at which the inner CG solve stops.
pub const CG_RELATIVE_RESIDUAL: f64 = 1e-3;
const CG_MAX_ITERATIONS: usize = 400;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 20;
/// Outer iterations stop once the relative energy decrease drops below this.
const STALL_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct RegistrationReport {
    pub displacement: VectorField2,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub iterations: usize,
}

/// Data mismatch plus elastic potential of `v`.
pub fn registration_energy(
    fixed: &ScalarField,
    moving: &ScalarField,
    v: &VectorField2,
    mu: f64,
    lambda: f64,
) -> Result<f64> {
    same_dims(fixed, moving)?;
    let warped = warp(moving, v)?;
    let data: f64 = warped
        .values()
        .iter()
        .zip(fixed.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(data + elastic_potential(v, mu, lambda))
}

/// Registers `moving` onto `fixed` starting from `v_init`. The returned
/// displacement never has a higher energy than `v_init`.
pub fn register(
    fixed: &ScalarField,
    moving: &ScalarField,
    v_init: &VectorField2,
    params: &MorphParams,
) -> Result<VectorField2> {
    Ok(register_with_report(fixed, moving, v_init, params)?.displacement)
}

/// Central differences (one-sided on the border); a smoother linearization
/// of the warped image than the forward-difference stencil.
fn central_gradient(f: &ScalarField) -> (ScalarField, ScalarField) {
    let (w, h) = f.dims();
    let g1 = ScalarField::from_fn(w, h, |r, c| {
        let up = r.saturating_sub(1);
        let down = (r + 1).min(h - 1);
        (f.get(down, c) - f.get(up, c)) / (down - up) as f64
    });
    let g2 = ScalarField::from_fn(w, h, |r, c| {
        let left = c.saturating_sub(1);
        let right = (c + 1).min(w - 1);
        (f.get(r, right) - f.get(r, left)) / (right - left) as f64
    });
    (g1, g2)
}

struct Linearization {
    residual: Vec<f64>,
    /// Derivative of the warped moving image with respect to `v`, per pixel.
    jac1: Vec<f64>,
    jac2: Vec<f64>,
}

fn linearize(
    fixed: &ScalarField,
    moving: &ScalarField,
    grad: &(ScalarField, ScalarField),
    v: &VectorField2,
) -> Linearization {
    let (w, h) = fixed.dims();
    let per_pixel: Vec<(f64, f64, f64)> = (0..w * h)
        .into_par_iter()
        .map(|k| {
            let x = ScalarField::point(k / w, k % w);
            let p = Point2::new(x.x1 - v.c1.values()[k], x.x2 - v.c2.values()[k]);
            let m = bilinear_sample(moving, p);
            // d/dv moving(x - v) = -grad moving(x - v); zero where the sample is clamped
            let in1 = p.x1 > 1.0 && p.x1 < h as f64;
            let in2 = p.x2 > 1.0 && p.x2 < w as f64;
            let g1 = if in1 { bilinear_sample(&grad.0, p) } else { 0.0 };
            let g2 = if in2 { bilinear_sample(&grad.1, p) } else { 0.0 };
            (m - fixed.values()[k], -g1, -g2)
        })
        .collect();
    let mut lin = Linearization {
        residual: Vec::with_capacity(w * h),
        jac1: Vec::with_capacity(w * h),
        jac2: Vec::with_capacity(w * h),
    };
    for (r, j1, j2) in per_pixel {
        lin.residual.push(r);
        lin.jac1.push(j1);
        lin.jac2.push(j2);
    }
    lin
}

/// The Gauss-Newton operator `2 J^T J + S'' + damping`, applied matrix-free.
struct NormalOperator<'a> {
    lin: &'a Linearization,
    width: usize,
    height: usize,
    mu: f64,
    lambda: f64,
    damping: f64,
}

impl NormalOperator<'_> {
    fn n(&self) -> usize {
        self.width * self.height
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        let (x1, x2) = x.split_at(n);
        let (o1, o2) = out.split_at_mut(n);
        elastic_gradient_flat(x1, x2, self.width, self.height, self.mu, self.lambda, o1, o2);
        for k in 0..n {
            let (j1, j2) = (self.lin.jac1[k], self.lin.jac2[k]);
            let jx = j1 * x1[k] + j2 * x2[k];
            o1[k] += 2.0 * j1 * jx + self.damping * x1[k];
            o2[k] += 2.0 * j2 * jx + self.damping * x2[k];
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        // interior diagonal of the elastic Hessian
        let elastic = 6.0 * self.mu + 2.0 * self.lambda;
        let n = self.n();
        let mut d = Vec::with_capacity(2 * n);
        d.extend(self.lin.jac1.iter().map(|j| 2.0 * j * j + elastic + self.damping));
        d.extend(self.lin.jac2.iter().map(|j| 2.0 * j * j + elastic + self.damping));
        d
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for `op x = rhs`, starting at zero.
fn conjugate_gradient(op: &NormalOperator, rhs: &[f64]) -> Vec<f64> {
    let m = rhs.len();
    let precond = op.diagonal();
    let mut x = vec![0.0; m];
    let mut r = rhs.to_vec();
    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return x;
    }
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; m];
    for _ in 0..CG_MAX_ITERATIONS {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= CG_RELATIVE_RESIDUAL * rhs_norm {
            break;
        }
        for i in 0..m {
            z[i] = r[i] / precond[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

fn min_determinant(v: &VectorField2) -> f64 {
    jacobian_determinant(v).min()
}

fn offset(v: &VectorField2, step: &[f64], t: f64) -> VectorField2 {
    let (w, h) = v.dims();
    let n = w * h;
    let shift = |f: &ScalarField, s: &[f64]| {
        ScalarField::from_raw(
            w,
            h,
            f.values().iter().zip(s).map(|(a, d)| a + t * d).collect(),
        )
    };
    VectorField2 {
        c1: shift(&v.c1, &step[..n]),
        c2: shift(&v.c2, &step[n..]),
    }
}

/// [`register`] with iteration diagnostics.
pub fn register_with_report(
    fixed: &ScalarField,
    moving: &ScalarField,
    v_init: &VectorField2,
    params: &MorphParams,
) -> Result<RegistrationReport> {
    same_dims(fixed, moving)?;
    same_dims(fixed, &v_init.c1)?;
    let (mu, lambda) = (params.mu, params.lambda);
    let (w, h) = fixed.dims();
    let n = w * h;

    let diverged = |detail: String| Error::Divergence {
        stage: "registration",
        detail,
    };

    let grad = central_gradient(moving);
    let keep_orientation = min_determinant(v_init) > 0.0;
    let mut v = v_init.clone();
    let initial_energy = registration_energy(fixed, moving, &v, mu, lambda)?;
    if !initial_energy.is_finite() {
        return Err(diverged(format!("initial energy {initial_energy}")));
    }
    let mut energy = initial_energy;
    let mut iterations = 0;

    for _ in 0..params.reg_iterations {
        let lin = linearize(fixed, moving, &grad, &v);

        let mut gradient = vec![0.0; 2 * n];
        {
            let (g1, g2) = gradient.split_at_mut(n);
            elastic_gradient_flat(v.c1.values(), v.c2.values(), w, h, mu, lambda, g1, g2);
            for k in 0..n {
                g1[k] += 2.0 * lin.residual[k] * lin.jac1[k];
                g2[k] += 2.0 * lin.residual[k] * lin.jac2[k];
            }
        }
        let grad_norm = dot(&gradient, &gradient).sqrt();
        if grad_norm <= 1e-12 * (1.0 + energy) {
            break;
        }

        let data_scale = lin
            .jac1
            .iter()
            .chain(&lin.jac2)
            .map(|j| j * j)
            .sum::<f64>()
            / n as f64;
        let op = NormalOperator {
            lin: &lin,
            width: w,
            height: h,
            mu,
            lambda,
            damping: 1e-6 * (1.0 + data_scale),
        };
        let rhs: Vec<f64> = gradient.iter().map(|g| -g).collect();
        let mut step = conjugate_gradient(&op, &rhs);
        if step.iter().any(|s| !s.is_finite()) {
            return Err(diverged("non-finite Gauss-Newton step".into()));
        }
        let mut slope = dot(&gradient, &step);
        if slope.is_nan() || slope >= 0.0 {
            step = rhs;
            slope = -grad_norm * grad_norm;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate = offset(&v, &step, t);
            if !keep_orientation || min_determinant(&candidate) > 0.0 {
                let e = registration_energy(fixed, moving, &candidate, mu, lambda)?;
                if !e.is_finite() {
                    return Err(diverged(format!("energy {e} at step length {t}")));
                }
                if e <= energy + ARMIJO_C * t * slope {
                    accepted = Some((candidate, e));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((candidate, e)) = accepted else {
            break;
        };
        iterations += 1;
        let decrease = energy - e;
        v = candidate;
        energy = e;
        if decrease <= STALL_TOLERANCE * energy.max(f64::MIN_POSITIVE) {
            break;
        }
    }

    Ok(RegistrationReport {
        displacement: v,
        initial_energy,
        final_energy: energy,
        iterations,
    })
}
