//! Variational cleanup of transported chrominance.
//!
//! [`tv_chrominance`] minimizes a luminance-coupled total variation
//!
//! ```text
//! sum_x sqrt(gamma |grad Y|^2 + |grad U|^2 + |grad V|^2) + fidelity(u, b)
//! ```
//!
//! with an accelerated primal-dual scheme, and [`debias`] runs the coupled
//! tangent iteration that restores the contrast TV removes.
//!
//! The dual variable holds six values per pixel: the two gradient components
//! of U, the two of V, and two slots coupled to the luminance gradient. The
//! luminance is scaled by `sqrt(gamma)` before its gradient enters the prox,
//! which puts `gamma` where the coupled TV term has it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{
    diff_cols, diff_cols_adjoint_add, diff_rows, diff_rows_adjoint_add, gradient, same_dims,
    ScalarField, VectorField2,
};

/// Normalization used by [`prox_pb`]: divide by `max(1, |p|^2)` (the default)
/// or by `max(1, |p|)`, the Euclidean projection onto the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ProxNorm {
    #[default]
    Squared,
    Euclidean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostParams {
    /// Luminance coupling weight.
    pub gamma: f64,
    /// Fidelity weight.
    pub alpha: f64,
    pub sigma0: f64,
    pub tau0: f64,
    pub max_iterations: usize,
    /// Stop once the relative change of the primal iterate drops below this.
    pub fixpoint_tol: f64,
    pub prox_norm: ProxNorm,
}

impl Default for PostParams {
    fn default() -> Self {
        Self {
            gamma: 50.0,
            alpha: 0.005,
            sigma0: 0.001,
            tau0: 20.0,
            max_iterations: 2000,
            fixpoint_tol: 1e-6,
            prox_norm: ProxNorm::Squared,
        }
    }
}

/// Upper bound of `|grad|^2` for the forward-difference gradient in 2D.
pub const GRADIENT_NORM_SQUARED: f64 = 8.0;

impl PostParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        for (name, value) in [
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("sigma0", self.sigma0),
            ("tau0", self.tau0),
            ("fixpoint_tol", self.fixpoint_tol),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return bad(name, format!("must be positive, got {value}"));
            }
        }
        if self.max_iterations == 0 {
            return bad("max_iterations", "must be at least 1".into());
        }
        if self.sigma0 * self.tau0 * GRADIENT_NORM_SQUARED >= 1.0 {
            return bad(
                "sigma0",
                format!(
                    "sigma0 * tau0 = {} violates sigma * tau * {GRADIENT_NORM_SQUARED} < 1",
                    self.sigma0 * self.tau0
                ),
            );
        }
        Ok(())
    }
}

pub type Dual6 = [f64; 6];

/// Per-pixel 6-vector dual variable.
#[derive(Clone, Debug, PartialEq)]
pub struct DualField6 {
    width: usize,
    height: usize,
    values: Vec<Dual6>,
}

impl DualField6 {
    pub fn new(width: usize, height: usize, values: Vec<Dual6>) -> Result<Self> {
        crate::grid::check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} dual vectors, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![[0.0; 6]; width * height],
        }
    }

    pub fn values(&self) -> &[Dual6] {
        &self.values
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// A pair of chrominance planes.
#[derive(Clone, Debug, PartialEq)]
pub struct Chroma {
    pub u: ScalarField,
    pub v: ScalarField,
}

impl Chroma {
    pub fn new(u: ScalarField, v: ScalarField) -> Result<Self> {
        same_dims(&u, &v)?;
        Ok(Self { u, v })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.u.dims()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.u.dot(&other.u) + self.v.dot(&other.v)
    }

    pub fn sum_squares(&self) -> f64 {
        self.u.sum_squares() + self.v.sum_squares()
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &Self) -> Result<Self> {
        Ok(Self {
            u: self.u.zip_map(&other.u, |a, b| a + scale * b)?,
            v: self.v.zip_map(&other.v, |a, b| a + scale * b)?,
        })
    }

    fn from_planes(w: usize, h: usize, planes: [Vec<f64>; 2]) -> Self {
        let [u, v] = planes;
        Self {
            u: ScalarField::from_raw(w, h, u),
            v: ScalarField::from_raw(w, h, v),
        }
    }
}

fn norm6(p: &Dual6) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `p - sigma * (0, 0, 0, 0, gy1, gy2)`.
#[inline]
fn shifted(p: Dual6, sigma: f64, gy: (f64, f64)) -> Dual6 {
    let mut out = p;
    out[4] -= sigma * gy.0;
    out[5] -= sigma * gy.1;
    out
}

/// The pixel-wise dual prox.
#[inline]
pub fn prox_pb_pixel(p: Dual6, sigma: f64, gy: (f64, f64), norm: ProxNorm) -> Dual6 {
    let hat = shifted(p, sigma, gy);
    let n = norm6(&hat);
    let scale = match norm {
        ProxNorm::Squared => (n * n).max(1.0),
        ProxNorm::Euclidean => n.max(1.0),
    };
    hat.map(|x| x / scale)
}

pub fn prox_pb(p: &DualField6, sigma: f64, grad_y: &VectorField2, norm: ProxNorm) -> Result<DualField6> {
    if p.dims() != grad_y.dims() {
        return Err(Error::DimensionMismatch {
            expected: p.dims(),
            found: grad_y.dims(),
        });
    }
    let values = p
        .values
        .par_iter()
        .enumerate()
        .map(|(k, &q)| {
            prox_pb_pixel(q, sigma, (grad_y.c1.values()[k], grad_y.c2.values()[k]), norm)
        })
        .collect();
    Ok(DualField6 {
        width: p.width,
        height: p.height,
        values,
    })
}

/// Tangent of the dual prox at `anchor`, applied to `tilde`.
///
/// The luminance shift is constant in the dual variable, so it moves the
/// anchor but not the tangent direction.
#[inline]
pub fn prox_pi_pixel(anchor: Dual6, tilde: Dual6, sigma: f64, gy: (f64, f64)) -> Dual6 {
    let hat = shifted(anchor, sigma, gy);
    let n = norm6(&hat);
    if n < 1.0 {
        return tilde;
    }
    let inner: f64 = hat.iter().zip(&tilde).map(|(a, b)| a * b).sum();
    let along = inner / (n * n);
    std::array::from_fn(|i| (tilde[i] - along * hat[i]) / n)
}

/// Step sizes of the accelerated scheme. Each [`advance`](Self::advance)
/// shrinks `tau` and grows `sigma` by the same factor, keeping `tau * sigma`
/// fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSchedule {
    pub tau: f64,
    pub sigma: f64,
}

impl StepSchedule {
    pub fn new(tau: f64, sigma: f64) -> Self {
        Self { tau, sigma }
    }

    /// Updates the steps and returns the relaxation parameter `theta`.
    pub fn advance(&mut self, alpha: f64) -> f64 {
        let theta = 1.0 / (1.0 + self.tau * alpha).sqrt();
        self.tau *= theta;
        self.sigma /= theta;
        theta
    }
}

/// Snapshot passed to iteration observers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationState {
    pub iteration: usize,
    /// Steps used by this iteration.
    pub tau: f64,
    pub sigma: f64,
    pub theta: f64,
    /// Relative change of the primal iterate.
    pub change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TvReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_change: f64,
    pub tau: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug)]
pub struct TvOutput {
    pub chroma: Chroma,
    pub report: TvReport,
}

#[derive(Clone, Debug)]
pub struct DebiasOutput {
    /// `u_hat + rho * tilde`.
    pub chroma: Chroma,
    /// Limit of the tangent iteration.
    pub tilde: Chroma,
    pub rho: f64,
    pub report: TvReport,
}

/// Grid operators shared by both algorithms, on flat planes.
struct Operators {
    w: usize,
    h: usize,
    /// Gradient of `sqrt(gamma) * Y`.
    grad_y: (Vec<f64>, Vec<f64>),
}

impl Operators {
    fn new(y: &ScalarField, gamma: f64) -> Self {
        let (w, h) = y.dims();
        let g = gradient(&y.map(|v| gamma.sqrt() * v));
        Self {
            w,
            h,
            grad_y: (g.c1.into_values(), g.c2.into_values()),
        }
    }

    fn n(&self) -> usize {
        self.w * self.h
    }

    /// The dual vector `p + sigma * (grad U, grad V, 0, 0)` per pixel.
    fn dual_argument(&self, p: &[Dual6], ubar: &[Vec<f64>; 2], sigma: f64) -> Vec<Dual6> {
        let n = self.n();
        let mut g = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        diff_rows(&ubar[0], self.w, self.h, &mut g[0]);
        diff_cols(&ubar[0], self.w, self.h, &mut g[1]);
        diff_rows(&ubar[1], self.w, self.h, &mut g[2]);
        diff_cols(&ubar[1], self.w, self.h, &mut g[3]);
        p.iter()
            .enumerate()
            .map(|(k, q)| {
                let mut out = *q;
                for c in 0..4 {
                    out[c] += sigma * g[c][k];
                }
                out
            })
            .collect()
    }

    fn initial_dual(&self, u: &[Vec<f64>; 2]) -> Vec<Dual6> {
        self.dual_argument(&vec![[0.0; 6]; self.n()], u, 1.0)
    }

    fn gy(&self, k: usize) -> (f64, f64) {
        (self.grad_y.0[k], self.grad_y.1[k])
    }

    /// `(u + tau (div p + alpha b)) / (1 + tau alpha)` for both planes.
    fn primal_step(&self, u: &[Vec<f64>; 2], p: &[Dual6], b: &[Vec<f64>; 2], tau: f64, alpha: f64) -> [Vec<f64>; 2] {
        let n = self.n();
        std::array::from_fn(|c| {
            let p1: Vec<f64> = p.iter().map(|q| q[2 * c]).collect();
            let p2: Vec<f64> = p.iter().map(|q| q[2 * c + 1]).collect();
            let mut adj = vec![0.0; n];
            diff_rows_adjoint_add(&p1, self.w, self.h, &mut adj);
            diff_cols_adjoint_add(&p2, self.w, self.h, &mut adj);
            (0..n)
                .map(|k| (u[c][k] + tau * (-adj[k] + alpha * b[c][k])) / (1.0 + tau * alpha))
                .collect()
        })
    }
}

fn planes(c: &Chroma) -> [Vec<f64>; 2] {
    [c.u.values().to_vec(), c.v.values().to_vec()]
}

fn relative_change(new: &[Vec<f64>; 2], old: &[Vec<f64>; 2]) -> f64 {
    let mut diff = 0.0;
    let mut base = 0.0;
    for c in 0..2 {
        for (a, b) in new[c].iter().zip(&old[c]) {
            diff += (a - b) * (a - b);
            base += b * b;
        }
    }
    if diff == 0.0 {
        0.0
    } else {
        (diff / base.max(f64::MIN_POSITIVE)).sqrt()
    }
}

fn over_relax(new: &[Vec<f64>; 2], old: &[Vec<f64>; 2], theta: f64) -> [Vec<f64>; 2] {
    std::array::from_fn(|c| {
        new[c]
            .iter()
            .zip(&old[c])
            .map(|(a, b)| a + theta * (a - b))
            .collect()
    })
}

fn check_finite(u: &[Vec<f64>; 2], schedule: &StepSchedule, iteration: usize) -> Result<()> {
    if u.iter().flatten().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            stage: "primal-dual",
            detail: format!(
                "non-finite iterate at iteration {iteration} (tau = {:.3e}, sigma = {:.3e}, sigma * tau = {:.3e})",
                schedule.tau,
                schedule.sigma,
                schedule.tau * schedule.sigma
            ),
        })
    }
}

/// Value of the coupled TV model: the luminance-coupled total variation plus
/// `alpha * ||u - b||^2`.
pub fn coupled_tv_objective(u: &Chroma, b: &Chroma, y: &ScalarField, gamma: f64, alpha: f64) -> Result<f64> {
    same_dims(&u.u, &b.u)?;
    same_dims(&u.u, y)?;
    let gy = gradient(y);
    let gu = gradient(&u.u);
    let gv = gradient(&u.v);
    let n = y.len();
    let tv: f64 = (0..n)
        .map(|k| {
            (gamma * (gy.c1.values()[k].powi(2) + gy.c2.values()[k].powi(2))
                + gu.c1.values()[k].powi(2)
                + gu.c2.values()[k].powi(2)
                + gv.c1.values()[k].powi(2)
                + gv.c2.values()[k].powi(2))
            .sqrt()
        })
        .sum();
    let residual = u.axpy(-1.0, b)?;
    Ok(tv + alpha * residual.sum_squares())
}

/// Primal-dual minimization of the coupled TV model.
pub fn tv_chrominance(b: &Chroma, y: &ScalarField, params: &PostParams) -> Result<TvOutput> {
    tv_chrominance_with_observer(b, y, params, |_| {})
}

pub fn tv_chrominance_with_observer(
    b: &Chroma,
    y: &ScalarField,
    params: &PostParams,
    mut observer: impl FnMut(&IterationState),
) -> Result<TvOutput> {
    params.validate()?;
    same_dims(&b.u, &b.v)?;
    same_dims(&b.u, y)?;
    let (w, h) = y.dims();
    let ops = Operators::new(y, params.gamma);
    let alpha = params.alpha;

    let data = planes(b);
    let mut u = data.clone();
    let mut ubar = u.clone();
    let mut p = ops.initial_dual(&u);
    let mut schedule = StepSchedule::new(params.tau0, params.sigma0);
    let mut report = TvReport {
        iterations: 0,
        converged: false,
        final_change: f64::INFINITY,
        tau: schedule.tau,
        sigma: schedule.sigma,
    };

    for iteration in 1..=params.max_iterations {
        let StepSchedule { tau, sigma } = schedule;
        let arg = ops.dual_argument(&p, &ubar, sigma);
        p = arg
            .iter()
            .enumerate()
            .map(|(k, &q)| prox_pb_pixel(q, sigma, ops.gy(k), params.prox_norm))
            .collect();
        let next = ops.primal_step(&u, &p, &data, tau, alpha);
        check_finite(&next, &schedule, iteration)?;
        let theta = schedule.advance(alpha);
        ubar = over_relax(&next, &u, theta);
        let change = relative_change(&next, &u);
        u = next;

        observer(&IterationState {
            iteration,
            tau,
            sigma,
            theta,
            change,
        });
        report.iterations = iteration;
        report.final_change = change;
        if change < params.fixpoint_tol {
            report.converged = true;
            break;
        }
    }
    report.tau = schedule.tau;
    report.sigma = schedule.sigma;
    Ok(TvOutput {
        chroma: Chroma::from_planes(w, h, u),
        report,
    })
}

/// Debiasing of [`tv_chrominance`]: reruns the primal-dual iteration from
/// `b` alongside its tangent iteration started at `delta = b - u_hat`, then
/// adds the rescaled tangent limit to `u_hat`.
pub fn debias(b: &Chroma, u_hat: &Chroma, y: &ScalarField, params: &PostParams) -> Result<DebiasOutput> {
    params.validate()?;
    same_dims(&b.u, &b.v)?;
    same_dims(&b.u, &u_hat.u)?;
    same_dims(&b.u, y)?;
    let (w, h) = y.dims();
    let ops = Operators::new(y, params.gamma);
    let alpha = params.alpha;

    let data = planes(b);
    let delta = planes(&b.axpy(-1.0, u_hat)?);
    let mut u = data.clone();
    let mut ubar = u.clone();
    let mut tilde = delta.clone();
    let mut tilde_bar = tilde.clone();
    let mut p = ops.initial_dual(&u);
    let mut p_tilde = ops.initial_dual(&tilde);
    let mut schedule = StepSchedule::new(params.tau0, params.sigma0);
    let mut report = TvReport {
        iterations: 0,
        converged: false,
        final_change: f64::INFINITY,
        tau: schedule.tau,
        sigma: schedule.sigma,
    };

    for iteration in 1..=params.max_iterations {
        let StepSchedule { tau, sigma } = schedule;
        let anchor = ops.dual_argument(&p, &ubar, sigma);
        let tilde_arg = ops.dual_argument(&p_tilde, &tilde_bar, sigma);
        p = anchor
            .iter()
            .enumerate()
            .map(|(k, &q)| prox_pb_pixel(q, sigma, ops.gy(k), params.prox_norm))
            .collect();
        p_tilde = anchor
            .iter()
            .zip(&tilde_arg)
            .enumerate()
            .map(|(k, (&a, &t))| prox_pi_pixel(a, t, sigma, ops.gy(k)))
            .collect();
        let next = ops.primal_step(&u, &p, &data, tau, alpha);
        let next_tilde = ops.primal_step(&tilde, &p_tilde, &delta, tau, alpha);
        check_finite(&next, &schedule, iteration)?;
        check_finite(&next_tilde, &schedule, iteration)?;
        let theta = schedule.advance(alpha);
        ubar = over_relax(&next, &u, theta);
        tilde_bar = over_relax(&next_tilde, &tilde, theta);
        let change = relative_change(&next, &u).max(relative_change(&next_tilde, &tilde));
        u = next;
        tilde = next_tilde;

        report.iterations = iteration;
        report.final_change = change;
        if change < params.fixpoint_tol {
            report.converged = true;
            break;
        }
    }
    report.tau = schedule.tau;
    report.sigma = schedule.sigma;

    let tilde = Chroma::from_planes(w, h, tilde);
    let delta = Chroma::from_planes(w, h, delta);
    let norm = tilde.sum_squares();
    let rho = if norm > 0.0 { tilde.dot(&delta) / norm } else { 1.0 };
    Ok(DebiasOutput {
        chroma: u_hat.axpy(rho, &tilde)?,
        tilde,
        rho,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, scale: f64) -> Dual6 {
        let mut p = [0.0; 6];
        p[i] = scale;
        p
    }

    #[test]
    fn prox_leaves_small_vectors_alone() {
        let p = [0.1, -0.2, 0.3, 0.0, 0.4, -0.1];
        assert_eq!(prox_pb_pixel(p, 0.5, (0.0, 0.0), ProxNorm::Squared), p);
    }

    #[test]
    fn prox_divides_by_squared_norm() {
        assert_eq!(prox_pb_pixel(e(0, 2.0), 0.1, (0.0, 0.0), ProxNorm::Squared), e(0, 0.5));
        assert_eq!(prox_pb_pixel(e(0, 2.0), 0.1, (0.0, 0.0), ProxNorm::Euclidean), e(0, 1.0));
    }

    #[test]
    fn prox_unit_norm_boundary() {
        let out = prox_pb_pixel([0.0; 6], 0.2, (3.0, 4.0), ProxNorm::Squared);
        let want = [0.0, 0.0, 0.0, 0.0, -0.6, -0.8];
        for (a, b) in out.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn prox_field_matches_pixel_rule() {
        let p = DualField6::new(2, 2, vec![e(0, 2.0), e(1, 0.5), e(4, 3.0), [0.0; 6]]).unwrap();
        let gy = VectorField2::constant(2, 2, (1.0, 0.0));
        let out = prox_pb(&p, 0.5, &gy, ProxNorm::Squared).unwrap();
        for (k, q) in out.values().iter().enumerate() {
            assert_eq!(*q, prox_pb_pixel(p.values()[k], 0.5, (1.0, 0.0), ProxNorm::Squared));
        }
        // feasibility: a second prox with no shift changes nothing
        let again = prox_pb(&out, 0.0, &VectorField2::zeros(2, 2), ProxNorm::Squared).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn tangent_prox_branches() {
        let t = [0.3, -0.1, 0.0, 0.2, 0.5, 0.1];
        assert_eq!(prox_pi_pixel(e(0, 0.5), t, 0.1, (0.0, 0.0)), t);
        assert_eq!(prox_pi_pixel(e(4, 2.0), e(4, 1.0), 0.0, (0.0, 0.0)), [0.0; 6]);
        assert_eq!(prox_pi_pixel(e(4, 2.0), e(0, 1.0), 0.0, (0.0, 0.0)), e(0, 0.5));
    }

    #[test]
    fn schedule_is_monotone_with_constant_product() {
        let mut s = StepSchedule::new(20.0, 0.001);
        let product = s.tau * s.sigma;
        for _ in 0..500 {
            let (tau, sigma) = (s.tau, s.sigma);
            let theta = s.advance(0.005);
            assert!(theta < 1.0);
            assert!(s.tau < tau && s.sigma > sigma);
            assert!((s.tau * s.sigma - product).abs() < 1e-12 * product);
        }
    }

    #[test]
    fn params_validation() {
        PostParams::default().validate().unwrap();
        let p = PostParams {
            alpha: -1.0,
            ..PostParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "alpha", .. })));
        let p = PostParams {
            sigma0: 0.1,
            tau0: 20.0,
            ..PostParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn constant_chrominance_is_a_fixed_point() {
        let (w, h) = (8, 6);
        let b = Chroma::new(ScalarField::constant(w, h, 0.1), ScalarField::constant(w, h, -0.05)).unwrap();
        let y = ScalarField::constant(w, h, 0.5);
        let out = tv_chrominance(&b, &y, &PostParams::default()).unwrap();
        assert!(out.chroma.axpy(-1.0, &b).unwrap().u.max_abs() < 1e-12);
        assert!(out.chroma.axpy(-1.0, &b).unwrap().v.max_abs() < 1e-12);
        assert!(out.report.converged);
    }

    #[test]
    fn heavy_fidelity_keeps_the_data() {
        let (w, h) = (12, 10);
        let b = Chroma::new(
            ScalarField::from_fn(w, h, |r, c| if (r + 2 * c) % 5 == 0 { 0.2 } else { -0.1 }),
            ScalarField::from_fn(w, h, |r, c| ((r * c) % 7) as f64 * 0.03),
        )
        .unwrap();
        let y = ScalarField::from_fn(w, h, |r, _| r as f64 / 9.0);
        let params = PostParams {
            alpha: 1e4,
            ..PostParams::default()
        };
        let out = tv_chrominance(&b, &y, &params).unwrap();
        let diff = out.chroma.axpy(-1.0, &b).unwrap();
        assert!(diff.u.max_abs().max(diff.v.max_abs()) <= 1e-2);
    }

    #[test]
    fn zero_bias_leaves_estimate_unchanged() {
        let (w, h) = (10, 8);
        let b = Chroma::new(
            ScalarField::from_fn(w, h, |r, c| if c < 5 { 0.1 } else { -0.1 } + 0.01 * r as f64),
            ScalarField::from_fn(w, h, |r, _| if r < 4 { 0.05 } else { 0.0 }),
        )
        .unwrap();
        let y = ScalarField::from_fn(w, h, |r, c| (r + c) as f64 / 16.0);
        let params = PostParams {
            max_iterations: 50,
            ..PostParams::default()
        };
        let out = debias(&b, &b, &y, &params).unwrap();
        assert_eq!(out.rho, 1.0);
        assert_eq!(out.tilde.sum_squares(), 0.0);
        assert_eq!(out.chroma, b);
    }
}
