//! Time-discrete image metamorphosis.
//!
//! The path energy
//!
//! ```text
//! J(I, v) = sum_k ||I_k - I_{k-1} o phi_k||^2 + S(v_k),   phi_k(x) = x - v_k(x)
//! ```
//!
//! is minimized with `I_0` and `I_K` pinned by alternating K independent
//! registrations (images fixed) with the trajectory solve of [`sequence`]
//! (deformations fixed), coarse to fine.

pub mod elastic;
pub mod registration;
pub mod sequence;

use std::ops::Deref;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{prolong_displacement, restrict, same_dims, warp, ScalarField, VectorField2};

pub use elastic::{elastic_density, elastic_gradient, elastic_potential};
pub use registration::{register, register_with_report, registration_energy, RegistrationReport};
pub use sequence::{
    compose_map, image_sequence_step, solve_trajectory_system, solve_tridiagonal, trajectories,
};

#[derive(Clone, Debug, PartialEq)]
pub struct MorphParams {
    /// Elastic shear parameter.
    pub mu: f64,
    /// Elastic volume parameter.
    pub lambda: f64,
    /// Number of deformations K along the path.
    pub k_steps: usize,
    pub pyramid_levels: usize,
    /// Alternation sweeps per pyramid level.
    pub outer_iterations: usize,
    /// Gauss-Newton iterations per registration.
    pub reg_iterations: usize,
    /// A level stops early once a sweep lowers the energy by less than this
    /// fraction.
    pub energy_tol: f64,
}

impl Default for MorphParams {
    fn default() -> Self {
        Self {
            mu: 0.025,
            lambda: 0.025,
            k_steps: 24,
            pyramid_levels: 4,
            outer_iterations: 5,
            reg_iterations: 30,
            energy_tol: 1e-4,
        }
    }
}

impl MorphParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad("mu", "must be positive");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", "must be positive");
        }
        if self.k_steps < 2 {
            return bad("k_steps", "must be at least 2");
        }
        if self.pyramid_levels < 1 {
            return bad("pyramid_levels", "must be at least 1");
        }
        if self.outer_iterations < 1 {
            return bad("outer_iterations", "must be at least 1");
        }
        if self.reg_iterations < 1 {
            return bad("reg_iterations", "must be at least 1");
        }
        if !(self.energy_tol >= 0.0 && self.energy_tol.is_finite()) {
            return bad("energy_tol", "must be a nonnegative number");
        }
        Ok(())
    }
}

/// The displacements `v_1..v_K`, all of one size.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationPath(Vec<VectorField2>);

impl DeformationPath {
    pub fn new(fields: Vec<VectorField2>) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidInput("a deformation path needs at least one step".into()))?;
        for f in &fields[1..] {
            same_dims(&first.c1, &f.c1)?;
        }
        Ok(Self(fields))
    }

    pub fn identity(k_steps: usize, width: usize, height: usize) -> Self {
        Self(vec![VectorField2::zeros(width, height); k_steps])
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0[0].dims()
    }

    pub fn into_inner(self) -> Vec<VectorField2> {
        self.0
    }

    /// The first `k` deformations, describing `phi_1 o ... o phi_k`.
    pub fn prefix(&self, k: usize) -> Option<Self> {
        (k >= 1 && k <= self.0.len()).then(|| Self(self.0[..k].to_vec()))
    }

    /// Largest displacement magnitude over all steps.
    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(VectorField2::max_norm).fold(0.0, f64::max)
    }
}

impl Deref for DeformationPath {
    type Target = [VectorField2];

    fn deref(&self) -> &[VectorField2] {
        &self.0
    }
}

/// The images `I_0..I_K`, all of one size.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePath(Vec<ScalarField>);

impl ImagePath {
    pub fn new(images: Vec<ScalarField>) -> Result<Self> {
        if images.len() < 2 {
            return Err(Error::InvalidInput(
                "an image path needs at least the two endpoints".into(),
            ));
        }
        for im in &images[1..] {
            same_dims(&images[0], im)?;
        }
        Ok(Self(images))
    }

    /// `I_k = I_0 + (k / K) (I_K - I_0)`.
    pub fn linear(template: &ScalarField, target: &ScalarField, k_steps: usize) -> Result<Self> {
        same_dims(template, target)?;
        let mut images = Vec::with_capacity(k_steps + 1);
        images.push(template.clone());
        for k in 1..k_steps {
            let t = k as f64 / k_steps as f64;
            images.push(template.zip_map(target, |a, b| a + t * (b - a))?);
        }
        images.push(target.clone());
        Self::new(images)
    }

    pub fn k_steps(&self) -> usize {
        self.0.len() - 1
    }

    pub fn into_inner(self) -> Vec<ScalarField> {
        self.0
    }
}

impl Deref for ImagePath {
    type Target = [ScalarField];

    fn deref(&self) -> &[ScalarField] {
        &self.0
    }
}

/// Mismatch `||I_k - I_{k-1} o phi_k||^2` of every step.
fn step_mismatch(images: &ImagePath, path: &DeformationPath) -> Result<Vec<f64>> {
    if images.len() != path.len() + 1 {
        return Err(Error::InvalidInput(format!(
            "{} images do not fit {} deformations",
            images.len(),
            path.len()
        )));
    }
    same_dims(&images[0], &path[0].c1)?;
    (1..images.len())
        .map(|k| {
            let warped = warp(&images[k - 1], &path[k - 1])?;
            Ok(images[k]
                .values()
                .iter()
                .zip(warped.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum())
        })
        .collect()
}

/// The discrete path energy.
pub fn path_energy(images: &ImagePath, path: &DeformationPath, params: &MorphParams) -> Result<f64> {
    let mismatch = step_mismatch(images, path)?;
    Ok(mismatch
        .iter()
        .zip(path.iter())
        .map(|(m, v)| m + elastic_potential(v, params.mu, params.lambda))
        .sum())
}

/// Energy after one alternation sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    /// Pyramid level, 0 being the input resolution.
    pub level: usize,
    pub width: usize,
    pub height: usize,
    /// 0 for the state entering the level, then 1.. for each sweep.
    pub sweep: usize,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct MorphOutcome {
    pub images: ImagePath,
    pub path: DeformationPath,
    pub trace: Vec<SweepRecord>,
}

impl MorphOutcome {
    pub fn final_energy(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.energy)
    }
}

/// Moves the interior images towards `proposal` by the step length that
/// minimizes the (quadratic) path energy along the segment, limited to
/// `[0, 1]`. The trajectory solve is exact along trajectories but is regridded
/// by splatting, so it is not guaranteed to lower the gridded energy.
fn blend_towards(
    current: &ImagePath,
    proposal: ImagePath,
    path: &DeformationPath,
) -> Result<ImagePath> {
    let k_steps = path.len();
    let directions: Vec<ScalarField> = current
        .iter()
        .zip(proposal.iter())
        .map(|(a, b)| b.zip_map(a, |p, c| p - c))
        .collect::<Result<_>>()?;
    let (mut rd, mut dd) = (0.0, 0.0);
    for k in 1..=k_steps {
        let residual = current[k].zip_map(&warp(&current[k - 1], &path[k - 1])?, |a, b| a - b)?;
        let direction =
            directions[k].zip_map(&warp(&directions[k - 1], &path[k - 1])?, |a, b| a - b)?;
        rd += residual.dot(&direction);
        dd += direction.sum_squares();
    }
    if dd == 0.0 {
        return Ok(proposal);
    }
    let t = (-rd / dd).clamp(0.0, 1.0);
    if t == 1.0 {
        return Ok(proposal);
    }
    let mut images = current.clone().into_inner();
    for k in 1..k_steps {
        images[k] = images[k].zip_map(&directions[k], |c, d| c + t * d)?;
    }
    ImagePath::new(images)
}

/// Computes the discrete geodesic between `template` and `target`.
pub fn morph(template: &ScalarField, target: &ScalarField, params: &MorphParams) -> Result<MorphOutcome> {
    morph_with_observer(template, target, params, |_| {})
}

/// [`morph`], calling `observer` after every sweep.
pub fn morph_with_observer(
    template: &ScalarField,
    target: &ScalarField,
    params: &MorphParams,
    mut observer: impl FnMut(&SweepRecord),
) -> Result<MorphOutcome> {
    params.validate()?;
    same_dims(template, target)?;
    for (name, f) in [("template", template), ("target", target)] {
        if f.min() < 0.0 || f.max() > 1.0 {
            return Err(Error::InvalidInput(format!("{name} values must lie in [0, 1]")));
        }
    }

    let mut templates = vec![template.clone()];
    let mut targets = vec![target.clone()];
    while templates.len() < params.pyramid_levels {
        let last = templates.last().expect("nonempty");
        if last.width() < 4 || last.height() < 4 {
            break;
        }
        let t = restrict(last)?;
        let g = restrict(targets.last().expect("nonempty"))?;
        templates.push(t);
        targets.push(g);
    }
    let coarsest = templates.len() - 1;
    let k_steps = params.k_steps;

    let mut trace = Vec::new();
    let (cw, ch) = templates[coarsest].dims();
    let mut path = DeformationPath::identity(k_steps, cw, ch);
    let mut images = ImagePath::linear(&templates[coarsest], &targets[coarsest], k_steps)?;

    for level in (0..=coarsest).rev() {
        let (t, g) = (&templates[level], &targets[level]);
        let (w, h) = t.dims();
        if path.dims() != (w, h) {
            path = DeformationPath::new(
                path.iter()
                    .map(|v| prolong_displacement(v, w, h))
                    .collect::<Result<_>>()?,
            )?;
            images = image_sequence_step(&path, t, g)?;
        }

        let mut energy = path_energy(&images, &path, params)?;
        let record = SweepRecord {
            level,
            width: w,
            height: h,
            sweep: 0,
            energy,
        };
        observer(&record);
        trace.push(record);

        for sweep in 1..=params.outer_iterations {
            let registered: Vec<VectorField2> = (1..=k_steps)
                .into_par_iter()
                .map(|k| register(&images[k], &images[k - 1], &path[k - 1], params))
                .collect::<Result<_>>()?;
            path = DeformationPath::new(registered)?;

            let proposal = image_sequence_step(&path, t, g)?;
            images = blend_towards(&images, proposal, &path)?;

            let next = path_energy(&images, &path, params)?;
            if !next.is_finite() {
                return Err(Error::Divergence {
                    stage: "morph",
                    detail: format!("path energy {next} at level {level}, sweep {sweep}"),
                });
            }
            let record = SweepRecord {
                level,
                width: w,
                height: h,
                sweep,
                energy: next,
            };
            observer(&record);
            trace.push(record);
            let decrease = energy - next;
            energy = next;
            if decrease <= params.energy_tol * (energy + decrease) {
                break;
            }
        }
    }

    Ok(MorphOutcome {
        images,
        path,
        trace,
    })
}
