//! Scalar and vector fields on a rectangular pixel grid.
//!
//! Storage is row-major. Continuous coordinates are 1-based: the pixel stored
//! at `(row, col)` sits at the point `(row + 1, col + 1)`, so a field of
//! height `n1` and width `n2` covers the box `[1, n1] x [1, n2]`. The first
//! coordinate always runs along rows, the second along columns.
//!
//! The finite-difference pair is forward differences with a homogeneous
//! Neumann boundary for [`gradient`] and the matching backward differences for
//! [`divergence`], so that `divergence = -gradient^T` holds exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Minimum number of rows and columns of any field.
pub const MIN_SIZE: usize = 2;

/// A real-valued image.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

/// A point in continuous 1-based grid coordinates (`x1` along rows, `x2`
/// along columns).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

/// Two scalar fields of equal size. Component 1 runs along rows, component 2
/// along columns.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2 {
    pub c1: ScalarField,
    pub c2: ScalarField,
}

impl ScalarField {
    /// Builds a field from row-major values, checking size and finiteness.
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {}x{} field, got {}",
                width * height,
                width,
                height,
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: index / width,
                col: index % width,
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a field from a function of 0-based `(row, col)`.
    ///
    /// Panics if the dimensions are below 2x2 or `f` yields a non-finite value.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let values = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(width, height, values).expect("from_fn produced an invalid field")
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0)
    }

    /// Internal constructor for values produced by finite arithmetic on valid
    /// fields.
    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Applies `f` to every value. The result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(
            self.width,
            self.height,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Combines two equally sized fields value by value.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_dims(self, other)?;
        Ok(Self::from_raw(
            self.width,
            self.height,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance (normalized by the pixel count).
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.len() as f64
    }

    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid point of the pixel at 0-based `(row, col)`.
    #[inline]
    pub fn point(row: usize, col: usize) -> Point2 {
        Point2::new(row as f64 + 1.0, col as f64 + 1.0)
    }
}

impl VectorField2 {
    pub fn new(c1: ScalarField, c2: ScalarField) -> Result<Self> {
        same_dims(&c1, &c2)?;
        Ok(Self { c1, c2 })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            c1: ScalarField::zeros(width, height),
            c2: ScalarField::zeros(width, height),
        }
    }

    pub fn constant(width: usize, height: usize, value: (f64, f64)) -> Self {
        Self {
            c1: ScalarField::constant(width, height, value.0),
            c2: ScalarField::constant(width, height, value.1),
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> (f64, f64)) -> Self {
        let pairs: Vec<(f64, f64)> = (0..width * height).map(|k| f(k / width, k % width)).collect();
        Self {
            c1: ScalarField::from_fn(width, height, |r, c| pairs[r * width + c].0),
            c2: ScalarField::from_fn(width, height, |r, c| pairs[r * width + c].1),
        }
    }

    pub fn width(&self) -> usize {
        self.c1.width
    }

    pub fn height(&self) -> usize {
        self.c1.height
    }

    pub fn dims(&self) -> (usize, usize) {
        self.c1.dims()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> (f64, f64) {
        (self.c1.get(row, col), self.c2.get(row, col))
    }

    /// Largest Euclidean norm over all pixels.
    pub fn max_norm(&self) -> f64 {
        self.c1
            .values
            .iter()
            .zip(&self.c2.values)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.c1.dot(&other.c1) + self.c2.dot(&other.c2)
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &Self) -> Self {
        let f = |a: &ScalarField, b: &ScalarField| {
            ScalarField::from_raw(
                a.width,
                a.height,
                a.values
                    .iter()
                    .zip(&b.values)
                    .map(|(x, y)| x + scale * y)
                    .collect(),
            )
        };
        Self {
            c1: f(&self.c1, &other.c1),
            c2: f(&self.c2, &other.c2),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c1.values.iter().chain(&self.c2.values).all(|v| v.is_finite())
    }
}

/// One point per target pixel, e.g. a composed deformation evaluated on the
/// grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateMap {
    width: usize,
    height: usize,
    points: Vec<Point2>,
}

impl CoordinateMap {
    /// The identity map of a `width x height` grid.
    pub fn identity(width: usize, height: usize) -> Self {
        let points = (0..height)
            .flat_map(|r| (0..width).map(move |c| ScalarField::point(r, c)))
            .collect();
        Self {
            width,
            height,
            points,
        }
    }

    pub fn new(width: usize, height: usize, points: Vec<Point2>) -> Result<Self> {
        check_dims(width, height)?;
        if points.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} points, got {}",
                width * height,
                points.len()
            )));
        }
        if let Some(k) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite {
                row: k / width,
                col: k % width,
            });
        }
        Ok(Self {
            width,
            height,
            points,
        })
    }

    pub(crate) fn from_raw(width: usize, height: usize, points: Vec<Point2>) -> Self {
        Self {
            width,
            height,
            points,
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

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn get(&self, row: usize, col: usize) -> Point2 {
        self.points[row * self.width + col]
    }

    /// `x - map(x)` per pixel, the displacement the map encodes.
    pub fn displacement(&self) -> VectorField2 {
        VectorField2::from_fn(self.width, self.height, |r, c| {
            let x = ScalarField::point(r, c);
            let p = self.get(r, c);
            (x.x1 - p.x1, x.x2 - p.x2)
        })
    }
}

pub(crate) fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < MIN_SIZE || height < MIN_SIZE {
        return Err(Error::InvalidInput(format!(
            "fields must be at least {MIN_SIZE}x{MIN_SIZE}, got {width}x{height}"
        )));
    }
    Ok(())
}

pub(crate) fn same_dims(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    Ok(())
}

/// Bilinear interpolation at a 1-based point. The point is first clamped to
/// the grid box.
#[inline]
pub fn bilinear_sample(f: &ScalarField, p: Point2) -> f64 {
    let (w, h) = (f.width, f.height);
    let y = p.x1.clamp(1.0, h as f64) - 1.0;
    let x = p.x2.clamp(1.0, w as f64) - 1.0;
    let i = (y.floor() as usize).min(h - 2);
    let j = (x.floor() as usize).min(w - 2);
    let fy = y - i as f64;
    let fx = x - j as f64;
    let row0 = &f.values[i * w + j..i * w + j + 2];
    let row1 = &f.values[(i + 1) * w + j..(i + 1) * w + j + 2];
    (1.0 - fy) * ((1.0 - fx) * row0[0] + fx * row0[1]) + fy * ((1.0 - fx) * row1[0] + fx * row1[1])
}

/// Clamps a point into the grid box of a `width x height` field.
#[inline]
pub fn clamp_point(p: Point2, width: usize, height: usize) -> Point2 {
    Point2::new(p.x1.clamp(1.0, height as f64), p.x2.clamp(1.0, width as f64))
}

/// Forward difference along rows (component 1), zero on the last row.
pub(crate) fn diff_rows(values: &[f64], width: usize, height: usize, out: &mut [f64]) {
    for r in 0..height {
        for c in 0..width {
            let k = r * width + c;
            out[k] = if r + 1 < height {
                values[k + width] - values[k]
            } else {
                0.0
            };
        }
    }
}

/// Forward difference along columns (component 2), zero on the last column.
pub(crate) fn diff_cols(values: &[f64], width: usize, height: usize, out: &mut [f64]) {
    for r in 0..height {
        let row = &values[r * width..(r + 1) * width];
        let out_row = &mut out[r * width..(r + 1) * width];
        for c in 0..width - 1 {
            out_row[c] = row[c + 1] - row[c];
        }
        out_row[width - 1] = 0.0;
    }
}

/// Adjoint of [`diff_rows`], accumulated into `out`.
pub(crate) fn diff_rows_adjoint_add(g: &[f64], width: usize, height: usize, out: &mut [f64]) {
    for r in 0..height {
        for c in 0..width {
            let k = r * width + c;
            let below = if r + 1 < height { g[k] } else { 0.0 };
            let above = if r > 0 { g[k - width] } else { 0.0 };
            out[k] += above - below;
        }
    }
}

/// Adjoint of [`diff_cols`], accumulated into `out`.
pub(crate) fn diff_cols_adjoint_add(g: &[f64], width: usize, height: usize, out: &mut [f64]) {
    for r in 0..height {
        for c in 0..width {
            let k = r * width + c;
            let right = if c + 1 < width { g[k] } else { 0.0 };
            let left = if c > 0 { g[k - 1] } else { 0.0 };
            out[k] += left - right;
        }
    }
}

/// Discrete gradient: forward differences, Neumann boundary.
pub fn gradient(f: &ScalarField) -> VectorField2 {
    let (w, h) = f.dims();
    let mut d1 = vec![0.0; w * h];
    let mut d2 = vec![0.0; w * h];
    diff_rows(&f.values, w, h, &mut d1);
    diff_cols(&f.values, w, h, &mut d2);
    VectorField2 {
        c1: ScalarField::from_raw(w, h, d1),
        c2: ScalarField::from_raw(w, h, d2),
    }
}

/// Discrete divergence, the negative adjoint of [`gradient`].
pub fn divergence(w: &VectorField2) -> ScalarField {
    let (width, height) = w.dims();
    let mut adj = vec![0.0; width * height];
    diff_rows_adjoint_add(&w.c1.values, width, height, &mut adj);
    diff_cols_adjoint_add(&w.c2.values, width, height, &mut adj);
    ScalarField::from_raw(width, height, adj.into_iter().map(|v| -v).collect())
}

/// `output(x) = f(x - v(x))`, sampled bilinearly with clamping.
pub fn warp(f: &ScalarField, v: &VectorField2) -> Result<ScalarField> {
    same_dims(f, &v.c1)?;
    let (w, h) = f.dims();
    let values = (0..w * h)
        .into_par_iter()
        .map(|k| {
            let (r, c) = (k / w, k % w);
            let x = ScalarField::point(r, c);
            let p = Point2::new(x.x1 - v.c1.values[k], x.x2 - v.c2.values[k]);
            bilinear_sample(f, p)
        })
        .collect();
    Ok(ScalarField::from_raw(w, h, values))
}

/// Per-pixel `det(Id - grad v)`, i.e. the Jacobian determinant of
/// `phi(x) = x - v(x)` on the forward-difference stencil.
pub fn jacobian_determinant(v: &VectorField2) -> ScalarField {
    let g1 = gradient(&v.c1);
    let g2 = gradient(&v.c2);
    let (w, h) = v.dims();
    let values = (0..w * h)
        .map(|k| {
            let a = 1.0 - g1.c1.values[k];
            let b = -g1.c2.values[k];
            let c = -g2.c1.values[k];
            let d = 1.0 - g2.c2.values[k];
            a * d - b * c
        })
        .collect();
    ScalarField::from_raw(w, h, values)
}

/// Halves both dimensions by 2x2 box averaging. An odd trailing row or column
/// is folded into the last output row or column.
pub fn restrict(f: &ScalarField) -> Result<ScalarField> {
    let (w, h) = f.dims();
    if w < 4 || h < 4 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
        });
    }
    let (nw, nh) = (w / 2, h / 2);
    let span = |i: usize, n_out: usize, n_in: usize| {
        let start = 2 * i;
        let end = if i + 1 == n_out { n_in } else { start + 2 };
        start..end
    };
    let values = (0..nh)
        .flat_map(|r| (0..nw).map(move |c| (r, c)))
        .map(|(r, c)| {
            let rows = span(r, nh, h);
            let cols = span(c, nw, w);
            let count = (rows.len() * cols.len()) as f64;
            let sum: f64 = rows
                .flat_map(|rr| cols.clone().map(move |cc| (rr, cc)))
                .map(|(rr, cc)| f.get(rr, cc))
                .sum();
            sum / count
        })
        .collect();
    Ok(ScalarField::from_raw(nw, nh, values))
}

/// Bilinear resampling of a field to new dimensions, aligning pixel centers
/// of the two grids.
pub fn resample(f: &ScalarField, new_width: usize, new_height: usize) -> Result<ScalarField> {
    check_dims(new_width, new_height)?;
    let (w, h) = f.dims();
    let sy = h as f64 / new_height as f64;
    let sx = w as f64 / new_width as f64;
    let values = (0..new_width * new_height)
        .into_par_iter()
        .map(|k| {
            let (r, c) = (k / new_width, k % new_width);
            // centers: fine 0-based r maps to coarse (r + 0.5) * s - 0.5
            let p = Point2::new((r as f64 + 0.5) * sy + 0.5, (c as f64 + 0.5) * sx + 0.5);
            bilinear_sample(f, p)
        })
        .collect();
    Ok(ScalarField::from_raw(new_width, new_height, values))
}

/// Resamples a displacement to `(new_width, new_height)` and rescales each
/// component so displacements stay in pixel units of the new grid.
pub fn prolong_displacement(
    v: &VectorField2,
    new_width: usize,
    new_height: usize,
) -> Result<VectorField2> {
    let (w, h) = v.dims();
    let row_ratio = new_height as f64 / h as f64;
    let col_ratio = new_width as f64 / w as f64;
    Ok(VectorField2 {
        c1: resample(&v.c1, new_width, new_height)?.map(|x| x * row_ratio),
        c2: resample(&v.c2, new_width, new_height)?.map(|x| x * col_ratio),
    })
}

/// Regrids scattered samples onto a `width x height` field by normalized
/// bilinear splatting. Pixels that receive no weight take the value of the
/// nearest covered pixel (breadth-first over the 4-neighborhood).
pub fn splat(samples: &[(Point2, f64)], width: usize, height: usize) -> Result<ScalarField> {
    check_dims(width, height)?;
    let mut num = vec![0.0; width * height];
    let mut den = vec![0.0; width * height];
    for &(p, value) in samples {
        let p = clamp_point(p, width, height);
        let y = p.x1 - 1.0;
        let x = p.x2 - 1.0;
        let i = (y.floor() as usize).min(height - 2);
        let j = (x.floor() as usize).min(width - 2);
        let fy = y - i as f64;
        let fx = x - j as f64;
        for (di, wy) in [(0, 1.0 - fy), (1, fy)] {
            for (dj, wx) in [(0, 1.0 - fx), (1, fx)] {
                let weight = wy * wx;
                if weight > 0.0 {
                    let k = (i + di) * width + j + dj;
                    num[k] += weight * value;
                    den[k] += weight;
                }
            }
        }
    }
    const COVERED: f64 = 1e-12;
    let mut values = vec![0.0; width * height];
    let mut filled = vec![false; width * height];
    let mut queue = std::collections::VecDeque::new();
    for k in 0..width * height {
        if den[k] > COVERED {
            values[k] = num[k] / den[k];
            filled[k] = true;
            queue.push_back(k);
        }
    }
    if queue.is_empty() {
        return Err(Error::InvalidInput("splat received no samples".into()));
    }
    while let Some(k) = queue.pop_front() {
        let (r, c) = (k / width, k % width);
        let neighbors = [
            (r > 0).then(|| k - width),
            (r + 1 < height).then(|| k + width),
            (c > 0).then(|| k - 1),
            (c + 1 < width).then(|| k + 1),
        ];
        for n in neighbors.into_iter().flatten() {
            if !filled[n] {
                filled[n] = true;
                values[n] = values[k];
                queue.push_back(n);
            }
        }
    }
    Ok(ScalarField::from_raw(width, height, values))
}
