//! The image half of the alternation: with the deformations fixed, every
//! target pixel's trajectory through the path gives a small tridiagonal
//! system for the intensities carried along it.
//!
//! For a target pixel `x` the trajectory is `X_K = x`,
//! `X_{k-1} = phi_k(X_k) = X_k - v_k(X_k)`. With
//! `a_k = 1 / det grad phi_{k+1}(X_{k+1})` the values `F_k = I_k(X_k)` solve
//!
//! ```text
//! -F_{k-1} + (1 + a_k) F_k - a_k F_{k+1} = 0,   k = 1..K-1
//! ```
//!
//! with `F_0 = I_0(X_0)` and `F_K = I_K(x)` known. The matrix is strictly
//! diagonally dominant in its columns whenever every `a_k > 0`, so the
//! elimination never meets a zero pivot.

use rayon::prelude::*;

use super::{DeformationPath, ImagePath};
use crate::error::{Error, Result};
use crate::grid::{
    bilinear_sample, clamp_point, jacobian_determinant, same_dims, splat, CoordinateMap, Point2,
    ScalarField,
};

/// Solves a tridiagonal system by forward elimination and back substitution.
///
/// `sub[i]` multiplies `x[i - 1]` (so `sub[0]` is ignored), `sup[i]`
/// multiplies `x[i + 1]` (so the last entry is ignored).
///
/// Returns `None` on a zero or non-finite pivot.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return None;
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        c[i] = sup[i] / pivot;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Solves the per-trajectory system for the interior values `F_1..F_{K-1}`
/// given the weights `a_1..a_{K-1}` and the endpoint values.
///
/// Panics if any weight is not strictly positive.
pub fn solve_trajectory_system(weights: &[f64], first: f64, last: f64) -> Vec<f64> {
    let m = weights.len();
    assert!(
        weights.iter().all(|&a| a > 0.0),
        "trajectory weights must be positive"
    );
    if m == 0 {
        return Vec::new();
    }
    let sub = vec![-1.0; m];
    let diag: Vec<f64> = weights.iter().map(|a| 1.0 + a).collect();
    let sup: Vec<f64> = weights.iter().map(|a| -a).collect();
    let mut rhs = vec![0.0; m];
    rhs[0] += first;
    rhs[m - 1] += weights[m - 1] * last;
    solve_tridiagonal(&sub, &diag, &sup, &rhs).expect("positive weights give nonzero pivots")
}

/// Trajectory of one target pixel: `positions[k] = X_k`.
fn trajectory_of(path: &DeformationPath, x: Point2, out: &mut Vec<Point2>) {
    let (w, h) = path.dims();
    let k_steps = path.len();
    out.clear();
    out.resize(k_steps + 1, x);
    let mut p = x;
    for k in (1..=k_steps).rev() {
        let v = &path[k - 1];
        let step = Point2::new(bilinear_sample(&v.c1, p), bilinear_sample(&v.c2, p));
        p = clamp_point(Point2::new(p.x1 - step.x1, p.x2 - step.x2), w, h);
        out[k - 1] = p;
    }
}

/// Backward-composed positions `X_0..X_K` of every target pixel.
pub fn trajectories(path: &DeformationPath) -> Vec<CoordinateMap> {
    let (w, h) = path.dims();
    let k_steps = path.len();
    let per_pixel: Vec<Vec<Point2>> = (0..w * h)
        .into_par_iter()
        .map_init(Vec::new, |buf, k| {
            trajectory_of(path, ScalarField::point(k / w, k % w), buf);
            buf.clone()
        })
        .collect();
    (0..=k_steps)
        .map(|k| CoordinateMap::from_raw(w, h, per_pixel.iter().map(|t| t[k]).collect()))
        .collect()
}

/// The composed map `phi_1 o ... o phi_K` on the target grid, i.e. `X_0`.
pub fn compose_map(path: &DeformationPath) -> CoordinateMap {
    let (w, h) = path.dims();
    let points = (0..w * h)
        .into_par_iter()
        .map_init(Vec::new, |buf, k| {
            trajectory_of(path, ScalarField::point(k / w, k % w), buf);
            buf[0]
        })
        .collect();
    CoordinateMap::from_raw(w, h, points)
}

/// Solves the image subproblem for fixed deformations. The endpoints of the
/// returned path are clones of `template` and `target`.
pub fn image_sequence_step(
    path: &DeformationPath,
    template: &ScalarField,
    target: &ScalarField,
) -> Result<ImagePath> {
    same_dims(template, target)?;
    same_dims(template, &path[0].c1)?;
    let k_steps = path.len();
    let (w, h) = template.dims();
    if k_steps == 1 {
        return ImagePath::new(vec![template.clone(), target.clone()]);
    }

    // det grad phi_k for k = 2..K; a_k samples the field of phi_{k+1}
    let determinants: Vec<ScalarField> = path[1..].iter().map(jacobian_determinant).collect();

    let solved: Vec<(Vec<Point2>, Vec<f64>)> = (0..w * h)
        .into_par_iter()
        .map(|k| {
            let (row, col) = (k / w, k % w);
            let mut positions = Vec::with_capacity(k_steps + 1);
            trajectory_of(path, ScalarField::point(row, col), &mut positions);
            let mut weights = Vec::with_capacity(k_steps - 1);
            for step in 1..k_steps {
                let det = bilinear_sample(&determinants[step - 1], positions[step + 1]);
                if det.is_nan() || det <= 0.0 {
                    return Err(Error::NonDiffeomorphic {
                        step: step + 1,
                        det,
                        row,
                        col,
                    });
                }
                weights.push(1.0 / det);
            }
            let first = bilinear_sample(template, positions[0]);
            let last = target.values()[k];
            let interior = solve_trajectory_system(&weights, first, last);
            Ok((positions, interior))
        })
        .collect::<Result<_>>()?;

    let mut images = Vec::with_capacity(k_steps + 1);
    images.push(template.clone());
    for step in 1..k_steps {
        let samples: Vec<(Point2, f64)> = solved
            .iter()
            .map(|(positions, values)| (positions[step], values[step - 1]))
            .collect();
        images.push(splat(&samples, w, h)?);
    }
    images.push(target.clone());
    ImagePath::new(images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VectorField2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Gaussian elimination with partial pivoting on the assembled matrix.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    fn dense_trajectory_oracle(weights: &[f64], first: f64, last: f64) -> Vec<f64> {
        let m = weights.len();
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for i in 0..m {
            a[i][i] = 1.0 + weights[i];
            if i > 0 {
                a[i][i - 1] = -1.0;
            }
            if i + 1 < m {
                a[i][i + 1] = -weights[i];
            }
        }
        b[0] += first;
        b[m - 1] += weights[m - 1] * last;
        dense_solve(a, b)
    }

    #[test]
    fn tridiagonal_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let weights: Vec<f64> = (0..7).map(|_| rng.gen_range(0.2..5.0)).collect();
            let (f0, fk) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let fast = solve_trajectory_system(&weights, f0, fk);
            let slow = dense_trajectory_oracle(&weights, f0, fk);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_steps_average_the_endpoints() {
        assert_eq!(solve_trajectory_system(&[1.0], 0.2, 0.8), vec![0.5]);
    }

    #[test]
    fn unit_weights_interpolate_linearly() {
        let k = 6;
        let f = solve_trajectory_system(&vec![1.0; k - 1], 1.0, 4.0);
        for (i, v) in f.iter().enumerate() {
            let t = (i + 1) as f64 / k as f64;
            assert!((v - (1.0 + 3.0 * t)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        assert!(solve_tridiagonal(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]).is_none());
    }

    fn path_of(fields: Vec<VectorField2>) -> DeformationPath {
        DeformationPath::new(fields).unwrap()
    }

    #[test]
    fn identity_trajectories() {
        let path = path_of(vec![VectorField2::zeros(5, 4); 3]);
        for map in trajectories(&path) {
            assert_eq!(map, CoordinateMap::identity(5, 4));
        }
    }

    #[test]
    fn single_translation_trajectory() {
        let t = (0.5, -1.0);
        let path = path_of(vec![
            VectorField2::zeros(8, 8),
            VectorField2::zeros(8, 8),
            VectorField2::constant(8, 8, t),
        ]);
        let x = trajectories(&path);
        for r in 0..8 {
            for c in 0..8 {
                let p = x[2].get(r, c);
                let want = clamp_point(
                    Point2::new((r + 1) as f64 - t.0, (c + 1) as f64 - t.1),
                    8,
                    8,
                );
                assert!((p.x1 - want.x1).abs() < 1e-14 && (p.x2 - want.x2).abs() < 1e-14);
                assert_eq!(x[3].get(r, c), ScalarField::point(r, c));
            }
        }
    }

    #[test]
    fn composition_order() {
        let (t1, t2) = ((0.25, 0.5), (1.0, -0.75));
        let path = path_of(vec![
            VectorField2::constant(10, 10, t1),
            VectorField2::constant(10, 10, t2),
        ]);
        let phi = compose_map(&path);
        for r in 3..7 {
            for c in 3..7 {
                let p = phi.get(r, c);
                assert!((p.x1 - ((r + 1) as f64 - t1.0 - t2.0)).abs() < 1e-14);
                assert!((p.x2 - ((c + 1) as f64 - t1.1 - t2.1)).abs() < 1e-14);
            }
        }
        let single = compose_map(&path_of(vec![VectorField2::constant(10, 10, t2)]));
        let p = single.get(5, 5);
        assert!((p.x1 - (6.0 - t2.0)).abs() < 1e-14 && (p.x2 - (6.0 - t2.1)).abs() < 1e-14);
    }

    #[test]
    fn identity_deformations_give_linear_interpolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (w, h) = (9, 7);
        let i0 = ScalarField::from_fn(w, h, |_, _| rng.gen());
        let ik = ScalarField::from_fn(w, h, |_, _| rng.gen());
        for k_steps in [2usize, 3, 5, 8] {
            let path = path_of(vec![VectorField2::zeros(w, h); k_steps]);
            let images = image_sequence_step(&path, &i0, &ik).unwrap();
            assert_eq!(images.len(), k_steps + 1);
            assert_eq!(images[0], i0);
            assert_eq!(images[k_steps], ik);
            for k in 0..=k_steps {
                let t = k as f64 / k_steps as f64;
                for p in 0..w * h {
                    let want = i0.values()[p] + t * (ik.values()[p] - i0.values()[p]);
                    assert!((images[k].values()[p] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn folding_deformation_is_rejected() {
        let (w, h) = (6, 6);
        let fold = VectorField2::from_fn(w, h, |r, _| (2.0 * (r + 1) as f64, 0.0));
        let path = path_of(vec![VectorField2::zeros(w, h), fold]);
        let f = ScalarField::zeros(w, h);
        assert!(matches!(
            image_sequence_step(&path, &f, &f),
            Err(Error::NonDiffeomorphic { step: 2, .. })
        ));
    }

    #[test]
    fn step_ignores_current_images() {
        // the subproblem only depends on the deformations and the endpoints
        let (w, h) = (8, 8);
        let i0 = ScalarField::from_fn(w, h, |r, c| ((r * c) as f64 / 49.0).sin().abs());
        let ik = ScalarField::from_fn(w, h, |r, c| ((r + c) as f64 / 14.0).powi(2));
        let path = path_of(vec![
            VectorField2::constant(w, h, (0.3, 0.1)),
            VectorField2::from_fn(w, h, |r, _| (0.05 * r as f64, 0.0)),
            VectorField2::zeros(w, h),
        ]);
        let first = image_sequence_step(&path, &i0, &ik).unwrap();
        let second = image_sequence_step(&path, &first[0], &first[3]).unwrap();
        assert_eq!(first, second);
    }
}
