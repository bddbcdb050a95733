use morphcolor::grid::VectorField2;
use morphcolor::postprocess::{
    coupled_tv_objective, debias, prox_pb, prox_pb_pixel, prox_pi_pixel, tv_chrominance, tv_chrominance_with_observer,
    Chroma, DualField6, PostParams, ProxNorm,
};
use morphcolor::ScalarField;
use proptest::prelude::*;

fn dual() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-3.0f64..3.0)
}

proptest! {
    #[test]
    fn prox_output_is_feasible(p in dual(), sigma in 0.0f64..1.0, g1 in -2.0f64..2.0, g2 in -2.0f64..2.0) {
        for norm in [ProxNorm::Squared, ProxNorm::Euclidean] {
            let q = prox_pb_pixel(p, sigma, (g1, g2), norm);
            let n: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(n <= 1.0 + 1e-12);
            let again = prox_pb_pixel(q, 0.0, (0.0, 0.0), norm);
            if n <= 1.0 {
                prop_assert_eq!(again, q);
            } else {
                // rounding put q a few ulps outside the ball
                prop_assert!(again.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-15));
            }
        }
    }

    #[test]
    fn tangent_prox_is_orthogonal_to_anchor(anchor in dual(), tilde in dual()) {
        let out = prox_pi_pixel(anchor, tilde, 0.0, (0.0, 0.0));
        let n2: f64 = anchor.iter().map(|x| x * x).sum();
        if n2 >= 1.0 {
            let inner: f64 = out.iter().zip(&anchor).map(|(a, b)| a * b).sum();
            prop_assert!(inner.abs() <= 1e-10 * (1.0 + n2));
        } else {
            prop_assert_eq!(out, tilde);
        }
    }
}

fn noisy_chroma(w: usize, h: usize) -> Chroma {
    let noise = |r: usize, c: usize| (((r * 31 + c * 17) % 11) as f64 / 11.0 - 0.5) * 0.04;
    Chroma::new(
        ScalarField::from_fn(w, h, |r, c| if c < w / 2 { 0.12 } else { -0.06 } + noise(r, c)),
        ScalarField::from_fn(w, h, |r, c| if r < h / 2 { -0.1 } else { 0.08 } + noise(c, r)),
    )
    .unwrap()
}

#[test]
fn schedule_observed_per_iteration() {
    let b = noisy_chroma(16, 16);
    let y = ScalarField::from_fn(16, 16, |r, _| r as f64 / 15.0);
    let params = PostParams {
        max_iterations: 300,
        ..PostParams::default()
    };
    let mut states = Vec::new();
    tv_chrominance_with_observer(&b, &y, &params, |s| states.push(*s)).unwrap();
    assert_eq!(states[0].tau, 20.0);
    assert_eq!(states[0].sigma, 0.001);
    for pair in states.windows(2) {
        assert!(pair[1].tau < pair[0].tau);
        assert!(pair[1].sigma > pair[0].sigma);
        assert!((pair[1].tau * pair[1].sigma - 0.02).abs() < 1e-12);
        assert!(pair[0].theta < 1.0);
    }
}

#[test]
fn objective_decreases_with_luminance_edges() {
    let (w, h) = (24, 24);
    let b = noisy_chroma(w, h);
    let y = ScalarField::from_fn(w, h, |_, c| if c < w / 2 { 0.3 } else { 0.7 });
    let params = PostParams::default();
    let out = tv_chrominance(&b, &y, &params).unwrap();
    let before = coupled_tv_objective(&b, &b, &y, params.gamma, params.alpha).unwrap();
    let after = coupled_tv_objective(&out.chroma, &b, &y, params.gamma, params.alpha).unwrap();
    assert!(after < before, "{after} vs {before}");
}

#[test]
fn parallel_prox_matches_sequential_result() {
    let b = noisy_chroma(20, 12);
    let y = ScalarField::from_fn(20, 12, |r, c| ((r + c) % 5) as f64 / 4.0);
    let params = PostParams {
        max_iterations: 100,
        ..PostParams::default()
    };
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = serial.install(|| tv_chrominance(&b, &y, &params).unwrap());
    let c = tv_chrominance(&b, &y, &params).unwrap();
    assert_eq!(a.chroma, c.chroma);

    let p = DualField6::new(20, 12, (0..240).map(|k| [k as f64 / 100.0; 6]).collect()).unwrap();
    let g = VectorField2::constant(20, 12, (0.5, -0.5));
    let par = prox_pb(&p, 0.3, &g, ProxNorm::Squared).unwrap();
    let seq = serial.install(|| prox_pb(&p, 0.3, &g, ProxNorm::Squared).unwrap());
    assert_eq!(par, seq);
}

#[test]
fn debias_rho_formula() {
    // with a tilde limit proportional to delta the scale is recovered exactly
    let (w, h) = (12, 12);
    let y = ScalarField::constant(w, h, 0.5);
    let b = noisy_chroma(w, h);
    let params = PostParams::default();
    let hat = tv_chrominance(&b, &y, &params).unwrap().chroma;
    let out = debias(&b, &hat, &y, &params).unwrap();
    let delta = b.axpy(-1.0, &hat).unwrap();
    let rho = out.tilde.dot(&delta) / out.tilde.sum_squares();
    assert_eq!(out.rho, rho);
    let residual_deb = b.axpy(-1.0, &out.chroma).unwrap().sum_squares();
    assert!(residual_deb <= delta.sum_squares());
}
