//! Cross-checks of the covariant calculus: dual Hessian realizations, the
//! Sasaki-metric identity, canonical-flip symmetry, the finite-difference
//! convergence order, the Kato-type inequality, the renormalization round
//! trip, and second-order chain-rule consistency through morphism composition.

use cosob_core::gallery::{make_example, ExampleFamily};
use cosob_core::jet::{
    covariant_hessian, covariant_hessian_ambient, covariant_norm, higher_covariant, hm_renormalize,
    sasaki_norm_sq, sasaki_norm_sq_split, scalar_field_gradient_norm, second_tangent, tangent_map,
    tangent_norm, tensor_norm,
};
use cosob_core::manifold::{Manifold, MetricTensor};
use cosob_core::map::SmoothMap;
use cosob_core::multinorm::{compose_double, double_norm_morphism};
use cosob_core::samples::{random_flat_map, random_sphere_map, without_jet, PolyMap};
use cosob_core::tensor::Tensor;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn sphere_map_samples(seed: u64, count: usize) -> Vec<(SmoothMap, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s2: Arc<Manifold> = Arc::new(Manifold::sphere(2, 1.0).unwrap());
    (0..count)
        .map(|_| {
            let u = random_sphere_map(&mut rng, s2.clone(), s2.clone());
            let p = s2.random_point(&mut rng);
            (u, p)
        })
        .collect()
}

fn flat_map_samples(seed: u64, count: usize) -> Vec<(SmoothMap, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.random_range(1..=3);
            let n = rng.random_range(1..=3);
            let u = random_flat_map(&mut rng, m, n);
            let p: Vec<f64> = (0..m).map(|_| rng.random_range(-0.8..0.8)).collect();
            (u, p)
        })
        .collect()
}

#[test]
fn dual_hessian_realizations_agree() {
    // analytic jets
    for (u, p) in sphere_map_samples(1, 50).into_iter().chain(flat_map_samples(2, 50)) {
        let chart = covariant_hessian(&u, &p).unwrap();
        let ambient = covariant_hessian_ambient(&u, &p).unwrap();
        let diff = chart.components.sub(&ambient.components).max_abs();
        assert!(diff < 1e-9, "analytic dual realization diff {diff}");
    }
    // pure finite differences
    for (u, p) in sphere_map_samples(3, 25).into_iter().chain(flat_map_samples(4, 25)) {
        let u = without_jet(&u);
        let chart = covariant_hessian(&u, &p).unwrap();
        let ambient = covariant_hessian_ambient(&u, &p).unwrap();
        let diff = chart.components.sub(&ambient.components).max_abs();
        assert!(diff < 1e-6, "fd dual realization diff {diff}");
    }
}

#[test]
fn covariant_hessian_is_symmetric() {
    for (u, p) in sphere_map_samples(5, 40).into_iter().chain(flat_map_samples(6, 40)) {
        let h = covariant_hessian(&u, &p).unwrap();
        assert!(
            h.max_pair_asymmetry() < 1e-9,
            "hessian asymmetry {}",
            h.max_pair_asymmetry()
        );
    }
}

#[test]
fn sasaki_split_equals_direct_route() {
    for (u, p) in sphere_map_samples(7, 60).into_iter().chain(flat_map_samples(8, 60)) {
        let direct = sasaki_norm_sq(&u, &p).unwrap();
        let split = sasaki_norm_sq_split(&u, &p, 1.0).unwrap();
        let scale = 1.0 + direct.abs();
        assert!(
            (direct - split).abs() / scale < 1e-9,
            "sasaki mismatch: direct {direct}, split {split}"
        );
    }
}

#[test]
fn sasaki_split_detects_flipped_christoffel() {
    // with the sign of the connection flipped inside the horizontal lift, the
    // identity must fail for curved-target maps
    let samples = sphere_map_samples(9, 10);
    let mut worst = 0.0_f64;
    for (u, p) in &samples {
        let direct = sasaki_norm_sq(u, p).unwrap();
        let flipped = sasaki_norm_sq_split(u, p, -1.0).unwrap();
        worst = worst.max((direct - flipped).abs() / (1.0 + direct.abs()));
    }
    assert!(worst > 1e-4, "flip not detected, worst deviation {worst}");
}

#[test]
fn geodesic_wind_sasaki_is_ell_squared() {
    let u = make_example(&ExampleFamily::GeodesicWind { ell: 3 }).unwrap();
    for theta in [0.3_f64, 1.5, -2.0] {
        let q = [theta.cos(), theta.sin()];
        let s = sasaki_norm_sq(&u, &q).unwrap();
        assert!((s - 9.0).abs() < 1e-9, "wind sasaki {s}");
    }
}

#[test]
fn fd_convergence_is_second_order() {
    let e1 = Arc::new(Manifold::euclidean(1).unwrap());
    let u = SmoothMap::new(e1.clone(), e1, |x: &[f64]| vec![(2.0 * x[0]).sin()]);
    let exact1 = 2.0 * (2.0_f64 * 0.4).cos();
    let exact2 = -4.0 * (2.0_f64 * 0.4).sin();
    let eval = |scale: f64, order: usize| -> f64 {
        let v = u.clone().with_fd_scale(scale);
        let t = v.ambient_partials(0, &[0.4], order).unwrap();
        match order {
            1 => t.get(&[0, 0]),
            _ => t.get(&[0, 0, 0]),
        }
    };
    // first derivatives: error ratio ~ 4 when halving the step
    let h0 = 2000.0; // large scale so truncation dominates rounding
    let e1a = (eval(h0, 1) - exact1).abs();
    let e1b = (eval(h0 / 2.0, 1) - exact1).abs();
    let r1 = e1a / e1b;
    assert!((3.0..5.0).contains(&r1), "first-derivative ratio {r1}");
    let h2 = 100.0;
    let e2a = (eval(h2, 2) - exact2).abs();
    let e2b = (eval(h2 / 2.0, 2) - exact2).abs();
    let r2 = e2a / e2b;
    assert!((3.0..5.0).contains(&r2), "second-derivative ratio {r2}");
}

#[test]
fn kato_inequality_on_gallery_maps() {
    let fams = [
        ExampleFamily::Spiral { alpha: 1.5, m: 3 },
        ExampleFamily::RadialPower { alpha: 2.0, m: 3 },
        ExampleFamily::Hedgehog { m: 3 },
        ExampleFamily::GeodesicRadial { alpha: 2.0, m: 3 },
        ExampleFamily::MollifiedSpiral { alpha: 1.0, m: 3, ell: 3 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for fam in fams {
        let u = make_example(&fam).unwrap();
        for _ in 0..50 {
            let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0_f64)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-3 {
                continue;
            }
            let r = rng.random_range(0.3..0.9);
            let x: Vec<f64> = dir.iter().map(|v| v * r / norm).collect();
            let grad = scalar_field_gradient_norm(&u, &x, |p| tangent_norm(&u, p)).unwrap();
            let bound = covariant_norm(&u, &x, 2).unwrap();
            assert!(
                grad <= bound + 1e-4,
                "kato violated for {}: {grad} > {bound}",
                fam.id()
            );
        }
    }
}

#[test]
fn kato_inequality_order_three() {
    let u = make_example(&ExampleFamily::GeodesicRadial { alpha: 2.0, m: 3 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0_f64)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        let r = rng.random_range(0.4..0.9);
        let x: Vec<f64> = dir.iter().map(|v| v * r / norm).collect();
        let grad = scalar_field_gradient_norm(&u, &x, |p| covariant_norm(&u, p, 2)).unwrap();
        let bound = covariant_norm(&u, &x, 3).unwrap();
        assert!(grad <= bound + 1e-3, "order-3 kato violated: {grad} > {bound}");
    }
}

#[test]
fn higher_covariant_of_polynomial_is_third_partials() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let poly = PolyMap::random(&mut rng, 2, 2, 3, 0.5);
    let expect = poly.partials(&[0.3, -0.2], 3).unwrap();
    let u = poly.into_map();
    let d3 = higher_covariant(&u, &[0.3, -0.2], 3).unwrap();
    let diff = d3.components.sub(&expect).max_abs();
    assert!(diff < 1e-7, "third covariant vs third partials: {diff}");
    // fully symmetric on flat spaces
    assert!(d3.max_pair_asymmetry() < 1e-7);
}

#[test]
fn higher_covariant_of_wind_vanishes() {
    let u = make_example(&ExampleFamily::GeodesicWind { ell: 2 }).unwrap();
    for theta in [0.4_f64, 2.0] {
        let q = [theta.cos(), theta.sin()];
        let d3 = higher_covariant(&u, &q, 3).unwrap();
        assert!(d3.components.max_abs() < 1e-8, "wind D^3 {}", d3.components.max_abs());
    }
}

#[test]
fn fourth_covariant_of_cubic_polynomial_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let u = PolyMap::random(&mut rng, 2, 2, 3, 0.5).into_map();
    let d4 = higher_covariant(&u, &[0.2, -0.1], 4).unwrap();
    assert!(
        d4.components.max_abs() < 1e-4,
        "D^4 of a cubic: {}",
        d4.components.max_abs()
    );
}

#[test]
fn fourth_covariant_of_sine_matches_closed_form() {
    use cosob_core::map::ClosureJet;
    use cosob_core::tensor::Tensor as T;
    // u(x) = sin(2x): D^4 u = 16 sin(2x); analytic jets supplied to order 2,
    // orders 3 and 4 through the recursion
    let e1 = Arc::new(Manifold::euclidean(1).unwrap());
    let u = SmoothMap::new(e1.clone(), e1, |x: &[f64]| vec![(2.0 * x[0]).sin()]).with_jet(
        Arc::new(ClosureJet(|_c, x: &[f64], order: usize| {
            let t = 2.0 * x[0];
            match order {
                1 => Some(T::from_data(&[1, 1], vec![2.0 * t.cos()])),
                2 => Some(T::from_data(&[1, 1, 1], vec![-4.0 * t.sin()])),
                _ => None,
            }
        })),
    );
    let x = 0.4;
    let d4 = higher_covariant(&u, &[x], 4).unwrap();
    let want = 16.0 * (2.0 * x).sin();
    let got = d4.components.get(&[0, 0, 0, 0, 0]);
    assert!(
        (got - want).abs() < 1e-2,
        "D^4 sin: {got} vs {want}"
    );
}

#[test]
fn higher_covariant_of_constant_vanishes() {
    let e2 = Arc::new(Manifold::euclidean(2).unwrap());
    let s2 = Arc::new(Manifold::sphere(2, 1.0).unwrap());
    let c = SmoothMap::constant(e2, s2, vec![0.0, 0.0, 1.0]);
    for k in 2..=4 {
        let d = higher_covariant(&c, &[0.3, 0.1], k).unwrap();
        assert!(d.components.max_abs() < 1e-9, "constant D^{k} nonzero");
    }
}

#[test]
fn higher_covariant_recursion_matches_hessian_at_order_two() {
    for (u, p) in sphere_map_samples(13, 10) {
        let a = covariant_hessian(&u, &p).unwrap();
        let b = higher_covariant(&u, &p, 2).unwrap();
        assert!(a.components.sub(&b.components).max_abs() < 1e-9);
    }
}

#[test]
fn tensor_norm_is_frame_independent() {
    // random SPD metric, random tensor: contract against two different
    // g-orthonormal frames (the second = frame * random orthogonal matrix)
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let m = 3;
        let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0_f64));
        let g = MetricTensor::new(&a * a.transpose() + DMatrix::identity(m, m));
        let t = Tensor::from_fn(&[m, m, 2], |_| rng.random_range(-1.0..1.0_f64));
        let g2 = MetricTensor::identity(2);
        let n1 = tensor_norm(&t, 2, &g, &g2).unwrap();

        // rotate the frame: E' = E Q is also g-orthonormal
        let q = {
            let b = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0_f64));
            let qr = b.qr();
            qr.q()
        };
        let frame = g.orthonormal_frame().unwrap() * q;
        let mut rotated = t.clone();
        for axis in 0..2 {
            rotated = rotated.contract_axis(axis, &frame);
        }
        let n2 = rotated.frobenius();
        assert!((n1 - n2).abs() < 1e-10, "frame dependence: {n1} vs {n2}");
    }
}

#[test]
fn hm_round_trip_matches_hessian() {
    // analytic route
    for (u, p) in sphere_map_samples(15, 30).into_iter().chain(flat_map_samples(16, 30)) {
        let hess = covariant_hessian(&u, &p).unwrap();
        let jet = hm_renormalize(&u, &p).unwrap();
        assert!(jet.renormalized_norm < 1.0);
        let diff = jet.reconstructed.components.sub(&hess.components).max_abs();
        assert!(diff < 1e-10, "analytic hm round trip diff {diff}");
    }
    // finite-difference route
    for (u, p) in sphere_map_samples(17, 10).into_iter().chain(flat_map_samples(18, 10)) {
        let u = without_jet(&u);
        let hess = covariant_hessian(&u, &p).unwrap();
        let jet = hm_renormalize(&u, &p).unwrap();
        let diff = jet.reconstructed.components.sub(&hess.components).max_abs();
        assert!(diff < 1e-7, "fd hm round trip diff {diff}");
    }
}

#[test]
fn hm_round_trip_on_spiral_samples() {
    let u = make_example(&ExampleFamily::Spiral { alpha: 1.5, m: 3 }).unwrap();
    for r in [0.4, 0.6, 0.8] {
        let x = [r, 0.1, -0.2];
        let hess = covariant_hessian(&u, &x).unwrap();
        let jet = hm_renormalize(&u, &x).unwrap();
        let diff = jet.reconstructed.components.sub(&hess.components).max_abs();
        let scale = 1.0 + hess.components.max_abs();
        assert!(diff / scale < 1e-10, "spiral round trip diff {diff}");
    }
}

#[test]
fn second_tangent_chain_rule_through_composition() {
    // cubic then affine (and affine then cubic): the composite stays cubic, so
    // plain central differences on the composite carry no truncation error.
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..10 {
        let inner_cubic = PolyMap::random(&mut rng, 2, 2, 3, 0.4);
        let outer_affine = PolyMap::random(&mut rng, 2, 2, 1, 0.8);
        let inner_affine = PolyMap::random(&mut rng, 2, 2, 1, 0.8);
        let outer_cubic = PolyMap::random(&mut rng, 2, 2, 3, 0.4);
        for (inner, outer) in [(inner_cubic.clone(), outer_affine.clone()), (inner_affine, outer_cubic)] {
            let x = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
            let y = inner.eval(&x);

            let iu = inner.clone().into_map();
            let ou = outer.clone().into_map();
            let d_inner = second_tangent(&iu, &x).unwrap();
            let d_outer = second_tangent(&ou, &y).unwrap();
            let composed = compose_double(&d_outer, &d_inner).unwrap();

            // finite-difference oracle on the composite map; Richardson
            // stencils are exact on cubics up to rounding
            let e2 = Arc::new(Manifold::euclidean(2).unwrap());
            let (i2, o2) = (inner.clone(), outer.clone());
            let comp = SmoothMap::new(e2.clone(), e2, move |p: &[f64]| o2.eval(&i2.eval(p)))
                .with_richardson(true)
                .with_fd_scale(4.0);
            let direct = second_tangent(&comp, &x).unwrap();

            let d1 = (&composed.f1 - &direct.f1).abs().max();
            let dh = composed.f12hat.sub(&direct.f12hat).max_abs();
            assert!(d1 < 1e-9, "chain rule f1 diff {d1}");
            assert!(dh < 1e-9, "chain rule f12hat diff {dh}");
        }
    }
}

#[test]
fn spiral_second_tangent_dominates_du_squared() {
    let u = make_example(&ExampleFamily::Spiral { alpha: 1.5, m: 3 }).unwrap();
    for r in [0.3, 0.5, 0.7] {
        let x = [r, 0.0, 0.0];
        let d = second_tangent(&u, &x).unwrap();
        let tu = tangent_norm(&u, &x).unwrap();
        assert!(
            double_norm_morphism(&d) >= tu * tu,
            "double norm below |Du|^2 at r={r}"
        );
    }
}

#[test]
fn tangency_residual_small_for_curved_targets() {
    for (u, p) in sphere_map_samples(20, 20) {
        let res = cosob_core::jet::tangency_residual(&u, &p).unwrap();
        assert!(res < 1e-8, "tangency residual {res}");
    }
    let w = make_example(&ExampleFamily::GeodesicWind { ell: 3 }).unwrap();
    let res = cosob_core::jet::tangency_residual(&w, &[1.0, 0.0]).unwrap();
    assert!(res < 1e-10);
}

#[test]
fn spiral_pointwise_hessian_lower_bound() {
    // |D^2 u| >= alpha |x|^{-2 alpha - 2} for the flat-target spiral
    let u = make_example(&ExampleFamily::Spiral { alpha: 1.5, m: 3 }).unwrap();
    for r in [0.35, 0.5, 0.75] {
        let x = [0.0, r, 0.0];
        let h = covariant_norm(&u, &x, 2).unwrap();
        let bound = 1.5 * r.powf(-5.0);
        assert!(h >= bound - 1e-9 * bound, "hessian {h} below bound {bound}");
    }
}

#[test]
fn mollified_spiral_covariant_hessian_matches_scalar_profile() {
    // |D_K(Tu_l)| = |D^2 v_l| for the circle-valued mollification
    let ell = 4usize;
    let alpha = 1.0;
    let u = make_example(&ExampleFamily::MollifiedSpiral { alpha, m: 3, ell }).unwrap();
    let c = 1.0 / (1.0 + ell as f64);
    for r in [0.3, 0.6] {
        let x = [r, 0.0, 0.0];
        let got = covariant_norm(&u, &x, 2).unwrap();
        // |D^2 v|^2 = phi''^2 + (m-1) (phi'/r)^2 for radial v = phi(r+c)
        let phi1 = -alpha * (r + c).powf(-alpha - 1.0);
        let phi2 = alpha * (alpha + 1.0) * (r + c).powf(-alpha - 2.0);
        let want = (phi2 * phi2 + 2.0 * (phi1 / r) * (phi1 / r)).sqrt();
        assert!(
            (got - want).abs() < 1e-8 * (1.0 + want),
            "mollified hessian {got} vs {want}"
        );
    }
}

#[test]
fn affine_map_has_zero_bilinear_part() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let u = cosob_core::samples::PolyMap::random(&mut rng, 3, 2, 1, 0.8).into_map();
    let d = second_tangent(&u, &[0.1, 0.2, -0.3]).unwrap();
    assert!(d.f12hat.max_abs() < 1e-12, "affine f12hat {}", d.f12hat.max_abs());
}

#[test]
fn circle_domain_scalar_square_hessian() {
    // u(theta) = theta^2 into R on the angle chart: D^2_K u = 2 (flat chart,
    // zero Christoffel symbols on the circle)
    let c1 = Arc::new(Manifold::circle(1.0).unwrap());
    let e1 = Arc::new(Manifold::euclidean(1).unwrap());
    let u = SmoothMap::new(c1, e1, |q: &[f64]| {
        let theta = q[1].atan2(q[0]);
        vec![theta * theta]
    });
    let p = [0.3_f64.cos(), 0.3_f64.sin()];
    let h = covariant_hessian(&u, &p).unwrap();
    assert!((h.components.get(&[0, 0, 0]) - 2.0).abs() < 1e-5);
}

#[test]
fn sphere_rotation_is_totally_geodesic() {
    // an isometry of the sphere has parallel differential: D^2_K u = 0.
    // This exercises both connection corrections (domain and target) at once;
    // a sign error in either Christoffel term breaks it.
    use cosob_core::map::ClosureJet;
    let s2: Arc<Manifold> = Arc::new(Manifold::sphere(2, 1.0).unwrap());
    let angle = 0.8_f64;
    let (c, s) = (angle.cos(), angle.sin());
    // rotation about the y-axis mixes the poles and the equator
    let rot = move |q: &[f64]| -> Vec<f64> {
        vec![c * q[0] + s * q[2], q[1], -s * q[0] + c * q[2]]
    };
    let dom = s2.clone();
    let jet_dom = s2.clone();
    let u = SmoothMap::new(s2.clone(), s2.clone(), move |q: &[f64]| rot(q)).with_jet(Arc::new(
        ClosureJet(move |chart, x: &[f64], order: usize| {
            // chain the rotation matrix through the chart embedding jets
            let apply = |v: &[f64]| -> Vec<f64> {
                vec![c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]]
            };
            match order {
                1 => {
                    let e1 = jet_dom.embed_d1(chart, x);
                    Some(Tensor::from_fn(&[2, 3], |idx| {
                        let row: Vec<f64> = (0..3).map(|a| e1.get(&[idx[0], a])).collect();
                        apply(&row)[idx[1]]
                    }))
                }
                2 => {
                    let e2 = jet_dom.embed_d2(chart, x);
                    Some(Tensor::from_fn(&[2, 2, 3], |idx| {
                        let row: Vec<f64> =
                            (0..3).map(|a| e2.get(&[idx[0], idx[1], a])).collect();
                        apply(&row)[idx[2]]
                    }))
                }
                _ => None,
            }
        }),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..25 {
        let p = dom.random_point(&mut rng);
        let h = covariant_norm(&u, &p, 2).unwrap();
        assert!(h < 1e-10, "rotation covariant hessian {h} at {p:?}");
        let t = tangent_norm(&u, &p).unwrap();
        assert!((t - 2.0_f64.sqrt()).abs() < 1e-10, "rotation |Tu| {t}");
    }
}

#[test]
fn fd_step_underflow_surfaces_as_numerical_error() {
    let e1 = Arc::new(Manifold::euclidean(1).unwrap());
    let u = SmoothMap::new(e1.clone(), e1, |x: &[f64]| vec![x[0] * x[0]]).with_fd_scale(1e-13);
    assert!(second_tangent(&u, &[1.0]).is_err());
}

#[test]
fn tensor_norm_rejects_non_spd_metric() {
    let t = Tensor::zeros(&[2, 1]);
    let bad = MetricTensor::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
    let g1 = MetricTensor::identity(1);
    assert!(tensor_norm(&t, 1, &bad, &g1).is_err());
}

#[test]
fn tangent_map_of_spiral_exact_at_sample() {
    let u = make_example(&ExampleFamily::Spiral { alpha: 1.5, m: 3 }).unwrap();
    let x = [0.5, 0.0, 0.0];
    let t = tangent_map(&u, &x).unwrap();
    let g = MetricTensor::identity(3);
    let g2 = MetricTensor::identity(2);
    let n = tensor_norm(&t.components, 1, &g, &g2).unwrap();
    assert!((n - 8.485281374238571).abs() < 1e-12);
}
