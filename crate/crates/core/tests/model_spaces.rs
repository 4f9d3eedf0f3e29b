//! Property tests for the model spaces, barycenter solvers and hugging
//! diagnostics, driven by seeds drawn by proptest.

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;

use barylab::barycenter::{barycenter, tangent_mean, DiscreteDistribution, SolverOptions};
use barylab::comparison::{comparison_angle, Kappa, TriangleSides};
use barylab::hugging::hugging_value;
use barylab::rng;
use barylab::space::{
    distance, exp_map, geodesic, log_map, max_extendibility, normal_quantiles, Family, GaussianMapsParams, SpaceKind,
    SpacePoint,
};

fn families() -> Vec<Family> {
    vec![
        Family::EuclideanGaussian { dim: 3, scale: 2.0, center: None },
        Family::SphereCap { dim: 2, radius: 0.7, center: None },
        Family::HyperbolicGaussian { dim: 3, scale: 1.2, center: None },
        Family::QuantileGaussian { grid: 32, mean_scale: 1.0, min_std: 0.2, max_std: 2.0 },
        Family::GaussianMaps(GaussianMapsParams {
            dim: 3,
            alpha: 0.5,
            beta: 2.0,
            mean_scale: 1.0,
            anchor_mean: Some(vec![1.0, -1.0, 0.5]),
            anchor_cov: Some(vec![vec![2.0, 0.3, 0.0], vec![0.3, 1.0, 0.2], vec![0.0, 0.2, 0.5]]),
        }),
    ]
}

fn draw(fam: &Family, seed: u64, k: usize) -> Vec<SpacePoint> {
    fam.sample_n(k, &mut rng::from_seed(seed)).unwrap()
}

/// Uniform point on the unit sphere in `R^3`.
fn uniform_sphere<R: Rng>(rng: &mut R) -> SpacePoint {
    loop {
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            return SpacePoint::sphere_normalized(v).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn metric_axioms(seed in any::<u64>()) {
        for fam in families() {
            let p = draw(&fam, seed, 3);
            let (dxy, dyz, dxz) = (distance(&p[0], &p[1]).unwrap(), distance(&p[1], &p[2]).unwrap(), distance(&p[0], &p[2]).unwrap());
            prop_assert!(dxy >= 0.0);
            prop_assert!(distance(&p[0], &p[0]).unwrap() <= 1e-9);
            prop_assert!((dxy - distance(&p[1], &p[0]).unwrap()).abs() <= 1e-9);
            prop_assert!(dxz <= dxy + dyz + 1e-9, "{}: {dxz} > {dxy} + {dyz}", fam.kind());
        }
    }

    #[test]
    fn sphere_exp_log_round_trip(seed in any::<u64>()) {
        let mut rng = rng::from_seed(seed);
        let (p, x) = (uniform_sphere(&mut rng), uniform_sphere(&mut rng));
        prop_assume!(distance(&p, &x).unwrap() < PI - 0.1);
        let back = exp_map(&p, &log_map(&p, &x).unwrap()).unwrap();
        prop_assert!(distance(&back, &x).unwrap() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn geodesics_have_constant_speed(seed in any::<u64>()) {
        for fam in families() {
            let p = draw(&fam, seed, 2);
            let seg = geodesic(&p[0], &p[1]).unwrap();
            let d = seg.length();
            let pts: Vec<SpacePoint> = (0..10).map(|i| seg.at(i as f64 / 9.0)).collect();
            prop_assert!(distance(&pts[0], &p[0]).unwrap() <= 1e-9);
            prop_assert!(distance(&pts[9], &p[1]).unwrap() <= 1e-9);
            for i in 0..10 {
                for j in i + 1..10 {
                    let expect = (j - i) as f64 / 9.0 * d;
                    prop_assert!((distance(&pts[i], &pts[j]).unwrap() - expect).abs() <= 1e-9, "{}", fam.kind());
                }
                if let SpacePoint::Quantile(q) = &pts[i] {
                    prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
                }
            }
        }
    }

    #[test]
    fn log_magnitude_is_distance_and_exp_inverts_log(seed in any::<u64>()) {
        for fam in families() {
            let p = draw(&fam, seed, 2);
            let v = log_map(&p[0], &p[1]).unwrap();
            let d = distance(&p[0], &p[1]).unwrap();
            prop_assert!((v.magnitude() - d).abs() <= 1e-9 * d.max(1.0));
            let back = exp_map(&p[0], &v).unwrap();
            prop_assert!(distance(&back, &p[1]).unwrap() <= 1e-9 * d.max(1.0), "{}", fam.kind());
        }
    }

    #[test]
    fn extended_geodesics_stay_minimizing(seed in any::<u64>()) {
        for fam in families().into_iter().filter(|f| matches!(f.kind(), SpaceKind::Sphere | SpaceKind::Quantile)) {
            let p = draw(&fam, seed, 2);
            let ext = max_extendibility(&p[0], &p[1]).unwrap();
            let seg = geodesic(&p[0], &p[1]).unwrap();
            let d = seg.length();
            let t_lo = -ext.lambda_in.min(50.0) * 0.999;
            let t_hi = 1.0 + ext.lambda_out.min(50.0) * 0.999;
            let (a, b) = (seg.extended(t_lo).unwrap(), seg.extended(t_hi).unwrap());
            prop_assert!((distance(&a, &b).unwrap() - (t_hi - t_lo) * d).abs() <= 1e-8 * (1.0 + (t_hi - t_lo) * d));
        }
    }

    #[test]
    fn tangent_mean_is_linear(seed in any::<u64>()) {
        for fam in families() {
            let pts = draw(&fam, seed, 6);
            let w = [0.1, 0.2, 0.3, 0.15, 0.25];
            let p = DiscreteDistribution::new(pts[..5].to_vec(), w.to_vec()).unwrap();
            let b = fam.anchor().unwrap();
            let lc = log_map(&b, &pts[5]).unwrap();
            let lhs: f64 = p.iter().map(|(wi, x)| wi * log_map(&b, x).unwrap().inner(&lc).unwrap()).sum();
            let rhs = tangent_mean(&p, &b).unwrap().inner(&lc).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }
    }

    #[test]
    fn double_sum_matches_squared_tangent_mean(seed in any::<u64>()) {
        for fam in families().into_iter().filter(|f| matches!(f.kind(), SpaceKind::Euclidean | SpaceKind::Sphere | SpaceKind::Hyperbolic)) {
            let pts = draw(&fam, seed, 6);
            let p = DiscreteDistribution::uniform(pts[..5].to_vec()).unwrap();
            let b = &pts[5];
            let logs: Vec<_> = p.points().iter().map(|x| log_map(b, x).unwrap()).collect();
            let mut double = 0.0;
            for (i, u) in logs.iter().enumerate() {
                for (j, v) in logs.iter().enumerate() {
                    double += p.weights()[i] * p.weights()[j] * u.inner(v).unwrap();
                }
            }
            prop_assert!(double >= -1e-9);
            prop_assert!((double - tangent_mean(&p, b).unwrap().magnitude().powi(2)).abs() <= 1e-9);
        }
    }

    #[test]
    fn barycenter_beats_perturbations(seed in any::<u64>()) {
        let opts = SolverOptions::default();
        for fam in families() {
            let pts = draw(&fam, seed, 8);
            let p = DiscreteDistribution::uniform(pts.clone()).unwrap();
            let r = barycenter(&p, &opts).unwrap();
            prop_assert!(r.converged && r.grad_norm <= opts.tol, "{}: {}", fam.kind(), r.grad_norm);
            // nearby competitors along geodesics toward random points
            for x in &pts {
                let seg = geodesic(&r.point, x).unwrap();
                let t = (1e-3 / seg.length().max(1e-3)).min(1.0);
                let other = seg.at(t);
                let f = barylab::barycenter::variance(&p, &other).unwrap();
                prop_assert!(r.objective <= f + 1e-12);
            }
        }
    }

    #[test]
    fn hugging_sign_by_curvature(seed in any::<u64>()) {
        for fam in families() {
            let p = draw(&fam, seed, 3);
            let k = hugging_value(&p[0], &p[1], &p[2]).unwrap();
            match fam.kind() {
                SpaceKind::Hyperbolic => prop_assert!(k >= 1.0 - 1e-9),
                SpaceKind::Euclidean | SpaceKind::Quantile => prop_assert!((k - 1.0).abs() <= 1e-9),
                _ => prop_assert!(k <= 1.0 + 1e-9),
            }
        }
    }

    #[test]
    fn comparison_angle_reproduces_model_angles(seed in any::<u64>()) {
        let mut rng = rng::from_seed(seed);
        let (a, b, gamma): (f64, f64, f64) = (rng.random_range(0.05..1.5), rng.random_range(0.05..1.5), rng.random_range(0.05..(PI - 0.05)));
        // sphere: vertex angle from the spherical law of cosines
        let c = (a.cos() * b.cos() + a.sin() * b.sin() * gamma.cos()).acos();
        let got = comparison_angle(Kappa::new(1.0).unwrap(), TriangleSides::new(a, b, c).unwrap()).unwrap();
        prop_assert!((got - gamma).abs() <= 1e-9 * (1.0 + 1.0 / gamma.sin()));
        let c = (a.cosh() * b.cosh() - a.sinh() * b.sinh() * gamma.cos()).acosh();
        let got = comparison_angle(Kappa::new(-1.0).unwrap(), TriangleSides::new(a, b, c).unwrap()).unwrap();
        prop_assert!((got - gamma).abs() <= 1e-9 * (1.0 + 1.0 / gamma.sin()));
    }
}

#[test]
fn gaussian_and_quantile_distances_agree_in_one_dimension() {
    let m = 10_000;
    let g = |mu: f64, s: f64| {
        SpacePoint::gaussian(nalgebra::DVector::from_element(1, mu), nalgebra::DMatrix::from_element(1, 1, s * s)).unwrap()
    };
    let q = |mu: f64, s: f64| SpacePoint::quantile(normal_quantiles(m, mu, s)).unwrap();
    for (m1, s1, m2, s2) in [(0.0, 1.0, 0.0, 2.0), (0.5, 0.3, -1.0, 1.7), (2.0, 1.0, 2.0, 1.0)] {
        let dg = distance(&g(m1, s1), &g(m2, s2)).unwrap();
        let dq = distance(&q(m1, s1), &q(m2, s2)).unwrap();
        assert!((dg - dq).abs() <= 1e-3, "{dg} vs {dq}");
    }
}

#[test]
fn sphere_cap_barycenter_of_fifty_points() {
    let fam = Family::SphereCap { dim: 2, radius: 0.3, center: None };
    let sample = draw(&fam, 77, 50);
    let r = barylab::barycenter::empirical_barycenter(&sample, &SolverOptions::default()).unwrap();
    assert!(r.converged && r.grad_norm <= 1e-10);
}

#[test]
fn sphere_axis_barycenter_beats_perturbed_competitors() {
    let pts: Vec<_> = (0..3)
        .map(|i| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            SpacePoint::sphere(v).unwrap()
        })
        .collect();
    let p = DiscreteDistribution::uniform(pts).unwrap();
    let r = barycenter(&p, &SolverOptions::default()).unwrap();
    let mut rng = rng::from_seed(3);
    for _ in 0..10_000 {
        let v: Vec<f64> = r.point.coords().unwrap().iter().map(|c| c + rng.random_range(-0.05..0.05)).collect();
        let other = SpacePoint::sphere_normalized(v).unwrap();
        assert!(r.objective <= barylab::barycenter::variance(&p, &other).unwrap() + 1e-15);
    }
}
