use fluxnet::cgf::*;
use fluxnet::linalg::complex_det;
use fluxnet::{presets, Model};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(spec: fluxnet::NetworkSpec) -> Model {
    Model::assemble(&spec).unwrap()
}

fn networks() -> Vec<(&'static str, Model)> {
    vec![
        ("lozenge_eq", model(presets::lozenge(&[1.0, 1.0, 1.0]).unwrap())),
        ("lozenge_1_2_4", model(presets::lozenge(&[1.0, 2.0, 4.0]).unwrap())),
        ("triangular_1_2_4", model(presets::triangular(&[1.0, 2.0, 4.0]).unwrap())),
        ("heat_pump", model(presets::heat_pump(&[10.0, 3.6, 7.0, 6.8]).unwrap())),
    ]
}

/// Uniform sample of the box `0 < ξ_i < ϑ_i⁻¹`, kept away from its faces.
fn random_d0(m: &Model, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(m.d, |j, _| m.theta_inv[j] * rng.random_range(0.05..0.95))
}

#[test]
fn e_vanishes_at_zero_and_has_unit_determinant_at_inverse_temperature() {
    for (_, m) in networks() {
        let zero = DVector::zeros(m.d);
        for w in [0.0, 0.3, 2.0, 17.0] {
            assert!(e_matrix(&m, &zero, w).unwrap().norm() == 0.0);
            let e = e_matrix(&m, &m.theta_inv, w).unwrap();
            let ie = DMatrix::identity(m.d, m.d).map(|x: f64| nalgebra::Complex::new(x, 0.0)) - e;
            let det = complex_det(&ie);
            assert!((det.re - 1.0).abs() < 1e-10 && det.im.abs() < 1e-10, "det {det}");
        }
    }
}

#[test]
fn e_is_hermitian_linear_and_decays() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (_, m) in networks() {
        let a = random_d0(&m, &mut rng);
        let b = random_d0(&m, &mut rng);
        let w = 0.7;
        let ea = e_matrix(&m, &a, w).unwrap();
        let eb = e_matrix(&m, &b, w).unwrap();
        let eab = e_matrix(&m, &(&a * 2.0 - &b), w).unwrap();
        assert!((eab - (ea.clone() * nalgebra::Complex::new(2.0, 0.0) - eb)).norm() < 1e-12);
        assert!((ea.adjoint() - &ea).norm() < 1e-12);
        let far = e_matrix(&m, &a, 1e3 * m.spectral_scale).unwrap();
        assert!(far.norm() < 1e-4);
        let direct = e_matrix_from_lift(&m, &m.lift(&a), w).unwrap();
        assert!((direct - e_matrix(&m, &a, w).unwrap()).norm() < 1e-10);
    }
}

#[test]
fn lineality_is_the_constant_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, m) in networks() {
        let geom = lineality_space(&m).unwrap();
        assert_eq!(geom.lineality_dim(), 1, "{name}");
        assert_eq!(geom.algebraic_dim, 1, "{name}");
        let ones = DVector::from_element(m.d, 1.0 / (m.d as f64).sqrt());
        assert!((geom.lineality.column(0).dot(&ones).abs() - 1.0).abs() < 1e-10);
        let p = &geom.projector;
        assert!((p * p - p).norm() < 1e-12 && (p.transpose() - p).norm() < 1e-12);
        for _ in 0..20 {
            let w = rng.random_range(-50.0..50.0);
            let e = e_matrix(&m, &geom.lineality.column(0).into_owned(), w).unwrap();
            assert!(e.norm() < 1e-9);
        }
    }
}

#[test]
fn domain_margin_basic_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, m) in networks() {
        let geom = lineality_space(&m).unwrap();
        let z = geom.margin(&m, &DVector::zeros(m.d)).unwrap();
        assert_eq!(z.margin, 1.0);
        for _ in 0..10 {
            let xi = random_d0(&m, &mut rng);
            assert!(geom.margin(&m, &xi).unwrap().inside(), "{name}");
            assert!(spectral_domain_test(&m, &xi, 1e-9).unwrap());
        }
    }
}

#[test]
fn triangular_equilibrium_section_is_a_disk() {
    let m = model(presets::triangular(&[1.0, 1.0, 1.0]).unwrap());
    let geom = lineality_space(&m).unwrap();
    assert_eq!(geom.section_dim(), 2);
    for k in 0..64 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
        let u = geom.from_frame(&DVector::from_vec(vec![a.cos(), a.sin()]));
        let r = section_boundary(&m, &geom, &u).unwrap().radius();
        assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-3, "direction {k}: r = {r}");
        let outside = &geom.center + &u * (10.0 * r);
        assert!(!geom.margin(&m, &outside).unwrap().inside());
    }
}

#[test]
fn section_boundary_is_centrally_symmetric() {
    let m = model(presets::lozenge(&[1.0, 2.0, 4.0]).unwrap());
    let geom = lineality_space(&m).unwrap();
    for k in 0..8 {
        let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.3) / 8.0;
        let u = geom.from_frame(&DVector::from_vec(vec![a.cos(), a.sin()]));
        let r1 = section_boundary(&m, &geom, &u).unwrap().radius();
        let r2 = section_boundary(&m, &geom, &(-&u)).unwrap().radius();
        assert!(r1.is_finite() && r1 > 0.0);
        assert!((r1 - r2).abs() < 1e-5, "{r1} vs {r2}");
    }
}

#[test]
fn g_vanishes_at_anchors() {
    for (name, m) in networks() {
        let geom = lineality_space(&m).unwrap();
        let at0 = g_value(&m, &geom, &DVector::zeros(m.d), Method::All).unwrap();
        assert!(at0.value().abs() < 1e-10, "{name}");
        let at1 = g_value(&m, &geom, &m.theta_inv, Method::Spectral).unwrap();
        assert!(at1.value().abs() < 1e-10, "{name}");
        assert!(g_riccati(&m, &m.theta_inv).unwrap().abs() < 1e-9, "{name}");
    }
}

#[test]
fn three_routes_agree_on_random_d0_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, m) in networks() {
        let geom = lineality_space(&m).unwrap();
        for _ in 0..50 {
            let xi = random_d0(&m, &mut rng);
            let r = g_value(&m, &geom, &xi, Method::All).unwrap_or_else(|e| panic!("{name}: {e}"));
            let (i, s, q) = (r.g_integral.unwrap(), r.g_spectral.unwrap(), r.g_riccati.unwrap());
            assert!((i - s).abs() < 1e-6 * (1.0 + s.abs()) && (s - q).abs() < 1e-6 * (1.0 + s.abs()), "{name}: {i} {s} {q}");
            assert!(r.in_dinf.unwrap(), "{name}");
        }
    }
}

#[test]
fn gradient_matches_finite_differences_and_is_orthogonal_to_lineality() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (name, m) in networks() {
        for _ in 0..5 {
            let xi = random_d0(&m, &mut rng);
            let g = g_gradient(&m, &xi).unwrap().grad;
            assert!(g.sum().abs() < 1e-8 * (1.0 + g.norm()), "{name}");
            let h = 1e-5;
            for j in 0..m.d {
                let mut e = DVector::zeros(m.d);
                e[j] = h;
                let fd = (g_riccati(&m, &(&xi + &e)).unwrap() - g_riccati(&m, &(&xi - &e)).unwrap()) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-5 * (1.0 + g[j].abs()), "{name} component {j}: {fd} vs {}", g[j]);
            }
            let via_integral = g_gradient_integral(&m, &xi).unwrap();
            assert!((via_integral - &g).norm() < 1e-7 * (1.0 + g.norm()));
        }
    }
}

#[test]
fn gradient_vanishes_at_equilibrium() {
    let m = model(presets::lozenge(&[1.0, 1.0, 1.0]).unwrap());
    let g = g_gradient(&m, &DVector::zeros(m.d)).unwrap().grad;
    assert!(g.amax() < 1e-9);
}

#[test]
fn hessian_is_positive_off_lineality_and_matches_second_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (name, m) in networks() {
        let geom = lineality_space(&m).unwrap();
        let xi = random_d0(&m, &mut rng);
        let ones = DVector::from_element(m.d, 1.0);
        assert!(g_hessian_quadform(&m, &xi, &ones).unwrap().abs() < 1e-9);
        for k in 0..geom.section_dim() {
            let eta = geom.frame.column(k).into_owned();
            let q = g_hessian_quadform(&m, &xi, &eta).unwrap();
            assert!(q > 0.0, "{name}");
            let h = 1e-3;
            let f = |t: f64| g_riccati(&m, &(&xi + &eta * t)).unwrap();
            let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
            assert!((fd - q).abs() < 1e-4 * q.abs().max(1e-2), "{name}: {fd} vs {q}");
        }
    }
}

#[test]
fn lambda_pm_at_origin() {
    for (_, m) in networks() {
        let (lm, lp) = lambda_pm(&m, &DVector::zeros(m.d)).unwrap();
        let minv = inverse_covariance(&m).unwrap();
        let expect = fluxnet::linalg::min_eig_sym(&minv).unwrap();
        assert!((lm + fluxnet::linalg::min_eig_sym(&m.reverse(&minv)).unwrap()).abs() < 1e-9);
        assert!((lp - expect).abs() < 1e-9 && lm < 0.0 && lp > 0.0);
        let geom = lineality_space(&m).unwrap();
        assert!(in_sinf(&m, &geom, &DVector::zeros(m.d)).unwrap());
    }
}

#[test]
fn feasibility_gap_equals_lambda_difference_for_scalar_lineality() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let m = model(presets::heat_pump(&[10.0, 3.6, 7.0, 6.8]).unwrap());
    let geom = lineality_space(&m).unwrap();
    for _ in 0..5 {
        let xi = geom.project(&random_d0(&m, &mut rng));
        let f = sinf_feasibility(&m, &geom, &xi).unwrap();
        assert!((f.gap - (f.lambda_plus - f.lambda_minus)).abs() < 1e-7, "{} vs {}", f.gap, f.lambda_plus - f.lambda_minus);
    }
}

#[test]
fn riccati_hessian_matches_quadrature_hessian() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for (name, m) in networks() {
        let geom = lineality_space(&m).unwrap();
        let xi = random_d0(&m, &mut rng);
        let grad = g_gradient(&m, &xi).unwrap();
        let hr = g_hessian_riccati(&m, &grad, &geom.frame).unwrap();
        let hq = g_hessian(&m, &xi, &geom.frame).unwrap();
        assert!((&hr - &hq).norm() < 1e-7 * (1.0 + hq.norm()), "{name}: {hr} vs {hq}");
    }
}
