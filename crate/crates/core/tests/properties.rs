//! Property tests for structural invariants.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use vortexlab::evolve::{forcing_direct, nonlinearity_eps1, nonlinearity_ll, half_nl, Formulation};
use vortexlab::gaugefields::{a0_values, a_theta_values, darboux_values, Reconstructor};
use vortexlab::hgrid::{h1m_norm, ComplexRadialField, RadialGrid};
use vortexlab::lemmalab::{Check, Sample, Shape, SOBOLEV_SLACK_PER_H};
use vortexlab::linops::ProfileOps;
use vortexlab::tridiag::solve_shifted;
use vortexlab::vortex::solve_profile;

const N: usize = 1000;

fn ops() -> &'static Arc<ProfileOps> {
    static OPS: OnceLock<Arc<ProfileOps>> = OnceLock::new();
    OPS.get_or_init(|| {
        let g = RadialGrid::new(20.0, N).unwrap();
        Arc::new(ProfileOps::new(Arc::new(solve_profile(1, &g, 1e-10).unwrap())))
    })
}

fn bump(ops: &ProfileOps, c: f64, w: f64, phase: f64, amp: f64) -> Vec<C64> {
    ops.grid()
        .r()
        .iter()
        .zip(ops.q())
        .map(|(r, q)| C64::from_polar(amp * q * (-((r - c) / w).powi(2)).exp(), phase))
        .collect()
}

fn scaled(v: &[C64], s: f64) -> Vec<C64> {
    v.iter().map(|z| z * s).collect()
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_reproduce_hyperbolic_area(r_max in 0.5f64..12.0, n in 50usize..2000) {
        let g = RadialGrid::new(r_max, n).unwrap();
        let exact = r_max.cosh() - 1.0;
        let sum: f64 = g.weights().iter().sum();
        let h = g.h();
        prop_assert!((sum / exact - 1.0).abs() <= 0.2 * h * h, "{sum} vs {exact}");
    }

    #[test]
    fn laplacian_is_symmetric_in_weighted_product(seed in any::<u64>()) {
        let g = RadialGrid::new(8.0, 200).unwrap();
        let l = g.laplacian();
        let mut s = seed;
        let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5 };
        let f: Vec<f64> = (0..200).map(|_| next()).collect();
        let k: Vec<f64> = (0..200).map(|_| next()).collect();
        let (lf, lk) = (l.apply(&f), l.apply(&k));
        let a: f64 = f.iter().zip(&lk).zip(g.weights()).map(|((x, y), w)| x * y * w).sum();
        let b: f64 = lf.iter().zip(&k).zip(g.weights()).map(|((x, y), w)| x * y * w).sum();
        prop_assert!((a - b).abs() <= 1e-9 * (a.abs() + b.abs() + 1.0));
    }

    #[test]
    fn cumulative_integral_ends_at_total(c in 1.0f64..6.0) {
        let g = RadialGrid::new(10.0, 500).unwrap();
        let f: Vec<f64> = g.r().iter().map(|r| (-(r - c) * (r - c)).exp()).collect();
        let cum = g.cumulative_weighted_from_origin(&f);
        let tot = g.integrate(&f);
        prop_assert!((cum[499] / tot - 1.0).abs() < 1e-3);
        prop_assert!(cum.windows(2).all(|w| w[1] >= w[0]));
    }

    // In the amplitude, a_θ is quadratic, ε₁ cubic and A₀ quartic, so
    // finite differences of orders 3, 4 and 5 vanish.
    #[test]
    fn gauge_fields_have_polynomial_homogeneity(c in 1.0f64..6.0, w in 0.5f64..2.0, phase in 0.0f64..6.28) {
        let o = ops();
        let e = bump(o, c, w, phase, 1e-3);
        let a = |s: f64| a_theta_values(o, &scaled(&e, s));
        let d3: Vec<f64> = (0..N).map(|i| a(3.0)[i] - 3.0 * a(2.0)[i] + 3.0 * a(1.0)[i] - a(0.0)[i]).collect();
        prop_assert!(max_abs(d3) <= 1e-12 * max_abs(a(1.0)) + 1e-300);

        let e1 = |s: f64| { let v = scaled(&e, s); darboux_values(o, &v, &a_theta_values(o, &v)) };
        let f: Vec<Vec<C64>> = (0..5).map(|k| e1(k as f64)).collect();
        let d4: Vec<f64> =
            (0..N).map(|i| (f[4][i] - f[3][i] * 4.0 + f[2][i] * 6.0 - f[1][i] * 4.0 + f[0][i]).norm()).collect();
        prop_assert!(max_abs(d4) <= 1e-10 * max_abs(f[1].iter().map(|z| z.norm())));

        let a0 = |s: f64| { let v = scaled(&e, s); let x = darboux_values(o, &v, &a_theta_values(o, &v)); a0_values(o, &x, &v) };
        let g: Vec<Vec<f64>> = (0..6).map(|k| a0(k as f64)).collect();
        let d5: Vec<f64> = (0..N)
            .map(|i| g[5][i] - 5.0 * g[4][i] + 10.0 * g[3][i] - 10.0 * g[2][i] + 5.0 * g[1][i] - g[0][i])
            .collect();
        prop_assert!(max_abs(d5) <= 1e-9 * max_abs(g[1].iter().copied()));
    }

    #[test]
    fn sobolev_pointwise_bound(c in 0.5f64..8.0, w in 0.3f64..2.5, phase in 0.0f64..6.28) {
        let o = ops();
        let eps = Shape::QGaussian { center: c, width: w, phase }.realize(o, 1e-3).unwrap();
        let (lhs, rhs) = Check::SobolevEmbedding.sides(o.grid(), &Sample::new(o, eps).unwrap()).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + SOBOLEV_SLACK_PER_H * o.grid().h()));
    }

    #[test]
    fn darboux_round_trip(c in 2.0f64..5.0, w in 0.6f64..1.5, phase in 0.0f64..6.28) {
        let o = ops();
        static REC: OnceLock<Reconstructor> = OnceLock::new();
        let rec = REC.get_or_init(|| Reconstructor::new(ops().clone()).unwrap());
        let v = Shape::QGaussian { center: c, width: w, phase }.realize(o, 1e-3).unwrap();
        let star = ComplexRadialField::new(o.grid().clone(), v, 1).unwrap();
        let e1 = darboux_values(o, star.values(), &a_theta_values(o, star.values()));
        let e1 = ComplexRadialField::new(o.grid().clone(), e1, 2).unwrap();
        let back = rec.reconstruct(&e1, 1e-12, 60).unwrap();
        prop_assert!(back.converged);
        // the forward and inverse discretizations agree to O(h²)
        let rel = h1m_norm(&back.eps.sub(&star).unwrap()).unwrap() / h1m_norm(&star).unwrap();
        let h = o.grid().h();
        prop_assert!(rel <= 5.0 * h * h, "relative error {rel:e}");
    }

    #[test]
    fn shifted_solve_inverts(shift in 0.5f64..3.0, scale in 0.01f64..1.0) {
        let g = RadialGrid::new(10.0, 300).unwrap();
        let a = g.laplacian();
        let x: Vec<C64> = g.r().iter().map(|r| C64::new(r.sin(), (-r).exp())).collect();
        let s = C64::new(0.0, scale);
        let ax = a.apply_complex(&x);
        let mut rhs: Vec<C64> = x.iter().zip(&ax).map(|(x, y)| x * shift + y * s).collect();
        solve_shifted(&a, &vec![C64::new(shift, 0.0); 300], s, &mut rhs).unwrap();
        prop_assert!(rhs.iter().zip(&x).all(|(u, v)| (u - v).norm() < 1e-9));
    }

    #[test]
    fn field_csv_round_trip(c in 0.5f64..5.0, phase in 0.0f64..6.28) {
        let g = RadialGrid::new(6.0, 120).unwrap();
        let f = ComplexRadialField::from_fn(g, 2, |r| C64::from_polar(r * r * (-(r - c) * (r - c)).exp(), phase)).unwrap();
        let mut buf = vec![];
        f.write_csv(&mut buf).unwrap();
        let back = ComplexRadialField::read_csv(&buf[..]).unwrap();
        prop_assert_eq!(back.values(), f.values());
    }
}

#[test]
fn vortex_is_fixed_point_of_every_nonlinearity() {
    let o = ops();
    let zero = vec![C64::new(0.0, 0.0); N];
    for v in [forcing_direct(o, &zero), half_nl(o, &zero), nonlinearity_ll(o, &zero), nonlinearity_eps1(o, &zero, &zero)] {
        assert!(v.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }
}

#[test]
fn formulation_names_round_trip() {
    for f in [Formulation::Direct, Formulation::LL, Formulation::Epsilon1] {
        assert_eq!(f.to_string().parse::<Formulation>().unwrap(), f);
    }
    assert!("epsilon2".parse::<Formulation>().is_err());
}
