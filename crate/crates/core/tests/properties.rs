//! Property tests for invariants that hold for every admissible input.

use proptest::prelude::*;

use fracjac::cantor::{CantorMapSpec, PiecewiseRadialMap};
use fracjac::degree::{degree, degree_stability_check, Domain, GridFunction};
use fracjac::geometry::{sup_dist, RegularGrid, SupCube};
use fracjac::jacobian::{cn_verdict, CnVerdict, MeasureEstimate, MeasureMethod, MollifiedSequence, MollifierSettings};
use fracjac::maps::{Affine, Map};
use fracjac::norms::{gagliardo_seminorm, Quadrature, SeminormDomain, SeminormParams};
use fracjac::report::{parse_config, Raster};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

fn lusin(level: usize) -> PiecewiseRadialMap {
    PiecewiseRadialMap::new(CantorMapSpec::lusin_n(2, 0.5, level).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn affine_degree_is_sign_of_determinant(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0,
        x0 in -0.5f64..0.5, x1 in -0.5f64..0.5,
    ) {
        let det = a * d - b * c;
        // Keep the condition number below about 4 so the degree is certified at this grid size.
        prop_assume!(det.abs() > 0.25 * (a * a + b * b + c * c + d * d));
        let f = Affine::new(vec![a, b, c, d], vec![0.0, 0.0], "a").unwrap();
        let gf = GridFunction::sample(&f, RegularGrid::new(SupCube::unit(2), 64).unwrap()).unwrap();
        let y = f.eval(&[x0, x1]);
        let r = degree(&gf, &Domain::Cube(SupCube::unit(2)), &y).unwrap();
        prop_assert_eq!(r.value, det.signum() as i64);
    }

    #[test]
    fn degree_survives_small_perturbations(
        shift0 in -0.05f64..0.05, shift1 in -0.05f64..0.05,
        y0 in -0.5f64..0.5, y1 in -0.5f64..0.5,
    ) {
        let q0 = SupCube::unit(2);
        let f = GridFunction::sample(&Affine::identity(2), RegularGrid::new(q0.clone(), 32).unwrap()).unwrap();
        let g_map = Affine::new(vec![1.0, 0.0, 0.0, 1.0], vec![shift0, shift1], "shifted").unwrap();
        let g = GridFunction::sample(&g_map, RegularGrid::new(q0.clone(), 32).unwrap()).unwrap();
        let rep = degree_stability_check(&f, &g, &Domain::Cube(q0), &[y0, y1]).unwrap();
        prop_assert_eq!(rep.degree_f, rep.degree_g);
    }

    #[test]
    fn cantor_map_is_a_self_map_fixing_the_boundary(
        level in 1usize..6, x0 in -1.0f64..1.0, x1 in -1.0f64..1.0, face in 0usize..4,
    ) {
        let f = lusin(level);
        let y = f.eval(&[x0, x1]);
        prop_assert!(y.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        let b = match face {
            0 => [1.0, x1],
            1 => [-1.0, x1],
            2 => [x0, 1.0],
            _ => [x0, -1.0],
        };
        prop_assert!(sup_dist(&f.eval(&b), &b) < 1e-12);
    }

    #[test]
    fn cantor_map_is_injective_and_lipschitz(
        level in 1usize..6,
        x0 in -1.0f64..1.0, x1 in -1.0f64..1.0,
        y0 in -1.0f64..1.0, y1 in -1.0f64..1.0,
    ) {
        let f = lusin(level);
        let (x, y) = ([x0, x1], [y0, y1]);
        let d = sup_dist(&x, &y);
        prop_assume!(d > 1e-9);
        let df = sup_dist(&f.eval(&x), &f.eval(&y));
        prop_assert!(df > 0.0);
        prop_assert!(df <= f.lipschitz_bound() * d * (1.0 + 1e-9));
    }

    #[test]
    fn mollifier_reproduces_affine_maps(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0,
        t0 in -1.0f64..1.0, t1 in -1.0f64..1.0,
    ) {
        let f = Affine::new(vec![a, b, c, d], vec![t0, t1], "a").unwrap();
        let seq = MollifiedSequence::new(&f, SupCube::unit(2), MollifierSettings::halving(0.2, 1, 3)).unwrap();
        let field = seq.field(0.2, &[-0.3, -0.3], &[0.3, 0.3]).unwrap();
        for i in (0..field.node_count()).step_by(7) {
            let x = field.node(i);
            prop_assert!(sup_dist(field.value(i), &f.eval(&x)) < 1e-12);
            prop_assert!((field.jacobian(i) - (a * d - b * c)).abs() < 1e-10);
        }
    }

    #[test]
    fn seminorm_ignores_translations_of_the_values(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0) {
        let f = Affine::new(vec![1.0, 0.3, -0.2, 0.7], vec![0.0, 0.0], "f").unwrap();
        let g = Affine::new(vec![1.0, 0.3, -0.2, 0.7], vec![c0, c1], "g").unwrap();
        let p = SeminormParams::new(0.4, 2.0, SeminormDomain::Cube(SupCube::unit(2)), Quadrature::Grid(16)).unwrap();
        let a = gagliardo_seminorm(&f, &p).unwrap().value;
        let b = gagliardo_seminorm(&g, &p).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn verdict_is_holds_inside_the_interval(lower in 0.1f64..10.0, width in 0.0f64..0.2, t in 0.0f64..1.0) {
        let upper = lower * (1.0 + width);
        let m = MeasureEstimate::new(lower, upper, MeasureMethod::Quadrature).unwrap();
        prop_assert_eq!(cn_verdict(lower + t * (upper - lower), &m), CnVerdict::Holds);
        prop_assert_eq!(cn_verdict(2.0 * upper, &m), CnVerdict::Fails);
    }

    #[test]
    fn pgm_round_trips(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
        let mut r = Raster::new(w, h);
        for (i, p) in r.pixels.iter_mut().enumerate() {
            *p = (seed.wrapping_mul(i as u64 + 1) >> 48) as u16;
        }
        prop_assert_eq!(Raster::from_pgm(&r.to_pgm()).unwrap(), r);
    }

    #[test]
    fn config_round_trips(keys in proptest::collection::btree_map("[a-z][a-z-]{0,8}", "[0-9.,]{1,8}", 0..6)) {
        let text: String = keys.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        prop_assert_eq!(parse_config(&text).unwrap(), keys);
    }
}

/// `f(x) = x` on `Q(0, R)`: the double integral scales like `R^{2n - (n + sp) + p}`.
#[test]
fn seminorm_scaling_law() {
    let (s, p, n) = (0.5, 2.0, 2.0);
    let value = |r: f64| {
        let d = SeminormDomain::Cube(SupCube::new(vec![0.0, 0.0], r).unwrap());
        gagliardo_seminorm(&Affine::identity(2), &SeminormParams::new(s, p, d, Quadrature::Grid(32)).unwrap())
            .unwrap()
            .value
    };
    let exponent = 2.0 * n - (n + s * p) + p;
    let (a, b) = (value(1.0), value(3.0));
    assert!(((b / a) - 3f64.powf(exponent)).abs() < 1e-9 * 3f64.powf(exponent));
}

/// A subcube never carries more seminorm mass than the cube containing it.
#[test]
fn seminorm_is_monotone_in_the_domain() {
    let f = lusin(4);
    let full = SeminormParams::new(0.3, 2.0, SeminormDomain::Cube(SupCube::unit(2)), Quadrature::Grid(64))
        .unwrap()
        .with_holder_exponent(0.5)
        .unwrap();
    let sub = SeminormParams::new(
        0.3,
        2.0,
        SeminormDomain::Cube(SupCube::new(vec![0.5, 0.5], 0.5).unwrap()),
        Quadrature::Grid(32),
    )
    .unwrap()
    .with_holder_exponent(0.5)
    .unwrap();
    let a = gagliardo_seminorm(&f, &full).unwrap().value;
    let b = gagliardo_seminorm(&f, &sub).unwrap().value;
    assert!(b <= a * 1.02, "{b} > {a}");
}
