use crlab::dualframe::{FrameOptions, FramePoint};
use crlab::surfaces::SurfacePoint;
use crlab::CircularSurface;
use num_complex::Complex64;
use proptest::prelude::*;

fn hermitian() -> impl Strategy<Value = String> {
    // positive definite: diagonal dominates the off-diagonal entry
    (0.5..3.0f64, 0.5..3.0f64, -0.4..0.4f64, -0.4..0.4f64).prop_map(|(a, d, re, im)| {
        let (p, m) = if im >= 0.0 { ('+', '-') } else { ('-', '+') };
        let im = im.abs();
        format!("hermitian:[[{a},{re}{p}{im}i],[{re}{m}{im}i,{d}]]")
    })
}

fn params() -> impl Strategy<Value = [f64; 3]> {
    (0.05..1.5f64, -3.1..3.1f64, -3.1..3.1f64).prop_map(|(s, a, b)| [s, a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauge_is_circular_and_homogeneous(spec in hermitian(), p in params(), phase in 0.0..std::f64::consts::TAU, t in 0.2..3.0f64) {
        let s = CircularSurface::from_spec(&spec).unwrap();
        let z = SurfacePoint::from_params(&s, p).z;
        prop_assert!((s.q(z) - 1.0).abs() < 1e-12);
        let e = Complex64::from_polar(1.0, phase);
        prop_assert!((s.q([e * z[0], e * z[1]]) - 1.0).abs() < 1e-12);
        prop_assert!((s.q([z[0] * t, z[1] * t]) - t * t).abs() < 1e-12 * t * t);
    }

    #[test]
    fn dual_map_pairs_to_one(spec in hermitian(), p in params()) {
        let s = CircularSurface::from_spec(&spec).unwrap();
        let z = SurfacePoint::from_params(&s, p).z;
        let f = FramePoint::compute(&s, z, &FrameOptions::with_order(3)).unwrap();
        let w = f.dual_point();
        prop_assert!((z[0] * w[0] + z[1] * w[1] - 1.0).norm() < 1e-12);
        prop_assert!(f.residuals.tangency < 1e-10);
    }

    #[test]
    fn perturbed_surfaces_stay_valid(eps in 0.0..0.5f64, p in params()) {
        let s = CircularSurface::from_spec(&format!("perturbed:[[1,0],[0,1.5]];{eps}")).unwrap();
        let z = SurfacePoint::from_params(&s, p).z;
        let (circ, euler) = s.invariant_residuals(z).unwrap();
        prop_assert!(circ < 1e-10 && euler < 1e-10);
        prop_assert!(s.convexity_eigenvalue(z).unwrap() > 0.0);
    }
}

#[test]
fn rejects_indefinite_and_unknown_specs() {
    for bad in ["hermitian:[[1,0],[0,-1]]", "hermitian:[[1,2],[3,1]]", "ellipse", "perturbed:[[1,0],[0,1]];10"] {
        assert!(CircularSurface::from_spec(bad).is_err(), "{bad}");
    }
}

#[test]
fn sphere_spec_round_trips() {
    let s = CircularSurface::from_spec("sphere").unwrap();
    assert!(s.is_unit_sphere());
    let again = CircularSurface::from_spec(&s.spec()).unwrap();
    assert_eq!(again.spec(), s.spec());
}
