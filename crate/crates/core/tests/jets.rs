use crlab::{Jet, Wirtinger};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

fn jet(order: usize) -> impl Strategy<Value = Jet> {
    let n = Jet::zero(order).coefficients().len();
    prop::collection::vec(complex(), n).prop_map(move |v| Jet::from_coefficients(order, v).unwrap())
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    a.order() == b.order() && a.coefficients().iter().zip(b.coefficients()).all(|(x, y)| (x - y).norm() <= tol)
}

fn wirtinger() -> impl Strategy<Value = Wirtinger> {
    (0..4usize).prop_map(Wirtinger::from_slot)
}

/// `p = z₁²z̄₂ − 3i z₂ z̄₁ + z̄₁³ + 2`, evaluated directly.
fn poly(z: [Complex64; 2]) -> Complex64 {
    let (z1, z2) = (z[0], z[1]);
    z1 * z1 * z2.conj() - c(0.0, 3.0) * z2 * z1.conj() + z1.conj().powu(3) + 2.0
}

fn poly_jet(z: [Complex64; 2], order: usize) -> Jet {
    let [z1, z2, zb1, zb2] = Jet::coordinates(z, order);
    &(&(&(&z1 * &z1) * &zb2) - &(&(&z2 * &zb1) * c(0.0, 3.0))) + &(&(&zb1 * &zb1) * &zb1) + c(2.0, 0.0)
}

#[test]
fn polynomial_jet_is_exact_taylor_expansion() {
    let z = [c(0.3, -0.2), c(-0.5, 0.4)];
    let j = poly_jet(z, 3);
    for h in [[c(0.1, 0.2), c(-0.3, 0.05)], [c(-0.7, 0.1), c(0.2, 0.9)]] {
        let inc = [h[0], h[1], h[0].conj(), h[1].conj()];
        let exact = poly([z[0] + h[0], z[1] + h[1]]);
        assert!((j.eval_increment(inc) - exact).norm() < 1e-13);
    }
}

#[test]
fn derivatives_match_hand_computation() {
    let z = [c(0.3, -0.2), c(-0.5, 0.4)];
    let j = poly_jet(z, 3);
    let (z1, z2) = (z[0], z[1]);
    // ∂p/∂z₁ = 2z₁z̄₂, ∂p/∂z̄₁ = −3i z₂ + 3z̄₁²
    assert!((j.derivative(Wirtinger::Z1).unwrap().value() - 2.0 * z1 * z2.conj()).norm() < 1e-14);
    assert!((j.derivative(Wirtinger::Zb1).unwrap().value() - (-c(0.0, 3.0) * z2 + 3.0 * z1.conj().powu(2))).norm() < 1e-14);
    let d2 = j.derivative(Wirtinger::Zb2).unwrap().derivative(Wirtinger::Z1).unwrap();
    assert!((d2.value() - 2.0 * z1).norm() < 1e-14);
}

#[test]
fn exp_taylor_remainder_scales_with_order() {
    let z = [c(0.2, 0.1), c(-0.3, 0.4)];
    let [z1, _, _, zb2] = Jet::coordinates(z, 4);
    let j = (&z1 * &zb2).exp();
    let exact = |h: Complex64| ((z[0] + h) * (z[1] + h).conj()).exp();
    let err = |t: f64| {
        let h = c(t, 0.5 * t);
        (j.eval_increment([h, h, h.conj(), h.conj()]) - exact(h)).norm()
    };
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 32.0).abs() < 3.0, "remainder ratio {ratio}");
}

proptest! {
    #[test]
    fn conj_is_an_involution(j in jet(4)) {
        prop_assert!(close(&j.conj().conj(), &j, 0.0));
    }

    #[test]
    fn conj_swaps_derivative_direction(j in jet(4), v in wirtinger()) {
        let lhs = j.derivative(v).unwrap().conj();
        let rhs = j.conj().derivative(v.conj()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-14));
    }

    #[test]
    fn derivatives_commute(j in jet(5), a in wirtinger(), b in wirtinger()) {
        let ab = j.derivative(a).unwrap().derivative(b).unwrap();
        let ba = j.derivative(b).unwrap().derivative(a).unwrap();
        prop_assert!(close(&ab, &ba, 1e-12));
    }

    #[test]
    fn leibniz_rule(a in jet(4), b in jet(4), v in wirtinger()) {
        let lhs = (&a * &b).derivative(v).unwrap();
        let rhs = &(&a.derivative(v).unwrap() * &b) + &(&a * &b.derivative(v).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn division_undoes_multiplication(a in jet(4), mut b in jet(4)) {
        let mut k = b.coefficients().to_vec();
        k[0] += c(2.5, 0.0);
        b = Jet::from_coefficients(4, k).unwrap();
        let back = (&a * &b).div(&b, 1e-12).unwrap();
        prop_assert!(close(&back, &a, 1e-11));
    }

    #[test]
    fn truncation_commutes_with_products(a in jet(5), b in jet(5)) {
        let lhs = (&a * &b).truncate(3);
        let rhs = &a.truncate(3) * &b.truncate(3);
        prop_assert!(close(&lhs, &rhs, 1e-13));
    }

    #[test]
    fn hermitian_forms_are_real(x in complex(), y in complex()) {
        let [z1, z2, zb1, zb2] = Jet::coordinates([x, y], 3);
        let q = &(&z1 * &zb1) + &(&(&z2 * &zb2) * 2.0);
        prop_assert!(q.is_real(1e-15));
    }
}
