use nonbloch::hierarchy::{amoeba_membership, winding, MuSearch, Zone, MAX_ROUNDING_GAP};
use nonbloch::lattice::{
    add_onsite, build_1d, restrict_geometry, separable_square, BoundaryCondition, LatticeGeometry, OperatorMatrix,
    Perturbation,
};
use nonbloch::spectra::eig;
use nonbloch::{BlochSymbol, LaurentOperator};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn chain_model() -> LaurentOperator {
    LaurentOperator::next_nearest(1.0, c(0.5, 0.0), c(0.0, 0.2))
}

fn square_axis() -> LaurentOperator {
    LaurentOperator::next_nearest(1.0, c(0.2, 0.0), c(0.1, 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windings_round_cleanly_off_the_bloch_set(re in -4.0f64..4.0, im in -3.0f64..3.0, mu in -0.5f64..0.5) {
        let symbol = BlochSymbol::Chain(chain_model());
        if let Ok(w) = winding(&symbol, c(re, im), &[mu], 2048) {
            prop_assume!(w.min_distance > 0.05);
            prop_assert!(w.rounding_gap < MAX_ROUNDING_GAP, "gap {}", w.rounding_gap);
        }
    }

    #[test]
    fn outside_bloch_means_zero_windings(re in -4.0f64..4.0, im in -3.0f64..3.0) {
        let verdict = amoeba_membership(&BlochSymbol::Chain(chain_model()), c(re, im), &MuSearch::default());
        if verdict.zone == Zone::OutsideBloch {
            let w = verdict.windings_mu0.expect("windings at μ = 0");
            prop_assert!(w.iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn hatano_nelson_zones_follow_the_ellipse(theta in 0.0f64..std::f64::consts::TAU, scale in 0.05f64..2.0) {
        let (a, b) = (1.2, 1.1);
        // the Bloch set is an ellipse with semi-axes a + b and |a - b|; the
        // open-boundary spectrum is the real segment inside it
        let omega = c((a + b) * scale * theta.cos(), (a - b) * scale * theta.sin());
        let ellipse = scale;
        prop_assume!((ellipse - 1.0).abs() > 0.05);
        prop_assume!(omega.im.abs() > 0.01);
        let verdict = amoeba_membership(&BlochSymbol::Chain(LaurentOperator::hatano_nelson(a, b)), omega, &MuSearch::default());
        let expected = if ellipse > 1.0 { Zone::OutsideBloch } else { Zone::OutsideAmoebaInsideBloch };
        prop_assert_eq!(verdict.zone, expected, "ω = {}", omega);
    }
}

fn assert_enclosed(symbol: &BlochSymbol, h: &OperatorMatrix, stride: usize, label: &str) {
    let search = MuSearch::default();
    let spectrum = eig(h).unwrap();
    for e in spectrum.values.iter().step_by(stride) {
        let verdict = amoeba_membership(symbol, *e, &search);
        assert!(!verdict.zone.is_outside_amoeba(), "{label}: eigenvalue {e} judged {:?}", verdict.zone);
    }
}

/// Finite chains approach the set where the middle roots have equal modulus
/// as `L` grows.
#[test]
fn chain_eigenvalues_converge_onto_the_amoeba() {
    let worst_gap = |op: &LaurentOperator, len: usize| -> f64 {
        let spectrum = eig(&build_1d(op, len, BoundaryCondition::Open).unwrap()).unwrap();
        spectrum.values.iter().map(|e| op.roots_sorted(*e).unwrap().middle_gap()).fold(0.0, f64::max)
    };
    for op in [chain_model(), LaurentOperator::hatano_nelson(1.2, 1.1), square_axis()] {
        let (coarse, fine) = (worst_gap(&op, 20), worst_gap(&op, 40));
        assert!(fine <= coarse + 1e-9 && fine < 0.1, "{op:?}: gap {coarse:.3e} at L=20, {fine:.3e} at L=40");
    }
}

#[test]
fn square_geometries_keep_eigenvalues_in_the_amoeba() {
    let axis = square_axis();
    let symbol = BlochSymbol::Separable(axis.clone(), axis.clone());
    let hop = axis.hop_range();
    let square = separable_square(&axis, &axis, 10, BoundaryCondition::Open).unwrap();
    let cut = restrict_geometry(&square, &LatticeGeometry::corner_cut(10, 1, hop).unwrap()).unwrap();
    let disk = restrict_geometry(&square, &LatticeGeometry::disk(10, 5.0, hop).unwrap()).unwrap();
    let disordered = add_onsite(&square, &Perturbation::boundary_disorder(square.geometry(), 1.0, 3)).unwrap();
    for (label, h) in [("square", &square), ("corner cut", &cut), ("disk", &disk), ("boundary disorder", &disordered)] {
        assert_enclosed(&symbol, h, 7, label);
    }
}
