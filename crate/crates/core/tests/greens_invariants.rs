use nonbloch::gbz::{lambda_pm_predict, Mechanism};
use nonbloch::greens::{greens_profile, Cut, FitWindows, Resolvent, Shape, SOLVE_RESIDUAL_TOL};
use nonbloch::lattice::{build_1d, separable_square, BoundaryCondition, Site};
use nonbloch::LaurentOperator;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn chain_model() -> LaurentOperator {
    LaurentOperator::next_nearest(1.0, c(0.5, 0.0), c(0.0, 0.2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn returned_columns_meet_the_backward_error_bound(
        re in -4.0f64..4.0,
        im in -3.0f64..3.0,
        len in 20usize..120,
        src in 0usize..20,
    ) {
        let h = build_1d(&chain_model(), len, BoundaryCondition::Open).unwrap();
        let omega = c(re, im);
        let Ok(resolvent) = Resolvent::new(&h, omega) else { return Ok(()) };
        let Ok(g) = resolvent.column(src) else { return Ok(()) };
        let shifted = h.shifted(omega);
        let norm = (0..len).map(|i| (0..len).map(|j| shifted[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
        let g_max = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..len {
            let mut r: Complex64 = (0..len).map(|j| shifted[(i, j)] * g[j]).sum();
            if i == src {
                r -= 1.0;
            }
            prop_assert!(r.norm() <= SOLVE_RESIDUAL_TOL * g_max * norm);
        }
    }
}

#[test]
fn plain_chain_never_amplifies_both_ways() {
    let op = chain_model();
    let h = build_1d(&op, 150, BoundaryCondition::Open).unwrap();
    let windows = FitWindows { plus: (85, 135), minus: (15, 65), margin: 0.02 };
    let mut checked = 0;
    for i in 0..15 {
        for j in 0..11 {
            let omega = c(-3.5 + 0.5 * i as f64, -2.5 + 0.5 * j as f64);
            let pred = lambda_pm_predict(&op, omega, Mechanism::PlainMiddleRoots).unwrap();
            if !matches!(Shape::classify(pred.lambda_plus, pred.lambda_minus, 0.02), Shape::Lambda | Shape::Directional)
            {
                continue;
            }
            let Ok(fit) = greens_profile(&h, Site::chain(75), omega, Cut::X, &windows) else { continue };
            assert!(
                fit.lambda_plus <= fit.lambda_minus + 0.05,
                "ω = {omega}: {} > {}",
                fit.lambda_plus,
                fit.lambda_minus
            );
            assert_ne!(fit.shape, Shape::V, "ω = {omega}");
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} energies checked");
}

#[test]
fn square_amplifies_both_ways_along_the_anti_diagonal() {
    let axis = LaurentOperator::next_nearest(1.0, c(0.2, 0.0), c(0.1, 0.0));
    let h = separable_square(&axis, &axis, 40, BoundaryCondition::Open).unwrap();
    let source = Site::new(20, 20);
    let omega = c(0.7, 0.02);
    let windows = FitWindows { plus: (23, 37), minus: (4, 17), margin: 0.02 };

    let anti = greens_profile(&h, source, omega, Cut::AntiDiagonal, &windows).unwrap();
    // rising away from the source on both sides
    assert!(anti.lambda_plus > 0.0 && anti.lambda_minus < 0.0, "{} {}", anti.lambda_plus, anti.lambda_minus);
    assert_eq!(anti.shape, Shape::V);

    for cut in [Cut::X, Cut::Y] {
        let p = greens_profile(&h, source, omega, cut, &windows).unwrap();
        let rising_right = p.lambda_plus > 0.02;
        let rising_left = p.lambda_minus < -0.02;
        assert!(rising_right != rising_left, "{cut:?}: λ+ = {}, λ- = {}", p.lambda_plus, p.lambda_minus);
    }
}
