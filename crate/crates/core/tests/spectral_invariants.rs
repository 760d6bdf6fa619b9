use nonbloch::gbz::{gbz_1d, lambda_pm_predict, nonbloch_spectrum, EnergyGrid, Mechanism};
use nonbloch::greens::{greens_profile, Cut, FitWindows};
use nonbloch::lattice::{build_1d, separable_square, BoundaryCondition, Site};
use nonbloch::spectra::{coulomb_potential, eig, eig_pairs, hausdorff};
use nonbloch::LaurentOperator;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn chain_model() -> LaurentOperator {
    LaurentOperator::next_nearest(1.0, c(0.5, 0.0), c(0.0, 0.2))
}

fn arb_symbol() -> impl Strategy<Value = LaurentOperator> {
    prop::collection::vec(((-2i32..=2), -1.5f64..1.5, -1.5f64..1.5), 2..6).prop_filter_map("two-sided symbol", |t| {
        LaurentOperator::from_triples(&t).ok().filter(|op| op.n() > 0 && op.m() > 0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenpairs_have_small_residuals(op in arb_symbol(), len in 10usize..60, two_d in any::<bool>()) {
        let h = if two_d {
            separable_square(&op, &op, len / 4 + 5, BoundaryCondition::Open).unwrap()
        } else {
            build_1d(&op, len, BoundaryCondition::Open).unwrap()
        };
        let pairs = eig_pairs(&h).unwrap();
        let bound = 1e-8 * h.norm_inf();
        let worst = pairs.residuals(&h).into_iter().fold(0.0, f64::max);
        prop_assert!(worst < bound, "residual {worst:e} vs bound {bound:e}");
    }

    #[test]
    fn potential_is_harmonic_off_spectrum(op in arb_symbol(), re in -6.0f64..6.0, im in -6.0f64..6.0) {
        let cloud = eig(&build_1d(&op, 150, BoundaryCondition::Open).unwrap()).unwrap();
        let omega = c(re, im);
        prop_assume!(cloud.distance_to(omega) >= 0.2);
        let step = 1e-2;
        let phi = |z: Complex64| coulomb_potential(&cloud, z).unwrap();
        let laplacian = (phi(omega + step) + phi(omega - step) + phi(omega + c(0.0, step)) + phi(omega - c(0.0, step))
            - 4.0 * phi(omega))
            / (step * step);
        prop_assert!(laplacian.abs() < 1e-3, "laplacian {laplacian:e}");
    }

    #[test]
    fn diagonal_gauge_keeps_the_spectrum(which in 0usize..3, len in 10usize..=60, r in 0.9f64..1.1) {
        let op = [chain_model(), LaurentOperator::hatano_nelson(1.2, 1.1), LaurentOperator::next_nearest(1.0, c(0.2, 0.0), c(0.1, 0.0))]
            [which].clone();
        let h = build_1d(&op, len, BoundaryCondition::Open).unwrap();
        let gauged = h.gauge_transform([r.ln(), 0.0]);
        let d = hausdorff(&eig(&h).unwrap().values, &eig(&gauged).unwrap().values);
        prop_assert!(d < 1e-8, "Hausdorff {d:e}");
    }

    #[test]
    fn gbz_points_reverify(op in arb_symbol(), tol in 1e-3f64..5e-2) {
        let grid = EnergyGrid { re: (-4.0, 4.0), im: (-4.0, 4.0), re_points: 81, im_points: 81 };
        let cloud = gbz_1d(&op, &grid.points(), tol).unwrap();
        prop_assert!(cloud.verify().unwrap());
        for p in &cloud.points {
            let roots = op.roots_sorted(p.energy).unwrap();
            let (lo, hi) = roots.middle();
            prop_assert!((lo.norm() - hi.norm()).abs() <= tol * hi.norm() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn gauge_covariance_of_the_gbz() {
    let op = chain_model();
    let grid = EnergyGrid { re: (-3.0, 3.5), im: (-2.0, 2.0), re_points: 651, im_points: 401 };
    let base = gbz_1d(&op, &grid.points(), 0.01).unwrap();
    let base_spectrum = nonbloch_spectrum(&op, &base).unwrap();
    for r in [0.9, 1.1] {
        let gauged = gbz_1d(&op.gauge(r), &grid.points(), 0.01).unwrap();
        // h_r(β) = h(rβ), so the roots at each energy are divided by r
        assert!(!gauged.is_empty());
        for g in &gauged.points {
            let (lo, hi) = op.roots_sorted(g.energy).unwrap().middle();
            let original = if g.branch == 0 { lo } else { hi };
            assert!((g.beta.norm() - original.norm() / r).abs() < 1e-9 * original.norm(), "r = {r}");
        }
        let spectrum = nonbloch_spectrum(&op.gauge(r), &gauged).unwrap();
        assert!(hausdorff(&spectrum.values, &base_spectrum.values) < 1e-6);
    }
}

/// Points on the outer envelope of `cloud` at distance `gap`, along rays from
/// the cloud's centroid.
fn ring_outside(cloud: &[Complex64], gap: f64, count: usize) -> Vec<Complex64> {
    let centre = cloud.iter().sum::<Complex64>() / cloud.len() as f64;
    let dist = |z: Complex64| cloud.iter().map(|e| (z - e).norm()).fold(f64::INFINITY, f64::min);
    (0..count)
        .map(|j| {
            let dir = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / count as f64);
            let mut s = 20.0;
            while dist(centre + dir * s) > gap {
                s -= 0.01;
            }
            let (mut lo, mut hi) = (s, s + 0.01);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if dist(centre + dir * mid) > gap {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            centre + dir * hi
        })
        .collect()
}

#[test]
fn plain_prediction_matches_fits_on_a_ring() {
    let op = chain_model();
    let h = build_1d(&op, 150, BoundaryCondition::Open).unwrap();
    let spectrum = eig(&h).unwrap();
    let windows = FitWindows { plus: (85, 135), minus: (15, 65), margin: 0.02 };
    for omega in ring_outside(&spectrum.values, 0.5, 20) {
        assert!((spectrum.distance_to(omega) - 0.5).abs() < 1e-6);
        let fit = greens_profile(&h, Site::chain(75), omega, Cut::X, &windows).unwrap();
        let pred = lambda_pm_predict(&op, omega, Mechanism::PlainMiddleRoots).unwrap();
        assert!(
            (fit.lambda_plus - pred.lambda_plus).abs() < 0.05 && (fit.lambda_minus - pred.lambda_minus).abs() < 0.05,
            "ω = {omega}: fit ({:.4}, {:.4}) vs prediction ({:.4}, {:.4})",
            fit.lambda_plus,
            fit.lambda_minus,
            pred.lambda_plus,
            pred.lambda_minus
        );
    }
}
