//! End-to-end acceptance checks, printed as one PASS/FAIL line per criterion.
//! Exits nonzero if any check fails.

use std::f64::consts::PI;
use std::time::Instant;

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use nonbloch::config::Frame;
use nonbloch::dynamics::{delta_sweep, evolve, log_spaced, max_step, InitialState};
use nonbloch::fit::line_fit;
use nonbloch::gbz::{gbz_1d, lambda_pm_predict, nonbloch_spectrum, EnergyGrid, Mechanism};
use nonbloch::greens::{
    factorization_residual, greens_profile, lambda_map_1d, vshape_map_2d, Cut, FitWindows, Resolvent, Shape,
};
use nonbloch::hierarchy::{amoeba_membership, MuSearch, Zone};
use nonbloch::lattice::{
    add_onsite, build_1d, restrict_geometry, separable_square, BoundaryCondition, LatticeGeometry, Perturbation, Site,
};
use nonbloch::spectra::{eig, hausdorff, noise_floor, separable_spectrum_2d};
use nonbloch::{BlochSymbol, LaurentOperator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// `t(e^{ik} + e^{-ik}) + 0.5 e^{2ik} + 0.2i e^{-2ik}`.
fn chain_model() -> LaurentOperator {
    LaurentOperator::next_nearest(1.0, c(0.5, 0.0), c(0.0, 0.2))
}

/// Per-axis symbol of the separable square, `t = 1, s₁ = 0.2, s₂ = 0.1`.
fn square_axis() -> LaurentOperator {
    LaurentOperator::next_nearest(1.0, c(0.2, 0.0), c(0.1, 0.0))
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> nonbloch::Result<Outcome>;

fn factorization_identity() -> nonbloch::Result<Outcome> {
    let op = chain_model();
    let h = build_1d(&op, 60, BoundaryCondition::Open)?;
    let squared = h.matmul(&h)?;
    let mut worst = 0.0f64;
    let mut worst_dense = 0.0f64;
    for omega in [c(1.0, 0.5), c(-2.0, 1.0)] {
        worst = worst.max(factorization_residual(&op, 60, omega)?);
        // dense inverses of all three shifted matrices, compared entrywise
        let root = omega.sqrt();
        let inv = |a: &Mat<C>| a.partial_piv_lu().inverse();
        let lhs = inv(&squared.shifted(omega));
        let rhs = (inv(&h.shifted(root)) - inv(&h.shifted(-root))) * faer::Scale(0.5 / root);
        let scale =
            (0..60).flat_map(|i| (0..60).map(move |j| (i, j))).map(|(i, j)| lhs[(i, j)].norm()).fold(0.0, f64::max);
        let diff = (&lhs - &rhs).norm_max();
        worst_dense = worst_dense.max(diff / scale);
    }
    Ok(outcome(
        worst < 1e-10 && worst_dense < 1e-10,
        format!("residual {worst:.2e}, dense inverse check {worst_dense:.2e}"),
    ))
}

fn kronecker_oracle() -> nonbloch::Result<Outcome> {
    let axis = square_axis();
    let direct = eig(&separable_square(&axis, &axis, 8, BoundaryCondition::Open)?)?;
    let chain = eig(&build_1d(&axis, 8, BoundaryCondition::Open)?)?;
    let sums = separable_spectrum_2d(&chain, &chain);
    let d = hausdorff(&direct.values, &sums.values);
    Ok(outcome(d < 1e-8 && direct.len() == 64, format!("Hausdorff {d:.2e} over {} eigenvalues", direct.len())))
}

fn clean_square_realness() -> nonbloch::Result<Outcome> {
    let axis = square_axis();
    let chain = eig(&build_1d(&axis, 30, BoundaryCondition::Open)?)?;
    let sums = separable_spectrum_2d(&chain, &chain).max_abs_imag();
    let dense = eig(&separable_square(&axis, &axis, 20, BoundaryCondition::Open)?)?.max_abs_imag();
    Ok(outcome(sums < 1e-10 && dense < 1e-6, format!("1D sums at L=30: {sums:.2e}; dense at L=20: {dense:.2e}")))
}

fn corner_cut_fragility() -> nonbloch::Result<Outcome> {
    let axis = square_axis();
    let square = separable_square(&axis, &axis, 30, BoundaryCondition::Open)?;
    let cut = restrict_geometry(&square, &LatticeGeometry::corner_cut(30, 1, axis.hop_range())?)?;
    let cut_imag = eig(&cut)?.max_abs_imag();
    let chain = eig(&build_1d(&axis, 30, BoundaryCondition::Open)?)?;
    let floor = noise_floor(&eig(&square)?, &separable_spectrum_2d(&chain, &chain));
    Ok(outcome(cut_imag > 1e-2 && floor < 1e-8, format!("corner cut max|Im| {cut_imag:.3}, clean floor {floor:.2e}")))
}

fn real_to_complex_transition() -> nonbloch::Result<Outcome> {
    let axis = square_axis();
    let deltas = log_spaced(-9, -1, 5);
    let sweeps: Vec<_> =
        [20, 30, 40, 50].iter().map(|&l| delta_sweep(&axis, &axis, l, &deltas)).collect::<Result<_, _>>()?;
    let dc: Vec<Option<f64>> = sweeps.iter().map(|s| s.delta_c).collect();
    let at_50 = dc[3].is_some_and(|d| (1e-6..=1e-4).contains(&d));
    let small: Option<Vec<f64>> = dc[..3].iter().map(|d| d.map(f64::ln)).collect();
    let (monotone, r2) = match &small {
        Some(ln) => {
            let fit = line_fit(&[20.0, 30.0, 40.0], ln);
            (ln[0] > ln[1] && ln[1] > ln[2], fit.map_or(0.0, |f| f.r2))
        }
        None => (false, 0.0),
    };
    let fmt = |d: &Option<f64>| d.map_or("none".to_owned(), |v| format!("{v:.1e}"));
    Ok(outcome(
        at_50 && monotone && r2 > 0.9,
        format!(
            "delta_c L=20/30/40/50: {}/{}/{}/{}; ln fit r2 {r2:.3}",
            fmt(&dc[0]),
            fmt(&dc[1]),
            fmt(&dc[2]),
            fmt(&dc[3])
        ),
    ))
}

fn lambda_oracle() -> nonbloch::Result<Outcome> {
    let op = chain_model();
    let h = build_1d(&op, 150, BoundaryCondition::Open)?;
    let squared = h.matmul(&h)?;
    let frame = Frame { re: [-1.0, 6.5], im: [-2.0, 2.0], points: [20, 20] };
    let omegas = frame.omegas();
    let windows = FitWindows { plus: (85, 135), minus: (15, 65), margin: 0.02 };
    let fits = lambda_map_1d(&squared, Site::chain(75), &omegas, &windows);
    let (mut clean, mut agree, mut sign) = (0usize, 0usize, 0usize);
    for (omega, fit) in omegas.iter().zip(fits) {
        let Ok(p) = fit else { continue };
        if p.min_r2() <= 0.99 {
            continue;
        }
        clean += 1;
        let pred = lambda_pm_predict(&op, *omega, Mechanism::SquaredFactorization)?;
        if (p.lambda_plus - pred.lambda_plus).abs() < 0.05 && (p.lambda_minus - pred.lambda_minus).abs() < 0.05 {
            agree += 1;
        }
        if (p.lambda_plus - p.lambda_minus).signum() == pred.gap().signum() {
            sign += 1;
        }
    }
    let frac = agree as f64 / clean.max(1) as f64;
    let sign_frac = sign as f64 / clean.max(1) as f64;
    Ok(outcome(
        clean >= omegas.len() / 2 && frac >= 0.9 && sign_frac >= 0.95,
        format!(
            "{clean}/{} points with r2 > 0.99; agree {:.1}%, gap sign {:.1}%",
            omegas.len(),
            100.0 * frac,
            100.0 * sign_frac
        ),
    ))
}

fn plain_chain_has_no_v() -> nonbloch::Result<Outcome> {
    let op = chain_model();
    let h = build_1d(&op, 150, BoundaryCondition::Open)?;
    let spectrum = eig(&h)?;
    let windows = FitWindows { plus: (85, 135), minus: (15, 65), margin: 0.02 };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut tried, mut fitted, mut v) = (0usize, 0usize, 0usize);
    while tried < 100 {
        let omega = c(rng.random_range(-3.5..4.0), rng.random_range(-2.5..2.5));
        if spectrum.distance_to(omega) < 0.05 {
            continue;
        }
        tried += 1;
        match greens_profile(&h, Site::chain(75), omega, Cut::X, &windows) {
            Ok(p) => {
                fitted += 1;
                if p.shape == Shape::V {
                    v += 1;
                }
            }
            Err(nonbloch::Error::FitWindow(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(outcome(v == 0 && fitted >= 90, format!("{v} V-shaped of {fitted} fitted profiles ({tried} energies)")))
}

fn vshape_proxy_growth() -> nonbloch::Result<Outcome> {
    let axis = square_axis();
    let build = |l: usize| separable_square(&axis, &axis, l, BoundaryCondition::Open);
    let map = vshape_map_2d(build, &[c(0.7, 0.02), c(5.0, 0.0)], &[20, 30, 40])?;
    let inside = map.samples[0].slope.unwrap_or(f64::NAN);
    let outside = map.samples[1].slope.unwrap_or(f64::NAN);
    Ok(outcome(inside > 0.05 && outside.abs() < 0.02, format!("slope at 0.7+0.02i: {inside:.3}; at 5: {outside:.2e}")))
}

fn hierarchy_consistency() -> nonbloch::Result<Outcome> {
    let op = chain_model();
    let chain = BlochSymbol::Chain(op.clone());
    let search = MuSearch::default();
    let max_abs = |l: usize, omega: C| -> nonbloch::Result<f64> {
        let h = build_1d(&op, l, BoundaryCondition::Open)?;
        let all: Vec<usize> = (0..l).collect();
        let g = Resolvent::new(&h, omega)?.columns(&all)?;
        Ok(g.norm_max())
    };
    let mut worst_ratio = 1.0f64;
    let mut ring_ok = true;
    for j in 0..16 {
        let omega = C::from_polar(10.0, 2.0 * PI * j as f64 / 16.0);
        ring_ok &= amoeba_membership(&chain, omega, &search).zone == Zone::OutsideBloch;
        let ratio = max_abs(200, omega)? / max_abs(100, omega)?;
        worst_ratio = worst_ratio.max(ratio).max(1.0 / ratio);
    }

    let axis = square_axis();
    let square = BlochSymbol::Separable(axis.clone(), axis.clone());
    let spectrum = eig(&separable_square(&axis, &axis, 20, BoundaryCondition::Open)?)?;
    let escaped =
        spectrum.values.iter().filter(|&&e| amoeba_membership(&square, e, &search).zone.is_outside_amoeba()).count();
    Ok(outcome(
        ring_ok && worst_ratio < 2.0 && escaped == 0,
        format!(
            "ring |ω|=10 outside Bloch: {ring_ok}, max|G| ratio L=200/100 within {worst_ratio:.3}x; {escaped}/{} eigenvalues outside the amoeba",
            spectrum.len()
        ),
    ))
}

fn pbc_growth_rate() -> nonbloch::Result<Outcome> {
    let axis = square_axis();
    let clean = separable_square(&axis, &axis, 50, BoundaryCondition::Open)?;
    let corner = add_onsite(&clean, &Perturbation::corner_onsite(clean.geometry(), c(1.0, 0.0)))?;
    let torus = separable_square(&axis, &axis, 50, BoundaryCondition::Periodic)?;
    let probe = Site::new(25, 25);
    let rate = |h: &nonbloch::OperatorMatrix| -> nonbloch::Result<f64> {
        evolve(h, &InitialState::Site(probe), probe, 60.0, 0.5 * max_step(h))?.late_growth_rate()
    };
    let (r_pbc, r_clean, r_corner) = (rate(&torus)?, rate(&clean)?, rate(&corner)?);
    // largest imaginary part of the Bloch symbol, 2 * max_k 0.1 sin 2k
    let expected =
        2.0 * (0..4096).map(|j| axis.eval_k(2.0 * PI * j as f64 / 4096.0).im).fold(f64::NEG_INFINITY, f64::max);
    Ok(outcome(
        (r_pbc - expected).abs() <= 0.1 * expected && r_clean.abs() < 0.02 && r_corner > r_clean + 0.01,
        format!("torus {r_pbc:.4} (expected {expected:.4}), clean {r_clean:.4}, corner δ=1 {r_corner:.4}"),
    ))
}

fn hatano_nelson_gbz() -> nonbloch::Result<Outcome> {
    let (a, b) = (1.2, 1.1);
    let op = LaurentOperator::hatano_nelson(a, b);
    let grid = EnergyGrid { re: (-2.6, 2.6), im: (-0.05, 0.05), re_points: 1041, im_points: 11 };
    let cloud = gbz_1d(&op, &grid.points(), 1e-3)?;
    let radius = (b / a).sqrt();
    let worst = cloud.moduli().map(|m| (m - radius).abs()).fold(0.0, f64::max);
    let half = 2.0 * (a * b).sqrt();
    let segment: Vec<C> = (0..=4000).map(|i| c(-half + 2.0 * half * i as f64 / 4000.0, 0.0)).collect();
    let d = hausdorff(&nonbloch_spectrum(&op, &cloud)?.values, &segment);
    Ok(outcome(
        !cloud.is_empty() && worst < 1e-3 && d < 1e-2,
        format!(
            "{} GBZ points, max | |β| - {radius:.5} | = {worst:.2e}, Hausdorff to the interval {d:.2e}",
            cloud.len()
        ),
    ))
}

fn main() {
    let checks: [(&str, Check); 11] = [
        ("factorization identity", factorization_identity),
        ("Kronecker-sum oracle", kronecker_oracle),
        ("clean-square realness", clean_square_realness),
        ("corner-cut fragility", corner_cut_fragility),
        ("real-to-complex transition", real_to_complex_transition),
        ("λ± oracle agreement", lambda_oracle),
        ("single-band chain has no V-shape", plain_chain_has_no_v),
        ("V-shape proxy growth", vshape_proxy_growth),
        ("hierarchy consistency", hierarchy_consistency),
        ("PBC growth rate", pbc_growth_rate),
        ("GBZ radius oracle", hatano_nelson_gbz),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("criterion {id:2} {}: {name}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
