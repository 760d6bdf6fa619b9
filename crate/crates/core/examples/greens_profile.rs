//! Green's function profile of the squared chain: fitted growth rates on each
//! side of the source against the prediction from the factorized resolvent.
//!
//! `cargo run --example greens_profile -- 1.5 -0.5`

use nonbloch::gbz::{lambda_pm_predict, Mechanism};
use nonbloch::greens::{greens_profile, Cut, FitWindows};
use nonbloch::lattice::build_1d;
use nonbloch::{BoundaryCondition, LaurentOperator, Site};
use num_complex::Complex64;

fn main() -> nonbloch::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let omega = Complex64::new(args.first().copied().unwrap_or(1.5), args.get(1).copied().unwrap_or(-0.5));

    let op = LaurentOperator::next_nearest(1.0, Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.2));
    let h = build_1d(&op, 150, BoundaryCondition::Open)?;
    let squared = h.matmul(&h)?;
    let windows = FitWindows { plus: (85, 135), minus: (15, 65), margin: 0.02 };

    let fit = greens_profile(&squared, Site::chain(75), omega, Cut::X, &windows)?;
    let pred = lambda_pm_predict(&op, omega, Mechanism::SquaredFactorization)?;
    println!("omega = {omega}: shape {:?}", fit.shape);
    println!("  lambda+ fit {:+.4} (r2 {:.4}), predicted {:+.4}", fit.lambda_plus, fit.r2_plus, pred.lambda_plus);
    println!("  lambda- fit {:+.4} (r2 {:.4}), predicted {:+.4}", fit.lambda_minus, fit.r2_minus, pred.lambda_minus);
    fit.write_csv(std::io::stdout().lock())?;
    Ok(())
}
