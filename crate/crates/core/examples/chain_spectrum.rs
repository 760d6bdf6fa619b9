//! Open, periodic and Bloch spectra of a single chain.
//!
//! `cargo run --example chain_spectrum -- 80`

use nonbloch::lattice::build_1d;
use nonbloch::spectra::{bloch_spectrum, eig, hausdorff};
use nonbloch::{BlochSymbol, BoundaryCondition, LaurentOperator};
use num_complex::Complex64;

fn main() -> nonbloch::Result<()> {
    let len: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(80);
    let op = LaurentOperator::next_nearest(1.0, Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.2));

    let open = eig(&build_1d(&op, len, BoundaryCondition::Open)?)?;
    let periodic = eig(&build_1d(&op, len, BoundaryCondition::Periodic)?)?;
    let bloch = bloch_spectrum(&BlochSymbol::Chain(op), 1024)?;

    println!("L = {len}");
    println!("open:     max|Im E| = {:.4}", open.max_abs_imag());
    println!("periodic: max|Im E| = {:.4}", periodic.max_abs_imag());
    println!("Hausdorff(periodic, Bloch curve) = {:.3e}", hausdorff(&periodic.values, &bloch.values));
    println!("Hausdorff(open, Bloch curve)     = {:.3e}", hausdorff(&open.values, &bloch.values));
    Ok(())
}
