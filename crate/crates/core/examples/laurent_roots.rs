//! Characteristic roots of a next-nearest-neighbour symbol and of its square.
//!
//! `cargo run --example laurent_roots -- 0.3 0.1`

use nonbloch::LaurentOperator;
use num_complex::Complex64;

fn main() -> nonbloch::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let energy = Complex64::new(args.first().copied().unwrap_or(0.3), args.get(1).copied().unwrap_or(0.1));

    let symbol = LaurentOperator::next_nearest(1.0, Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.2));
    for (label, op) in [("h", symbol.clone()), ("h^2", symbol.square())] {
        let roots = op.roots_sorted(energy)?;
        println!("{label}: powers {}..{}, E = {energy}", op.lowest_power(), op.highest_power());
        for (i, beta) in roots.roots.iter().enumerate() {
            let marker = if i + 1 == roots.n() || i == roots.n() { "  <- middle pair" } else { "" };
            println!("  |beta_{}| = {:.6}{marker}", i + 1, beta.norm());
        }
        println!("  relative middle gap {:.3e}", roots.middle_gap());
    }
    Ok(())
}
