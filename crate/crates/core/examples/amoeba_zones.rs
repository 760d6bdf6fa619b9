//! Zone verdicts for a few energies: outside the Bloch spectrum, outside the
//! amoeba only, or inside it.

use nonbloch::hierarchy::{amoeba_membership, MuSearch};
use nonbloch::{BlochSymbol, LaurentOperator};
use num_complex::Complex64;

fn main() {
    let search = MuSearch::default();
    let chain = BlochSymbol::Chain(LaurentOperator::hatano_nelson(1.2, 1.1));
    let axis = LaurentOperator::next_nearest(1.0, Complex64::new(0.2, 0.0), Complex64::new(0.1, 0.0));
    let square = BlochSymbol::Separable(axis.clone(), axis);

    let cases = [
        ("chain", &chain, Complex64::new(0.5, 0.05)),
        ("chain", &chain, Complex64::new(0.5, 0.5)),
        ("square", &square, Complex64::new(0.7, 0.02)),
        ("square", &square, Complex64::new(10.0, 0.0)),
    ];
    for (label, symbol, omega) in cases {
        let v = amoeba_membership(symbol, omega, &search);
        println!(
            "{label:>6} omega = {omega}: {} (windings at mu = 0: {:?}, mu* = {:?})",
            v.zone.as_str(),
            v.windings_mu0,
            v.mu_star
        );
    }
}
