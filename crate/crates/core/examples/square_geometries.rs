//! The separable square stays real; cutting corners, rounding it into a disk
//! or adding boundary disorder makes the spectrum complex.

use nonbloch::lattice::{add_onsite, restrict_geometry, separable_square, LatticeGeometry, Perturbation};
use nonbloch::spectra::eig;
use nonbloch::{BoundaryCondition, LaurentOperator};
use num_complex::Complex64;

fn main() -> nonbloch::Result<()> {
    let len = 20;
    let axis = LaurentOperator::next_nearest(1.0, Complex64::new(0.2, 0.0), Complex64::new(0.1, 0.0));
    let hop = axis.hop_range();
    let square = separable_square(&axis, &axis, len, BoundaryCondition::Open)?;

    let cases = [
        ("square", square.clone()),
        ("corner cut", restrict_geometry(&square, &LatticeGeometry::corner_cut(len, 1, hop)?)?),
        ("disk", restrict_geometry(&square, &LatticeGeometry::disk(len, len as f64 / 2.0, hop)?)?),
        ("boundary disorder", add_onsite(&square, &Perturbation::boundary_disorder(square.geometry(), 1.0, 1))?),
    ];
    for (label, h) in cases {
        let spectrum = eig(&h)?;
        println!("{label:>18}: {:4} sites, max|Im E| = {:.3e}", h.dim(), spectrum.max_abs_imag());
    }
    Ok(())
}
