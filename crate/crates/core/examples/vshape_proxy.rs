//! Size dependence of the corner-to-corner Green's function in the square:
//! the slope of `ln |G|` against `L` is positive where the profile is V-shaped.

use nonbloch::greens::vshape_map_2d;
use nonbloch::lattice::separable_square;
use nonbloch::{BoundaryCondition, LaurentOperator};
use num_complex::Complex64;

fn main() -> nonbloch::Result<()> {
    let axis = LaurentOperator::next_nearest(1.0, Complex64::new(0.2, 0.0), Complex64::new(0.1, 0.0));
    let omegas = [Complex64::new(0.7, 0.02), Complex64::new(2.0, 0.3), Complex64::new(5.0, 0.0)];
    let map = vshape_map_2d(|l| separable_square(&axis, &axis, l, BoundaryCondition::Open), &omegas, &[20, 30, 40])?;
    for sample in &map.samples {
        let slope = sample.slope.map_or("n/a".to_owned(), |s| format!("{s:+.4}"));
        println!("omega = {}: d ln I / dL = {slope}", sample.omega);
    }
    map.write_csv(std::io::stdout().lock())?;
    Ok(())
}
