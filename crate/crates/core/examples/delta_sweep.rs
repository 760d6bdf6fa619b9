//! Smallest corner potential that makes the square's spectrum complex, for a
//! few system sizes.

use nonbloch::dynamics::{delta_sweep, log_spaced};
use nonbloch::LaurentOperator;
use num_complex::Complex64;

fn main() -> nonbloch::Result<()> {
    let axis = LaurentOperator::next_nearest(1.0, Complex64::new(0.2, 0.0), Complex64::new(0.1, 0.0));
    let deltas = log_spaced(-9, -1, 4);
    for len in [12, 16, 20] {
        let sweep = delta_sweep(&axis, &axis, len, &deltas)?;
        match sweep.delta_c {
            Some(dc) => println!("L = {len}: delta_c = {dc:.2e} (noise floor {:.1e})", sweep.noise_floor),
            None => println!("L = {len}: spectrum stays real up to delta = {:.0e}", deltas[deltas.len() - 1]),
        }
    }
    Ok(())
}
