//! Probe amplitude under `e^{-iHt}` for the clean square, the square with a
//! corner potential and the torus; writes the three trajectories as CSV.
//!
//! `cargo run --release --example corner_dynamics -- out_dir`

use std::fs::File;
use std::path::PathBuf;

use nonbloch::dynamics::{evolve, max_step, InitialState};
use nonbloch::lattice::{add_onsite, separable_square, Perturbation};
use nonbloch::{BoundaryCondition, LaurentOperator, Site};
use num_complex::Complex64;

fn main() -> nonbloch::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "dynamics_out".into()));
    std::fs::create_dir_all(&out)?;
    let len = 30;
    let axis = LaurentOperator::next_nearest(1.0, Complex64::new(0.2, 0.0), Complex64::new(0.1, 0.0));
    let clean = separable_square(&axis, &axis, len, BoundaryCondition::Open)?;
    let corner = add_onsite(&clean, &Perturbation::corner_onsite(clean.geometry(), Complex64::new(1.0, 0.0)))?;
    let torus = separable_square(&axis, &axis, len, BoundaryCondition::Periodic)?;
    let probe = Site::new(15, 15);

    for (label, h) in [("clean", clean), ("corner", corner), ("torus", torus)] {
        let tr = evolve(&h, &InitialState::Site(probe), probe, 40.0, max_step(&h))?;
        println!("{label:>6}: late growth rate {:+.4}", tr.late_growth_rate()?);
        tr.write_csv(File::create(out.join(format!("trajectory_{label}.csv")))?)?;
    }
    Ok(())
}
