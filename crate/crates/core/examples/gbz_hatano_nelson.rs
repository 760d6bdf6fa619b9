//! Generalized Brillouin zone of the Hatano-Nelson chain: a circle of radius
//! `sqrt(b/a)` whose image is the real interval `[-2 sqrt(ab), 2 sqrt(ab)]`.

use nonbloch::gbz::{gbz_1d, nonbloch_spectrum, EnergyGrid};
use nonbloch::LaurentOperator;

fn main() -> nonbloch::Result<()> {
    let (a, b) = (1.2, 1.1);
    let op = LaurentOperator::hatano_nelson(a, b);
    let grid = EnergyGrid { re: (-2.6, 2.6), im: (-0.05, 0.05), re_points: 521, im_points: 11 };
    let cloud = gbz_1d(&op, &grid.points(), 1e-3)?;
    let (lo, hi) = cloud.moduli().fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
    println!("{} GBZ points, |beta| in [{lo:.5}, {hi:.5}], expected {:.5}", cloud.len(), (b / a).sqrt());

    let spectrum = nonbloch_spectrum(&op, &cloud)?;
    println!(
        "non-Bloch spectrum: max|Im E| = {:.2e}, half-width expected {:.4}",
        spectrum.max_abs_imag(),
        2.0 * (a * b).sqrt()
    );
    cloud.write_csv(std::io::stdout().lock())?;
    Ok(())
}
