//! Generalized Brillouin zone of a one-dimensional symbol, non-Bloch spectra
//! and growth-rate predictions read off the middle characteristic roots.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::LaurentOperator;
use crate::spectra::{SpectrumCloud, SpectrumSource};

/// One GBZ sample: a middle root `beta` at energy `energy`. `branch` is 0 for
/// `β_n` and 1 for `β_{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbzPoint {
    pub beta: Complex64,
    pub energy: Complex64,
    pub branch: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbzCloud {
    pub points: Vec<GbzPoint>,
    pub symbol: LaurentOperator,
    /// Relative tolerance on `||β_n| - |β_{n+1}|| / |β_{n+1}|`.
    pub tol: f64,
}

impl GbzCloud {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn moduli(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.beta.norm())
    }

    /// The gauge `μ` for
    /// [`OperatorMatrix::gauge_transform`](crate::lattice::OperatorMatrix::gauge_transform)`([μ, 0])` that
    /// centres the cloud's moduli on the unit circle in log scale. Skin modes
    /// of the open chain are flattest there, which makes it the best
    /// conditioned gauge for [`eig_as_given`](crate::spectra::eig_as_given).
    pub fn centering_gauge(&self) -> Option<f64> {
        let (lo, hi) = self.moduli().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        (!self.is_empty() && lo > 0.0).then(|| -0.5 * (lo.ln() + hi.ln()))
    }

    /// Recomputes the roots at every sample energy and checks that the stored
    /// `β` is still a middle root satisfying the moduli condition.
    pub fn verify(&self) -> Result<bool> {
        for p in &self.points {
            let roots = self.symbol.roots_sorted(p.energy)?;
            let (lo, hi) = roots.middle();
            let stored = if p.branch == 0 { lo } else { hi };
            let scale = stored.norm().max(1.0);
            if roots.middle_gap() > self.tol || (stored - p.beta).norm() > 1e-9 * scale {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `re_beta,im_beta,re_e,im_e,branch_index` rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "re_beta,im_beta,re_e,im_e,branch_index")?;
        for p in &self.points {
            writeln!(out, "{:e},{:e},{:e},{:e},{}", p.beta.re, p.beta.im, p.energy.re, p.energy.im, p.branch)?;
        }
        Ok(())
    }
}

/// Rectangular grid of trial energies. Both axes include their endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub re_points: usize,
    pub im_points: usize,
}

impl EnergyGrid {
    pub fn points(&self) -> Vec<Complex64> {
        let axis = |(lo, hi): (f64, f64), n: usize| -> Vec<f64> {
            if n <= 1 {
                return vec![0.5 * (lo + hi)];
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        let im = axis(self.im, self.im_points);
        axis(self.re, self.re_points).into_iter().flat_map(|x| im.iter().map(move |&y| Complex64::new(x, y))).collect()
    }
}

/// Keeps the energies whose middle roots have equal moduli within `tol`;
/// both middle roots enter the cloud. An empty cloud is not an error.
pub fn gbz_1d(op: &LaurentOperator, energies: &[Complex64], tol: f64) -> Result<GbzCloud> {
    if op.n() == 0 || op.m() == 0 {
        return Err(Error::MalformedOperator(format!(
            "GBZ needs hopping in both directions (n = {}, m = {})",
            op.n(),
            op.m()
        )));
    }
    let per_energy: Vec<Option<[GbzPoint; 2]>> = energies
        .par_iter()
        .map(|&energy| {
            let roots = op.roots_sorted(energy)?;
            if roots.middle_gap() > tol {
                return Ok(None);
            }
            let (lo, hi) = roots.middle();
            Ok(Some([GbzPoint { beta: lo, energy, branch: 0 }, GbzPoint { beta: hi, energy, branch: 1 }]))
        })
        .collect::<Result<_>>()?;
    Ok(GbzCloud { points: per_energy.into_iter().flatten().flatten().collect(), symbol: op.clone(), tol })
}

/// `target(β)` for every `β` of the cloud; with `target` the symbol that
/// generated the cloud this returns the sampled energies.
pub fn nonbloch_spectrum(target: &LaurentOperator, cloud: &GbzCloud) -> Result<SpectrumCloud> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let values = cloud.points.iter().map(|p| target.eval_beta(p.beta)).collect::<Result<Vec<_>>>()?;
    let len = values.len();
    Ok(SpectrumCloud::new(values, SpectrumSource::labelled("nonbloch", len)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// `G(ω)` of the chain built from the symbol itself.
    PlainMiddleRoots,
    /// `G(ω)` of the square of that chain, combined from `±√ω`.
    SquaredFactorization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPrediction {
    pub omega: Complex64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub mechanism: Mechanism,
}

impl LambdaPrediction {
    /// Positive for a V-shaped profile.
    pub fn gap(&self) -> f64 {
        self.lambda_plus - self.lambda_minus
    }
}

/// Predicted growth rates `G(x, x₀) ~ e^{λ±(x - x₀)}` to the right (`+`) and
/// left (`-`) of the source.
pub fn lambda_pm_predict(op: &LaurentOperator, omega: Complex64, mechanism: Mechanism) -> Result<LambdaPrediction> {
    let rates = |z: Complex64| -> Result<(f64, f64)> {
        let (lo, hi) = op.roots_sorted(z)?.middle();
        Ok((lo.norm().ln(), hi.norm().ln()))
    };
    let (lambda_plus, lambda_minus) = match mechanism {
        Mechanism::PlainMiddleRoots => rates(omega)?,
        Mechanism::SquaredFactorization => {
            if omega.norm() == 0.0 {
                return Err(Error::BranchPoint);
            }
            let root = omega.sqrt();
            let (p1, m1) = rates(root)?;
            let (p2, m2) = rates(-root)?;
            (p1.max(p2), m1.min(m2))
        }
    };
    Ok(LambdaPrediction { omega, lambda_plus, lambda_minus, mechanism })
}

/// `max { n_x ln|β_x| + n_y ln|β_y| }` over the discretized equienergy line
/// `h_x(β_x) + h_y(β_y) = energy`, pairing samples whose energies add up to
/// `energy` within `energy_tol`.
pub fn equienergy_growth_rate(
    gbz_x: &GbzCloud,
    gbz_y: &GbzCloud,
    energy: Complex64,
    direction: [f64; 2],
    energy_tol: f64,
) -> Result<f64> {
    if gbz_x.is_empty() || gbz_y.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let norm = direction[0].hypot(direction[1]);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("direction {direction:?} is not a unit vector")));
    }
    let best = gbz_x
        .points
        .iter()
        .flat_map(|px| {
            gbz_y
                .points
                .iter()
                .filter(move |py| (px.energy + py.energy - energy).norm() <= energy_tol)
                .map(move |py| direction[0] * px.beta.norm().ln() + direction[1] * py.beta.norm().ln())
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(Error::NoEquienergySolution(energy));
    }
    Ok(best)
}
