//! Eigenvalues, Bloch sampling, point-cloud metrics and the log-potential
//! `Φ(ω) = (1/L) Σ ln|ω - E_n|` with its boundary-perturbation series.

use std::f64::consts::PI;
use std::io::Write;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, GeometryKind, OperatorMatrix};
use crate::laurent::BlochSymbol;

/// Where a spectrum came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSource {
    pub label: String,
    pub geometry: Option<GeometryKind>,
    pub dim: usize,
    pub bc: Option<BoundaryCondition>,
    pub perturbation: Option<String>,
}

impl SpectrumSource {
    pub fn labelled(label: impl Into<String>, dim: usize) -> Self {
        Self { label: label.into(), geometry: None, dim, bc: None, perturbation: None }
    }

    fn of(h: &OperatorMatrix, label: &str) -> Self {
        Self {
            label: label.to_owned(),
            geometry: Some(h.geometry().kind()),
            dim: h.dim(),
            bc: Some(h.bc()),
            perturbation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCloud {
    pub values: Vec<Complex64>,
    pub source: SpectrumSource,
}

impl SpectrumCloud {
    pub fn new(values: Vec<Complex64>, source: SpectrumSource) -> Self {
        Self { values, source }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Distance from `omega` to the nearest point of the cloud.
    pub fn distance_to(&self, omega: Complex64) -> f64 {
        self.values.iter().map(|e| (omega - e).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn with_perturbation(mut self, description: impl Into<String>) -> Self {
        self.source.perturbation = Some(description.into());
        self
    }

    /// `re,im,source_tag` rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "re,im,source_tag")?;
        for z in &self.values {
            writeln!(out, "{:e},{:e},{}", z.re, z.im, self.source.label)?;
        }
        Ok(())
    }
}

/// All eigenvalues of `h` (with multiplicity), computed in the
/// [`canonical_gauge`] of `h`, so that lattice gauge transforms of `h` give
/// the same values up to rounding. Real matrices then go through the real Schur
/// route, which keeps exact conjugate symmetry.
pub fn eig(h: &OperatorMatrix) -> Result<SpectrumCloud> {
    Ok(SpectrumCloud::new(eigenvalues_of(h)?, SpectrumSource::of(h, "eig")))
}

/// Eigenvalues of `h` exactly as stored, without a gauge change. Use this
/// with a deliberately chosen gauge, such as
/// [`GbzCloud::centering_gauge`](crate::gbz::GbzCloud::centering_gauge) for
/// long non-normal chains.
pub fn eig_as_given(h: &OperatorMatrix) -> Result<SpectrumCloud> {
    Ok(SpectrumCloud::new(dense_eigenvalues(h)?, SpectrumSource::of(h, "eig")))
}

const GAUGE_TOL: f64 = 1e-13;
const GAUGE_MAX_NEWTON: usize = 100;
const GAUGE_LIMIT: f64 = 4.0;

/// The lattice gauge `μ` minimizing the Frobenius norm of
/// [`OperatorMatrix::gauge_transform`]`(μ)`.
///
/// The squared norm `Σ |h_ij|² e^{2μ·(r_i - r_j)}` is convex in `μ`, so the
/// minimizer is found by damped Newton steps on a 2x2 system. Gauging `h` by
/// `ν` shifts the minimizer by `-ν`, which makes the canonical matrix a
/// gauge invariant. Directions with no off-diagonal displacement (the `y`
/// axis of a chain) keep `μ = 0`. A matrix whose norm keeps decreasing past
/// `|μ| = 4` along some direction (for instance, one-way hopping) gets
/// `μ = 0`.
pub fn canonical_gauge(h: &OperatorMatrix) -> [f64; 2] {
    let sites = h.geometry().sites();
    let couplings: Vec<([f64; 2], f64)> = h
        .sparse_rows()
        .into_iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.into_iter().filter(move |&(j, _)| j != i).map(move |(j, v)| {
                let shift = [(sites[i].x - sites[j].x) as f64, (sites[i].y - sites[j].y) as f64];
                (shift, v.norm_sqr())
            })
        })
        .collect();
    let norm =
        |mu: [f64; 2]| -> f64 { couplings.iter().map(|(r, w)| w * (2.0 * (mu[0] * r[0] + mu[1] * r[1])).exp()).sum() };
    let mut mu = [0.0; 2];
    let mut current = norm(mu);
    for _ in 0..GAUGE_MAX_NEWTON {
        let (mut grad, mut hess) = ([0.0; 2], [[0.0; 2]; 2]);
        for (r, w) in &couplings {
            let b = w * (2.0 * (mu[0] * r[0] + mu[1] * r[1])).exp();
            for a in 0..2 {
                grad[a] += 2.0 * b * r[a];
                for c in 0..2 {
                    hess[a][c] += 4.0 * b * r[a] * r[c];
                }
            }
        }
        let active: Vec<usize> = (0..2).filter(|&a| hess[a][a] > 0.0).collect();
        let step = match active.as_slice() {
            [a] => {
                let mut step = [0.0; 2];
                step[*a] = -grad[*a] / hess[*a][*a];
                step
            }
            [_, _] => {
                let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
                if det <= 1e-12 * hess[0][0] * hess[1][1] {
                    return [0.0; 2];
                }
                [
                    -(hess[1][1] * grad[0] - hess[0][1] * grad[1]) / det,
                    -(hess[0][0] * grad[1] - hess[1][0] * grad[0]) / det,
                ]
            }
            _ => return mu,
        };
        if step[0].abs().max(step[1].abs()) <= GAUGE_TOL {
            break;
        }
        let mut t = 1.0;
        loop {
            let trial = [mu[0] + t * step[0], mu[1] + t * step[1]];
            let value = norm(trial);
            if trial.iter().any(|m| m.abs() > GAUGE_LIMIT) {
                return [0.0; 2];
            }
            if value.is_finite() && value <= current {
                mu = trial;
                current = value;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return mu;
            }
        }
    }
    mu
}

fn eigenvalues_of(h: &OperatorMatrix) -> Result<Vec<Complex64>> {
    let mu = canonical_gauge(h);
    if mu == [0.0; 2] {
        dense_eigenvalues(h)
    } else {
        dense_eigenvalues(&h.gauge_transform(mu))
    }
}

fn dense_eigenvalues(h: &OperatorMatrix) -> Result<Vec<Complex64>> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("eigenvalues of an empty matrix".into()));
    }
    let values = if h.is_real() {
        Mat::<f64>::from_fn(n, n, |i, j| h.entry(i, j).re).eigenvalues()
    } else {
        Mat::<Complex64>::from_fn(n, n, |i, j| h.entry(i, j)).eigenvalues()
    };
    values.map_err(|_| Error::EigenNonConvergence)
}

/// Eigenvalues with right eigenvectors (columns of `vectors`).
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Complex64>,
    pub vectors: Mat<Complex64>,
}

impl EigenPairs {
    /// `‖H v - E v‖ / ‖v‖` for every pair.
    pub fn residuals(&self, h: &OperatorMatrix) -> Vec<f64> {
        let hv = h.entries() * &self.vectors;
        (0..self.values.len())
            .map(|j| {
                let (mut num, mut den) = (0.0, 0.0);
                for i in 0..h.dim() {
                    let v = self.vectors[(i, j)];
                    num += (hv[(i, j)] - self.values[j] * v).norm_sqr();
                    den += v.norm_sqr();
                }
                (num / den).sqrt()
            })
            .collect()
    }
}

pub fn eig_pairs(h: &OperatorMatrix) -> Result<EigenPairs> {
    let evd = h.entries().eigen().map_err(|_| Error::EigenNonConvergence)?;
    let values = (0..h.dim()).map(|i| evd.S()[i]).collect();
    Ok(EigenPairs { values, vectors: evd.U().to_owned() })
}

/// Smallest singular value of a dense square matrix.
pub fn min_singular_value(a: &Mat<Complex64>) -> Result<f64> {
    let sv = a.singular_values().map_err(|_| Error::SvdNonConvergence)?;
    Ok(sv.last().copied().unwrap_or(0.0))
}

/// `σ_min(H - E)`: how far `energy` is from being an exact eigenvalue.
pub fn eigen_witness(h: &OperatorMatrix, energy: Complex64) -> Result<f64> {
    min_singular_value(&h.shifted(energy))
}

/// All pairwise sums `E_x + E_y` in row-major order.
pub fn separable_spectrum_2d(cloud_x: &SpectrumCloud, cloud_y: &SpectrumCloud) -> SpectrumCloud {
    let values = cloud_x.values.iter().flat_map(|&ex| cloud_y.values.iter().map(move |&ey| ex + ey)).collect();
    SpectrumCloud::new(values, SpectrumSource::labelled("separable_sum", cloud_x.source.dim * cloud_y.source.dim))
}

/// Symbol values on a uniform `grid`-point k-mesh per axis.
pub fn bloch_spectrum(symbol: &BlochSymbol, grid: usize) -> Result<SpectrumCloud> {
    if grid < 64 {
        return Err(Error::InvalidArgument(format!("Bloch grid {grid} < 64")));
    }
    let ks: Vec<f64> = (0..grid).map(|j| 2.0 * PI * j as f64 / grid as f64).collect();
    let values: Vec<Complex64> = match symbol {
        BlochSymbol::Chain(h) => ks.iter().map(|&k| h.eval_k(k)).collect(),
        BlochSymbol::Separable(hx, hy) => {
            let vx: Vec<Complex64> = ks.iter().map(|&k| hx.eval_k(k)).collect();
            let vy: Vec<Complex64> = ks.iter().map(|&k| hy.eval_k(k)).collect();
            vx.iter().flat_map(|&a| vy.iter().map(move |&b| a + b)).collect()
        }
    };
    Ok(SpectrumCloud::new(values, SpectrumSource::labelled("bloch", grid.pow(symbol.dim() as u32))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudMetrics {
    pub max_imag_a: f64,
    pub hausdorff: f64,
    pub centroid_shift: f64,
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let directed = |p: &[Complex64], q: &[Complex64]| {
        p.iter().map(|x| q.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn centroid(values: &[Complex64]) -> Complex64 {
    values.iter().sum::<Complex64>() / values.len() as f64
}

pub fn cloud_metrics(a: &SpectrumCloud, b: &SpectrumCloud) -> Result<CloudMetrics> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(CloudMetrics {
        max_imag_a: a.max_imag(),
        hausdorff: hausdorff(&a.values, &b.values),
        centroid_shift: (centroid(&a.values) - centroid(&b.values)).norm(),
    })
}

/// Dense-solver roundoff measured against an exactly known spectrum: the
/// larger of the dense cloud's `max |Im E|` and its largest distance to the
/// nearest exact eigenvalue.
pub fn noise_floor(dense: &SpectrumCloud, exact: &SpectrumCloud) -> f64 {
    let drift = dense.values.iter().map(|&e| exact.distance_to(e)).fold(0.0, f64::max);
    dense.max_abs_imag().max(drift)
}

/// `Φ(ω) = (1/L) Σ_n ln|ω - E_n|`.
pub fn coulomb_potential(cloud: &SpectrumCloud, omega: Complex64) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let distance = cloud.distance_to(omega);
    if distance <= 1e-12 {
        return Err(Error::SingularPotential { omega, distance });
    }
    Ok(cloud.values.iter().map(|e| (omega - e).norm().ln()).sum::<f64>() / cloud.len() as f64)
}

/// `Φ(ω) = (1/L) ln|det(ω - H)|` from an LU factorization; unlike the
/// eigenvalue route this stays accurate for strongly non-normal `H`.
pub fn log_det_potential(h: &OperatorMatrix, omega: Complex64) -> Result<f64> {
    let lu = h.shifted(omega).partial_piv_lu();
    let u = lu.U();
    let mut sum = 0.0;
    for i in 0..h.dim() {
        let pivot = u[(i, i)].norm();
        if pivot == 0.0 {
            return Err(Error::SingularPotential { omega, distance: 0.0 });
        }
        sum += pivot.ln();
    }
    Ok(sum / h.dim() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub omega: Complex64,
    pub phi: f64,
    /// `[δΦ⁽¹⁾, δΦ⁽²⁾]`.
    pub series_terms: Vec<f64>,
    pub converged: bool,
}

impl PotentialReport {
    pub fn write_json(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// First two terms of `δΦ = (1/L) Re Tr ln(1 + G δB)`, the change of the
/// potential when `H` is replaced by `H - δB` with `δB = Σ_r v_r |r><r|`.
///
/// `g_block[(a, b)]` is `G(r_a, r_b; ω)` on the perturbed sites and
/// `values[a]` the matching `v_{r_a}`. For `δB = δ(|1><1| + |L><L|)` this
/// gives `δΦ⁽¹⁾ = (δ/L) Re[G₁₁ + G_LL]` and
/// `δΦ⁽²⁾ = -(δ²/2L) Re[G₁₁² + G_LL² + 2 G₁L G_L1]`.
pub fn perturbation_series(
    omega: Complex64,
    phi: f64,
    g_block: &Mat<Complex64>,
    values: &[Complex64],
    system_size: usize,
    tolerance: f64,
) -> Result<PotentialReport> {
    let k = values.len();
    if g_block.nrows() != k || g_block.ncols() != k {
        return Err(Error::Incompatible(format!(
            "{}x{} Green's block for {k} perturbed sites",
            g_block.nrows(),
            g_block.ncols()
        )));
    }
    let l = system_size as f64;
    // M = G δB restricted to the perturbed sites
    let m = Mat::<Complex64>::from_fn(k, k, |a, b| g_block[(a, b)] * values[b]);
    let trace1: Complex64 = (0..k).map(|a| m[(a, a)]).sum();
    let trace2: Complex64 = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).map(|(a, b)| m[(a, b)] * m[(b, a)]).sum();
    let first = trace1.re / l;
    let second = -trace2.re / (2.0 * l);
    let converged = second.abs() <= tolerance * first.abs().max(1.0);
    Ok(PotentialReport { omega, phi, series_terms: vec![first, second], converged })
}
