//! Resolvent columns `G(·, x₀; ω) = (ω - H)⁻¹ e_{x₀}`, growth-rate fits and
//! shape classification, the two-dimensional V-shape proxy and the
//! `±√ω` factorization check.

use std::io::Write;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{line_fit, LineFit};
use crate::lattice::{build_1d, BoundaryCondition, OperatorMatrix, Perturbation, Site};
use crate::laurent::LaurentOperator;
use crate::spectra::{log_det_potential, perturbation_series, PotentialReport};

/// Backward-error bound accepted for a resolvent solve.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;
/// Default shape-classification margin (per site).
pub const DEFAULT_MARGIN: f64 = 0.02;
/// Sites with `|G|` below this are dropped before fitting.
pub const UNDERFLOW_GUARD: f64 = 1e-280;
/// Largest side length at which the V-shape proxy uses every boundary site.
pub const FULL_BOUNDARY_MAX_SIDE: i64 = 40;

/// An LU factorization of `ω - H`, shared by all column solves at one `ω`.
pub struct Resolvent<'a> {
    h: &'a OperatorMatrix,
    omega: Complex64,
    shifted: Mat<Complex64>,
    lu: PartialPivLu<Complex64>,
    norm: f64,
}

impl<'a> Resolvent<'a> {
    pub fn new(h: &'a OperatorMatrix, omega: Complex64) -> Result<Self> {
        let shifted = h.shifted(omega);
        let lu = shifted.partial_piv_lu();
        let pivots: Vec<f64> = (0..h.dim()).map(|i| lu.U()[(i, i)].norm()).collect();
        let largest = pivots.iter().cloned().fold(0.0, f64::max);
        let smallest = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
        if smallest == 0.0 || smallest < f64::EPSILON * largest * 1e-2 {
            return Err(Error::NearSpectrum { omega, condition: largest / smallest });
        }
        let norm = inf_norm(&shifted);
        Ok(Self { h, omega, shifted, lu, norm })
    }

    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    pub fn operator(&self) -> &OperatorMatrix {
        self.h
    }

    /// Columns `G(·, r; ω)` for the given row indices, one output column per
    /// source, each checked against the backward-error bound.
    pub fn columns(&self, sources: &[usize]) -> Result<Mat<Complex64>> {
        let n = self.h.dim();
        let rhs = Mat::<Complex64>::from_fn(n, sources.len(), |i, j| {
            if i == sources[j] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let g = self.lu.solve(&rhs);
        let residual = &self.shifted * &g - &rhs;
        for j in 0..sources.len() {
            let g_norm = (0..n).map(|i| g[(i, j)].norm()).fold(0.0, f64::max);
            let r_norm = (0..n).map(|i| residual[(i, j)].norm()).fold(0.0, f64::max);
            if !g_norm.is_finite() || r_norm > SOLVE_RESIDUAL_TOL * g_norm * self.norm {
                return Err(Error::NearSpectrum { omega: self.omega, condition: g_norm * self.norm });
            }
        }
        Ok(g)
    }

    pub fn column(&self, source: usize) -> Result<Vec<Complex64>> {
        let g = self.columns(&[source])?;
        Ok((0..self.h.dim()).map(|i| g[(i, 0)]).collect())
    }
}

fn inf_norm(a: &Mat<Complex64>) -> f64 {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn site_index(h: &OperatorMatrix, site: Site) -> Result<usize> {
    h.geometry().index_of(site).ok_or(Error::SiteNotInGeometry(vec![site.x, site.y]))
}

/// `G(r, source; ω)` for every site `r`, in the geometry's row order.
pub fn greens_column(h: &OperatorMatrix, source: Site, omega: Complex64) -> Result<Vec<Complex64>> {
    Resolvent::new(h, omega)?.column(site_index(h, source)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    V,
    Lambda,
    Directional,
    Flat,
}

impl Shape {
    pub fn classify(lambda_plus: f64, lambda_minus: f64, margin: f64) -> Self {
        if lambda_plus > margin && lambda_minus < -margin {
            Self::V
        } else if lambda_plus < -margin && lambda_minus > margin {
            Self::Lambda
        } else if lambda_plus.abs() < margin && lambda_minus.abs() < margin {
            Self::Flat
        } else {
            Self::Directional
        }
    }
}

/// A straight line of sites through the source. Positions along the cut are
/// the `x` coordinate, except for [`Cut::Y`] which uses `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cut {
    X,
    Y,
    Diagonal,
    AntiDiagonal,
}

impl Cut {
    fn step(self) -> (i64, i64) {
        match self {
            Self::X => (1, 0),
            Self::Y => (0, 1),
            Self::Diagonal => (1, 1),
            Self::AntiDiagonal => (1, -1),
        }
    }

    pub fn position(self, site: Site) -> i64 {
        match self {
            Self::Y => site.y,
            _ => site.x,
        }
    }

    /// Sites of `h`'s geometry on the line through `source`, ordered by position.
    pub fn sites(self, h: &OperatorMatrix, source: Site) -> Vec<Site> {
        let (dx, dy) = self.step();
        let g = h.geometry();
        let dy = if g.dim() == 1 { 0 } else { dy };
        let mut out = Vec::new();
        let mut s = source;
        while g.contains(s) {
            out.push(s);
            s = Site::new(s.x - dx, s.y - dy);
        }
        out.reverse();
        let mut s = Site::new(source.x + dx, source.y + dy);
        while g.contains(s) {
            out.push(s);
            s = Site::new(s.x + dx, s.y + dy);
        }
        out
    }
}

/// Inclusive position ranges on either side of the source and the
/// classification margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindows {
    pub plus: (i64, i64),
    pub minus: (i64, i64),
    pub margin: f64,
}

impl FitWindows {
    /// `[x₀ + 10, x₀ + 60]` and `[x₀ - 60, x₀ - 10]`: with `L = 150`, `x₀ = 75`
    /// these are `[85, 135]` and `[15, 65]`.
    pub fn around(source: i64) -> Self {
        Self { plus: (source + 10, source + 60), minus: (source - 60, source - 10), margin: DEFAULT_MARGIN }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensProfile {
    pub omega: Complex64,
    pub source: Site,
    pub cut: Cut,
    pub log_abs: Vec<(Site, f64)>,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub r2_plus: f64,
    pub r2_minus: f64,
    pub shape: Shape,
}

impl GreensProfile {
    pub fn min_r2(&self) -> f64 {
        self.r2_plus.min(self.r2_minus)
    }

    /// `x,y,ln_abs_g` rows (`y` is 0 on a chain).
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "x,y,ln_abs_g")?;
        for (s, v) in &self.log_abs {
            writeln!(out, "{},{},{:e}", s.x, s.y, v)?;
        }
        Ok(())
    }
}

fn window_fit(cut: Cut, samples: &[(Site, f64)], window: (i64, i64), label: &str) -> Result<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|(s, v)| {
            let p = cut.position(*s);
            p >= window.0 && p <= window.1 && *v >= UNDERFLOW_GUARD.ln()
        })
        .map(|(s, v)| (cut.position(*s) as f64, *v))
        .unzip();
    if xs.len() < 10 {
        return Err(Error::FitWindow(format!("{label} window {window:?} has {} usable sites (< 10)", xs.len())));
    }
    line_fit(&xs, &ys).ok_or_else(|| Error::FitWindow(format!("{label} window {window:?} is degenerate")))
}

/// Least-squares slopes of `ln|G|` against position on both windows.
/// `log_abs` holds `(site, ln|G(site, source)|)` along `cut`.
pub fn fit_lambda_shape(
    omega: Complex64,
    source: Site,
    cut: Cut,
    log_abs: Vec<(Site, f64)>,
    windows: &FitWindows,
) -> Result<GreensProfile> {
    let x0 = cut.position(source);
    let positions: Vec<i64> = log_abs.iter().map(|(s, _)| cut.position(*s)).collect();
    let (lo, hi) = match (positions.iter().min(), positions.iter().max()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::FitWindow("empty profile".into())),
    };
    for (name, w) in [("plus", windows.plus), ("minus", windows.minus)] {
        if w.0 > w.1 || w.1 - w.0 + 1 < 10 {
            return Err(Error::FitWindow(format!("{name} window {w:?} is shorter than 10 sites")));
        }
        if w.0 <= lo || w.1 >= hi {
            return Err(Error::FitWindow(format!("{name} window {w:?} touches the boundary of [{lo}, {hi}]")));
        }
    }
    if windows.plus.0 <= x0 || windows.minus.1 >= x0 {
        return Err(Error::FitWindow(format!(
            "windows {:?} / {:?} must lie right / left of the source at {x0}",
            windows.plus, windows.minus
        )));
    }
    let plus = window_fit(cut, &log_abs, windows.plus, "plus")?;
    let minus = window_fit(cut, &log_abs, windows.minus, "minus")?;
    // left of the source G ~ e^{λ₋ (x - x₀)} with x - x₀ < 0, so the slope is λ₋ itself
    Ok(GreensProfile {
        omega,
        source,
        cut,
        log_abs,
        lambda_plus: plus.slope,
        lambda_minus: minus.slope,
        r2_plus: plus.r2,
        r2_minus: minus.r2,
        shape: Shape::classify(plus.slope, minus.slope, windows.margin),
    })
}

/// Solves one column and fits it along `cut` through `source`.
pub fn greens_profile(
    h: &OperatorMatrix,
    source: Site,
    omega: Complex64,
    cut: Cut,
    windows: &FitWindows,
) -> Result<GreensProfile> {
    let g = greens_column(h, source, omega)?;
    let log_abs = cut
        .sites(h, source)
        .into_iter()
        .map(|s| (s, g[h.geometry().index_of(s).expect("cut sites lie in the geometry")].norm().ln()))
        .collect();
    fit_lambda_shape(omega, source, cut, log_abs, windows)
}

/// Fitted profiles for every `ω`, in input order.
pub fn lambda_map_1d(
    h: &OperatorMatrix,
    source: Site,
    omegas: &[Complex64],
    windows: &FitWindows,
) -> Vec<Result<GreensProfile>> {
    omegas.par_iter().map(|&w| greens_profile(h, source, w, Cut::X, windows)).collect()
}

fn boundary_rows(h: &OperatorMatrix) -> Vec<usize> {
    let g = h.geometry();
    let sites = g.boundary_sites();
    let side = {
        let (lo, hi) = (sites.iter().map(|s| s.x).min(), sites.iter().map(|s| s.x).max());
        match (lo, hi) {
            (Some(lo), Some(hi)) => hi - lo + 1,
            _ => 0,
        }
    };
    let step = if side <= FULL_BOUNDARY_MAX_SIDE { 1 } else { 2 };
    sites.iter().step_by(step).map(|&s| g.index_of(s).expect("boundary site")).collect()
}

/// `I(ω) = max |G(r', r) G(r, r')|` over ordered pairs of distinct boundary
/// sites. Lattices wider than 40 sites use every second boundary site.
pub fn vshape_proxy(h: &OperatorMatrix, omega: Complex64) -> Result<f64> {
    let rows = boundary_rows(h);
    if rows.len() < 2 {
        return Err(Error::InvalidArgument("V-shape proxy needs at least two boundary sites".into()));
    }
    let g = Resolvent::new(h, omega)?.columns(&rows)?;
    let mut best = 0.0f64;
    for (a, &ra) in rows.iter().enumerate() {
        for (b, &rb) in rows.iter().enumerate() {
            if a != b {
                // g[(ra, b)] = G(r_a, r_b), g[(rb, a)] = G(r_b, r_a)
                best = best.max((g[(ra, b)] * g[(rb, a)]).norm());
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VShapeSample {
    pub omega: Complex64,
    /// One value per system size: `λ₊ - λ₋` in 1D or `ln I(ω)` in 2D.
    pub values: Vec<f64>,
    /// Slope of `values` against system size, when at least three sizes exist.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VShapeMap {
    pub samples: Vec<VShapeSample>,
    pub system_sizes: Vec<usize>,
}

impl VShapeMap {
    /// `re_omega,im_omega,value,L` rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "re_omega,im_omega,value,L")?;
        for s in &self.samples {
            for (v, l) in s.values.iter().zip(&self.system_sizes) {
                writeln!(out, "{:e},{:e},{:e},{}", s.omega.re, s.omega.im, v, l)?;
            }
        }
        Ok(())
    }
}

fn size_slope(sizes: &[usize], values: &[f64]) -> Option<f64> {
    if sizes.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = sizes.iter().map(|&l| l as f64).collect();
    line_fit(&xs, values).map(|f| f.slope)
}

/// `ln I(ω)` on every `ω` for each lattice produced by `build(L)`.
pub fn vshape_map_2d<F>(build: F, omegas: &[Complex64], sizes: &[usize]) -> Result<VShapeMap>
where
    F: Fn(usize) -> Result<OperatorMatrix> + Sync,
{
    let lattices: Vec<OperatorMatrix> = sizes.iter().map(|&l| build(l)).collect::<Result<_>>()?;
    let samples = omegas
        .par_iter()
        .map(|&omega| {
            let values = lattices.iter().map(|h| vshape_proxy(h, omega).map(f64::ln)).collect::<Result<Vec<f64>>>()?;
            let slope = size_slope(sizes, &values);
            Ok(VShapeSample { omega, values, slope })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VShapeMap { samples, system_sizes: sizes.to_vec() })
}

/// `λ₊ - λ₋` from fitted profiles of one chain per size, sources at the chain
/// centre with windows from [`FitWindows::around`].
pub fn vshape_map_1d<F>(build: F, omegas: &[Complex64], sizes: &[usize]) -> Result<VShapeMap>
where
    F: Fn(usize) -> Result<OperatorMatrix> + Sync,
{
    let lattices: Vec<OperatorMatrix> = sizes.iter().map(|&l| build(l)).collect::<Result<_>>()?;
    let samples = omegas
        .par_iter()
        .map(|&omega| {
            let values = lattices
                .iter()
                .map(|h| {
                    let source = h.geometry().center_site().expect("nonempty chain");
                    let p = greens_profile(h, source, omega, Cut::X, &FitWindows::around(source.x))?;
                    Ok(p.lambda_plus - p.lambda_minus)
                })
                .collect::<Result<Vec<f64>>>()?;
            let slope = size_slope(sizes, &values);
            Ok(VShapeSample { omega, values, slope })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VShapeMap { samples, system_sizes: sizes.to_vec() })
}

/// Largest elementwise mismatch between `(ω - A)⁻¹` and
/// `(1/2√ω)[(√ω - H)⁻¹ - (-√ω - H)⁻¹]` on probe columns `{1, L/2, L}`,
/// relative to the largest entry of `(ω - A)⁻¹`. The identity is exact for
/// `A = H²`.
pub fn factorization_residual_for(h: &OperatorMatrix, lhs: &OperatorMatrix, omega: Complex64) -> Result<f64> {
    if omega.norm() == 0.0 {
        return Err(Error::BranchPoint);
    }
    if lhs.dim() != h.dim() {
        return Err(Error::Incompatible(format!("dimensions {} and {}", lhs.dim(), h.dim())));
    }
    let n = h.dim();
    let probes = [0, n / 2, n - 1];
    let root = omega.sqrt();
    let g_lhs = Resolvent::new(lhs, omega)?.columns(&probes)?;
    let g_plus = Resolvent::new(h, root)?.columns(&probes)?;
    let g_minus = Resolvent::new(h, -root)?.columns(&probes)?;
    let scale = 0.5 / root;
    let (mut worst, mut largest) = (0.0f64, 0.0f64);
    for j in 0..probes.len() {
        for i in 0..n {
            let rhs = scale * (g_plus[(i, j)] - g_minus[(i, j)]);
            worst = worst.max((g_lhs[(i, j)] - rhs).norm());
            largest = largest.max(g_lhs[(i, j)].norm());
        }
    }
    Ok(worst / largest)
}

/// [`factorization_residual_for`] with `A = H²` for the open chain of `op`.
pub fn factorization_residual(op: &LaurentOperator, len: usize, omega: Complex64) -> Result<f64> {
    if omega.norm() == 0.0 {
        return Err(Error::BranchPoint);
    }
    let h = build_1d(op, len, BoundaryCondition::Open)?;
    let squared = h.matmul(&h)?;
    factorization_residual_for(&h, &squared, omega)
}

/// `G(r_a, r_b; ω)` restricted to the perturbed sites of `p`.
pub fn perturbed_site_block(resolvent: &Resolvent<'_>, p: &Perturbation) -> Result<Mat<Complex64>> {
    let h = resolvent.operator();
    let rows: Vec<usize> = p.site_set.iter().map(|&s| site_index(h, s)).collect::<Result<_>>()?;
    let g = resolvent.columns(&rows)?;
    Ok(Mat::from_fn(rows.len(), rows.len(), |a, b| g[(rows[a], b)]))
}

/// `Φ(ω)` of `h` with the first two terms of its change under `H → H - δB`,
/// where `δB` carries the on-site values of `p`.
pub fn potential_report(
    h: &OperatorMatrix,
    p: &Perturbation,
    omega: Complex64,
    tolerance: f64,
) -> Result<PotentialReport> {
    let resolvent = Resolvent::new(h, omega)?;
    let block = perturbed_site_block(&resolvent, p)?;
    let phi = log_det_potential(h, omega)?;
    perturbation_series(omega, phi, &block, &p.values(), h.dim(), tolerance)
}
