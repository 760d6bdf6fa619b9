//! Winding numbers of `ω - h(k - iμ)`, the Bloch / amoebic membership test,
//! the gauge bound on `|G|` that a certified `μ` implies, and fragile
//! zero-mode scans through the smallest singular value of `ω - H(L)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::greens::{vshape_proxy, Resolvent};
use crate::lattice::OperatorMatrix;
use crate::laurent::BlochSymbol;
use crate::spectra::min_singular_value;

/// Distance below which `ω` counts as sitting on a sampled symbol value.
const ON_SPECTRUM_ATOL: f64 = 1e-12;
/// Windings further than this from an integer are reported as unresolved.
pub const MAX_ROUNDING_GAP: f64 = 0.2;

/// Symbol values `h_i(k - iμ_i)` per axis on a uniform k-grid.
struct AxisSamples(Vec<Vec<Complex64>>);

impl AxisSamples {
    fn new(symbol: &BlochSymbol, mu: &[f64], grid: usize) -> Self {
        let ks: Vec<f64> = (0..grid).map(|j| 2.0 * PI * j as f64 / grid as f64).collect();
        Self(symbol.axes().iter().zip(mu).map(|(h, &m)| ks.iter().map(|&k| h.eval_deformed(k, m)).collect()).collect())
    }

    /// `min_k |ω - h(k - iμ)|` over the full grid.
    fn min_distance(&self, omega: Complex64) -> f64 {
        match self.0.as_slice() {
            [x] => x.iter().map(|&v| (omega - v).norm_sqr()).fold(f64::INFINITY, f64::min).sqrt(),
            [x, y] => y
                .iter()
                .map(|&vy| {
                    let shifted = omega - vy;
                    x.iter().map(|&vx| (shifted - vx).norm_sqr()).fold(f64::INFINITY, f64::min)
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt(),
            _ => unreachable!("symbols are one- or two-dimensional"),
        }
    }

    /// Phase winding of `z - samples` around the closed k-loop, in turns.
    fn loop_winding(z: Complex64, samples: &[Complex64]) -> f64 {
        let n = samples.len();
        (0..n).map(|j| ((z - samples[(j + 1) % n]) / (z - samples[j])).arg()).sum::<f64>() / (2.0 * PI)
    }

    /// Windings per axis, averaged over transverse lines. Every line must
    /// round to the same integer; otherwise `ω` sits on the filled Bloch
    /// set and `None` is returned. With `quick`, only the first transverse
    /// line is used.
    fn windings(&self, omega: Complex64, quick: bool) -> Option<Vec<f64>> {
        match self.0.as_slice() {
            [x] => Some(vec![Self::loop_winding(omega, x)]),
            [x, y] => {
                let lines = |along: &[Complex64], across: &[Complex64]| -> Option<f64> {
                    let used = if quick { &across[..1] } else { across };
                    let raw: Vec<f64> = used.iter().map(|&v| Self::loop_winding(omega - v, along)).collect();
                    let first = raw[0].round();
                    raw.iter().all(|w| w.round() == first).then(|| raw.iter().sum::<f64>() / raw.len() as f64)
                };
                Some(vec![lines(x, y)?, lines(y, x)?])
            }
            _ => unreachable!("symbols are one- or two-dimensional"),
        }
    }

    /// `⟨1/|ω - h(k - iμ)|⟩_k`.
    fn mean_inverse_distance(&self, omega: Complex64) -> f64 {
        match self.0.as_slice() {
            [x] => x.iter().map(|&v| 1.0 / (omega - v).norm()).sum::<f64>() / x.len() as f64,
            [x, y] => {
                let total: f64 =
                    y.iter().map(|&vy| x.iter().map(|&vx| 1.0 / (omega - vx - vy).norm()).sum::<f64>()).sum();
                total / (x.len() * y.len()) as f64
            }
            _ => unreachable!("symbols are one- or two-dimensional"),
        }
    }
}

/// Default k-grid: 1024 points in 1D, 128 per axis in 2D.
pub fn default_k_grid(symbol: &BlochSymbol) -> usize {
    if symbol.dim() == 1 {
        1024
    } else {
        128
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    pub values: Vec<i64>,
    /// Largest distance of a raw winding from its rounded integer.
    pub rounding_gap: f64,
    /// `min_k |ω - h(k - iμ)|` on the grid.
    pub min_distance: f64,
}

/// `W_i` of `ω - h(k - iμ)` along each axis, averaged over transverse lines.
pub fn winding(symbol: &BlochSymbol, omega: Complex64, mu: &[f64], grid: usize) -> Result<Winding> {
    check_mu(symbol, mu)?;
    let samples = AxisSamples::new(symbol, mu, grid);
    let min_distance = samples.min_distance(omega);
    if min_distance <= ON_SPECTRUM_ATOL {
        return Err(Error::OnSpectrum { omega, distance: min_distance });
    }
    let raw = samples.windings(omega, false).ok_or(Error::OnSpectrum { omega, distance: min_distance })?;
    let values: Vec<i64> = raw.iter().map(|w| w.round() as i64).collect();
    let rounding_gap = raw.iter().map(|w| (w - w.round()).abs()).fold(0.0, f64::max);
    Ok(Winding { values, rounding_gap, min_distance })
}

fn check_mu(symbol: &BlochSymbol, mu: &[f64]) -> Result<()> {
    if mu.len() != symbol.dim() {
        return Err(Error::InvalidArgument(format!("μ has {} components for a {}D symbol", mu.len(), symbol.dim())));
    }
    Ok(())
}

/// Grid search for a deformation `μ` that kills every winding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuSearch {
    /// Search box `[-range, range]^d`.
    pub range: f64,
    pub points_per_axis: usize,
    pub refine_levels: usize,
    pub zoom: f64,
    /// Off-spectrum threshold on `min_k |ω - h(k - iμ)|`.
    pub epsilon: f64,
    /// k-grid per axis; `None` picks [`default_k_grid`].
    pub k_grid: Option<usize>,
}

impl Default for MuSearch {
    fn default() -> Self {
        Self { range: 2.0, points_per_axis: 41, refine_levels: 3, zoom: 4.0, epsilon: 1e-3, k_grid: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    OutsideBloch,
    OutsideAmoebaInsideBloch,
    InsideAmoeba,
}

impl Zone {
    pub fn is_outside_amoeba(self) -> bool {
        self != Self::InsideAmoeba
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OutsideBloch => "outside_bloch",
            Self::OutsideAmoebaInsideBloch => "outside_amoeba_inside_bloch",
            Self::InsideAmoeba => "inside_amoeba",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub distance_mu0: f64,
    pub distance_mu_star: Option<f64>,
    pub rounding_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyVerdict {
    pub omega: Complex64,
    /// Windings at `μ = 0`; absent when `ω` lies on the sampled Bloch set.
    pub windings_mu0: Option<Vec<i64>>,
    pub mu_star: Option<Vec<f64>>,
    pub zone: Zone,
    pub certificates: Certificates,
    /// Set when `μ*` sits on the edge of the search box.
    pub mu_on_boundary: bool,
}

struct Candidate {
    mu: Vec<f64>,
    /// `Σ|W_i|` from the quick single-line pass, `None` on the sampled set.
    winding_size: Option<i64>,
    zero_winding: bool,
    distance: f64,
}

impl Candidate {
    fn passes(&self, epsilon: f64) -> bool {
        self.zero_winding && self.distance > epsilon
    }

    /// Ranking for refinement among failing candidates: zero windings with
    /// the largest distance first, then the smallest nonzero winding closest
    /// to the deformed set (a winding transition is nearby), then points on
    /// the set.
    fn rank(&self) -> (u8, f64, f64) {
        match (self.zero_winding, self.winding_size) {
            (true, _) => (2, self.distance, 0.0),
            (false, Some(w)) => (1, -(w as f64), -self.distance),
            (false, None) => (0, self.distance, 0.0),
        }
    }

    fn better_than(&self, other: &Self) -> bool {
        self.rank().partial_cmp(&other.rank()) == Some(std::cmp::Ordering::Greater)
    }
}

fn evaluate(symbol: &BlochSymbol, omega: Complex64, mu: Vec<f64>, grid: usize, epsilon: f64) -> Candidate {
    let samples = AxisSamples::new(symbol, &mu, grid);
    let distance = samples.min_distance(omega);
    let size = |w: &[f64]| w.iter().map(|x| x.round().abs() as i64).sum::<i64>();
    let winding_size = if distance > ON_SPECTRUM_ATOL { samples.windings(omega, true).map(|w| size(&w)) } else { None };
    // the full transverse average only runs once the single-line pass and
    // the distance test both allow a pass
    let zero_winding =
        winding_size == Some(0) && distance > epsilon && samples.windings(omega, false).is_some_and(|w| size(&w) == 0);
    Candidate { mu, winding_size, zero_winding, distance }
}

fn axis_points(center: f64, half_width: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![center];
    }
    (0..n).map(|i| center - half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect()
}

fn mesh(dim: usize, axis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if dim == 1 {
        axis[0].iter().map(|&m| vec![m]).collect()
    } else {
        axis[0].iter().flat_map(|&a| axis[1].iter().map(move |&b| vec![a, b])).collect()
    }
}

/// Zone of `ω`: outside the Bloch spectrum (μ = 0 works), outside the
/// amoebic spectrum only (some μ ≠ 0 works), or inside it (no μ found).
pub fn amoeba_membership(symbol: &BlochSymbol, omega: Complex64, search: &MuSearch) -> HierarchyVerdict {
    let dim = symbol.dim();
    let grid = search.k_grid.unwrap_or_else(|| default_k_grid(symbol));
    let zero = vec![0.0; dim];
    let at_zero = winding(symbol, omega, &zero, grid).ok();
    let distance_mu0 = AxisSamples::new(symbol, &zero, grid).min_distance(omega);
    let windings_mu0 = at_zero.as_ref().map(|w| w.values.clone());
    if let Some(w) = &at_zero {
        if w.values.iter().all(|&v| v == 0) && w.min_distance > search.epsilon {
            return HierarchyVerdict {
                omega,
                windings_mu0,
                mu_star: Some(zero),
                zone: Zone::OutsideBloch,
                certificates: Certificates {
                    distance_mu0,
                    distance_mu_star: Some(distance_mu0),
                    rounding_gap: Some(w.rounding_gap),
                },
                mu_on_boundary: false,
            };
        }
    }

    let axis = vec![axis_points(0.0, search.range, search.points_per_axis); dim];
    let mut best: Option<Candidate> = None;
    let mut found: Option<Candidate> = None;
    for mu in mesh(dim, &axis) {
        let cand = evaluate(symbol, omega, mu, grid, search.epsilon);
        if cand.passes(search.epsilon) && found.as_ref().is_none_or(|f| cand.distance > f.distance) {
            found = Some(cand);
            continue;
        }
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            best = Some(cand);
        }
    }

    let mut spacing = 2.0 * search.range / (search.points_per_axis.max(2) - 1) as f64;
    let mut level = 0;
    while found.is_none() && level < search.refine_levels {
        let Some(centre) = best.take() else { break };
        let half = spacing;
        spacing /= search.zoom;
        let local: Vec<Vec<f64>> = centre.mu.iter().map(|&m| axis_points(m, half, 9)).collect();
        best = Some(centre);
        for mu in mesh(dim, &local) {
            if mu.iter().any(|m| m.abs() > search.range) {
                continue;
            }
            let cand = evaluate(symbol, omega, mu, grid, search.epsilon);
            if cand.passes(search.epsilon) {
                if found.as_ref().is_none_or(|f| cand.distance > f.distance) {
                    found = Some(cand);
                }
            } else if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                best = Some(cand);
            }
        }
        level += 1;
    }

    match found {
        Some(c) => {
            let rounding_gap = winding(symbol, omega, &c.mu, grid).ok().map(|w| w.rounding_gap);
            let mu_on_boundary = c.mu.iter().any(|m| (m.abs() - search.range).abs() < 1e-12);
            HierarchyVerdict {
                omega,
                windings_mu0,
                zone: Zone::OutsideAmoebaInsideBloch,
                certificates: Certificates { distance_mu0, distance_mu_star: Some(c.distance), rounding_gap },
                mu_star: Some(c.mu),
                mu_on_boundary,
            }
        }
        None => HierarchyVerdict {
            omega,
            windings_mu0,
            mu_star: None,
            zone: Zone::InsideAmoeba,
            certificates: Certificates { distance_mu0, distance_mu_star: None, rounding_gap: None },
            mu_on_boundary: false,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeBoundReport {
    pub mu: Vec<f64>,
    /// `⟨1/|ω - h(k - iμ)|⟩_k`.
    pub constant: f64,
    /// `max |G(r, r')| / (e^{μ·(r - r')} C)` over the probed pairs.
    pub max_ratio: f64,
    /// `max(0, max_ratio - 1)`.
    pub max_violation: f64,
    pub bound_holds: bool,
    pub pairs_checked: usize,
}

/// Checks `|G(r, r'; ω)| ≤ e^{μ·(r - r')} ⟨1/|ω - h(k - iμ)|⟩_k` on the
/// finite lattice. Sources are all sites up to 64 of them, evenly spaced
/// beyond that; every row is compared.
pub fn gauge_bound_check(
    h: &OperatorMatrix,
    symbol: &BlochSymbol,
    omega: Complex64,
    mu: &[f64],
    search: &MuSearch,
) -> Result<GaugeBoundReport> {
    check_mu(symbol, mu)?;
    let grid = search.k_grid.unwrap_or_else(|| default_k_grid(symbol));
    let invalid = |reason: String| Error::InvalidMuCertificate { mu: mu.to_vec(), reason };
    let w = winding(symbol, omega, mu, grid).map_err(|e| invalid(e.to_string()))?;
    if w.values.iter().any(|&v| v != 0) {
        return Err(invalid(format!("windings {:?} are not all zero", w.values)));
    }
    if w.min_distance <= search.epsilon {
        return Err(invalid(format!("distance {:e} to the deformed Bloch set is below ε", w.min_distance)));
    }
    let constant = AxisSamples::new(symbol, mu, grid).mean_inverse_distance(omega);

    let n = h.dim();
    let stride = n.div_ceil(64).max(1);
    let sources: Vec<usize> = (0..n).step_by(stride).collect();
    let g = Resolvent::new(h, omega)?.columns(&sources)?;
    let sites = h.geometry().sites();
    let mu2 = [mu[0], mu.get(1).copied().unwrap_or(0.0)];
    let mut max_ratio = 0.0f64;
    for (j, &src) in sources.iter().enumerate() {
        for (i, r) in sites.iter().enumerate() {
            let dx = (r.x - sites[src].x) as f64;
            let dy = (r.y - sites[src].y) as f64;
            let envelope = (mu2[0] * dx + mu2[1] * dy).exp() * constant;
            max_ratio = max_ratio.max(g[(i, j)].norm() / envelope);
        }
    }
    Ok(GaugeBoundReport {
        mu: mu.to_vec(),
        constant,
        max_ratio,
        max_violation: (max_ratio - 1.0).max(0.0),
        bound_holds: max_ratio <= 1.0,
        pairs_checked: sources.len() * n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragileModeScan {
    pub omega: Complex64,
    pub sizes: Vec<usize>,
    pub sigma_min: Vec<f64>,
    /// Slope of `ln σ_min` against `L`.
    pub decay_rate: f64,
    pub r2: f64,
}

/// `σ_min(ω - H(L))` over increasing sizes with its exponential rate.
pub fn fragile_mode_scan<F>(build: F, omega: Complex64, sizes: &[usize]) -> Result<FragileModeScan>
where
    F: Fn(usize) -> Result<OperatorMatrix> + Sync,
{
    if sizes.len() < 3 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("need at least 3 increasing sizes, got {sizes:?}")));
    }
    let sigma_min =
        sizes.par_iter().map(|&l| min_singular_value(&build(l)?.shifted(omega))).collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = sizes.iter().map(|&l| l as f64).collect();
    let ys: Vec<f64> = sigma_min.iter().map(|s| s.max(f64::MIN_POSITIVE).ln()).collect();
    let fit = line_fit(&xs, &ys).expect("distinct sizes");
    Ok(FragileModeScan { omega, sizes: sizes.to_vec(), sigma_min, decay_rate: fit.slope, r2: fit.r2 })
}

/// Largest `|G(r, r')|` with `r'` on the boundary.
pub fn max_boundary_greens(h: &OperatorMatrix, omega: Complex64) -> Result<f64> {
    let g = h.geometry();
    let rows: Vec<usize> = g.boundary_sites().iter().map(|&s| g.index_of(s).expect("boundary site")).collect();
    let cols = Resolvent::new(h, omega)?.columns(&rows)?;
    let mut best = 0.0f64;
    for j in 0..rows.len() {
        for i in 0..h.dim() {
            best = best.max(cols[(i, j)].norm());
        }
    }
    Ok(best)
}

/// Finite-lattice evidence for a verdict, gathered on a family `H(L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckOutcome {
    /// `max|G|(L_max) / max|G|(L_min)` outside the Bloch spectrum, the slope
    /// of `ln I(ω)` against `L` between Bloch and amoebic spectra.
    pub metric: f64,
    pub consistent: bool,
}

pub struct CrossCheck<F> {
    pub build: F,
    pub sizes: Vec<usize>,
    /// Largest `ln I` slope accepted outside the amoebic spectrum.
    pub margin: f64,
}

impl<F> CrossCheck<F>
where
    F: Fn(usize) -> Result<OperatorMatrix> + Sync,
{
    fn run(&self, zone: Zone, omega: Complex64) -> Result<Option<CrossCheckOutcome>> {
        match zone {
            Zone::InsideAmoeba => Ok(None),
            Zone::OutsideBloch => {
                let first = max_boundary_greens(&(self.build)(self.sizes[0])?, omega)?;
                let last = max_boundary_greens(&(self.build)(*self.sizes.last().expect("sizes"))?, omega)?;
                let metric = last / first;
                Ok(Some(CrossCheckOutcome { metric, consistent: metric < 2.0 && metric > 0.5 }))
            }
            Zone::OutsideAmoebaInsideBloch => {
                let ys = self
                    .sizes
                    .iter()
                    .map(|&l| vshape_proxy(&(self.build)(l)?, omega).map(f64::ln))
                    .collect::<Result<Vec<f64>>>()?;
                let xs: Vec<f64> = self.sizes.iter().map(|&l| l as f64).collect();
                let metric = line_fit(&xs, &ys).map_or(0.0, |f| f.slope);
                Ok(Some(CrossCheckOutcome { metric, consistent: metric <= self.margin }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedPoint {
    pub verdict: HierarchyVerdict,
    pub cross_check: Option<CrossCheckOutcome>,
}

/// Verdicts for every `ω`, in input order, optionally cross-checked.
pub fn hierarchy_classify<F>(
    symbol: &BlochSymbol,
    omegas: &[Complex64],
    search: &MuSearch,
    cross_check: Option<&CrossCheck<F>>,
) -> Result<Vec<ClassifiedPoint>>
where
    F: Fn(usize) -> Result<OperatorMatrix> + Sync,
{
    if let Some(cc) = cross_check {
        if cc.sizes.is_empty() {
            return Err(Error::InvalidArgument("cross-check needs at least one size".into()));
        }
    }
    omegas
        .par_iter()
        .map(|&omega| {
            let verdict = amoeba_membership(symbol, omega, search);
            let cross_check = match cross_check {
                Some(cc) => cc.run(verdict.zone, omega)?,
                None => None,
            };
            Ok(ClassifiedPoint { verdict, cross_check })
        })
        .collect()
}

/// `re_omega,im_omega,zone,w_x,w_y,mu_x,mu_y,distance_mu0,distance_mu_star` rows.
pub fn write_verdicts_csv(points: &[ClassifiedPoint], mut out: impl Write) -> Result<()> {
    writeln!(out, "re_omega,im_omega,zone,w_x,w_y,mu_x,mu_y,distance_mu0,distance_mu_star")?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:e}"));
    for p in points {
        let v = &p.verdict;
        let w = |i: usize| v.windings_mu0.as_ref().and_then(|w| w.get(i)).map_or_else(String::new, |x| x.to_string());
        let m = |i: usize| opt(v.mu_star.as_ref().and_then(|m| m.get(i)).copied());
        writeln!(
            out,
            "{:e},{:e},{},{},{},{},{},{:e},{}",
            v.omega.re,
            v.omega.im,
            v.zone.as_str(),
            w(0),
            w(1),
            m(0),
            m(1),
            v.certificates.distance_mu0,
            opt(v.certificates.distance_mu_star)
        )?;
    }
    Ok(())
}
