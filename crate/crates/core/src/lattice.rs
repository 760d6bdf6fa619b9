//! Real-space Hamiltonians on chains and two-dimensional geometries.
//!
//! Sites carry 1-based integer coordinates. Rows of an [`OperatorMatrix`]
//! follow the geometry's canonical site order; for squares that order is
//! row-major with `x` outer and `y` inner, so site `(x, y)` sits at row
//! `(x - 1) * L_y + (y - 1)`.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::LaurentOperator;

pub const BASIS_ORDERING: &str = "row-major: x outer, y inner; row = (x-1)*L_y + (y-1)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i64,
    pub y: i64,
}

impl Site {
    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn chain(x: i64) -> Self {
        Self { x, y: 0 }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Interval,
    Square,
    CornerCut,
    Disk,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Open,
    Periodic,
}

/// Ordered set of lattice sites with a site -> row bijection.
#[derive(Debug, Clone)]
pub struct LatticeGeometry {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    kind: GeometryKind,
    dim: usize,
    hop_range: usize,
}

impl LatticeGeometry {
    fn from_sites(sites: Vec<Site>, kind: GeometryKind, dim: usize, hop_range: usize) -> Result<Self> {
        let mut index = HashMap::with_capacity(sites.len());
        for (i, &site) in sites.iter().enumerate() {
            if index.insert(site, i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate site {site}")));
            }
        }
        Ok(Self { sites, index, kind, dim, hop_range })
    }

    pub fn interval(len: usize, hop_range: usize) -> Self {
        let sites = (1..=len as i64).map(Site::chain).collect();
        Self::from_sites(sites, GeometryKind::Interval, 1, hop_range).expect("distinct sites")
    }

    pub fn rectangle(lx: usize, ly: usize, hop_range: usize) -> Self {
        let sites = (1..=lx as i64).flat_map(|x| (1..=ly as i64).map(move |y| Site::new(x, y))).collect();
        Self::from_sites(sites, GeometryKind::Square, 2, hop_range).expect("distinct sites")
    }

    pub fn square(len: usize, hop_range: usize) -> Self {
        Self::rectangle(len, len, hop_range)
    }

    /// `len x len` square with a `cut x cut` block removed at each corner.
    pub fn corner_cut(len: usize, cut: usize, hop_range: usize) -> Result<Self> {
        if 2 * cut >= len {
            return Err(Error::InvalidArgument(format!("corner cut {cut} too large for L = {len}")));
        }
        let (lo, hi) = (cut as i64, (len - cut) as i64);
        let in_corner = |v: i64| v <= lo || v > hi;
        let sites =
            Self::square(len, hop_range).sites.into_iter().filter(|s| !(in_corner(s.x) && in_corner(s.y))).collect();
        Self::from_sites(sites, GeometryKind::CornerCut, 2, hop_range)
    }

    /// Sites of the `len x len` square with `(x-c)^2 + (y-c)^2 <= R^2`, `c = (len+1)/2`.
    pub fn disk(len: usize, radius: f64, hop_range: usize) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::InvalidArgument(format!("disk radius {radius} must be positive")));
        }
        let center = (len as f64 + 1.0) / 2.0;
        let sites: Vec<Site> = Self::square(len, hop_range)
            .sites
            .into_iter()
            .filter(|s| (s.x as f64 - center).powi(2) + (s.y as f64 - center).powi(2) <= radius * radius)
            .collect();
        if sites.is_empty() {
            return Err(Error::InvalidArgument("disk contains no sites".into()));
        }
        Self::from_sites(sites, GeometryKind::Disk, 2, hop_range)
    }

    pub fn custom(sites: Vec<Site>, dim: usize, hop_range: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidArgument(format!("dimension {dim} unsupported")));
        }
        Self::from_sites(sites, GeometryKind::Custom, dim, hop_range)
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hop_range(&self) -> usize {
        self.hop_range
    }

    pub fn index_of(&self, site: Site) -> Option<usize> {
        self.index.get(&site).copied()
    }

    pub fn contains(&self, site: Site) -> bool {
        self.index.contains_key(&site)
    }

    fn neighbor_offsets(&self) -> Vec<(i64, i64)> {
        let r = self.hop_range as i64;
        let mut out = Vec::new();
        for d in 1..=r {
            out.extend([(d, 0), (-d, 0)]);
            if self.dim == 2 {
                out.extend([(0, d), (0, -d)]);
            }
        }
        out
    }

    /// Sites with fewer in-geometry axis neighbours (within `hop_range`) than
    /// a bulk site, in canonical order.
    pub fn boundary_sites(&self) -> Vec<Site> {
        let offsets = self.neighbor_offsets();
        self.sites
            .iter()
            .copied()
            .filter(|s| offsets.iter().any(|&(dx, dy)| !self.contains(Site::new(s.x + dx, s.y + dy))))
            .collect()
    }

    /// Chain ends in 1D; the bounding-box corners present in the geometry in 2D.
    pub fn corner_sites(&self) -> Vec<Site> {
        if self.sites.is_empty() {
            return Vec::new();
        }
        let (xmin, xmax) = minmax(self.sites.iter().map(|s| s.x));
        let (ymin, ymax) = minmax(self.sites.iter().map(|s| s.y));
        let candidates = if self.dim == 1 {
            vec![Site::chain(xmin), Site::chain(xmax)]
        } else {
            vec![Site::new(xmin, ymin), Site::new(xmin, ymax), Site::new(xmax, ymin), Site::new(xmax, ymax)]
        };
        let mut out: Vec<Site> = Vec::new();
        for c in candidates {
            if self.contains(c) && !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    /// Geometric centre site `((L+1)/2, (L+1)/2)` rounded down, if present.
    pub fn center_site(&self) -> Option<Site> {
        let (xmin, xmax) = minmax(self.sites.iter().map(|s| s.x));
        let (ymin, ymax) = minmax(self.sites.iter().map(|s| s.y));
        let site = Site::new((xmin + xmax) / 2, (ymin + ymax) / 2);
        self.contains(site).then_some(site)
    }
}

fn minmax(values: impl Iterator<Item = i64>) -> (i64, i64) {
    values.fold((i64::MAX, i64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Dense complex real-space Hamiltonian on a geometry.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    entries: Mat<Complex64>,
    geometry: LatticeGeometry,
    bc: BoundaryCondition,
}

impl OperatorMatrix {
    pub fn new(entries: Mat<Complex64>, geometry: LatticeGeometry, bc: BoundaryCondition) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() != geometry.len() {
            return Err(Error::Incompatible(format!(
                "{}x{} matrix on a geometry with {} sites",
                entries.nrows(),
                entries.ncols(),
                geometry.len()
            )));
        }
        Ok(Self { entries, geometry, bc })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Mat<Complex64> {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn is_real(&self) -> bool {
        (0..self.dim()).all(|j| (0..self.dim()).all(|i| self.entries[(i, j)].im == 0.0))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (i..n).all(|j| (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm() <= tol))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.entries[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.entries.norm_l2()
    }

    /// Nonzero entries row by row, for repeated matrix-vector products.
    pub fn sparse_rows(&self) -> Vec<Vec<(usize, Complex64)>> {
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .filter_map(|j| {
                        let v = self.entries[(i, j)];
                        (v != Complex64::new(0.0, 0.0)).then_some((j, v))
                    })
                    .collect()
            })
            .collect()
    }

    /// `ω - H` as a dense matrix.
    pub fn shifted(&self, omega: Complex64) -> Mat<Complex64> {
        Mat::from_fn(self.dim(), self.dim(), |i, j| {
            let v = -self.entries[(i, j)];
            if i == j {
                v + omega
            } else {
                v
            }
        })
    }

    /// Diagonal similarity `T H T^{-1}` with `T|r> = e^{μ·r}|r>`.
    pub fn gauge_transform(&self, mu: [f64; 2]) -> Self {
        let weight = |s: Site| (mu[0] * s.x as f64 + mu[1] * s.y as f64).exp();
        let sites = self.geometry.sites();
        let entries =
            Mat::from_fn(self.dim(), self.dim(), |i, j| self.entries[(i, j)] * (weight(sites[i]) / weight(sites[j])));
        Self { entries, geometry: self.geometry.clone(), bc: self.bc }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Incompatible("dimension mismatch in product".into()));
        }
        Ok(Self { entries: &self.entries * &other.entries, geometry: self.geometry.clone(), bc: self.bc })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Incompatible("dimension mismatch in difference".into()));
        }
        Ok(Self { entries: &self.entries - &other.entries, geometry: self.geometry.clone(), bc: self.bc })
    }

    /// Writes nonzero entries as `row,col,re,im` lines (0-based indices).
    pub fn write_csv_triplets(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "row,col,re,im")?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let v = self.entries[(i, j)];
                if v != Complex64::new(0.0, 0.0) {
                    writeln!(out, "{i},{j},{:e},{:e}", v.re, v.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Toeplitz matrix `(H)_{ij} = t_{j-i}` on a chain of `len` sites.
pub fn build_1d(op: &LaurentOperator, len: usize, bc: BoundaryCondition) -> Result<OperatorMatrix> {
    let range = op.m() + op.n();
    if len <= range {
        return Err(Error::ChainTooShort { len, range });
    }
    let mut h = Mat::<Complex64>::zeros(len, len);
    for i in 0..len as i64 {
        for (&s, &t) in op.coeffs() {
            let j = i + s as i64;
            match bc {
                BoundaryCondition::Open if (0..len as i64).contains(&j) => h[(i as usize, j as usize)] += t,
                BoundaryCondition::Open => {}
                BoundaryCondition::Periodic => h[(i as usize, j.rem_euclid(len as i64) as usize)] += t,
            }
        }
    }
    OperatorMatrix::new(h, LatticeGeometry::interval(len, op.hop_range()), bc)
}

/// `H_x ⊗ I + I ⊗ H_y` on the `L_x x L_y` rectangle.
pub fn kron_sum_2d(hx: &OperatorMatrix, hy: &OperatorMatrix) -> Result<OperatorMatrix> {
    if hx.geometry.kind() != GeometryKind::Interval || hy.geometry.kind() != GeometryKind::Interval {
        return Err(Error::Incompatible("Kronecker sum needs two 1D chains".into()));
    }
    if hx.bc != hy.bc {
        return Err(Error::Incompatible("Kronecker sum operands have different boundary conditions".into()));
    }
    let (lx, ly) = (hx.dim(), hy.dim());
    let mut h = Mat::<Complex64>::zeros(lx * ly, lx * ly);
    for x in 0..lx {
        for xp in 0..lx {
            let v = hx.entries[(x, xp)];
            if v != Complex64::new(0.0, 0.0) {
                for y in 0..ly {
                    h[(x * ly + y, xp * ly + y)] += v;
                }
            }
        }
        for y in 0..ly {
            for yp in 0..ly {
                h[(x * ly + y, x * ly + yp)] += hy.entries[(y, yp)];
            }
        }
    }
    let hop = hx.geometry.hop_range().max(hy.geometry.hop_range());
    OperatorMatrix::new(h, LatticeGeometry::rectangle(lx, ly, hop), hx.bc)
}

/// Separable model `h_x(k_x) + h_y(k_y)` on an `L x L` square.
pub fn separable_square(
    hx: &LaurentOperator,
    hy: &LaurentOperator,
    len: usize,
    bc: BoundaryCondition,
) -> Result<OperatorMatrix> {
    kron_sum_2d(&build_1d(hx, len, bc)?, &build_1d(hy, len, bc)?)
}

/// Principal submatrix of `h` on the sites of `sub`, in `sub`'s order.
pub fn restrict_geometry(h: &OperatorMatrix, sub: &LatticeGeometry) -> Result<OperatorMatrix> {
    let rows: Vec<usize> = sub
        .sites()
        .iter()
        .map(|&s| h.geometry.index_of(s).ok_or_else(|| Error::SiteNotInGeometry(vec![s.x, s.y])))
        .collect::<Result<_>>()?;
    let entries = Mat::from_fn(rows.len(), rows.len(), |i, j| h.entries[(rows[i], rows[j])]);
    OperatorMatrix::new(entries, sub.clone(), h.bc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    CornerOnsite,
    BoundaryDisorder,
    CustomOnsite,
}

/// On-site boundary perturbation `Σ_r V(r) |r><r|`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    /// `δ` for corner/custom perturbations; unused for disorder.
    pub strength: Complex64,
    /// Disorder width `W`; values are drawn uniformly from `[-W/2, W/2]`.
    pub width: f64,
    pub seed: u64,
    pub site_set: Vec<Site>,
}

impl Perturbation {
    pub fn corner_onsite(geometry: &LatticeGeometry, strength: Complex64) -> Self {
        Self { kind: PerturbationKind::CornerOnsite, strength, width: 0.0, seed: 0, site_set: geometry.corner_sites() }
    }

    pub fn boundary_disorder(geometry: &LatticeGeometry, width: f64, seed: u64) -> Self {
        Self {
            kind: PerturbationKind::BoundaryDisorder,
            strength: Complex64::new(0.0, 0.0),
            width,
            seed,
            site_set: geometry.boundary_sites(),
        }
    }

    pub fn custom_onsite(sites: Vec<Site>, strength: Complex64) -> Self {
        Self { kind: PerturbationKind::CustomOnsite, strength, width: 0.0, seed: 0, site_set: sites }
    }

    /// Per-site on-site shifts in `site_set` order.
    pub fn values(&self) -> Vec<Complex64> {
        match self.kind {
            PerturbationKind::BoundaryDisorder => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                self.site_set.iter().map(|_| Complex64::new(self.width * (rng.random::<f64>() - 0.5), 0.0)).collect()
            }
            _ => vec![self.strength; self.site_set.len()],
        }
    }
}

pub fn add_onsite(h: &OperatorMatrix, p: &Perturbation) -> Result<OperatorMatrix> {
    let mut out = h.clone();
    for (site, value) in p.site_set.iter().zip(p.values()) {
        let i = h.geometry.index_of(*site).ok_or_else(|| Error::SiteNotInGeometry(vec![site.x, site.y]))?;
        out.entries[(i, i)] += value;
    }
    Ok(out)
}
