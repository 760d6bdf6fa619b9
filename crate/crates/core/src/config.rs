//! Scenario configuration files.
//!
//! A config is a TOML document with a top-level `scenario` tag and three
//! optional tables: `[model]`, `[geometry]` and `[numerics]`. Any knob left
//! out takes the scenario's default, so `scenario = "fig1_spectra"` alone is
//! a complete config. [`validate_config`] parses the file and resolves it
//! into a [`Plan`] holding every concrete value the runner will use. Nothing
//! is computed before the whole plan validates.
//!
//! ```toml
//! scenario = "fig2_dynamics"
//! seed = 7
//!
//! [model]
//! preset = "next_nearest_square"   # next_nearest_chain | next_nearest_square | nearest_square | hatano_nelson
//! s1 = [0.2, 0.0]                  # preset overrides: t, s1, s2 (complex as [re, im]), a, b
//!
//! [geometry]
//! size = 40
//!
//! [numerics]
//! horizon = 40.0
//! ```
//!
//! Explicit symbols use `terms = [[power, re, im], ...]`, plus `y_terms` (or
//! `dim = 2` to reuse `terms`) for a separable two-dimensional model.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{Cut, FitWindows, DEFAULT_MARGIN};
use crate::lattice::{BoundaryCondition, GeometryKind, LatticeGeometry, Site};
use crate::laurent::{BlochSymbol, LaurentOperator};
use crate::spectra::bloch_spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Fig1Spectra,
    Fig1LambdaMap,
    Fig1Profiles,
    Fig2GeometrySpectra,
    Fig2VshapeMap,
    Fig2GreensMap,
    Fig2Dynamics,
    Fig2DeltaSweep,
    HierarchyTable,
    Custom,
}

impl ScenarioKind {
    pub const ALL: [Self; 10] = [
        Self::Fig1Spectra,
        Self::Fig1LambdaMap,
        Self::Fig1Profiles,
        Self::Fig2GeometrySpectra,
        Self::Fig2VshapeMap,
        Self::Fig2GreensMap,
        Self::Fig2Dynamics,
        Self::Fig2DeltaSweep,
        Self::HierarchyTable,
        Self::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig1Spectra => "fig1_spectra",
            Self::Fig1LambdaMap => "fig1_lambda_map",
            Self::Fig1Profiles => "fig1_profiles",
            Self::Fig2GeometrySpectra => "fig2_geometry_spectra",
            Self::Fig2VshapeMap => "fig2_vshape_map",
            Self::Fig2GreensMap => "fig2_greens_map",
            Self::Fig2Dynamics => "fig2_dynamics",
            Self::Fig2DeltaSweep => "fig2_delta_sweep",
            Self::HierarchyTable => "hierarchy_table",
            Self::Custom => "custom",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    fn default_preset(self) -> Option<Preset> {
        match self {
            Self::Fig1Spectra | Self::Fig1LambdaMap | Self::Fig1Profiles => Some(Preset::NextNearestChain),
            Self::HierarchyTable => Some(Preset::HatanoNelson),
            Self::Custom => None,
            _ => Some(Preset::NextNearestSquare),
        }
    }

    /// Model dimension the scenario is built for, if fixed.
    fn required_dim(self) -> Option<usize> {
        match self {
            Self::Fig1Spectra | Self::Fig1LambdaMap | Self::Fig1Profiles => Some(1),
            Self::HierarchyTable | Self::Custom => None,
            _ => Some(2),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `t(e^{ik} + e^{-ik}) + s₁e^{2ik} + s₂e^{-2ik}`, defaults `t = 1, s₁ = 0.5, s₂ = 0.2i`.
    NextNearestChain,
    /// The same form on both axes with `t = 1, s₁ = 0.2, s₂ = 0.1`.
    NextNearestSquare,
    /// `2t cos k + s₁e^{ik} + s₂e^{-ik}` on both axes, `t = 1, s₁ = 0.2, s₂ = 0.1`.
    NearestSquare,
    /// `a e^{ik} + b e^{-ik}`, defaults `a = 1.2, b = 1.1`.
    HatanoNelson,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub preset: Option<Preset>,
    pub t: Option<f64>,
    pub s1: Option<[f64; 2]>,
    pub s2: Option<[f64; 2]>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub terms: Option<Vec<(i32, f64, f64)>>,
    pub y_terms: Option<Vec<(i32, f64, f64)>>,
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub kind: Option<GeometryKind>,
    pub size: Option<usize>,
    pub cut: Option<usize>,
    pub radius: Option<f64>,
    pub bc: Option<BoundaryCondition>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub omega: Option<[f64; 2]>,
    pub omegas: Option<Vec<[f64; 2]>>,
    pub re_range: Option<[f64; 2]>,
    pub im_range: Option<[f64; 2]>,
    pub grid: Option<[usize; 2]>,
    pub sizes: Option<Vec<usize>>,
    pub source: Option<Vec<i64>>,
    pub plus_window: Option<[i64; 2]>,
    pub minus_window: Option<[i64; 2]>,
    pub shape_margin: Option<f64>,
    pub cut: Option<Cut>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub certify: Option<bool>,
    pub delta: Option<f64>,
    pub delta_decades: Option<[i32; 2]>,
    pub per_decade: Option<usize>,
    pub disorder_width: Option<f64>,
    pub gbz_grid: Option<[usize; 2]>,
    pub gbz_tol: Option<f64>,
    pub amoeba_grid: Option<[usize; 2]>,
    pub mu_range: Option<f64>,
    pub cross_check_sizes: Option<Vec<usize>>,
}

/// A config file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub svg: Option<bool>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub numerics: Numerics,
}

impl ScenarioConfig {
    /// Defaults only.
    pub fn for_scenario(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            seed: 0,
            threads: None,
            out_dir: None,
            svg: None,
            model: ModelSpec::default(),
            geometry: GeometrySpec::default(),
            numerics: Numerics::default(),
        }
    }
}

/// Rectangular `ω` grid with `points` samples per axis, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub points: [usize; 2],
}

impl Frame {
    /// Row-major over `im` (outer) then `re` (inner).
    pub fn omegas(&self) -> Vec<Complex64> {
        let axis = |r: [f64; 2], n: usize, i: usize| {
            if n == 1 {
                0.5 * (r[0] + r[1])
            } else {
                r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64
            }
        };
        (0..self.points[1])
            .flat_map(|j| {
                (0..self.points[0])
                    .map(move |i| Complex64::new(axis(self.re, self.points[0], i), axis(self.im, self.points[1], j)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryPlan {
    pub kind: GeometryKind,
    pub size: usize,
    pub cut: usize,
    pub radius: f64,
    pub bc: BoundaryCondition,
}

impl GeometryPlan {
    pub fn lattice(&self, hop_range: usize) -> Result<LatticeGeometry> {
        match self.kind {
            GeometryKind::Interval => Ok(LatticeGeometry::interval(self.size, hop_range)),
            GeometryKind::Square => Ok(LatticeGeometry::square(self.size, hop_range)),
            GeometryKind::CornerCut => LatticeGeometry::corner_cut(self.size, self.cut, hop_range),
            GeometryKind::Disk => LatticeGeometry::disk(self.size, self.radius, hop_range),
            GeometryKind::Custom => Err(Error::Config("custom geometries cannot be described in a config".into())),
        }
    }
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub svg: bool,
    pub symbol: BlochSymbol,
    pub geometry: GeometryPlan,
    pub frame: Frame,
    pub omega: Complex64,
    pub omegas: Vec<Complex64>,
    pub sizes: Vec<usize>,
    pub source: Site,
    pub windows: FitWindows,
    pub cut: Cut,
    pub horizon: f64,
    /// `None` picks half the stability bound of each operator.
    pub dt: Option<f64>,
    pub certify: bool,
    pub delta: f64,
    pub deltas: Vec<f64>,
    pub disorder_width: f64,
    pub gbz_grid: [usize; 2],
    pub gbz_tol: f64,
    pub amoeba_grid: [usize; 2],
    pub mu_range: f64,
    pub cross_check_sizes: Vec<usize>,
}

impl Plan {
    pub fn dim(&self) -> usize {
        self.symbol.dim()
    }

    /// Row sum of the bulk operator, `Σ_axes Σ_s |t_s|`.
    pub fn bulk_norm(&self) -> f64 {
        self.symbol.axes().iter().map(|h| h.coeffs().values().map(|c| c.norm()).sum::<f64>()).sum()
    }

    pub fn hop_range(&self) -> usize {
        self.symbol.axes().iter().map(|h| h.hop_range()).max().unwrap_or(0)
    }
}

/// One problem found while validating a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line of the offending key, when it appears in the file.
    pub line: Option<usize>,
    /// Dotted key path such as `geometry.size`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

impl From<Diagnostics> for Error {
    fn from(d: Diagnostics) -> Self {
        Error::Config(d.to_string())
    }
}

/// Reads and fully checks a config file.
pub fn validate_config(path: &Path) -> std::result::Result<Plan, Diagnostics> {
    let src = std::fs::read_to_string(path).map_err(|e| {
        Diagnostics(vec![Diagnostic { line: None, field: path.display().to_string(), message: e.to_string() }])
    })?;
    validate_config_str(&src, None)
}

/// Parses `src`, optionally replacing the scenario tag, and resolves it.
pub fn validate_config_str(src: &str, scenario: Option<ScenarioKind>) -> std::result::Result<Plan, Diagnostics> {
    let mut cfg = parse_config(src)?;
    if let Some(s) = scenario {
        cfg.scenario = s;
    }
    resolve(&cfg, src)
}

pub fn parse_config(src: &str) -> std::result::Result<ScenarioConfig, Diagnostics> {
    toml::from_str::<ScenarioConfig>(src).map_err(|e| {
        let line = e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1);
        let message = e.message().trim().to_owned();
        let field = match &message {
            m if m.starts_with("missing field `scenario`") => "scenario".to_owned(),
            _ => "toml".to_owned(),
        };
        Diagnostics(vec![Diagnostic { line, field, message }])
    })
}

/// Line of `table.key = ...` in `src`; top-level keys use an empty table.
fn locate(src: &str, field: &str) -> Option<usize> {
    let (table, key) = field.rsplit_once('.').unwrap_or(("", field));
    let mut current = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_owned();
            continue;
        }
        if current == table {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

struct Checker<'a> {
    src: &'a str,
    found: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.found.push(Diagnostic { line: locate(self.src, field), field: field.to_owned(), message: message.into() });
    }

    fn check(&mut self, ok: bool, field: &str, message: impl FnOnce() -> String) {
        if !ok {
            self.fail(field, message());
        }
    }

    fn range(&mut self, field: &str, r: [f64; 2]) {
        self.check(r.iter().all(|v| v.is_finite()) && r[0] < r[1], field, || {
            format!("range [{}, {}] must be finite and increasing", r[0], r[1])
        });
    }

    fn grid(&mut self, field: &str, g: [usize; 2], max: usize) {
        self.check(g.iter().all(|&n| n >= 1 && n <= max), field, || format!("grid {g:?} must lie in [1, {max}]"));
    }
}

fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn resolve_symbol(cfg: &ScenarioConfig, ck: &mut Checker<'_>) -> Option<BlochSymbol> {
    let m = &cfg.model;
    let from_terms = |field: &str, terms: &[(i32, f64, f64)], ck: &mut Checker<'_>| {
        if terms.iter().any(|t| !t.1.is_finite() || !t.2.is_finite()) {
            ck.fail(field, "coefficients must be finite");
            return None;
        }
        match LaurentOperator::from_triples(terms) {
            Ok(op) => Some(op),
            Err(e) => {
                ck.fail(field, format!("missing model coefficients ({e})"));
                None
            }
        }
    };

    if let Some(terms) = &m.terms {
        if m.preset.is_some() {
            ck.fail("model.terms", "give either `terms` or `preset`, not both");
            return None;
        }
        let x = from_terms("model.terms", terms, ck)?;
        let two_d = m.y_terms.is_some() || m.dim == Some(2);
        if let Some(d) = m.dim {
            ck.check(d == 1 || d == 2, "model.dim", || format!("dimension {d} unsupported (1 or 2)"));
            if m.y_terms.is_some() && d != 2 {
                ck.fail("model.y_terms", "y_terms needs dim = 2");
            }
        }
        return Some(if two_d {
            let y = match &m.y_terms {
                Some(t) => from_terms("model.y_terms", t, ck)?,
                None => x.clone(),
            };
            BlochSymbol::Separable(x, y)
        } else {
            BlochSymbol::Chain(x)
        });
    }
    if m.y_terms.is_some() {
        ck.fail("model.y_terms", "y_terms needs `terms` for the x axis");
    }

    let Some(preset) = m.preset.or(cfg.scenario.default_preset()) else {
        ck.fail("model.terms", "missing model coefficients: set `model.terms` or `model.preset`");
        return None;
    };
    for (name, given) in [("t", m.t), ("a", m.a), ("b", m.b)] {
        if let Some(v) = given {
            ck.check(v.is_finite(), &format!("model.{name}"), || "must be finite".into());
        }
    }
    let t = m.t.unwrap_or(1.0);
    let op = match preset {
        Preset::NextNearestChain => {
            LaurentOperator::next_nearest(t, c(m.s1.unwrap_or([0.5, 0.0])), c(m.s2.unwrap_or([0.0, 0.2])))
        }
        Preset::NextNearestSquare => {
            LaurentOperator::next_nearest(t, c(m.s1.unwrap_or([0.2, 0.0])), c(m.s2.unwrap_or([0.1, 0.0])))
        }
        Preset::NearestSquare => LaurentOperator::nearest(t, m.s1.map_or(0.2, |s| s[0]), m.s2.map_or(0.1, |s| s[0])),
        Preset::HatanoNelson => LaurentOperator::hatano_nelson(m.a.unwrap_or(1.2), m.b.unwrap_or(1.1)),
    };
    if preset == Preset::NearestSquare && (m.s1.is_some_and(|s| s[1] != 0.0) || m.s2.is_some_and(|s| s[1] != 0.0)) {
        ck.fail("model.s1", "nearest_square takes real s1 and s2");
    }
    let default_dim = match preset {
        Preset::NextNearestSquare | Preset::NearestSquare => 2,
        Preset::NextNearestChain | Preset::HatanoNelson => 1,
    };
    match m.dim.unwrap_or(default_dim) {
        1 => Some(BlochSymbol::Chain(op)),
        2 => Some(BlochSymbol::Separable(op.clone(), op)),
        d => {
            ck.fail("model.dim", format!("dimension {d} unsupported (1 or 2)"));
            None
        }
    }
}

/// Padded bounding box `(re, im)` of the Bloch spectrum.
pub fn bloch_frame(symbol: &BlochSymbol) -> ([f64; 2], [f64; 2]) {
    let grid = if symbol.dim() == 1 { 512 } else { 96 };
    let Ok(cloud) = bloch_spectrum(symbol, grid) else {
        return ([-1.0, 1.0], [-1.0, 1.0]);
    };
    let (mut re, mut im) = ([f64::INFINITY, f64::NEG_INFINITY], [f64::INFINITY, f64::NEG_INFINITY]);
    for z in &cloud.values {
        re = [re[0].min(z.re), re[1].max(z.re)];
        im = [im[0].min(z.im), im[1].max(z.im)];
    }
    let pad = 0.15 * (re[1] - re[0]).max(im[1] - im[0]).max(1.0);
    let im_half = (0.5 * (im[1] - im[0]) + pad).max(0.5);
    let im_mid = 0.5 * (im[0] + im[1]);
    ([re[0] - pad, re[1] + pad], [im_mid - im_half, im_mid + im_half])
}

/// Turns a parsed config into a [`Plan`], collecting every problem.
pub fn resolve(cfg: &ScenarioConfig, src: &str) -> std::result::Result<Plan, Diagnostics> {
    use ScenarioKind as S;
    let mut ck = Checker { src, found: Vec::new() };
    let scenario = cfg.scenario;
    let n = &cfg.numerics;

    let Some(symbol) = resolve_symbol(cfg, &mut ck) else {
        return Err(Diagnostics(ck.found));
    };
    let dim = symbol.dim();
    if let Some(d) = scenario.required_dim() {
        ck.check(d == dim, "model.dim", || format!("{scenario} needs a {d}D model, got {dim}D"));
    }
    let hop = symbol.axes().iter().map(|h| h.hop_range()).max().unwrap_or(0);
    let chain_range = symbol.axes().iter().map(|h| h.m() + h.n()).max().unwrap_or(0);

    // geometry
    let g = &cfg.geometry;
    let kind = g.kind.unwrap_or(if dim == 1 { GeometryKind::Interval } else { GeometryKind::Square });
    let kind_ok = match kind {
        GeometryKind::Interval => dim == 1,
        GeometryKind::Square | GeometryKind::CornerCut | GeometryKind::Disk => dim == 2,
        GeometryKind::Custom => false,
    };
    ck.check(kind_ok, "geometry.kind", || format!("geometry {kind:?} does not fit a {dim}D model"));
    let size = g.size.unwrap_or(match scenario {
        S::Fig1Spectra | S::Fig1LambdaMap | S::Fig1Profiles => 150,
        S::HierarchyTable | S::Custom if dim == 1 => 60,
        S::HierarchyTable | S::Custom => 20,
        S::Fig2GreensMap => 40,
        _ => 50,
    });
    let size_check = |ck: &mut Checker<'_>, field: &str, l: usize| {
        ck.check(l > chain_range, field, || Error::ChainTooShort { len: l, range: chain_range }.to_string());
    };
    size_check(&mut ck, "geometry.size", size);
    ck.check(size <= if dim == 1 { 5000 } else { 70 }, "geometry.size", || {
        format!("size {size} exceeds the dense-matrix limit ({})", if dim == 1 { 5000 } else { 70 })
    });
    let cut = g.cut.unwrap_or(1);
    ck.check(cut >= 1 && 2 * cut < size, "geometry.cut", || format!("corner cut {cut} must be in [1, L/2)"));
    let radius = g.radius.unwrap_or(size as f64 / 2.0);
    ck.check(radius.is_finite() && radius >= 1.0, "geometry.radius", || format!("radius {radius} must be >= 1"));
    let bc = g.bc.unwrap_or(BoundaryCondition::Open);
    let geometry = GeometryPlan { kind, size, cut, radius, bc };
    if bc == BoundaryCondition::Periodic {
        ck.check(matches!(kind, GeometryKind::Interval | GeometryKind::Square), "geometry.bc", || {
            "periodic boundaries need an interval or a square".into()
        });
    }

    // frame
    let default_frame = match scenario {
        S::Fig1LambdaMap => Some(([-1.0, 6.5], [-2.0, 2.0], [20, 20])),
        S::Fig2VshapeMap => Some(([-4.0, 5.0], [-0.5, 0.5], [10, 5])),
        _ => None,
    };
    let (auto_re, auto_im) = match default_frame {
        Some((re, im, _)) if n.re_range.is_none() || n.im_range.is_none() => (re, im),
        None if n.re_range.is_none() || n.im_range.is_none() => bloch_frame(&symbol),
        _ => ([0.0, 1.0], [0.0, 1.0]),
    };
    let frame = Frame {
        re: n.re_range.unwrap_or(auto_re),
        im: n.im_range.unwrap_or(auto_im),
        points: n.grid.unwrap_or(default_frame.map_or(if dim == 1 { [25, 13] } else { [12, 7] }, |f| f.2)),
    };
    ck.range("numerics.re_range", frame.re);
    ck.range("numerics.im_range", frame.im);
    ck.grid("numerics.grid", frame.points, 2000);

    let omega = c(n.omega.unwrap_or([0.7, 0.02]));
    ck.check(omega.re.is_finite() && omega.im.is_finite(), "numerics.omega", || "must be finite".into());
    let omegas: Vec<Complex64> = match (&n.omegas, scenario) {
        (Some(list), _) => list.iter().copied().map(c).collect(),
        (None, S::Fig1Profiles) => {
            vec![Complex64::new(1.5, -0.5), Complex64::new(-0.8, -1.5), Complex64::new(0.7, -0.7)]
        }
        (None, _) => Vec::new(),
    };
    ck.check(omegas.iter().all(|z| z.re.is_finite() && z.im.is_finite()), "numerics.omegas", || {
        "must be finite".into()
    });
    if scenario == S::Fig1Profiles {
        ck.check(!omegas.is_empty(), "numerics.omegas", || "at least one energy is needed".into());
    }

    // system sizes
    let sizes = n.sizes.clone().unwrap_or_else(|| match scenario {
        S::Fig2VshapeMap => vec![20, 30, 40],
        _ => vec![size],
    });
    ck.check(!sizes.is_empty(), "numerics.sizes", || "at least one size is needed".into());
    ck.check(sizes.windows(2).all(|w| w[0] < w[1]), "numerics.sizes", || "sizes must increase".into());
    for &l in &sizes {
        size_check(&mut ck, "numerics.sizes", l);
        ck.check(l <= if dim == 1 { 5000 } else { 70 }, "numerics.sizes", || format!("size {l} is too large"));
    }
    let cross_check_sizes = n.cross_check_sizes.clone().unwrap_or_else(|| match (scenario, dim) {
        (S::HierarchyTable, 1) => vec![100, 200],
        _ => Vec::new(),
    });
    ck.check(cross_check_sizes.windows(2).all(|w| w[0] < w[1]), "numerics.cross_check_sizes", || {
        "sizes must increase".into()
    });
    for &l in &cross_check_sizes {
        size_check(&mut ck, "numerics.cross_check_sizes", l);
    }

    // source and fit windows
    let centre = (size as i64 + 1) / 2;
    let source = match &n.source {
        None if dim == 1 => Site::chain(centre),
        None => Site::new(centre, centre),
        Some(v) if v.len() == dim && dim == 1 => Site::chain(v[0]),
        Some(v) if v.len() == dim => Site::new(v[0], v[1]),
        Some(v) => {
            ck.fail("numerics.source", format!("source needs {dim} coordinate(s), got {}", v.len()));
            Site::chain(centre)
        }
    };
    let in_box = |v: i64| v >= 1 && v <= size as i64;
    ck.check(in_box(source.x) && (dim == 1 || in_box(source.y)), "numerics.source", || {
        format!("source {source} lies outside the L = {size} lattice")
    });
    if let Ok(lat) = geometry.lattice(hop) {
        if kind_ok && in_box(source.x) {
            ck.check(lat.contains(source), "numerics.source", || format!("source {source} is not a lattice site"));
        }
    }
    // ten sites off the source and the ends at L = 150, shrinking with L
    let offset = (size as i64 / 15).max(3);
    let default_windows = FitWindows {
        plus: (source.x + offset, (source.x + offset + 50).min(size as i64 - offset)),
        minus: ((source.x - offset - 50).max(1 + offset), source.x - offset),
        margin: DEFAULT_MARGIN,
    };
    let to_pair = |w: [i64; 2]| (w[0], w[1]);
    let windows = FitWindows {
        plus: n.plus_window.map_or(default_windows.plus, to_pair),
        minus: n.minus_window.map_or(default_windows.minus, to_pair),
        margin: n.shape_margin.unwrap_or(DEFAULT_MARGIN),
    };
    if matches!(scenario, S::Fig1LambdaMap | S::Fig1Profiles | S::Fig2GreensMap) {
        for (field, w) in [("numerics.plus_window", windows.plus), ("numerics.minus_window", windows.minus)] {
            ck.check(w.0 < w.1 && in_box(w.0) && in_box(w.1) && w.1 - w.0 >= 9, field, || {
                format!("window [{}, {}] must span at least 10 sites inside [1, {size}]", w.0, w.1)
            });
        }
        ck.check(windows.plus.0 > source.x, "numerics.plus_window", || "must lie right of the source".into());
        ck.check(windows.minus.1 < source.x, "numerics.minus_window", || "must lie left of the source".into());
    }
    ck.check(windows.margin >= 0.0 && windows.margin.is_finite(), "numerics.shape_margin", || {
        "must be nonnegative".into()
    });
    let cut_dir = n.cut.unwrap_or(if dim == 1 { Cut::X } else { Cut::AntiDiagonal });
    if dim == 1 {
        ck.check(cut_dir == Cut::X, "numerics.cut", || "chains only support the x cut".into());
    }

    // dynamics
    let horizon = n.horizon.unwrap_or(60.0);
    ck.check(horizon.is_finite() && horizon > 0.0, "numerics.horizon", || "must be positive".into());
    let bulk: f64 = symbol.axes().iter().map(|h| h.coeffs().values().map(|c| c.norm()).sum::<f64>()).sum();
    if let Some(dt) = n.dt {
        let bound = 0.1 / bulk.max(f64::MIN_POSITIVE);
        ck.check(dt > 0.0 && dt <= bound, "numerics.dt", || Error::StepSize { dt, bound }.to_string());
        ck.check(horizon / dt <= 5.0e6, "numerics.dt", || "more than 5e6 steps".into());
    }
    let delta = n.delta.unwrap_or(1.0);
    ck.check(delta.is_finite(), "numerics.delta", || "must be finite".into());

    let decades = n.delta_decades.unwrap_or([-9, -1]);
    ck.check(decades[0] < decades[1] && decades[0] >= -16 && decades[1] <= 3, "numerics.delta_decades", || {
        format!("decades {decades:?} must increase within [-16, 3]")
    });
    let per_decade = n.per_decade.unwrap_or(5);
    ck.check((1..=50).contains(&per_decade), "numerics.per_decade", || "must lie in [1, 50]".into());
    let deltas = if decades[0] < decades[1] && per_decade >= 1 {
        crate::dynamics::log_spaced(decades[0], decades[1], per_decade)
    } else {
        Vec::new()
    };

    let disorder_width = n.disorder_width.unwrap_or(1.0);
    ck.check(disorder_width.is_finite() && disorder_width >= 0.0, "numerics.disorder_width", || {
        "must be nonnegative".into()
    });
    let gbz_grid = n.gbz_grid.unwrap_or([801, 501]);
    ck.grid("numerics.gbz_grid", gbz_grid, 20000);
    let gbz_tol = n.gbz_tol.unwrap_or(0.01);
    ck.check(gbz_tol > 0.0 && gbz_tol.is_finite(), "numerics.gbz_tol", || "must be positive".into());
    let amoeba_grid = n.amoeba_grid.unwrap_or([24, 9]);
    ck.grid("numerics.amoeba_grid", amoeba_grid, 500);
    let mu_range = n.mu_range.unwrap_or(2.0);
    ck.check(mu_range > 0.0 && mu_range.is_finite(), "numerics.mu_range", || "must be positive".into());

    if let Some(t) = cfg.threads {
        ck.check(t >= 1, "threads", || "thread count must be at least 1".into());
    }

    if !ck.found.is_empty() {
        return Err(Diagnostics(ck.found));
    }
    Ok(Plan {
        scenario,
        seed: cfg.seed,
        threads: cfg.threads,
        out_dir: cfg.out_dir.clone(),
        svg: cfg.svg.unwrap_or(true),
        symbol,
        geometry,
        frame,
        omega,
        omegas,
        sizes,
        source,
        windows,
        cut: cut_dir,
        horizon,
        dt: n.dt,
        certify: n.certify.unwrap_or(false),
        delta,
        deltas,
        disorder_width,
        gbz_grid,
        gbz_tol,
        amoeba_grid,
        mu_range,
        cross_check_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(src: &str) -> Vec<Diagnostic> {
        validate_config_str(src, None).unwrap_err().0
    }

    #[test]
    fn defaults_resolve_for_every_scenario() {
        for kind in ScenarioKind::ALL {
            let src = format!("scenario = \"{kind}\"\n");
            if kind == ScenarioKind::Custom {
                assert!(validate_config_str(&src, None).is_err());
                continue;
            }
            let plan = validate_config_str(&src, None).unwrap_or_else(|e| panic!("{kind}: {e}"));
            assert_eq!(plan.scenario, kind);
        }
    }

    #[test]
    fn fig1_defaults() {
        let plan = validate_config_str("scenario = \"fig1_lambda_map\"", None).unwrap();
        assert_eq!(plan.geometry.size, 150);
        assert_eq!(plan.source, Site::chain(75));
        assert_eq!(plan.windows.plus, (85, 135));
        assert_eq!(plan.windows.minus, (15, 65));
        assert_eq!(plan.frame.omegas().len(), 400);
        assert_eq!(plan.frame.re, [-1.0, 6.5]);
    }

    #[test]
    fn missing_coefficients_name_the_field() {
        let d = errors("scenario = \"custom\"\n[model]\ndim = 1\n");
        assert!(d.iter().any(|d| d.field == "model.terms" && d.message.contains("missing")), "{d:?}");
        let d = errors("scenario = \"custom\"\n[model]\nterms = []\n");
        assert_eq!(d[0].field, "model.terms");
        assert_eq!(d[0].line, Some(3));
    }

    #[test]
    fn short_chain_is_rejected_with_line() {
        let src = "scenario = \"fig1_profiles\"\n\n[geometry]\nsize = 3\n";
        let d = errors(src);
        let hit = d.iter().find(|d| d.field == "geometry.size").expect("size diagnostic");
        assert_eq!(hit.line, Some(4));
        assert!(hit.message.contains("shorter than the hopping range"), "{}", hit.message);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let d = errors("scenario = \"fig1_spectra\"\n[numerics]\nbogus = 1\n");
        assert_eq!(d[0].line, Some(3));
        let d = errors("scenario = \"nope\"\n");
        assert_eq!(d[0].line, Some(1));
        let d = errors("seed = 3\n");
        assert_eq!(d[0].field, "scenario");
    }

    #[test]
    fn several_problems_reported_together() {
        let src = "scenario = \"fig2_dynamics\"\nthreads = 0\n[numerics]\nhorizon = -1.0\ndt = 1.0\n";
        let d = errors(src);
        let fields: Vec<&str> = d.iter().map(|d| d.field.as_str()).collect();
        for f in ["numerics.horizon", "numerics.dt", "threads"] {
            assert!(fields.contains(&f), "{fields:?}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let d = errors("scenario = \"fig2_dynamics\"\n[model]\npreset = \"next_nearest_chain\"\n");
        assert!(d.iter().any(|d| d.field == "model.dim"));
        let d = errors("scenario = \"custom\"\n[model]\nterms = [[1, 1.0, 0.0]]\n[geometry]\nkind = \"square\"\n");
        assert!(d.iter().any(|d| d.field == "geometry.kind"));
    }

    #[test]
    fn scenario_override_and_custom_terms() {
        let src = "scenario = \"custom\"\n[model]\nterms = [[1, 1.0, 0.0], [-1, 1.0, 0.0]]\ny_terms = [[1, 0.5, 0.0], [-1, 0.5, 0.0]]\n";
        let plan = validate_config_str(src, None).unwrap();
        assert_eq!(plan.dim(), 2);
        assert!(plan.symbol.is_hermitian());
        assert_eq!(plan.geometry.kind, GeometryKind::Square);
        let over = validate_config_str("scenario = \"fig1_spectra\"", Some(ScenarioKind::Fig2DeltaSweep)).unwrap();
        assert_eq!(over.scenario, ScenarioKind::Fig2DeltaSweep);
        assert_eq!(over.deltas.len(), 41);
    }

    #[test]
    fn frame_points_cover_corners() {
        let f = Frame { re: [-1.0, 1.0], im: [0.0, 2.0], points: [3, 2] };
        let pts = f.omegas();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], Complex64::new(-1.0, 0.0));
        assert_eq!(pts[5], Complex64::new(1.0, 2.0));
    }
}
