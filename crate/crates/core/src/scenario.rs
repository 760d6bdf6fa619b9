use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{bloch_frame, Plan, ScenarioKind};
use crate::dynamics::{delta_sweep, evolve, max_step, step_certificate, InitialState, SweepResult, Trajectory};
use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::gbz::{gbz_1d, lambda_pm_predict, nonbloch_spectrum, EnergyGrid, GbzCloud, Mechanism};
use crate::greens::{greens_column, greens_profile, lambda_map_1d, vshape_proxy, GreensProfile};
use crate::hierarchy::{hierarchy_classify, write_verdicts_csv, ClassifiedPoint, CrossCheck, MuSearch, Zone};
use crate::lattice::{
    add_onsite, build_1d, restrict_geometry, separable_square, BoundaryCondition, GeometryKind, OperatorMatrix,
    Perturbation,
};
use crate::laurent::{BlochSymbol, LaurentOperator};
use crate::spectra::{bloch_spectrum, eig, eig_as_given, hausdorff, separable_spectrum_2d, SpectrumCloud};
use crate::svg::{self, Series};

/// Versions of the numerical dependencies the outputs were produced with.
pub const LINKED_VERSIONS: [(&str, &str); 3] = [("faer", "0.24"), ("num-complex", "0.4"), ("rayon", "1")];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub description: String,
}

/// Record of a run, written as `manifest.json` next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: ScenarioKind,
    pub package: String,
    pub version: String,
    pub dependencies: BTreeMap<String, String>,
    pub seed: u64,
    pub threads: usize,
    pub plan: Plan,
    pub outputs: Vec<OutputEntry>,
    pub summary: Value,
    pub started_unix_seconds: u64,
    pub finished_unix_seconds: u64,
}

impl Manifest {
    /// The manifest without its timestamps, for comparing reruns.
    pub fn without_timestamps(&self) -> Self {
        Self { started_unix_seconds: 0, finished_unix_seconds: 0, ..self.clone() }
    }
}

/// Output directory that remembers every file written through it.
struct Outputs {
    dir: PathBuf,
    entries: Vec<OutputEntry>,
    svg: bool,
}

impl Outputs {
    fn file(&mut self, name: &str, description: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let mut out = BufWriter::new(File::create(self.dir.join(name))?);
        write(&mut out)?;
        out.flush()?;
        self.entries.push(OutputEntry { file: name.to_owned(), description: description.to_owned() });
        Ok(())
    }

    fn json(&mut self, name: &str, description: &str, value: &impl Serialize) -> Result<()> {
        self.file(name, description, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn spectrum(&mut self, name: &str, cloud: &SpectrumCloud) -> Result<()> {
        let description = format!("spectrum ({}, {} values)", cloud.source.label, cloud.len());
        self.file(name, &description, |w| cloud.write_csv(w))
    }

    fn scatter(&mut self, name: &str, title: &str, axes: (&str, &str), series: &[Series]) -> Result<()> {
        if !self.svg {
            return Ok(());
        }
        self.file(name, title, |w| svg::scatter(title, axes.0, axes.1, series, w))
    }

    fn heatmap(&mut self, name: &str, title: &str, plan: &Plan, shape: (usize, usize), values: &[f64]) -> Result<()> {
        if !self.svg {
            return Ok(());
        }
        let (re, im) = (plan.frame.re, plan.frame.im);
        self.file(name, title, |w| {
            svg::heatmap(title, "Re ω", "Im ω", (re[0], re[1]), (im[0], im[1]), shape, values, w)
        })
    }
}

fn complex_points(values: &[Complex64]) -> Vec<(f64, f64)> {
    values.iter().map(|z| (z.re, z.im)).collect()
}

fn labelled(mut cloud: SpectrumCloud, label: &str) -> SpectrumCloud {
    cloud.source.label = label.to_owned();
    cloud
}

fn chain_symbol(plan: &Plan) -> &LaurentOperator {
    match &plan.symbol {
        BlochSymbol::Chain(h) => h,
        BlochSymbol::Separable(h, _) => h,
    }
}

fn axes_2d(plan: &Plan) -> Result<(&LaurentOperator, &LaurentOperator)> {
    match &plan.symbol {
        BlochSymbol::Separable(x, y) => Ok((x, y)),
        BlochSymbol::Chain(_) => Err(Error::Incompatible("scenario needs a two-dimensional model".into())),
    }
}

/// The configured operator on a lattice of side `size`.
pub fn plan_operator(plan: &Plan, size: usize) -> Result<OperatorMatrix> {
    let bc = plan.geometry.bc;
    match &plan.symbol {
        BlochSymbol::Chain(h) => build_1d(h, size, bc),
        BlochSymbol::Separable(x, y) => {
            let square = separable_square(x, y, size, bc)?;
            match plan.geometry.kind {
                GeometryKind::Square => Ok(square),
                _ => {
                    let mut geometry = plan.geometry.clone();
                    geometry.size = size;
                    restrict_geometry(&square, &geometry.lattice(plan.hop_range())?)
                }
            }
        }
    }
}

/// `H[h]²`, the square of the chain matrix, on `size` sites.
/// Open chains are diagonalized in the gauge that centres their GBZ.
fn chain_eig(h: &OperatorMatrix, gbz: &GbzCloud) -> Result<SpectrumCloud> {
    match (h.bc(), gbz.centering_gauge()) {
        (BoundaryCondition::Open, Some(mu)) => eig_as_given(&h.gauge_transform([mu, 0.0])),
        _ => eig(h),
    }
}

fn squared_chain(plan: &Plan, size: usize) -> Result<OperatorMatrix> {
    let h = build_1d(chain_symbol(plan), size, plan.geometry.bc)?;
    h.matmul(&h)
}

/// Errors that mark a single grid point as unusable rather than failing the run.
fn is_pointwise(e: &Error) -> bool {
    matches!(e, Error::NearSpectrum { .. } | Error::FitWindow(_) | Error::OnSpectrum { .. })
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs `plan`, writing its outputs and `manifest.json` into `out_dir`.
/// Uses a dedicated thread pool when the plan caps the thread count.
pub fn run_scenario(plan: &Plan, out_dir: &Path) -> Result<Manifest> {
    let run = || run_in_pool(plan, out_dir);
    match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn run_in_pool(plan: &Plan, out_dir: &Path) -> Result<Manifest> {
    let started = unix_now();
    std::fs::create_dir_all(out_dir)?;
    let mut out = Outputs { dir: out_dir.to_path_buf(), entries: Vec::new(), svg: plan.svg };
    let summary = dispatch(plan, &mut out)
        .map_err(|e| Error::Scenario { scenario: plan.scenario.to_string(), source: Box::new(e) })?;
    let manifest = Manifest {
        scenario: plan.scenario,
        package: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        dependencies: LINKED_VERSIONS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        seed: plan.seed,
        threads: rayon::current_num_threads(),
        plan: plan.clone(),
        outputs: out.entries,
        summary,
        started_unix_seconds: started,
        finished_unix_seconds: unix_now(),
    };
    let mut f = BufWriter::new(File::create(out_dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    f.flush()?;
    Ok(manifest)
}

fn dispatch(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    match plan.scenario {
        ScenarioKind::Fig1Spectra => fig1_spectra(plan, out),
        ScenarioKind::Fig1LambdaMap => fig1_lambda_map(plan, out),
        ScenarioKind::Fig1Profiles => fig1_profiles(plan, out),
        ScenarioKind::Fig2GeometrySpectra => fig2_geometry_spectra(plan, out),
        ScenarioKind::Fig2VshapeMap => fig2_vshape_map(plan, out),
        ScenarioKind::Fig2GreensMap => fig2_greens_map(plan, out),
        ScenarioKind::Fig2Dynamics => fig2_dynamics(plan, out),
        ScenarioKind::Fig2DeltaSweep => fig2_delta_sweep(plan, out),
        ScenarioKind::HierarchyTable => hierarchy_table(plan, out),
        ScenarioKind::Custom => custom(plan, out),
    }
}

fn gbz_on_frame(op: &LaurentOperator, plan: &Plan) -> Result<GbzCloud> {
    let (re, im) = bloch_frame(&BlochSymbol::Chain(op.clone()));
    let grid =
        EnergyGrid { re: (re[0], re[1]), im: (im[0], im[1]), re_points: plan.gbz_grid[0], im_points: plan.gbz_grid[1] };
    gbz_1d(op, &grid.points(), plan.gbz_tol)
}

fn gbz_series(label: &str, cloud: &GbzCloud) -> Series {
    Series::new(label, cloud.points.iter().map(|p| (p.beta.re, p.beta.im)).collect())
}

fn fig1_spectra(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let h = chain_symbol(plan);
    let h2 = h.square();
    let size = plan.geometry.size;
    let gbz_h = gbz_on_frame(h, plan)?;
    let gbz_h2 = gbz_on_frame(&h2, plan)?;
    let squared_matrix = labelled(chain_eig(&squared_chain(plan, size)?, &gbz_h)?, "matrix_squared");
    let squared_symbol = labelled(chain_eig(&build_1d(&h2, size, plan.geometry.bc)?, &gbz_h2)?, "symbol_squared");
    out.spectrum("spectrum_matrix_squared.csv", &squared_matrix)?;
    out.spectrum("spectrum_symbol_squared.csv", &squared_symbol)?;

    out.file("gbz_symbol.csv", "GBZ of the symbol", |w| gbz_h.write_csv(w))?;
    out.file("gbz_symbol_squared.csv", "GBZ of the squared symbol", |w| gbz_h2.write_csv(w))?;

    out.scatter(
        "spectra.svg",
        "spectra of H[h]^2 and H[h^2]",
        ("Re E", "Im E"),
        &[
            Series::new("H[h]^2", complex_points(&squared_matrix.values)),
            Series::new("H[h^2]", complex_points(&squared_symbol.values)),
        ],
    )?;
    out.scatter(
        "gbz.svg",
        "generalized Brillouin zones",
        ("Re β", "Im β"),
        &[gbz_series("h", &gbz_h), gbz_series("h^2", &gbz_h2)],
    )?;
    Ok(json!({
        "size": size,
        "max_abs_imag_matrix_squared": squared_matrix.max_abs_imag(),
        "max_abs_imag_symbol_squared": squared_symbol.max_abs_imag(),
        "hausdorff_between_spectra": hausdorff(&squared_matrix.values, &squared_symbol.values),
        "gbz_points": {"symbol": gbz_h.len(), "symbol_squared": gbz_h2.len()},
    }))
}

/// Fitted profile next to the factorization prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMapRow {
    pub omega: Complex64,
    pub fit: Option<GreensProfile>,
    pub predicted: Option<(f64, f64)>,
    pub status: String,
}

fn lambda_rows(plan: &Plan, omegas: &[Complex64]) -> Result<Vec<LambdaMapRow>> {
    let a = squared_chain(plan, plan.geometry.size)?;
    let fits = lambda_map_1d(&a, plan.source, omegas, &plan.windows);
    omegas
        .iter()
        .zip(fits)
        .map(|(&omega, fit)| {
            let predicted = match lambda_pm_predict(chain_symbol(plan), omega, Mechanism::SquaredFactorization) {
                Ok(p) => Some((p.lambda_plus, p.lambda_minus)),
                Err(Error::BranchPoint) => None,
                Err(e) => return Err(e),
            };
            match fit {
                Ok(p) => Ok(LambdaMapRow { omega, fit: Some(p), predicted, status: "ok".into() }),
                Err(e) if is_pointwise(&e) => Ok(LambdaMapRow { omega, fit: None, predicted, status: e.to_string() }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

fn fig1_lambda_map(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let omegas = plan.frame.omegas();
    let rows = lambda_rows(plan, &omegas)?;
    out.file("lambda_map.csv", "fitted and predicted λ± on the ω grid", |w| {
        writeln!(w, "re_omega,im_omega,lambda_plus,lambda_minus,r2_plus,r2_minus,shape,pred_plus,pred_minus,status")?;
        for r in &rows {
            let (lp, lm, rp, rm, shape) = r.fit.as_ref().map_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN, ""), |p| {
                (p.lambda_plus, p.lambda_minus, p.r2_plus, p.r2_minus, shape_name(p))
            });
            let (pp, pm) = r.predicted.unwrap_or((f64::NAN, f64::NAN));
            writeln!(
                w,
                "{:e},{:e},{lp:e},{lm:e},{rp:e},{rm:e},{shape},{pp:e},{pm:e},\"{}\"",
                r.omega.re, r.omega.im, r.status
            )?;
        }
        Ok(())
    })?;

    let shape = (plan.frame.points[0], plan.frame.points[1]);
    let fitted_gap: Vec<f64> =
        rows.iter().map(|r| r.fit.as_ref().map_or(f64::NAN, |p| p.lambda_plus - p.lambda_minus)).collect();
    let predicted_gap: Vec<f64> = rows.iter().map(|r| r.predicted.map_or(f64::NAN, |(p, m)| p - m)).collect();
    out.heatmap("lambda_gap_fitted.svg", "fitted λ+ - λ-", plan, shape, &fitted_gap)?;
    out.heatmap("lambda_gap_predicted.svg", "predicted λ+ - λ-", plan, shape, &predicted_gap)?;

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let (mut clean, mut agree, mut sign_agree) = (0usize, 0usize, 0usize);
    for r in &rows {
        let Some(p) = &r.fit else {
            *counts.entry("unfitted").or_default() += 1;
            continue;
        };
        *counts.entry(shape_name(p)).or_default() += 1;
        if let (Some((pp, pm)), true) = (r.predicted, p.min_r2() > 0.99) {
            clean += 1;
            if (p.lambda_plus - pp).abs() < 0.05 && (p.lambda_minus - pm).abs() < 0.05 {
                agree += 1;
            }
            if (p.lambda_plus - p.lambda_minus).signum() == (pp - pm).signum() {
                sign_agree += 1;
            }
        }
    }
    Ok(json!({
        "points": rows.len(),
        "shapes": counts,
        "well_fitted": clean,
        "agree_within_0.05": agree,
        "gap_sign_agree": sign_agree,
    }))
}

fn shape_name(p: &GreensProfile) -> &'static str {
    match p.shape {
        crate::greens::Shape::V => "v",
        crate::greens::Shape::Lambda => "lambda",
        crate::greens::Shape::Directional => "directional",
        crate::greens::Shape::Flat => "flat",
    }
}

fn fig1_profiles(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let rows = lambda_rows(plan, &plan.omegas)?;
    let mut series = Vec::new();
    let mut summary = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let Some(p) = &r.fit else {
            summary.push(json!({"omega": [r.omega.re, r.omega.im], "status": r.status}));
            continue;
        };
        out.file(&format!("profile_{i}.csv"), &format!("ln|G| through the source at ω = {}", r.omega), |w| {
            p.write_csv(w)
        })?;
        series.push(Series::new(
            format!("ω = {:.2}{:+.2}i ({})", r.omega.re, r.omega.im, shape_name(p)),
            p.log_abs.iter().map(|(s, v)| (s.x as f64, *v)).collect(),
        ));
        summary.push(json!({
            "omega": [r.omega.re, r.omega.im],
            "shape": shape_name(p),
            "lambda_plus": p.lambda_plus,
            "lambda_minus": p.lambda_minus,
            "r2": [p.r2_plus, p.r2_minus],
            "predicted": r.predicted,
        }));
    }
    out.json("profiles.json", "fits and predictions per energy", &summary)?;
    out.scatter("profiles.svg", "Green's function profiles of H[h]^2", ("x", "ln|G(x, x0)|"), &series)?;
    Ok(json!({ "profiles": summary }))
}

fn search(plan: &Plan) -> MuSearch {
    MuSearch { range: plan.mu_range, ..MuSearch::default() }
}

type Builder = fn(usize) -> Result<OperatorMatrix>;

fn classify(plan: &Plan, omegas: &[Complex64], with_cross_check: bool) -> Result<Vec<ClassifiedPoint>> {
    if with_cross_check && !plan.cross_check_sizes.is_empty() {
        let cc = CrossCheck {
            build: |l: usize| plan_operator(plan, l),
            sizes: plan.cross_check_sizes.clone(),
            margin: 0.02,
        };
        hierarchy_classify(&plan.symbol, omegas, &search(plan), Some(&cc))
    } else {
        hierarchy_classify(&plan.symbol, omegas, &search(plan), None::<&CrossCheck<Builder>>)
    }
}

fn zone_series(points: &[ClassifiedPoint]) -> Vec<Series> {
    [Zone::InsideAmoeba, Zone::OutsideAmoebaInsideBloch, Zone::OutsideBloch]
        .into_iter()
        .map(|z| {
            let pts = points.iter().filter(|p| p.verdict.zone == z).map(|p| (p.verdict.omega.re, p.verdict.omega.im));
            Series::new(z.as_str(), pts.collect())
        })
        .collect()
}

fn zone_counts(points: &[ClassifiedPoint]) -> BTreeMap<&'static str, usize> {
    let mut counts = BTreeMap::new();
    for p in points {
        *counts.entry(p.verdict.zone.as_str()).or_default() += 1;
    }
    counts
}

fn fig2_geometry_spectra(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let (hx, hy) = axes_2d(plan)?;
    let size = plan.geometry.size;
    let square = separable_square(hx, hy, size, BoundaryCondition::Open)?;
    let periodic = separable_spectrum_2d(
        &eig(&build_1d(hx, size, BoundaryCondition::Periodic)?)?,
        &eig(&build_1d(hy, size, BoundaryCondition::Periodic)?)?,
    );
    let hop = plan.hop_range();
    let corner_cut = crate::lattice::LatticeGeometry::corner_cut(size, plan.geometry.cut, hop)?;
    let disk = crate::lattice::LatticeGeometry::disk(size, plan.geometry.radius, hop)?;
    let disorder = Perturbation::boundary_disorder(square.geometry(), plan.disorder_width, plan.seed);

    let operators: Vec<(&str, OperatorMatrix)> = vec![
        ("square", square.clone()),
        ("corner_cut", restrict_geometry(&square, &corner_cut)?),
        ("boundary_disorder", add_onsite(&square, &disorder)?),
        ("disk", restrict_geometry(&square, &disk)?),
    ];
    let mut clouds: Vec<(&str, SpectrumCloud)> = vec![("periodic", labelled(periodic, "periodic"))];
    for (name, h) in &operators {
        clouds.push((name, labelled(eig(h)?, name)));
    }

    let amoeba_frame = crate::config::Frame { points: plan.amoeba_grid, ..plan.frame };
    let verdicts = classify(plan, &amoeba_frame.omegas(), false)?;
    out.file("amoeba_zones.csv", "hierarchy zones on the ω grid", |w| write_verdicts_csv(&verdicts, w))?;

    let mut summary = BTreeMap::new();
    let mut series = Vec::new();
    for (name, cloud) in &clouds {
        out.spectrum(&format!("spectrum_{name}.csv"), cloud)?;
        summary.insert(name.to_string(), json!({"size": cloud.len(), "max_abs_imag": cloud.max_abs_imag()}));
        series.push(Series::new(*name, complex_points(&cloud.values)));
    }
    let inside: Vec<(f64, f64)> = verdicts
        .iter()
        .filter(|p| p.verdict.zone == Zone::InsideAmoeba)
        .map(|p| (p.verdict.omega.re, p.verdict.omega.im))
        .collect();
    series.insert(1, Series::new("amoeba (grid)", inside));
    out.scatter("spectra.svg", "spectra by geometry", ("Re E", "Im E"), &series)?;
    Ok(json!({ "spectra": summary, "amoeba_zones": zone_counts(&verdicts) }))
}

fn fig2_vshape_map(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let omegas = plan.frame.omegas();
    let lattices: Vec<OperatorMatrix> = plan.sizes.iter().map(|&l| plan_operator(plan, l)).collect::<Result<_>>()?;
    let values: Vec<Vec<f64>> = omegas
        .par_iter()
        .map(|&omega| {
            lattices
                .iter()
                .map(|h| match vshape_proxy(h, omega) {
                    Ok(v) => Ok(v.ln()),
                    Err(e) if is_pointwise(&e) => Ok(f64::NAN),
                    Err(e) => Err(e),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = plan.sizes.iter().map(|&l| l as f64).collect();
    let slopes: Vec<f64> =
        values
            .iter()
            .map(|v| {
                if v.iter().all(|y| y.is_finite()) {
                    line_fit(&xs, v).map_or(f64::NAN, |f| f.slope)
                } else {
                    f64::NAN
                }
            })
            .collect();
    out.file("vshape_map.csv", "ln I(ω) per size and its slope in L", |w| {
        let cols: Vec<String> = plan.sizes.iter().map(|l| format!("ln_i_l{l}")).collect();
        writeln!(w, "re_omega,im_omega,{},slope", cols.join(","))?;
        for ((z, v), s) in omegas.iter().zip(&values).zip(&slopes) {
            let vals: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
            writeln!(w, "{:e},{:e},{},{s:e}", z.re, z.im, vals.join(","))?;
        }
        Ok(())
    })?;
    out.heatmap("vshape_slope.svg", "d ln I / dL", plan, (plan.frame.points[0], plan.frame.points[1]), &slopes)?;
    let finite: Vec<f64> = slopes.iter().copied().filter(|s| s.is_finite()).collect();
    Ok(json!({
        "points": omegas.len(),
        "sizes": plan.sizes,
        "growing_points": finite.iter().filter(|&&s| s > 0.05).count(),
        "max_slope": finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }))
}

fn fig2_greens_map(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let h = plan_operator(plan, plan.geometry.size)?;
    let g = greens_column(&h, plan.source, plan.omega)?;
    let geometry = h.geometry();
    out.file("greens_map.csv", "|G(r, source)| on every site", |w| {
        writeln!(w, "x,y,abs_g,ln_abs_g")?;
        for (s, v) in geometry.sites().iter().zip(&g) {
            writeln!(w, "{},{},{:e},{:e}", s.x, s.y, v.norm(), v.norm().ln())?;
        }
        Ok(())
    })?;
    let side = plan.geometry.size;
    let mut grid = vec![f64::NAN; side * side];
    for (s, v) in geometry.sites().iter().zip(&g) {
        grid[(s.y as usize - 1) * side + (s.x as usize - 1)] = v.norm().ln();
    }
    if out.svg {
        let title = format!("ln|G(r, {})| at ω = {}", plan.source, plan.omega);
        let extent = (0.5, side as f64 + 0.5);
        out.file("greens_map.svg", &title, |w| svg::heatmap(&title, "x", "y", extent, extent, (side, side), &grid, w))?;
    }

    let profile = greens_profile(&h, plan.source, plan.omega, plan.cut, &plan.windows)?;
    out.file("greens_cut.csv", "ln|G| along the cut through the source", |w| profile.write_csv(w))?;
    out.scatter(
        "greens_cut.svg",
        "Green's function along the cut",
        ("x", "ln|G|"),
        &[Series::new(format!("{:?} cut", plan.cut), profile.log_abs.iter().map(|(s, v)| (s.x as f64, *v)).collect())],
    )?;
    Ok(json!({
        "omega": [plan.omega.re, plan.omega.im],
        "source": plan.source,
        "cut": plan.cut,
        "lambda_plus": profile.lambda_plus,
        "lambda_minus": profile.lambda_minus,
        "r2": [profile.r2_plus, profile.r2_minus],
        "shape": shape_name(&profile),
    }))
}

fn fig2_dynamics(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let (hx, hy) = axes_2d(plan)?;
    let size = plan.geometry.size;
    let clean = separable_square(hx, hy, size, BoundaryCondition::Open)?;
    let corner = add_onsite(&clean, &Perturbation::corner_onsite(clean.geometry(), Complex64::new(plan.delta, 0.0)))?;
    let periodic = separable_square(hx, hy, size, BoundaryCondition::Periodic)?;
    let psi0 = InitialState::Site(plan.source);

    let abscissa = |h: &OperatorMatrix| -> Result<f64> {
        Ok(eig(h)?.values.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max))
    };
    let cases: [(&str, &OperatorMatrix); 3] = [("clean", &clean), ("corner", &corner), ("periodic", &periodic)];
    let mut series = Vec::new();
    let mut summary = BTreeMap::new();
    for (name, h) in cases {
        let dt = plan.dt.unwrap_or(0.5 * max_step(h));
        let tr: Trajectory = evolve(h, &psi0, plan.source, plan.horizon, dt)?;
        let rate = tr.late_growth_rate()?;
        out.file(&format!("trajectory_{name}.csv"), &format!("probe amplitude, {name} lattice"), |w| tr.write_csv(w))?;
        series.push(Series::new(name, tr.times.iter().zip(&tr.probe_amp).map(|(t, a)| (*t, a.norm().ln())).collect()));
        let mut entry = json!({"dt": tr.dt, "growth_rate": rate, "max_imag_eig": abscissa(h)?});
        if plan.certify {
            entry["step_certificate"] =
                serde_json::to_value(step_certificate(h, &psi0, plan.source, plan.horizon, dt)?)?;
        }
        summary.insert(name, entry);
    }
    out.scatter("trajectories.svg", "probe amplitude", ("t", "ln|<probe|ψ(t)>|"), &series)?;
    out.json("rates.json", "late-time growth rates", &summary)?;
    Ok(json!({ "rates": summary, "delta": plan.delta, "source": plan.source, "horizon": plan.horizon }))
}

fn fig2_delta_sweep(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let (hx, hy) = axes_2d(plan)?;
    let sweeps: Vec<SweepResult> =
        plan.sizes.iter().map(|&l| delta_sweep(hx, hy, l, &plan.deltas)).collect::<Result<_>>()?;
    let mut series = Vec::new();
    for s in &sweeps {
        let l = s.system_size;
        out.file(&format!("sweep_l{l}.csv"), &format!("max |Im E| against δ, L = {l}"), |w| s.write_csv(w))?;
        out.json(&format!("sweep_l{l}.json"), &format!("sweep summary, L = {l}"), s)?;
        let pts = s.deltas.iter().zip(&s.max_imag).filter(|(d, m)| **d > 0.0 && **m > 0.0);
        series.push(Series::new(format!("L = {l}"), pts.map(|(d, m)| (d.log10(), m.log10())).collect()));
    }
    out.scatter("sweep.svg", "corner perturbation sweep", ("log10 δ", "log10 max|Im E|"), &series)?;

    let found: Vec<(f64, f64)> =
        sweeps.iter().filter_map(|s| s.delta_c.map(|d| (s.system_size as f64, d.ln()))).collect();
    let scaling = (found.len() >= 3)
        .then(|| {
            line_fit(&found.iter().map(|p| p.0).collect::<Vec<_>>(), &found.iter().map(|p| p.1).collect::<Vec<_>>())
        })
        .flatten()
        .map(|f| json!({"slope": f.slope, "intercept": f.intercept, "r2": f.r2}));
    let per_size: Vec<Value> = sweeps
        .iter()
        .map(|s| json!({"size": s.system_size, "delta_c": s.delta_c, "noise_floor": s.noise_floor}))
        .collect();
    Ok(json!({ "sweeps": per_size, "ln_delta_c_fit": scaling }))
}

fn hierarchy_table(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let omegas = if plan.omegas.is_empty() { plan.frame.omegas() } else { plan.omegas.clone() };
    let points = classify(plan, &omegas, true)?;
    out.file("hierarchy.csv", "zone verdicts with deformation certificates", |w| write_verdicts_csv(&points, w))?;
    let checked: Vec<&ClassifiedPoint> = points.iter().filter(|p| p.cross_check.is_some()).collect();
    if !checked.is_empty() {
        out.file("cross_check.csv", "finite-lattice evidence per verdict", |w| {
            writeln!(w, "re_omega,im_omega,zone,metric,consistent")?;
            for p in &checked {
                let c = p.cross_check.expect("filtered");
                writeln!(
                    w,
                    "{:e},{:e},{},{:e},{}",
                    p.verdict.omega.re,
                    p.verdict.omega.im,
                    p.verdict.zone.as_str(),
                    c.metric,
                    c.consistent
                )?;
            }
            Ok(())
        })?;
    }
    out.scatter("hierarchy.svg", "hierarchy zones", ("Re ω", "Im ω"), &zone_series(&points))?;
    let counts = zone_counts(&points);
    Ok(json!({
        "points": points.len(),
        "zones": counts,
        "distinct_zones": counts.len(),
        "cross_checked": checked.len(),
        "cross_check_consistent": checked.iter().filter(|p| p.cross_check.is_some_and(|c| c.consistent)).count(),
    }))
}

fn custom(plan: &Plan, out: &mut Outputs) -> Result<Value> {
    let h = plan_operator(plan, plan.geometry.size)?;
    let obc = labelled(eig(&h)?, "lattice");
    let bloch = bloch_spectrum(&plan.symbol, if plan.dim() == 1 { 512 } else { 96 })?;
    out.spectrum("spectrum_lattice.csv", &obc)?;
    out.spectrum("spectrum_bloch.csv", &bloch)?;
    let mut series =
        vec![Series::new("Bloch", complex_points(&bloch.values)), Series::new("lattice", complex_points(&obc.values))];
    let mut summary = json!({
        "dim": plan.dim(),
        "hermitian": plan.symbol.is_hermitian(),
        "lattice_max_abs_imag": obc.max_abs_imag(),
    });
    if let BlochSymbol::Chain(op) = &plan.symbol {
        let cloud = gbz_on_frame(op, plan)?;
        out.file("gbz.csv", "GBZ of the symbol", |w| cloud.write_csv(w))?;
        if !cloud.is_empty() {
            let nonbloch = nonbloch_spectrum(op, &cloud)?;
            summary["nonbloch_to_lattice_hausdorff"] = json!(hausdorff(&nonbloch.values, &obc.values));
            series.push(Series::new("non-Bloch", complex_points(&nonbloch.values)));
        }
        summary["gbz_points"] = json!(cloud.len());
    }
    out.scatter("spectra.svg", "spectra", ("Re E", "Im E"), &series)?;

    let points = classify(plan, &plan.frame.omegas(), false)?;
    out.file("hierarchy.csv", "zone verdicts on the ω grid", |w| write_verdicts_csv(&points, w))?;
    out.scatter("hierarchy.svg", "hierarchy zones", ("Re ω", "Im ω"), &zone_series(&points))?;
    let counts = zone_counts(&points);
    summary["zones"] = json!(counts);
    summary["distinct_zones"] = json!(counts.len());
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config_str;

    fn plan(src: &str) -> Plan {
        validate_config_str(src, None).unwrap()
    }

    fn read_manifest(dir: &Path) -> Manifest {
        serde_json::from_reader(File::open(dir.join("manifest.json")).unwrap()).unwrap()
    }

    #[test]
    fn every_output_is_in_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let p = plan("scenario = \"fig1_spectra\"\n[geometry]\nsize = 40\n[numerics]\ngbz_grid = [81, 41]\n");
        let m = run_scenario(&p, dir.path()).unwrap();
        let mut listed: Vec<String> = m.outputs.iter().map(|o| o.file.clone()).collect();
        listed.push("manifest.json".into());
        listed.sort();
        let mut on_disk: Vec<String> =
            std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        on_disk.sort();
        assert_eq!(listed, on_disk);
        assert_eq!(read_manifest(dir.path()), m);
    }

    #[test]
    fn reruns_are_identical() {
        let src = "scenario = \"hierarchy_table\"\nseed = 3\n[numerics]\ngrid = [7, 5]\ncross_check_sizes = [30, 60]\n";
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = run_scenario(&plan(src), a.path()).unwrap();
        let mb = run_scenario(&plan(src), b.path()).unwrap();
        assert_eq!(ma.without_timestamps(), mb.without_timestamps());
        for o in &ma.outputs {
            let x = std::fs::read(a.path().join(&o.file)).unwrap();
            let y = std::fs::read(b.path().join(&o.file)).unwrap();
            assert_eq!(x, y, "{}", o.file);
        }
    }

    #[test]
    fn hermitian_custom_symbol_has_two_zones() {
        let dir = tempfile::tempdir().unwrap();
        let src = "scenario = \"custom\"\nsvg = false\n[model]\nterms = [[1, 1.0, 0.0], [-1, 1.0, 0.0], [2, 0.3, 0.0], [-2, 0.3, 0.0]]\n\
                   [geometry]\nsize = 40\n[numerics]\ngbz_grid = [101, 41]\n";
        let m = run_scenario(&plan(src), dir.path()).unwrap();
        assert_eq!(m.summary["distinct_zones"], 2, "{}", m.summary);
        assert!(m.summary["zones"].get("outside_amoeba_inside_bloch").is_none());
        assert!(m.outputs.iter().all(|o| !o.file.ends_with(".svg")));
    }

    #[test]
    fn module_errors_carry_the_scenario() {
        let dir = tempfile::tempdir().unwrap();
        // E = 0 is an eigenvalue of the 31 x 31 nearest-neighbour square
        let p = plan(
            "scenario = \"fig2_greens_map\"\n[model]\nterms = [[1, 1.0, 0.0], [-1, 1.0, 0.0]]\ndim = 2\n\
                      [geometry]\nsize = 31\n[numerics]\nomega = [0.0, 0.0]\n",
        );
        match run_scenario(&p, dir.path()) {
            Err(Error::Scenario { scenario, .. }) => assert_eq!(scenario, "fig2_greens_map"),
            other => panic!("{other:?}"),
        }
    }
}
