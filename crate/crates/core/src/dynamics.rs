//! Time evolution `i ∂ψ/∂t = Hψ` with classical fourth-order Runge-Kutta,
//! growth-rate fits, and the corner-perturbation sweep that locates the
//! real-to-complex transition of a clean square.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::lattice::{add_onsite, build_1d, separable_square, BoundaryCondition, OperatorMatrix, Perturbation, Site};
use crate::laurent::LaurentOperator;
use crate::spectra::{eig, noise_floor, separable_spectrum_2d};

/// Stability factor: `dt ≤ STEP_FACTOR / ‖H‖_∞`.
pub const STEP_FACTOR: f64 = 0.1;
/// Number of stored samples aimed for along a trajectory.
pub const TARGET_SAMPLES: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub probe_amp: Vec<Complex64>,
    pub probe: Site,
    pub norm_trace: Vec<f64>,
    /// Step actually used (the requested one shortened to divide the horizon).
    pub dt: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Growth rate over the last third of the horizon.
    pub fn late_growth_rate(&self) -> Result<f64> {
        let t = self.horizon();
        growth_rate(self, (2.0 * t / 3.0, t))
    }

    /// `t,re_amp,im_amp,norm` rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "t,re_amp,im_amp,norm")?;
        for ((t, a), n) in self.times.iter().zip(&self.probe_amp).zip(&self.norm_trace) {
            writeln!(out, "{t:e},{:e},{:e},{n:e}", a.re, a.im)?;
        }
        Ok(())
    }
}

/// Initial state: a single site or an explicit vector in row order.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Site(Site),
    Vector(Vec<Complex64>),
}

/// Largest step `evolve` accepts for `h`.
pub fn max_step(h: &OperatorMatrix) -> f64 {
    STEP_FACTOR / h.norm_inf().max(f64::MIN_POSITIVE)
}

fn apply(rows: &[Vec<(usize, Complex64)>], x: &[Complex64], out: &mut [Complex64]) {
    // out = -i H x
    for (o, row) in out.iter_mut().zip(rows) {
        let hx: Complex64 = row.iter().map(|&(j, v)| v * x[j]).sum();
        *o = Complex64::new(hx.im, -hx.re);
    }
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates up to `horizon` with steps no larger than `dt`, storing
/// 1000 evenly spaced samples (fewer for very short runs) of `⟨probe|ψ(t)⟩` and `‖ψ(t)‖`.
pub fn evolve(h: &OperatorMatrix, psi0: &InitialState, probe: Site, horizon: f64, dt: f64) -> Result<Trajectory> {
    let bound = max_step(h);
    if !dt.is_finite() || dt <= 0.0 || dt > bound {
        return Err(Error::StepSize { dt, bound });
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let g = h.geometry();
    let probe_row = g.index_of(probe).ok_or(Error::SiteNotInGeometry(vec![probe.x, probe.y]))?;
    let n = h.dim();
    let mut psi = match psi0 {
        InitialState::Site(s) => {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[g.index_of(*s).ok_or(Error::SiteNotInGeometry(vec![s.x, s.y]))?] = Complex64::new(1.0, 0.0);
            v
        }
        InitialState::Vector(v) if v.len() == n => v.clone(),
        InitialState::Vector(v) => {
            return Err(Error::Incompatible(format!("initial vector of length {} for dimension {n}", v.len())))
        }
    };

    // samples sit on a fixed grid of the horizon
    let raw = (horizon / dt).ceil() as usize;
    let samples = raw.min(TARGET_SAMPLES as usize);
    let every = raw.div_ceil(samples);
    let steps = every * samples;
    let dt = horizon / steps as f64;
    let rows = h.sparse_rows();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero);

    let mut tr =
        Trajectory { times: vec![0.0], probe_amp: vec![psi[probe_row]], probe, norm_trace: vec![norm(&psi)], dt };
    for step in 1..=steps {
        apply(&rows, &psi, &mut k1);
        for i in 0..n {
            tmp[i] = psi[i] + 0.5 * dt * k1[i];
        }
        apply(&rows, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = psi[i] + 0.5 * dt * k2[i];
        }
        apply(&rows, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = psi[i] + dt * k3[i];
        }
        apply(&rows, &tmp, &mut k4);
        for i in 0..n {
            psi[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % every == 0 || step == steps {
            tr.times.push(step as f64 * dt);
            tr.probe_amp.push(psi[probe_row]);
            tr.norm_trace.push(norm(&psi));
        }
    }
    Ok(tr)
}

/// Least-squares slope of `ln|⟨probe|ψ(t)⟩|` over `window = (t_start, t_end)`.
pub fn growth_rate(tr: &Trajectory, window: (f64, f64)) -> Result<f64> {
    let (ts, amps): (Vec<f64>, Vec<f64>) = tr
        .times
        .iter()
        .zip(&tr.probe_amp)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, a)| (*t, a.norm()))
        .unzip();
    if ts.len() < 50 {
        return Err(Error::FitWindow(format!("{} samples in {window:?} (< 50)", ts.len())));
    }
    if amps.iter().any(|&a| !a.is_finite() || a <= 1e-280) {
        return Err(Error::AmplitudeUnderflow);
    }
    let ys: Vec<f64> = amps.iter().map(|a| a.ln()).collect();
    line_fit(&ts, &ys).map(|f| f.slope).ok_or_else(|| Error::FitWindow("degenerate time window".into()))
}

/// Step-halving check on the final probe amplitude and the late growth rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCertificate {
    pub dt: f64,
    pub amplitude_change: f64,
    pub rate_change: f64,
}

impl StepCertificate {
    pub fn converged(&self, amplitude_tol: f64, rate_tol: f64) -> bool {
        self.amplitude_change < amplitude_tol && self.rate_change < rate_tol
    }
}

pub fn step_certificate(
    h: &OperatorMatrix,
    psi0: &InitialState,
    probe: Site,
    horizon: f64,
    dt: f64,
) -> Result<StepCertificate> {
    let coarse = evolve(h, psi0, probe, horizon, dt)?;
    let fine = evolve(h, psi0, probe, horizon, 0.5 * coarse.dt)?;
    let a = *coarse.probe_amp.last().expect("nonempty");
    let b = *fine.probe_amp.last().expect("nonempty");
    Ok(StepCertificate {
        dt: coarse.dt,
        amplitude_change: (a - b).norm() / b.norm().max(f64::MIN_POSITIVE),
        rate_change: (coarse.late_growth_rate()? - fine.late_growth_rate()?).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub system_size: usize,
    /// Starts with `δ = 0`.
    pub deltas: Vec<f64>,
    pub max_imag: Vec<f64>,
    pub noise_floor: f64,
    pub delta_c: Option<f64>,
}

impl SweepResult {
    /// Threshold above which a spectrum counts as complex.
    pub fn threshold(&self) -> f64 {
        10.0 * self.noise_floor
    }

    /// `delta,max_imag` rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "delta,max_imag")?;
        for (d, m) in self.deltas.iter().zip(&self.max_imag) {
            writeln!(out, "{d:e},{m:e}")?;
        }
        Ok(())
    }

    pub fn write_json(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// `per_decade` log-spaced values from `10^lo` to `10^hi` inclusive.
pub fn log_spaced(lo: i32, hi: i32, per_decade: usize) -> Vec<f64> {
    let count = (hi - lo) as usize * per_decade;
    (0..=count).map(|i| 10f64.powf(lo as f64 + i as f64 / per_decade as f64)).collect()
}

/// Max `|Im E|` of the clean square `H_x ⊕ H_y` plus `δ` on its four corners,
/// for each `δ`. The noise floor compares the dense `δ = 0` spectrum with the
/// exactly real pairwise sums of the two chain spectra.
pub fn delta_sweep(hx: &LaurentOperator, hy: &LaurentOperator, len: usize, deltas: &[f64]) -> Result<SweepResult> {
    if deltas.iter().any(|&d| !d.is_finite() || d <= 0.0) || deltas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("deltas must be positive and strictly increasing".into()));
    }
    let clean = separable_square(hx, hy, len, BoundaryCondition::Open)?;
    let exact = separable_spectrum_2d(
        &eig(&build_1d(hx, len, BoundaryCondition::Open)?)?,
        &eig(&build_1d(hy, len, BoundaryCondition::Open)?)?,
    );
    let dense = eig(&clean)?;
    let floor = noise_floor(&dense, &exact);

    let perturbed = deltas
        .par_iter()
        .map(|&d| {
            let p = Perturbation::corner_onsite(clean.geometry(), Complex64::new(d, 0.0));
            Ok(eig(&add_onsite(&clean, &p)?)?.max_abs_imag())
        })
        .collect::<Result<Vec<f64>>>()?;

    let delta_c = deltas.iter().zip(&perturbed).find(|(_, &m)| m > 10.0 * floor).map(|(&d, _)| d);
    let mut all_deltas = vec![0.0];
    all_deltas.extend_from_slice(deltas);
    let mut max_imag = vec![dense.max_abs_imag()];
    max_imag.extend(perturbed);
    Ok(SweepResult { system_size: len, deltas: all_deltas, max_imag, noise_floor: floor, delta_c })
}
