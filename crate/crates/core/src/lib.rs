//! Spectra, Green's functions and dynamics of non-Hermitian lattice operators
//! built from Laurent-polynomial Bloch symbols.
//!
//! The crate is organised bottom-up:
//!
//! - [`laurent`]: symbols `h(k) = Σ t_s e^{iks}` and their characteristic roots.
//! - [`lattice`]: geometries, real-space matrices and boundary perturbations.
//! - [`spectra`]: dense eigenvalues, Bloch spectra, spectral potentials.
//! - [`gbz`]: generalized Brillouin zones and `λ±` growth-rate predictions.
//! - [`greens`]: resolvent columns, profile fits and the V-shape proxy.
//! - [`hierarchy`]: winding numbers, amoeba membership and zone verdicts.
//! - [`dynamics`]: time evolution and the corner-perturbation sweep.
//! - [`config`], [`scenario`], [`svg`], [`cli`]: reproducible scenario runs.
//!
//! Lattice sites use 1-based coordinates and matrices follow
//! `H_ij = t_{j-i}`; see [`lattice::BASIS_ORDERING`] for 2D row order.
//!
//! ```
//! use nonbloch::{build_1d, eig, BoundaryCondition, LaurentOperator};
//!
//! let chain = build_1d(&LaurentOperator::hatano_nelson(1.2, 1.1), 40, BoundaryCondition::Open)?;
//! let spectrum = eig(&chain)?;
//! assert!(spectrum.max_abs_imag() < 1e-8);
//! # Ok::<(), nonbloch::Error>(())
//! ```

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod gbz;
pub mod greens;
pub mod hierarchy;
pub mod lattice;
pub mod laurent;
pub mod scenario;
pub mod spectra;
pub mod svg;

pub use config::{validate_config, Plan, ScenarioConfig, ScenarioKind};
pub use dynamics::{delta_sweep, evolve, growth_rate, InitialState, SweepResult, Trajectory};
pub use error::{Error, Result};
pub use gbz::{gbz_1d, lambda_pm_predict, nonbloch_spectrum, GbzCloud, Mechanism};
pub use greens::{greens_profile, vshape_proxy, Cut, FitWindows, GreensProfile, Shape};
pub use hierarchy::{amoeba_membership, winding, HierarchyVerdict, MuSearch, Zone};
pub use lattice::{
    add_onsite, build_1d, separable_square, BoundaryCondition, LatticeGeometry, OperatorMatrix, Perturbation, Site,
};
pub use laurent::{BlochSymbol, LaurentOperator};
pub use scenario::{run_scenario, Manifest};
pub use spectra::{eig, hausdorff, SpectrumCloud};
