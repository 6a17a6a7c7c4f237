//! Simulation and parameter estimation for a noise-driven quantum-circuit
//! refrigerator (QCR): a voltage-biased NIS tunnel junction whose
//! photon-assisted quasiparticle tunneling provides tunable dissipation for
//! a coupled superconducting resonator.
//!
//! The crate is organized around the measurement chain:
//!
//! - [`junction`] — Dynes density of states, Fermi occupations, the
//!   normalized tunneling-rate integral F(E), and the elastic dc IV curve.
//! - [`photon_assisted`] — Bessel-weighted sideband model for an ac/noise
//!   drive: drive-amplitude conversion, Fock-state transition rates, and
//!   the noise-driven tunneling current.
//! - [`resonator`] — resonator observables: QCR-induced decay rate,
//!   effective bath temperature, steady-state and coherently driven photon
//!   populations.
//! - [`spectroscopy`] — Fock distributions, dispersive qubit-spectrum
//!   synthesis, peak-weight extraction, and population fits.
//! - [`estimation`] — bounded Levenberg–Marquardt least squares and the
//!   IV-curve fitter extracting junction parameters.
//!
//! All physics functions are pure: they borrow immutable parameter structs
//! and may be called concurrently from any number of threads.

pub mod constants;
pub mod estimation;
pub mod junction;
pub mod photon_assisted;
pub mod quadrature;
pub mod resonator;
pub mod spectroscopy;

mod bessel;

pub use constants::PhysicalConstants;
pub use estimation::{FitResult, IvDataset};
pub use junction::JunctionParams;
pub use photon_assisted::DriveCondition;
pub use quadrature::QuadratureConfig;
pub use resonator::ResonatorParams;
pub use spectroscopy::{FockDistribution, PeakModel, SpectrumTrace};
