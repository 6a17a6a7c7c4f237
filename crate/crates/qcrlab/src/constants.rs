//! CODATA physical constants and unit helpers.
//!
//! The 2019 SI redefinition fixes `e`, `h`, and `k_B` exactly; everything
//! else here is derived from those values.

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// von Klitzing constant h/e² (Ω).
pub const VON_KLITZING: f64 = PLANCK / (ELEMENTARY_CHARGE * ELEMENTARY_CHARGE);

/// The full constant set, for callers that want to pass constants around
/// as a value (configuration dumps, reports).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Elementary charge (C).
    pub e: f64,
    /// Planck constant (J·s).
    pub h: f64,
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// von Klitzing constant (Ω).
    pub r_k: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            e: ELEMENTARY_CHARGE,
            h: PLANCK,
            hbar: HBAR,
            k_b: BOLTZMANN,
            r_k: VON_KLITZING,
        }
    }
}

/// Convert an energy in electronvolts to joules.
pub fn ev_to_joules(ev: f64) -> f64 {
    ev * ELEMENTARY_CHARGE
}

/// Convert an energy in joules to electronvolts.
pub fn joules_to_ev(joules: f64) -> f64 {
    joules / ELEMENTARY_CHARGE
}

/// Angular frequency (rad/s) for a linear frequency (Hz).
pub fn angular(freq_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * freq_hz
}

/// Linear frequency (Hz) for an angular frequency (rad/s).
pub fn linear(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI)
}
