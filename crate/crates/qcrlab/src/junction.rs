//! NIS-junction physics: Dynes density of states, Fermi occupations, the
//! normalized quasiparticle tunneling rate F(E), and the elastic dc IV.
//!
//! F(E) is the rate integral
//!
//! ```text
//! F(E) = (1/h) ∫ dε n_S(ε) [1 − f_S(ε)] f_N(ε − E)
//! ```
//!
//! with `n_S` the Dynes-broadened BCS density of states and `f_S`, `f_N`
//! the Fermi functions of the superconducting and normal electrodes, both
//! taken at the same quasiparticle temperature. Internally energies are
//! normalized to the gap and temperatures to `Δ/k_B`, which conditions the
//! near-singular integrand; all public interfaces are SI.

use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE, PLANCK, VON_KLITZING};
use crate::quadrature::{integrate, QuadratureConfig, QuadratureError};
use thiserror::Error;

/// Junction parameter set: gap, Dynes broadening, tunneling resistance,
/// and the common electrode temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionParams {
    /// Superconducting gap parameter Δ (J).
    pub delta: f64,
    /// Dimensionless Dynes parameter.
    pub gamma_dynes: f64,
    /// Tunneling resistance (Ω).
    pub r_t: f64,
    /// Quasiparticle temperature of both electrodes (K). Zero selects the
    /// step-function Fermi limit.
    pub t_qp: f64,
}

/// Parameter-validation failure.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid junction parameters: {reason}")]
pub struct InvalidJunction {
    pub reason: String,
}

impl JunctionParams {
    /// Construct with the gap given in eV instead of J.
    pub fn with_gap_ev(delta_ev: f64, gamma_dynes: f64, r_t: f64, t_qp: f64) -> Self {
        Self {
            delta: delta_ev * ELEMENTARY_CHARGE,
            gamma_dynes,
            r_t,
            t_qp,
        }
    }

    /// Check the physical ranges assumed by the rate integrals.
    pub fn validate(&self) -> Result<(), InvalidJunction> {
        if !(self.delta > 0.0) {
            return Err(InvalidJunction {
                reason: format!("delta must be > 0, got {:e}", self.delta),
            });
        }
        if !(self.gamma_dynes > 0.0 && self.gamma_dynes < 1.0) {
            return Err(InvalidJunction {
                reason: format!("gamma_dynes must be in (0, 1), got {:e}", self.gamma_dynes),
            });
        }
        if !(self.r_t > 0.0) {
            return Err(InvalidJunction {
                reason: format!("r_t must be > 0, got {:e}", self.r_t),
            });
        }
        if self.t_qp < 0.0 {
            return Err(InvalidJunction {
                reason: format!("t_qp must be >= 0, got {:e}", self.t_qp),
            });
        }
        Ok(())
    }
}

/// Dynes density of states at energy `eps` (J), normalized to the
/// normal-state value.
///
/// Evaluates `|Re[(u + iγ)/√((u + iγ)² − 1)]|` with `u = eps/Δ`; even in
/// `eps`, approaches 1 as `|u| → ∞`, and equals `γ/√(1+γ²)` at `u = 0`.
pub fn dynes_dos(eps: f64, junction: &JunctionParams) -> f64 {
    dynes_dos_normalized(eps / junction.delta, junction.gamma_dynes)
}

/// Dynes DOS as a function of `u = ε/Δ`.
pub(crate) fn dynes_dos_normalized(u: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        // ideal BCS limit
        return if u.abs() > 1.0 {
            u.abs() / (u * u - 1.0).sqrt()
        } else {
            0.0
        };
    }
    // z = (u + iγ)² − 1
    let zr = u * u - gamma * gamma - 1.0;
    let zi = 2.0 * u * gamma;
    // w = sqrt(z), numerically stable branch
    let r = zr.hypot(zi);
    let (wr, wi) = if zr >= 0.0 {
        let wr = ((r + zr) * 0.5).sqrt();
        (wr, zi / (2.0 * wr))
    } else {
        let wi = ((r - zr) * 0.5).sqrt().copysign(zi);
        (zi / (2.0 * wi), wi)
    };
    // Re[(u + iγ)/w]
    let denom = wr * wr + wi * wi;
    ((u * wr + gamma * wi) / denom).abs()
}

/// Fermi occupation 1/(exp(E/k_B T) + 1).
///
/// `T = 0` returns the step limit: 1 below zero, 1/2 at zero, 0 above.
pub fn fermi_occupation(energy: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return if energy < 0.0 {
            1.0
        } else if energy == 0.0 {
            0.5
        } else {
            0.0
        };
    }
    let x = energy / (BOLTZMANN * temperature);
    // evaluate on the decaying side to avoid overflow
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Fermi occupation of a normalized energy `x = E/(k_B T)`.
fn fermi_reduced(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Normalized forward tunneling rate F(E) in s⁻¹.
///
/// Nonnegative and nondecreasing in `E`. At `T = 0` the Fermi factors
/// become steps and the integral reduces to `∫_0^E n_S dε / h`.
pub fn forward_rate(
    energy: f64,
    junction: &JunctionParams,
    quad: &QuadratureConfig,
) -> Result<f64, QuadratureError> {
    quad.validate()?;
    let delta = junction.delta;
    let gamma = junction.gamma_dynes;
    let e_red = energy / delta;
    // tolerance on the normalized integral corresponding to abs_tol in s⁻¹
    let abs_tol_norm = quad.abs_tol * PLANCK / delta;

    if junction.t_qp == 0.0 {
        // step Fermi functions: F = (Δ/h) ∫_0^{E/Δ} n(t) dt  for E > 0
        if e_red <= 0.0 {
            return Ok(0.0);
        }
        let breaks = gap_edge_breakpoints(gamma);
        let est = integrate(
            |t| dynes_dos_normalized(t, gamma),
            0.0,
            e_red,
            &breaks,
            quad.rel_tol,
            abs_tol_norm,
            quad.max_subdivisions,
        )?;
        return Ok(est.value * delta / PLANCK);
    }

    let theta = BOLTZMANN * junction.t_qp / delta;
    let window = e_red.abs() + quad.window_kt * theta + 10.0;
    let mut breaks = gap_edge_breakpoints(gamma);
    breaks.extend_from_slice(&[
        0.0,
        e_red,
        e_red - quad.window_kt * theta,
        e_red + quad.window_kt * theta,
    ]);

    let est = integrate(
        |t| dynes_dos_normalized(t, gamma) * fermi_reduced(-t / theta) * fermi_reduced((t - e_red) / theta),
        -window,
        window,
        &breaks,
        quad.rel_tol,
        abs_tol_norm,
        quad.max_subdivisions,
    )?;

    // truncated-tail bound: the integrand beyond ±window is capped by the
    // decaying Fermi factor times the DOS asymptote
    let tail = theta
        * ((-(window - e_red) / theta).exp() + (-window / theta).exp())
        * (1.0 + gamma);
    let value = est.value * delta / PLANCK;
    let tail_rate = tail * delta / PLANCK;
    debug_assert!(
        tail_rate <= 10.0 * (quad.abs_tol + quad.rel_tol * value.abs()),
        "window too narrow for requested tolerance: tail bound {tail_rate:e}"
    );
    Ok(value.max(0.0))
}

fn gap_edge_breakpoints(gamma: f64) -> Vec<f64> {
    let g = gamma.abs().max(1e-12);
    vec![
        -1.0 - 5.0 * g,
        -1.0,
        -1.0 + 5.0 * g,
        1.0 - 5.0 * g,
        1.0,
        1.0 + 5.0 * g,
    ]
}

/// Elastic (purely dc) tunneling current through the junction at bias
/// `v_dc` (V), in A. Odd in `v_dc`, exactly zero at zero bias.
pub fn elastic_dc_current(
    v_dc: f64,
    junction: &JunctionParams,
    quad: &QuadratureConfig,
) -> Result<f64, QuadratureError> {
    let ev = ELEMENTARY_CHARGE * v_dc;
    let forward = forward_rate(ev, junction, quad)?;
    let backward = forward_rate(-ev, junction, quad)?;
    Ok(ELEMENTARY_CHARGE * (VON_KLITZING / junction.r_t) * (forward - backward))
}
