//! Resonator observables of the refrigerator: induced decay rate,
//! effective bath temperature, steady-state population, and the
//! power balance of a coherently driven mode.
//!
//! The junction couples to the resonator through single-photon matrix
//! elements of relative weight `rho`, so the induced decay is built from
//! the inelastic transition rates `Γ_10` (photon absorbed from the mode)
//! and `Γ_01` (photon emitted into the mode), summed over both tunneling
//! directions via the bias symmetrization `τ = ±1`.

use crate::constants::{BOLTZMANN, HBAR};
use crate::photon_assisted::{
    production_weights, transition_rate_with_weights, Direction, DriveCondition,
};
use crate::junction::JunctionParams;
use crate::quadrature::{QuadratureConfig, QuadratureError};
use thiserror::Error;

/// Resonator mode and coupling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    /// Mode angular frequency (rad/s).
    pub omega_r: f64,
    /// Driveline coupling rate (rad/s).
    pub gamma_dr: f64,
    /// Excess (internal and other external) coupling rate (rad/s).
    pub gamma_0: f64,
    /// Environment interaction parameter setting the single-photon matrix
    /// elements; a small dimensionless calibration constant.
    pub rho: f64,
    /// Mean population of the refrigerator-independent bath.
    pub n_c: f64,
    /// Fock-space truncation used by spectroscopy defaults.
    pub n_max: usize,
}

/// Parameter-validation failure.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid resonator parameters: {reason}")]
pub struct InvalidResonator {
    pub reason: String,
}

impl ResonatorParams {
    /// Refrigerator-independent decay rate `γ_c = γ_dr + γ_0`.
    pub fn gamma_c(&self) -> f64 {
        self.gamma_dr + self.gamma_0
    }

    pub fn validate(&self) -> Result<(), InvalidResonator> {
        if !(self.omega_r > 0.0) {
            return Err(InvalidResonator {
                reason: format!("omega_r must be > 0, got {:e}", self.omega_r),
            });
        }
        if self.gamma_dr < 0.0 || self.gamma_0 < 0.0 {
            return Err(InvalidResonator {
                reason: "coupling rates must be >= 0".into(),
            });
        }
        if !(self.rho > 0.0 && self.rho < 0.5) {
            return Err(InvalidResonator {
                reason: format!("rho must be in (0, 0.5), got {:e}", self.rho),
            });
        }
        if self.n_c < 0.0 {
            return Err(InvalidResonator {
                reason: format!("n_c must be >= 0, got {:e}", self.n_c),
            });
        }
        if self.n_max < 5 {
            return Err(InvalidResonator {
                reason: format!("n_max must be >= 5, got {}", self.n_max),
            });
        }
        Ok(())
    }
}

/// Squared matrix element for the resonator transition `m → m'` in the
/// leading-order low-impedance model: elastic transitions carry unit
/// weight, single-photon sidebands scale with the ladder factor times
/// `rho`, and everything farther off-diagonal is neglected.
pub fn matrix_element_sq(m: usize, m_prime: usize, rho: f64) -> f64 {
    if m == m_prime {
        1.0
    } else if m_prime + 1 == m {
        m as f64 * rho
    } else if m + 1 == m_prime {
        (m + 1) as f64 * rho
    } else {
        0.0
    }
}

/// Refrigerator-induced decay rate with its sign diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcrDecay {
    /// `γ_QCR` (rad/s); negative values indicate the gain regime.
    pub rate: f64,
    /// Set when the computed expression is negative.
    pub negative_damping: bool,
}

impl QcrDecay {
    /// Rate expressed as a frequency, `γ/2π` (Hz).
    pub fn in_hz(&self) -> f64 {
        self.rate / (2.0 * std::f64::consts::PI)
    }
}

/// Effective temperature of the refrigerator bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BathTemperature {
    /// Ordinary positive temperature (K).
    Kelvin(f64),
    /// Upward and downward rates balanced: the formal temperature diverges.
    Unbounded,
    /// Upward rate exceeds downward: population-inverted bath, formally
    /// negative temperature (value in K, negative).
    Inverted(f64),
}

impl BathTemperature {
    /// The finite value if one exists.
    pub fn kelvin(&self) -> Option<f64> {
        match self {
            BathTemperature::Kelvin(t) => Some(*t),
            BathTemperature::Inverted(t) => Some(*t),
            BathTemperature::Unbounded => None,
        }
    }
}

/// Errors from the population/decay relations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ResonatorError {
    /// `γ_QCR + γ_0 = 0` makes the power balance degenerate.
    #[error("power balance degenerate: gamma_qcr + gamma_0 = 0")]
    DivisionDegenerate,
    /// Observed population exceeds what zero refrigerator damping allows.
    #[error("no decay rate reproduces the observed population {observed:e} (maximum {max:e})")]
    NoRootInBracket { observed: f64, max: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// The four symmetrized inelastic rate sums behind the decay and
/// temperature expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InelasticRates {
    /// `Σ_{τ=±1} Γ→_10(τV)` (s⁻¹): photon absorption from the mode.
    pub down: f64,
    /// `Σ_{τ=±1} Γ→_01(τV)` (s⁻¹): photon emission into the mode.
    pub up: f64,
}

/// Compute the symmetrized single-photon rates at a drive point.
pub fn inelastic_rates(
    drive: &DriveCondition,
    junction: &JunctionParams,
    resonator: &ResonatorParams,
    quad: &QuadratureConfig,
) -> Result<InelasticRates, QuadratureError> {
    let weights = production_weights(drive.bessel_argument());
    let mut down = 0.0;
    let mut up = 0.0;
    for tau in [1.0, -1.0] {
        let biased = DriveCondition {
            v_dc: tau * drive.v_dc,
            ..*drive
        };
        down += transition_rate_with_weights(
            1, 0, Direction::Forward, &biased, junction, resonator, quad, &weights,
        )?;
        up += transition_rate_with_weights(
            0, 1, Direction::Forward, &biased, junction, resonator, quad, &weights,
        )?;
    }
    Ok(InelasticRates { down, up })
}

/// Refrigerator-induced decay rate
/// `γ_QCR = Σ_{τ=±1} [Γ→_10(τV) − Γ→_01(τV)]` (rad/s). Even in `v_dc`.
pub fn gamma_qcr(
    drive: &DriveCondition,
    junction: &JunctionParams,
    resonator: &ResonatorParams,
    quad: &QuadratureConfig,
) -> Result<QcrDecay, QuadratureError> {
    let rates = inelastic_rates(drive, junction, resonator, quad)?;
    let rate = rates.down - rates.up;
    Ok(QcrDecay {
        rate,
        negative_damping: rate < 0.0,
    })
}

/// Effective refrigerator temperature from symmetrized rate sums.
pub fn t_qcr_from_rates(rates: &InelasticRates, omega_r: f64) -> BathTemperature {
    let ratio = rates.down / rates.up;
    if ratio == 1.0 {
        return BathTemperature::Unbounded;
    }
    let t = HBAR * omega_r / (BOLTZMANN * ratio.ln());
    if ratio > 1.0 {
        BathTemperature::Kelvin(t)
    } else {
        BathTemperature::Inverted(t)
    }
}

/// Effective refrigerator temperature
/// `T_QCR = (ħω_R/k_B)/ln(ΣΓ_10/ΣΓ_01)` at a drive point.
pub fn t_qcr(
    drive: &DriveCondition,
    junction: &JunctionParams,
    resonator: &ResonatorParams,
    quad: &QuadratureConfig,
) -> Result<BathTemperature, QuadratureError> {
    let rates = inelastic_rates(drive, junction, resonator, quad)?;
    Ok(t_qcr_from_rates(&rates, resonator.omega_r))
}

/// Bose–Einstein occupation `1/(exp(ħω/k_B T) − 1)` for `T > 0`.
pub fn bose_occupation(temperature: f64, omega: f64) -> f64 {
    assert!(temperature > 0.0 && omega > 0.0);
    1.0 / (HBAR * omega / (BOLTZMANN * temperature)).exp_m1()
}

/// Temperature of a Bose mode with mean occupation `n_bar > 0`; exact
/// inverse of [`bose_occupation`].
pub fn temp_from_occupation(n_bar: f64, omega: f64) -> f64 {
    assert!(n_bar > 0.0 && omega > 0.0);
    HBAR * omega / (BOLTZMANN * (1.0 / n_bar).ln_1p())
}

/// Steady-state report for an undriven resonator coupled to the
/// refrigerator bath and the background bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Weighted-average mean photon number.
    pub n_bar: f64,
    /// Refrigerator bath population (infinite when the rates balance).
    pub n_qcr: f64,
    /// Refrigerator-induced decay rate (rad/s).
    pub gamma_qcr: f64,
    /// Tagged effective refrigerator temperature.
    pub t_qcr: BathTemperature,
}

/// Weighted-average population of the coupled baths,
/// `n̄ = (n_QCR γ_QCR + n_c γ_c)/(γ_QCR + γ_c)`.
///
/// Computed from the rate sums directly (`n_QCR γ_QCR = ΣΓ_01`), which
/// stays finite even when the effective temperature diverges.
pub fn steady_state_population(
    drive: &DriveCondition,
    junction: &JunctionParams,
    resonator: &ResonatorParams,
    quad: &QuadratureConfig,
) -> Result<SteadyState, QuadratureError> {
    let rates = inelastic_rates(drive, junction, resonator, quad)?;
    let gamma = rates.down - rates.up;
    let gamma_c = resonator.gamma_c();
    let n_bar = (rates.up + resonator.n_c * gamma_c) / (gamma + gamma_c);
    let n_qcr = if gamma == 0.0 {
        f64::INFINITY
    } else {
        rates.up / gamma
    };
    Ok(SteadyState {
        n_bar,
        n_qcr,
        gamma_qcr: gamma,
        t_qcr: t_qcr_from_rates(&rates, resonator.omega_r),
    })
}

/// The bath-averaged population for explicitly given refrigerator bath
/// population and decay rate.
pub fn steady_state_from_rates(n_qcr: f64, gamma_qcr: f64, resonator: &ResonatorParams) -> f64 {
    let gamma_c = resonator.gamma_c();
    (n_qcr * gamma_qcr + resonator.n_c * gamma_c) / (gamma_qcr + gamma_c)
}

/// Photon number of a resonantly driven mode from the power balance
/// `P_in(1 − |Γ_dr|²) = ħω_R n̄ (γ_QCR + γ_0)` with the reflection
/// coefficient `Γ_dr = (γ_dr − γ_QCR − γ_0)/(γ_dr + γ_QCR + γ_0)`.
pub fn coherent_population_from_rate(
    p_in: f64,
    gamma_qcr: f64,
    resonator: &ResonatorParams,
) -> Result<f64, ResonatorError> {
    assert!(p_in >= 0.0, "drive power must be >= 0");
    let loss = gamma_qcr + resonator.gamma_0;
    if loss == 0.0 {
        return Err(ResonatorError::DivisionDegenerate);
    }
    let total = resonator.gamma_dr + loss;
    let reflection = (resonator.gamma_dr - loss) / total;
    Ok(p_in * (1.0 - reflection * reflection) / (HBAR * resonator.omega_r * loss))
}

/// As [`coherent_population_from_rate`] with `γ_QCR` evaluated from the
/// tunneling model at the given drive point.
pub fn coherent_population(
    p_in: f64,
    drive: &DriveCondition,
    junction: &JunctionParams,
    resonator: &ResonatorParams,
    quad: &QuadratureConfig,
) -> Result<f64, ResonatorError> {
    let decay = gamma_qcr(drive, junction, resonator, quad)?;
    coherent_population_from_rate(p_in, decay.rate, resonator)
}

/// Invert the power balance: find the total decay rate
/// `γ = γ_QCR + γ_dr + γ_0` that reproduces an observed driven
/// population. Uses bracketed bisection on `γ_QCR ∈ [0, γ_hi]`.
pub fn infer_gamma_from_population(
    n_bar_obs: f64,
    p_in: f64,
    resonator: &ResonatorParams,
) -> Result<f64, ResonatorError> {
    assert!(n_bar_obs > 0.0, "observed population must be > 0");
    let n_max = coherent_population_from_rate(p_in, 0.0, resonator)?;
    if n_bar_obs > n_max {
        return Err(ResonatorError::NoRootInBracket {
            observed: n_bar_obs,
            max: n_max,
        });
    }

    let mut lo = 0.0_f64;
    let mut hi = resonator.gamma_c().max(1.0);
    while coherent_population_from_rate(p_in, hi, resonator)? > n_bar_obs {
        hi *= 4.0;
        if hi > 1e30 {
            break;
        }
    }
    // population is strictly decreasing in γ_QCR
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let n_mid = coherent_population_from_rate(p_in, mid, resonator)?;
        if n_mid > n_bar_obs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma_qcr_root = 0.5 * (lo + hi);
    Ok(gamma_qcr_root + resonator.gamma_dr + resonator.gamma_0)
}
