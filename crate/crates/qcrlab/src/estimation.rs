//! Bounded nonlinear least squares and the IV-curve parameter fitter.
//!
//! The engine is a damped Gauss–Newton (Levenberg–Marquardt) iteration
//! with box constraints enforced by step clamping: a pure Gauss–Newton
//! step is tried first and the damping factor grows only when a step
//! fails to reduce the residual norm, so the residual norm is
//! nonincreasing across accepted iterations. Jacobians are central finite
//! differences; 1σ confidence intervals come from the Gauss–Newton
//! approximation of the covariance at the optimum.

use crate::constants::ELEMENTARY_CHARGE;
use crate::photon_assisted::{pat_weights, tunneling_current_with_weights, DriveCondition};
use crate::junction::JunctionParams;
use crate::quadrature::{QuadratureConfig, QuadratureError};
use thiserror::Error;

/// Fit outcome: parameter estimates with their uncertainties.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Named parameter values, in the order the model defines them.
    pub params: Vec<(String, f64)>,
    /// 1σ confidence per parameter (same order); infinite when the
    /// Jacobian is singular in that direction.
    pub sigma: Vec<f64>,
    /// Euclidean norm of the residual vector at the optimum.
    pub residual_norm: f64,
    /// Whether a convergence criterion was met (as opposed to stalling).
    pub converged: bool,
    /// Number of outer iterations spent.
    pub iterations: usize,
    /// Set when the Gauss–Newton normal matrix was singular at the optimum.
    pub singular_jacobian: bool,
}

impl FitResult {
    /// Value of a named parameter.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// 1σ uncertainty of a named parameter.
    pub fn sigma_of(&self, name: &str) -> Option<f64> {
        self.params
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| self.sigma[i])
    }
}

/// Estimation failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EstimationError {
    /// Iteration budget exhausted before any convergence criterion.
    #[error("fit diverged: no convergence after {iterations} iterations (residual norm {residual_norm:e})")]
    FitDiverged { iterations: usize, residual_norm: f64 },
    /// The model could not be evaluated.
    #[error("model evaluation failed: {0}")]
    ModelEval(String),
    /// Malformed dataset or options.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Dataset cannot constrain the parameters.
    #[error("data out of range: {0}")]
    DataOutOfRange(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Options for [`nls_minimize`].
#[derive(Debug, Clone)]
pub struct NlsOptions {
    /// Relative residual-decrease tolerance that declares convergence.
    pub tol: f64,
    /// Outer iteration budget.
    pub max_iterations: usize,
    /// Relative step for the central finite-difference Jacobian.
    pub fd_rel_step: f64,
    /// Parameter names for the result; defaults to `p0`, `p1`, ...
    pub param_names: Vec<String>,
}

impl Default for NlsOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iterations: 100,
            fd_rel_step: 1e-6,
            param_names: Vec::new(),
        }
    }
}

/// Minimize `Σ r_i(x)²` over the box `bounds`, starting from `init`.
///
/// The model returns the residual vector for a parameter vector. Accepted
/// iterations never increase the residual norm. Convergence is declared on
/// gradient stationarity, on a relative decrease below `opts.tol`, or on
/// step collapse; exhausting `max_iterations` is [`EstimationError::FitDiverged`].
pub fn nls_minimize<F>(
    mut model: F,
    init: &[f64],
    bounds: &[(f64, f64)],
    opts: &NlsOptions,
) -> Result<FitResult, EstimationError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, EstimationError>,
{
    let n = init.len();
    if bounds.len() != n {
        return Err(EstimationError::InvalidInput(format!(
            "{} bounds for {} parameters",
            bounds.len(),
            n
        )));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo <= hi) {
            return Err(EstimationError::InvalidInput(format!(
                "bound {i} has lo {lo} > hi {hi}"
            )));
        }
        if init[i] < lo || init[i] > hi {
            return Err(EstimationError::InvalidInput(format!(
                "init[{i}] = {} outside [{lo}, {hi}]",
                init[i]
            )));
        }
    }

    let clamp = |x: &mut [f64]| {
        for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    };

    let mut x = init.to_vec();
    let mut r = model(&x)?;
    let m = r.len();
    let mut cost = dot(&r, &r);
    let mut lambda = 0.0_f64; // pure Gauss–Newton until a step fails
    let mut converged = false;
    let mut iterations = 0;
    let mut g_scale = f64::NAN;

    let trace = std::env::var("QCRLAB_NLS_TRACE").is_ok();
    while iterations < opts.max_iterations {
        iterations += 1;
        if trace {
            eprintln!("nls iter {iterations}: cost {cost:.6e} lambda {lambda:.1e} x {x:?}");
        }
        let jac = jacobian(&mut model, &x, bounds, opts.fd_rel_step, m)?;
        let a = normal_matrix(&jac, n);
        let g = gradient(&jac, &r, n);

        // parameters pegged at a bound with the gradient pointing outward
        // are held fixed this iteration; otherwise the clamped step keeps
        // fighting the bound and progress stalls
        let pegged: Vec<bool> = (0..n)
            .map(|i| {
                let (lo, hi) = bounds[i];
                let span = (hi - lo).abs().max(1e-300);
                let at_lo = x[i] - lo <= 1e-10 * span;
                let at_hi = hi - x[i] <= 1e-10 * span;
                (at_lo && g[i] > 0.0) || (at_hi && g[i] < 0.0)
            })
            .collect();

        let g_inf = (0..n)
            .filter(|&i| !pegged[i])
            .fold(0.0_f64, |acc, i| acc.max(g[i].abs()));
        if g_scale.is_nan() {
            g_scale = g_inf.max(f64::MIN_POSITIVE);
        }

        // stationary point of the feasible directions; the threshold sits
        // above the finite-difference cancellation noise of the Jacobian
        if g_inf <= 1e-10 * g_scale {
            converged = true;
            break;
        }

        let mut accepted = false;
        let max_diag = (0..n).map(|i| a[i][i]).fold(0.0_f64, f64::max);
        for _ in 0..40 {
            let mut damped = a.clone();
            let mut rhs = g.clone();
            for i in 0..n {
                // keep the damped system positive definite even for dead
                // parameters (zero Jacobian column)
                let d = a[i][i].max(1e-14 * max_diag).max(1e-300);
                damped[i][i] += lambda * d;
                if pegged[i] {
                    // decouple the pegged coordinate: unit diagonal row and
                    // column with zero right-hand side gives δ_i = 0
                    for j in 0..n {
                        damped[i][j] = 0.0;
                        damped[j][i] = 0.0;
                    }
                    damped[i][i] = 1.0;
                    rhs[i] = 0.0;
                }
            }
            let delta = match cholesky_solve(&mut damped, &rhs) {
                Some(mut d) => {
                    for v in d.iter_mut() {
                        *v = -*v;
                    }
                    d
                }
                None => {
                    lambda = if lambda == 0.0 { 1e-4 } else { lambda * 10.0 };
                    continue;
                }
            };
            let mut x_trial: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
            clamp(&mut x_trial);
            let r_trial = model(&x_trial)?;
            let cost_trial = dot(&r_trial, &r_trial);
            if cost_trial <= cost {
                let decrease = cost - cost_trial;
                let step_small = x_trial
                    .iter()
                    .zip(&x)
                    .all(|(new, old)| (new - old).abs() <= 1e-13 * (1.0 + old.abs()));
                x = x_trial;
                r = r_trial;
                let prev_cost = cost;
                cost = cost_trial;
                lambda = if lambda == 0.0 { 0.0 } else { (lambda / 5.0).max(1e-12) };
                accepted = true;
                if decrease <= opts.tol * prev_cost.max(f64::MIN_POSITIVE) || step_small {
                    converged = true;
                }
                break;
            }
            lambda = if lambda == 0.0 { 1e-4 } else { lambda * 10.0 };
            if lambda > 1e14 {
                break;
            }
        }

        if converged {
            break;
        }
        if !accepted {
            // no improving step exists at this scale: numerical minimum
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(EstimationError::FitDiverged {
            iterations,
            residual_norm: cost.sqrt(),
        });
    }

    // covariance from the Gauss–Newton normal matrix at the optimum
    let jac = jacobian(&mut model, &x, bounds, opts.fd_rel_step, m)?;
    let a = normal_matrix(&jac, n);
    let s_sq = if m > n { cost / (m - n) as f64 } else { 0.0 };
    let (sigma, singular) = match invert_spd(&a) {
        Some(inv) => (
            (0..n)
                .map(|i| (inv[i][i].max(0.0) * s_sq).sqrt())
                .collect::<Vec<_>>(),
            false,
        ),
        None => (vec![f64::INFINITY; n], true),
    };

    let names: Vec<String> = if opts.param_names.len() == n {
        opts.param_names.clone()
    } else {
        (0..n).map(|i| format!("p{i}")).collect()
    };

    Ok(FitResult {
        params: names.into_iter().zip(x).collect(),
        sigma,
        residual_norm: cost.sqrt(),
        converged,
        iterations,
        singular_jacobian: singular,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central-difference Jacobian, one-sided at an active bound.
fn jacobian<F>(
    model: &mut F,
    x: &[f64],
    bounds: &[(f64, f64)],
    rel_step: f64,
    m: usize,
) -> Result<Vec<Vec<f64>>, EstimationError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, EstimationError>,
{
    let n = x.len();
    let mut jac = vec![vec![0.0; n]; m];
    let mut xp = x.to_vec();
    for i in 0..n {
        let (lo, hi) = bounds[i];
        let span = if hi.is_finite() && lo.is_finite() {
            hi - lo
        } else {
            1.0
        };
        // the bound span sets the difference scale so a parameter sitting
        // at zero still gets a step large enough to beat cancellation
        let h = rel_step * x[i].abs().max(span).max(1e-12);
        let up = (x[i] + h).min(hi);
        let dn = (x[i] - h).max(lo);
        if up == dn {
            continue; // degenerate bound; leave the column zero
        }
        xp[i] = up;
        let r_up = model(&xp)?;
        xp[i] = dn;
        let r_dn = model(&xp)?;
        xp[i] = x[i];
        let width = up - dn;
        for (row, (ru, rd)) in jac.iter_mut().zip(r_up.iter().zip(&r_dn)) {
            row[i] = (ru - rd) / width;
        }
    }
    Ok(jac)
}

fn normal_matrix(jac: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for row in jac {
        for i in 0..n {
            for j in i..n {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }
    a
}

fn gradient(jac: &[Vec<f64>], r: &[f64], n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n];
    for (row, &ri) in jac.iter().zip(r) {
        for i in 0..n {
            g[i] += row[i] * ri;
        }
    }
    g
}

/// Solve `A x = b` for symmetric positive definite `A` (in place).
fn cholesky_solve(a: &mut [Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    // factor A = L Lᵀ
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= a[i][k] * a[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                a[i][i] = sum.sqrt();
            } else {
                a[i][j] = sum / a[j][j];
            }
        }
    }
    // forward/back substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= a[i][k] * y[k];
        }
        y[i] = sum / a[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= a[k][i] * x[k];
        }
        x[i] = sum / a[i][i];
    }
    Some(x)
}

fn invert_spd(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let mut work = a.to_vec();
        let x = cholesky_solve(&mut work, &e)?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

/// Measured (or synthetic) IV dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct IvDataset {
    /// Bias voltages (V), sorted ascending.
    pub v_dc: Vec<f64>,
    /// Currents (A), same length.
    pub current: Vec<f64>,
    /// Drive condition metadata for noise-driven datasets.
    pub meta: Option<NoiseMeta>,
}

/// Noise-drive metadata attached to an IV dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMeta {
    /// Noise power incident to the junction (W).
    pub p_n: f64,
    /// Noise center angular frequency (rad/s).
    pub omega_ac: f64,
}

impl IvDataset {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if self.v_dc.len() != self.current.len() {
            return Err(EstimationError::InvalidInput(format!(
                "{} voltages vs {} currents",
                self.v_dc.len(),
                self.current.len()
            )));
        }
        if self.v_dc.len() < 20 {
            return Err(EstimationError::InvalidInput(format!(
                "need at least 20 points, got {}",
                self.v_dc.len()
            )));
        }
        if self.v_dc.windows(2).any(|w| w[0] > w[1]) {
            return Err(EstimationError::InvalidInput(
                "v_dc must be sorted ascending".into(),
            ));
        }
        Ok(())
    }
}

/// How the ac amplitude enters a noise-driven fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VacMode {
    /// Amplitude known (e.g. from the power calibration); not fitted.
    Fixed(f64),
    /// Amplitude fitted, starting from the given value.
    Fit { init: f64 },
}

/// Fit mode for [`fit_iv_curve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IvFitMode {
    /// Purely dc excitation: fit (Δ, γ_D, R_T, T_qp).
    DcOnly,
    /// Sinusoidal drive at `omega_ac`: additionally fix or fit `V_ac`.
    NoiseDriven { omega_ac: f64, v_ac: VacMode },
}

/// Fitting controls for [`fit_iv_curve`].
#[derive(Debug, Clone)]
pub struct IvFitOptions {
    /// Run the deterministic multistart spread in addition to the caller's
    /// initial guess.
    pub multistart: bool,
    /// Iteration budget per start.
    pub max_iterations: usize,
    /// Fit the junction parameters (Δ, γ_D, R_T, T_qp). When false they
    /// are pinned to `init`, which leaves only the drive amplitude free
    /// in noise-driven mode.
    pub fit_junction: bool,
}

impl Default for IvFitOptions {
    fn default() -> Self {
        Self {
            multistart: true,
            max_iterations: 80,
            fit_junction: true,
        }
    }
}

// fit bounds: Δ ∈ [50, 400] µeV and T_qp ∈ [10, 500] mK in linear space;
// γ_D and R_T span decades and are fitted in log space
const DELTA_BOUNDS_MEV: (f64, f64) = (0.050, 0.400);
const LN_GAMMA_BOUNDS: (f64, f64) = (-11.512925464970229, -std::f64::consts::LN_2); // [1e-5, 0.5]
const LN_RT_BOUNDS: (f64, f64) = (4.605170185988092, 16.11809565095832); // [1e2, 1e7] Ω
const TQP_BOUNDS_K: (f64, f64) = (0.010, 0.500);
const VAC_BOUNDS_V: (f64, f64) = (0.0, 2e-3);

/// Extract junction parameters (and optionally the drive amplitude) from
/// an IV curve by bounded least squares on the tunneling-current model.
///
/// Runs a deterministic set of starts spread over the bounds in addition
/// to `init` and keeps the best residual. Quadrature tolerances are
/// tightened tenfold relative to `quad` so finite-difference Jacobians
/// stay smooth.
pub fn fit_iv_curve(
    data: &IvDataset,
    init: &JunctionParams,
    mode: IvFitMode,
    quad: &QuadratureConfig,
    options: &IvFitOptions,
) -> Result<FitResult, EstimationError> {
    data.validate()?;
    let delta_init = init.delta;
    let max_ev = data
        .v_dc
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        * ELEMENTARY_CHARGE;
    if max_ev < 0.9 * delta_init {
        return Err(EstimationError::DataOutOfRange(format!(
            "all bias points below 0.9·Δ (max |eV| = {:.3e} J, Δ init = {:.3e} J): gap not identifiable",
            max_ev, delta_init
        )));
    }

    let scale = data
        .current
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1e-18);
    let quad_fit = quad.tightened(10.0);

    let (omega_ac, fit_vac, vac_init) = match mode {
        IvFitMode::DcOnly => (0.0, false, 0.0),
        IvFitMode::NoiseDriven { omega_ac, v_ac } => match v_ac {
            VacMode::Fixed(v) => (omega_ac, false, v),
            VacMode::Fit { init } => (omega_ac, true, init),
        },
    };

    // internal full vector: [Δ (meV), ln γ_D, ln R_T, T_qp (K), V_ac (mV)]
    let full_init = [
        (delta_init / ELEMENTARY_CHARGE * 1e3).clamp(DELTA_BOUNDS_MEV.0, DELTA_BOUNDS_MEV.1),
        init.gamma_dynes
            .max(1e-5)
            .ln()
            .clamp(LN_GAMMA_BOUNDS.0, LN_GAMMA_BOUNDS.1),
        init.r_t.max(1e2).ln().clamp(LN_RT_BOUNDS.0, LN_RT_BOUNDS.1),
        init.t_qp.clamp(TQP_BOUNDS_K.0, TQP_BOUNDS_K.1),
        (vac_init * 1e3).clamp(0.0, VAC_BOUNDS_V.1 * 1e3),
    ];
    let full_bounds = [
        DELTA_BOUNDS_MEV,
        LN_GAMMA_BOUNDS,
        LN_RT_BOUNDS,
        TQP_BOUNDS_K,
        (VAC_BOUNDS_V.0 * 1e3, VAC_BOUNDS_V.1 * 1e3),
    ];
    let full_names = ["delta", "gamma_dynes", "r_t", "t_qp", "v_ac"];
    let mut free: Vec<usize> = Vec::new();
    if options.fit_junction {
        free.extend([0, 1, 2, 3]);
    }
    if fit_vac {
        free.push(4);
    }
    if free.is_empty() {
        return Err(EstimationError::InvalidInput(
            "nothing to fit: junction pinned and amplitude fixed".into(),
        ));
    }

    let expand = |p: &[f64]| -> [f64; 5] {
        let mut full = full_init;
        for (slot, &value) in free.iter().zip(p) {
            full[*slot] = value;
        }
        full
    };

    let mut model = |p: &[f64]| -> Result<Vec<f64>, EstimationError> {
        let full = expand(p);
        let junction = JunctionParams {
            delta: full[0] * 1e-3 * ELEMENTARY_CHARGE,
            gamma_dynes: full[1].exp(),
            r_t: full[2].exp(),
            t_qp: full[3],
        };
        let v_ac = if fit_vac { full[4] * 1e-3 } else { vac_init };
        let x = if v_ac == 0.0 {
            0.0
        } else {
            ELEMENTARY_CHARGE * v_ac / (crate::constants::HBAR * omega_ac)
        };
        let weights = pat_weights(x, 1e-9);
        let mut residuals = Vec::with_capacity(data.v_dc.len());
        for (&v, &meas) in data.v_dc.iter().zip(&data.current) {
            let drive = DriveCondition { v_dc: v, v_ac, omega_ac };
            let current = tunneling_current_with_weights(&drive, &junction, &quad_fit, &weights)?;
            residuals.push((current - meas) / scale);
        }
        Ok(residuals)
    };

    let names: Vec<String> = free.iter().map(|&i| full_names[i].to_string()).collect();
    let bounds: Vec<(f64, f64)> = free.iter().map(|&i| full_bounds[i]).collect();
    let user_start: Vec<f64> = free.iter().map(|&i| full_init[i]).collect();

    // deterministic multistart: fractional positions inside the junction box
    let spread = [
        [0.35, 0.30, 0.45, 0.20],
        [0.60, 0.70, 0.55, 0.50],
        [0.45, 0.50, 0.65, 0.80],
        [0.75, 0.40, 0.35, 0.35],
    ];
    let mut starts = vec![user_start.clone()];
    if options.multistart && options.fit_junction {
        for frac in spread {
            let mut s = user_start.clone();
            for (slot, &f) in frac.iter().enumerate() {
                let (lo, hi) = full_bounds[slot];
                s[slot] = lo + f * (hi - lo);
            }
            starts.push(s);
        }
    }

    let opts = NlsOptions {
        max_iterations: options.max_iterations,
        param_names: names,
        ..NlsOptions::default()
    };

    let mut best: Option<FitResult> = None;
    for start in &starts {
        match nls_minimize(&mut model, start, &bounds, &opts) {
            Ok(fit) => {
                let better = best
                    .as_ref()
                    .map(|b| fit.residual_norm < b.residual_norm)
                    .unwrap_or(true);
                if better {
                    best = Some(fit);
                }
            }
            Err(EstimationError::FitDiverged { .. }) => continue,
            Err(e) => return Err(e),
        }
        // a residual at numerical zero cannot be improved by more starts
        if let Some(b) = &best {
            if b.residual_norm < 1e-10 * (data.v_dc.len() as f64).sqrt() {
                break;
            }
        }
    }
    let mut fit = best.ok_or(EstimationError::FitDiverged {
        iterations: options.max_iterations,
        residual_norm: f64::NAN,
    })?;

    // map internal parameters (meV, logs, K, mV) back to SI
    for (idx, (slot, sigma)) in free
        .iter()
        .zip(fit.params.iter_mut().zip(fit.sigma.iter_mut()))
        .map(|(&i, rest)| (i, rest))
    {
        let raw = slot.1;
        match idx {
            0 => {
                slot.1 = raw * 1e-3 * ELEMENTARY_CHARGE;
                *sigma *= 1e-3 * ELEMENTARY_CHARGE;
            }
            1 | 2 => {
                slot.1 = raw.exp();
                *sigma *= raw.exp();
            }
            3 => {}
            4 => {
                slot.1 = raw * 1e-3;
                *sigma *= 1e-3;
            }
            _ => unreachable!(),
        }
    }
    fit.residual_norm *= scale;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_model_recovered_in_two_iterations() {
        let xs = [0.5, 1.0, 2.0, 3.5, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x).collect();
        let model = |p: &[f64]| -> Result<Vec<f64>, EstimationError> {
            Ok(xs.iter().zip(&ys).map(|(x, y)| p[0] * x - y).collect())
        };
        let fit = nls_minimize(model, &[0.0], &[(-10.0, 10.0)], &NlsOptions::default()).unwrap();
        assert!(fit.iterations <= 2, "took {} iterations", fit.iterations);
        // exact up to the cancellation noise of the finite-difference
        // Jacobian at the origin
        assert_relative_eq!(fit.value("p0").unwrap(), 2.5, max_relative = 1e-9);
        assert!(fit.converged);
    }

    #[test]
    fn quadratic_minimum_reached_from_origin() {
        let model = |p: &[f64]| -> Result<Vec<f64>, EstimationError> {
            Ok(vec![p[0] - 3.0, p[1] + 2.0])
        };
        let fit = nls_minimize(
            model,
            &[0.0, 0.0],
            &[(-10.0, 10.0), (-10.0, 10.0)],
            &NlsOptions::default(),
        )
        .unwrap();
        assert!((fit.value("p0").unwrap() - 3.0).abs() < 1e-8);
        assert!((fit.value("p1").unwrap() + 2.0).abs() < 1e-8);
    }

    #[test]
    fn residuals_orthogonal_to_jacobian_at_optimum() {
        // overdetermined nonlinear model with noise-free data offset
        let xs: Vec<f64> = (0..30).map(|i| 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.7 * (-0.8 * x).exp() + 0.05).collect();
        let model = move |p: &[f64]| -> Result<Vec<f64>, EstimationError> {
            Ok(xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| p[0] * (p[1] * x).exp() - y)
                .collect())
        };
        let fit = nls_minimize(
            model,
            &[1.0, -0.5],
            &[(0.0, 10.0), (-5.0, 0.0)],
            &NlsOptions::default(),
        )
        .unwrap();
        // residual: the data offset 0.05 is not representable; stationarity
        // requires Jᵀr ≈ 0 at the optimum
        let p = [fit.value("p0").unwrap(), fit.value("p1").unwrap()];
        let h = 1e-7;
        let xs2: Vec<f64> = (0..30).map(|i| 0.1 * i as f64).collect();
        let ys2: Vec<f64> = xs2.iter().map(|x| 1.7 * (-0.8 * x).exp() + 0.05).collect();
        let eval = |p: &[f64]| -> Vec<f64> {
            xs2.iter()
                .zip(&ys2)
                .map(|(x, y)| p[0] * (p[1] * x).exp() - y)
                .collect()
        };
        let r = eval(&p);
        for i in 0..2 {
            let mut up = p;
            up[i] += h;
            let mut dn = p;
            dn[i] -= h;
            let (ru, rd) = (eval(&up), eval(&dn));
            let col: Vec<f64> = ru.iter().zip(&rd).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let proj: f64 = col.iter().zip(&r).map(|(c, ri)| c * ri).sum();
            let col_norm: f64 = col.iter().map(|c| c * c).sum::<f64>().sqrt();
            let r_norm: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(
                proj.abs() <= 1e-6 * col_norm * r_norm,
                "column {i} projection {proj:e}"
            );
        }
    }

    #[test]
    fn bounds_peg_parameters() {
        let xs = [1.0, 2.0, 3.0];
        let model = |p: &[f64]| -> Result<Vec<f64>, EstimationError> {
            Ok(xs.iter().map(|x| p[0] * x - 2.0 * x).collect())
        };
        let fit = nls_minimize(model, &[0.5], &[(0.0, 1.0)], &NlsOptions::default()).unwrap();
        assert_relative_eq!(fit.value("p0").unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn max_iterations_reports_divergence() {
        // Rosenbrock-style residuals need more than one iteration
        let model = |p: &[f64]| -> Result<Vec<f64>, EstimationError> {
            Ok(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])
        };
        let opts = NlsOptions {
            max_iterations: 1,
            ..NlsOptions::default()
        };
        match nls_minimize(model, &[-1.2, 1.0], &[(-5.0, 5.0), (-5.0, 5.0)], &opts) {
            Err(EstimationError::FitDiverged { iterations, .. }) => assert_eq!(iterations, 1),
            other => panic!("expected FitDiverged, got {other:?}"),
        }
    }

    #[test]
    fn dead_parameter_gets_infinite_sigma() {
        let model = |p: &[f64]| -> Result<Vec<f64>, EstimationError> {
            Ok(vec![p[0] - 1.0, 2.0 * (p[0] - 1.0), 0.1])
        };
        let fit = nls_minimize(
            model,
            &[0.0, 0.3],
            &[(-5.0, 5.0), (-5.0, 5.0)],
            &NlsOptions::default(),
        )
        .unwrap();
        assert!((fit.value("p0").unwrap() - 1.0).abs() < 1e-9);
        assert!(fit.singular_jacobian);
        assert!(fit.sigma[1].is_infinite());
    }

    #[test]
    fn dataset_validation() {
        let ds = IvDataset {
            v_dc: vec![0.0; 10],
            current: vec![0.0; 10],
            meta: None,
        };
        assert!(ds.validate().is_err());
        let ds = IvDataset {
            v_dc: (0..25).map(|i| i as f64 * 1e-5).collect(),
            current: vec![0.0; 25],
            meta: None,
        };
        ds.validate().unwrap();
        let mut unsorted = ds.clone();
        unsorted.v_dc.swap(3, 7);
        assert!(unsorted.validate().is_err());
    }

    #[test]
    fn subgap_only_data_is_rejected() {
        let junction = JunctionParams::with_gap_ev(203e-6, 1.96e-3, 29.4e3, 0.248);
        let v: Vec<f64> = (0..30).map(|i| 1e-6 * i as f64).collect(); // ≤ 29 µV
        let ds = IvDataset {
            current: vec![0.0; v.len()],
            v_dc: v,
            meta: None,
        };
        match fit_iv_curve(
            &ds,
            &junction,
            IvFitMode::DcOnly,
            &QuadratureConfig::default(),
            &IvFitOptions::default(),
        ) {
            Err(EstimationError::DataOutOfRange(_)) => {}
            other => panic!("expected DataOutOfRange, got {other:?}"),
        }
    }
}
