//! Fock-state distributions and the dispersive-spectroscopy pipeline.
//!
//! In the strong-dispersive regime the resonator Fock states appear as
//! equidistant peaks in the qubit spectrum, and the relative peak heights
//! follow the photon-number distribution. This module synthesizes such
//! spectra, extracts per-peak weights by constrained least squares, and
//! fits thermal or Poisson photon-number distributions to them.

use crate::estimation::{nls_minimize, EstimationError, FitResult, NlsOptions};
use thiserror::Error;

/// Photon-number distribution family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionFamily {
    /// Geometric (Bose–Einstein) distribution of a thermal state.
    Thermal,
    /// Poisson distribution of a coherent state.
    Poisson,
    /// Directly measured weights.
    Empirical,
}

/// Truncated photon-number distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDistribution {
    /// `p(0)..p(n_max)`.
    pub probs: Vec<f64>,
    pub family: DistributionFamily,
    /// Mean of the untruncated distribution.
    pub mean: f64,
}

impl FockDistribution {
    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// Analytic probability mass above the truncation.
    pub fn truncation_deficit(&self) -> f64 {
        match self.family {
            DistributionFamily::Thermal => {
                let r = self.mean / (self.mean + 1.0);
                r.powi(self.probs.len() as i32)
            }
            DistributionFamily::Poisson => {
                // extend the series until the terms vanish
                let mut term = (-self.mean).exp();
                for n in 1..self.probs.len() {
                    term *= self.mean / n as f64;
                }
                // term = p(n_max); accumulate the tail from n_max+1
                let mut tail = 0.0;
                let mut n = self.probs.len();
                loop {
                    term *= self.mean / n as f64;
                    tail += term;
                    n += 1;
                    if term < 1e-18 * (tail + 1e-300) || n > 10_000 {
                        break;
                    }
                }
                tail
            }
            DistributionFamily::Empirical => 1.0 - self.probs.iter().sum::<f64>(),
        }
    }

    /// Mean photon number carried by the retained probabilities.
    pub fn truncated_mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

/// Thermal distribution `p(n) = n̄ⁿ/(n̄+1)ⁿ⁺¹`, truncated at `n_max`.
pub fn thermal_distribution(n_bar: f64, n_max: usize) -> FockDistribution {
    assert!(n_bar >= 0.0, "mean photon number must be >= 0");
    let r = n_bar / (n_bar + 1.0);
    let mut probs = Vec::with_capacity(n_max + 1);
    let mut p = 1.0 / (n_bar + 1.0);
    for _ in 0..=n_max {
        probs.push(p);
        p *= r;
    }
    FockDistribution {
        probs,
        family: DistributionFamily::Thermal,
        mean: n_bar,
    }
}

/// Poisson distribution `p(n) = e^{−n̄} n̄ⁿ/n!`, truncated at `n_max`.
pub fn poisson_distribution(n_bar: f64, n_max: usize) -> FockDistribution {
    assert!(n_bar >= 0.0, "mean photon number must be >= 0");
    let mut probs = Vec::with_capacity(n_max + 1);
    let mut p = (-n_bar).exp();
    for n in 0..=n_max {
        probs.push(p);
        p *= n_bar / (n + 1) as f64;
    }
    FockDistribution {
        probs,
        family: DistributionFamily::Poisson,
        mean: n_bar,
    }
}

/// Qubit-probe spectrum: magnitude versus probe detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    /// Probe detuning (Hz), strictly increasing.
    pub detuning: Vec<f64>,
    /// Nonnegative magnitude (arbitrary units).
    pub magnitude: Vec<f64>,
}

impl SpectrumTrace {
    pub fn validate(&self) -> Result<(), SpectroscopyError> {
        if self.detuning.len() != self.magnitude.len() || self.detuning.len() < 16 {
            return Err(SpectroscopyError::InvalidTrace(format!(
                "need equal-length arrays of at least 16 samples, got {} / {}",
                self.detuning.len(),
                self.magnitude.len()
            )));
        }
        if self.detuning.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpectroscopyError::InvalidTrace(
                "detuning must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Equidistant-peak model of the dispersive spectrum: peak `n` is a
/// unit-height Lorentzian centered at detuning `−n·spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakModel {
    /// Peak spacing per photon (Hz).
    pub spacing: f64,
    /// Full width at half maximum per peak (Hz); the last entry is reused
    /// for higher Fock indices.
    pub linewidths: Vec<f64>,
    /// Constant background level.
    pub baseline: f64,
}

impl PeakModel {
    /// Uniform-linewidth model.
    pub fn uniform(spacing: f64, linewidth: f64, baseline: f64) -> Self {
        Self {
            spacing,
            linewidths: vec![linewidth],
            baseline,
        }
    }

    pub fn width_for(&self, n: usize) -> f64 {
        let i = n.min(self.linewidths.len() - 1);
        self.linewidths[i]
    }

    pub fn validate(&self) -> Result<(), SpectroscopyError> {
        if !(self.spacing > 0.0) {
            return Err(SpectroscopyError::InvalidPeakModel(format!(
                "spacing must be > 0, got {:e}",
                self.spacing
            )));
        }
        if self.linewidths.is_empty() || self.linewidths.iter().any(|w| !(*w > 0.0)) {
            return Err(SpectroscopyError::InvalidPeakModel(
                "linewidths must be positive and nonempty".into(),
            ));
        }
        Ok(())
    }

    /// Unit-height Lorentzian of FWHM `w` evaluated at offset `x`.
    fn lorentzian(x: f64, w: f64) -> f64 {
        let t = 2.0 * x / w;
        1.0 / (1.0 + t * t)
    }
}

/// Spectroscopy failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectroscopyError {
    #[error("grid too coarse: step {step:e} Hz exceeds min linewidth/4 = {limit:e} Hz")]
    GridTooCoarse { step: f64, limit: f64 },
    #[error("grid does not cover the peak comb: need [{need_lo:e}, {need_hi:e}] Hz")]
    GridCoverage { need_lo: f64, need_hi: f64 },
    #[error("peaks not resolved: spacing {spacing:e} Hz < 2×max linewidth {max_width:e} Hz")]
    PeaksNotResolved { spacing: f64, max_width: f64 },
    #[error("degenerate trace: extracted weights sum to zero")]
    DegenerateTrace,
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid peak model: {0}")]
    InvalidPeakModel(String),
    #[error(transparent)]
    Fit(#[from] EstimationError),
}

/// Detuning grid that covers the peak comb of `n_max + 1` peaks with
/// sampling at one eighth of the narrowest linewidth.
pub fn default_grid(peaks: &PeakModel, n_max: usize) -> Vec<f64> {
    let min_w = peaks
        .linewidths
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let lo = -(n_max as f64 + 0.5) * peaks.spacing;
    let hi = 0.5 * peaks.spacing;
    // an even number of steps per spacing places every peak center on a
    // grid point (the comb starts half a spacing above the lower edge)
    let per_spacing = 2 * ((peaks.spacing / (min_w / 8.0) / 2.0).ceil() as usize).max(1);
    let step = peaks.spacing / per_spacing as f64;
    let count = ((hi - lo) / step).round() as usize + 1;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

/// Forward model: synthesize the spectrum of a photon-number distribution.
///
/// `magnitude(δ) = baseline + Σ_n p(n)·L(δ + n·spacing; width_n)` with a
/// unit-peak-height Lorentzian `L`.
pub fn synthesize_spectrum(
    dist: &FockDistribution,
    peaks: &PeakModel,
    grid: &[f64],
) -> Result<SpectrumTrace, SpectroscopyError> {
    peaks.validate()?;
    let n_max = dist.n_max();
    let need_lo = -(n_max as f64 + 0.5) * peaks.spacing;
    let need_hi = 0.5 * peaks.spacing;
    if grid.len() < 16 || grid[0] > need_lo || *grid.last().unwrap() < need_hi {
        return Err(SpectroscopyError::GridCoverage { need_lo, need_hi });
    }
    let max_step = grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0_f64, f64::max);
    let min_w = (0..=n_max)
        .map(|n| peaks.width_for(n))
        .fold(f64::INFINITY, f64::min);
    if max_step > min_w / 4.0 {
        return Err(SpectroscopyError::GridTooCoarse {
            step: max_step,
            limit: min_w / 4.0,
        });
    }

    let magnitude = grid
        .iter()
        .map(|&d| {
            let mut m = peaks.baseline;
            for (n, &p) in dist.probs.iter().enumerate() {
                m += p * PeakModel::lorentzian(d + n as f64 * peaks.spacing, peaks.width_for(n));
            }
            m
        })
        .collect();
    Ok(SpectrumTrace {
        detuning: grid.to_vec(),
        magnitude,
    })
}

/// Extract nonnegative per-peak weights from a trace by constrained least
/// squares against the multi-Lorentzian model; the result is renormalized
/// to sum to one.
pub fn extract_peak_weights(
    trace: &SpectrumTrace,
    peaks: &PeakModel,
    n_max: usize,
) -> Result<Vec<f64>, SpectroscopyError> {
    trace.validate()?;
    peaks.validate()?;
    let max_width = (0..=n_max)
        .map(|n| peaks.width_for(n))
        .fold(0.0_f64, f64::max);
    if peaks.spacing < 2.0 * max_width {
        return Err(SpectroscopyError::PeaksNotResolved {
            spacing: peaks.spacing,
            max_width,
        });
    }
    let lo = *trace.detuning.first().unwrap();
    let hi = *trace.detuning.last().unwrap();
    let need_lo = -(n_max as f64) * peaks.spacing;
    if lo > need_lo || hi < 0.0 {
        return Err(SpectroscopyError::GridCoverage {
            need_lo,
            need_hi: 0.0,
        });
    }

    // design matrix: one Lorentzian column per Fock index
    let rows = trace.detuning.len();
    let cols = n_max + 1;
    let mut design = vec![vec![0.0; cols]; rows];
    for (i, &d) in trace.detuning.iter().enumerate() {
        for n in 0..cols {
            design[i][n] =
                PeakModel::lorentzian(d + n as f64 * peaks.spacing, peaks.width_for(n));
        }
    }
    let rhs: Vec<f64> = trace.magnitude.iter().map(|m| m - peaks.baseline).collect();

    let weights = nnls(&design, &rhs);
    let total: f64 = weights.iter().sum();
    let floor = 1e-9 * rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs())).max(1e-300);
    if total <= floor {
        return Err(SpectroscopyError::DegenerateTrace);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Lawson–Hanson nonnegative least squares for `min ‖A x − b‖, x ≥ 0`.
fn nnls(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let rows = a.len();
    let cols = a[0].len();
    let mut x = vec![0.0_f64; cols];
    let mut passive = vec![false; cols];

    let gradient = |x: &[f64]| -> Vec<f64> {
        // w = Aᵀ(b − A x)
        let mut w = vec![0.0; cols];
        for i in 0..rows {
            let mut ax = 0.0;
            for j in 0..cols {
                ax += a[i][j] * x[j];
            }
            let r = b[i] - ax;
            for j in 0..cols {
                w[j] += a[i][j] * r;
            }
        }
        w
    };

    let solve_passive = |passive: &[bool]| -> Vec<f64> {
        let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
        let k = idx.len();
        let mut ata = vec![vec![0.0; k]; k];
        let mut atb = vec![0.0; k];
        for i in 0..rows {
            for (p, &jp) in idx.iter().enumerate() {
                atb[p] += a[i][jp] * b[i];
                for (q, &jq) in idx.iter().enumerate().skip(p) {
                    ata[p][q] += a[i][jp] * a[i][jq];
                }
            }
        }
        for p in 0..k {
            for q in 0..p {
                ata[p][q] = ata[q][p];
            }
            ata[p][p] *= 1.0 + 1e-12; // ridge against exact rank deficiency
        }
        let sol = {
            let mut work = ata;
            cholesky_solve_local(&mut work, &atb).unwrap_or(vec![0.0; k])
        };
        let mut z = vec![0.0; cols];
        for (p, &j) in idx.iter().enumerate() {
            z[j] = sol[p];
        }
        z
    };

    let w0 = gradient(&x);
    let tol = 1e-12 * w0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1e-300);

    for _ in 0..(3 * cols) {
        let w = gradient(&x);
        let candidate = (0..cols)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&p, &q| w[p].partial_cmp(&w[q]).unwrap());
        let Some(j_star) = candidate else { break };
        passive[j_star] = true;

        loop {
            let z = solve_passive(&passive);
            if (0..cols).all(|j| !passive[j] || z[j] > 0.0) {
                x = z;
                break;
            }
            // step toward z until the first passive variable hits zero
            let mut alpha = 1.0_f64;
            for j in 0..cols {
                if passive[j] && z[j] <= 0.0 {
                    let a_j = x[j] / (x[j] - z[j]);
                    alpha = alpha.min(a_j);
                }
            }
            for j in 0..cols {
                if passive[j] {
                    x[j] += alpha * (z[j] - x[j]);
                    if x[j] <= 1e-300 {
                        x[j] = 0.0;
                        passive[j] = false;
                    }
                }
            }
        }
    }
    x
}

fn cholesky_solve_local(a: &mut [Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
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

/// Fit a distribution family's mean photon number to normalized peak
/// weights. Returns the estimate as parameter `n_bar` with its 1σ
/// uncertainty from the residual Jacobian.
pub fn fit_population_from_weights(
    weights: &[f64],
    family: DistributionFamily,
    init_n_bar: f64,
) -> Result<FitResult, SpectroscopyError> {
    assert!(init_n_bar > 0.0, "initial mean must be > 0");
    if weights.is_empty() {
        return Err(SpectroscopyError::InvalidTrace("empty weights".into()));
    }
    let n_max = weights.len() - 1;
    let w = weights.to_vec();
    let model = move |p: &[f64]| -> Result<Vec<f64>, EstimationError> {
        let dist = match family {
            DistributionFamily::Thermal => thermal_distribution(p[0], n_max),
            DistributionFamily::Poisson => poisson_distribution(p[0], n_max),
            DistributionFamily::Empirical => {
                return Err(EstimationError::InvalidInput(
                    "cannot fit the empirical family".into(),
                ))
            }
        };
        let total: f64 = dist.probs.iter().sum();
        Ok(dist
            .probs
            .iter()
            .zip(&w)
            .map(|(p, wi)| p / total - wi)
            .collect())
    };
    let opts = NlsOptions {
        param_names: vec!["n_bar".to_string()],
        ..NlsOptions::default()
    };
    let fit = nls_minimize(model, &[init_n_bar], &[(1e-9, 100.0)], &opts)?;
    Ok(fit)
}

/// Fit a mean photon number directly to a spectrum trace with the
/// multi-Lorentzian forward model.
///
/// Free parameters are the mean `n_bar`, an overall `amplitude`, and a
/// constant `baseline`; the peak comb geometry comes from `peaks`.
/// Fitting on the trace (rather than on extracted weights) keeps the
/// estimate free of the nonnegativity clipping that constrained weight
/// extraction applies to noise around empty Fock slots.
pub fn fit_population(
    trace: &SpectrumTrace,
    family: DistributionFamily,
    peaks: &PeakModel,
    n_max: usize,
    init_n_bar: f64,
) -> Result<FitResult, SpectroscopyError> {
    assert!(init_n_bar > 0.0, "initial mean must be > 0");
    trace.validate()?;
    peaks.validate()?;
    if matches!(family, DistributionFamily::Empirical) {
        return Err(SpectroscopyError::Fit(EstimationError::InvalidInput(
            "cannot fit the empirical family".into(),
        )));
    }

    let mag_max = trace.magnitude.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mag_min = trace.magnitude.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = (mag_max - mag_min).max(1e-12);

    let detuning = trace.detuning.clone();
    let magnitude = trace.magnitude.clone();
    let peaks_c = peaks.clone();
    let model = move |p: &[f64]| -> Result<Vec<f64>, EstimationError> {
        let dist = match family {
            DistributionFamily::Thermal => thermal_distribution(p[0], n_max),
            DistributionFamily::Poisson => poisson_distribution(p[0], n_max),
            DistributionFamily::Empirical => unreachable!(),
        };
        Ok(detuning
            .iter()
            .zip(&magnitude)
            .map(|(&d, &m)| {
                let mut model_m = p[2];
                for (n, &prob) in dist.probs.iter().enumerate() {
                    model_m += p[1]
                        * prob
                        * PeakModel::lorentzian(
                            d + n as f64 * peaks_c.spacing,
                            peaks_c.width_for(n),
                        );
                }
                (model_m - m) / scale
            })
            .collect())
    };

    let opts = NlsOptions {
        param_names: vec![
            "n_bar".to_string(),
            "amplitude".to_string(),
            "baseline".to_string(),
        ],
        ..NlsOptions::default()
    };
    let init = [init_n_bar, scale, mag_min];
    let bounds = [
        (1e-9, 100.0),
        (0.0, 1e6 * scale),
        (mag_min - scale, mag_max + scale),
    ];
    let mut fit = nls_minimize(model, &init, &bounds, &opts)?;
    fit.residual_norm *= scale;
    Ok(fit)
}
