//! Adaptive Gauss–Kronrod quadrature for the tunneling-rate integrals.
//!
//! The integrands have two kinds of sharp structure: the density-of-states
//! peaks just outside the gap edges (width of order `gamma_dynes`) and the
//! Fermi edges (width of order `k_B T`). The driver takes a list of forced
//! breakpoints so panels never straddle those features, then subdivides the
//! worst panel until the global error estimate meets tolerance.

use thiserror::Error;

/// Tolerances and limits for the rate integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Relative tolerance on the integral value.
    pub rel_tol: f64,
    /// Absolute tolerance on the returned rate (s⁻¹).
    pub abs_tol: f64,
    /// Half-width of the Fermi-edge window in units of `k_B T`.
    pub window_kt: f64,
    /// Subdivision budget per integral.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-3,
            window_kt: 40.0,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    /// Validate the ranges the rest of the crate assumes.
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(QuadratureError::InvalidConfig {
                reason: format!("rel_tol must be in (0, 1e-3], got {}", self.rel_tol),
            });
        }
        if self.window_kt < 10.0 {
            return Err(QuadratureError::InvalidConfig {
                reason: format!("window_kt must be >= 10, got {}", self.window_kt),
            });
        }
        if self.abs_tol < 0.0 {
            return Err(QuadratureError::InvalidConfig {
                reason: format!("abs_tol must be >= 0, got {}", self.abs_tol),
            });
        }
        Ok(())
    }

    /// Copy with the relative tolerance divided by `factor` (used by the
    /// fitters, which need quadrature noise well below the finite-difference
    /// step).
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: (self.rel_tol / factor).max(1e-14),
            abs_tol: self.abs_tol / factor,
            ..*self
        }
    }
}

/// Quadrature failure modes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadratureError {
    /// The subdivision budget ran out before the error estimate met tolerance.
    #[error("quadrature did not converge: error estimate {achieved:e} > required {required:e} after {subdivisions} subdivisions")]
    NotConverged {
        achieved: f64,
        required: f64,
        subdivisions: usize,
    },
    /// Configuration outside the supported ranges.
    #[error("invalid quadrature config: {reason}")]
    InvalidConfig { reason: String },
}

/// Result of one panel evaluation.
#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

// 7-point Gauss / 15-point Kronrod abscissae and weights (positive half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

fn qk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    let mut fv = [0.0_f64; 15];
    fv[7] = f_center;

    for j in 0..7 {
        let abscissa = half * XGK[j];
        let f1 = f(center - abscissa);
        let f2 = f(center + abscissa);
        fv[j] = f1;
        fv[14 - j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        // odd Kronrod indices coincide with the embedded Gauss rule
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let raw_err = ((res_kronrod - res_gauss) * half).abs();
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK error rescaling: trust the Gauss/Kronrod difference only
    // when it is small compared to the variation of the integrand.
    let mut error = raw_err;
    if res_asc != 0.0 && error != 0.0 {
        let scale = (200.0 * error / res_asc).powf(1.5);
        error = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }

    Panel {
        a,
        b,
        value: res_kronrod * half,
        error,
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

/// Adaptively integrate `f` over `[a, b]`.
///
/// `breakpoints` lists abscissae where panels are forced to split (gap
/// edges, Fermi windows); points outside `(a, b)` are ignored. Convergence
/// requires the summed error estimate to drop below
/// `max(abs_tol, rel_tol·|value|)`.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Estimate, QuadratureError> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }

    let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(
        breakpoints
            .iter()
            .copied()
            .filter(|x| x.is_finite() && *x > a && *x < b),
    );
    edges.push(b);
    edges.sort_by(|p, q| p.partial_cmp(q).unwrap());
    edges.dedup_by(|p, q| (*p - *q).abs() <= f64::EPSILON * (p.abs() + q.abs()).max(1e-300));

    let mut panels: Vec<Panel> = edges
        .windows(2)
        .map(|w| qk15(&mut f, w[0], w[1]))
        .collect();

    let mut subdivisions = 0usize;
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let required = abs_tol.max(rel_tol * total.abs());
        if err <= required {
            return Ok(Estimate {
                value: total,
                error: err,
                subdivisions,
            });
        }
        if subdivisions >= max_subdivisions {
            return Err(QuadratureError::NotConverged {
                achieved: err,
                required,
                subdivisions,
            });
        }

        // split the panel with the largest error estimate
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let Panel { a: pa, b: pb, .. } = panels[worst];
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // panel narrower than floating-point resolution: accept its value
            let total: f64 = panels.iter().map(|p| p.value).sum();
            let err: f64 = panels.iter().map(|p| p.error).sum();
            return Ok(Estimate {
                value: total,
                error: err,
                subdivisions,
            });
        }
        panels[worst] = qk15(&mut f, pa, mid);
        panels.push(qk15(&mut f, mid, pb));
        subdivisions += 1;
    }
}
