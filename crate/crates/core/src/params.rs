//! Model parameters, effective density and phase, time scaling, reference CDFs.
//!
//! The process lives on a segment of `N` sites with bulk hop rates 1 (right)
//! and `q` (left), and a reservoir at site 1 injecting at rate `alpha` and
//! ejecting at rate `gamma`. The reservoir creates an effective density
//!
//! ```text
//! rho = 1 / (1 + kappa_plus),
//! kappa_plus = (1 - q + gamma - alpha + sqrt((1 - q + gamma - alpha)^2 + 4 alpha gamma)) / (2 alpha),
//! ```
//!
//! i.e. `kappa_plus` is the positive root of `alpha k^2 - (1-q+gamma-alpha) k - gamma = 0`.
//! The relaxation regime switches at `rho = 1/2`: GSE-type fluctuations for
//! `rho > 1/2`, GOE at the boundary, Gaussian below. Since `rho = 1/2` is
//! equivalent to `2(alpha - gamma) = 1 - q`, the phase can be decided exactly
//! when the rates are supplied as rationals, which is the only reliable way
//! to hit the boundary case.

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("q must lie in (0,1), got {0}")]
    BadQ(f64),
    #[error("rates must satisfy alpha > gamma > 0, got alpha={alpha}, gamma={gamma}")]
    BadRates { alpha: f64, gamma: f64 },
    #[error("segment length must be at least 1")]
    BadLength,
    #[error("sigma^2 = rho(1-rho)(1-2rho) must be positive on the rho < 1/2 branch, got {0}")]
    NonPositiveSigma(f64),
    #[error("rho must lie in (0,1), got {0}")]
    BadRho(f64),
    #[error("table query {c} outside table range [{lo}, {hi}]")]
    TableRange { c: f64, lo: f64, hi: f64 },
    #[error("reference table: {0}")]
    BadTable(String),
}

/// Exact rational rates, carried alongside floats when the caller supplied
/// them, so that phase classification at `rho = 1/2` is not left to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactRates {
    pub q: Rational64,
    pub alpha: Rational64,
    pub gamma: Rational64,
}

/// Rates and segment length of an open-boundary ASEP instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub q: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub n: usize,
    pub exact: Option<ExactRates>,
}

impl ModelParams {
    pub fn new(q: f64, alpha: f64, gamma: f64, n: usize) -> Result<Self, ParamError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(ParamError::BadQ(q));
        }
        if !(alpha > gamma && gamma > 0.0) {
            return Err(ParamError::BadRates { alpha, gamma });
        }
        if n < 1 {
            return Err(ParamError::BadLength);
        }
        Ok(ModelParams {
            q,
            alpha,
            gamma,
            n,
            exact: None,
        })
    }

    /// Construct from exact rational rates; floats are derived from them.
    pub fn new_exact(
        q: Rational64,
        alpha: Rational64,
        gamma: Rational64,
        n: usize,
    ) -> Result<Self, ParamError> {
        let qf = q.to_f64().unwrap();
        let af = alpha.to_f64().unwrap();
        let gf = gamma.to_f64().unwrap();
        let one = Rational64::from_integer(1);
        if !(q > Rational64::zero() && q < one) {
            return Err(ParamError::BadQ(qf));
        }
        if !(alpha > gamma && gamma > Rational64::zero()) {
            return Err(ParamError::BadRates {
                alpha: af,
                gamma: gf,
            });
        }
        if n < 1 {
            return Err(ParamError::BadLength);
        }
        Ok(ModelParams {
            q: qf,
            alpha: af,
            gamma: gf,
            n,
            exact: Some(ExactRates { q, alpha, gamma }),
        })
    }

    /// Boundary deformation parameter `r = gamma / alpha` of the Hecke algebra.
    pub fn r(&self) -> f64 {
        self.gamma / self.alpha
    }

    pub fn r_exact(&self) -> Option<Rational64> {
        self.exact.map(|e| e.gamma / e.alpha)
    }

    /// Same rates on a different segment length.
    pub fn with_n(&self, n: usize) -> ModelParams {
        let mut p = self.clone();
        p.n = n.max(1);
        p
    }
}

/// Fluctuation regime selected by the effective density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// rho > 1/2: Tracy-Widom GSE profile.
    Gse,
    /// rho = 1/2: Tracy-Widom GOE profile.
    Goe,
    /// rho < 1/2: Gaussian profile.
    Gauss,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::Gse => write!(f, "GSE"),
            Phase::Goe => write!(f, "GOE"),
            Phase::Gauss => write!(f, "GAUSS"),
        }
    }
}

/// Effective density, the quadratic root it comes from, and the phase tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseInfo {
    pub kappa_plus: f64,
    pub rho: f64,
    pub phase: Phase,
}

/// Solve for `kappa_plus` and classify the phase.
///
/// With exact rational rates the sign of `2(alpha-gamma) - (1-q)` decides the
/// phase without touching the square root: the quadratic is upward in kappa
/// with one negative root, so its sign at `kappa = 1` places `kappa_plus`
/// relative to 1 and hence `rho` relative to 1/2.
pub fn effective_density(params: &ModelParams) -> PhaseInfo {
    let (q, alpha, gamma) = (params.q, params.alpha, params.gamma);
    let b = 1.0 - q + gamma - alpha;
    let kappa_plus = (b + (b * b + 4.0 * alpha * gamma).sqrt()) / (2.0 * alpha);
    let rho = 1.0 / (1.0 + kappa_plus);
    let phase = match params.exact {
        Some(e) => {
            let two = Rational64::from_integer(2);
            let one = Rational64::from_integer(1);
            let disc = two * (e.alpha - e.gamma) - (one - e.q);
            if disc > Rational64::zero() {
                Phase::Gse
            } else if disc < Rational64::zero() {
                Phase::Gauss
            } else {
                Phase::Goe
            }
        }
        None => {
            let disc = 2.0 * (alpha - gamma) - (1.0 - q);
            if disc > 0.0 {
                Phase::Gse
            } else if disc < 0.0 {
                Phase::Gauss
            } else {
                Phase::Goe
            }
        }
    };
    PhaseInfo {
        kappa_plus,
        rho,
        phase,
    }
}

/// Drift and fluctuation coefficients of the current at density `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftStats {
    /// `mu = rho (1 - rho)`.
    pub mu: f64,
    /// `sigma^2 = rho (1 - rho) (1 - 2 rho)`; positive iff `rho < 1/2`.
    pub sigma_sq: f64,
}

pub fn drift_stats(rho: f64) -> Result<DriftStats, ParamError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(ParamError::BadRho(rho));
    }
    let mu = rho * (1.0 - rho);
    Ok(DriftStats {
        mu,
        sigma_sq: mu * (1.0 - 2.0 * rho),
    })
}

/// Override hook for the KPZ branch constants of [`phase_time`]; both
/// phases at or above density one half print the same constants, so a
/// caller probing alternatives can swap them without touching the formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpzTimeConstants {
    /// Leading coefficient of `N` (printed: 4).
    pub lead: f64,
    /// Coefficient of `c N^{1/3}` (printed: `2^{-2/3}`).
    pub fluct: f64,
}

impl Default for KpzTimeConstants {
    fn default() -> Self {
        KpzTimeConstants {
            lead: 4.0,
            fluct: 2f64.powf(-2.0 / 3.0),
        }
    }
}

/// The phase-dependent time scale
///
/// ```text
/// g_rho(c) = 1/(1-q) * { 4N + c 2^{-2/3} N^{1/3}             rho >= 1/2
///                      { N/mu + c mu^{-1/2} sigma^{-1} N^{1/2}  rho < 1/2 }
/// ```
///
/// The printed form is identical for `rho > 1/2` and `rho = 1/2`; both are
/// implemented as printed, with [`phase_time_with`] available to override
/// the KPZ constants.
pub fn phase_time(info: &PhaseInfo, params: &ModelParams, c: f64) -> Result<f64, ParamError> {
    phase_time_with(info, params, c, &KpzTimeConstants::default())
}

/// [`phase_time`] with caller-supplied KPZ-branch constants.
pub fn phase_time_with(
    info: &PhaseInfo,
    params: &ModelParams,
    c: f64,
    kpz: &KpzTimeConstants,
) -> Result<f64, ParamError> {
    let n = params.n as f64;
    let pre = 1.0 / (1.0 - params.q);
    match info.phase {
        Phase::Gse | Phase::Goe => Ok(pre * (kpz.lead * n + c * kpz.fluct * n.powf(1.0 / 3.0))),
        Phase::Gauss => {
            let ds = drift_stats(info.rho)?;
            if ds.sigma_sq <= 0.0 {
                return Err(ParamError::NonPositiveSigma(ds.sigma_sq));
            }
            let sigma = ds.sigma_sq.sqrt();
            Ok(pre * (n / ds.mu + c * n.sqrt() / (ds.mu.sqrt() * sigma)))
        }
    }
}

/// Standard normal CDF.
///
/// For |x| <= 8 this sums Marsaglia's series `Phi(x) = 1/2 + phi(x) *
/// sum x^(2k+1) / (1*3*...*(2k+1))`, whose terms are all positive, so there
/// is no cancellation; beyond 8 the tail is below 1e-15 and is clamped.
/// Absolute error is well under 1e-12.
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - normal_cdf(-x);
    }
    // Beyond 7.5 the tail is under 4e-14 and the series result wobbles in
    // its last ulp; clamping keeps the function monotone.
    if x > 7.5 {
        return 1.0;
    }
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut k = 0u32;
    while term.abs() > 1e-18 * sum.abs() {
        k += 1;
        term *= x2 / (2 * k + 1) as f64;
        sum += term;
        if k > 500 {
            break;
        }
    }
    let phi = (-0.5 * x2).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (0.5 + phi * sum).min(1.0)
}

/// A tabulated CDF: strictly increasing abscissae, nondecreasing values in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    pub s: Vec<f64>,
    pub f: Vec<f64>,
}

impl CdfTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ParamError> {
        if points.len() < 2 {
            return Err(ParamError::BadTable("need at least two rows".into()));
        }
        let mut s = Vec::with_capacity(points.len());
        let mut f = Vec::with_capacity(points.len());
        for (i, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(ParamError::BadTable(format!("non-finite row {i}")));
            }
            if !(0.0..=1.0).contains(&y) {
                return Err(ParamError::BadTable(format!("F out of [0,1] at row {i}")));
            }
            if let Some(&prev) = s.last() {
                if x <= prev {
                    return Err(ParamError::BadTable(format!(
                        "abscissae not strictly increasing at row {i}"
                    )));
                }
            }
            if let Some(&prev) = f.last() {
                if y < prev {
                    return Err(ParamError::BadTable(format!(
                        "values decrease at row {i}"
                    )));
                }
            }
            s.push(x);
            f.push(y);
        }
        Ok(CdfTable { s, f })
    }

    /// Parse the two-column `s F` text format; `#` starts a comment.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, ParamError> {
        let mut points = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| ParamError::BadTable(e.to_string()))?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut cols = body.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64, ParamError> {
                tok.ok_or_else(|| ParamError::BadTable(format!("line {}: missing column", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| ParamError::BadTable(format!("line {}: {}", lineno + 1, e)))
            };
            let x = parse(cols.next())?;
            let y = parse(cols.next())?;
            points.push((x, y));
        }
        CdfTable::new(points)
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self, ParamError> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| ParamError::BadTable(format!("{}: {}", path.as_ref().display(), e)))?;
        CdfTable::from_reader(std::io::BufReader::new(file))
    }

    /// Linear interpolation; out-of-range queries are an error, never an
    /// extrapolation.
    pub fn eval(&self, c: f64) -> Result<f64, ParamError> {
        let lo = self.s[0];
        let hi = *self.s.last().unwrap();
        if c < lo || c > hi {
            return Err(ParamError::TableRange { c, lo, hi });
        }
        let i = match self.s.binary_search_by(|x| x.partial_cmp(&c).unwrap()) {
            Ok(i) => return Ok(self.f[i]),
            Err(i) => i,
        };
        let (x0, x1) = (self.s[i - 1], self.s[i]);
        let (y0, y1) = (self.f[i - 1], self.f[i]);
        Ok(y0 + (y1 - y0) * (c - x0) / (x1 - x0))
    }

    pub fn range(&self) -> (f64, f64) {
        (self.s[0], *self.s.last().unwrap())
    }
}

/// A limit CDF usable as the reference `F_rho`: the closed-form Gaussian or a
/// loaded table (Tracy-Widom GOE/GSE).
#[derive(Debug, Clone)]
pub enum ReferenceCdf {
    Gaussian,
    Table(CdfTable),
}

impl ReferenceCdf {
    pub fn eval(&self, c: f64) -> Result<f64, ParamError> {
        match self {
            ReferenceCdf::Gaussian => Ok(normal_cdf(c)),
            ReferenceCdf::Table(t) => t.eval(c),
        }
    }
}
