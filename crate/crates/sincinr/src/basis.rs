//! Generator and activation families, their Fourier transforms, and the
//! sampling diagnostics built on them.
//!
//! Fourier convention: `F̂(ω) = ∫ F(x) e^{-iωx} dx`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{max_step, trapezoid, trapezoid_weights};
use crate::signals::Signal1D;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
pub const MAX_HERMITE_DEGREE: usize = 10;

/// Shape family of a generator with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Family {
    /// `sinc(bandwidth * x)` with `sinc(u) = sin(πu)/(πu)`.
    Sinc {
        bandwidth: f64,
    },
    /// `exp(-x² / (2 s²))`.
    Gaussian {
        s: f64,
    },
    /// `sin(omega * x)`.
    Sine {
        omega: f64,
    },
    Relu,
    /// `cos(omega0 * x) * exp(-x² / (2 sigma²))`.
    GaborWavelet {
        sigma: f64,
        omega0: f64,
    },
    /// `Σ c_n H_n(x) exp(-x²/2)` with physicists' Hermite polynomials.
    Hermite {
        #[serde(rename = "maxDegree")]
        max_degree: usize,
        coeffs: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisKind {
    #[serde(flatten)]
    pub family: Family,
    pub normalized: bool,
}

impl BasisKind {
    pub fn new(family: Family, normalized: bool) -> Result<Self> {
        let kind = Self { family, normalized };
        kind.validate()?;
        Ok(kind)
    }

    /// Normalized sinc, the canonical `sin(πx)/(πx)` when `bandwidth = 1`.
    pub fn sinc(bandwidth: f64) -> Self {
        Self {
            family: Family::Sinc { bandwidth },
            normalized: true,
        }
    }

    pub fn gaussian(s: f64) -> Self {
        Self {
            family: Family::Gaussian { s },
            normalized: true,
        }
    }

    pub fn sine(omega: f64) -> Self {
        Self {
            family: Family::Sine { omega },
            normalized: false,
        }
    }

    pub fn relu() -> Self {
        Self {
            family: Family::Relu,
            normalized: false,
        }
    }

    pub fn gabor(sigma: f64, omega0: f64) -> Self {
        Self {
            family: Family::GaborWavelet { sigma, omega0 },
            normalized: false,
        }
    }

    /// Hermite activation with coefficients for degrees `0..coeffs.len()`.
    pub fn hermite(coeffs: Vec<f64>) -> Self {
        let max_degree = coeffs.len().saturating_sub(1);
        Self {
            family: Family::Hermite { max_degree, coeffs },
            normalized: false,
        }
    }

    /// All-ones Hermite sum up to degree 4.
    pub fn hermite_default() -> Self {
        Self::hermite(vec![1.0; 5])
    }

    pub fn with_normalized(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            Family::Sinc { .. } => "sinc",
            Family::Gaussian { .. } => "gaussian",
            Family::Sine { .. } => "sine",
            Family::Relu => "relu",
            Family::GaborWavelet { .. } => "gabor_wavelet",
            Family::Hermite { .. } => "hermite",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match &self.family {
            Family::Sinc { bandwidth } => positive("bandwidth", *bandwidth)?,
            Family::Gaussian { s } => positive("s", *s)?,
            Family::Sine { omega } => positive("omega", *omega)?,
            Family::Relu => {}
            Family::GaborWavelet { sigma, omega0 } => {
                positive("sigma", *sigma)?;
                positive("omega0", *omega0)?;
            }
            Family::Hermite { max_degree, coeffs } => {
                if *max_degree > MAX_HERMITE_DEGREE {
                    return Err(Error::InvalidParameter(format!(
                        "maxDegree {max_degree} exceeds {MAX_HERMITE_DEGREE}"
                    )));
                }
                if coeffs.len() != max_degree + 1 {
                    return Err(Error::InvalidParameter(format!(
                        "expected {} Hermite coefficients, got {}",
                        max_degree + 1,
                        coeffs.len()
                    )));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "non-finite Hermite coefficient".into(),
                    ));
                }
            }
        }
        if self.normalized {
            if !self.is_integrable() {
                return Err(Error::InvalidParameter(format!(
                    "{} is not integrable and cannot be normalized",
                    self.name()
                )));
            }
            let integral = self.raw_integral();
            if !(integral.is_finite() && integral.abs() > 1e-300) || !(1.0 / integral).is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{} has vanishing integral {integral}; cannot normalize",
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// Whether the family lies in L¹ ∩ L², i.e. admits a Fourier transform.
    pub fn is_integrable(&self) -> bool {
        !matches!(self.family, Family::Sine { .. } | Family::Relu)
    }

    /// `∫ F` of the un-normalized generator, in closed form.
    fn raw_integral(&self) -> f64 {
        match &self.family {
            Family::Sinc { bandwidth } => 1.0 / bandwidth,
            Family::Gaussian { s } => s * SQRT_2PI,
            Family::GaborWavelet { sigma, omega0 } => {
                sigma * SQRT_2PI * (-0.5 * (sigma * omega0).powi(2)).exp()
            }
            Family::Hermite { coeffs, .. } => {
                // ∫ H_n e^{-x²/2} = √(2π) n!/(n/2)! for even n, 0 for odd n.
                let mut total = 0.0;
                for (n, c) in coeffs.iter().enumerate().step_by(2) {
                    let ratio: f64 = ((n / 2 + 1)..=n).map(|k| k as f64).product();
                    total += c * ratio;
                }
                SQRT_2PI * total
            }
            Family::Sine { .. } | Family::Relu => f64::NAN,
        }
    }

    /// Multiplier applied to the raw generator.
    pub fn scale(&self) -> f64 {
        if self.normalized {
            1.0 / self.raw_integral()
        } else {
            1.0
        }
    }

    fn raw(&self, x: f64) -> f64 {
        match &self.family {
            Family::Sinc { bandwidth } => sinc(bandwidth * x),
            Family::Gaussian { s } => (-0.5 * (x / s).powi(2)).exp(),
            Family::Sine { omega } => (omega * x).sin(),
            Family::Relu => x.max(0.0),
            Family::GaborWavelet { sigma, omega0 } => {
                (omega0 * x).cos() * (-0.5 * (x / sigma).powi(2)).exp()
            }
            Family::Hermite { coeffs, .. } => {
                let h = hermite_polys(x, coeffs.len());
                let p: f64 = coeffs.iter().zip(&h).map(|(c, h)| c * h).sum();
                p * (-0.5 * x * x).exp()
            }
        }
    }

    fn raw_derivative(&self, x: f64) -> f64 {
        match &self.family {
            Family::Sinc { bandwidth } => bandwidth * sinc_prime(bandwidth * x),
            Family::Gaussian { s } => -x / (s * s) * (-0.5 * (x / s).powi(2)).exp(),
            Family::Sine { omega } => omega * (omega * x).cos(),
            Family::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Family::GaborWavelet { sigma, omega0 } => {
                let env = (-0.5 * (x / sigma).powi(2)).exp();
                env * (-omega0 * (omega0 * x).sin() - x / (sigma * sigma) * (omega0 * x).cos())
            }
            Family::Hermite { coeffs, .. } => {
                // (H_n e^{-x²/2})' = (2n H_{n-1} - x H_n) e^{-x²/2}
                let h = hermite_polys(x, coeffs.len());
                let mut d = 0.0;
                for (n, c) in coeffs.iter().enumerate() {
                    let lower = if n == 0 {
                        0.0
                    } else {
                        2.0 * n as f64 * h[n - 1]
                    };
                    d += c * (lower - x * h[n]);
                }
                d * (-0.5 * x * x).exp()
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.scale() * self.raw(x)
    }

    /// Analytic derivative; ReLU uses the subgradient 0 at the kink.
    pub fn derivative(&self, x: f64) -> f64 {
        self.scale() * self.raw_derivative(x)
    }

    /// Value and derivative together, sharing the normalization factor.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let c = self.scale();
        (c * self.raw(x), c * self.raw_derivative(x))
    }

    /// Complex Fourier transform `F̂(ω)`.
    ///
    /// Sinc and Gaussian use closed forms; the sinc rectangle takes the
    /// midpoint value at its jump. Gabor and Hermite use the trapezoid rule
    /// on a truncated window:
    /// * Gabor: window `±10σ`, step `min(σ/4, 2π/(|ω| + ω₀ + 12/σ))`.
    /// * Hermite: window `±14`, step `min(1/4, 2π/(|ω| + 16))`.
    ///
    /// Both steps keep the aliased image of the transform below `e^{-70}`.
    pub fn fourier(&self, omega: f64) -> Result<Complex64> {
        let c = self.scale();
        let raw = match &self.family {
            Family::Sinc { bandwidth } => {
                let edge = PI * bandwidth;
                let a = omega.abs();
                let v = if a < edge {
                    1.0
                } else if a == edge {
                    0.5
                } else {
                    0.0
                };
                Complex64::new(v / bandwidth, 0.0)
            }
            Family::Gaussian { s } => {
                Complex64::new(s * SQRT_2PI * (-0.5 * (s * omega).powi(2)).exp(), 0.0)
            }
            Family::GaborWavelet { sigma, omega0 } => {
                if omega.abs() > omega0 + 40.0 / sigma {
                    Complex64::new(0.0, 0.0)
                } else {
                    let h = (sigma / 4.0).min(2.0 * PI / (omega.abs() + omega0 + 12.0 / sigma));
                    self.quadrature_transform(omega, 10.0 * sigma, h)
                }
            }
            Family::Hermite { .. } => {
                if omega.abs() > 40.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let h = 0.25f64.min(2.0 * PI / (omega.abs() + 16.0));
                    self.quadrature_transform(omega, 14.0, h)
                }
            }
            Family::Sine { .. } | Family::Relu => {
                return Err(Error::UnsupportedKind(format!(
                    "{} is not in L²(ℝ); its Fourier transform is not a function",
                    self.name()
                )))
            }
        };
        Ok(raw * c)
    }

    /// Trapezoid estimate of the raw transform over `[-half, half]`.
    fn quadrature_transform(&self, omega: f64, half: f64, step: f64) -> Complex64 {
        let n = (half / step).ceil() as i64;
        let h = half / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in -n..=n {
            let x = j as f64 * h;
            let w = if j.abs() == n { 0.5 } else { 1.0 };
            acc += Complex64::from_polar(w * self.raw(x), -omega * x);
        }
        acc * h
    }

    pub fn fourier_magnitude(&self, omega: f64) -> Result<f64> {
        Ok(self.fourier(omega)?.norm())
    }

    /// `|F̂(ω)|²` with jumps resolved to the mean of the one-sided limits.
    ///
    /// Periodized sums are only defined almost everywhere; averaging the
    /// limits keeps the sinc periodization equal to 1 at `ω = ±π`.
    fn energy(&self, omega: f64) -> Result<f64> {
        if let Family::Sinc { bandwidth } = self.family {
            let c = self.scale() / bandwidth;
            let a = omega.abs();
            let edge = PI * bandwidth;
            return Ok(if a < edge {
                c * c
            } else if a == edge {
                0.5 * c * c
            } else {
                0.0
            });
        }
        Ok(self.fourier(omega)?.norm_sqr())
    }

    /// Default symmetric truncation for partition-of-unity sums.
    pub fn default_puc_k(&self) -> usize {
        match self.family {
            Family::Sinc { .. } => 10_000,
            _ => 50,
        }
    }
}

/// Normalized sinc `sin(πu)/(πu)` with `sinc(0) = 1`.
pub fn sinc(u: f64) -> f64 {
    let p = PI * u;
    if p.abs() < 1e-4 {
        let p2 = p * p;
        1.0 - p2 / 6.0 + p2 * p2 / 120.0
    } else {
        p.sin() / p
    }
}

/// Derivative of [`sinc`] with respect to `u`.
pub fn sinc_prime(u: f64) -> f64 {
    let p = PI * u;
    if p.abs() < 1e-2 {
        let p2 = p * p;
        PI * p * (-1.0 / 3.0 + p2 / 30.0 - p2 * p2 / 840.0)
    } else {
        PI * (p * p.cos() - p.sin()) / (p * p)
    }
}

/// Physicists' Hermite polynomials `H_0..H_{count-1}` at `x`.
pub fn hermite_polys(x: f64, count: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(count);
    if count > 0 {
        h.push(1.0);
    }
    if count > 1 {
        h.push(2.0 * x);
    }
    for n in 2..count {
        let next = 2.0 * x * h[n - 1] - 2.0 * (n - 1) as f64 * h[n - 2];
        h.push(next);
    }
    h
}

/// Analysis function `F̃` for the approximation operator, normalized so
/// that `F̃̂(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisFunction {
    kind: BasisKind,
}

impl AnalysisFunction {
    pub fn new(family: Family) -> Result<Self> {
        if matches!(family, Family::Sine { .. } | Family::Relu) {
            return Err(Error::UnsupportedKind(
                "analysis functions must be smooth and decaying".into(),
            ));
        }
        Ok(Self {
            kind: BasisKind::new(family, true)?,
        })
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.kind.eval(x)
    }

    pub fn fourier(&self, omega: f64) -> Complex64 {
        self.kind
            .fourier(omega)
            .expect("analysis kinds are integrable")
    }
}

impl Default for AnalysisFunction {
    /// Normalized Gaussian with `s = 1`.
    fn default() -> Self {
        Self {
            kind: BasisKind::gaussian(1.0),
        }
    }
}

/// `n` points `i/n` covering `[0, 1)`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

/// `max_x |Σ_{|k|≤K} F(x+k) − 1|` over `grid`, with symmetric partial sums.
pub fn puc_residual(kind: &BasisKind, grid: &[f64], truncation_k: usize) -> f64 {
    grid.iter()
        .map(|&x| {
            let mut sum = 0.0;
            // smallest terms first
            for k in (1..=truncation_k).rev() {
                let k = k as f64;
                sum += kind.eval(x + k) + kind.eval(x - k);
            }
            sum += kind.eval(x);
            (sum - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Periodized energy `Σ_{|k|≤K} |F̂(ξ + 2πk)|²` at one frequency.
pub fn periodized_energy(kind: &BasisKind, xi: f64, truncation_k: usize) -> Result<f64> {
    let k = truncation_k as i64;
    let mut sum = 0.0;
    for j in (1..=k).rev() {
        let shift = 2.0 * PI * j as f64;
        sum += kind.energy(xi + shift)? + kind.energy(xi - shift)?;
    }
    Ok(sum + kind.energy(xi)?)
}

/// Riesz bound estimates `(A, B)` as min and max of the periodized energy.
pub fn riesz_bounds(
    kind: &BasisKind,
    freq_grid: &[f64],
    truncation_k: usize,
) -> Result<(f64, f64)> {
    if freq_grid.is_empty() {
        return Err(Error::InvalidParameter("empty frequency grid".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &xi in freq_grid {
        let e = periodized_energy(kind, xi, truncation_k)?;
        lo = lo.min(e);
        hi = hi.max(e);
    }
    Ok((lo, hi))
}

/// Error kernel `E_{F̃,F}(ω)`.
pub fn error_kernel(
    kind: &BasisKind,
    analysis: &AnalysisFunction,
    omega: f64,
    truncation_k: usize,
) -> Result<f64> {
    let a = analysis.fourier(omega);
    let f = kind.fourier(omega)?;
    let main = (Complex64::new(1.0, 0.0) - a * f).norm_sqr();
    let alias = periodized_energy(kind, omega, truncation_k)? - kind.energy(omega)?;
    Ok(main + a.norm_sqr() * alias.max(0.0))
}

/// Average squared approximation error `(1/2π) ∫ E(Ωξ) S(ξ) dξ` for a signal
/// with power spectrum `S`, by the trapezoid rule on `[-xi_max, xi_max]`.
pub fn kernel_weighted_error(
    kind: &BasisKind,
    analysis: &AnalysisFunction,
    omega_scale: f64,
    spectrum: impl Fn(f64) -> f64,
    xi_max: f64,
    points: usize,
    truncation_k: usize,
) -> Result<f64> {
    let xs = crate::numeric::linspace(-xi_max, xi_max, points);
    let mut ys = Vec::with_capacity(points);
    for &xi in &xs {
        ys.push(error_kernel(kind, analysis, omega_scale * xi, truncation_k)? * spectrum(xi));
    }
    Ok(trapezoid(&xs, &ys) / (2.0 * PI))
}

/// Coefficients `a(k)` indexed by consecutive integers starting at `first`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftCoefficients {
    pub first: i64,
    pub values: Vec<f64>,
}

impl ShiftCoefficients {
    pub fn new(first: i64, values: Vec<f64>) -> Self {
        Self { first, values }
    }

    pub fn zeros(range: RangeInclusive<i64>) -> Self {
        let len = (range.end() - range.start() + 1).max(0) as usize;
        Self {
            first: *range.start(),
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.first;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, k: i64, v: f64) {
        let i = (k - self.first) as usize;
        self.values[i] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.first + i as i64, v))
    }
}

/// `a_Ω(k) = ∫ s(y) F̃(y/Ω − k) dy / Ω`, trapezoid rule on the signal grid.
pub fn approx_operator(
    analysis: &AnalysisFunction,
    omega_scale: f64,
    signal: &Signal1D,
    k_range: RangeInclusive<i64>,
) -> Result<ShiftCoefficients> {
    if !(omega_scale > 0.0 && omega_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "omega scale must be positive, got {omega_scale}"
        )));
    }
    let limit = omega_scale / 8.0;
    let step = max_step(signal.grid());
    if step > limit * (1.0 + 1e-12) {
        return Err(Error::QuadratureTooCoarse { step, limit });
    }
    let w = trapezoid_weights(signal.grid());
    let mut coeffs = ShiftCoefficients::zeros(k_range.clone());
    for k in k_range {
        let kf = k as f64;
        let mut acc = 0.0;
        for ((&y, &s), &wj) in signal.grid().iter().zip(signal.values()).zip(&w) {
            acc += wj * s * analysis.eval(y / omega_scale - kf);
        }
        coeffs.set(k, acc / omega_scale);
    }
    Ok(coeffs)
}

/// Synthesis `Σ_k a(k) F(x/Ω − k)` at each grid point.
pub fn scaled_reconstruct(
    kind: &BasisKind,
    coeffs: &ShiftCoefficients,
    omega_scale: f64,
    xs: &[f64],
) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let u = x / omega_scale;
            coeffs
                .iter()
                .map(|(k, a)| a * kind.eval(u - k as f64))
                .sum()
        })
        .collect()
}

/// Discrete L² distance between two samplings of the same grid.
pub fn approximation_error(signal: &Signal1D, reconstruction: &Signal1D) -> Result<f64> {
    if signal.grid() != reconstruction.grid() {
        return Err(Error::GridMismatch);
    }
    let sq: Vec<f64> = signal
        .values()
        .iter()
        .zip(reconstruction.values())
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    Ok(trapezoid(signal.grid(), &sq).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BasisDiagnostics {
    pub puc_residual: f64,
    pub riesz_lower: f64,
    pub riesz_upper: f64,
    pub kernel_at_zero: f64,
    pub truncation_k: usize,
}

/// Full diagnostic record; fails with `UnsupportedKind` for kinds outside L².
pub fn diagnose(
    kind: &BasisKind,
    analysis: &AnalysisFunction,
    puc_grid: &[f64],
    freq_grid: &[f64],
    truncation_k: usize,
) -> Result<BasisDiagnostics> {
    let puc = puc_residual(kind, puc_grid, truncation_k);
    let riesz_k = truncation_k.min(RIESZ_K_CAP);
    let (lo, hi) = riesz_bounds(kind, freq_grid, riesz_k)?;
    let kernel = error_kernel(kind, analysis, 0.0, riesz_k)?;
    Ok(BasisDiagnostics {
        puc_residual: puc,
        riesz_lower: lo,
        riesz_upper: hi,
        kernel_at_zero: kernel,
        truncation_k,
    })
}

/// Fourier-side sums converge much faster than the spatial PUC sums, so
/// they stop at this many shifts.
pub const RIESZ_K_CAP: usize = 50;
