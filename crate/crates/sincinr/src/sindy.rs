//! Sparse identification of governing equations: candidate libraries,
//! derivative estimators, thresholded ridge regression and model simulation.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::dynamics::{rk4_sampled, Trajectory};
use crate::error::{Error, Result};
use crate::network::{shift_network, InrNetwork};
use crate::numeric::is_uniform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LibrarySpec {
    pub poly_degree: usize,
    pub include_trig: bool,
    pub include_constant: bool,
}

impl Default for LibrarySpec {
    fn default() -> Self {
        Self {
            poly_degree: 2,
            include_trig: false,
            include_constant: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Constant,
    /// Variable indices with repetition, non-decreasing.
    Monomial(Vec<usize>),
    Sin(usize),
    Cos(usize),
    SinCos(usize, usize),
}

impl Term {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Term::Constant => 1.0,
            Term::Monomial(vars) => {
                let mut p = x[vars[0]];
                for &v in &vars[1..] {
                    p *= x[v];
                }
                p
            }
            Term::Sin(i) => x[*i].sin(),
            Term::Cos(i) => x[*i].cos(),
            Term::SinCos(i, j) => x[*i].sin() * x[*j].cos(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Term::Constant => "1".into(),
            Term::Monomial(vars) => {
                let mut parts = Vec::new();
                let mut i = 0;
                while i < vars.len() {
                    let v = vars[i];
                    let run = vars[i..].iter().take_while(|&&w| w == v).count();
                    parts.push(if run == 1 {
                        format!("x{v}")
                    } else {
                        format!("x{v}^{run}")
                    });
                    i += run;
                }
                parts.join("·")
            }
            Term::Sin(i) => format!("sin(x{i})"),
            Term::Cos(i) => format!("cos(x{i})"),
            Term::SinCos(i, j) => format!("sin(x{i})·cos(x{j})"),
        }
    }
}

pub const MAX_POLY_DEGREE: usize = 5;

impl LibrarySpec {
    pub fn validate(&self) -> Result<()> {
        if self.poly_degree > MAX_POLY_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "polynomial degree {} exceeds {MAX_POLY_DEGREE}",
                self.poly_degree
            )));
        }
        if self.poly_degree == 0 && !self.include_trig && !self.include_constant {
            return Err(Error::InvalidParameter("library has no terms".into()));
        }
        Ok(())
    }

    /// Constant, monomials of degree 1..=d in graded-lex order, then
    /// `sin(x_i)`, `cos(x_i)`, and `sin(x_i)cos(x_j)` for `i ≠ j`.
    pub fn terms(&self, dim: usize) -> Vec<Term> {
        let mut terms = Vec::new();
        if self.include_constant {
            terms.push(Term::Constant);
        }
        for deg in 1..=self.poly_degree {
            let mut combo = Vec::with_capacity(deg);
            push_monomials(dim, deg, 0, &mut combo, &mut terms);
        }
        if self.include_trig {
            terms.extend((0..dim).map(Term::Sin));
            terms.extend((0..dim).map(Term::Cos));
            for i in 0..dim {
                for j in 0..dim {
                    if i != j {
                        terms.push(Term::SinCos(i, j));
                    }
                }
            }
        }
        terms
    }

    pub fn num_terms(&self, dim: usize) -> usize {
        self.terms(dim).len()
    }

    pub fn term_names(&self, dim: usize) -> Vec<String> {
        self.terms(dim).iter().map(Term::name).collect()
    }
}

fn push_monomials(
    dim: usize,
    deg: usize,
    start: usize,
    combo: &mut Vec<usize>,
    out: &mut Vec<Term>,
) {
    if combo.len() == deg {
        out.push(Term::Monomial(combo.clone()));
        return;
    }
    for v in start..dim {
        combo.push(v);
        push_monomials(dim, deg, v, combo, out);
        combo.pop();
    }
}

/// `Θ(Y)`, one row per sample and one column per library term.
pub fn build_library(y: &DMatrix<f64>, spec: &LibrarySpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if y.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let terms = spec.terms(y.ncols());
    let mut theta = DMatrix::zeros(y.nrows(), terms.len());
    let mut row = vec![0.0; y.ncols()];
    for r in 0..y.nrows() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = y[(r, c)];
        }
        for (c, t) in terms.iter().enumerate() {
            theta[(r, c)] = t.eval(&row);
        }
    }
    Ok(theta)
}

/// Derivative by multiplication with `iω` in the discrete Fourier domain.
///
/// Treats the series as periodic; the Nyquist coefficient is dropped for
/// even lengths.
pub fn spectral_derivative(series: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 4 {
        return Err(Error::LengthTooShort(n));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = series.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut buf);
    let scale = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    for (k, c) in buf.iter_mut().enumerate() {
        let signed = if k <= (n - 1) / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        };
        if n.is_multiple_of(2) && k == n / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, signed * scale);
        }
    }
    inverse.process(&mut buf);
    Ok(buf.iter().map(|c| c.re / n as f64).collect())
}

/// Second-order central differences with one-sided second-order ends.
pub fn central_difference(series: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 3 {
        return Err(Error::LengthTooShort(n));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let s = series;
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * dt);
    for i in 1..n - 1 {
        d[i] = (s[i + 1] - s[i - 1]) / (2.0 * dt);
    }
    d[n - 1] = (3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * dt);
    Ok(d)
}

/// Jacobian rows of a `1 → D` network at each time.
pub fn inr_derivative(net: &InrNetwork, times: &[f64]) -> Result<DMatrix<f64>> {
    if net.in_dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: net.in_dim(),
        });
    }
    let mut out = DMatrix::zeros(times.len(), net.out_dim());
    for (r, &t) in times.iter().enumerate() {
        let j = net.jacobian(&[t])?;
        for c in 0..net.out_dim() {
            out[(r, c)] = j[(c, 0)];
        }
    }
    Ok(out)
}

/// Network outputs at each time, one row per time.
pub fn inr_values(net: &InrNetwork, times: &[f64]) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(times.len(), net.out_dim());
    for (r, &t) in times.iter().enumerate() {
        for (c, v) in net.forward(&[t])?.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// Shallow sinc-INR fitted in closed form: shifted sinc units on a lattice of
/// spacing `omega`, output layer by ridge least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SincInrFit {
    pub omega: f64,
    pub ridge: f64,
    /// Extra lattice points beyond each end of the time range.
    pub margin: i64,
}

impl Default for SincInrFit {
    fn default() -> Self {
        Self {
            omega: 0.3,
            ridge: 1e-3,
            margin: 10,
        }
    }
}

impl SincInrFit {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ridge must be nonnegative, got {}",
                self.ridge
            )));
        }
        if self.margin < 0 {
            return Err(Error::InvalidParameter("margin must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn lattice(&self, t0: f64, t1: f64) -> RangeInclusive<i64> {
        let lo = (t0 / self.omega).floor() as i64 - self.margin;
        let hi = (t1 / self.omega).ceil() as i64 + self.margin;
        lo..=hi
    }

    /// Fits every column of `values` sampled at `times`.
    pub fn fit(&self, times: &[f64], values: &DMatrix<f64>) -> Result<InrNetwork> {
        self.validate()?;
        if times.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if times.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: values.nrows(),
            });
        }
        let kind = BasisKind::sinc(1.0);
        let range = self.lattice(times[0], times[times.len() - 1]);
        let mut net = shift_network(kind, self.omega, range, values.ncols())?;
        let inputs: Vec<[f64; 1]> = times.iter().map(|&t| [t]).collect();
        let targets: Vec<Vec<f64>> = (0..values.nrows())
            .map(|r| values.row(r).iter().copied().collect())
            .collect();
        net.fit_output_layer(&inputs, &targets, self.ridge)?;
        Ok(net)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DerivativeMethod {
    CentralDifference,
    Spectral,
    /// Jacobian of a trained `1 → D` network; the network also supplies `Y`.
    InrJacobian(InrNetwork),
    /// Fit a [`SincInrFit`] to the data, then use its values and Jacobian.
    SincInr(SincInrFit),
}

impl DerivativeMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CentralDifference => "central_difference",
            Self::Spectral => "spectral",
            Self::InrJacobian(_) => "inr_jacobian",
            Self::SincInr(_) => "sinc_inr",
        }
    }
}

fn uniform_dt(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::LengthTooShort(times.len()));
    }
    if !is_uniform(times, 1e-9) {
        return Err(Error::NonUniformGrid);
    }
    Ok((times[times.len() - 1] - times[0]) / (times.len() - 1) as f64)
}

fn columnwise(
    states: &DMatrix<f64>,
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(states.nrows(), states.ncols());
    for c in 0..states.ncols() {
        let col: Vec<f64> = states.column(c).iter().copied().collect();
        for (r, v) in f(&col)?.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// State and derivative estimates `(Y, Ẏ)` for a sampled trajectory.
pub fn estimate_derivatives(
    traj: &Trajectory,
    method: &DerivativeMethod,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if traj.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let times = traj.times();
    match method {
        DerivativeMethod::CentralDifference => {
            let dt = uniform_dt(times)?;
            Ok((
                traj.states().clone(),
                columnwise(traj.states(), |c| central_difference(c, dt))?,
            ))
        }
        DerivativeMethod::Spectral => {
            let dt = uniform_dt(times)?;
            Ok((
                traj.states().clone(),
                columnwise(traj.states(), |c| spectral_derivative(c, dt))?,
            ))
        }
        DerivativeMethod::InrJacobian(net) => {
            if net.out_dim() != traj.dim() {
                return Err(Error::DimensionMismatch {
                    expected: traj.dim(),
                    got: net.out_dim(),
                });
            }
            Ok((inr_values(net, times)?, inr_derivative(net, times)?))
        }
        DerivativeMethod::SincInr(cfg) => {
            let net = cfg.fit(times, traj.states())?;
            Ok((inr_values(&net, times)?, inr_derivative(&net, times)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SindyModel {
    pub spec: LibrarySpec,
    pub dim: usize,
    /// `num_terms × dim`.
    pub gamma: DMatrix<f64>,
    pub lambda: f64,
    pub threshold: f64,
    pub active: DMatrix<bool>,
    /// `‖Ẏ − ΘΓ‖_F` after the initial solve and after every refit.
    pub residual_history: Vec<f64>,
    terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SindyModelJson {
    pub term_names: Vec<String>,
    /// Row-major `num_terms × dim`.
    pub gamma: Vec<f64>,
    pub lambda: f64,
    pub threshold: f64,
    pub dim: usize,
    pub library: LibrarySpec,
}

impl SindyModel {
    /// Model with explicit coefficients; entries equal to zero are inactive.
    pub fn from_gamma(spec: LibrarySpec, dim: usize, gamma: DMatrix<f64>) -> Result<Self> {
        spec.validate()?;
        let terms = spec.terms(dim);
        if gamma.shape() != (terms.len(), dim) {
            return Err(Error::ShapeMismatch(format!(
                "gamma is {:?}, library needs ({}, {dim})",
                gamma.shape(),
                terms.len()
            )));
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be finite".into()));
        }
        let active = gamma.map(|v| v != 0.0);
        Ok(Self {
            spec,
            dim,
            gamma,
            lambda: 0.0,
            threshold: 0.0,
            active,
            residual_history: Vec::new(),
            terms,
        })
    }

    pub fn zeros(spec: LibrarySpec, dim: usize) -> Result<Self> {
        let n = spec.num_terms(dim);
        Self::from_gamma(spec, dim, DMatrix::zeros(n, dim))
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term_names(&self) -> Vec<String> {
        self.terms.iter().map(Term::name).collect()
    }

    /// `ẋ = Θ(x) Γ`, accumulated term by term over active entries.
    pub fn rhs_into(&self, x: &[f64], out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = 0.0;
        }
        for (i, term) in self.terms.iter().enumerate() {
            if !(0..self.dim).any(|c| self.active[(i, c)]) {
                continue;
            }
            let value = term.eval(x);
            for (c, acc) in out.iter_mut().enumerate() {
                if self.active[(i, c)] {
                    *acc += self.gamma[(i, c)] * value;
                }
            }
        }
    }

    pub fn rhs(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        self.rhs_into(x, &mut out);
        Ok(out)
    }

    /// One line per state, e.g. `dx0/dt = -10.000·x0 + 10.000·x1`.
    pub fn equations(&self) -> Vec<String> {
        (0..self.dim)
            .map(|c| {
                let mut s = String::new();
                for (i, term) in self.terms.iter().enumerate() {
                    if !self.active[(i, c)] {
                        continue;
                    }
                    let g = self.gamma[(i, c)];
                    let mag = format!("{:.3}", g.abs());
                    let body = if matches!(term, Term::Constant) {
                        mag
                    } else {
                        format!("{mag}·{}", term.name())
                    };
                    if s.is_empty() {
                        s = if g < 0.0 { format!("-{body}") } else { body };
                    } else {
                        s += if g < 0.0 { " - " } else { " + " };
                        s += &body;
                    }
                }
                if s.is_empty() {
                    s = "0".into();
                }
                format!("dx{c}/dt = {s}")
            })
            .collect()
    }

    pub fn to_json(&self) -> SindyModelJson {
        let mut gamma = Vec::with_capacity(self.gamma.len());
        for r in 0..self.gamma.nrows() {
            gamma.extend(self.gamma.row(r).iter());
        }
        SindyModelJson {
            term_names: self.term_names(),
            gamma,
            lambda: self.lambda,
            threshold: self.threshold,
            dim: self.dim,
            library: self.spec,
        }
    }

    pub fn from_json(json: &SindyModelJson) -> Result<Self> {
        let n = json.library.num_terms(json.dim);
        if json.gamma.len() != n * json.dim {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {n} terms × {}",
                json.gamma.len(),
                json.dim
            )));
        }
        if json.term_names != json.library.term_names(json.dim) {
            return Err(Error::MalformedHeader(
                "term names do not match the library".into(),
            ));
        }
        let mut m = Self::from_gamma(
            json.library,
            json.dim,
            DMatrix::from_row_slice(n, json.dim, &json.gamma),
        )?;
        m.lambda = json.lambda;
        m.threshold = json.threshold;
        Ok(m)
    }
}

pub const DEFAULT_MAX_ITERS: usize = 10;

/// Sequentially thresholded ridge regression of `Ẏ` onto `Θ(Y)`.
///
/// Starts from the ridge solution on the full library, then alternates
/// zeroing `|γ| < threshold` with a ridge refit of each column on its
/// surviving terms, until the mask stops changing or `max_iters` refits.
pub fn fit_sindy(
    y: &DMatrix<f64>,
    ydot: &DMatrix<f64>,
    spec: &LibrarySpec,
    lambda: f64,
    threshold: f64,
    max_iters: usize,
) -> Result<SindyModel> {
    if y.shape() != ydot.shape() {
        return Err(Error::ShapeMismatch(format!(
            "Y is {:?}, Ẏ is {:?}",
            y.shape(),
            ydot.shape()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be nonnegative, got {threshold}"
        )));
    }
    if y.iter().chain(ydot.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("Y and Ẏ must be finite".into()));
    }
    let theta = build_library(y, spec)?;
    let (n, p) = theta.shape();
    let d = y.ncols();
    if p > n {
        return Err(Error::ShapeMismatch(format!(
            "{p} library terms for {n} samples"
        )));
    }
    let all: Vec<usize> = (0..p).collect();
    let mut gamma = DMatrix::zeros(p, d);
    for c in 0..d {
        let sol = ridge_solve(&theta, &ydot.column(c).into_owned(), &all, lambda)?;
        for (i, v) in all.iter().zip(sol.iter()) {
            gamma[(*i, c)] = *v;
        }
    }
    let mut history = vec![residual(&theta, ydot, &gamma)];
    let mut active = DMatrix::from_element(p, d, true);
    for _ in 0..max_iters {
        let next = gamma.map(|v| v.abs() >= threshold);
        let changed = next != active;
        active = next;
        for c in 0..d {
            let cols: Vec<usize> = (0..p).filter(|&i| active[(i, c)]).collect();
            for i in 0..p {
                gamma[(i, c)] = 0.0;
            }
            if cols.is_empty() {
                continue;
            }
            let sol = ridge_solve(&theta, &ydot.column(c).into_owned(), &cols, lambda)?;
            for (i, v) in cols.iter().zip(sol.iter()) {
                gamma[(*i, c)] = *v;
            }
        }
        history.push(residual(&theta, ydot, &gamma));
        if !changed {
            break;
        }
    }
    // refits may push survivors under the threshold; the final mask reports
    // exactly the nonzero entries
    let active = gamma.map(|v| v != 0.0);
    Ok(SindyModel {
        spec: *spec,
        dim: d,
        gamma,
        lambda,
        threshold,
        active,
        residual_history: history,
        terms: spec.terms(d),
    })
}

fn residual(theta: &DMatrix<f64>, ydot: &DMatrix<f64>, gamma: &DMatrix<f64>) -> f64 {
    (ydot - theta * gamma).norm()
}

/// Solves `(AᵀA + λI) g = Aᵀb` with `A` the selected columns of `theta`.
fn ridge_solve(
    theta: &DMatrix<f64>,
    b: &DVector<f64>,
    cols: &[usize],
    lambda: f64,
) -> Result<DVector<f64>> {
    let a = theta.select_columns(cols);
    let mut normal = a.transpose() * &a;
    let scale = normal.diagonal().max();
    for i in 0..cols.len() {
        normal[(i, i)] += lambda;
    }
    let rhs = a.transpose() * b;
    let deficient = |i: usize| Error::RankDeficientLibrary { column: cols[i] };
    if !(scale > 0.0) && lambda == 0.0 {
        return Err(deficient(0));
    }
    let chol = normal.clone().cholesky().ok_or_else(|| deficient(0))?;
    let l = chol.l_dirty();
    let floor = 1e-13 * scale.max(lambda);
    if let Some(i) = (0..cols.len()).find(|&i| l[(i, i)] * l[(i, i)] <= floor) {
        return Err(deficient(i));
    }
    Ok(chol.solve(&rhs))
}

/// RK4 with `substeps` internal steps per sample.
pub fn simulate_model_sampled(
    model: &SindyModel,
    x0: &[f64],
    t0: f64,
    dt: f64,
    samples: usize,
    substeps: usize,
) -> Result<Trajectory> {
    if x0.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: x0.len(),
        });
    }
    rk4_sampled(
        |x, _, out| model.rhs_into(x, out),
        x0,
        t0,
        dt,
        samples,
        substeps,
    )
}

/// RK4 from `t0` to `t1` with one step per sample.
pub fn simulate_model(
    model: &SindyModel,
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(t1 > t0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bad time range [{t0}, {t1}] with dt {dt}"
        )));
    }
    let steps = ((t1 - t0) / dt).round() as usize;
    simulate_model_sampled(model, x0, t0, dt, steps + 1, 1)
}

/// PSNR of a simulated run against a reference, with peak = reference range.
///
/// Rows missing from `simulated` (an early blow-up) and non-finite entries
/// count as the full peak error; every squared error is capped at peak².
pub fn reconstruction_psnr(reference: &DMatrix<f64>, simulated: &DMatrix<f64>) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if simulated.ncols() != reference.ncols() && simulated.nrows() > 0 {
        return Err(Error::DimensionMismatch {
            expected: reference.ncols(),
            got: simulated.ncols(),
        });
    }
    let peak = reference.max() - reference.min();
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter("reference has zero range".into()));
    }
    let cap = peak * peak;
    let mut total = 0.0;
    for r in 0..reference.nrows() {
        for c in 0..reference.ncols() {
            let e = if r < simulated.nrows() {
                let diff = reference[(r, c)] - simulated[(r, c)];
                if diff.is_finite() {
                    (diff * diff).min(cap)
                } else {
                    cap
                }
            } else {
                cap
            };
            total += e;
        }
    }
    let mse = total / reference.len() as f64;
    Ok(10.0 * (cap / mse).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineConfig {
    pub library: LibrarySpec,
    pub lambda: f64,
    pub threshold: f64,
    pub max_iters: usize,
    /// RK4 substeps per sample when re-simulating the recovered model.
    pub substeps: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            library: LibrarySpec::default(),
            lambda: 1e-6,
            threshold: 0.1,
            max_iters: DEFAULT_MAX_ITERS,
            substeps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub model: SindyModel,
    pub simulated: Trajectory,
    pub psnr: f64,
}

/// Estimate derivatives of `observed`, fit a model, re-simulate it from the
/// reference's first state on the reference's time grid, and score it.
pub fn sindy_pipeline(
    observed: &Trajectory,
    reference: &Trajectory,
    method: &DerivativeMethod,
    config: &PipelineConfig,
) -> Result<PipelineResult> {
    if observed.is_empty() || reference.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if reference.dim() != observed.dim() {
        return Err(Error::DimensionMismatch {
            expected: observed.dim(),
            got: reference.dim(),
        });
    }
    let (y, ydot) = estimate_derivatives(observed, method)?;
    let model = fit_sindy(
        &y,
        &ydot,
        &config.library,
        config.lambda,
        config.threshold,
        config.max_iters,
    )?;
    let times = reference.times();
    let dt = uniform_dt(times)?;
    let simulated = match simulate_model_sampled(
        &model,
        &reference.row(0),
        times[0],
        dt,
        reference.len(),
        config.substeps,
    ) {
        Ok(t) => t,
        Err(Error::NonFiniteState { partial, .. }) => *partial,
        Err(e) => return Err(e),
    };
    let psnr = reconstruction_psnr(reference.states(), simulated.states())?;
    Ok(PipelineResult {
        model,
        simulated,
        psnr,
    })
}
