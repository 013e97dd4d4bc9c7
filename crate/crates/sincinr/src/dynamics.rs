//! ODE presets, RK4 integration, noisy observation, Hankel delay embeddings
//! and the closed-curve check for recovered limit cycles.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{parse_csv, write_csv, Signal1D};

/// Sign of the `xy` term in the Lorenz `dz/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LorenzForm {
    /// `dz/dt = −xy − βz` (sign-flipped coupling).
    Negated,
    /// `dz/dt = xy − βz`.
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum OdeSystem {
    Lorenz {
        sigma: f64,
        rho: f64,
        beta: f64,
        form: LorenzForm,
    },
    VanDerPol {
        mu: f64,
    },
    Chen {
        alpha: f64,
        beta: f64,
        delta: f64,
    },
    Rossler {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `ẍ + δẋ + αx + βx³ = γ cos(ωt)` with phase `θ̇ = ω` as third state.
    Duffing {
        delta: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        omega: f64,
    },
    /// State order: ψ11 ψ13 ψ22 ψ31 ψ33 ψ24 θ11 θ13 θ22 θ31 θ33 θ24 θ02 θ04.
    Rank14Lorenz {
        a: f64,
        big_r: f64,
        r: f64,
        sigma: f64,
    },
}

impl OdeSystem {
    pub fn lorenz() -> Self {
        Self::Lorenz {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            form: LorenzForm::Negated,
        }
    }

    pub fn lorenz_standard() -> Self {
        Self::Lorenz {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            form: LorenzForm::Standard,
        }
    }

    pub fn van_der_pol() -> Self {
        Self::VanDerPol { mu: 1.0 }
    }

    pub fn chen() -> Self {
        Self::Chen {
            alpha: 5.0,
            beta: -10.0,
            delta: -0.38,
        }
    }

    pub fn rossler() -> Self {
        Self::Rossler {
            a: 0.2,
            b: 0.2,
            c: 5.7,
        }
    }

    pub fn duffing() -> Self {
        Self::Duffing {
            delta: 0.2,
            alpha: -1.0,
            beta: 1.0,
            gamma: 0.3,
            omega: 1.0,
        }
    }

    /// `σ` is not given for this system; 10 matches the Lorenz preset.
    pub fn rank14_lorenz() -> Self {
        let r = 45.92;
        Self::Rank14Lorenz {
            a: std::f64::consts::FRAC_1_SQRT_2,
            big_r: 6.75 * r,
            r,
            sigma: 10.0,
        }
    }

    /// Preset by name: lorenz, van_der_pol, chen, rossler, duffing, rank14_lorenz.
    pub fn preset(name: &str, standard_lorenz: bool) -> Option<Self> {
        Some(match name {
            "lorenz" if standard_lorenz => Self::lorenz_standard(),
            "lorenz" => Self::lorenz(),
            "van_der_pol" | "vanderpol" | "vdp" => Self::van_der_pol(),
            "chen" => Self::chen(),
            "rossler" => Self::rossler(),
            "duffing" => Self::duffing(),
            "rank14_lorenz" | "rank14" => Self::rank14_lorenz(),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Lorenz { .. } => "lorenz",
            Self::VanDerPol { .. } => "van_der_pol",
            Self::Chen { .. } => "chen",
            Self::Rossler { .. } => "rossler",
            Self::Duffing { .. } => "duffing",
            Self::Rank14Lorenz { .. } => "rank14_lorenz",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::VanDerPol { .. } => 2,
            Self::Rank14Lorenz { .. } => 14,
            _ => 3,
        }
    }

    pub fn default_initial_state(&self) -> Vec<f64> {
        match self {
            Self::VanDerPol { .. } => vec![2.0, 0.0],
            Self::Duffing { .. } => vec![1.0, 0.0, 0.0],
            Self::Rank14Lorenz { .. } => {
                let mut v = vec![0.0; 14];
                v[0] = 1.0;
                v[6] = 1.0;
                v
            }
            _ => vec![1.0, 1.0, 1.0],
        }
    }

    pub fn rhs(&self, state: &[f64], t: f64) -> Result<Vec<f64>> {
        if state.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: state.len(),
            });
        }
        let mut out = vec![0.0; state.len()];
        self.rhs_into(state, t, &mut out);
        Ok(out)
    }

    /// Unchecked right-hand side.
    ///
    /// Polynomial systems are written term by term in library order so a
    /// hand-built sparse model reproduces them bit for bit.
    pub fn rhs_into(&self, s: &[f64], _t: f64, out: &mut [f64]) {
        match *self {
            Self::Lorenz {
                sigma,
                rho,
                beta,
                form,
            } => {
                let (x, y, z) = (s[0], s[1], s[2]);
                out[0] = -sigma * x + sigma * y;
                out[1] = rho * x - y - x * z;
                out[2] = match form {
                    LorenzForm::Negated => -beta * z - x * y,
                    LorenzForm::Standard => -beta * z + x * y,
                };
            }
            Self::VanDerPol { mu } => {
                let (x, y) = (s[0], s[1]);
                out[0] = mu * (x - x * x * x / 3.0 - y);
                out[1] = x / mu;
            }
            Self::Chen { alpha, beta, delta } => {
                let (x, y, z) = (s[0], s[1], s[2]);
                out[0] = alpha * x - y * z;
                out[1] = beta * y + x * z;
                out[2] = delta * z + x * y / 3.0;
            }
            Self::Rossler { a, b, c } => {
                let (x, y, z) = (s[0], s[1], s[2]);
                out[0] = -(y + z);
                out[1] = x + a * y;
                out[2] = b + z * (x - c);
            }
            Self::Duffing {
                delta,
                alpha,
                beta,
                gamma,
                omega,
            } => {
                let (x, v, th) = (s[0], s[1], s[2]);
                out[0] = v;
                out[1] = gamma * th.cos() - delta * v - alpha * x - beta * x * x * x;
                out[2] = omega;
            }
            Self::Rank14Lorenz {
                a, big_r, sigma, ..
            } => rank14_rhs(a, big_r, sigma, s, out),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params: Vec<f64> = match *self {
            Self::Lorenz {
                sigma, rho, beta, ..
            } => vec![sigma, rho, beta],
            Self::VanDerPol { mu } => {
                if mu == 0.0 {
                    return Err(Error::InvalidParameter("mu must be nonzero".into()));
                }
                vec![mu]
            }
            Self::Chen { alpha, beta, delta } => vec![alpha, beta, delta],
            Self::Rossler { a, b, c } => vec![a, b, c],
            Self::Duffing {
                delta,
                alpha,
                beta,
                gamma,
                omega,
            } => vec![delta, alpha, beta, gamma, omega],
            Self::Rank14Lorenz { a, big_r, r, sigma } => vec![a, big_r, r, sigma],
        };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "system parameters must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Generalized rank-14 Lorenz right-hand side, transcribed term by term
/// (including the cancelling pair in dθ02/dt).
fn rank14_rhs(a: f64, rr: f64, sigma: f64, s: &[f64], out: &mut [f64]) {
    let [p11, p13, p22, p31, p33, p24, t11, t13, t22, t31, t33, t24, t02, t04] =
        <[f64; 14]>::try_from(s).expect("rank-14 state");
    out[0] = -a
        * (7.0 / 3.0 * p13 * p22
            + 17.0 / 6.0 * p13 * p24
            + 1.0 / 3.0 * p31 * p22
            + 4.5 * p33 * p24)
        - sigma * 1.5 * p11
        + sigma * a * 2.0 / 3.0 * t11;
    out[1] = a
        * (-9.0 / 19.0 * p11 * p22 + 33.0 / 38.0 * p11 * p24 + 2.0 / 19.0 * p31 * p22
            - 125.0 / 38.0 * p31 * p24)
        - sigma * 9.5 * p13
        + sigma * a * 2.0 / 19.0 * t13;
    out[2] = a * (4.0 / 3.0 * p11 * p13 - 2.0 / 3.0 * p11 * p31 - 4.0 / 3.0 * p13 * p31)
        - 6.0 * sigma * p22
        + 1.0 / 3.0 * sigma * a * t22;
    out[3] = a * (9.0 / 11.0 * p11 * p22 + 14.0 / 11.0 * p13 * p22 + 85.0 / 22.0 * p13 * p24)
        - 5.5 * sigma * p31
        + 6.0 / 11.0 * sigma * a * t31;
    out[4] = a * (11.0 / 6.0 * p11 * p24) - 13.5 * sigma * p33 + 2.0 / 9.0 * sigma * a * t33;
    out[5] = a * (-2.0 / 9.0 * p11 * p13 - p11 * p33 + 5.0 / 9.0 * p13 * p31) - 18.0 * sigma * p24
        + 1.0 / 9.0 * sigma * a * t24;
    out[6] = a
        * (p11 * t02 + p13 * t22 - 0.5 * p13 * t24 - p13 * t02
            + 2.0 * p13 * t04
            + p22 * t13
            + p22 * t31
            + p31 * t22
            + 1.5 * p33 * t24
            - 0.5 * p24 * t13
            + 1.5 * p24 * t33)
        + rr * a * p11
        - 1.5 * t11;
    out[7] = a
        * (-p11 * t22 + 0.5 * p11 * t24 - p11 * t02 + 2.0 * p11 * t04
            - p22 * t11
            - 2.0 * p31 * t22
            + 2.5 * p31 * t24
            + 0.5 * p24 * t11
            + 2.5 * p24 * t31)
        + rr * a * p13
        - 9.5 * t13;
    out[8] = a
        * (p11 * t13 - p11 * t31 - p13 * t11 + 2.0 * p13 * t31 + 4.0 * p22 * t04 - p33 * t11
            + 2.0 * p24 * t02)
        + 2.0 * rr * a * p22
        - 6.0 * t22;
    out[9] = a
        * (p11 * t22 - 2.0 * p13 * t22 + 2.5 * p13 * t24 - p22 * t11
            + 2.0 * p22 * t13
            + 4.0 * p31 * t02
            - 4.0 * p33 * t02
            + 8.0 * p33 * t04
            - 2.5 * p24 * t13)
        + 3.0 * rr * a * p31
        - 5.5 * t31;
    out[10] = a * (1.5 * p11 * t24 - 4.0 * p31 * t02 + 8.0 * p31 * t04 - 1.5 * p24 * t11)
        + 3.0 * rr * a * p33
        - 13.5 * t33;
    out[11] = a
        * (0.5 * p11 * t13 - 1.5 * p11 * t33 + 0.5 * p13 * t11
            - 2.5 * p13 * t31
            - 2.0 * p22 * t02
            - 2.5 * p31 * t13
            - 1.5 * p33 * t11)
        + 2.0 * rr * a * p24
        - 18.0 * t24;
    out[12] = a
        * (-0.5 * p11 * t11 + 0.5 * p11 * t11 + 0.5 * p11 * t13 + 0.5 * p13 * t11 + p22 * t24
            - 1.5 * p31 * t31
            + 1.5 * p31 * t33
            + 1.5 * p33 * t31
            + p24 * t24)
        - 4.0 * t02;
    out[13] = -a * (p11 * t13 + p13 * t11 + 2.0 * p22 * t22 + 4.0 * p31 * t33 + 4.0 * p33 * t31)
        - 16.0 * t04;
}

/// Time grid plus one state row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: DMatrix<f64>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: DMatrix<f64>) -> Result<Self> {
        if times.len() != states.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} times for {} state rows",
                times.len(),
                states.nrows()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "times must be strictly increasing".into(),
            ));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite state".into()));
        }
        Ok(Self { times, states })
    }

    /// Skips validation; used for partial trajectories and exact constructions.
    pub(crate) fn from_parts(times: Vec<f64>, states: DMatrix<f64>) -> Self {
        Self { times, states }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &DMatrix<f64> {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.states.column(i).iter().copied().collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.states.row(i).iter().copied().collect()
    }

    /// Rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Trajectory {
        let rows = end - start;
        Self {
            times: self.times[start..end].to_vec(),
            states: self.states.rows(start, rows).into_owned(),
        }
    }

    /// CSV with header `t,x0,x1,…`.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim()).map(|i| format!("x{i}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = (0..self.len()).map(|r| {
            let mut row = vec![self.times[r]];
            row.extend(self.states.row(r).iter());
            row
        });
        write_csv(&header, rows)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (header, rows) = parse_csv(text)?;
        if header.len() < 2 {
            return Err(Error::MalformedHeader(
                "trajectory CSV needs t and at least one state column".into(),
            ));
        }
        let d = header.len() - 1;
        let mut states = DMatrix::zeros(rows.len(), d);
        let mut times = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            times.push(row[0]);
            for c in 0..d {
                states[(r, c)] = row[c + 1];
            }
        }
        Self::new(times, states)
    }
}

/// Classical RK4 from `t0` to `t1` with step `dt`; samples every step.
///
/// The step count is `round((t1 − t0)/dt)` and sample times are `t0 + i·dt`.
pub fn integrate_rk4(
    system: &OdeSystem,
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(format!(
            "need t1 > t0, got [{t0}, {t1}]"
        )));
    }
    let steps = ((t1 - t0) / dt).round() as usize;
    integrate_sampled(system, x0, t0, dt, steps + 1, 1)
}

/// RK4 with `substeps` internal steps between consecutive samples.
pub fn integrate_sampled(
    system: &OdeSystem,
    x0: &[f64],
    t0: f64,
    dt: f64,
    samples: usize,
    substeps: usize,
) -> Result<Trajectory> {
    if x0.len() != system.dimension() {
        return Err(Error::DimensionMismatch {
            expected: system.dimension(),
            got: x0.len(),
        });
    }
    system.validate()?;
    rk4_sampled(
        |x, t, out| system.rhs_into(x, t, out),
        x0,
        t0,
        dt,
        samples,
        substeps,
    )
}

/// Generic sampled RK4 driver for a vector field `f(x, t, out)`.
pub fn rk4_sampled<F>(
    f: F,
    x0: &[f64],
    t0: f64,
    dt: f64,
    samples: usize,
    substeps: usize,
) -> Result<Trajectory>
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if samples == 0 || substeps == 0 {
        return Err(Error::InvalidParameter(
            "need at least one sample and one substep".into(),
        ));
    }
    let d = x0.len();
    let h = dt / substeps as f64;
    let mut times = Vec::with_capacity(samples);
    let mut data = Vec::with_capacity(samples * d);
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
    );
    let partial = |times: Vec<f64>, data: &[f64]| {
        let n = times.len();
        Trajectory::from_parts(times, DMatrix::from_row_slice(n, d, data))
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState {
            t: t0,
            partial: Box::new(partial(vec![], &[])),
        });
    }
    times.push(t0);
    data.extend_from_slice(&x);
    for i in 1..samples {
        let ts = t0 + (i - 1) as f64 * dt;
        for s in 0..substeps {
            let t = ts + s as f64 * h;
            f(&x, t, &mut k1);
            for j in 0..d {
                tmp[j] = x[j] + 0.5 * h * k1[j];
            }
            f(&tmp, t + 0.5 * h, &mut k2);
            for j in 0..d {
                tmp[j] = x[j] + 0.5 * h * k2[j];
            }
            f(&tmp, t + 0.5 * h, &mut k3);
            for j in 0..d {
                tmp[j] = x[j] + h * k3[j];
            }
            f(&tmp, t + h, &mut k4);
            for j in 0..d {
                x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        let t = t0 + i as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                t,
                partial: Box::new(partial(times, &data)),
            });
        }
        times.push(t);
        data.extend_from_slice(&x);
    }
    Ok(partial(times, &data))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Noise {
    None,
    /// `η ~ U(−n, n)`.
    Uniform {
        n: f64,
    },
    Gaussian {
        std: f64,
    },
}

type Sampler = Box<dyn FnMut(&mut ChaCha8Rng) -> f64>;

impl Noise {
    fn sampler(self) -> Result<Sampler> {
        Ok(match self {
            Noise::None => Box::new(|_| 0.0),
            Noise::Uniform { n: 0.0 } => Box::new(|_| 0.0),
            Noise::Uniform { n } => {
                if !(n > 0.0 && n.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "uniform noise bound must be positive, got {n}"
                    )));
                }
                Box::new(move |rng| rng.gen_range(-n..n))
            }
            Noise::Gaussian { std } => {
                let dist = Normal::new(0.0, std)
                    .map_err(|e| Error::InvalidParameter(format!("gaussian noise: {e}")))?;
                Box::new(move |rng| dist.sample(rng))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObservationSpec {
    pub component_index: usize,
    pub noise: Noise,
    pub seed: u64,
}

/// Coordinate projection plus seeded additive noise.
pub fn observe(traj: &Trajectory, spec: &ObservationSpec) -> Result<Signal1D> {
    if spec.component_index >= traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            got: spec.component_index,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = spec.noise.sampler()?;
    let values = traj
        .states
        .column(spec.component_index)
        .iter()
        .map(|v| v + draw(&mut rng))
        .collect();
    Signal1D::new(traj.times.clone(), values)
}

/// Seeded additive noise on every coordinate, drawn row by row.
pub fn add_noise(traj: &Trajectory, noise: Noise, seed: u64) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = noise.sampler()?;
    let mut states = traj.states.clone();
    for r in 0..states.nrows() {
        for c in 0..states.ncols() {
            states[(r, c)] += draw(&mut rng);
        }
    }
    Ok(Trajectory {
        times: traj.times.clone(),
        states,
    })
}

/// `H[i][j] = series[i + j]`, an `m × n` matrix of delay windows.
pub fn build_hankel(series: &[f64], m: usize, n: usize) -> Result<DMatrix<f64>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter(
            "Hankel dimensions must be positive".into(),
        ));
    }
    let need = m + n - 1;
    if series.len() < need {
        return Err(Error::SeriesTooShort {
            need,
            have: series.len(),
        });
    }
    Ok(DMatrix::from_fn(m, n, |i, j| series[i + j]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayEmbedding {
    pub hankel: DMatrix<f64>,
    /// All singular values, non-increasing.
    pub singular_values: Vec<f64>,
    /// Leading `r` left singular vectors as columns.
    pub modes: DMatrix<f64>,
    /// Leading `r` right singular vectors scaled by their singular values,
    /// one row per Hankel column.
    pub surrogate: DMatrix<f64>,
}

impl DelayEmbedding {
    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }
}

pub const SVD_MAX_ITERATIONS: usize = 10_000;

/// Truncated SVD of a Hankel matrix.
pub fn svd_embed(hankel: &DMatrix<f64>, r: usize) -> Result<DelayEmbedding> {
    let (m, n) = hankel.shape();
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidParameter(format!(
            "rank {r} outside 1..={}",
            m.min(n)
        )));
    }
    let svd = nalgebra::linalg::SVD::try_new(
        hankel.clone(),
        true,
        true,
        f64::EPSILON,
        SVD_MAX_ITERATIONS,
    )
    .ok_or(Error::ConvergenceFailure)?;
    let u = svd.u.as_ref().ok_or(Error::ConvergenceFailure)?;
    let vt = svd.v_t.as_ref().ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut modes = DMatrix::zeros(m, r);
    let mut surrogate = DMatrix::zeros(n, r);
    for (c, &i) in order.iter().take(r).enumerate() {
        // fix the sign so the largest-magnitude entry of each mode is positive
        let col = u.column(i);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        modes.set_column(c, &(col * sign));
        let s = svd.singular_values[i];
        for j in 0..n {
            surrogate[(j, c)] = sign * vt[(i, j)] * s;
        }
    }
    Ok(DelayEmbedding {
        hankel: hankel.clone(),
        singular_values,
        modes,
        surrogate,
    })
}

/// Smallest integer `d ≥ 2D + 1`.
pub fn takens_min_dim(box_dim: f64) -> Result<usize> {
    if !(box_dim > 0.0 && box_dim.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "box dimension must be positive, got {box_dim}"
        )));
    }
    Ok((2.0 * box_dim + 1.0).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CycleGap {
    /// Symmetric Hausdorff distance between the first and last cycle.
    pub gap: f64,
    /// Bounding-box diagonal of the whole curve.
    pub diameter: f64,
    /// Period in samples.
    pub period: usize,
}

impl CycleGap {
    pub fn relative(&self) -> f64 {
        self.gap / self.diameter
    }
}

/// Period in samples from the autocorrelation of `x`: the first local
/// maximum after the first negative value.
pub fn autocorrelation_period(x: &[f64]) -> Result<usize> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let a: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let max_lag = n / 2;
    let ac: Vec<f64> = (0..max_lag)
        .map(|l| {
            a[..n - l]
                .iter()
                .zip(&a[l..])
                .map(|(p, q)| p * q)
                .sum::<f64>()
                / (n - l) as f64
        })
        .collect();
    let neg = ac
        .iter()
        .position(|&v| v < 0.0)
        .ok_or_else(|| Error::NoPeriod("autocorrelation never turns negative".into()))?;
    (neg.max(1)..max_lag.saturating_sub(1))
        .find(|&l| ac[l] > 0.0 && ac[l] >= ac[l - 1] && ac[l] > ac[l + 1])
        .ok_or_else(|| Error::NoPeriod("no autocorrelation peak after the first zero".into()))
}

/// How far a sampled orbit is from closing on itself: compares the first and
/// last period as polylines.
pub fn cycle_gap(curve: &DMatrix<f64>) -> Result<CycleGap> {
    let n = curve.nrows();
    if n < 8 || curve.ncols() == 0 {
        return Err(Error::LengthTooShort(n));
    }
    let first: Vec<f64> = curve.column(0).iter().copied().collect();
    let period = autocorrelation_period(&first)?;
    if 2 * (period + 1) > n {
        return Err(Error::NoPeriod(format!(
            "period {period} too long for {n} samples"
        )));
    }
    let points = |start: usize| -> Vec<Vec<f64>> {
        (start..start + period + 1)
            .map(|r| curve.row(r).iter().copied().collect())
            .collect()
    };
    let head = points(0);
    let tail = points(n - period - 1);
    let gap = directed_hausdorff(&head, &tail).max(directed_hausdorff(&tail, &head));
    let diameter = (0..curve.ncols())
        .map(|c| {
            let col = curve.column(c);
            (col.max() - col.min()).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    Ok(CycleGap {
        gap,
        diameter,
        period,
    })
}

fn directed_hausdorff(points: &[Vec<f64>], polyline: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|p| {
            polyline
                .windows(2)
                .map(|seg| point_segment_distance(p, &seg[0], &seg[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut apab = 0.0;
    for i in 0..p.len() {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        apab += (p[i] - a[i]) * ab;
    }
    let t = if ab2 > 0.0 {
        (apab / ab2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.iter()
        .zip(a.iter().zip(b))
        .map(|(pi, (ai, bi))| {
            let q = ai + t * (bi - ai);
            (pi - q) * (pi - q)
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rhs_examples() {
        assert_eq!(
            OdeSystem::lorenz().rhs(&[0.0; 3], 0.0).unwrap(),
            vec![0.0; 3]
        );
        let v = OdeSystem::van_der_pol().rhs(&[1.0, 0.0], 0.0).unwrap();
        assert_abs_diff_eq!(v[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(v[1], 1.0);
        assert_eq!(
            OdeSystem::rossler().rhs(&[0.0; 3], 0.0).unwrap(),
            vec![0.0, 0.0, 0.2]
        );
        assert!(matches!(
            OdeSystem::lorenz().rhs(&[0.0; 2], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lorenz_forms_differ_only_in_xy_sign() {
        let s = [1.5, -2.0, 3.0];
        let a = OdeSystem::lorenz().rhs(&s, 0.0).unwrap();
        let b = OdeSystem::lorenz_standard().rhs(&s, 0.0).unwrap();
        assert_eq!(a[..2], b[..2]);
        assert_abs_diff_eq!(a[2], -1.5 * -2.0 - 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[2], 1.5 * -2.0 - 8.0, epsilon = 1e-12);
    }

    #[test]
    fn chen_and_duffing_by_hand() {
        let v = OdeSystem::chen().rhs(&[1.0, 2.0, 3.0], 0.0).unwrap();
        assert_abs_diff_eq!(v[0], 5.0 - 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], -20.0 + 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], -0.38 * 3.0 + 2.0 / 3.0, epsilon = 1e-15);
        let v = OdeSystem::duffing().rhs(&[1.0, 0.5, 0.0], 0.0).unwrap();
        assert_abs_diff_eq!(v[1], 0.3 - 0.1 + 1.0 - 1.0, epsilon = 1e-15);
        assert_eq!(v[2], 1.0);
    }

    #[test]
    fn rank14_reference_values() {
        let sys = OdeSystem::rank14_lorenz();
        assert_eq!(sys.dimension(), 14);
        // zero state is a fixed point
        assert!(sys.rhs(&[0.0; 14], 0.0).unwrap().iter().all(|&v| v == 0.0));
        // a single active mode gives the linear couplings only
        let mut s = [0.0; 14];
        s[0] = 1.0;
        let v = sys.rhs(&s, 0.0).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(v[0], -15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[6], 6.75 * 45.92 * a, epsilon = 1e-10);
        // ψ11 θ11 terms in dθ02/dt cancel; ψ11 θ13 survives with weight a/2
        let mut s = [0.0; 14];
        s[0] = 2.0;
        s[7] = 3.0;
        let v = sys.rhs(&s, 0.0).unwrap();
        assert_abs_diff_eq!(v[12], a * 0.5 * 6.0, epsilon = 1e-12);
    }

    #[test]
    fn rk4_decay_matches_exponential() {
        let sys = OdeSystem::Chen {
            alpha: 5.0,
            beta: -10.0,
            delta: -1.0,
        };
        // with x = y = 0 the z equation is ż = −z
        let tr = integrate_rk4(&sys, &[0.0, 0.0, 1.0], 0.0, 1.0, 0.01).unwrap();
        assert_eq!(tr.len(), 101);
        assert_abs_diff_eq!(tr.states()[(100, 2)], (-1.0f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(*tr.times().last().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rk4_order() {
        let solve = |dt: f64| {
            let tr = rk4_sampled(
                |x, _, o| o[0] = -x[0],
                &[1.0],
                0.0,
                dt,
                (1.0 / dt).round() as usize + 1,
                1,
            )
            .unwrap();
            (tr.states()[(tr.len() - 1, 0)] - (-1.0f64).exp()).abs()
        };
        let (e1, e2) = (solve(0.1), solve(0.05));
        assert!(e1 / e2 >= 14.0, "{}", e1 / e2);
    }

    #[test]
    fn zero_field_is_constant() {
        let tr = rk4_sampled(
            |_, _, o| o.iter_mut().for_each(|v| *v = 0.0),
            &[1.0, -2.0],
            0.0,
            0.1,
            20,
            3,
        )
        .unwrap();
        for r in 0..tr.len() {
            assert_eq!(tr.row(r), vec![1.0, -2.0]);
        }
    }

    #[test]
    fn lorenz_stays_bounded() {
        let tr = integrate_sampled(
            &OdeSystem::lorenz_standard(),
            &[1.0, 1.0, 1.0],
            0.0,
            0.02,
            5001,
            1,
        )
        .unwrap();
        assert!(tr.states().iter().all(|v| v.abs() <= 100.0));
    }

    #[test]
    fn blow_up_reports_partial_trajectory() {
        let err = rk4_sampled(|x, _, o| o[0] = x[0] * x[0], &[1.0], 0.0, 0.1, 100, 1).unwrap_err();
        match err {
            Error::NonFiniteState { t, partial } => {
                assert!(t > 0.5 && t < 2.0);
                assert!(partial.len() >= 5);
                assert!(partial.states().iter().all(|v| v.is_finite()));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn observe_examples() {
        let tr =
            integrate_sampled(&OdeSystem::van_der_pol(), &[2.0, 0.0], 0.0, 0.02, 5000, 1).unwrap();
        let clean = observe(
            &tr,
            &ObservationSpec {
                component_index: 0,
                noise: Noise::None,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(clean.values(), tr.column(0).as_slice());
        let zero = observe(
            &tr,
            &ObservationSpec {
                component_index: 0,
                noise: Noise::Uniform { n: 0.0 },
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(zero, clean);
        let g = observe(
            &tr,
            &ObservationSpec {
                component_index: 0,
                noise: Noise::Gaussian { std: 0.5 },
                seed: 3,
            },
        )
        .unwrap();
        let resid: Vec<f64> = g
            .values()
            .iter()
            .zip(clean.values())
            .map(|(a, b)| a - b)
            .collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let var = resid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!((0.22..=0.28).contains(&var), "{var}");
        assert!(observe(
            &tr,
            &ObservationSpec {
                component_index: 2,
                noise: Noise::None,
                seed: 0
            }
        )
        .is_err());
    }

    #[test]
    fn hankel_examples() {
        let h = build_hankel(&[1.0, 2.0, 3.0, 4.0], 2, 3).unwrap();
        assert_eq!(
            h,
            DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0])
        );
        assert!(matches!(
            build_hankel(&[1.0, 2.0], 2, 2),
            Err(Error::SeriesTooShort { need: 3, have: 2 })
        ));
        let e = svd_embed(&build_hankel(&[2.5; 30], 10, 21).unwrap(), 2).unwrap();
        assert!(e.singular_values[1] / e.singular_values[0] <= 1e-10);
    }

    #[test]
    fn sinusoid_hankel_has_rank_two() {
        let s: Vec<f64> = (0..99).map(|k| (0.1 * k as f64).sin()).collect();
        let e = svd_embed(&build_hankel(&s, 50, 50).unwrap(), 2).unwrap();
        let tol = 1e-8 * e.singular_values[0];
        assert_eq!(e.singular_values.iter().filter(|&&v| v > tol).count(), 2);
        // Eckart–Young: rank-2 truncation keeps all the energy
        let total: f64 = e.singular_values.iter().map(|v| v * v).sum();
        let kept: f64 = e.singular_values[..2].iter().map(|v| v * v).sum();
        assert!(kept / total >= 0.99);
        assert!(e.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn takens_examples() {
        assert_eq!(takens_min_dim(1.0).unwrap(), 3);
        assert_eq!(takens_min_dim(2.06).unwrap(), 6);
        assert_eq!(takens_min_dim(0.5).unwrap(), 2);
        assert!(takens_min_dim(0.0).is_err());
    }

    #[test]
    fn circle_has_zero_gap() {
        let n = 1000;
        let curve = DMatrix::from_fn(n, 2, |i, c| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 100.0;
            if c == 0 {
                t.cos()
            } else {
                t.sin()
            }
        });
        let g = cycle_gap(&curve).unwrap();
        assert_eq!(g.period, 100);
        assert!(g.relative() < 1e-12);
        // an outward spiral does not close
        let spiral = DMatrix::from_fn(n, 2, |i, c| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 100.0;
            let r = 1.0 + 0.001 * i as f64;
            if c == 0 {
                r * t.cos()
            } else {
                r * t.sin()
            }
        });
        assert!(cycle_gap(&spiral).unwrap().relative() > 0.1);
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let tr =
            integrate_sampled(&OdeSystem::lorenz(), &[1.0, 1.0, 1.0], 0.0, 0.01, 20, 1).unwrap();
        let text = tr.to_csv();
        assert!(text.starts_with("t,x0,x1,x2\n"));
        assert_eq!(Trajectory::from_csv(&text).unwrap(), tr);
    }
}
