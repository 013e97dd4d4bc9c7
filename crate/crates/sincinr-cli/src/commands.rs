//! Subcommand implementations.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use sincinr::basis::{
    approx_operator, approximation_error, diagnose, puc_residual, scaled_reconstruct, unit_grid,
    AnalysisFunction, BasisKind, Family,
};
use sincinr::dynamics::{
    add_noise, build_hankel, cycle_gap, integrate_sampled, observe, svd_embed, Noise,
    ObservationSpec, OdeSystem, Trajectory,
};
use sincinr::network::{init_network, InrNetwork, Optimizer, TrainConfig, TrainReport};
use sincinr::numeric::linspace;
use sincinr::signals::{
    format_float, gen_bandlimited, image_to_dataset, load_pgm, min_max_normalize, mse_to_psnr,
    parse_csv, psnr, write_csv, ImageGray, Signal1D,
};
use sincinr::sindy::{
    inr_values, sindy_pipeline, DerivativeMethod, LibrarySpec, PipelineConfig, SincInrFit,
    SindyModel,
};

use crate::run::{usage, CliError, CliResult, Run};
use crate::table::{Cell, Format, Table};
use crate::Common;

/// Basis kind selection shared by several subcommands.
#[derive(Args, Debug, Clone)]
pub struct KindArgs {
    /// Kind: sinc, gaussian, sine, relu, gabor or hermite
    #[arg(long, visible_alias = "activation")]
    pub kind: Option<String>,
    /// Shape parameter: sinc bandwidth, gaussian width s, sine frequency, gabor sigma [default: 1]
    #[arg(long)]
    pub kind_param: Option<f64>,
    /// Gabor carrier frequency ω0 in rad per unit [default: 2]
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Hermite coefficients c0,c1,… [default: 1,1,1,1,1]
    #[arg(long, value_delimiter = ',')]
    pub hermite_coeffs: Option<Vec<f64>>,
    /// Scale to unit integral where defined (true/false) [default: per kind]
    #[arg(long)]
    pub normalized: Option<bool>,
}

fn resolve_kind(
    run: &mut Run,
    args: &KindArgs,
    default_kind: Option<&str>,
) -> CliResult<BasisKind> {
    let name: String = match default_kind {
        Some(d) => run.get("kind", args.kind.clone(), d.to_string())?,
        None => run.require("kind", args.kind.clone())?,
    };
    let param = run.get("kind-param", args.kind_param, 1.0)?;
    let mut kind = match name.as_str() {
        "sinc" => BasisKind::sinc(param),
        "gaussian" => BasisKind::gaussian(param),
        "sine" => BasisKind::sine(param),
        "relu" => BasisKind::relu(),
        "gabor" => {
            let w0 = run.get("omega0", args.omega0, 2.0)?;
            BasisKind::gabor(param, w0)
        }
        "hermite" => {
            let c = run.get("hermite-coeffs", args.hermite_coeffs.clone(), vec![1.0; 5])?;
            BasisKind::hermite(c)
        }
        other => return Err(usage(format!("unknown kind {other:?}"))),
    };
    if let Some(n) = run.get_opt("normalized", args.normalized)? {
        kind = kind.with_normalized(n);
    }
    kind.validate().map_err(|e| usage(e.to_string()))?;
    Ok(kind)
}

fn open_run(name: &str, common: &Common) -> CliResult<(Run, u64, Format)> {
    let mut run = Run::new(name, common.out_dir.clone(), common.config.clone())?;
    let seed = run.get("seed", common.seed, 0u64)?;
    let format = run.get("format", common.format.clone(), "csv".to_string())?;
    Ok((run, seed, Format::parse(&format)?))
}

fn check_positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be positive, got {v}")))
    }
}

// ---------------------------------------------------------------- basis-check

#[derive(Args, Debug)]
pub struct BasisCheckArgs {
    /// Kind to analyse (positional form of --kind)
    pub kind_name: Option<String>,
    #[command(flatten)]
    pub kind: KindArgs,
    /// Number of shifts K on each side of the partition-of-unity and Riesz sums [default: 10000 for sinc, 50 otherwise]
    #[arg(long)]
    pub truncation_k: Option<usize>,
    /// Points in the spatial [0,1) and frequency [-π,π] grids [default: 201]
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Width s of the Gaussian analysis function used for the error kernel [default: 1]
    #[arg(long)]
    pub analysis_s: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

pub fn basis_check(args: BasisCheckArgs) -> CliResult<()> {
    let (mut run, _, _) = open_run("basis-check", &args.common)?;
    let mut kind_args = args.kind.clone();
    if kind_args.kind.is_none() {
        kind_args.kind = args.kind_name.clone();
    }
    let kind = resolve_kind(&mut run, &kind_args, None)?;
    let k = run.get("truncation-k", args.truncation_k, kind.default_puc_k())?;
    let n = run.get("grid-size", args.grid_size, 201usize)?;
    if n < 2 {
        return Err(usage("--grid-size must be at least 2"));
    }
    let s = check_positive("analysis-s", run.get("analysis-s", args.analysis_s, 1.0)?)?;
    let analysis = AnalysisFunction::new(Family::Gaussian { s })?;
    let puc_grid = unit_grid(n);
    let freq_grid = linspace(-std::f64::consts::PI, std::f64::consts::PI, n);
    if !kind.is_integrable() {
        let puc = puc_residual(&kind, &puc_grid, k);
        let reason = match kind.family {
            Family::Relu => "relu grows linearly, so it is not in L²; the periodized energy Σ|F̂(ξ+2πk)|² is unbounded and no upper Riesz bound B exists",
            _ => "sine has a Fourier transform made of Dirac masses; the periodized energy is unbounded and no upper Riesz bound B exists",
        };
        run.write_json(
            "basis_check.json",
            &json!({
                "kind": kind,
                "pucResidual": puc,
                "truncationK": k,
                "riesz": "unsupported",
                "reason": reason,
            }),
        )?;
        run.finish()?;
        return Err(CliError::Data(format!(
            "unsupported kind {}: {reason}",
            kind.name()
        )));
    }
    let d = diagnose(&kind, &analysis, &puc_grid, &freq_grid, k)?;
    run.write_json(
        "basis_check.json",
        &json!({
            "kind": kind,
            "pucResidual": d.puc_residual,
            "rieszLower": d.riesz_lower,
            "rieszUpper": d.riesz_upper,
            "kernelAtZero": d.kernel_at_zero,
            "truncationK": d.truncation_k,
            "riesz": "supported",
        }),
    )?;
    println!(
        "{}: A = {:.6}, B = {:.6}, PUC residual = {:.3e} (K = {}), E(0) = {:.3e}",
        kind.name(),
        d.riesz_lower,
        d.riesz_upper,
        d.puc_residual,
        k,
        d.kernel_at_zero
    );
    run.finish()
}

// --------------------------------------------------------------------- approx

#[derive(Args, Debug)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub kind: KindArgs,
    /// Scales Ω to evaluate, comma separated (unit: signal x units)
    #[arg(long, value_delimiter = ',')]
    pub omegas: Option<Vec<f64>>,
    /// Test signal: bump, gaussian or bandlimited [default: bump]
    #[arg(long)]
    pub signal: Option<String>,
    /// Analysis function: sinc or gaussian [default: sinc]
    #[arg(long)]
    pub analysis: Option<String>,
    /// Analysis shape parameter (sinc bandwidth or gaussian s) [default: 1]
    #[arg(long)]
    pub analysis_param: Option<f64>,
    /// Half-width L of the signal domain [-L, L] [default: 4]
    #[arg(long)]
    pub half_width: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

/// `exp(1 − 1/(1 − x²))` on `|x| < 1`, zero elsewhere.
pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

pub fn approx(args: ApproxArgs) -> CliResult<()> {
    let (mut run, seed, format) = open_run("approx", &args.common)?;
    let kind = resolve_kind(&mut run, &args.kind, Some("sinc"))?;
    let omegas = run.require("omegas", args.omegas.clone())?;
    if omegas.is_empty() {
        return Err(usage("--omegas needs at least one value"));
    }
    for &o in &omegas {
        check_positive("omegas", o)?;
    }
    let signal_name = run.get("signal", args.signal.clone(), "bump".to_string())?;
    let analysis_name = run.get("analysis", args.analysis.clone(), "sinc".to_string())?;
    let ap = check_positive(
        "analysis-param",
        run.get("analysis-param", args.analysis_param, 1.0)?,
    )?;
    let half = check_positive("half-width", run.get("half-width", args.half_width, 4.0)?)?;
    let analysis = match analysis_name.as_str() {
        "sinc" => AnalysisFunction::new(Family::Sinc { bandwidth: ap })?,
        "gaussian" => AnalysisFunction::new(Family::Gaussian { s: ap })?,
        other => return Err(usage(format!("unknown analysis function {other:?}"))),
    };
    let min_omega = omegas.iter().copied().fold(f64::INFINITY, f64::min);
    let points = ((2.0 * half) / (min_omega / 16.0)).ceil() as usize + 1;
    let grid = linspace(-half, half, points);
    let signal = match signal_name.as_str() {
        "bump" => Signal1D::from_fn(grid.clone(), bump)?,
        "gaussian" => Signal1D::from_fn(grid.clone(), |x| (-2.0 * x * x).exp())?,
        "bandlimited" => {
            let b = gen_bandlimited(1.0, 8, seed)?;
            let shift = b.node(8) / 2.0;
            Signal1D::from_fn(grid.clone(), |x| b.eval(x + shift))?
        }
        other => return Err(usage(format!("unknown signal {other:?}"))),
    };
    let zero = Signal1D::new(grid.clone(), vec![0.0; grid.len()])?;
    let norm = approximation_error(&signal, &zero)?;
    let mut table = Table::new(&["omega", "l2Error", "relativeError"]);
    for &omega in &omegas {
        let margin = 20;
        let kmax = (half / omega).ceil() as i64 + margin;
        let coeffs = approx_operator(&analysis, omega, &signal, -kmax..=kmax)?;
        let rec = Signal1D::new(
            grid.clone(),
            scaled_reconstruct(&kind, &coeffs, omega, &grid),
        )?;
        let err = approximation_error(&signal, &rec)?;
        println!(
            "Ω = {omega}: L² error {err:.3e} (relative {:.3e})",
            err / norm
        );
        table.push(vec![omega.into(), err.into(), (err / norm).into()]);
    }
    run.write(
        &format!("approx.{}", format.extension()),
        table.render(format).as_bytes(),
    )?;
    run.finish()
}

// ------------------------------------------------------------------- training

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    /// Hidden layer widths, comma separated [default: 64,64,64 for images, 64,64 for signals, 32,32,32 for sweep]
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Activation scale Ω: hidden units compute F(z/Ω) [default: 1; train-signal 0.1]
    #[arg(long)]
    pub omega: Option<f64>,
    /// Training epochs [default: 2000; sweep 300]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate [default: 0.001]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Minibatch size in samples; 0 means full batch [default: 0]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Optimizer: adam or gd [default: adam]
    #[arg(long)]
    pub optimizer: Option<String>,
}

struct TrainSetup {
    hidden: Vec<usize>,
    omega: f64,
    config: TrainConfig,
}

fn resolve_train(
    run: &mut Run,
    args: &TrainArgs,
    seed: u64,
    default_hidden: Vec<usize>,
    default_omega: f64,
    default_epochs: usize,
) -> CliResult<TrainSetup> {
    let hidden = run.get("hidden", args.hidden.clone(), default_hidden)?;
    if hidden.is_empty() || hidden.contains(&0) {
        return Err(usage("--hidden needs at least one positive width"));
    }
    let omega = check_positive("omega", run.get("omega", args.omega, default_omega)?)?;
    let epochs = run.get("epochs", args.epochs, default_epochs)?;
    let learning_rate = run.get("learning-rate", args.learning_rate, 1e-3)?;
    let batch = run.get("batch-size", args.batch_size, 0usize)?;
    let optimizer = match run
        .get("optimizer", args.optimizer.clone(), "adam".to_string())?
        .as_str()
    {
        "adam" => Optimizer::Adam,
        "gd" => Optimizer::GradientDescent,
        other => return Err(usage(format!("unknown optimizer {other:?}"))),
    };
    let config = TrainConfig {
        learning_rate,
        epochs,
        batch_size: if batch == 0 { usize::MAX } else { batch },
        seed,
        optimizer,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(TrainSetup {
        hidden,
        omega,
        config,
    })
}

fn shape(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

fn log_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,loss,psnr\n");
    for (i, (l, p)) in report
        .loss_history
        .iter()
        .zip(&report.psnr_history)
        .enumerate()
    {
        out.push_str(&format!(
            "{},{},{}\n",
            i + 1,
            format_float(*l),
            format_float(*p)
        ));
    }
    out
}

#[derive(Args, Debug)]
pub struct TrainImageArgs {
    /// Input binary PGM (P5, maxval 255)
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[command(flatten)]
    pub kind: KindArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub common: Common,
}

fn predict_image(net: &InrNetwork, image: &ImageGray) -> CliResult<Vec<f64>> {
    let (coords, _) = image_to_dataset(image);
    coords.iter().map(|c| Ok(net.forward(c)?[0])).collect()
}

pub fn train_image(args: TrainImageArgs) -> CliResult<()> {
    let (mut run, seed, _) = open_run("train-image", &args.common)?;
    let path: PathBuf = run.require("image", args.image.clone())?;
    let kind = resolve_kind(&mut run, &args.kind, Some("sinc"))?;
    let setup = resolve_train(&mut run, &args.train, seed, vec![64, 64, 64], 1.0, 2000)?;
    let image = load_pgm(&path)?;
    let (coords, values) = image_to_dataset(&image);
    let targets: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
    let mut net = init_network(&shape(2, &setup.hidden, 1), kind, setup.omega, seed)?;
    let report = net.train(&coords, &targets, &setup.config)?;
    let pred = predict_image(&net, &image)?;
    let score = psnr(&values, &pred)?;
    run.write("checkpoint.bin", &net.to_checkpoint_bytes())?;
    run.write("psnr_log.csv", log_csv(&report).as_bytes())?;
    let rec = ImageGray::new(image.width(), image.height(), pred)?;
    run.write("reconstruction.pgm", &rec.to_pgm_bytes())?;
    run.write_json(
        "summary.json",
        &json!({ "psnr": score, "finalLoss": report.final_loss, "shape": net.shape(), "pixels": values.len() }),
    )?;
    println!("PSNR {score:.2} dB after {} epochs", setup.config.epochs);
    run.finish()
}

#[derive(Args, Debug)]
pub struct TrainSignalArgs {
    /// Band limit of the generated signal in cycles per unit [default: 4]
    #[arg(long)]
    pub max_freq: Option<f64>,
    /// Number of sinc terms in the generated signal [default: 8]
    #[arg(long)]
    pub terms: Option<usize>,
    /// Equispaced samples on [0, 1] [default: 256]
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub kind: KindArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub common: Common,
}

pub fn train_signal(args: TrainSignalArgs) -> CliResult<()> {
    let (mut run, seed, _) = open_run("train-signal", &args.common)?;
    let max_freq = check_positive("max-freq", run.get("max-freq", args.max_freq, 4.0)?)?;
    let terms = run.get("terms", args.terms, 8usize)?;
    let samples = run.get("samples", args.samples, 256usize)?;
    if terms == 0 || samples < 2 {
        return Err(usage("--terms must be positive and --samples at least 2"));
    }
    let kind = resolve_kind(&mut run, &args.kind, Some("sinc"))?;
    let setup = resolve_train(&mut run, &args.train, seed, vec![64, 64], 0.1, 2000)?;
    let signal = gen_bandlimited(max_freq, terms, seed)?;
    let grid = linspace(0.0, 1.0, samples);
    let raw: Vec<f64> = grid.iter().map(|&x| signal.eval(x)).collect();
    let values = min_max_normalize(&raw);
    let inputs: Vec<[f64; 1]> = grid.iter().map(|&x| [x]).collect();
    let targets: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
    let mut net = init_network(&shape(1, &setup.hidden, 1), kind, setup.omega, seed)?;
    let report = net.train(&inputs, &targets, &setup.config)?;
    let pred: Vec<f64> = inputs
        .iter()
        .map(|x| Ok(net.forward(x)?[0]))
        .collect::<CliResult<_>>()?;
    let score = psnr(&values, &pred)?;
    run.write(
        "signal.csv",
        Signal1D::new(grid.clone(), values)?.to_csv().as_bytes(),
    )?;
    run.write(
        "prediction.csv",
        Signal1D::new(grid, pred)?.to_csv().as_bytes(),
    )?;
    run.write("psnr_log.csv", log_csv(&report).as_bytes())?;
    run.write("checkpoint.bin", &net.to_checkpoint_bytes())?;
    run.write_json(
        "summary.json",
        &json!({ "psnr": score, "finalLoss": report.final_loss, "shape": net.shape() }),
    )?;
    println!("PSNR {score:.2} dB after {} epochs", setup.config.epochs);
    run.finish()
}

// ------------------------------------------------------------------- dynamics

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// ODE preset: lorenz, van_der_pol, chen, rossler, duffing or rank14_lorenz
    #[arg(long)]
    pub system: Option<String>,
    /// Lorenz dz/dt form: true gives xy − βz, false the negated form −xy − βz [default: true]
    #[arg(long)]
    pub standard_lorenz: Option<bool>,
    /// Initial state, comma separated [default: per system]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// Number of output samples
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sample spacing in time units
    #[arg(long)]
    pub dt: Option<f64>,
    /// RK4 steps per sample interval
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Samples discarded before recording starts [default: 0]
    #[arg(long)]
    pub burn_in: Option<usize>,
}

struct SystemSetup {
    system: OdeSystem,
    x0: Vec<f64>,
    samples: usize,
    dt: f64,
    substeps: usize,
    burn_in: usize,
}

fn resolve_system(
    run: &mut Run,
    args: &SystemArgs,
    defaults: (&str, bool, usize, f64, usize),
) -> CliResult<SystemSetup> {
    let (d_system, d_standard, d_samples, d_dt, d_sub) = defaults;
    let name = run.get("system", args.system.clone(), d_system.to_string())?;
    let standard = run.get("standard-lorenz", args.standard_lorenz, d_standard)?;
    let system = OdeSystem::preset(&name, standard)
        .ok_or_else(|| usage(format!("unknown system {name:?}")))?;
    let x0 = run.get("x0", args.x0.clone(), system.default_initial_state())?;
    if x0.len() != system.dimension() {
        return Err(usage(format!(
            "--x0 needs {} values for {name}",
            system.dimension()
        )));
    }
    let samples = run.get("samples", args.samples, d_samples)?;
    let dt = check_positive("dt", run.get("dt", args.dt, d_dt)?)?;
    let substeps = run.get("substeps", args.substeps, d_sub)?;
    let burn_in = run.get("burn-in", args.burn_in, 0usize)?;
    if samples == 0 || substeps == 0 {
        return Err(usage("--samples and --substeps must be positive"));
    }
    Ok(SystemSetup {
        system,
        x0,
        samples,
        dt,
        substeps,
        burn_in,
    })
}

fn simulate(setup: &SystemSetup, samples: usize) -> CliResult<Trajectory> {
    let mut x0 = setup.x0.clone();
    if setup.burn_in > 0 {
        let burn = integrate_sampled(
            &setup.system,
            &x0,
            0.0,
            setup.dt,
            setup.burn_in + 1,
            setup.substeps,
        )?;
        x0 = burn.row(setup.burn_in);
    }
    Ok(integrate_sampled(
        &setup.system,
        &x0,
        0.0,
        setup.dt,
        samples,
        setup.substeps,
    )?)
}

fn resolve_noise(
    run: &mut Run,
    law: Option<String>,
    level: Option<f64>,
    default_law: &str,
) -> CliResult<Noise> {
    let law = run.get("noise", law, default_law.to_string())?;
    let level = run.get("noise-level", level, 0.0)?;
    if !(level >= 0.0 && level.is_finite()) {
        return Err(usage(format!(
            "--noise-level must be nonnegative, got {level}"
        )));
    }
    match law.as_str() {
        "none" => Ok(Noise::None),
        _ if level == 0.0 => Ok(Noise::None),
        "uniform" => Ok(Noise::Uniform { n: level }),
        "gaussian" => Ok(Noise::Gaussian { std: level }),
        other => Err(usage(format!("unknown noise law {other:?}"))),
    }
}

#[derive(Args, Debug)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Noise law: none, uniform (U(−n, n)) or gaussian (std n) [default: none]
    #[arg(long)]
    pub noise: Option<String>,
    /// Noise magnitude n in state units [default: 0]
    #[arg(long)]
    pub noise_level: Option<f64>,
    /// Observe only this state coordinate (0-based) and write observed.csv
    #[arg(long)]
    pub observe: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

pub fn dynamics(args: DynamicsArgs) -> CliResult<()> {
    let (mut run, seed, _) = open_run("dynamics", &args.common)?;
    let setup = resolve_system(&mut run, &args.system, ("lorenz", true, 5000, 0.02, 1))?;
    let noise = resolve_noise(&mut run, args.noise.clone(), args.noise_level, "none")?;
    let component = run.get_opt("observe", args.observe)?;
    let traj = simulate(&setup, setup.samples)?;
    run.write("trajectory.csv", traj.to_csv().as_bytes())?;
    match component {
        Some(c) => {
            let obs = observe(
                &traj,
                &ObservationSpec {
                    component_index: c,
                    noise,
                    seed,
                },
            )?;
            run.write("observed.csv", obs.to_csv().as_bytes())?;
        }
        None if noise != Noise::None => {
            let noisy = add_noise(&traj, noise, seed)?;
            run.write("noisy_trajectory.csv", noisy.to_csv().as_bytes())?;
        }
        None => {}
    }
    println!(
        "{}: {} samples of dimension {}",
        setup.system.name(),
        traj.len(),
        traj.dim()
    );
    run.finish()
}

// --------------------------------------------------------------------- hankel

#[derive(Args, Debug)]
pub struct HankelArgs {
    /// Input CSV with a header; the first column is time
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column holding the series [default: last column]
    #[arg(long)]
    pub column: Option<String>,
    /// Hankel rows m (delay window length) [default: 100]
    #[arg(long)]
    pub rows: Option<usize>,
    /// Truncation rank r [default: 2]
    #[arg(long)]
    pub rank: Option<usize>,
    /// Resample the series through a sinc-INR with this lattice spacing Ω (time units) first
    #[arg(long)]
    pub inr_omega: Option<f64>,
    /// Ridge weight of the sinc-INR fit [default: 0.001]
    #[arg(long)]
    pub inr_ridge: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

fn read_table(path: &PathBuf) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(parse_csv(&text)?)
}

pub fn hankel(args: HankelArgs) -> CliResult<()> {
    let (mut run, _, format) = open_run("hankel", &args.common)?;
    let path: PathBuf = run.require("input", args.input.clone())?;
    let (header, rows) = read_table(&path)?;
    let column = run.get(
        "column",
        args.column.clone(),
        header.last().cloned().unwrap_or_default(),
    )?;
    let ci = header
        .iter()
        .position(|h| *h == column)
        .ok_or_else(|| usage(format!("no column {column:?} in {}", path.display())))?;
    let m = run.get("rows", args.rows, 100usize)?;
    let r = run.get("rank", args.rank, 2usize)?;
    let inr_omega = run.get_opt("inr-omega", args.inr_omega)?;
    let ridge = run.get("inr-ridge", args.inr_ridge, 1e-3)?;
    let times: Vec<f64> = rows.iter().map(|row| row[0]).collect();
    let mut series: Vec<f64> = rows.iter().map(|row| row[ci]).collect();
    if let Some(omega) = inr_omega {
        let fit = SincInrFit {
            omega: check_positive("inr-omega", omega)?,
            ridge,
            margin: 10,
        };
        let vals = nalgebra_column(&series);
        let net = fit.fit(&times, &vals)?;
        series = inr_values(&net, &times)?.iter().copied().collect();
    }
    if series.len() < m {
        return Err(CliError::Data(format!(
            "series of length {} is shorter than {m} rows",
            series.len()
        )));
    }
    let n = series.len() - m + 1;
    let h = build_hankel(&series, m, n)?;
    let e = svd_embed(&h, r)?;
    let mut sv = Table::new(&["index", "sigma"]);
    for (i, s) in e.singular_values.iter().enumerate() {
        sv.push(vec![(i as f64).into(), (*s).into()]);
    }
    run.write(
        &format!("singular_values.{}", format.extension()),
        sv.render(format).as_bytes(),
    )?;
    let mut header = vec!["index".to_string()];
    header.extend((0..r).map(|i| format!("z{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let surrogate = write_csv(
        &header_refs,
        (0..n).map(|j| {
            let mut row = vec![j as f64];
            row.extend(e.surrogate.row(j).iter());
            row
        }),
    );
    run.write("surrogate.csv", surrogate.as_bytes())?;
    let ratio = if e.singular_values.len() > 1 && e.singular_values[0] > 0.0 {
        Some(e.singular_values[1] / e.singular_values[0])
    } else {
        None
    };
    let gap = cycle_gap(&e.surrogate).ok().map(|g| {
        json!({ "gap": g.gap, "diameter": g.diameter, "period": g.period, "relative": g.relative() })
    });
    run.write_json(
        "report.json",
        &json!({
            "rows": m,
            "columns": n,
            "rank": r,
            "leadingSingularValues": &e.singular_values[..e.singular_values.len().min(10)],
            "sigmaRatio": ratio,
            "cycleGap": gap,
        }),
    )?;
    if let Some(q) = ratio {
        println!("σ2/σ1 = {q:.3e}");
    }
    run.finish()
}

fn nalgebra_column(v: &[f64]) -> sincinr::nalgebra::DMatrix<f64> {
    sincinr::nalgebra::DMatrix::from_column_slice(v.len(), 1, v)
}

// ---------------------------------------------------------------------- sindy

#[derive(Args, Debug)]
pub struct SindyArgs {
    /// Trajectory CSV (header t,x0,…); when absent a trajectory is simulated from --system
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Clean reference trajectory CSV for scoring an --input run
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub system: SystemArgs,
    /// Gaussian noise std added to the simulated trajectory [default: 0]
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Derivative estimator: central, spectral or sinc-inr [default: central]
    #[arg(long)]
    pub method: Option<String>,
    /// Sinc-INR lattice spacing Ω in time units [default: 0.3]
    #[arg(long)]
    pub inr_omega: Option<f64>,
    /// Sinc-INR ridge weight [default: 0.001]
    #[arg(long)]
    pub inr_ridge: Option<f64>,
    /// Polynomial degree of the library (0–5) [default: 2]
    #[arg(long)]
    pub degree: Option<usize>,
    /// Add sin, cos and sin·cos terms to the library [default: false]
    #[arg(long)]
    pub trig: Option<bool>,
    /// Include the constant term [default: true]
    #[arg(long)]
    pub constant: Option<bool>,
    /// Ridge weight λ of every least-squares solve [default: 1e-6]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Coefficients with magnitude below this are zeroed [default: 0.1]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Maximum threshold-and-refit rounds [default: 10]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Samples of the re-simulation scored against the reference [default: 101]
    #[arg(long)]
    pub horizon: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

pub fn sindy(args: SindyArgs) -> CliResult<()> {
    let (mut run, seed, _) = open_run("sindy", &args.common)?;
    let method_name = run.get("method", args.method.clone(), "central".to_string())?;
    let inr = SincInrFit {
        omega: check_positive("inr-omega", run.get("inr-omega", args.inr_omega, 0.3)?)?,
        ridge: run.get("inr-ridge", args.inr_ridge, 1e-3)?,
        margin: 10,
    };
    let method = match method_name.as_str() {
        "central" => DerivativeMethod::CentralDifference,
        "spectral" => DerivativeMethod::Spectral,
        "sinc-inr" => DerivativeMethod::SincInr(inr),
        other => return Err(usage(format!("unknown derivative method {other:?}"))),
    };
    let library = LibrarySpec {
        poly_degree: run.get("degree", args.degree, 2usize)?,
        include_trig: run.get("trig", args.trig, false)?,
        include_constant: run.get("constant", args.constant, true)?,
    };
    library.validate().map_err(|e| usage(e.to_string()))?;
    let config = PipelineConfig {
        library,
        lambda: run.get("lambda", args.lambda, 1e-6)?,
        threshold: run.get("threshold", args.threshold, 0.1)?,
        max_iters: run.get("max-iters", args.max_iters, 10usize)?,
        substeps: 10,
    };
    let horizon = run.get("horizon", args.horizon, 101usize)?;
    if horizon < 2 {
        return Err(usage("--horizon must be at least 2"));
    }
    let input = run.get_opt::<PathBuf>("input", args.input.clone())?;
    let (observed, reference) = match input {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let obs = Trajectory::from_csv(&text)?;
            let reference = match run.get_opt::<PathBuf>("reference", args.reference.clone())? {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                    let r = Trajectory::from_csv(&text)?;
                    Some(r.slice(0, horizon.min(r.len())))
                }
                None => None,
            };
            (obs, reference)
        }
        None => {
            let setup = resolve_system(&mut run, &args.system, ("lorenz", true, 1000, 0.1, 100))?;
            let std = run.get("noise-std", args.noise_std, 0.0)?;
            let clean = simulate(&setup, setup.samples)?;
            let noise = if std > 0.0 {
                Noise::Gaussian { std }
            } else {
                Noise::None
            };
            let observed = add_noise(&clean, noise, seed)?;
            let reference = simulate(&setup, horizon)?;
            (observed, Some(reference))
        }
    };
    let reference_or_self = match &reference {
        Some(r) => r.clone(),
        None => observed.slice(0, horizon.min(observed.len())),
    };
    let result = sindy_pipeline(&observed, &reference_or_self, &method, &config)?;
    let model: &SindyModel = &result.model;
    let equations = model.equations();
    for eq in &equations {
        println!("{eq}");
    }
    run.write_json("model.json", &model.to_json())?;
    run.write("equations.txt", (equations.join("\n") + "\n").as_bytes())?;
    run.write_json(
        "report.json",
        &json!({
            "method": method.name(),
            "equations": equations,
            "reconstructionPsnr": reference.as_ref().map(|_| result.psnr),
            "activeTerms": model.active.iter().filter(|&&a| a).count(),
            "residualHistory": model.residual_history,
        }),
    )?;
    if reference.is_some() {
        println!(
            "reconstruction PSNR {:.2} dB over {} samples",
            result.psnr, horizon
        );
    }
    run.finish()
}

// ---------------------------------------------------------------------- sweep

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Input PGM images (repeat the flag or separate with commas)
    #[arg(long, value_delimiter = ',')]
    pub image: Option<Vec<PathBuf>>,
    /// Activations to compare [default: sinc,gaussian,sine,relu]
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    /// Activation scales Ω to search [default: 0.5,1,2]
    #[arg(long, value_delimiter = ',')]
    pub omegas: Option<Vec<f64>>,
    /// Fractions of pixels used for training [default: 0.25,0.5,0.75,1]
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub common: Common,
}

/// Evenly spread subset of `0..n` with about `fraction · n` members.
fn subsample(n: usize, fraction: f64) -> Vec<usize> {
    (0..n)
        .filter(|&i| ((i + 1) as f64 * fraction).floor() > (i as f64 * fraction).floor())
        .collect()
}

pub fn sweep(args: SweepArgs) -> CliResult<()> {
    let (mut run, seed, format) = open_run("sweep", &args.common)?;
    let images: Vec<PathBuf> = run.require("image", args.image.clone())?;
    if images.is_empty() {
        return Err(usage("--image needs at least one file"));
    }
    let kinds = run.get(
        "kinds",
        args.kinds.clone(),
        vec![
            "sinc".into(),
            "gaussian".into(),
            "sine".into(),
            "relu".into(),
        ],
    )?;
    let omegas = run.get("omegas", args.omegas.clone(), vec![0.5, 1.0, 2.0])?;
    let fractions = run.get(
        "fractions",
        args.fractions.clone(),
        vec![0.25, 0.5, 0.75, 1.0],
    )?;
    if kinds.is_empty() || omegas.is_empty() || fractions.is_empty() {
        return Err(usage(
            "--kinds, --omegas and --fractions need at least one value",
        ));
    }
    for &f in &fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(usage(format!("fractions must lie in (0, 1], got {f}")));
        }
    }
    for &o in &omegas {
        check_positive("omegas", o)?;
    }
    let setup = resolve_train(&mut run, &args.train, seed, vec![32, 32, 32], 1.0, 300)?;
    let loaded: Vec<ImageGray> = images.iter().map(load_pgm).collect::<Result<_, _>>()?;
    let mut table = Table::new(&["kind", "omega", "fraction", "meanPsnr"]);
    let mut best = serde_json::Map::new();
    for name in &kinds {
        let kind = match name.as_str() {
            "sinc" => BasisKind::sinc(1.0),
            "gaussian" => BasisKind::gaussian(1.0),
            "sine" => BasisKind::sine(1.0),
            "relu" => BasisKind::relu(),
            "gabor" => BasisKind::gabor(1.0, 2.0),
            "hermite" => BasisKind::hermite_default(),
            other => return Err(usage(format!("unknown kind {other:?}"))),
        };
        let mut best_here: Option<(f64, f64)> = None;
        for &omega in &omegas {
            let mut total = 0.0;
            for &fraction in &fractions {
                let mut sum = 0.0;
                for image in &loaded {
                    let (coords, values) = image_to_dataset(image);
                    let idx = subsample(coords.len(), fraction);
                    let xs: Vec<[f64; 2]> = idx.iter().map(|&i| coords[i]).collect();
                    let ys: Vec<[f64; 1]> = idx.iter().map(|&i| [values[i]]).collect();
                    let mut net =
                        init_network(&shape(2, &setup.hidden, 1), kind.clone(), omega, seed)?;
                    let score = match net.train(&xs, &ys, &setup.config) {
                        Ok(_) => {
                            let pred = predict_image(&net, image)?;
                            psnr(&values, &pred)?
                        }
                        // a diverged run scores as predicting zero everywhere
                        Err(sincinr::Error::NonFiniteLoss { .. }) => mse_to_psnr(
                            values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64,
                        ),
                        Err(e) => return Err(e.into()),
                    };
                    sum += score;
                }
                let mean = sum / loaded.len() as f64;
                total += mean;
                table.push(vec![
                    Cell::from(name.as_str()),
                    omega.into(),
                    fraction.into(),
                    mean.into(),
                ]);
            }
            let avg = total / fractions.len() as f64;
            if best_here.is_none_or(|(_, b)| avg > b) {
                best_here = Some((omega, avg));
            }
        }
        let (omega, avg) = best_here.expect("at least one omega");
        println!("{name}: best Ω = {omega} (mean PSNR {avg:.2} dB)");
        best.insert(name.clone(), json!({ "omega": omega, "meanPsnr": avg }));
    }
    run.write(
        &format!("sweep.{}", format.extension()),
        table.render(format).as_bytes(),
    )?;
    run.write_json("best.json", &best)?;
    run.finish()
}
