//! Benchmark command line: solve problems, compare schemes, measure
//! convergence, train the multiplier network, generate datasets, and emit
//! exact shock-tube solutions.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wenods::error::Error;
use wenods::euler::{EulerProblem, PrimitiveState, GAMMA};
use wenods::flux::{MultiplierSource, ScalarProblem};
use wenods::integrate::{flat_to_primitives, run_euler, run_scalar, Record, StepPlan};
use wenods::kernel::{SchemeConfig, Weighting};
use wenods::mesh::{write_euler_csv, write_scalar_csv, Grid1D};
use wenods::net::DsModel;
use wenods::reference::{fine_reference, restrict, ReferencePlan};
use wenods::report::{
    convergence_rows, format_compare_table, format_convergence_table, l2_error, linf_error,
    CompareRow, L2Convention, SchemeErrors,
};
use wenods::riemann::exact_on_grid;
use wenods::training::{
    gen_bl_sample, gen_burgers_sample, gen_euler_sample, BurgersIc, ProblemSample,
    TrainingProtocol,
};

const CACHE_ENV: &str = "WENODS_CACHE_DIR";

#[derive(Parser)]
#[command(
    name = "wenods",
    about = "Fifth-order WENO schemes (JS, Z, learned DS) for 1-D conservation laws",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Js,
    Z,
    Ds,
}

impl SchemeArg {
    fn weighting(self) -> Weighting {
        match self {
            SchemeArg::Js => Weighting::Js,
            SchemeArg::Z => Weighting::Z,
            SchemeArg::Ds => Weighting::Ds,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum L2Arg {
    Rms,
    Dx,
}

impl L2Arg {
    fn convention(self) -> L2Convention {
        match self {
            L2Arg::Rms => L2Convention::Rms,
            L2Arg::Dx => L2Convention::Dx,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Bl,
    Burgers,
    Euler,
}

#[derive(Args)]
struct GridArgs {
    /// Number of grid intervals.
    #[arg(long)]
    nx: Option<usize>,
    /// Fixed number of time steps (scalar problems).
    #[arg(long)]
    nt: Option<usize>,
    /// CFL number for adaptive stepping (Euler).
    #[arg(long)]
    cfl: Option<f64>,
    /// Final time override.
    #[arg(long)]
    tfinal: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one problem with one scheme and write the final snapshot as CSV.
    Solve {
        /// Problem descriptor, e.g. `bl:a=0.25`, `burgers-sine:z=1.6`,
        /// `transport`, `sod`, `sod-modified`, `lax`.
        #[arg(long)]
        problem: String,
        #[arg(long, value_enum, default_value = "z")]
        scheme: SchemeArg,
        /// Trained model file (required for `--scheme ds`).
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare WENO-JS, WENO-Z (and optionally WENO-DS) against references.
    Compare {
        /// Semicolon-separated problem descriptors.
        #[arg(long, conflicts_with = "suite")]
        problems: Option<String>,
        /// Predefined problem set: `bl-test`, `burgers-test`, `sod-modified`,
        /// `lax`.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "rms")]
        l2_convention: L2Arg,
        /// Also write the rows as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Grid-refinement study on the smooth transport problem.
    Convergence {
        #[arg(long, value_enum, default_value = "z")]
        scheme: SchemeArg,
        /// Comma-separated interval counts.
        #[arg(long, default_value = "20,40,80,160,320,640")]
        n_list: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Train the smoothness-multiplier networks.
    Train {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Training cycles per run.
        #[arg(long)]
        cycles: Option<usize>,
        /// Independent runs (the best validation model wins).
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        nt: Option<usize>,
        #[arg(long)]
        dataset_size: Option<usize>,
        /// Directory for checkpoints and the run log.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate a problem-sample manifest (JSON lines).
    GenDataset {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact shock-tube solution sampled on a grid, written as CSV.
    Riemann {
        /// Left state `rho,u,p`.
        #[arg(long)]
        left: String,
        /// Right state `rho,u,p`.
        #[arg(long)]
        right: String,
        #[arg(long, default_value_t = 0.1)]
        tfinal: f64,
        #[arg(long, default_value_t = 64)]
        nx: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Distinct exit codes per failure class.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonFinite { .. }
        | Error::NonPhysical { .. }
        | Error::Training(_)
        | Error::NoConvergence(_)
        | Error::Vacuum
        | Error::SoundSpeed(_)
        | Error::NoUsableCheckpoint => 10,
        Error::MissingModel(_) => 11,
        Error::BadProblem(_)
        | Error::InvalidGrid(_)
        | Error::InvalidFlux(_)
        | Error::FieldLength { .. }
        | Error::MissingMultipliers
        | Error::ModelFormat(_) => 12,
        Error::Io { .. } => 13,
    }
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(PathBuf::from)
}

/// Either kind of benchmark problem.
enum AnyProblem {
    Scalar(ScalarProblem),
    Euler(EulerProblem),
}

fn parse_state(text: &str) -> Result<PrimitiveState, Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::BadProblem(format!("state `{text}` is not rho,u,p")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::BadProblem(format!("bad number `{s}` in state `{text}`")))
        })
        .collect::<Result<_, _>>()?;
    Ok(PrimitiveState::new(nums[0], nums[1], nums[2]))
}

fn parse_param(descriptor: &str, key: &str) -> Result<f64, Error> {
    let (_, rest) = descriptor
        .split_once(':')
        .ok_or_else(|| Error::BadProblem(format!("`{descriptor}` is missing its parameter")))?;
    let mut value = None;
    for kv in rest.split(',') {
        if let Some((k, v)) = kv.split_once('=') {
            if k.trim() == key {
                value = Some(v.trim().parse::<f64>().map_err(|_| {
                    Error::BadProblem(format!("bad value `{v}` for `{key}` in `{descriptor}`"))
                })?);
            }
        }
    }
    value.ok_or_else(|| Error::BadProblem(format!("`{descriptor}` needs `{key}=<value>`")))
}

fn parse_problem(descriptor: &str) -> Result<AnyProblem, Error> {
    let d = descriptor.trim();
    if d == "transport" {
        return Ok(AnyProblem::Scalar(ScalarProblem::transport()));
    }
    if d == "sod" {
        return Ok(AnyProblem::Euler(EulerProblem::sod()));
    }
    if d == "sod-modified" {
        return Ok(AnyProblem::Euler(EulerProblem::sod_modified()));
    }
    if d == "lax" {
        return Ok(AnyProblem::Euler(EulerProblem::lax()));
    }
    if d.starts_with("bl:") {
        let a = parse_param(d, "a")?;
        return Ok(AnyProblem::Scalar(ScalarProblem::buckley_leverett(a)?));
    }
    for (prefix, ic) in [
        ("burgers-step", BurgersIc::Step),
        ("burgers-gauss", BurgersIc::Gaussian),
        ("burgers-sine", BurgersIc::Sine),
    ] {
        if d.starts_with(&format!("{prefix}:")) {
            let z = parse_param(d, "z")?;
            return Ok(AnyProblem::Scalar(ScalarProblem::burgers(
                wenods::training::burgers_ic(ic, z),
            )));
        }
    }
    if d.starts_with("euler:") {
        let left = PrimitiveState::new(
            parse_param(d, "rhol")?,
            parse_param(d, "ul")?,
            parse_param(d, "pl")?,
        );
        let right = PrimitiveState::new(
            parse_param(d, "rhor")?,
            parse_param(d, "ur")?,
            parse_param(d, "pr")?,
        );
        return Ok(AnyProblem::Euler(EulerProblem::shock_tube(left, right, 0.1)));
    }
    Err(Error::BadProblem(format!("unknown problem `{descriptor}`")))
}

fn default_steps(problem: &ScalarProblem, nx: usize) -> usize {
    // The benchmark protocols pair 128 spatial with 140 (Buckley-Leverett)
    // or 100 (Burgers/transport) time steps; other resolutions scale.
    let base = match problem.flux {
        wenods::flux::ScalarFlux::BuckleyLeverett { .. } => 140,
        _ => 100,
    };
    (base * nx + 127) / 128
}

fn scheme_config(weighting: Weighting) -> SchemeConfig {
    SchemeConfig::new(weighting)
}

fn load_model(model: &Option<PathBuf>) -> Result<Option<DsModel>, Error> {
    match model {
        Some(path) => Ok(Some(DsModel::load(path)?)),
        None => Ok(None),
    }
}

fn source_for<'m>(
    weighting: Weighting,
    model: &'m Option<DsModel>,
) -> Result<MultiplierSource<'m>, Error> {
    match weighting {
        Weighting::Ds => match model {
            Some(m) => Ok(MultiplierSource::Model(m)),
            None => Err(Error::MissingModel(PathBuf::from(
                "(pass --model for --scheme ds)",
            ))),
        },
        _ => Ok(MultiplierSource::None),
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve {
            problem,
            scheme,
            model,
            grid,
            out,
        } => cmd_solve(&problem, scheme.weighting(), &model, &grid, &out),
        Command::Compare {
            problems,
            suite,
            model,
            grid,
            l2_convention,
            json,
        } => cmd_compare(
            problems.as_deref(),
            suite.as_deref(),
            &model,
            &grid,
            l2_convention.convention(),
            json.as_deref(),
        ),
        Command::Convergence {
            scheme,
            n_list,
            model,
            json,
        } => cmd_convergence(scheme.weighting(), &n_list, &model, json.as_deref()),
        Command::Train {
            family,
            seed,
            cycles,
            runs,
            lr,
            nx,
            nt,
            dataset_size,
            out_dir,
        } => cmd_train(family, seed, cycles, runs, lr, nx, nt, dataset_size, out_dir),
        Command::GenDataset {
            family,
            count,
            seed,
            out,
        } => cmd_gen_dataset(family, count, seed, &out),
        Command::Riemann {
            left,
            right,
            tfinal,
            nx,
            out,
        } => cmd_riemann(&left, &right, tfinal, nx, &out),
    }
}

fn cmd_solve(
    problem: &str,
    weighting: Weighting,
    model: &Option<PathBuf>,
    grid_args: &GridArgs,
    out: &Path,
) -> Result<(), Error> {
    let model = load_model(model)?;
    let source = source_for(weighting, &model)?;
    let cfg = scheme_config(weighting);
    match parse_problem(problem)? {
        AnyProblem::Scalar(mut p) => {
            if let Some(t) = grid_args.tfinal {
                p.t_final = t;
            }
            let nx = grid_args.nx.unwrap_or(128);
            let grid = Grid1D::new(p.x_min, p.x_max, nx)?;
            let nt = grid_args.nt.unwrap_or_else(|| default_steps(&p, nx));
            let plan = StepPlan::fixed(nt, p.t_final);
            let traj = run_scalar(&p, &grid, &cfg, &plan, &source, Record::FinalOnly)?;
            write_scalar_csv(out, &grid, p.boundary, traj.final_state())?;
        }
        AnyProblem::Euler(mut p) => {
            if let Some(t) = grid_args.tfinal {
                p.t_final = t;
            }
            let nx = grid_args.nx.unwrap_or(64);
            let grid = Grid1D::new(p.x_min, p.x_max, nx)?;
            let plan = StepPlan::adaptive(grid_args.cfl.unwrap_or(0.9), p.t_final);
            let traj = run_euler(&p, &grid, &cfg, &plan, &source, Record::FinalOnly)?;
            let prim = flat_to_primitives(traj.final_state())?;
            let rho: Vec<f64> = prim.iter().map(|s| s.rho).collect();
            let u: Vec<f64> = prim.iter().map(|s| s.u).collect();
            let pr: Vec<f64> = prim.iter().map(|s| s.p).collect();
            write_euler_csv(out, &grid, &rho, &u, &pr)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn suite_problems(suite: &str) -> Result<Vec<String>, Error> {
    match suite {
        "bl-test" => Ok([0.25, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
            .iter()
            .map(|a| format!("bl:a={a}"))
            .collect()),
        "burgers-test" => Ok(vec![
            "burgers-step:z=1.19".into(),
            "burgers-step:z=1.53".into(),
            "burgers-step:z=1.84".into(),
            "burgers-gauss:z=14.94".into(),
            "burgers-gauss:z=21.65".into(),
            "burgers-gauss:z=29.08".into(),
            "burgers-sine:z=1.46".into(),
            "burgers-sine:z=1.6".into(),
            "burgers-sine:z=1.9".into(),
        ]),
        "sod-modified" => Ok(vec!["sod-modified".into()]),
        "lax" => Ok(vec!["lax".into()]),
        other => Err(Error::BadProblem(format!("unknown suite `{other}`"))),
    }
}

/// Scalar errors of one scheme at the final time against the fine reference.
fn scalar_errors(
    problem: &ScalarProblem,
    weighting: Weighting,
    model: &Option<DsModel>,
    nx: usize,
    nt: usize,
    reference: &[f64],
    dx: f64,
    convention: L2Convention,
) -> Result<SchemeErrors, Error> {
    let grid = Grid1D::new(problem.x_min, problem.x_max, nx)?;
    let cfg = scheme_config(weighting);
    let source = source_for(weighting, model)?;
    let plan = StepPlan::fixed(nt, problem.t_final);
    let traj = run_scalar(problem, &grid, &cfg, &plan, &source, Record::FinalOnly)?;
    Ok(SchemeErrors {
        linf: linf_error(traj.final_state(), reference),
        l2: l2_error(traj.final_state(), reference, dx, convention),
    })
}

fn euler_compare_rows(
    problem: &EulerProblem,
    label: &str,
    model: &Option<DsModel>,
    nx: usize,
    cfl: f64,
    convention: L2Convention,
) -> Result<Vec<CompareRow>, Error> {
    let grid = Grid1D::new(problem.x_min, problem.x_max, nx)?;
    let n_pts = nx + 1;
    let exact = exact_on_grid(problem, GAMMA, n_pts, grid.dx(), problem.t_final)?;
    let rho_ref: Vec<f64> = exact.iter().map(|s| s.rho).collect();
    let u_ref: Vec<f64> = exact.iter().map(|s| s.u).collect();
    let p_ref: Vec<f64> = exact.iter().map(|s| s.p).collect();

    let run = |weighting: Weighting| -> Result<[SchemeErrors; 3], Error> {
        let cfg = scheme_config(weighting);
        let source = source_for(weighting, model)?;
        let plan = StepPlan::adaptive(cfl, problem.t_final);
        let traj = run_euler(problem, &grid, &cfg, &plan, &source, Record::FinalOnly)?;
        let prim = flat_to_primitives(traj.final_state())?;
        let rho: Vec<f64> = prim.iter().map(|s| s.rho).collect();
        let u: Vec<f64> = prim.iter().map(|s| s.u).collect();
        let p: Vec<f64> = prim.iter().map(|s| s.p).collect();
        let err = |a: &[f64], b: &[f64]| SchemeErrors {
            linf: linf_error(a, b),
            l2: l2_error(a, b, grid.dx(), convention),
        };
        Ok([err(&rho, &rho_ref), err(&u, &u_ref), err(&p, &p_ref)])
    };

    let js = run(Weighting::Js)?;
    let z = run(Weighting::Z)?;
    let ds = match model {
        Some(_) => Some(run(Weighting::Ds)?),
        None => None,
    };
    let comp = ["rho", "u", "p"];
    Ok((0..3)
        .map(|c| {
            CompareRow::new(
                format!("{label} {}", comp[c]),
                js[c],
                z[c],
                ds.as_ref().map(|d| d[c]),
            )
        })
        .collect())
}

fn cmd_compare(
    problems: Option<&str>,
    suite: Option<&str>,
    model_path: &Option<PathBuf>,
    grid_args: &GridArgs,
    convention: L2Convention,
    json: Option<&Path>,
) -> Result<(), Error> {
    let descriptors: Vec<String> = match (problems, suite) {
        (Some(p), _) => p.split(';').map(|s| s.trim().to_string()).collect(),
        (None, Some(s)) => suite_problems(s)?,
        (None, None) => {
            return Err(Error::BadProblem(
                "compare needs --problems or --suite".into(),
            ))
        }
    };
    let model = load_model(model_path)?;
    let cache = cache_dir();

    // Fan out across problems; assembly stays in input order.
    let results: Vec<Result<Vec<CompareRow>, Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = descriptors
            .iter()
            .map(|d| {
                let model = &model;
                let cache = &cache;
                scope.spawn(move || -> Result<Vec<CompareRow>, Error> {
                    match parse_problem(d)? {
                        AnyProblem::Scalar(p) => {
                            let nx = grid_args.nx.unwrap_or(128);
                            let nt = grid_args.nt.unwrap_or_else(|| default_steps(&p, nx));
                            let plan = ReferencePlan::for_problem(&p);
                            let reference = fine_reference(&p, &plan, cache.as_deref())?;
                            let coarse = restrict(reference.final_state(), nx);
                            let grid = Grid1D::new(p.x_min, p.x_max, nx)?;
                            let js = scalar_errors(
                                &p,
                                Weighting::Js,
                                model,
                                nx,
                                nt,
                                &coarse,
                                grid.dx(),
                                convention,
                            )?;
                            let z = scalar_errors(
                                &p,
                                Weighting::Z,
                                model,
                                nx,
                                nt,
                                &coarse,
                                grid.dx(),
                                convention,
                            )?;
                            let ds = match model {
                                Some(_) => Some(scalar_errors(
                                    &p,
                                    Weighting::Ds,
                                    model,
                                    nx,
                                    nt,
                                    &coarse,
                                    grid.dx(),
                                    convention,
                                )?),
                                None => None,
                            };
                            Ok(vec![CompareRow::new(d.clone(), js, z, ds)])
                        }
                        AnyProblem::Euler(p) => euler_compare_rows(
                            &p,
                            d,
                            model,
                            grid_args.nx.unwrap_or(64),
                            grid_args.cfl.unwrap_or(0.9),
                            convention,
                        ),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    print!("{}", format_compare_table(&rows));
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::ModelFormat(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Time step of the refinement study: `dt = 0.4 dx^(5/3)` keeps the
/// third-order temporal error below the fifth-order spatial one.
fn convergence_steps(t_final: f64, dx: f64) -> usize {
    let dt = 0.4 * dx.powf(5.0 / 3.0);
    (t_final / dt).ceil() as usize
}

fn cmd_convergence(
    weighting: Weighting,
    n_list: &str,
    model_path: &Option<PathBuf>,
    json: Option<&Path>,
) -> Result<(), Error> {
    let ns: Vec<usize> = n_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::BadProblem(format!("bad N `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    let model = load_model(model_path)?;
    let problem = ScalarProblem::transport();
    let mut entries = Vec::new();
    for &n in &ns {
        let grid = Grid1D::new(problem.x_min, problem.x_max, n)?;
        let steps = convergence_steps(problem.t_final, grid.dx());
        let plan = StepPlan::fixed(steps, problem.t_final);
        let cfg = scheme_config(weighting);
        // Without a model, DS runs with a constant admissible multiplier.
        let source = match weighting {
            Weighting::Ds => match &model {
                Some(m) => MultiplierSource::Model(m),
                None => MultiplierSource::Fixed(0.5),
            },
            _ => MultiplierSource::None,
        };
        let traj = run_scalar(&problem, &grid, &cfg, &plan, &source, Record::FinalOnly)?;
        let mut linf = 0.0f64;
        for (i, v) in traj.final_state().iter().enumerate() {
            let exact = (std::f64::consts::PI * (grid.x(i) - problem.t_final)).sin();
            linf = linf.max((v - exact).abs());
        }
        entries.push((n, linf));
    }
    let rows = convergence_rows(&entries);
    print!("{}", format_convergence_table(&rows));
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::ModelFormat(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    family: FamilyArg,
    seed: u64,
    cycles: Option<usize>,
    runs: Option<usize>,
    lr: Option<f64>,
    nx: Option<usize>,
    nt: Option<usize>,
    dataset_size: Option<usize>,
    out_dir: PathBuf,
) -> Result<(), Error> {
    let mut protocol = match family {
        FamilyArg::Bl => TrainingProtocol::buckley_leverett(seed, out_dir),
        FamilyArg::Burgers => TrainingProtocol::burgers(seed, out_dir),
        FamilyArg::Euler => TrainingProtocol::euler(seed, out_dir),
    };
    if let Some(c) = cycles {
        protocol.cycles = c;
    }
    if let Some(r) = runs {
        protocol.runs = r;
    }
    if let Some(l) = lr {
        protocol.lr = l;
    }
    if let Some(n) = nx {
        protocol.nx = n;
    }
    if let Some(n) = nt {
        protocol.n_steps = n;
    }
    if let Some(d) = dataset_size {
        protocol.dataset_size = d;
    }
    protocol.cache_dir = cache_dir();
    protocol.verbose = true;

    let outcome = wenods::training::train(&protocol)?;
    let best = &outcome.records[outcome.best_index];
    println!(
        "best checkpoint: run {} cycle {} (validation {:.3e}) -> {}",
        best.run,
        best.cycle,
        best.validation_loss,
        outcome.best_model.display()
    );
    Ok(())
}

fn cmd_gen_dataset(family: FamilyArg, count: usize, seed: u64, out: &Path) -> Result<(), Error> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut lines = String::new();
    for index in 0..count {
        let sample: ProblemSample = match family {
            FamilyArg::Bl => gen_bl_sample(&mut rng),
            FamilyArg::Burgers => gen_burgers_sample(&mut rng),
            FamilyArg::Euler => gen_euler_sample(&mut rng),
        };
        let record = serde_json::json!({
            "index": index,
            "seed": seed,
            "sample": sample,
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    std::fs::write(out, lines).map_err(|e| Error::io(out, e))?;
    println!("wrote {count} samples to {}", out.display());
    Ok(())
}

fn cmd_riemann(left: &str, right: &str, tfinal: f64, nx: usize, out: &Path) -> Result<(), Error> {
    let left = parse_state(left)?;
    let right = parse_state(right)?;
    let problem = EulerProblem::shock_tube(left, right, tfinal);
    let grid = Grid1D::new(problem.x_min, problem.x_max, nx)?;
    let states = exact_on_grid(&problem, GAMMA, nx + 1, grid.dx(), tfinal)?;
    let rho: Vec<f64> = states.iter().map(|s| s.rho).collect();
    let u: Vec<f64> = states.iter().map(|s| s.u).collect();
    let p: Vec<f64> = states.iter().map(|s| s.p).collect();
    write_euler_csv(out, &grid, &rho, &u, &p)?;
    println!("wrote {}", out.display());
    Ok(())
}
