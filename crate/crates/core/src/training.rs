//! Dataset generation, losses, Adam, and the per-time-step training cycle.
//!
//! One training cycle runs a sampled problem from `t = 0` to the final time
//! on the coarse grid. After every time step the loss against the reference
//! at that time is backpropagated through that single step and both networks
//! are updated. At the end of the cycle the model is scored on a fixed
//! validation set; the checkpoint with the best validation loss wins.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::diffstep::{
    euler_ds_step_tape, leaf_net, loss_mse_tape, loss_overflow_tape, primitives_tape,
    scalar_ds_step_tape, NetVars,
};
use crate::error::{Error, Result};
use crate::euler::{EulerField, EulerProblem, PrimitiveState, GAMMA};
use crate::flux::{InitialCondition, MultiplierSource, ScalarProblem};
use crate::integrate::{run_euler, run_scalar, Record, StepPlan};
use crate::kernel::{SchemeConfig, Weighting};
use crate::mesh::Grid1D;
use crate::net::{euler_layer_specs, scalar_layer_specs, ConvNet, DsModel};
use crate::reference::{fine_reference, restrict, ReferencePlan};
use crate::riemann::exact_on_grid;

// ---------------------------------------------------------------------------
// Problem samples
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BurgersIc {
    Step,
    Gaussian,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProblemSample {
    BuckleyLeverett { a: f64 },
    Burgers { ic: BurgersIc, z: f64 },
    EulerRiemann { left: [f64; 3], right: [f64; 3] },
}

/// `a ~ U[0.05, 0.95]` with the unit-box initial condition.
pub fn gen_bl_sample(rng: &mut impl Rng) -> ProblemSample {
    ProblemSample::BuckleyLeverett {
        a: rng.gen_range(0.05..0.95),
    }
}

/// Uniformly one of the three initial-condition families with its z-range.
pub fn gen_burgers_sample(rng: &mut impl Rng) -> ProblemSample {
    let ic = match rng.gen_range(0..3u32) {
        0 => BurgersIc::Step,
        1 => BurgersIc::Gaussian,
        _ => BurgersIc::Sine,
    };
    let z = match ic {
        BurgersIc::Step => rng.gen_range(1.0..2.0),
        BurgersIc::Gaussian => rng.gen_range(10.0..30.0),
        BurgersIc::Sine => rng.gen_range(1.0..2.0),
    };
    ProblemSample::Burgers { ic, z }
}

/// The two-branch shock-tube generator.
///
/// Draw order is fixed: `s`, then the branch parameters in the order they
/// appear in the state definitions.
pub fn gen_euler_sample(rng: &mut impl Rng) -> ProblemSample {
    let s: u32 = rng.gen_range(0..2);
    if s == 0 {
        let a = rng.gen_range(0.5..10.0);
        let b = rng.gen_range(-0.05..0.05);
        let p_l = a + b;
        let c = rng.gen_range(5.0..10.0);
        let p_r = 1.0 / c;
        let rho_l = p_l;
        let d = rng.gen_range(-0.05..0.05);
        let rho_r = p_r + d;
        let e = rng.gen_range(0.0..1.0);
        ProblemSample::EulerRiemann {
            left: [rho_l, e, p_l],
            right: [rho_r, 0.0, p_r],
        }
    } else {
        let k = rng.gen_range(1.0..3.0);
        let rho_l = k;
        let l = rng.gen_range(-0.05..0.05);
        let rho_r = 0.1 * rho_l + l;
        let r = rng.gen_range(0.0..1.0);
        ProblemSample::EulerRiemann {
            left: [rho_l, r, 1.0],
            right: [rho_r, 0.0, 0.1],
        }
    }
}

impl ProblemSample {
    pub fn label(&self) -> String {
        match self {
            ProblemSample::BuckleyLeverett { a } => format!("bl a={a:.6}"),
            ProblemSample::Burgers { ic, z } => format!("burgers {ic:?} z={z:.6}"),
            ProblemSample::EulerRiemann { left, right } => format!(
                "euler L=({:.4},{:.4},{:.4}) R=({:.4},{:.4},{:.4})",
                left[0], left[1], left[2], right[0], right[1], right[2]
            ),
        }
    }

    pub fn scalar_problem(&self) -> Result<ScalarProblem> {
        match *self {
            ProblemSample::BuckleyLeverett { a } => ScalarProblem::buckley_leverett(a),
            ProblemSample::Burgers { ic, z } => Ok(ScalarProblem::burgers(burgers_ic(ic, z))),
            ProblemSample::EulerRiemann { .. } => Err(Error::BadProblem(
                "shock-tube sample is not a scalar problem".into(),
            )),
        }
    }

    pub fn euler_problem(&self) -> Result<EulerProblem> {
        match *self {
            ProblemSample::EulerRiemann { left, right } => Ok(EulerProblem::shock_tube(
                PrimitiveState::new(left[0], left[1], left[2]),
                PrimitiveState::new(right[0], right[1], right[2]),
                0.1,
            )),
            _ => Err(Error::BadProblem("not a shock-tube sample".into())),
        }
    }
}

pub fn burgers_ic(ic: BurgersIc, z: f64) -> InitialCondition {
    match ic {
        BurgersIc::Step => InitialCondition::Step {
            x_lo: 1.0,
            x_hi: 2.0,
            amplitude: z,
        },
        BurgersIc::Gaussian => InitialCondition::Gaussian { width: z },
        BurgersIc::Sine => InitialCondition::ScaledSine { amplitude: z },
    }
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Mean square error `(1/n) sum (u_i - ref_i)^2`.
pub fn loss_mse(u: &[f64], reference: &[f64]) -> f64 {
    let n = u.len() as f64;
    u.iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n
}

/// Sum of excursions below `u_min` and above `u_max`.
pub fn loss_overflow(u: &[f64], u_min: f64, u_max: f64) -> f64 {
    u.iter()
        .map(|&v| (v.min(u_min) - u_min).abs() + (v.max(u_max) - u_max).abs())
        .sum()
}

/// Shock-tube loss: the three primitive-component MSEs summed.
pub fn loss_euler(
    rho: &[f64],
    u: &[f64],
    p: &[f64],
    rho_ref: &[f64],
    u_ref: &[f64],
    p_ref: &[f64],
) -> f64 {
    loss_mse(rho, rho_ref) + loss_mse(u, u_ref) + loss_mse(p, p_ref)
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

/// Bias-corrected Adam over a list of parameter tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64, shapes: &[usize]) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shapes.iter().map(|&s| vec![0.0; s]).collect(),
            v: shapes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn for_net(lr: f64, net: &ConvNet) -> Self {
        let shapes: Vec<usize> = net.param_tensors().iter().map(|t| t.len()).collect();
        Self::new(lr, &shapes)
    }

    /// One update; `params` and `grads` line up with the constructor shapes.
    pub fn update(&mut self, params: &mut [&mut Vec<f64>], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

fn adam_step_net(net: &mut ConvNet, grads: &[Vec<f64>], opt: &mut AdamState) {
    let mut params = net.param_tensors_mut();
    let grad_refs: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
    opt.update(&mut params, &grad_refs);
}

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    BuckleyLeverett,
    Burgers,
    Euler,
}

/// Everything a training run needs; the named constructors carry the
/// benchmark defaults.
#[derive(Debug, Clone)]
pub struct TrainingProtocol {
    pub family: Family,
    pub cycles: usize,
    pub runs: usize,
    pub lr: f64,
    pub nx: usize,
    pub n_steps: usize,
    pub dataset_size: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    /// Print one line per cycle.
    pub verbose: bool,
}

impl TrainingProtocol {
    pub fn buckley_leverett(seed: u64, out_dir: PathBuf) -> Self {
        TrainingProtocol {
            family: Family::BuckleyLeverett,
            cycles: 60,
            runs: 1,
            lr: 1e-4,
            nx: 128,
            n_steps: 140,
            dataset_size: 16,
            seed,
            out_dir,
            cache_dir: None,
            verbose: false,
        }
    }

    pub fn burgers(seed: u64, out_dir: PathBuf) -> Self {
        TrainingProtocol {
            family: Family::Burgers,
            cycles: 90,
            runs: 3,
            lr: 1e-3,
            nx: 128,
            n_steps: 100,
            dataset_size: 16,
            seed,
            out_dir,
            cache_dir: None,
            verbose: false,
        }
    }

    pub fn euler(seed: u64, out_dir: PathBuf) -> Self {
        TrainingProtocol {
            family: Family::Euler,
            cycles: 120,
            runs: 1,
            lr: 1e-3,
            nx: 64,
            n_steps: 0, // adaptive
            dataset_size: 32,
            seed,
            out_dir,
            cache_dir: None,
            verbose: false,
        }
    }
}

/// One line of the run log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleRecord {
    pub run: usize,
    pub cycle: usize,
    pub seed: u64,
    pub sample: String,
    pub mean_step_loss: f64,
    pub final_step_loss: f64,
    pub validation_loss: f64,
    pub checkpoint: String,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub records: Vec<CycleRecord>,
    pub best_index: usize,
    pub best_model: PathBuf,
}

/// Checkpoint with the smallest finite validation loss; ties go to the
/// earliest cycle.
pub fn select_model(records: &[CycleRecord]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if !r.validation_loss.is_finite() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) if r.validation_loss < records[b].validation_loss => best = Some(i),
            _ => {}
        }
    }
    best.ok_or(Error::NoUsableCheckpoint)
}

// ---------------------------------------------------------------------------
// Scalar training
// ---------------------------------------------------------------------------

struct ScalarRefs {
    /// Coarse-grid reference at every coarse step, `[n_steps + 1][nx]`.
    per_step: Vec<Vec<f64>>,
}

fn scalar_training_reference(
    problem: &ScalarProblem,
    protocol: &TrainingProtocol,
) -> Result<ScalarRefs> {
    let plan = ReferencePlan::for_problem(problem);
    assert_eq!(
        plan.n_steps % protocol.n_steps,
        0,
        "training steps must divide the reference step count"
    );
    let stride = plan.n_steps / protocol.n_steps;
    let reference = fine_reference(
        problem,
        &plan.with_stride(stride),
        protocol.cache_dir.as_deref(),
    )?;
    Ok(ScalarRefs {
        per_step: reference
            .states
            .iter()
            .map(|s| restrict(s, protocol.nx))
            .collect(),
    })
}

fn scalar_validation_set(family: Family) -> Vec<ProblemSample> {
    match family {
        Family::BuckleyLeverett => [0.15, 0.35, 0.55, 0.75]
            .iter()
            .map(|&a| ProblemSample::BuckleyLeverett { a })
            .collect(),
        Family::Burgers => vec![
            ProblemSample::Burgers {
                ic: BurgersIc::Step,
                z: 1.5,
            },
            ProblemSample::Burgers {
                ic: BurgersIc::Gaussian,
                z: 20.0,
            },
            ProblemSample::Burgers {
                ic: BurgersIc::Sine,
                z: 1.5,
            },
        ],
        Family::Euler => vec![],
    }
}

fn scalar_cycle_loss(family: Family, u: &[f64], reference: &[f64]) -> f64 {
    match family {
        Family::BuckleyLeverett => loss_mse(u, reference) + loss_overflow(u, 0.0, 1.0),
        _ => loss_mse(u, reference),
    }
}

/// Validation loss of the current model at the final time, summed over the
/// validation problems.
fn scalar_validation_loss(
    model: &DsModel,
    validation: &[(ScalarProblem, Vec<f64>)],
    protocol: &TrainingProtocol,
) -> f64 {
    let mut total = 0.0;
    for (problem, reference) in validation {
        let grid = match Grid1D::new(problem.x_min, problem.x_max, protocol.nx) {
            Ok(g) => g,
            Err(_) => return f64::INFINITY,
        };
        let cfg = SchemeConfig {
            weighting: Weighting::Ds,
            epsilon: 1e-13,
            c: model.c,
        };
        let plan = StepPlan::fixed(protocol.n_steps, problem.t_final);
        match run_scalar(
            problem,
            &grid,
            &cfg,
            &plan,
            &MultiplierSource::Model(model),
            Record::FinalOnly,
        ) {
            Ok(traj) => total += scalar_cycle_loss(protocol.family, traj.final_state(), reference),
            Err(_) => return f64::INFINITY,
        }
    }
    total
}

/// All per-step updates of one scalar training cycle. Returns
/// `(mean step loss, final step loss)`.
fn scalar_training_cycle(
    model: &mut DsModel,
    opt_pos: &mut AdamState,
    opt_neg: &mut AdamState,
    problem: &ScalarProblem,
    refs: &ScalarRefs,
    protocol: &TrainingProtocol,
    tape: &mut Tape,
) -> Result<(f64, f64)> {
    let grid = Grid1D::new(problem.x_min, problem.x_max, protocol.nx)?;
    let cfg = SchemeConfig {
        weighting: Weighting::Ds,
        epsilon: 1e-13,
        c: model.c,
    };
    let dt = problem.t_final / protocol.n_steps as f64;
    let mut u: Vec<f64> = (0..protocol.nx)
        .map(|i| problem.initial.eval(grid.x(i)))
        .collect();

    let mut loss_sum = 0.0;
    let mut loss_last = 0.0;
    for step in 1..=protocol.n_steps {
        tape.clear();
        let pos_vars = leaf_net(tape, &model.pos);
        let neg_vars = leaf_net(tape, &model.neg);
        let u_next = scalar_ds_step_tape(
            tape,
            &u,
            problem.boundary,
            grid.dx(),
            &problem.flux,
            &cfg,
            (&model.pos, &pos_vars),
            (&model.neg, &neg_vars),
            dt,
        )?;
        let reference = &refs.per_step[step];
        let loss = match protocol.family {
            Family::BuckleyLeverett => {
                let mse = loss_mse_tape(tape, u_next, reference);
                let of = loss_overflow_tape(tape, u_next, 0.0, 1.0);
                tape.add(mse, of)
            }
            _ => loss_mse_tape(tape, u_next, reference),
        };
        let loss_val = tape.value_scalar(loss);
        if !loss_val.is_finite() {
            return Err(Error::Training(format!("loss diverged at step {step}")));
        }
        tape.backward(loss)?;

        let grads_of = |vars: &NetVars, tape: &Tape| -> Vec<Vec<f64>> {
            let mut out = Vec::with_capacity(2 * vars.weights.len());
            for l in 0..vars.weights.len() {
                out.push(tape.adjoint(vars.weights[l]).to_vec());
                out.push(tape.adjoint(vars.biases[l]).to_vec());
            }
            out
        };
        let gp = grads_of(&pos_vars, tape);
        let gn = grads_of(&neg_vars, tape);

        // Advance with the pre-update forward value, as the step was taken
        // with the old weights.
        u = tape.value(u_next).to_vec();
        adam_step_net(&mut model.pos, &gp, opt_pos);
        adam_step_net(&mut model.neg, &gn, opt_neg);

        loss_sum += loss_val;
        loss_last = loss_val;
    }
    Ok((loss_sum / protocol.n_steps as f64, loss_last))
}

// ---------------------------------------------------------------------------
// Euler training
// ---------------------------------------------------------------------------

fn euler_validation_loss(model: &DsModel, protocol: &TrainingProtocol) -> f64 {
    let problem = EulerProblem::sod();
    let grid = match Grid1D::new(problem.x_min, problem.x_max, protocol.nx) {
        Ok(g) => g,
        Err(_) => return f64::INFINITY,
    };
    let cfg = SchemeConfig {
        weighting: Weighting::Ds,
        epsilon: 1e-13,
        c: model.c,
    };
    let plan = StepPlan::adaptive(0.9, problem.t_final);
    let traj = match run_euler(
        &problem,
        &grid,
        &cfg,
        &plan,
        &MultiplierSource::Model(model),
        Record::FinalOnly,
    ) {
        Ok(t) => t,
        Err(_) => return f64::INFINITY,
    };
    let prim = match crate::integrate::flat_to_primitives(traj.final_state()) {
        Ok(p) => p,
        Err(_) => return f64::INFINITY,
    };
    let exact = match exact_on_grid(&problem, GAMMA, grid.n_intervals() + 1, grid.dx(), problem.t_final)
    {
        Ok(e) => e,
        Err(_) => return f64::INFINITY,
    };
    let pick = |f: fn(&PrimitiveState) -> f64, s: &[PrimitiveState]| -> Vec<f64> {
        s.iter().map(f).collect()
    };
    loss_euler(
        &pick(|s| s.rho, &prim),
        &pick(|s| s.u, &prim),
        &pick(|s| s.p, &prim),
        &pick(|s| s.rho, &exact),
        &pick(|s| s.u, &exact),
        &pick(|s| s.p, &exact),
    )
}

fn euler_training_cycle(
    model: &mut DsModel,
    opt_pos: &mut AdamState,
    opt_neg: &mut AdamState,
    problem: &EulerProblem,
    protocol: &TrainingProtocol,
    tape: &mut Tape,
) -> Result<(f64, f64)> {
    let grid = Grid1D::new(problem.x_min, problem.x_max, protocol.nx)?;
    let n_pts = grid.n_intervals() + 1;
    let cfg = SchemeConfig {
        weighting: Weighting::Ds,
        epsilon: 1e-13,
        c: model.c,
    };
    let mut field = problem.initial_field(n_pts, grid.dx());
    let mut t = 0.0;
    let t_final = problem.t_final;
    let mut loss_sum = 0.0;
    let mut loss_last = 0.0;
    let mut steps = 0usize;

    while t < t_final * (1.0 - 1e-14) {
        steps += 1;
        let prim = crate::euler::primitive_from_conserved(&field, steps)?;
        let dt = (0.9 * grid.dx() / crate::euler::euler_max_signal(&prim)).min(t_final - t);

        tape.clear();
        let pos_vars = leaf_net(tape, &model.pos);
        let neg_vars = leaf_net(tape, &model.neg);
        let q_next = euler_ds_step_tape(
            tape,
            &field,
            grid.dx(),
            &cfg,
            (&model.pos, &pos_vars),
            (&model.neg, &neg_vars),
            dt,
        )?;
        let exact = exact_on_grid(problem, GAMMA, n_pts, grid.dx(), t + dt)?;
        let prims = primitives_tape(tape, &q_next);
        let rho_ref: Vec<f64> = exact.iter().map(|s| s.rho).collect();
        let u_ref: Vec<f64> = exact.iter().map(|s| s.u).collect();
        let p_ref: Vec<f64> = exact.iter().map(|s| s.p).collect();
        let l_rho = loss_mse_tape(tape, prims[0], &rho_ref);
        let l_u = loss_mse_tape(tape, prims[1], &u_ref);
        let l_p = loss_mse_tape(tape, prims[2], &p_ref);
        let l_ru = tape.add(l_rho, l_u);
        let loss = tape.add(l_ru, l_p);
        let loss_val = tape.value_scalar(loss);
        if !loss_val.is_finite() {
            return Err(Error::Training(format!("loss diverged at step {steps}")));
        }
        tape.backward(loss)?;

        let grads_of = |vars: &NetVars, tape: &Tape| -> Vec<Vec<f64>> {
            let mut out = Vec::with_capacity(2 * vars.weights.len());
            for l in 0..vars.weights.len() {
                out.push(tape.adjoint(vars.weights[l]).to_vec());
                out.push(tape.adjoint(vars.biases[l]).to_vec());
            }
            out
        };
        let gp = grads_of(&pos_vars, tape);
        let gn = grads_of(&neg_vars, tape);

        field = EulerField {
            rho: tape.value(q_next[0]).to_vec(),
            mom: tape.value(q_next[1]).to_vec(),
            energy: tape.value(q_next[2]).to_vec(),
        };
        // Reject non-physical states right away.
        crate::euler::primitive_from_conserved(&field, steps)?;

        adam_step_net(&mut model.pos, &gp, opt_pos);
        adam_step_net(&mut model.neg, &gn, opt_neg);
        t += dt;
        loss_sum += loss_val;
        loss_last = loss_val;
    }
    Ok((loss_sum / steps.max(1) as f64, loss_last))
}

// ---------------------------------------------------------------------------
// The outer loop
// ---------------------------------------------------------------------------

fn run_seed(protocol: &TrainingProtocol, run: usize) -> u64 {
    protocol
        .seed
        .wrapping_add((run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Full training: `runs` independent runs of `cycles` cycles each, a
/// checkpoint per cycle, run log on disk, and the best checkpoint selected
/// by validation loss.
pub fn train(protocol: &TrainingProtocol) -> Result<TrainOutcome> {
    fs::create_dir_all(&protocol.out_dir).map_err(|e| Error::io(&protocol.out_dir, e))?;
    let log_path = protocol.out_dir.join("run_log.jsonl");
    let mut log = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;

    let specs = match protocol.family {
        Family::Euler => euler_layer_specs(),
        _ => scalar_layer_specs(),
    };

    // Scalar validation references (final state on the training grid).
    let validation: Vec<(ScalarProblem, Vec<f64>)> = if protocol.family != Family::Euler {
        scalar_validation_set(protocol.family)
            .iter()
            .map(|s| -> Result<(ScalarProblem, Vec<f64>)> {
                let problem = s.scalar_problem()?;
                let plan = ReferencePlan::for_problem(&problem);
                let reference =
                    fine_reference(&problem, &plan, protocol.cache_dir.as_deref())?;
                let coarse = restrict(reference.final_state(), protocol.nx);
                Ok((problem, coarse))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut records: Vec<CycleRecord> = Vec::new();
    let mut tape = Tape::new();

    for run in 0..protocol.runs {
        let seed = run_seed(protocol, run);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // Dataset first, then model init, so the problem set is independent
        // of the architecture.
        let dataset: Vec<ProblemSample> = (0..protocol.dataset_size)
            .map(|_| match protocol.family {
                Family::BuckleyLeverett => gen_bl_sample(&mut rng),
                Family::Burgers => gen_burgers_sample(&mut rng),
                Family::Euler => gen_euler_sample(&mut rng),
            })
            .collect();
        let mut model = DsModel::random_init(&specs, 0.1, &mut rng)?;
        let mut opt_pos = AdamState::for_net(protocol.lr, &model.pos);
        let mut opt_neg = AdamState::for_net(protocol.lr, &model.neg);

        // Training references, one per dataset entry (scalar only).
        let scalar_refs: Vec<Option<ScalarRefs>> = if protocol.family != Family::Euler {
            dataset
                .iter()
                .map(|s| -> Result<Option<ScalarRefs>> {
                    let problem = s.scalar_problem()?;
                    Ok(Some(scalar_training_reference(&problem, protocol)?))
                })
                .collect::<Result<_>>()?
        } else {
            dataset.iter().map(|_| None).collect()
        };

        for cycle in 0..protocol.cycles {
            let pick = rng.gen_range(0..dataset.len());
            let sample = dataset[pick];
            let before = model.clone();
            let before_pos = opt_pos.clone();
            let before_neg = opt_neg.clone();

            let outcome = match protocol.family {
                Family::Euler => {
                    let problem = sample.euler_problem()?;
                    euler_training_cycle(
                        &mut model,
                        &mut opt_pos,
                        &mut opt_neg,
                        &problem,
                        protocol,
                        &mut tape,
                    )
                }
                _ => {
                    let problem = sample.scalar_problem()?;
                    let refs = scalar_refs[pick].as_ref().expect("scalar refs exist");
                    scalar_training_cycle(
                        &mut model,
                        &mut opt_pos,
                        &mut opt_neg,
                        &problem,
                        refs,
                        protocol,
                        &mut tape,
                    )
                }
            };

            let (mean_loss, last_loss, validation_loss) = match outcome {
                Ok((mean, last)) => {
                    let v = if protocol.family == Family::Euler {
                        euler_validation_loss(&model, protocol)
                    } else {
                        scalar_validation_loss(&model, &validation, protocol)
                    };
                    (mean, last, v)
                }
                Err(_) => {
                    // Divergence aborts the cycle and restores the model.
                    model = before;
                    opt_pos = before_pos;
                    opt_neg = before_neg;
                    (f64::NAN, f64::NAN, f64::INFINITY)
                }
            };

            let checkpoint = protocol
                .out_dir
                .join(format!("checkpoint_r{run}_c{cycle:03}.json"));
            model.save(&checkpoint)?;
            let record = CycleRecord {
                run,
                cycle,
                seed,
                sample: sample.label(),
                mean_step_loss: mean_loss,
                final_step_loss: last_loss,
                validation_loss,
                checkpoint: checkpoint.to_string_lossy().into_owned(),
            };
            if protocol.verbose {
                println!(
                    "run {run} cycle {cycle:3}  {}  step-loss {:.3e}  validation {:.3e}",
                    record.sample, record.mean_step_loss, record.validation_loss
                );
            }
            let line = serde_json::to_string(&record).map_err(|e| Error::ModelFormat(e.to_string()))?;
            writeln!(log, "{line}").map_err(|e| Error::io(&log_path, e))?;
            records.push(record);
        }
    }

    let best_index = select_model(&records)?;
    let best_model = protocol.out_dir.join("model_best.json");
    fs::copy(&records[best_index].checkpoint, &best_model)
        .map_err(|e| Error::io(&best_model, e))?;
    Ok(TrainOutcome {
        records,
        best_index,
        best_model,
    })
}
