//! C ABI over the solver library.
//!
//! Opaque handles own the parsed problem and any loaded model; every entry
//! point returns a status code and writes results through caller-provided
//! buffers. The header is generated by cbindgen into
//! `target/include/wenods.h` at build time.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wenods::error::Error;
use wenods::euler::{EulerProblem, PrimitiveState, GAMMA};
use wenods::flux::{MultiplierSource, ScalarProblem};
use wenods::integrate::{flat_to_primitives, run_euler, run_scalar, Record, StepPlan};
use wenods::kernel::{SchemeConfig, Weighting};
use wenods::mesh::Grid1D;
use wenods::net::DsModel;
use wenods::riemann::{exact_riemann, sample_riemann};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WenodsStatus {
    Ok = 0,
    /// A pointer argument was null or a size did not match.
    BadArgument = 1,
    /// The problem description could not be parsed or validated.
    BadProblem = 2,
    /// The model file is missing or malformed.
    BadModel = 3,
    /// The solver aborted (non-finite or non-physical state, no
    /// convergence).
    SolverAbort = 4,
    /// Internal panic; state is unspecified but memory-safe.
    Panic = 5,
}

fn status_of(e: &Error) -> WenodsStatus {
    match e {
        Error::MissingModel(_) | Error::ModelFormat(_) => WenodsStatus::BadModel,
        Error::BadProblem(_)
        | Error::InvalidGrid(_)
        | Error::InvalidFlux(_)
        | Error::FieldLength { .. }
        | Error::MissingMultipliers => WenodsStatus::BadProblem,
        _ => WenodsStatus::SolverAbort,
    }
}

/// Which weighting the solver applies.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WenodsScheme {
    Js = 0,
    Z = 1,
    Ds = 2,
}

impl WenodsScheme {
    fn weighting(self) -> Weighting {
        match self {
            WenodsScheme::Js => Weighting::Js,
            WenodsScheme::Z => Weighting::Z,
            WenodsScheme::Ds => Weighting::Ds,
        }
    }
}

enum ProblemKind {
    Scalar(ScalarProblem),
    Euler(EulerProblem),
}

/// Opaque problem handle.
pub struct WenodsProblem {
    kind: ProblemKind,
}

/// Opaque model handle (the two multiplier networks plus the offset).
pub struct WenodsModel {
    model: DsModel,
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

fn parse_problem(descriptor: &str) -> Result<ProblemKind, Error> {
    let d = descriptor.trim();
    if d == "transport" {
        return Ok(ProblemKind::Scalar(ScalarProblem::transport()));
    }
    if d == "sod" {
        return Ok(ProblemKind::Euler(EulerProblem::sod()));
    }
    if d == "sod-modified" {
        return Ok(ProblemKind::Euler(EulerProblem::sod_modified()));
    }
    if d == "lax" {
        return Ok(ProblemKind::Euler(EulerProblem::lax()));
    }
    if let Some(rest) = d.strip_prefix("bl:a=") {
        let a: f64 = rest
            .parse()
            .map_err(|_| Error::BadProblem(format!("bad parameter in `{d}`")))?;
        return Ok(ProblemKind::Scalar(ScalarProblem::buckley_leverett(a)?));
    }
    for (prefix, make) in [
        ("burgers-step:z=", 0),
        ("burgers-gauss:z=", 1),
        ("burgers-sine:z=", 2),
    ] {
        if let Some(rest) = d.strip_prefix(prefix) {
            let z: f64 = rest
                .parse()
                .map_err(|_| Error::BadProblem(format!("bad parameter in `{d}`")))?;
            let ic = match make {
                0 => wenods::flux::InitialCondition::Step {
                    x_lo: 1.0,
                    x_hi: 2.0,
                    amplitude: z,
                },
                1 => wenods::flux::InitialCondition::Gaussian { width: z },
                _ => wenods::flux::InitialCondition::ScaledSine { amplitude: z },
            };
            return Ok(ProblemKind::Scalar(ScalarProblem::burgers(ic)));
        }
    }
    Err(Error::BadProblem(format!("unknown problem `{d}`")))
}

/// Parse a problem descriptor (same grammar as the CLI: `transport`,
/// `bl:a=0.25`, `burgers-sine:z=1.6`, `sod`, `sod-modified`, `lax`).
///
/// # Safety
/// `descriptor` must be a valid NUL-terminated string and `out` a valid
/// pointer; the returned handle must be freed with
/// [`wenods_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn wenods_problem_parse(
    descriptor: *const c_char,
    out: *mut *mut WenodsProblem,
) -> WenodsStatus {
    if out.is_null() {
        return WenodsStatus::BadArgument;
    }
    *out = ptr::null_mut();
    let Some(text) = cstr(descriptor) else {
        return WenodsStatus::BadArgument;
    };
    match parse_problem(text) {
        Ok(kind) => {
            *out = Box::into_raw(Box::new(WenodsProblem { kind }));
            WenodsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `problem` must come from [`wenods_problem_parse`] (or be null).
#[no_mangle]
pub unsafe extern "C" fn wenods_problem_free(problem: *mut WenodsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Load a trained model file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer;
/// free the handle with [`wenods_model_free`].
#[no_mangle]
pub unsafe extern "C" fn wenods_model_load(
    path: *const c_char,
    out: *mut *mut WenodsModel,
) -> WenodsStatus {
    if out.is_null() {
        return WenodsStatus::BadArgument;
    }
    *out = ptr::null_mut();
    let Some(text) = cstr(path) else {
        return WenodsStatus::BadArgument;
    };
    match DsModel::load(std::path::Path::new(text)) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(WenodsModel { model }));
            WenodsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `model` must come from [`wenods_model_load`] (or be null).
#[no_mangle]
pub unsafe extern "C" fn wenods_model_free(model: *mut WenodsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of values a solve writes for this problem on `nx` intervals:
/// `nx` for periodic scalar problems, `3 * (nx + 1)` for shock tubes
/// (density, velocity, pressure blocks).
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wenods_solution_len(
    problem: *const WenodsProblem,
    nx: usize,
) -> usize {
    match problem.as_ref() {
        None => 0,
        Some(p) => match &p.kind {
            ProblemKind::Scalar(_) => nx,
            ProblemKind::Euler(_) => 3 * (nx + 1),
        },
    }
}

/// Run a problem to its final time and write the solution into `out`.
///
/// Scalar problems use `nt` fixed steps (0 picks the benchmark default);
/// shock tubes step adaptively at CFL 0.9 and ignore `nt`. For `Ds` a model
/// handle is required.
///
/// # Safety
/// `problem` (and `model` when non-null) must be live handles; `out` must
/// point to at least `out_len` doubles with `out_len` equal to
/// [`wenods_solution_len`].
#[no_mangle]
pub unsafe extern "C" fn wenods_solve(
    problem: *const WenodsProblem,
    scheme: WenodsScheme,
    model: *const WenodsModel,
    nx: usize,
    nt: usize,
    out: *mut f64,
    out_len: usize,
) -> WenodsStatus {
    let Some(problem) = problem.as_ref() else {
        return WenodsStatus::BadArgument;
    };
    if out.is_null() || out_len != wenods_solution_len(problem, nx) {
        return WenodsStatus::BadArgument;
    }
    let model = model.as_ref();
    if scheme == WenodsScheme::Ds && model.is_none() {
        return WenodsStatus::BadModel;
    }
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<Vec<f64>, Error> {
        let cfg = SchemeConfig::new(scheme.weighting());
        let source = match (scheme, model) {
            (WenodsScheme::Ds, Some(m)) => MultiplierSource::Model(&m.model),
            _ => MultiplierSource::None,
        };
        match &problem.kind {
            ProblemKind::Scalar(p) => {
                let grid = Grid1D::new(p.x_min, p.x_max, nx)?;
                let steps = if nt == 0 {
                    match p.flux {
                        wenods::flux::ScalarFlux::BuckleyLeverett { .. } => 140 * nx / 128,
                        _ => 100 * nx / 128,
                    }
                    .max(1)
                } else {
                    nt
                };
                let plan = StepPlan::fixed(steps, p.t_final);
                let traj = run_scalar(p, &grid, &cfg, &plan, &source, Record::FinalOnly)?;
                Ok(traj.final_state().to_vec())
            }
            ProblemKind::Euler(p) => {
                let grid = Grid1D::new(p.x_min, p.x_max, nx)?;
                let plan = StepPlan::adaptive(0.9, p.t_final);
                let traj = run_euler(p, &grid, &cfg, &plan, &source, Record::FinalOnly)?;
                let prim = flat_to_primitives(traj.final_state())?;
                let mut flat = Vec::with_capacity(3 * prim.len());
                flat.extend(prim.iter().map(|s| s.rho));
                flat.extend(prim.iter().map(|s| s.u));
                flat.extend(prim.iter().map(|s| s.p));
                Ok(flat)
            }
        }
    }));
    match result {
        Ok(Ok(values)) => {
            ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
            WenodsStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => WenodsStatus::Panic,
    }
}

/// Exact Riemann solution sampled at `x/t`; writes `rho, u, p` plus the
/// star pressure and velocity.
///
/// # Safety
/// All output pointers must be valid for one double each.
#[no_mangle]
pub unsafe extern "C" fn wenods_riemann_sample(
    rho_l: f64,
    u_l: f64,
    p_l: f64,
    rho_r: f64,
    u_r: f64,
    p_r: f64,
    xi: f64,
    rho_out: *mut f64,
    u_out: *mut f64,
    p_out: *mut f64,
    p_star_out: *mut f64,
    u_star_out: *mut f64,
) -> WenodsStatus {
    if rho_out.is_null()
        || u_out.is_null()
        || p_out.is_null()
        || p_star_out.is_null()
        || u_star_out.is_null()
    {
        return WenodsStatus::BadArgument;
    }
    let left = PrimitiveState::new(rho_l, u_l, p_l);
    let right = PrimitiveState::new(rho_r, u_r, p_r);
    match exact_riemann(&left, &right, GAMMA) {
        Ok(star) => {
            let s = sample_riemann(&star, &left, &right, GAMMA, xi);
            *rho_out = s.rho;
            *u_out = s.u;
            *p_out = s.p;
            *p_star_out = star.p;
            *u_star_out = star.u;
            WenodsStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn wenods_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn solve_transport_through_the_c_abi() {
        let desc = CString::new("transport").unwrap();
        let mut handle: *mut WenodsProblem = ptr::null_mut();
        unsafe {
            assert_eq!(
                wenods_problem_parse(desc.as_ptr(), &mut handle),
                WenodsStatus::Ok
            );
            let nx = 64;
            let len = wenods_solution_len(handle, nx);
            assert_eq!(len, nx);
            let mut out = vec![0.0f64; len];
            let status = wenods_solve(
                handle,
                WenodsScheme::Z,
                ptr::null(),
                nx,
                0,
                out.as_mut_ptr(),
                len,
            );
            assert_eq!(status, WenodsStatus::Ok);
            assert!(out.iter().all(|v| v.is_finite()));
            wenods_problem_free(handle);
        }
    }

    #[test]
    fn euler_solution_layout_and_status() {
        let desc = CString::new("sod").unwrap();
        let mut handle: *mut WenodsProblem = ptr::null_mut();
        unsafe {
            assert_eq!(
                wenods_problem_parse(desc.as_ptr(), &mut handle),
                WenodsStatus::Ok
            );
            let nx = 32;
            let len = wenods_solution_len(handle, nx);
            assert_eq!(len, 3 * (nx + 1));
            let mut out = vec![0.0f64; len];
            let status = wenods_solve(
                handle,
                WenodsScheme::Js,
                ptr::null(),
                nx,
                0,
                out.as_mut_ptr(),
                len,
            );
            assert_eq!(status, WenodsStatus::Ok);
            // Density and pressure blocks stay positive.
            assert!(out[..nx + 1].iter().all(|&v| v > 0.0));
            assert!(out[2 * (nx + 1)..].iter().all(|&v| v > 0.0));
            wenods_problem_free(handle);
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let desc = CString::new("no-such-problem").unwrap();
        let mut handle: *mut WenodsProblem = ptr::null_mut();
        unsafe {
            assert_eq!(
                wenods_problem_parse(desc.as_ptr(), &mut handle),
                WenodsStatus::BadProblem
            );
            assert!(handle.is_null());

            let desc = CString::new("transport").unwrap();
            assert_eq!(
                wenods_problem_parse(desc.as_ptr(), &mut handle),
                WenodsStatus::Ok
            );
            // DS without a model.
            let mut out = vec![0.0f64; 64];
            assert_eq!(
                wenods_solve(
                    handle,
                    WenodsScheme::Ds,
                    ptr::null(),
                    64,
                    0,
                    out.as_mut_ptr(),
                    64
                ),
                WenodsStatus::BadModel
            );
            // Wrong buffer length.
            assert_eq!(
                wenods_solve(
                    handle,
                    WenodsScheme::Z,
                    ptr::null(),
                    64,
                    0,
                    out.as_mut_ptr(),
                    63
                ),
                WenodsStatus::BadArgument
            );
            wenods_problem_free(handle);
        }
    }

    #[test]
    fn riemann_sample_matches_sod_star() {
        let mut rho = 0.0;
        let mut u = 0.0;
        let mut p = 0.0;
        let mut p_star = 0.0;
        let mut u_star = 0.0;
        let status = unsafe {
            wenods_riemann_sample(
                1.0,
                0.0,
                1.0,
                0.125,
                0.0,
                0.1,
                0.0,
                &mut rho,
                &mut u,
                &mut p,
                &mut p_star,
                &mut u_star,
            )
        };
        assert_eq!(status, WenodsStatus::Ok);
        assert!((p_star - 0.30313).abs() < 5e-6);
        assert!((u_star - 0.92745).abs() < 5e-6);
    }

    #[test]
    fn version_is_a_c_string() {
        let v = wenods_version();
        let text = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
        assert_eq!(text, env!("CARGO_PKG_VERSION"));
    }
}
