//! Exact solver for the Riemann problem of the 1-D Euler equations.
//!
//! Newton iteration on the classical pressure function, started from the
//! two-rarefaction approximation, with a bisection fallback whenever an
//! iterate leaves the positive domain. The similarity solution (two
//! nonlinear waves around a contact) can then be sampled at any `x/t`.

use crate::error::{Error, Result};
use crate::euler::{EulerProblem, PrimitiveState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    Shock,
    Rarefaction,
}

/// Star region between the two nonlinear waves.
#[derive(Debug, Clone, Copy)]
pub struct StarState {
    pub p: f64,
    pub u: f64,
    pub left_wave: WaveKind,
    pub right_wave: WaveKind,
}

const MAX_NEWTON: usize = 100;
const RESIDUAL_TOL: f64 = 1e-12;

fn sound_speed(s: &PrimitiveState, gamma: f64) -> f64 {
    (gamma * s.p / s.rho).sqrt()
}

/// One side's contribution to the pressure function and its derivative.
fn side_fn(p: f64, s: &PrimitiveState, gamma: f64) -> (f64, f64) {
    let c = sound_speed(s, gamma);
    if p > s.p {
        // Shock branch.
        let a = 2.0 / ((gamma + 1.0) * s.rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * s.p;
        let root = (a / (p + b)).sqrt();
        let f = (p - s.p) * root;
        let df = root * (1.0 - 0.5 * (p - s.p) / (b + p));
        (f, df)
    } else {
        // Rarefaction branch.
        let z = (gamma - 1.0) / (2.0 * gamma);
        let f = 2.0 * c / (gamma - 1.0) * ((p / s.p).powf(z) - 1.0);
        let df = (p / s.p).powf(-(gamma + 1.0) / (2.0 * gamma)) / (s.rho * c);
        (f, df)
    }
}

fn pressure_fn(p: f64, l: &PrimitiveState, r: &PrimitiveState, gamma: f64) -> (f64, f64) {
    let (fl, dl) = side_fn(p, l, gamma);
    let (fr, dr) = side_fn(p, r, gamma);
    (fl + fr + (r.u - l.u), dl + dr)
}

fn check_positive(s: &PrimitiveState, side: &str) -> Result<()> {
    if !(s.rho > 0.0 && s.p > 0.0) {
        return Err(Error::BadProblem(format!(
            "{side} state needs positive density and pressure, got rho = {}, p = {}",
            s.rho, s.p
        )));
    }
    Ok(())
}

/// Star pressure/velocity between `l` and `r`.
pub fn exact_riemann(l: &PrimitiveState, r: &PrimitiveState, gamma: f64) -> Result<StarState> {
    check_positive(l, "left")?;
    check_positive(r, "right")?;
    let cl = sound_speed(l, gamma);
    let cr = sound_speed(r, gamma);
    if 2.0 * (cl + cr) / (gamma - 1.0) <= r.u - l.u {
        return Err(Error::Vacuum);
    }

    // Two-rarefaction initial guess.
    let z = (gamma - 1.0) / (2.0 * gamma);
    let guess = ((cl + cr - 0.5 * (gamma - 1.0) * (r.u - l.u))
        / (cl / l.p.powf(z) + cr / r.p.powf(z)))
    .powf(1.0 / z);
    let mut p = guess.max(1e-10);

    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        let (f, df) = pressure_fn(p, l, r, gamma);
        if f.abs() < RESIDUAL_TOL {
            converged = true;
            break;
        }
        let next = p - f / df;
        if !(next > 0.0) || !next.is_finite() {
            // Newton left the positive domain; bisection takes over.
            p = bisect_pressure(l, r, gamma)?;
            converged = pressure_fn(p, l, r, gamma).0.abs() < RESIDUAL_TOL;
            break;
        }
        p = next;
    }
    if !converged {
        let (f, _) = pressure_fn(p, l, r, gamma);
        if f.abs() >= RESIDUAL_TOL {
            return Err(Error::NoConvergence(MAX_NEWTON));
        }
    }

    let (fl, _) = side_fn(p, l, gamma);
    let (fr, _) = side_fn(p, r, gamma);
    let u = 0.5 * (l.u + r.u) + 0.5 * (fr - fl);
    Ok(StarState {
        p,
        u,
        left_wave: if p > l.p {
            WaveKind::Shock
        } else {
            WaveKind::Rarefaction
        },
        right_wave: if p > r.p {
            WaveKind::Shock
        } else {
            WaveKind::Rarefaction
        },
    })
}

fn bisect_pressure(l: &PrimitiveState, r: &PrimitiveState, gamma: f64) -> Result<f64> {
    let mut lo = 1e-8;
    let mut hi = 10.0 * l.p.max(r.p);
    while pressure_fn(hi, l, r, gamma).0 <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoConvergence(MAX_NEWTON));
        }
    }
    if pressure_fn(lo, l, r, gamma).0 >= 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pressure_fn(mid, l, r, gamma).0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn star_density(s: &PrimitiveState, p_star: f64, wave: WaveKind, gamma: f64) -> f64 {
    let ratio = p_star / s.p;
    match wave {
        WaveKind::Shock => {
            let beta = (gamma - 1.0) / (gamma + 1.0);
            s.rho * (ratio + beta) / (beta * ratio + 1.0)
        }
        WaveKind::Rarefaction => s.rho * ratio.powf(1.0 / gamma),
    }
}

/// Shock speeds of the star solution (None for rarefactions).
pub fn shock_speeds(
    star: &StarState,
    l: &PrimitiveState,
    r: &PrimitiveState,
    gamma: f64,
) -> (Option<f64>, Option<f64>) {
    let cl = sound_speed(l, gamma);
    let cr = sound_speed(r, gamma);
    let left = match star.left_wave {
        WaveKind::Shock => Some(
            l.u - cl
                * ((gamma + 1.0) / (2.0 * gamma) * star.p / l.p
                    + (gamma - 1.0) / (2.0 * gamma))
                .sqrt(),
        ),
        WaveKind::Rarefaction => None,
    };
    let right = match star.right_wave {
        WaveKind::Shock => Some(
            r.u + cr
                * ((gamma + 1.0) / (2.0 * gamma) * star.p / r.p
                    + (gamma - 1.0) / (2.0 * gamma))
                .sqrt(),
        ),
        WaveKind::Rarefaction => None,
    };
    (left, right)
}

/// Sample the similarity solution at `xi = x / t`.
pub fn sample_riemann(
    star: &StarState,
    l: &PrimitiveState,
    r: &PrimitiveState,
    gamma: f64,
    xi: f64,
) -> PrimitiveState {
    let cl = sound_speed(l, gamma);
    let cr = sound_speed(r, gamma);
    let g1 = gamma - 1.0;
    let g2 = gamma + 1.0;

    if xi <= star.u {
        // Left of the contact.
        match star.left_wave {
            WaveKind::Shock => {
                let s = shock_speeds(star, l, r, gamma).0.expect("left shock");
                if xi < s {
                    *l
                } else {
                    PrimitiveState::new(
                        star_density(l, star.p, WaveKind::Shock, gamma),
                        star.u,
                        star.p,
                    )
                }
            }
            WaveKind::Rarefaction => {
                let c_star = cl * (star.p / l.p).powf(g1 / (2.0 * gamma));
                let head = l.u - cl;
                let tail = star.u - c_star;
                if xi < head {
                    *l
                } else if xi > tail {
                    PrimitiveState::new(
                        star_density(l, star.p, WaveKind::Rarefaction, gamma),
                        star.u,
                        star.p,
                    )
                } else {
                    let u = 2.0 / g2 * (cl + 0.5 * g1 * l.u + xi);
                    let c = 2.0 / g2 * (cl + 0.5 * g1 * (l.u - xi));
                    let rho = l.rho * (c / cl).powf(2.0 / g1);
                    let p = l.p * (c / cl).powf(2.0 * gamma / g1);
                    PrimitiveState::new(rho, u, p)
                }
            }
        }
    } else {
        // Right of the contact.
        match star.right_wave {
            WaveKind::Shock => {
                let s = shock_speeds(star, l, r, gamma).1.expect("right shock");
                if xi > s {
                    *r
                } else {
                    PrimitiveState::new(
                        star_density(r, star.p, WaveKind::Shock, gamma),
                        star.u,
                        star.p,
                    )
                }
            }
            WaveKind::Rarefaction => {
                let c_star = cr * (star.p / r.p).powf(g1 / (2.0 * gamma));
                let head = r.u + cr;
                let tail = star.u + c_star;
                if xi > head {
                    *r
                } else if xi < tail {
                    PrimitiveState::new(
                        star_density(r, star.p, WaveKind::Rarefaction, gamma),
                        star.u,
                        star.p,
                    )
                } else {
                    let u = 2.0 / g2 * (-cr + 0.5 * g1 * r.u + xi);
                    let c = 2.0 / g2 * (cr - 0.5 * g1 * (r.u - xi));
                    let rho = r.rho * (c / cr).powf(2.0 / g1);
                    let p = r.p * (c / cr).powf(2.0 * gamma / g1);
                    PrimitiveState::new(rho, u, p)
                }
            }
        }
    }
}

/// Exact solution of a shock-tube problem on its grid at time `t`.
pub fn exact_on_grid(
    problem: &EulerProblem,
    gamma: f64,
    n_points: usize,
    dx: f64,
    t: f64,
) -> Result<Vec<PrimitiveState>> {
    if t <= 0.0 {
        return Ok((0..n_points)
            .map(|i| problem.initial_state(problem.x_min + i as f64 * dx))
            .collect());
    }
    let star = exact_riemann(&problem.left, &problem.right, gamma)?;
    Ok((0..n_points)
        .map(|i| {
            let x = problem.x_min + i as f64 * dx;
            sample_riemann(&star, &problem.left, &problem.right, gamma, (x - problem.x_split) / t)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{physical_flux, GAMMA};

    /// Independent oracle: bisection on a separately written pressure
    /// function (no reuse of `side_fn`).
    fn bisection_oracle(l: &PrimitiveState, r: &PrimitiveState, gamma: f64) -> f64 {
        let side = |p: f64, s: &PrimitiveState| -> f64 {
            let c = (gamma * s.p / s.rho).sqrt();
            if p > s.p {
                let a = 2.0 / ((gamma + 1.0) * s.rho);
                let b = (gamma - 1.0) / (gamma + 1.0) * s.p;
                (p - s.p) * (a / (p + b)).sqrt()
            } else {
                2.0 * c / (gamma - 1.0) * ((p / s.p).powf((gamma - 1.0) / (2.0 * gamma)) - 1.0)
            }
        };
        let f = |p: f64| side(p, l) + side(p, r) + (r.u - l.u);
        let (mut lo, mut hi) = (1e-12, 100.0 * l.p.max(r.p));
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn equal_states_give_zero_strength_waves() {
        let s = PrimitiveState::new(1.0, 0.5, 2.0);
        let star = exact_riemann(&s, &s, GAMMA).unwrap();
        assert!((star.p - 2.0).abs() < 1e-12);
        assert!((star.u - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sod_star_state() {
        let l = PrimitiveState::new(1.0, 0.0, 1.0);
        let r = PrimitiveState::new(0.125, 0.0, 0.1);
        let star = exact_riemann(&l, &r, GAMMA).unwrap();

        let (f, _) = pressure_fn(star.p, &l, &r, GAMMA);
        assert!(f.abs() < RESIDUAL_TOL);

        let oracle = bisection_oracle(&l, &r, GAMMA);
        assert!(
            (star.p - oracle).abs() < 1e-10,
            "newton {} vs bisection {}",
            star.p,
            oracle
        );
        assert!((star.p - 0.30313).abs() < 5e-6);
        assert!((star.u - 0.92745).abs() < 5e-6);
        assert_eq!(star.left_wave, WaveKind::Rarefaction);
        assert_eq!(star.right_wave, WaveKind::Shock);
    }

    #[test]
    fn symmetric_collision_has_zero_contact_speed() {
        let l = PrimitiveState::new(1.0, 2.0, 1.0);
        let r = PrimitiveState::new(1.0, -2.0, 1.0);
        let star = exact_riemann(&l, &r, GAMMA).unwrap();
        assert!(star.u.abs() < 1e-12);
        assert_eq!(star.left_wave, WaveKind::Shock);
        assert_eq!(star.right_wave, WaveKind::Shock);
    }

    #[test]
    fn vacuum_is_detected() {
        let l = PrimitiveState::new(1.0, -10.0, 1.0);
        let r = PrimitiveState::new(1.0, 10.0, 1.0);
        assert!(matches!(exact_riemann(&l, &r, GAMMA), Err(Error::Vacuum)));
    }

    #[test]
    fn sampling_far_field_returns_input_states() {
        let l = PrimitiveState::new(1.0, 0.0, 1.0);
        let r = PrimitiveState::new(0.125, 0.0, 0.1);
        let star = exact_riemann(&l, &r, GAMMA).unwrap();
        assert_eq!(sample_riemann(&star, &l, &r, GAMMA, -100.0), l);
        assert_eq!(sample_riemann(&star, &l, &r, GAMMA, 100.0), r);
    }

    #[test]
    fn rarefaction_preserves_riemann_invariant() {
        let l = PrimitiveState::new(1.0, 0.0, 1.0);
        let r = PrimitiveState::new(0.125, 0.0, 0.1);
        let star = exact_riemann(&l, &r, GAMMA).unwrap();
        let cl = sound_speed(&l, GAMMA);
        let invariant = l.u + 2.0 * cl / (GAMMA - 1.0);
        let head = l.u - cl;
        let tail = star.u - cl * (star.p / l.p).powf((GAMMA - 1.0) / (2.0 * GAMMA));
        for k in 0..=20 {
            let xi = head + (tail - head) * k as f64 / 20.0;
            let s = sample_riemann(&star, &l, &r, GAMMA, xi);
            let c = sound_speed(&s, GAMMA);
            assert!(
                (s.u + 2.0 * c / (GAMMA - 1.0) - invariant).abs() < 1e-10,
                "invariant broken at xi = {xi}"
            );
        }
    }

    #[test]
    fn rankine_hugoniot_across_the_right_shock() {
        let l = PrimitiveState::new(1.0, 0.0, 1.0);
        let r = PrimitiveState::new(0.125, 0.0, 0.1);
        let star = exact_riemann(&l, &r, GAMMA).unwrap();
        let s = shock_speeds(&star, &l, &r, GAMMA).1.unwrap();

        let up = r; // upstream of the right shock
        let down = PrimitiveState::new(star_density(&r, star.p, WaveKind::Shock, GAMMA), star.u, star.p);
        let qu = up.to_conserved();
        let qd = down.to_conserved();
        let fu = physical_flux(qu[0], qu[1], qu[2]);
        let fd = physical_flux(qd[0], qd[1], qd[2]);
        for comp in 0..3 {
            let lhs = fu[comp] - fd[comp];
            let rhs = s * (qu[comp] - qd[comp]);
            assert!(
                (lhs - rhs).abs() < 1e-10,
                "component {comp}: flux jump {lhs} vs s*state jump {rhs}"
            );
        }

        // Entropy: characteristics converge onto the shock.
        let cu = sound_speed(&up, GAMMA);
        let cd = sound_speed(&down, GAMMA);
        assert!(down.u + cd > s && s > up.u + cu);
    }

    #[test]
    fn contact_is_continuous_in_pressure_and_velocity() {
        let l = PrimitiveState::new(0.445, 0.698, 3.528);
        let r = PrimitiveState::new(0.5, 0.0, 0.571);
        let star = exact_riemann(&l, &r, GAMMA).unwrap();
        let eps = 1e-9;
        let a = sample_riemann(&star, &l, &r, GAMMA, star.u - eps);
        let b = sample_riemann(&star, &l, &r, GAMMA, star.u + eps);
        assert!((a.p - b.p).abs() < 1e-12 * star.p.abs().max(1.0));
        assert!((a.u - b.u).abs() < 1e-12);
        // Density generally jumps across the contact.
        assert!((a.rho - b.rho).abs() > 1e-3);
    }

    #[test]
    fn newton_agrees_with_bisection_across_random_states() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(15);
        for _ in 0..200 {
            let l = PrimitiveState::new(
                rng.gen_range(0.05..5.0),
                rng.gen_range(-0.5..1.0),
                rng.gen_range(0.05..10.0),
            );
            let r = PrimitiveState::new(
                rng.gen_range(0.05..5.0),
                rng.gen_range(-0.5..1.0),
                rng.gen_range(0.05..10.0),
            );
            let star = match exact_riemann(&l, &r, GAMMA) {
                Ok(s) => s,
                Err(Error::Vacuum) => continue,
                Err(e) => panic!("{e}"),
            };
            let oracle = bisection_oracle(&l, &r, GAMMA);
            assert!(
                (star.p - oracle).abs() <= 1e-9 * oracle.max(1.0),
                "p* mismatch: {} vs {}",
                star.p,
                oracle
            );
        }
    }
}
