//! 1-D Euler equations of gas dynamics: state handling, Roe-averaged
//! characteristic decomposition and the characteristic-wise WENO right-hand
//! side.
//!
//! Reconstruction runs per characteristic field: the five-point window of
//! each interface is projected with that interface's Roe frame, each field is
//! split with a componentwise global Lax-Friedrichs speed and reconstructed
//! as a scalar, and the interface flux is projected back.

use crate::error::{Error, Result};
use crate::kernel::{interface_flux, negative_branch_reconstruct, SchemeConfig, Weighting};
use crate::flux::MultiplierSource;
use crate::mesh::{extend_with_ghosts, BoundaryPolicy};
use crate::net;

pub const GAMMA: f64 = 1.4;

/// Primitive state `(rho, u, p)` of one side or one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl PrimitiveState {
    pub fn new(rho: f64, u: f64, p: f64) -> Self {
        PrimitiveState { rho, u, p }
    }

    pub fn sound_speed(&self) -> f64 {
        (GAMMA * self.p / self.rho).sqrt()
    }

    pub fn to_conserved(&self) -> [f64; 3] {
        let e = self.p / (GAMMA - 1.0) + 0.5 * self.rho * self.u * self.u;
        [self.rho, self.rho * self.u, e]
    }
}

/// Conserved fields `(rho, rho u, E)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerField {
    pub rho: Vec<f64>,
    pub mom: Vec<f64>,
    pub energy: Vec<f64>,
}

impl EulerField {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Pack as `[rho | mom | energy]` for the generic time stepper.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(3 * self.len());
        flat.extend_from_slice(&self.rho);
        flat.extend_from_slice(&self.mom);
        flat.extend_from_slice(&self.energy);
        flat
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        let n = flat.len() / 3;
        EulerField {
            rho: flat[..n].to_vec(),
            mom: flat[n..2 * n].to_vec(),
            energy: flat[2 * n..].to_vec(),
        }
    }
}

#[inline]
fn pressure_of(rho: f64, mom: f64, energy: f64) -> f64 {
    (GAMMA - 1.0) * (energy - 0.5 * mom * mom / rho)
}

/// Primitive arrays from conserved ones; reports the first non-physical cell.
pub fn primitive_from_conserved(field: &EulerField, step: usize) -> Result<Vec<PrimitiveState>> {
    let mut prim = Vec::with_capacity(field.len());
    for i in 0..field.len() {
        let rho = field.rho[i];
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::NonPhysical {
                step,
                index: i,
                what: "density",
                value: rho,
            });
        }
        let p = pressure_of(rho, field.mom[i], field.energy[i]);
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::NonPhysical {
                step,
                index: i,
                what: "pressure",
                value: p,
            });
        }
        prim.push(PrimitiveState::new(rho, field.mom[i] / rho, p));
    }
    Ok(prim)
}

pub fn conserved_from_primitive(prim: &[PrimitiveState]) -> EulerField {
    let mut field = EulerField {
        rho: Vec::with_capacity(prim.len()),
        mom: Vec::with_capacity(prim.len()),
        energy: Vec::with_capacity(prim.len()),
    };
    for s in prim {
        let [r, m, e] = s.to_conserved();
        field.rho.push(r);
        field.mom.push(m);
        field.energy.push(e);
    }
    field
}

/// Physical flux `(rho u, rho u^2 + p, u (E + p))` of one cell.
#[inline]
pub fn physical_flux(rho: f64, mom: f64, energy: f64) -> [f64; 3] {
    let u = mom / rho;
    let p = pressure_of(rho, mom, energy);
    [mom, mom * u + p, u * (energy + p)]
}

/// Largest signal speed `max_i (c_i + |u_i|)` used by the CFL step control.
pub fn euler_max_signal(prim: &[PrimitiveState]) -> f64 {
    prim.iter()
        .fold(0.0f64, |m, s| m.max(s.sound_speed() + s.u.abs()))
}

/// Roe-averaged interface frame with analytic left/right eigenvector
/// matrices of the flux Jacobian (eigenvalues `u - c`, `u`, `u + c`).
#[derive(Debug, Clone, Copy)]
pub struct RoeFrame {
    pub u: f64,
    pub h: f64,
    pub c: f64,
    right: [[f64; 3]; 3],
    left: [[f64; 3]; 3],
}

pub fn roe_frame(l: &PrimitiveState, r: &PrimitiveState) -> Result<RoeFrame> {
    let sl = l.rho.sqrt();
    let sr = r.rho.sqrt();
    let el = l.p / (GAMMA - 1.0) + 0.5 * l.rho * l.u * l.u;
    let er = r.p / (GAMMA - 1.0) + 0.5 * r.rho * r.u * r.u;
    let hl = (el + l.p) / l.rho;
    let hr = (er + r.p) / r.rho;
    let u = (sl * l.u + sr * r.u) / (sl + sr);
    let h = (sl * hl + sr * hr) / (sl + sr);
    let c2 = (GAMMA - 1.0) * (h - 0.5 * u * u);
    if !(c2 > 0.0) {
        return Err(Error::SoundSpeed(c2));
    }
    let c = c2.sqrt();

    let b2 = (GAMMA - 1.0) / c2;
    let b1 = 0.5 * b2 * u * u;
    let right = [
        [1.0, 1.0, 1.0],
        [u - c, u, u + c],
        [h - u * c, 0.5 * u * u, h + u * c],
    ];
    let left = [
        [
            0.5 * (b1 + u / c),
            0.5 * (-b2 * u - 1.0 / c),
            0.5 * b2,
        ],
        [1.0 - b1, b2 * u, -b2],
        [
            0.5 * (b1 - u / c),
            0.5 * (-b2 * u + 1.0 / c),
            0.5 * b2,
        ],
    ];
    Ok(RoeFrame { u, h, c, right, left })
}

impl RoeFrame {
    pub fn eigenvalues(&self) -> [f64; 3] {
        [self.u - self.c, self.u, self.u + self.c]
    }

    /// Project a conserved-space vector onto characteristic variables.
    #[inline]
    pub fn project(&self, q: &[f64; 3]) -> [f64; 3] {
        let l = &self.left;
        [
            l[0][0] * q[0] + l[0][1] * q[1] + l[0][2] * q[2],
            l[1][0] * q[0] + l[1][1] * q[1] + l[1][2] * q[2],
            l[2][0] * q[0] + l[2][1] * q[1] + l[2][2] * q[2],
        ]
    }

    /// Back from characteristic to conserved space.
    #[inline]
    pub fn unproject(&self, v: &[f64; 3]) -> [f64; 3] {
        let r = &self.right;
        [
            r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
            r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
            r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
        ]
    }

    pub fn left_matrix(&self) -> &[[f64; 3]; 3] {
        &self.left
    }

    pub fn right_matrix(&self) -> &[[f64; 3]; 3] {
        &self.right
    }
}

/// A Riemann shock-tube setup on `[0, 1]` with the jump at `x = 0.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerProblem {
    pub left: PrimitiveState,
    pub right: PrimitiveState,
    pub x_split: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub t_final: f64,
}

impl EulerProblem {
    pub fn shock_tube(left: PrimitiveState, right: PrimitiveState, t_final: f64) -> Self {
        EulerProblem {
            left,
            right,
            x_split: 0.5,
            x_min: 0.0,
            x_max: 1.0,
            t_final,
        }
    }

    pub fn sod() -> Self {
        Self::shock_tube(
            PrimitiveState::new(1.0, 0.0, 1.0),
            PrimitiveState::new(0.125, 0.0, 0.1),
            0.1,
        )
    }

    /// Sod variant with a moving left state `(1, 0.75, 1)`.
    pub fn sod_modified() -> Self {
        Self::shock_tube(
            PrimitiveState::new(1.0, 0.75, 1.0),
            PrimitiveState::new(0.125, 0.0, 0.1),
            0.1,
        )
    }

    pub fn lax() -> Self {
        Self::shock_tube(
            PrimitiveState::new(0.445, 0.698, 3.528),
            PrimitiveState::new(0.5, 0.0, 0.571),
            0.1,
        )
    }

    /// Pointwise initial state: the left state holds up to and including the
    /// split coordinate.
    pub fn initial_state(&self, x: f64) -> PrimitiveState {
        if x <= self.x_split {
            self.left
        } else {
            self.right
        }
    }

    pub fn initial_field(&self, n_points: usize, dx: f64) -> EulerField {
        let prim: Vec<PrimitiveState> = (0..n_points)
            .map(|i| self.initial_state(self.x_min + i as f64 * dx))
            .collect();
        conserved_from_primitive(&prim)
    }

    pub fn descriptor(&self) -> String {
        format!(
            "euler|L=({:.17e},{:.17e},{:.17e})|R=({:.17e},{:.17e},{:.17e})|T={:.17e}",
            self.left.rho,
            self.left.u,
            self.left.p,
            self.right.rho,
            self.right.u,
            self.right.p,
            self.t_final
        )
    }
}

/// Characteristic-wise semidiscrete right-hand side for the Euler system.
///
/// Shock tubes use zero-gradient ghosts; the waves of the benchmark problems
/// never reach the boundary before the final time.
pub fn euler_rhs(
    field: &EulerField,
    dx: f64,
    cfg: &SchemeConfig,
    source: &MultiplierSource,
    step: usize,
) -> Result<EulerField> {
    let p = field.len();
    let boundary = BoundaryPolicy::ZeroGradient;
    let prim = primitive_from_conserved(field, step)?;

    // Componentwise global splitting speeds over the grid.
    let mut alphas = [0.0f64; 3];
    for s in &prim {
        let c = s.sound_speed();
        alphas[0] = alphas[0].max((s.u - c).abs());
        alphas[1] = alphas[1].max(s.u.abs());
        alphas[2] = alphas[2].max((s.u + c).abs());
    }

    // Padded conserved state, physical flux and primitives. The halo covers
    // the WENO stencil and, in DS mode, the network's receptive field.
    let pad = match cfg.weighting {
        Weighting::Ds => match source {
            MultiplierSource::Model(m) => m.pos.receptive_radius().max(m.neg.receptive_radius()) + 3,
            _ => 3,
        },
        _ => 3,
    };
    let rho_pad = extend_with_ghosts(&field.rho, boundary, pad);
    let mom_pad = extend_with_ghosts(&field.mom, boundary, pad);
    let e_pad = extend_with_ghosts(&field.energy, boundary, pad);
    let m_tot = rho_pad.len();
    let mut q_pad = Vec::with_capacity(m_tot);
    let mut f_pad = Vec::with_capacity(m_tot);
    let mut prim_pad = Vec::with_capacity(m_tot);
    for j in 0..m_tot {
        let (rho, mom, e) = (rho_pad[j], mom_pad[j], e_pad[j]);
        if !(rho > 0.0) {
            return Err(Error::NonPhysical {
                step,
                index: j,
                what: "density",
                value: rho,
            });
        }
        q_pad.push([rho, mom, e]);
        f_pad.push(physical_flux(rho, mom, e));
        prim_pad.push(PrimitiveState::new(rho, mom / rho, pressure_of(rho, mom, e)));
    }

    // Interface flux in conserved space at j+1/2 for padded index j, with the
    // given multiplier triples per characteristic field and sign.
    let reconstruct = |j: usize,
                       deltas: Option<(&[[f64; 3]; 3], &[[f64; 3]; 3])>|
     -> Result<[f64; 3]> {
        let frame = roe_frame(&prim_pad[j], &prim_pad[j + 1])?;
        // Project the six stencil cells j-2 .. j+3.
        let mut v = [[0.0; 3]; 6];
        let mut g = [[0.0; 3]; 6];
        for t in 0..6 {
            v[t] = frame.project(&q_pad[j - 2 + t]);
            g[t] = frame.project(&f_pad[j - 2 + t]);
        }
        let mut ghat = [0.0; 3];
        for kf in 0..3 {
            let a = alphas[kf];
            let wp: [f64; 5] = std::array::from_fn(|t| 0.5 * (g[t][kf] + a * v[t][kf]));
            let wn: [f64; 5] = std::array::from_fn(|t| 0.5 * (g[t + 1][kf] - a * v[t + 1][kf]));
            let (dp, dn) = match deltas {
                Some((dp, dn)) => (Some(&dp[kf]), Some(&dn[kf])),
                None => (None, None),
            };
            ghat[kf] = interface_flux(&wp, cfg, dp)?
                + negative_branch_reconstruct(&wn, cfg, dn)?;
        }
        Ok(frame.unproject(&ghat))
    };

    let mut rhs = EulerField {
        rho: vec![0.0; p],
        mom: vec![0.0; p],
        energy: vec![0.0; p],
    };

    match cfg.weighting {
        Weighting::Js | Weighting::Z => {
            let mut fhat = vec![[0.0; 3]; p + 1];
            for k in 0..=p {
                fhat[k] = reconstruct(k + pad - 1, None)?;
            }
            for i in 0..p {
                rhs.rho[i] = -(fhat[i + 1][0] - fhat[i][0]) / dx;
                rhs.mom[i] = -(fhat[i + 1][1] - fhat[i][1]) / dx;
                rhs.energy[i] = -(fhat[i + 1][2] - fhat[i][2]) / dx;
            }
        }
        Weighting::Ds => {
            // Per-field multiplier triples from the node-wise projected split
            // characteristic fluxes; one shared network per flux sign.
            let (dpos, dneg) =
                euler_multiplier_fields(source, &q_pad, &f_pad, &prim_pad, &alphas, p, pad)?;
            for i in 0..p {
                let tp: [[f64; 3]; 3] =
                    std::array::from_fn(|kf| [dpos[kf][i], dpos[kf][i + 1], dpos[kf][i + 2]]);
                let tn: [[f64; 3]; 3] =
                    std::array::from_fn(|kf| [dneg[kf][i + 2], dneg[kf][i + 1], dneg[kf][i]]);
                let right = reconstruct(i + pad, Some((&tp, &tn)))?;
                let left = reconstruct(i + pad - 1, Some((&tp, &tn)))?;
                rhs.rho[i] = -(right[0] - left[0]) / dx;
                rhs.mom[i] = -(right[1] - left[1]) / dx;
                rhs.energy[i] = -(right[2] - left[2]) / dx;
            }
        }
    }
    Ok(rhs)
}

/// Multiplier fields per characteristic field and flux sign, each covering
/// nodes `-1 ..= p` (length `p + 2`).
///
/// Cell `j` is projected with the frame of its right interface; the split
/// characteristic flux signals feed the two networks field by field.
#[allow(clippy::too_many_arguments)]
fn euler_multiplier_fields(
    source: &MultiplierSource,
    q_pad: &[[f64; 3]],
    f_pad: &[[f64; 3]],
    prim_pad: &[PrimitiveState],
    alphas: &[f64; 3],
    p: usize,
    pad: usize,
) -> Result<([Vec<f64>; 3], [Vec<f64>; 3])> {
    match source {
        MultiplierSource::None => Err(Error::MissingMultipliers),
        MultiplierSource::Fixed(d) => {
            let ext = vec![*d; p + 2];
            Ok((
                [ext.clone(), ext.clone(), ext.clone()],
                [ext.clone(), ext.clone(), ext],
            ))
        }
        MultiplierSource::Model(model) => {
            let k = model.pos.receptive_radius().max(model.neg.receptive_radius());
            // Node-wise characteristic split fluxes on nodes -(k+2) .. p-1+(k+2).
            let lo = pad - (k + 2);
            let hi = pad + p + (k + 2);
            let mut gplus = [vec![], vec![], vec![]];
            let mut gminus = [vec![], vec![], vec![]];
            for j in lo..hi {
                let frame = roe_frame(&prim_pad[j], &prim_pad[j + 1])?;
                let v = frame.project(&q_pad[j]);
                let g = frame.project(&f_pad[j]);
                for kf in 0..3 {
                    gplus[kf].push(0.5 * (g[kf] + alphas[kf] * v[kf]));
                    gminus[kf].push(0.5 * (g[kf] - alphas[kf] * v[kf]));
                }
            }
            let run = |net: &net::ConvNet, signal: &[f64]| -> Result<Vec<f64>> {
                let (d1, d2) = net::features(signal);
                let delta = net.forward(&[d1, d2])?;
                debug_assert_eq!(delta.len(), p + 2);
                Ok(delta)
            };
            Ok((
                [
                    run(&model.pos, &gplus[0])?,
                    run(&model.pos, &gplus[1])?,
                    run(&model.pos, &gplus[2])?,
                ],
                [
                    run(&model.neg, &gminus[0])?,
                    run(&model.neg, &gminus[1])?,
                    run(&model.neg, &gminus[2])?,
                ],
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn energy_reference_values() {
        let s = PrimitiveState::new(1.0, 0.0, 1.0);
        assert!((s.to_conserved()[2] - 2.5).abs() < 1e-15);

        let lax = PrimitiveState::new(0.445, 0.698, 3.528);
        let e = 3.528 / 0.4 + 0.5 * 0.445 * 0.698 * 0.698;
        assert!((lax.to_conserved()[2] - e).abs() < 1e-14);
    }

    #[test]
    fn primitive_roundtrip() {
        let states = vec![
            PrimitiveState::new(1.0, 0.0, 1.0),
            PrimitiveState::new(0.125, 0.0, 0.1),
            PrimitiveState::new(0.445, 0.698, 3.528),
        ];
        let field = conserved_from_primitive(&states);
        let back = primitive_from_conserved(&field, 0).unwrap();
        for (a, b) in states.iter().zip(&back) {
            assert!((a.rho - b.rho).abs() < 1e-14 * a.rho);
            assert!((a.u - b.u).abs() < 1e-14 * (a.u.abs() + 1.0));
            assert!((a.p - b.p).abs() < 1e-14 * a.p);
        }
    }

    #[test]
    fn nonphysical_states_are_reported_with_location() {
        let mut field = conserved_from_primitive(&[
            PrimitiveState::new(1.0, 0.0, 1.0),
            PrimitiveState::new(1.0, 0.0, 1.0),
        ]);
        field.energy[1] = 0.0; // negative pressure
        match primitive_from_conserved(&field, 7) {
            Err(Error::NonPhysical { step, index, what, .. }) => {
                assert_eq!(step, 7);
                assert_eq!(index, 1);
                assert_eq!(what, "pressure");
            }
            other => panic!("expected NonPhysical, got {other:?}"),
        }
    }

    #[test]
    fn roe_frame_of_identical_states_is_local() {
        let s = PrimitiveState::new(0.7, 0.3, 1.9);
        let f = roe_frame(&s, &s).unwrap();
        assert!((f.u - s.u).abs() < 1e-14);
        assert!((f.c - s.sound_speed()).abs() < 1e-14);
        let e = s.p / (GAMMA - 1.0) + 0.5 * s.rho * s.u * s.u;
        assert!((f.h - (e + s.p) / s.rho).abs() < 1e-13);
    }

    #[test]
    fn sod_frame_symmetric_velocity() {
        let f = roe_frame(
            &PrimitiveState::new(1.0, 0.0, 1.0),
            &PrimitiveState::new(0.125, 0.0, 0.1),
        )
        .unwrap();
        assert_eq!(f.u, 0.0);
    }

    #[test]
    fn left_right_inverse_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let l = PrimitiveState::new(
                rng.gen_range(0.05..5.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.05..5.0),
            );
            let r = PrimitiveState::new(
                rng.gen_range(0.05..5.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.05..5.0),
            );
            let f = roe_frame(&l, &r).unwrap();
            // L R = I with an independent matrix product.
            let (lm, rm) = (f.left_matrix(), f.right_matrix());
            for a in 0..3 {
                for b in 0..3 {
                    let mut acc = 0.0;
                    for t in 0..3 {
                        acc += lm[a][t] * rm[t][b];
                    }
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!(
                        (acc - expect).abs() < 1e-12,
                        "L.R[{a}][{b}] = {acc}"
                    );
                }
            }
        }
    }

    #[test]
    fn frame_diagonalizes_roe_jacobian() {
        // A(q) r_k = lambda_k r_k for the Jacobian evaluated at the Roe state.
        let l = PrimitiveState::new(1.0, 0.2, 1.0);
        let r = PrimitiveState::new(0.5, -0.4, 0.3);
        let f = roe_frame(&l, &r).unwrap();
        let (u, h) = (f.u, f.h);
        let g = GAMMA;
        let a = [
            [0.0, 1.0, 0.0],
            [
                0.5 * (g - 3.0) * u * u,
                (3.0 - g) * u,
                g - 1.0,
            ],
            [
                0.5 * (g - 1.0) * u * u * u - u * h,
                h - (g - 1.0) * u * u,
                g * u,
            ],
        ];
        let lambda = f.eigenvalues();
        let rm = f.right_matrix();
        for k in 0..3 {
            let rk = [rm[0][k], rm[1][k], rm[2][k]];
            for row in 0..3 {
                let av: f64 = (0..3).map(|t| a[row][t] * rk[t]).sum();
                assert!(
                    (av - lambda[k] * rk[row]).abs() < 1e-12,
                    "field {k}, row {row}"
                );
            }
        }
    }

    #[test]
    fn project_unproject_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = roe_frame(
            &PrimitiveState::new(1.3, 0.4, 2.0),
            &PrimitiveState::new(0.6, -0.1, 0.7),
        )
        .unwrap();
        for _ in 0..50 {
            let q = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let back = f.unproject(&f.project(&q));
            for t in 0..3 {
                assert!((back[t] - q[t]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_projection_stays_constant() {
        let f = roe_frame(
            &PrimitiveState::new(1.0, 0.1, 1.0),
            &PrimitiveState::new(1.0, 0.1, 1.0),
        )
        .unwrap();
        let q = PrimitiveState::new(1.0, 0.1, 1.0).to_conserved();
        let v1 = f.project(&q);
        let v2 = f.project(&q);
        assert_eq!(v1, v2);
    }

    #[test]
    fn acoustic_pulse_splits_into_signed_characteristics() {
        // Small perturbation around a uniform state: the linearized solution
        // decomposes into fields moving at u - c, u, u + c. Check that the
        // characteristic projection of the perturbed flux equals eigenvalue
        // times the projected state perturbation to first order.
        let base = PrimitiveState::new(1.0, 0.0, 1.0);
        let eps = 1e-7;
        let pert = PrimitiveState::new(1.0 + eps, eps, 1.0 + GAMMA * eps);
        let frame = roe_frame(&base, &base).unwrap();
        let q0 = base.to_conserved();
        let q1 = pert.to_conserved();
        let f0 = physical_flux(q0[0], q0[1], q0[2]);
        let f1 = physical_flux(q1[0], q1[1], q1[2]);
        let dv = frame.project(&[q1[0] - q0[0], q1[1] - q0[1], q1[2] - q0[2]]);
        let dg = frame.project(&[f1[0] - f0[0], f1[1] - f0[1], f1[2] - f0[2]]);
        let lambda = frame.eigenvalues();
        for k in 0..3 {
            // The linearization error is quadratic in the pulse amplitude.
            assert!(
                (dg[k] - lambda[k] * dv[k]).abs() < 100.0 * eps * eps,
                "field {k}: dg = {}, lambda dv = {}",
                dg[k],
                lambda[k] * dv[k]
            );
        }
    }

    #[test]
    fn max_signal_reference_values() {
        let sod = [
            PrimitiveState::new(1.0, 0.0, 1.0),
            PrimitiveState::new(0.125, 0.0, 0.1),
        ];
        let expect = (1.4f64).sqrt().max((1.4 * 0.1 / 0.125f64).sqrt());
        assert!((euler_max_signal(&sod) - expect).abs() < 1e-14);
        assert!((euler_max_signal(&sod) - 1.4f64.sqrt()).abs() < 1e-14);

        // Shifting u by a constant shifts the signal by the same amount when
        // the positive-u state dominates.
        let shifted = [
            PrimitiveState::new(1.0, 0.5, 1.0),
            PrimitiveState::new(0.125, 0.5, 0.1),
        ];
        assert!((euler_max_signal(&shifted) - (expect + 0.5)).abs() < 1e-14);

        let lax = EulerProblem::lax();
        let states = [lax.left, lax.right];
        let expect = (lax.left.sound_speed() + 0.698).max(lax.right.sound_speed());
        assert!((euler_max_signal(&states) - expect).abs() < 1e-14);
    }

    #[test]
    fn constant_state_has_zero_rhs() {
        let field = conserved_from_primitive(&vec![PrimitiveState::new(0.8, 0.25, 1.2); 32]);
        for w in [Weighting::Js, Weighting::Z] {
            let rhs = euler_rhs(
                &field,
                0.01,
                &SchemeConfig::new(w),
                &MultiplierSource::None,
                0,
            )
            .unwrap();
            for i in 0..field.len() {
                assert_eq!(rhs.rho[i], 0.0, "rho at {i}");
                assert_eq!(rhs.mom[i], 0.0, "mom at {i}");
                assert_eq!(rhs.energy[i], 0.0, "energy at {i}");
            }
        }
    }

    #[test]
    fn ds_with_unit_multiplier_matches_z_bitwise_for_euler() {
        let prob = EulerProblem::sod();
        let field = prob.initial_field(65, 1.0 / 64.0);
        let z = euler_rhs(
            &field,
            1.0 / 64.0,
            &SchemeConfig::new(Weighting::Z),
            &MultiplierSource::None,
            0,
        )
        .unwrap();
        let ds = euler_rhs(
            &field,
            1.0 / 64.0,
            &SchemeConfig::new(Weighting::Ds),
            &MultiplierSource::Fixed(0.9),
            0,
        )
        .unwrap();
        for i in 0..field.len() {
            assert_eq!(z.rho[i].to_bits(), ds.rho[i].to_bits());
            assert_eq!(z.mom[i].to_bits(), ds.mom[i].to_bits());
            assert_eq!(z.energy[i].to_bits(), ds.energy[i].to_bits());
        }
    }
}
