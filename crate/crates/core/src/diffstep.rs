//! Tape-built replica of one WENO-DS time step.
//!
//! Training differentiates a per-step loss with respect to the network
//! parameters through a full TVD-RK3 step, including every reconstruction
//! and both network forwards inside each stage. The step that produced
//! `u^{n+1}` is the only one on the tape: `u^n` enters as a constant, and
//! the splitting speeds (and, for Euler, the Roe frames) are recomputed per
//! stage from the current values but enter the tape as constants as well.

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::euler::{EulerField, PrimitiveState, RoeFrame, GAMMA};
use crate::flux::ScalarFlux;
use crate::kernel::{SchemeConfig, IDEAL_WEIGHTS};
use crate::mesh::{ghost_indices, BoundaryPolicy};
use crate::net::ConvNet;

/// Network parameters re-seeded onto the current tape.
pub struct NetVars {
    pub weights: Vec<Var>,
    pub biases: Vec<Var>,
}

pub fn leaf_net(tape: &mut Tape, net: &ConvNet) -> NetVars {
    NetVars {
        weights: net.weights.iter().map(|w| tape.leaf(w)).collect(),
        biases: net.biases.iter().map(|b| tape.leaf(b)).collect(),
    }
}

/// Forward pass of the multiplier network on the tape.
///
/// `channels` are equal-length feature arrays; the output is the single
/// final channel (length shrinks by twice the receptive radius).
pub fn net_forward_tape(
    tape: &mut Tape,
    net: &ConvNet,
    vars: &NetVars,
    channels: &[Var],
) -> Var {
    let mut act = tape.concat(channels);
    for (l, spec) in net.layers.iter().enumerate() {
        let conv = tape.conv1d(
            act,
            vars.weights[l],
            vars.biases[l],
            spec.in_channels,
            spec.out_channels,
            spec.kernel_size,
        );
        act = match spec.activation {
            crate::net::Activation::Elu => tape.elu(conv),
            crate::net::Activation::Sigmoid => tape.sigmoid(conv),
        };
    }
    act
}

/// View of a ghost-padded array variable indexed by node number.
#[derive(Clone, Copy)]
struct PadView {
    var: Var,
    pad: usize,
}

impl PadView {
    /// Gather `len` consecutive nodes starting at node `from` (may be
    /// negative into the ghost region).
    fn nodes(&self, tape: &mut Tape, from: isize, len: usize) -> Var {
        let idx: Vec<usize> = (0..len)
            .map(|t| (from + t as isize + self.pad as isize) as usize)
            .collect();
        tape.gather(self.var, &idx)
    }
}

fn pad_var(tape: &mut Tape, v: Var, n: usize, boundary: BoundaryPolicy, pad: usize) -> PadView {
    let idx = ghost_indices(n, boundary, pad);
    PadView {
        var: tape.gather(v, &idx),
        pad,
    }
}

/// First/second central differences of a padded signal over the node range
/// `from .. from + len`.
fn features_tape(tape: &mut Tape, sig: PadView, from: isize, len: usize) -> (Var, Var) {
    let next = sig.nodes(tape, from + 1, len);
    let prev = sig.nodes(tape, from - 1, len);
    let mid = sig.nodes(tape, from, len);
    let d1 = tape.sub(next, prev);
    let two_mid = tape.mul_scalar(mid, 2.0);
    let d2a = tape.sub(next, two_mid);
    let d2 = tape.add(d2a, prev);
    (d1, d2)
}

/// Multiplier field over nodes `-1 ..= n` from a padded split-flux signal.
fn multiplier_field_tape(
    tape: &mut Tape,
    net: &ConvNet,
    vars: &NetVars,
    sig: PadView,
    n: usize,
) -> Var {
    let k = net.receptive_radius();
    let len = n + 2 + 2 * k;
    let (d1, d2) = features_tape(tape, sig, -(k as isize) - 1, len);
    net_forward_tape(tape, net, vars, &[d1, d2])
}

/// The five window slot arrays of an interface set.
///
/// `offsets[s]` is the node offset of window slot `s` relative to the node
/// index `i` the array runs over.
fn window_slots(tape: &mut Tape, sig: PadView, offsets: [isize; 5], n: usize) -> [Var; 5] {
    std::array::from_fn(|s| sig.nodes(tape, offsets[s], n))
}

/// Vectorized smoothness indicators of window slot arrays.
fn betas_tape(tape: &mut Tape, w: &[Var; 5]) -> [Var; 3] {
    let c1312 = 13.0 / 12.0;
    // beta0
    let a = {
        let t = tape.mul_scalar(w[1], 2.0);
        let s = tape.sub(w[0], t);
        tape.add(s, w[2])
    };
    let b = {
        let t = tape.mul_scalar(w[1], 4.0);
        let s = tape.sub(w[0], t);
        let u = tape.mul_scalar(w[2], 3.0);
        tape.add(s, u)
    };
    let a2 = tape.square(a);
    let b2 = tape.square(b);
    let a2s = tape.mul_scalar(a2, c1312);
    let b2s = tape.mul_scalar(b2, 0.25);
    let beta0 = tape.add(a2s, b2s);
    // beta1
    let a = {
        let t = tape.mul_scalar(w[2], 2.0);
        let s = tape.sub(w[1], t);
        tape.add(s, w[3])
    };
    let b = tape.sub(w[3], w[1]);
    let a2 = tape.square(a);
    let b2 = tape.square(b);
    let a2s = tape.mul_scalar(a2, c1312);
    let b2s = tape.mul_scalar(b2, 0.25);
    let beta1 = tape.add(a2s, b2s);
    // beta2
    let a = {
        let t = tape.mul_scalar(w[3], 2.0);
        let s = tape.sub(w[2], t);
        tape.add(s, w[4])
    };
    let b = {
        let t = tape.mul_scalar(w[2], 3.0);
        let s = tape.mul_scalar(w[3], 4.0);
        let d = tape.sub(t, s);
        tape.add(d, w[4])
    };
    let a2 = tape.square(a);
    let b2 = tape.square(b);
    let a2s = tape.mul_scalar(a2, c1312);
    let b2s = tape.mul_scalar(b2, 0.25);
    let beta2 = tape.add(a2s, b2s);
    [beta0, beta1, beta2]
}

/// Z-form weights on (optionally multiplier-scaled) indicators, followed by
/// the convex combination of the candidate fluxes.
fn reconstruct_tape(
    tape: &mut Tape,
    w: &[Var; 5],
    delta: Option<&[Var; 3]>,
    cfg: &SchemeConfig,
) -> Var {
    let beta_raw = betas_tape(tape, w);
    let beta: [Var; 3] = match delta {
        Some(d) => std::array::from_fn(|m| {
            let mult = tape.add_scalar(d[m], cfg.c);
            tape.mul(beta_raw[m], mult)
        }),
        None => beta_raw,
    };
    let diff = tape.sub(beta[0], beta[2]);
    let tau = tape.abs(diff);
    let alpha: [Var; 3] = std::array::from_fn(|m| {
        let den = tape.add_scalar(beta[m], cfg.epsilon);
        let r = tape.div(tau, den);
        let r2 = tape.square(r);
        let one_plus = tape.add_scalar(r2, 1.0);
        tape.mul_scalar(one_plus, IDEAL_WEIGHTS[m])
    });
    let s01 = tape.add(alpha[0], alpha[1]);
    let asum = tape.add(s01, alpha[2]);

    let cand0 = {
        let a = tape.mul_scalar(w[0], 2.0);
        let b = tape.mul_scalar(w[1], 7.0);
        let c = tape.mul_scalar(w[2], 11.0);
        let s = tape.sub(a, b);
        let t = tape.add(s, c);
        tape.div_scalar(t, 6.0)
    };
    let cand1 = {
        let a = tape.mul_scalar(w[2], 5.0);
        let b = tape.mul_scalar(w[3], 2.0);
        let s = tape.sub(a, w[1]);
        let t = tape.add(s, b);
        tape.div_scalar(t, 6.0)
    };
    let cand2 = {
        let a = tape.mul_scalar(w[2], 2.0);
        let b = tape.mul_scalar(w[3], 5.0);
        let s = tape.add(a, b);
        let t = tape.sub(s, w[4]);
        tape.div_scalar(t, 6.0)
    };

    let mut acc = {
        let om = tape.div(alpha[0], asum);
        tape.mul(om, cand0)
    };
    for (al, ca) in [(alpha[1], cand1), (alpha[2], cand2)] {
        let om = tape.div(al, asum);
        let term = tape.mul(om, ca);
        acc = tape.add(acc, term);
    }
    acc
}

/// Per-node DS multiplier triples for the two branches.
struct DeltaTriples {
    pos: [Var; 3],
    neg: [Var; 3],
}

fn delta_triples(tape: &mut Tape, dpos: Var, dneg: Var, n: usize) -> DeltaTriples {
    let s0: Vec<usize> = (0..n).collect();
    let s1: Vec<usize> = (1..n + 1).collect();
    let s2: Vec<usize> = (2..n + 2).collect();
    DeltaTriples {
        pos: [
            tape.gather(dpos, &s0),
            tape.gather(dpos, &s1),
            tape.gather(dpos, &s2),
        ],
        // Mirrored orientation: (delta_{i+1}, delta_i, delta_{i-1}).
        neg: [
            tape.gather(dneg, &s2),
            tape.gather(dneg, &s1),
            tape.gather(dneg, &s0),
        ],
    }
}

/// One DS right-hand side evaluation on the tape (scalar problem).
#[allow(clippy::too_many_arguments)]
fn scalar_ds_rhs_tape(
    tape: &mut Tape,
    u: Var,
    n: usize,
    boundary: BoundaryPolicy,
    dx: f64,
    flux: &ScalarFlux,
    cfg: &SchemeConfig,
    pos: (&ConvNet, &NetVars),
    neg: (&ConvNet, &NetVars),
) -> Result<Var> {
    // Pointwise flux.
    let f = match flux {
        ScalarFlux::Transport => u,
        ScalarFlux::Burgers => {
            let sq = tape.square(u);
            tape.mul_scalar(sq, 0.5)
        }
        ScalarFlux::BuckleyLeverett { a } => {
            let u2 = tape.square(u);
            let neg_u = tape.neg(u);
            let om = tape.add_scalar(neg_u, 1.0);
            let om2 = tape.square(om);
            let aom2 = tape.mul_scalar(om2, *a);
            let den = tape.add(u2, aom2);
            tape.div(u2, den)
        }
    };

    // Splitting speed from the current values, detached.
    let alpha = flux.max_wave_speed(tape.value(u));
    if !alpha.is_finite() {
        return Err(Error::InvalidFlux(format!("splitting speed {alpha} not finite")));
    }
    let au = tape.mul_scalar(u, alpha);
    let fp_raw = tape.add(f, au);
    let fp = tape.mul_scalar(fp_raw, 0.5);
    let fm_raw = tape.sub(f, au);
    let fm = tape.mul_scalar(fm_raw, 0.5);

    let k = pos.0.receptive_radius().max(neg.0.receptive_radius());
    let pad = (k + 2).max(3);
    let fp_pad = pad_var(tape, fp, n, boundary, pad);
    let fm_pad = pad_var(tape, fm, n, boundary, pad);

    let dpos = multiplier_field_tape(tape, pos.0, pos.1, fp_pad, n);
    let dneg = multiplier_field_tape(tape, neg.0, neg.1, fm_pad, n);
    let triples = delta_triples(tape, dpos, dneg, n);

    // Interface sets: "n" at i+1/2 and "p" at i-1/2, both with node i's
    // multiplier triples.
    let wpn = window_slots(tape, fp_pad, [-2, -1, 0, 1, 2], n);
    let wpp = window_slots(tape, fp_pad, [-3, -2, -1, 0, 1], n);
    let wnn = window_slots(tape, fm_pad, [3, 2, 1, 0, -1], n);
    let wnp = window_slots(tape, fm_pad, [2, 1, 0, -1, -2], n);

    let pos_n = reconstruct_tape(tape, &wpn, Some(&triples.pos), cfg);
    let pos_p = reconstruct_tape(tape, &wpp, Some(&triples.pos), cfg);
    let neg_n = reconstruct_tape(tape, &wnn, Some(&triples.neg), cfg);
    let neg_p = reconstruct_tape(tape, &wnp, Some(&triples.neg), cfg);

    let right = tape.add(pos_n, neg_n);
    let left = tape.add(pos_p, neg_p);
    let d = tape.sub(right, left);
    let scaled = tape.div_scalar(d, dx);
    Ok(tape.neg(scaled))
}

/// One full TVD-RK3 step of the scalar DS scheme on the tape; returns the
/// `u^{n+1}` array variable.
#[allow(clippy::too_many_arguments)]
pub fn scalar_ds_step_tape(
    tape: &mut Tape,
    u_n: &[f64],
    boundary: BoundaryPolicy,
    dx: f64,
    flux: &ScalarFlux,
    cfg: &SchemeConfig,
    pos: (&ConvNet, &NetVars),
    neg: (&ConvNet, &NetVars),
    dt: f64,
) -> Result<Var> {
    let n = u_n.len();
    let u0 = tape.leaf(u_n);
    let l0 = scalar_ds_rhs_tape(tape, u0, n, boundary, dx, flux, cfg, pos, neg)?;
    let dl0 = tape.mul_scalar(l0, dt);
    let u1 = tape.add(u0, dl0);

    let l1 = scalar_ds_rhs_tape(tape, u1, n, boundary, dx, flux, cfg, pos, neg)?;
    let a = tape.mul_scalar(u0, 0.75);
    let b = tape.mul_scalar(u1, 0.25);
    let ab = tape.add(a, b);
    let c = tape.mul_scalar(l1, 0.25 * dt);
    let u2 = tape.add(ab, c);

    let l2 = scalar_ds_rhs_tape(tape, u2, n, boundary, dx, flux, cfg, pos, neg)?;
    let a = tape.div_scalar(u0, 3.0);
    let b = tape.mul_scalar(u2, 2.0 / 3.0);
    let ab = tape.add(a, b);
    let c = tape.mul_scalar(l2, 2.0 / 3.0 * dt);
    Ok(tape.add(ab, c))
}

/// Mean-square loss `(1/n) sum (u - ref)^2` on the tape.
pub fn loss_mse_tape(tape: &mut Tape, u: Var, reference: &[f64]) -> Var {
    let r = tape.leaf(reference);
    let d = tape.sub(u, r);
    let sq = tape.square(d);
    let s = tape.sum(sq);
    tape.div_scalar(s, reference.len() as f64)
}

/// Overflow loss `sum |min(u, lo) - lo| + |max(u, hi) - hi|` on the tape.
pub fn loss_overflow_tape(tape: &mut Tape, u: Var, lo: f64, hi: f64) -> Var {
    let lo_v = tape.scalar(lo);
    let hi_v = tape.scalar(hi);
    let mn = tape.min(u, lo_v);
    let under = tape.add_scalar(mn, -lo);
    let under_abs = tape.abs(under);
    let mx = tape.max(u, hi_v);
    let over = tape.add_scalar(mx, -hi);
    let over_abs = tape.abs(over);
    let s1 = tape.sum(under_abs);
    let s2 = tape.sum(over_abs);
    tape.add(s1, s2)
}

// ---------------------------------------------------------------------------
// Euler system
// ---------------------------------------------------------------------------

/// Per-stage detached geometry: Roe frames and splitting speeds computed
/// from the current stage values.
struct StageFrames {
    /// Interface frame left-matrix rows as node arrays, `l[k][c][i]` for the
    /// frame of interface `i + offset`.
    alphas: [f64; 3],
    prim_pad: Vec<PrimitiveState>,
    pad: usize,
}

impl StageFrames {
    fn build(field: &EulerField, boundary: BoundaryPolicy, pad: usize) -> Result<Self> {
        let prim = crate::euler::primitive_from_conserved(field, 0)?;
        let mut alphas = [0.0f64; 3];
        for s in &prim {
            let c = s.sound_speed();
            alphas[0] = alphas[0].max((s.u - c).abs());
            alphas[1] = alphas[1].max(s.u.abs());
            alphas[2] = alphas[2].max((s.u + c).abs());
        }
        let idx = ghost_indices(field.len(), boundary, pad);
        let prim_pad: Vec<PrimitiveState> = idx.iter().map(|&j| prim[j]).collect();
        Ok(StageFrames {
            alphas,
            prim_pad,
            pad,
        })
    }

    /// Frame of the interface between padded nodes `j` and `j+1` (node
    /// coordinates; may be negative).
    fn frame_at(&self, node: isize) -> Result<RoeFrame> {
        let j = (node + self.pad as isize) as usize;
        crate::euler::roe_frame(&self.prim_pad[j], &self.prim_pad[j + 1])
    }
}

/// Conserved components and their physical fluxes on the tape.
struct TapeEulerState {
    q: [Var; 3],
    f: [Var; 3],
}

fn euler_flux_tape(tape: &mut Tape, q: &[Var; 3]) -> TapeEulerState {
    let (rho, mom, energy) = (q[0], q[1], q[2]);
    let u = tape.div(mom, rho);
    let msq = tape.square(mom);
    let ke_raw = tape.div(msq, rho);
    let ke = tape.mul_scalar(ke_raw, 0.5);
    let inner = tape.sub(energy, ke);
    let p = tape.mul_scalar(inner, GAMMA - 1.0);
    let mu = tape.mul(mom, u);
    let f1 = tape.add(mu, p);
    let ep = tape.add(energy, p);
    let f2 = tape.mul(u, ep);
    TapeEulerState {
        q: [rho, mom, energy],
        f: [mom, f1, f2],
    }
}

/// Project padded component arrays with per-node constant matrix rows.
///
/// `rows[c]` holds the matrix entries for component `c`, one per node of the
/// gathered range.
fn project_tape(tape: &mut Tape, comps: &[Var; 3], rows: &[Var; 3]) -> Var {
    let m0 = tape.mul(rows[0], comps[0]);
    let m1 = tape.mul(rows[1], comps[1]);
    let m2 = tape.mul(rows[2], comps[2]);
    let s = tape.add(m0, m1);
    tape.add(s, m2)
}

#[allow(clippy::too_many_arguments)]
fn euler_ds_rhs_tape(
    tape: &mut Tape,
    state: &TapeEulerState,
    values: &EulerField,
    n: usize,
    dx: f64,
    cfg: &SchemeConfig,
    pos: (&ConvNet, &NetVars),
    neg: (&ConvNet, &NetVars),
) -> Result<[Var; 3]> {
    let boundary = BoundaryPolicy::ZeroGradient;
    let k = pos.0.receptive_radius().max(neg.0.receptive_radius());
    let pad = k + 3;
    let frames = StageFrames::build(values, boundary, pad)?;

    let q_pad: [PadView; 3] = std::array::from_fn(|c| pad_var(tape, state.q[c], n, boundary, pad));
    let f_pad: [PadView; 3] = std::array::from_fn(|c| pad_var(tape, state.f[c], n, boundary, pad));

    // --- Multiplier fields from node-wise projected split characteristic
    // fluxes (frame of each node's right interface).
    let lo = -(k as isize) - 2;
    let sig_len = n + 2 * (k + 2);
    let mut dpos_fields = Vec::with_capacity(3);
    let mut dneg_fields = Vec::with_capacity(3);
    {
        let mut lrows = vec![[0.0f64; 3]; sig_len];
        let mut node_frames = Vec::with_capacity(sig_len);
        for t in 0..sig_len {
            node_frames.push(frames.frame_at(lo + t as isize)?);
        }
        let qs: [Var; 3] = std::array::from_fn(|c| q_pad[c].nodes(tape, lo, sig_len));
        let fs: [Var; 3] = std::array::from_fn(|c| f_pad[c].nodes(tape, lo, sig_len));
        for kf in 0..3 {
            for (t, fr) in node_frames.iter().enumerate() {
                lrows[t] = fr.left_matrix()[kf];
            }
            let rows: [Var; 3] = std::array::from_fn(|c| {
                let col: Vec<f64> = lrows.iter().map(|r| r[c]).collect();
                tape.leaf(&col)
            });
            let v = project_tape(tape, &qs, &rows);
            let g = project_tape(tape, &fs, &rows);
            let av = tape.mul_scalar(v, frames.alphas[kf]);
            let gp_raw = tape.add(g, av);
            let gp = tape.mul_scalar(gp_raw, 0.5);
            let gm_raw = tape.sub(g, av);
            let gm = tape.mul_scalar(gm_raw, 0.5);

            let run = |tape: &mut Tape, net: &ConvNet, vars: &NetVars, sig: Var| {
                let l_feat = sig_len - 2;
                let next: Vec<usize> = (2..sig_len).collect();
                let prev: Vec<usize> = (0..sig_len - 2).collect();
                let mid: Vec<usize> = (1..sig_len - 1).collect();
                let xn = tape.gather(sig, &next);
                let xp = tape.gather(sig, &prev);
                let xm = tape.gather(sig, &mid);
                let d1 = tape.sub(xn, xp);
                let two = tape.mul_scalar(xm, 2.0);
                let d2a = tape.sub(xn, two);
                let d2 = tape.add(d2a, xp);
                debug_assert_eq!(l_feat, n + 2 + 2 * k);
                net_forward_tape(tape, net, vars, &[d1, d2])
            };
            dpos_fields.push(run(tape, pos.0, pos.1, gp));
            dneg_fields.push(run(tape, neg.0, neg.1, gm));
        }
    }

    // --- Interface reconstructions for the two per-node interface sets:
    // node i's right interface i+1/2 (set 0) and left interface i-1/2
    // (set 1), both with node i's multiplier triples.
    let mut fhat_sets: Vec<[Var; 3]> = Vec::with_capacity(2);
    for iface_node in [0isize, -1] {
        let mut frames_set = Vec::with_capacity(n);
        for i in 0..n {
            frames_set.push(frames.frame_at(i as isize + iface_node)?);
        }
        // Matrix rows of all interfaces in the set as constant node arrays.
        let lrows_of = |tape: &mut Tape, row: usize| -> [Var; 3] {
            std::array::from_fn(|c| {
                let col: Vec<f64> = frames_set.iter().map(|fr| fr.left_matrix()[row][c]).collect();
                tape.leaf(&col)
            })
        };
        let rrows_of = |tape: &mut Tape, row: usize| -> [Var; 3] {
            std::array::from_fn(|c| {
                let col: Vec<f64> =
                    frames_set.iter().map(|fr| fr.right_matrix()[row][c]).collect();
                tape.leaf(&col)
            })
        };

        let mut ghat_fields = Vec::with_capacity(3);
        for kf in 0..3 {
            let lrows = lrows_of(tape, kf);
            let mut split_at = |tape: &mut Tape, off: isize, positive: bool| -> Var {
                let qs: [Var; 3] = std::array::from_fn(|c| q_pad[c].nodes(tape, off, n));
                let fs: [Var; 3] = std::array::from_fn(|c| f_pad[c].nodes(tape, off, n));
                let v = project_tape(tape, &qs, &lrows);
                let g = project_tape(tape, &fs, &lrows);
                let av = tape.mul_scalar(v, frames.alphas[kf]);
                let raw = if positive {
                    tape.add(g, av)
                } else {
                    tape.sub(g, av)
                };
                tape.mul_scalar(raw, 0.5)
            };
            // Positive branch slots at interface-2 .. interface+2; negative
            // branch reflected: interface+3 .. interface-1.
            let wp: [Var; 5] =
                std::array::from_fn(|s| split_at(tape, iface_node + s as isize - 2, true));
            let wn: [Var; 5] =
                std::array::from_fn(|s| split_at(tape, iface_node + 3 - s as isize, false));

            let triples = delta_triples(tape, dpos_fields[kf], dneg_fields[kf], n);
            let pos_rec = reconstruct_tape(tape, &wp, Some(&triples.pos), cfg);
            let neg_rec = reconstruct_tape(tape, &wn, Some(&triples.neg), cfg);
            ghat_fields.push(tape.add(pos_rec, neg_rec));
        }

        let g: [Var; 3] = [ghat_fields[0], ghat_fields[1], ghat_fields[2]];
        let fhat: [Var; 3] = std::array::from_fn(|row| {
            let rrows = rrows_of(tape, row);
            project_tape(tape, &g, &rrows)
        });
        fhat_sets.push(fhat);
    }

    Ok(std::array::from_fn(|c| {
        let d = tape.sub(fhat_sets[0][c], fhat_sets[1][c]);
        let s = tape.div_scalar(d, dx);
        tape.neg(s)
    }))
}

/// One full TVD-RK3 step of the Euler DS scheme on the tape; returns the
/// conserved component arrays of `u^{n+1}`.
#[allow(clippy::too_many_arguments)]
pub fn euler_ds_step_tape(
    tape: &mut Tape,
    field_n: &EulerField,
    dx: f64,
    cfg: &SchemeConfig,
    pos: (&ConvNet, &NetVars),
    neg: (&ConvNet, &NetVars),
    dt: f64,
) -> Result<[Var; 3]> {
    let n = field_n.len();
    let q0: [Var; 3] = [
        tape.leaf(&field_n.rho),
        tape.leaf(&field_n.mom),
        tape.leaf(&field_n.energy),
    ];
    let stage = |tape: &mut Tape, q: &[Var; 3]| -> Result<[Var; 3]> {
        let values = EulerField {
            rho: tape.value(q[0]).to_vec(),
            mom: tape.value(q[1]).to_vec(),
            energy: tape.value(q[2]).to_vec(),
        };
        let st = euler_flux_tape(tape, q);
        euler_ds_rhs_tape(tape, &st, &values, n, dx, cfg, pos, neg)
    };

    let l0 = stage(tape, &q0)?;
    let u1: [Var; 3] = std::array::from_fn(|c| {
        let d = tape.mul_scalar(l0[c], dt);
        tape.add(q0[c], d)
    });
    let l1 = stage(tape, &u1)?;
    let u2: [Var; 3] = std::array::from_fn(|c| {
        let a = tape.mul_scalar(q0[c], 0.75);
        let b = tape.mul_scalar(u1[c], 0.25);
        let ab = tape.add(a, b);
        let d = tape.mul_scalar(l1[c], 0.25 * dt);
        tape.add(ab, d)
    });
    let l2 = stage(tape, &u2)?;
    Ok(std::array::from_fn(|c| {
        let a = tape.div_scalar(q0[c], 3.0);
        let b = tape.mul_scalar(u2[c], 2.0 / 3.0);
        let ab = tape.add(a, b);
        let d = tape.mul_scalar(l2[c], 2.0 / 3.0 * dt);
        tape.add(ab, d)
    }))
}

/// Primitive views (rho, u, p) of conserved component variables, for the
/// Euler loss.
pub fn primitives_tape(tape: &mut Tape, q: &[Var; 3]) -> [Var; 3] {
    let rho = q[0];
    let u = tape.div(q[1], rho);
    let msq = tape.square(q[1]);
    let ke_raw = tape.div(msq, rho);
    let ke = tape.mul_scalar(ke_raw, 0.5);
    let inner = tape.sub(q[2], ke);
    let p = tape.mul_scalar(inner, GAMMA - 1.0);
    [rho, u, p]
}
