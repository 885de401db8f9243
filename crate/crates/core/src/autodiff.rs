//! Reverse-mode automatic differentiation over array-valued primitives.
//!
//! The tape records one node per array operation (elementwise arithmetic,
//! the activations, reductions, gathers for stencil shifts and a 1-D
//! convolution), evaluates forward eagerly and accumulates adjoints in one
//! reverse sweep. A fresh tape is built per time step and dropped after the
//! optimizer update, so peak memory is one step's graph.
//!
//! Subgradient conventions at kinks: `|.|` has derivative 0 at the origin;
//! ties of `min`/`max` send the gradient to the first argument.

use crate::error::{Error, Result};

/// Handle to a tape node. Carries the tape id so cross-tape use is caught.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var {
    tape: u64,
    idx: u32,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    AddScalar(u32, f64),
    MulScalar(u32, f64),
    DivScalar(u32, f64),
    Square(u32),
    Abs(u32),
    Exp(u32),
    Elu(u32),
    Sigmoid(u32),
    Min(u32, u32),
    Max(u32, u32),
    Sum(u32),
    Gather(u32, Box<[u32]>),
    Concat(Box<[u32]>),
    Conv1d {
        input: u32,
        weight: u32,
        bias: u32,
        c_in: u32,
        c_out: u32,
        k: u32,
    },
}

#[derive(Debug, Clone, Copy)]
struct Span {
    off: u32,
    len: u32,
}

static TAPE_COUNTER: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(1);

/// Append-only record of the forward computation.
pub struct Tape {
    id: u64,
    ops: Vec<Op>,
    spans: Vec<Span>,
    vals: Vec<f64>,
    adj: Vec<f64>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            id: TAPE_COUNTER.fetch_add(1, std::sync::atomic::Ordering::Relaxed),
            ops: Vec::new(),
            spans: Vec::new(),
            vals: Vec::new(),
            adj: Vec::new(),
        }
    }

    /// Drop all nodes but keep allocations for the next step.
    pub fn clear(&mut self) {
        self.id = TAPE_COUNTER.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        self.ops.clear();
        self.spans.clear();
        self.vals.clear();
        self.adj.clear();
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn check(&self, v: Var) -> u32 {
        assert_eq!(
            v.tape, self.id,
            "variable from another tape used in this tape's operation"
        );
        v.idx
    }

    fn push(&mut self, op: Op, len: usize) -> (Var, usize) {
        let off = self.vals.len();
        self.vals.resize(off + len, 0.0);
        self.spans.push(Span {
            off: off as u32,
            len: len as u32,
        });
        self.ops.push(op);
        let idx = (self.ops.len() - 1) as u32;
        (
            Var {
                tape: self.id,
                idx,
            },
            off,
        )
    }

    fn span(&self, idx: u32) -> (usize, usize) {
        let s = self.spans[idx as usize];
        (s.off as usize, s.len as usize)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let idx = self.check(v);
        let (off, len) = self.span(idx);
        &self.vals[off..off + len]
    }

    pub fn value_scalar(&self, v: Var) -> f64 {
        let val = self.value(v);
        assert_eq!(val.len(), 1, "expected a scalar node");
        val[0]
    }

    /// Adjoint of a node after [`Tape::backward`].
    pub fn adjoint(&self, v: Var) -> &[f64] {
        let idx = self.check(v);
        let (off, len) = self.span(idx);
        &self.adj[off..off + len]
    }

    /// New leaf node holding the given values. Leaves are the only nodes a
    /// caller seeds; parameters and detached constants both enter this way.
    pub fn leaf(&mut self, values: &[f64]) -> Var {
        assert!(
            values.iter().all(|v| v.is_finite()),
            "leaf values must be finite at record time"
        );
        let (var, off) = self.push(Op::Leaf, values.len());
        self.vals[off..off + values.len()].copy_from_slice(values);
        var
    }

    pub fn scalar(&mut self, v: f64) -> Var {
        self.leaf(&[v])
    }

    fn binary(&mut self, a: Var, b: Var, op: fn(u32, u32) -> Op, f: fn(f64, f64) -> f64) -> Var {
        let ia = self.check(a);
        let ib = self.check(b);
        let (oa, la) = self.span(ia);
        let (ob, lb) = self.span(ib);
        let len = broadcast_len(la, lb);
        let (var, off) = self.push(op(ia, ib), len);
        for t in 0..len {
            let av = self.vals[oa + bidx(la, t)];
            let bv = self.vals[ob + bidx(lb, t)];
            self.vals[off + t] = f(av, bv);
        }
        var
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Add, |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Sub, |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Mul, |x, y| x * y)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Div, |x, y| x / y)
    }

    pub fn min(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Min, |x, y| if x <= y { x } else { y })
    }

    pub fn max(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Max, |x, y| if x >= y { x } else { y })
    }

    fn unary(&mut self, a: Var, op: fn(u32) -> Op, f: impl Fn(f64) -> f64) -> Var {
        let ia = self.check(a);
        let (oa, la) = self.span(ia);
        let (var, off) = self.push(op(ia), la);
        for t in 0..la {
            self.vals[off + t] = f(self.vals[oa + t]);
        }
        var
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.unary(a, Op::Neg, |x| -x)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Op::Square, |x| x * x)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.unary(a, Op::Abs, f64::abs)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp, f64::exp)
    }

    pub fn elu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Elu, |x| if x > 0.0 { x } else { x.exp_m1() })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid, |x| 1.0 / (1.0 + (-x).exp()))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let ia = self.check(a);
        let (oa, la) = self.span(ia);
        let (var, off) = self.push(Op::AddScalar(ia, c), la);
        for t in 0..la {
            self.vals[off + t] = self.vals[oa + t] + c;
        }
        var
    }

    pub fn mul_scalar(&mut self, a: Var, c: f64) -> Var {
        let ia = self.check(a);
        let (oa, la) = self.span(ia);
        let (var, off) = self.push(Op::MulScalar(ia, c), la);
        for t in 0..la {
            self.vals[off + t] = self.vals[oa + t] * c;
        }
        var
    }

    pub fn div_scalar(&mut self, a: Var, c: f64) -> Var {
        let ia = self.check(a);
        let (oa, la) = self.span(ia);
        let (var, off) = self.push(Op::DivScalar(ia, c), la);
        for t in 0..la {
            self.vals[off + t] = self.vals[oa + t] / c;
        }
        var
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let ia = self.check(a);
        let (oa, la) = self.span(ia);
        let total: f64 = self.vals[oa..oa + la].iter().sum();
        let (var, off) = self.push(Op::Sum(ia), 1);
        self.vals[off] = total;
        var
    }

    /// `out[j] = a[idx[j]]`; the adjoint scatters back additively.
    pub fn gather(&mut self, a: Var, indices: &[usize]) -> Var {
        let ia = self.check(a);
        let (oa, la) = self.span(ia);
        assert!(
            indices.iter().all(|&j| j < la),
            "gather index out of range"
        );
        let idx: Box<[u32]> = indices.iter().map(|&j| j as u32).collect();
        let (var, off) = self.push(Op::Gather(ia, idx), indices.len());
        for (t, &j) in indices.iter().enumerate() {
            self.vals[off + t] = self.vals[oa + j];
        }
        var
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let idxs: Vec<u32> = parts.iter().map(|&p| self.check(p)).collect();
        let total: usize = idxs.iter().map(|&i| self.span(i).1).sum();
        let (var, off) = self.push(Op::Concat(idxs.clone().into_boxed_slice()), total);
        let mut cursor = off;
        for &i in &idxs {
            let (o, l) = self.span(i);
            for t in 0..l {
                self.vals[cursor + t] = self.vals[o + t];
            }
            cursor += l;
        }
        var
    }

    /// Valid 1-D cross-correlation. `input` is `[c_in][l_in]` flattened,
    /// `weight` is `[c_out][c_in][k]`, `bias` has one entry per output
    /// channel; the result is `[c_out][l_out]` with `l_out = l_in - k + 1`.
    pub fn conv1d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Var,
        c_in: usize,
        c_out: usize,
        k: usize,
    ) -> Var {
        let ii = self.check(input);
        let iw = self.check(weight);
        let ib = self.check(bias);
        let (oi, li) = self.span(ii);
        let (ow, lw) = self.span(iw);
        let (obi, lb) = self.span(ib);
        assert_eq!(li % c_in, 0, "conv input length not divisible by channels");
        assert_eq!(lw, c_out * c_in * k, "conv weight tensor shape mismatch");
        assert_eq!(lb, c_out, "conv bias shape mismatch");
        let l_in = li / c_in;
        assert!(l_in >= k, "conv input shorter than kernel");
        let l_out = l_in - k + 1;
        let (var, off) = self.push(
            Op::Conv1d {
                input: ii,
                weight: iw,
                bias: ib,
                c_in: c_in as u32,
                c_out: c_out as u32,
                k: k as u32,
            },
            c_out * l_out,
        );
        for co in 0..c_out {
            for t in 0..l_out {
                let mut acc = self.vals[obi + co];
                for ci in 0..c_in {
                    let wb = ow + (co * c_in + ci) * k;
                    let xb = oi + ci * l_in + t;
                    for kk in 0..k {
                        acc += self.vals[wb + kk] * self.vals[xb + kk];
                    }
                }
                self.vals[off + co * l_out + t] = acc;
            }
        }
        var
    }

    /// Reverse sweep from a scalar loss; adjoints accumulate additively and
    /// every node is visited exactly once in reverse topological order.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let il = self.check(loss);
        let (ol, ll) = self.span(il);
        if ll != 1 {
            return Err(Error::Training(format!(
                "backward needs a scalar loss, got length {ll}"
            )));
        }
        if !self.vals[ol].is_finite() {
            return Err(Error::Training("loss is not finite".into()));
        }
        self.adj.clear();
        self.adj.resize(self.vals.len(), 0.0);
        self.adj[ol] = 1.0;

        for n in (0..=il as usize).rev() {
            let (on, ln) = self.span(n as u32);
            let op = self.ops[n].clone();
            match op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    let (oa, la) = self.span(a);
                    let (ob, lb) = self.span(b);
                    for t in 0..ln {
                        let d = self.adj[on + t];
                        self.adj[oa + bidx(la, t)] += d;
                        self.adj[ob + bidx(lb, t)] += d;
                    }
                }
                Op::Sub(a, b) => {
                    let (oa, la) = self.span(a);
                    let (ob, lb) = self.span(b);
                    for t in 0..ln {
                        let d = self.adj[on + t];
                        self.adj[oa + bidx(la, t)] += d;
                        self.adj[ob + bidx(lb, t)] -= d;
                    }
                }
                Op::Mul(a, b) => {
                    let (oa, la) = self.span(a);
                    let (ob, lb) = self.span(b);
                    for t in 0..ln {
                        let d = self.adj[on + t];
                        let av = self.vals[oa + bidx(la, t)];
                        let bv = self.vals[ob + bidx(lb, t)];
                        self.adj[oa + bidx(la, t)] += d * bv;
                        self.adj[ob + bidx(lb, t)] += d * av;
                    }
                }
                Op::Div(a, b) => {
                    let (oa, la) = self.span(a);
                    let (ob, lb) = self.span(b);
                    for t in 0..ln {
                        let d = self.adj[on + t];
                        let bv = self.vals[ob + bidx(lb, t)];
                        let out = self.vals[on + t];
                        self.adj[oa + bidx(la, t)] += d / bv;
                        self.adj[ob + bidx(lb, t)] -= d * out / bv;
                    }
                }
                Op::Neg(a) => {
                    let (oa, _) = self.span(a);
                    for t in 0..ln {
                        self.adj[oa + t] -= self.adj[on + t];
                    }
                }
                Op::AddScalar(a, _) => {
                    let (oa, _) = self.span(a);
                    for t in 0..ln {
                        self.adj[oa + t] += self.adj[on + t];
                    }
                }
                Op::MulScalar(a, c) => {
                    let (oa, _) = self.span(a);
                    for t in 0..ln {
                        self.adj[oa + t] += c * self.adj[on + t];
                    }
                }
                Op::DivScalar(a, c) => {
                    let (oa, _) = self.span(a);
                    for t in 0..ln {
                        self.adj[oa + t] += self.adj[on + t] / c;
                    }
                }
                Op::Square(a) => {
                    let (oa, _) = self.span(a);
                    for t in 0..ln {
                        self.adj[oa + t] += 2.0 * self.vals[oa + t] * self.adj[on + t];
                    }
                }
                Op::Abs(a) => {
                    let (oa, _) = self.span(a);
                    for t in 0..ln {
                        let x = self.vals[oa + t];
                        // abs'(0) = 0 by convention.
                        let s = if x > 0.0 {
                            1.0
                        } else if x < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        self.adj[oa + t] += s * self.adj[on + t];
                    }
                }
                Op::Exp(a) => {
                    let (oa, _) = self.span(a);
                    for t in 0..ln {
                        self.adj[oa + t] += self.vals[on + t] * self.adj[on + t];
                    }
                }
                Op::Elu(a) => {
                    let (oa, _) = self.span(a);
                    for t in 0..ln {
                        let x = self.vals[oa + t];
                        let d = if x > 0.0 { 1.0 } else { self.vals[on + t] + 1.0 };
                        self.adj[oa + t] += d * self.adj[on + t];
                    }
                }
                Op::Sigmoid(a) => {
                    let (oa, _) = self.span(a);
                    for t in 0..ln {
                        let s = self.vals[on + t];
                        self.adj[oa + t] += s * (1.0 - s) * self.adj[on + t];
                    }
                }
                Op::Min(a, b) | Op::Max(a, b) => {
                    let is_min = matches!(self.ops[n], Op::Min(_, _));
                    let (oa, la) = self.span(a);
                    let (ob, lb) = self.span(b);
                    for t in 0..ln {
                        let av = self.vals[oa + bidx(la, t)];
                        let bv = self.vals[ob + bidx(lb, t)];
                        // Ties route the gradient to the first argument.
                        let first = if is_min { av <= bv } else { av >= bv };
                        if first {
                            self.adj[oa + bidx(la, t)] += self.adj[on + t];
                        } else {
                            self.adj[ob + bidx(lb, t)] += self.adj[on + t];
                        }
                    }
                }
                Op::Sum(a) => {
                    let (oa, la) = self.span(a);
                    let d = self.adj[on];
                    for t in 0..la {
                        self.adj[oa + t] += d;
                    }
                }
                Op::Gather(a, ref idx) => {
                    let (oa, _) = self.span(a);
                    for (t, &j) in idx.iter().enumerate() {
                        self.adj[oa + j as usize] += self.adj[on + t];
                    }
                }
                Op::Concat(ref parts) => {
                    let mut cursor = on;
                    for &p in parts.iter() {
                        let (op_, lp) = self.span(p);
                        for t in 0..lp {
                            self.adj[op_ + t] += self.adj[cursor + t];
                        }
                        cursor += lp;
                    }
                }
                Op::Conv1d {
                    input,
                    weight,
                    bias,
                    c_in,
                    c_out,
                    k,
                } => {
                    let (c_in, c_out, k) = (c_in as usize, c_out as usize, k as usize);
                    let (oi, li) = self.span(input);
                    let (ow, _) = self.span(weight);
                    let (ob, _) = self.span(bias);
                    let l_in = li / c_in;
                    let l_out = l_in - k + 1;
                    for co in 0..c_out {
                        for t in 0..l_out {
                            let d = self.adj[on + co * l_out + t];
                            if d == 0.0 {
                                continue;
                            }
                            self.adj[ob + co] += d;
                            for ci in 0..c_in {
                                let wb = ow + (co * c_in + ci) * k;
                                let xb = oi + ci * l_in + t;
                                for kk in 0..k {
                                    self.adj[wb + kk] += d * self.vals[xb + kk];
                                    self.adj[xb + kk] += d * self.vals[wb + kk];
                                }
                            }
                        }
                    }
                }
            }
        }

        if let Some(pos) = self.adj.iter().position(|v| !v.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite adjoint encountered during backward (value slot {pos})"
            )));
        }
        Ok(())
    }
}

#[inline]
fn bidx(len: usize, t: usize) -> usize {
    if len == 1 {
        0
    } else {
        t
    }
}

fn broadcast_len(la: usize, lb: usize) -> usize {
    if la == lb {
        la
    } else if la == 1 {
        lb
    } else if lb == 1 {
        la
    } else {
        panic!("length mismatch in elementwise operation: {la} vs {lb}");
    }
}

/// Central-difference check of a gradient: the largest
/// `|(f(p+h) - f(p-h)) / 2h - grad| / (|grad| + 1e-12)` over all parameters.
pub fn grad_check(
    mut f: impl FnMut(&[f64]) -> f64,
    grad: &[f64],
    params: &[f64],
    h: f64,
) -> f64 {
    assert_eq!(grad.len(), params.len());
    let mut worst = 0.0f64;
    let mut work = params.to_vec();
    for i in 0..params.len() {
        work[i] = params[i] + h;
        let fp = f(&work);
        work[i] = params[i] - h;
        let fm = f(&work);
        work[i] = params[i];
        let fd = (fp - fm) / (2.0 * h);
        let rel = (fd - grad[i]).abs() / (grad[i].abs() + 1e-12);
        worst = worst.max(rel);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn record_reference_values() {
        let mut tape = Tape::new();
        let a = tape.scalar(2.0);
        let b = tape.scalar(3.0);
        let m = tape.mul(a, b);
        assert_eq!(tape.value_scalar(m), 6.0);

        let z = tape.scalar(0.0);
        let s = tape.sigmoid(z);
        assert_eq!(tape.value_scalar(s), 0.5);

        let neg1 = tape.scalar(-1.0);
        let e = tape.elu(neg1);
        assert!((tape.value_scalar(e) - ((-1.0f64).exp() - 1.0)).abs() < 1e-16);
    }

    #[test]
    fn simple_gradients() {
        let mut tape = Tape::new();
        let x = tape.scalar(3.0);
        let y = tape.square(x);
        tape.backward(y).unwrap();
        assert_eq!(tape.adjoint(x)[0], 6.0);

        let mut tape = Tape::new();
        let x = tape.scalar(0.0);
        let y = tape.sigmoid(x);
        tape.backward(y).unwrap();
        assert_eq!(tape.adjoint(x)[0], 0.25);
    }

    #[test]
    fn backward_rejects_vector_loss() {
        let mut tape = Tape::new();
        let x = tape.leaf(&[1.0, 2.0]);
        let y = tape.square(x);
        assert!(tape.backward(y).is_err());
    }

    #[test]
    #[should_panic(expected = "another tape")]
    fn cross_tape_mixing_panics() {
        let mut t1 = Tape::new();
        let mut t2 = Tape::new();
        let a = t1.scalar(1.0);
        let b = t2.scalar(2.0);
        let _ = t1.add(a, b);
    }

    #[test]
    #[should_panic(expected = "finite")]
    fn non_finite_leaf_panics() {
        let mut tape = Tape::new();
        let _ = tape.leaf(&[f64::NAN]);
    }

    #[test]
    fn tie_conventions() {
        // tau5-style |b0 - b2| at b0 = b2: finite gradient, abs'(0) = 0.
        let mut tape = Tape::new();
        let b0 = tape.scalar(1.5);
        let b2 = tape.scalar(1.5);
        let d = tape.sub(b0, b2);
        let t = tape.abs(d);
        tape.backward(t).unwrap();
        assert_eq!(tape.adjoint(b0)[0], 0.0);
        assert_eq!(tape.adjoint(b2)[0], 0.0);

        // min/max ties feed the first argument.
        let mut tape = Tape::new();
        let a = tape.scalar(2.0);
        let b = tape.scalar(2.0);
        let m = tape.min(a, b);
        tape.backward(m).unwrap();
        assert_eq!(tape.adjoint(a)[0], 1.0);
        assert_eq!(tape.adjoint(b)[0], 0.0);

        let mut tape = Tape::new();
        let a = tape.scalar(2.0);
        let b = tape.scalar(2.0);
        let m = tape.max(a, b);
        tape.backward(m).unwrap();
        assert_eq!(tape.adjoint(a)[0], 1.0);
        assert_eq!(tape.adjoint(b)[0], 0.0);
    }

    /// Scalar composite touching every primitive once; differentiated against
    /// central differences.
    fn composite(tape: &mut Tape, params: Var) -> Var {
        let g1 = tape.gather(params, &[0, 1, 2, 3]);
        let g2 = tape.gather(params, &[4, 5, 6, 7]);
        let s = tape.add(g1, g2);
        let d = tape.sub(g1, g2);
        let m = tape.mul(s, d);
        let q = tape.div(m, g2);
        let e = tape.elu(q);
        let sg = tape.sigmoid(e);
        let ab = tape.abs(d);
        let mn = tape.min(sg, ab);
        let mx = tape.max(sg, ab);
        let ex = tape.exp(mn);
        let cat = tape.concat(&[mx, ex]);
        let sq = tape.square(cat);
        let sc = tape.mul_scalar(sq, 0.37);
        let dv = tape.div_scalar(sc, 1.7);
        let sh = tape.add_scalar(dv, -0.1);
        let ng = tape.neg(sh);
        tape.sum(ng)
    }

    #[test]
    fn composite_matches_finite_differences_over_seeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let params: Vec<f64> = (0..8)
                .map(|_| {
                    // Keep away from the min/max kinks.
                    let v: f64 = rng.gen_range(0.3..2.0);
                    if rng.gen_bool(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect();
            let mut tape = Tape::new();
            let p = tape.leaf(&params);
            let loss = composite(&mut tape, p);
            tape.backward(loss).unwrap();
            let grad = tape.adjoint(p).to_vec();

            let f = |x: &[f64]| -> f64 {
                let mut t = Tape::new();
                let p = t.leaf(x);
                let l = composite(&mut t, p);
                t.value_scalar(l)
            };
            let err = grad_check(f, &grad, &params, 1e-6);
            assert!(err < 1e-5, "grad check error {err:e} for {params:?}");
        }
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (c_in, c_out, k, l_in) = (2usize, 3usize, 3usize, 9usize);
        let input: Vec<f64> = (0..c_in * l_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let weight: Vec<f64> = (0..c_out * c_in * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias: Vec<f64> = (0..c_out).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let run = |iv: &[f64], wv: &[f64], bv: &[f64]| -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
            let mut tape = Tape::new();
            let i = tape.leaf(iv);
            let w = tape.leaf(wv);
            let b = tape.leaf(bv);
            let out = tape.conv1d(i, w, b, c_in, c_out, k);
            let sq = tape.square(out);
            let loss = tape.sum(sq);
            tape.backward(loss).unwrap();
            (
                tape.value_scalar(loss),
                tape.adjoint(i).to_vec(),
                tape.adjoint(w).to_vec(),
                tape.adjoint(b).to_vec(),
            )
        };
        let (_, gi, gw, gb) = run(&input, &weight, &bias);

        let f_i = |x: &[f64]| run(x, &weight, &bias).0;
        let f_w = |x: &[f64]| run(&input, x, &bias).0;
        let f_b = |x: &[f64]| run(&input, &weight, x).0;
        assert!(grad_check(f_i, &gi, &input, 1e-6) < 1e-6);
        assert!(grad_check(f_w, &gw, &weight, 1e-6) < 1e-6);
        assert!(grad_check(f_b, &gb, &bias, 1e-6) < 1e-6);
    }

    #[test]
    fn gradient_is_linear_in_the_loss() {
        let params = [0.7, -1.3, 2.1];
        let grads: Vec<Vec<f64>> = [1.0, 2.5]
            .iter()
            .map(|&scale| {
                let mut tape = Tape::new();
                let p = tape.leaf(&params);
                let sq = tape.square(p);
                let f = tape.sum(sq);
                let e = tape.exp(p);
                let g = tape.sum(e);
                let sf = tape.mul_scalar(f, 2.0 * scale);
                let sg = tape.mul_scalar(g, -0.5 * scale);
                let loss = tape.add(sf, sg);
                tape.backward(loss).unwrap();
                tape.adjoint(p).to_vec()
            })
            .collect();
        for t in 0..3 {
            assert!((grads[1][t] - 2.5 * grads[0][t]).abs() < 1e-12);
        }
    }

    #[test]
    fn unreachable_parameters_get_zero_gradient() {
        let mut tape = Tape::new();
        let used = tape.leaf(&[1.0, 2.0]);
        let unused = tape.leaf(&[5.0, 6.0, 7.0]);
        let sq = tape.square(used);
        let loss = tape.sum(sq);
        tape.backward(loss).unwrap();
        assert!(tape.adjoint(unused).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gather_scatter_roundtrip_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(&[1.0, 2.0, 3.0]);
        // Index 1 used twice: its adjoint must accumulate.
        let g = tape.gather(x, &[1, 1, 2]);
        let s = tape.sum(g);
        tape.backward(s).unwrap();
        assert_eq!(tape.adjoint(x), &[0.0, 2.0, 1.0]);
    }

    #[test]
    fn quadratic_grad_check_is_tight() {
        let params = [1.0, -0.5, 0.25, 2.0];
        let f = |x: &[f64]| x.iter().map(|v| 3.0 * v * v).sum::<f64>();
        let grad: Vec<f64> = params.iter().map(|v| 6.0 * v).collect();
        let err = grad_check(f, &grad, &params, 1e-6);
        assert!(err < 1e-9, "quadratic grad check error {err:e}");
    }

    #[test]
    fn broadcasting_scalars_works_both_ways() {
        let mut tape = Tape::new();
        let a = tape.leaf(&[1.0, 2.0, 3.0]);
        let c = tape.scalar(2.0);
        let m = tape.mul(a, c);
        assert_eq!(tape.value(m), &[2.0, 4.0, 6.0]);
        let m2 = tape.mul(c, a);
        assert_eq!(tape.value(m2), &[2.0, 4.0, 6.0]);
        let s1 = tape.sum(m);
        let s2 = tape.sum(m2);
        let loss = tape.add(s1, s2);
        tape.backward(loss).unwrap();
        // d loss / dc = 2 * sum(a) = 12.
        assert_eq!(tape.adjoint(c)[0], 12.0);
        assert_eq!(tape.adjoint(a), &[4.0, 4.0, 4.0]);
    }
}
