//! Uniform 1-D grids, solution fields and ghost-cell extension.
//!
//! Periodic problems identify the first and last grid point and store `n`
//! values; shock tubes keep all `n + 1` points. Ghost extension is the one
//! place where the boundary policy enters the solvers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Stencil halo used by the fifth-order reconstruction: interface `i+1/2`
/// reaches `i+-2` and the shifted `i-1/2` interface one more to the left.
pub const GHOST_WIDTH: usize = 3;

/// How values outside the domain are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Wrap-around; `x_0` and `x_N` are the same physical point.
    Periodic,
    /// Ghost cells copy the nearest interior value.
    ZeroGradient,
}

/// Uniform grid with `n_intervals + 1` points `x_i = x_min + i * dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_intervals: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_intervals: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "domain [{x_min}, {x_max}] is empty or not finite"
            )));
        }
        if n_intervals < 6 {
            return Err(Error::InvalidGrid(format!(
                "need at least 6 intervals for one full stencil, got {n_intervals}"
            )));
        }
        Ok(Grid1D {
            x_min,
            x_max,
            n_intervals,
            dx: (x_max - x_min) / n_intervals as f64,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// Number of stored values under the given boundary policy.
    pub fn point_count(&self, boundary: BoundaryPolicy) -> usize {
        match boundary {
            BoundaryPolicy::Periodic => self.n_intervals,
            BoundaryPolicy::ZeroGradient => self.n_intervals + 1,
        }
    }
}

/// Cell-centered values on a grid together with the boundary policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub grid: Grid1D,
    pub boundary: BoundaryPolicy,
    pub values: Vec<f64>,
}

impl SolutionField {
    pub fn new(grid: Grid1D, boundary: BoundaryPolicy, values: Vec<f64>) -> Result<Self> {
        let want = grid.point_count(boundary);
        if values.len() != want {
            return Err(Error::FieldLength {
                got: values.len(),
                want,
            });
        }
        Ok(SolutionField {
            grid,
            boundary,
            values,
        })
    }

    pub fn from_fn(grid: Grid1D, boundary: BoundaryPolicy, f: impl Fn(f64) -> f64) -> Self {
        let n = grid.point_count(boundary);
        let values = (0..n).map(|i| f(grid.x(i))).collect();
        SolutionField {
            grid,
            boundary,
            values,
        }
    }

    pub fn check_finite(&self, step: usize) -> Result<()> {
        check_finite(&self.values, step)
    }
}

pub fn check_finite(values: &[f64], step: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { step, index }),
        None => Ok(()),
    }
}

/// Pad `values` with `ghost` cells on each side according to the policy.
///
/// Periodic wrap treats the stored array as one full period; zero-gradient
/// repeats the first/last value.
pub fn extend_with_ghosts(values: &[f64], boundary: BoundaryPolicy, ghost: usize) -> Vec<f64> {
    let n = values.len();
    let mut padded = Vec::with_capacity(n + 2 * ghost);
    match boundary {
        BoundaryPolicy::Periodic => {
            for k in 0..n + 2 * ghost {
                let j = (k as isize - ghost as isize).rem_euclid(n as isize);
                padded.push(values[j as usize]);
            }
        }
        BoundaryPolicy::ZeroGradient => {
            padded.extend(std::iter::repeat(values[0]).take(ghost));
            padded.extend_from_slice(values);
            padded.extend(std::iter::repeat(values[n - 1]).take(ghost));
        }
    }
    padded
}

/// Index map for the same padding, used where gather indices are needed
/// instead of copied values.
pub fn ghost_indices(n: usize, boundary: BoundaryPolicy, ghost: usize) -> Vec<usize> {
    (0..n + 2 * ghost)
        .map(|k| {
            let j = k as isize - ghost as isize;
            match boundary {
                BoundaryPolicy::Periodic => j.rem_euclid(n as isize) as usize,
                BoundaryPolicy::ZeroGradient => j.clamp(0, n as isize - 1) as usize,
            }
        })
        .collect()
}

fn fmt_full(v: f64) -> String {
    // 17 significant digits: enough to round-trip binary64.
    format!("{v:.16e}")
}

/// Write a scalar snapshot as CSV with header `x,u`.
pub fn write_scalar_csv(path: &Path, grid: &Grid1D, boundary: BoundaryPolicy, u: &[f64]) -> Result<()> {
    let mut out = String::from("x,u\n");
    for (i, v) in u.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_full(grid.x(i)), fmt_full(*v));
    }
    let _ = boundary;
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write an Euler snapshot as CSV with header `x,rho,u,p`.
pub fn write_euler_csv(
    path: &Path,
    grid: &Grid1D,
    rho: &[f64],
    u: &[f64],
    p: &[f64],
) -> Result<()> {
    let mut out = String::from("x,rho,u,p\n");
    for i in 0..rho.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_full(grid.x(i)),
            fmt_full(rho[i]),
            fmt_full(u[i]),
            fmt_full(p[i])
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read back a CSV written by [`write_scalar_csv`] or [`write_euler_csv`];
/// returns the data columns (x first).
pub fn read_csv_columns(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::ModelFormat(format!("{}: empty csv", path.display())))?;
    let ncol = header.split(',').count();
    let mut cols = vec![Vec::new(); ncol];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ncol {
            return Err(Error::ModelFormat(format!(
                "{}:{}: expected {} columns",
                path.display(),
                lineno + 2,
                ncol
            )));
        }
        for (c, f) in fields.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::ModelFormat(format!("{}:{}: bad number {f:?}", path.display(), lineno + 2))
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_and_points() {
        let g = Grid1D::new(-1.0, 1.0, 128).unwrap();
        assert_eq!(g.dx(), 2.0 / 128.0);
        assert_eq!(g.dx(), 0.015625);

        let g = Grid1D::new(0.0, 2.0, 20).unwrap();
        assert_eq!(g.dx(), 0.1);
        assert!((g.x(10) - 1.0).abs() < 1e-15);

        let g = Grid1D::new(0.0, 1.0, 64).unwrap();
        assert_eq!(g.dx(), 1.0 / 64.0);
    }

    #[test]
    fn grid_endpoint_reproduced() {
        let g = Grid1D::new(-1.0, 1.0, 640).unwrap();
        let err = (g.x(640) - 1.0).abs();
        assert!(err <= 640.0 * f64::EPSILON);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid1D::new(0.0, 1.0, 5).is_err());
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
        assert!(Grid1D::new(2.0, 1.0, 10).is_err());
    }

    #[test]
    fn periodic_ghosts_wrap() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let p = extend_with_ghosts(&v, BoundaryPolicy::Periodic, 3);
        assert_eq!(&p[..3], &[5.0, 6.0, 7.0]);
        assert_eq!(&p[3..10], &v);
        assert_eq!(&p[10..], &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_gradient_ghosts_copy_edges() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let p = extend_with_ghosts(&v, BoundaryPolicy::ZeroGradient, 3);
        assert_eq!(&p[..3], &[1.0, 1.0, 1.0]);
        assert_eq!(&p[3..7], &v);
        assert_eq!(&p[7..], &[4.0, 4.0, 4.0]);
    }

    #[test]
    fn constant_field_stays_constant() {
        let v = [2.5; 9];
        for b in [BoundaryPolicy::Periodic, BoundaryPolicy::ZeroGradient] {
            let p = extend_with_ghosts(&v, b, 3);
            assert!(p.iter().all(|&x| x == 2.5));
        }
    }

    #[test]
    fn ghost_roundtrip_is_bit_exact() {
        let v: Vec<f64> = (0..17).map(|i| (i as f64).sin() * 1e3).collect();
        for b in [BoundaryPolicy::Periodic, BoundaryPolicy::ZeroGradient] {
            let p = extend_with_ghosts(&v, b, 3);
            assert_eq!(&p[3..3 + v.len()], v.as_slice());
        }
    }

    #[test]
    fn periodic_ghosts_match_analytic_sine() {
        // Grid-periodic sine sampled at n points; ghost values must equal the
        // analytic samples at the ghost coordinates.
        let n = 32;
        let g = Grid1D::new(0.0, 2.0, n).unwrap();
        let f = |x: f64| (std::f64::consts::PI * x).sin();
        let v: Vec<f64> = (0..n).map(|i| f(g.x(i))).collect();
        let p = extend_with_ghosts(&v, BoundaryPolicy::Periodic, 3);
        for k in 0..v.len() + 6 {
            let x = g.x_min() + (k as f64 - 3.0) * g.dx();
            assert!((p[k] - f(x)).abs() < 1e-12, "ghost mismatch at {k}");
        }
    }

    #[test]
    fn ghost_indices_agree_with_copy() {
        let v: Vec<f64> = (0..11).map(|i| i as f64 * 0.7 - 2.0).collect();
        for b in [BoundaryPolicy::Periodic, BoundaryPolicy::ZeroGradient] {
            let by_copy = extend_with_ghosts(&v, b, 4);
            let by_idx: Vec<f64> = ghost_indices(v.len(), b, 4)
                .into_iter()
                .map(|j| v[j])
                .collect();
            assert_eq!(by_copy, by_idx);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        let g = Grid1D::new(0.0, 1.0, 8).unwrap();
        let u: Vec<f64> = (0..8).map(|i| (i as f64 * 0.1234).exp()).collect();
        write_scalar_csv(&path, &g, BoundaryPolicy::Periodic, &u).unwrap();
        let cols = read_csv_columns(&path).unwrap();
        assert_eq!(cols.len(), 2);
        assert_eq!(cols[1], u);
        for (i, x) in cols[0].iter().enumerate() {
            assert_eq!(*x, g.x(i));
        }
    }
}
