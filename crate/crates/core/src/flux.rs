//! Scalar problem physics and the semidiscrete WENO right-hand side.
//!
//! The global Lax-Friedrichs splitting `f^+- = (f(u) +- alpha u) / 2` with
//! `alpha = max |f'(u)|` over the current field feeds the positive and
//! negative reconstruction branches. For the JS and Z weightings every
//! interface flux is computed once and telescoped, so periodic sums are
//! conservative to round-off. The DS weighting follows the per-node
//! multiplier convention: a node applies its own multiplier triple to the
//! indicator sets of both of its interfaces, so the two nodes sharing an
//! interface may see slightly different flux values there.

use crate::error::{Error, Result};
use crate::kernel::{
    interface_flux, negative_branch_reconstruct, SchemeConfig, Weighting,
};
use crate::mesh::{extend_with_ghosts, BoundaryPolicy, GHOST_WIDTH};
use crate::net::{self, DsModel};

/// Flux functions of the scalar model problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFlux {
    /// `f(u) = u`.
    Transport,
    /// `f(u) = u^2 / 2`.
    Burgers,
    /// `f(u) = u^2 / (u^2 + a (1 - u)^2)`, `0 < a < 1`.
    BuckleyLeverett { a: f64 },
}

impl ScalarFlux {
    pub fn buckley_leverett(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidFlux(format!(
                "Buckley-Leverett viscosity ratio must lie in (0, 1), got {a}"
            )));
        }
        Ok(ScalarFlux::BuckleyLeverett { a })
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            ScalarFlux::Transport => u,
            ScalarFlux::Burgers => 0.5 * u * u,
            ScalarFlux::BuckleyLeverett { a } => {
                let u2 = u * u;
                u2 / (u2 + a * (1.0 - u) * (1.0 - u))
            }
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            ScalarFlux::Transport => 1.0,
            ScalarFlux::Burgers => u,
            ScalarFlux::BuckleyLeverett { a } => {
                let den = u * u + a * (1.0 - u) * (1.0 - u);
                2.0 * a * u * (1.0 - u) / (den * den)
            }
        }
    }

    /// Splitting speed `alpha = max |f'|` over the value range of `u`.
    ///
    /// The Buckley-Leverett derivative peaks strictly inside the range, so it
    /// is sampled densely instead of evaluated at the endpoints.
    pub fn max_wave_speed(&self, u: &[f64]) -> f64 {
        match *self {
            ScalarFlux::Transport => 1.0,
            ScalarFlux::Burgers => u.iter().fold(0.0, |m, &v| m.max(v.abs())),
            ScalarFlux::BuckleyLeverett { .. } => {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for &v in u {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let samples = 1024;
                let mut alpha = 0.0f64;
                for s in 0..=samples {
                    let v = lo + (hi - lo) * s as f64 / samples as f64;
                    alpha = alpha.max(self.derivative(v).abs());
                }
                alpha
            }
        }
    }
}

/// Initial data of the scalar benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `amplitude` on `[x_lo, x_hi]`, zero elsewhere.
    Step { x_lo: f64, x_hi: f64, amplitude: f64 },
    /// `exp(-width (x - 1)^2)`.
    Gaussian { width: f64 },
    /// `amplitude * sin(pi x)`.
    ScaledSine { amplitude: f64 },
}

impl InitialCondition {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            InitialCondition::Step { x_lo, x_hi, amplitude } => {
                if x >= x_lo && x <= x_hi {
                    amplitude
                } else {
                    0.0
                }
            }
            InitialCondition::Gaussian { width } => (-width * (x - 1.0) * (x - 1.0)).exp(),
            InitialCondition::ScaledSine { amplitude } => {
                amplitude * (std::f64::consts::PI * x).sin()
            }
        }
    }

    fn describe(&self) -> String {
        match *self {
            InitialCondition::Step { x_lo, x_hi, amplitude } => {
                format!("step[{x_lo:.17e},{x_hi:.17e}]={amplitude:.17e}")
            }
            InitialCondition::Gaussian { width } => format!("gauss(z={width:.17e})"),
            InitialCondition::ScaledSine { amplitude } => format!("sine(z={amplitude:.17e})"),
        }
    }
}

/// A scalar conservation law together with its benchmark setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarProblem {
    pub flux: ScalarFlux,
    pub initial: InitialCondition,
    pub x_min: f64,
    pub x_max: f64,
    pub boundary: BoundaryPolicy,
    pub t_final: f64,
}

impl ScalarProblem {
    /// `u_t + u_x = 0` on `[0, 2]` with `u(x, 0) = sin(pi x)`, `T = 0.5`.
    pub fn transport() -> Self {
        ScalarProblem {
            flux: ScalarFlux::Transport,
            initial: InitialCondition::ScaledSine { amplitude: 1.0 },
            x_min: 0.0,
            x_max: 2.0,
            boundary: BoundaryPolicy::Periodic,
            t_final: 0.5,
        }
    }

    /// Burgers on `[0, 2]` up to `T = 0.3`.
    pub fn burgers(initial: InitialCondition) -> Self {
        ScalarProblem {
            flux: ScalarFlux::Burgers,
            initial,
            x_min: 0.0,
            x_max: 2.0,
            boundary: BoundaryPolicy::Periodic,
            t_final: 0.3,
        }
    }

    /// Buckley-Leverett on `[-1, 1]` with the unit box on `[-0.5, 0]`,
    /// `T = 0.4`.
    pub fn buckley_leverett(a: f64) -> Result<Self> {
        Ok(ScalarProblem {
            flux: ScalarFlux::buckley_leverett(a)?,
            initial: InitialCondition::Step {
                x_lo: -0.5,
                x_hi: 0.0,
                amplitude: 1.0,
            },
            x_min: -1.0,
            x_max: 1.0,
            boundary: BoundaryPolicy::Periodic,
            t_final: 0.4,
        })
    }

    /// Stable identifier used for reference caching.
    pub fn descriptor(&self) -> String {
        let flux = match self.flux {
            ScalarFlux::Transport => "transport".to_string(),
            ScalarFlux::Burgers => "burgers".to_string(),
            ScalarFlux::BuckleyLeverett { a } => format!("bl(a={a:.17e})"),
        };
        format!(
            "{flux}|{}|[{:.17e},{:.17e}]|T={:.17e}",
            self.initial.describe(),
            self.x_min,
            self.x_max,
            self.t_final
        )
    }
}

/// Lax-Friedrichs splitting of pointwise flux values.
pub fn lf_split(f: &[f64], u: &[f64], alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !alpha.is_finite() {
        return Err(Error::InvalidFlux(format!("splitting speed {alpha} not finite")));
    }
    let fp = f
        .iter()
        .zip(u)
        .map(|(&fv, &uv)| 0.5 * (fv + alpha * uv))
        .collect();
    let fm = f
        .iter()
        .zip(u)
        .map(|(&fv, &uv)| 0.5 * (fv - alpha * uv))
        .collect();
    Ok((fp, fm))
}

/// Where the DS multipliers come from.
#[derive(Clone, Copy)]
pub enum MultiplierSource<'a> {
    /// JS / Z: no multipliers involved.
    None,
    /// Learned networks, one per flux sign.
    Model(&'a DsModel),
    /// Constant multiplier everywhere (testing hook; `delta + C = 1` makes
    /// the DS scheme coincide with WENO-Z bit for bit).
    Fixed(f64),
}

impl<'a> MultiplierSource<'a> {
    fn scalar_fields(
        &self,
        fp: &[f64],
        fm: &[f64],
        boundary: BoundaryPolicy,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            MultiplierSource::None => Err(Error::MissingMultipliers),
            MultiplierSource::Fixed(d) => {
                let ext = vec![*d; fp.len() + 2];
                Ok((ext.clone(), ext))
            }
            MultiplierSource::Model(model) => {
                let dp = net::multiplier_field(&model.pos, fp, boundary, 1)?;
                let dm = net::multiplier_field(&model.neg, fm, boundary, 1)?;
                Ok((dp, dm))
            }
        }
    }
}

/// Semidiscrete right-hand side `-(fhat_{i+1/2} - fhat_{i-1/2}) / dx` for a
/// scalar problem.
pub fn scalar_rhs(
    u: &[f64],
    boundary: BoundaryPolicy,
    dx: f64,
    flux: &ScalarFlux,
    cfg: &SchemeConfig,
    source: &MultiplierSource,
) -> Result<Vec<f64>> {
    let p = u.len();
    let f: Vec<f64> = u.iter().map(|&v| flux.value(v)).collect();
    let alpha = flux.max_wave_speed(u);
    let (fp, fm) = lf_split(&f, u, alpha)?;

    let g = GHOST_WIDTH;
    let fp_pad = extend_with_ghosts(&fp, boundary, g);
    let fm_pad = extend_with_ghosts(&fm, boundary, g);

    let mut rhs = vec![0.0; p];
    match cfg.weighting {
        Weighting::Js | Weighting::Z => {
            // One flux per interface k-1/2, k = 0..=p; node i telescopes
            // fhat[i] and fhat[i+1].
            let mut fhat = vec![0.0; p + 1];
            for k in 0..=p {
                let j = k as isize - 1; // interface j+1/2
                let base = (j + g as isize) as usize;
                let wp: [f64; 5] = std::array::from_fn(|s| fp_pad[base - 2 + s]);
                let wn: [f64; 5] = std::array::from_fn(|s| fm_pad[base - 1 + s]);
                fhat[k] = interface_flux(&wp, cfg, None)?
                    + negative_branch_reconstruct(&wn, cfg, None)?;
            }
            for i in 0..p {
                rhs[i] = -(fhat[i + 1] - fhat[i]) / dx;
            }
        }
        Weighting::Ds => {
            // delta fields over nodes -1..=p (offset by one).
            let (dp, dm) = source.scalar_fields(&fp, &fm, boundary)?;
            for i in 0..p {
                let tp = [dp[i], dp[i + 1], dp[i + 2]];
                let tm = [dm[i + 2], dm[i + 1], dm[i]];
                let b = i + g;
                // Right interface i+1/2 and left interface i-1/2, both with
                // this node's multiplier triples.
                let wpn: [f64; 5] = std::array::from_fn(|s| fp_pad[b - 2 + s]);
                let wpp: [f64; 5] = std::array::from_fn(|s| fp_pad[b - 3 + s]);
                let wnn: [f64; 5] = std::array::from_fn(|s| fm_pad[b - 1 + s]);
                let wnp: [f64; 5] = std::array::from_fn(|s| fm_pad[b - 2 + s]);
                let right = interface_flux(&wpn, cfg, Some(&tp))?
                    + negative_branch_reconstruct(&wnn, cfg, Some(&tm))?;
                let left = interface_flux(&wpp, cfg, Some(&tp))?
                    + negative_branch_reconstruct(&wnp, cfg, Some(&tm))?;
                rhs[i] = -(right - left) / dx;
            }
        }
    }
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid1D;

    #[test]
    fn bl_flux_reference_values() {
        let f = ScalarFlux::buckley_leverett(0.25).unwrap();
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.value(1.0), 1.0);
        assert!((f.value(0.5) - 0.8).abs() < 1e-15);
        assert!(ScalarFlux::buckley_leverett(0.0).is_err());
        assert!(ScalarFlux::buckley_leverett(1.0).is_err());

        assert_eq!(ScalarFlux::Burgers.value(2.0), 2.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        let fluxes = [
            ScalarFlux::Transport,
            ScalarFlux::Burgers,
            ScalarFlux::buckley_leverett(0.3).unwrap(),
        ];
        for flux in fluxes {
            for k in 0..20 {
                let u = -0.2 + 1.4 * k as f64 / 19.0;
                let fd = (flux.value(u + h) - flux.value(u - h)) / (2.0 * h);
                let an = flux.derivative(u);
                assert!(
                    (fd - an).abs() <= 1e-6 * (an.abs() + 1.0),
                    "{flux:?} at u={u}: fd={fd} analytic={an}"
                );
            }
        }
    }

    #[test]
    fn lf_split_reference_values() {
        let (fp, fm) = lf_split(&[0.5], &[1.0], 2.0).unwrap();
        assert_eq!(fp[0], 1.25);
        assert_eq!(fm[0], -0.75);

        let (fp, fm) = lf_split(&[3.0], &[0.0], 1.0).unwrap();
        assert_eq!(fp[0], 1.5);
        assert_eq!(fm[0], 1.5);

        assert!(lf_split(&[1.0], &[1.0], f64::NAN).is_err());
    }

    #[test]
    fn lf_split_recombines_exactly() {
        let u: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        let flux = ScalarFlux::Burgers;
        let f: Vec<f64> = u.iter().map(|&v| flux.value(v)).collect();
        let alpha = flux.max_wave_speed(&u);
        let (fp, fm) = lf_split(&f, &u, alpha).unwrap();
        for i in 0..u.len() {
            let back = fp[i] + fm[i];
            assert!((back - f[i]).abs() <= f64::EPSILON * f[i].abs());
        }
    }

    #[test]
    fn split_branches_are_monotone() {
        let flux = ScalarFlux::buckley_leverett(0.5).unwrap();
        let us: Vec<f64> = (0..=200).map(|i| -0.2 + 1.4 * i as f64 / 200.0).collect();
        let alpha = flux.max_wave_speed(&us);
        let h = 1e-7;
        for &u in &us {
            let dplus = (flux.value(u + h) + alpha * (u + h) - flux.value(u - h)
                - alpha * (u - h))
                / (4.0 * h);
            let dminus = (flux.value(u + h) - alpha * (u + h) - flux.value(u - h)
                + alpha * (u - h))
                / (4.0 * h);
            assert!(dplus >= -1e-9);
            assert!(dminus <= 1e-9);
        }
    }

    #[test]
    fn constant_field_has_zero_rhs() {
        let cfg = SchemeConfig::new(Weighting::Z);
        let u = vec![0.7; 32];
        for boundary in [BoundaryPolicy::Periodic, BoundaryPolicy::ZeroGradient] {
            let rhs = scalar_rhs(
                &u,
                boundary,
                0.1,
                &ScalarFlux::Burgers,
                &cfg,
                &MultiplierSource::None,
            )
            .unwrap();
            assert!(rhs.iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn transport_rhs_matches_analytic_derivative() {
        let n = 256;
        let grid = Grid1D::new(0.0, 2.0, n).unwrap();
        let u: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * grid.x(i)).sin()).collect();
        for w in [Weighting::Js, Weighting::Z] {
            let cfg = SchemeConfig::new(w);
            let rhs = scalar_rhs(
                &u,
                BoundaryPolicy::Periodic,
                grid.dx(),
                &ScalarFlux::Transport,
                &cfg,
                &MultiplierSource::None,
            )
            .unwrap();
            let mut max_err = 0.0f64;
            for i in 0..n {
                let exact = -std::f64::consts::PI * (std::f64::consts::PI * grid.x(i)).cos();
                max_err = max_err.max((rhs[i] - exact).abs());
            }
            assert!(max_err < 5e-8, "{w:?}: max_err = {max_err:e}");
        }
    }

    #[test]
    fn periodic_rhs_sum_telescopes() {
        let n = 128;
        let grid = Grid1D::new(0.0, 2.0, n).unwrap();
        let u: Vec<f64> = (0..n)
            .map(|i| ((std::f64::consts::PI * grid.x(i)).sin() * 1.3).exp())
            .collect();
        for w in [Weighting::Js, Weighting::Z] {
            let cfg = SchemeConfig::new(w);
            let rhs = scalar_rhs(
                &u,
                BoundaryPolicy::Periodic,
                grid.dx(),
                &ScalarFlux::Burgers,
                &cfg,
                &MultiplierSource::None,
            )
            .unwrap();
            let sum: f64 = rhs.iter().sum();
            assert!(sum.abs() < 1e-12, "{w:?}: sum = {sum:e}");
        }
    }

    #[test]
    fn ds_with_unit_multiplier_matches_z_bitwise() {
        let n = 64;
        let grid = Grid1D::new(-1.0, 1.0, n).unwrap();
        let u: Vec<f64> = (0..n)
            .map(|i| if grid.x(i) >= -0.5 && grid.x(i) <= 0.0 { 1.0 } else { 0.0 })
            .collect();
        let flux = ScalarFlux::buckley_leverett(0.4).unwrap();

        let z = scalar_rhs(
            &u,
            BoundaryPolicy::Periodic,
            grid.dx(),
            &flux,
            &SchemeConfig::new(Weighting::Z),
            &MultiplierSource::None,
        )
        .unwrap();
        let ds = scalar_rhs(
            &u,
            BoundaryPolicy::Periodic,
            grid.dx(),
            &flux,
            &SchemeConfig::new(Weighting::Ds),
            &MultiplierSource::Fixed(0.9),
        )
        .unwrap();
        for i in 0..n {
            assert_eq!(z[i].to_bits(), ds[i].to_bits(), "node {i}");
        }
    }

    #[test]
    fn ds_without_source_errors() {
        let cfg = SchemeConfig::new(Weighting::Ds);
        let err = scalar_rhs(
            &[0.0; 16],
            BoundaryPolicy::Periodic,
            0.1,
            &ScalarFlux::Burgers,
            &cfg,
            &MultiplierSource::None,
        );
        assert!(err.is_err());
    }
}
