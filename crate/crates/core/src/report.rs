//! Error norms, scheme-comparison reports and convergence tables.

use serde::Serialize;

/// How the discrete L2 norm is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L2Convention {
    /// Root mean square: `sqrt(sum e^2 / n)`.
    Rms,
    /// Grid-weighted: `sqrt(dx * sum e^2)`.
    Dx,
}

pub fn linf_error(u: &[f64], reference: &[f64]) -> f64 {
    u.iter()
        .zip(reference)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

pub fn l2_error(u: &[f64], reference: &[f64], dx: f64, convention: L2Convention) -> f64 {
    let ss: f64 = u
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    match convention {
        L2Convention::Rms => (ss / u.len() as f64).sqrt(),
        L2Convention::Dx => (dx * ss).sqrt(),
    }
}

/// Errors of one scheme on one problem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SchemeErrors {
    pub linf: f64,
    pub l2: f64,
}

/// One row of a comparison table: the three schemes on one problem (or one
/// Euler component), plus the ratio `min(js, z) / ds` per norm.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub js: SchemeErrors,
    pub z: SchemeErrors,
    pub ds: Option<SchemeErrors>,
    pub ratio_linf: Option<f64>,
    pub ratio_l2: Option<f64>,
}

impl CompareRow {
    pub fn new(label: String, js: SchemeErrors, z: SchemeErrors, ds: Option<SchemeErrors>) -> Self {
        let ratio = |pick: fn(&SchemeErrors) -> f64| {
            ds.as_ref().and_then(|d| {
                let denom = pick(d);
                (denom > 0.0).then(|| pick(&js).min(pick(&z)) / denom)
            })
        };
        CompareRow {
            label,
            js,
            z,
            ds,
            ratio_linf: ratio(|e| e.linf),
            ratio_l2: ratio(|e| e.l2),
        }
    }
}

/// Aligned text table of comparison rows.
pub fn format_compare_table(rows: &[CompareRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>12} {:>12} {:>12} {:>7}   {:>12} {:>12} {:>12} {:>7}\n",
        "problem",
        "Linf JS",
        "Linf Z",
        "Linf DS",
        "ratio",
        "L2 JS",
        "L2 Z",
        "L2 DS",
        "ratio"
    ));
    for r in rows {
        let ds_linf = r
            .ds
            .map(|d| format!("{:.6}", d.linf))
            .unwrap_or_else(|| "-".into());
        let ds_l2 = r
            .ds
            .map(|d| format!("{:.6}", d.l2))
            .unwrap_or_else(|| "-".into());
        let rl = r
            .ratio_linf
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "-".into());
        let r2 = r
            .ratio_l2
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<18} {:>12.6} {:>12.6} {:>12} {:>7}   {:>12.6} {:>12.6} {:>12} {:>7}\n",
            r.label, r.js.linf, r.z.linf, ds_linf, rl, r.js.l2, r.z.l2, ds_l2, r2
        ));
    }
    out
}

/// One convergence-study row.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub linf: f64,
    /// `log2(e_{N/2} / e_N)`, absent on the first row.
    pub order: Option<f64>,
}

/// Observed orders from consecutive rows (grid halving).
pub fn convergence_rows(entries: &[(usize, f64)]) -> Vec<ConvergenceRow> {
    entries
        .iter()
        .enumerate()
        .map(|(i, &(n, linf))| ConvergenceRow {
            n,
            linf,
            order: (i > 0).then(|| (entries[i - 1].1 / linf).log2()),
        })
        .collect()
}

pub fn format_convergence_table(rows: &[ConvergenceRow]) -> String {
    let mut out = format!("{:>6} {:>14} {:>10}\n", "N", "Linf", "order");
    for r in rows {
        let order = r
            .order
            .map(|o| format!("{o:.6}"))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!("{:>6} {:>14.6e} {:>10}\n", r.n, r.linf, order));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_reference_values() {
        let u = [1.0, 2.0, 3.0];
        let r = [1.0, 1.0, 5.0];
        assert_eq!(linf_error(&u, &r), 2.0);
        let rms = l2_error(&u, &r, 0.5, L2Convention::Rms);
        assert!((rms - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let dx = l2_error(&u, &r, 0.5, L2Convention::Dx);
        assert!((dx - (0.5f64 * 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identical_schemes_have_unit_ratio() {
        let e = SchemeErrors { linf: 0.25, l2: 0.1 };
        let row = CompareRow::new("x".into(), e, e, Some(e));
        assert_eq!(row.ratio_linf, Some(1.0));
        assert_eq!(row.ratio_l2, Some(1.0));
    }

    #[test]
    fn ratio_undefined_for_zero_ds_error() {
        let e = SchemeErrors { linf: 0.25, l2: 0.1 };
        let z = SchemeErrors { linf: 0.0, l2: 0.0 };
        let row = CompareRow::new("x".into(), e, e, Some(z));
        assert_eq!(row.ratio_linf, None);
    }

    #[test]
    fn convergence_orders_from_halving() {
        let rows = convergence_rows(&[(20, 1.0), (40, 1.0 / 32.0), (80, 1.0 / 1024.0)]);
        assert!(rows[0].order.is_none());
        assert!((rows[1].order.unwrap() - 5.0).abs() < 1e-12);
        assert!((rows[2].order.unwrap() - 5.0).abs() < 1e-12);
    }
}
