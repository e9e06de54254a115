//! Parameter sweeps for the distribution-sum, `φ` and regularity bounds.

use rayon::prelude::*;

use crate::distributions::{dist_order_sum, phi_sobolev_sum};
use crate::error::Result;
use crate::repn::SeriesParam;
use crate::solver::regularity_check;
use crate::tensor::MultiParam;

use super::config::ExperimentConfig;
use super::random::{random_kernel_tensor, substream};
use super::{Check, Fit, Report, SweepRow};

/// Order of the principal-series sweep.
pub const PRINCIPAL_T: f64 = 2.0;
/// Order of the complementary `φ` sweep.
pub const PHI_T: f64 = 1.0;
/// The discrete order sum converges only for `t > n`; `n ≤ 5` needs `t = 6`.
pub const DISCRETE_T: f64 = 6.0;
/// Allowed growth of the regularity ratio under one window doubling.
pub const REGULARITY_GROWTH: f64 = 2.0;

/// `n` points from `a` to `b`, equally spaced in `log`.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Order sums over principal `ν = is`, `s ∈ [1, 100]`, and the fitted
/// exponent of the sum against `1 + μ`.
pub fn principal_sweep(points: usize) -> Result<(Vec<SweepRow>, Fit)> {
    let sums = log_space(1.0, 100.0, points)
        .par_iter()
        .map(|&s| Ok((s, dist_order_sum(&SeriesParam::principal(s)?, PRINCIPAL_T)?)))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<SweepRow> = sums
        .iter()
        .map(|(s, o)| SweepRow { param: format!("principal s={s:.6}"), value: o.value, bound: o.comparison, ratio: o.ratio })
        .collect();
    let x: Vec<f64> = sums.iter().map(|(s, _)| (1.0 + 0.25 + 0.25 * s * s).ln()).collect();
    let y: Vec<f64> = sums.iter().map(|(_, o)| o.value.ln()).collect();
    let fit = Fit { name: "principal_order_sum".into(), slope: fit_slope(&x, &y), expected: 0.5 - PRINCIPAL_T, points };
    Ok((rows, fit))
}

/// `Σ_± ‖φ±‖²` for complementary `ν` shrinking towards 0, ignoring the gates.
/// Returns the rows, the fitted exponent in `ν` and the number of rows
/// inside the excluded band `ν < eps0`.
pub fn phi_sweep(points: usize, eps0: f64) -> Result<(Vec<SweepRow>, Fit, usize)> {
    let nus = log_space(0.4, 0.005, points);
    let sums = nus.par_iter().map(|&nu| Ok(phi_sobolev_sum(&SeriesParam::complementary(nu)?, PHI_T))).collect::<Result<Vec<_>>>()?;
    let mut flagged = 0;
    let rows = nus
        .iter()
        .zip(&sums)
        .map(|(nu, s)| {
            let tag = if *nu < eps0 {
                flagged += 1;
                " below-eps0"
            } else {
                ""
            };
            SweepRow { param: format!("complementary nu={nu:.6}{tag}"), value: s.value, bound: s.bound, ratio: s.ratio }
        })
        .collect();
    // Fit on the small-ν half, where the ν⁻² term dominates.
    let tail = points / 2;
    let x: Vec<f64> = nus[tail..].iter().map(|nu| nu.ln()).collect();
    let y: Vec<f64> = sums[tail..].iter().map(|s| s.ratio.ln()).collect();
    let fit = Fit { name: "complementary_phi".into(), slope: fit_slope(&x, &y), expected: -2.0, points: points - tail };
    Ok((rows, fit, flagged))
}

/// Discrete order sums for `n = 1..=n_max` against `(1+μ+2n²)^{1/2-t}`.
pub fn discrete_sweep(n_max: u32) -> Result<Vec<SweepRow>> {
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let o = dist_order_sum(&SeriesParam::discrete(n)?, DISCRETE_T)?;
            Ok(SweepRow { param: format!("discrete n={n}"), value: o.value, bound: o.comparison, ratio: o.ratio })
        })
        .collect()
}

/// Largest `‖f_⊗‖_t / ‖f‖_{2t+1/2}` over `samples` random kernel inputs at
/// truncation `k_trunc`.
pub fn regularity_max(params: &MultiParam, k_trunc: usize, t: f64, samples: usize, seed: u64, stream: u64, decay_p: f64) -> Result<f64> {
    (0..samples as u64)
        .into_par_iter()
        .map(|s| regularity_check(&random_kernel_tensor(params, k_trunc, seed, substream(stream, s), decay_p)?, t))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

pub fn cmd_sweep_bounds(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let mut report = Report::new("sweep-bounds", cfg);

    let (rows, fit) = principal_sweep(25)?;
    report.rows.extend(rows);
    report.fits.push(fit);

    let (rows, fit, flagged) = phi_sweep(16, cfg.eps0)?;
    report.rows.extend(rows);
    report.fits.push(fit);
    report.summary.insert("phi_rows_below_eps0".into(), flagged as f64);

    let rows = discrete_sweep(5)?;
    let spread = rows.iter().map(|r| r.ratio).fold(0.0, f64::max) / rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    report.summary.insert("discrete_ratio_spread".into(), spread);
    report.rows.extend(rows);

    let t = cfg.t_list.first().copied().unwrap_or(1.0);
    if cfg.dim() >= 2 {
        for (i, (label, mp)) in cfg.multi_params()?.into_iter().enumerate() {
            let stream = substream(0x5eed, i as u64);
            let k = cfg.k_per_axis;
            let small = regularity_max(&mp, k, t, cfg.samples, cfg.seed, stream, cfg.decay_p)?;
            let large = regularity_max(&mp, 2 * k, t, cfg.samples, cfg.seed, stream, cfg.decay_p)?;
            report.rows.push(SweepRow { param: format!("regularity {label} K={k}"), value: small, bound: 1.0, ratio: small });
            report.rows.push(SweepRow { param: format!("regularity {label} K={}", 2 * k), value: large, bound: small, ratio: large / small });
            report.checks.push(Check::at_most("regularity_growth", label, large / small, REGULARITY_GROWTH));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let x: Vec<f64> = (1..10).map(|i| (i as f64).ln()).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 1.5 * v).collect();
        assert!((fit_slope(&x, &y) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(1.0, 100.0, 3);
        assert!((v[1] - 10.0).abs() < 1e-12 && (v[2] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn phi_ratio_blows_up_like_nu_to_minus_two() {
        let (rows, fit, flagged) = phi_sweep(12, 0.05).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(flagged > 0);
        assert!((fit.slope + 2.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn discrete_ratios_stay_bounded() {
        let rows = discrete_sweep(5).unwrap();
        for r in &rows {
            assert!(r.ratio.is_finite() && r.ratio > 0.0 && r.ratio < 1e3, "{r:?}");
        }
    }
}
