//! The invariant suites behind `verify-invariants`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::distributions::exact::{self, ExactParam};
use crate::distributions::{dist_values, evaluate, phi_pairing_matrix, DistTag};
use crate::error::Result;
use crate::forms::exterior_derivative;
use crate::repn::{apply_u_with, inner_product, q_unchecked, sobolev_norm, CoeffVector, SeriesParam, C64};
use crate::tensor::{
    apply_u_factor, for_each_index, kernel_project, product_dist_evaluate, product_dist_scale, restrict,
    tensor_sobolev_norm, MultiParam, MultiTag, TensorCoeffs,
};

use super::config::ExperimentConfig;
use super::random::{random_form, random_tensor, substream};
use super::{Check, Report};

/// Ladder coefficients `(c⁺(k), c⁻(k))` used to build `U`.
pub type Ladder = fn(&SeriesParam, i64) -> (C64, C64);

pub fn standard_ladder(p: &SeriesParam, k: i64) -> (C64, C64) {
    (p.c_plus(k), p.c_minus(k))
}

const TOL: f64 = 1e-12;
const TOL_DUALITY: f64 = 1e-13;

fn apply_ladder(u: &CoeffVector, ladder: Ladder) -> CoeffVector {
    let p = *u.param();
    apply_u_with(u, |k| ladder(&p, k).0, |k| ladder(&p, k).1)
}

/// `max_k |D(U u(k))| / Σ_j |(U u(k))_j D(u(j))|` over the window.
pub fn invariance_defect(p: &SeriesParam, tag: DistTag, k_trunc: usize, ladder: Ladder) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in p.window(k_trunc).iter() {
        let uu = apply_ladder(&CoeffVector::basis(*p, k)?, ladder);
        let dv = dist_values(p, tag, uu.window());
        let scale: f64 = uu.coeffs().iter().zip(&dv).map(|(a, b)| (a * b).norm()).sum();
        if scale > 0.0 {
            worst = worst.max(evaluate(tag, &uu).norm() / scale);
        }
    }
    Ok(worst)
}

/// `max |⟨U u(j), u(k)⟩ + ⟨u(j), U u(k)⟩|`, normalised by the size of the
/// two terms, over neighbouring pairs in the window.
pub fn unitarity_defect(p: &SeriesParam, k_trunc: usize, ladder: Ladder) -> Result<f64> {
    let w = p.window(k_trunc);
    let mut worst = 0.0f64;
    for k in w.iter() {
        let uk = CoeffVector::basis(*p, k)?;
        let uuk = apply_ladder(&uk, ladder);
        for j in (k - 1..=k + 1).filter(|j| w.contains(*j)) {
            let uj = CoeffVector::basis(*p, j)?;
            let uuj = apply_ladder(&uj, ladder);
            let lhs = inner_product(&uuj, &uk)? + inner_product(&uj, &uuk)?;
            let scale = sobolev_norm(&uuj, 0.0) * sobolev_norm(&uk, 0.0) + sobolev_norm(&uj, 0.0) * sobolev_norm(&uuk, 0.0);
            worst = worst.max(lhs.norm() / scale);
        }
    }
    Ok(worst)
}

/// Largest entry of `[D^a(φ_b)] - diag(1, 1 or 0)`.
pub fn duality_defect(p: &SeriesParam) -> f64 {
    let m = phi_pairing_matrix(p);
    let minus = if p.has_minus() { 1.0 } else { 0.0 };
    let target = [[1.0, 0.0], [0.0, minus]];
    (0..2)
        .flat_map(|a| (0..2).map(move |b| (a, b)))
        .map(|(a, b)| (m[a][b] - C64::new(target[a][b], 0.0)).norm())
        .fold(0.0, f64::max)
}

/// Number of failures of the rational-arithmetic identities at `ν = 0`,
/// `ν = 1/2` and the discrete series `n = 2` (`ν = 3`).
pub fn exact_failures(k_range: i64) -> usize {
    let params = [ExactParam::PrincipalZero, ExactParam::complementary(1, 2), ExactParam::Discrete { n: 2 }];
    let mut failures = 0;
    for p in &params {
        let lo = p.lowest_index().unwrap_or(-k_range);
        for k in lo..=k_range {
            for tag in DistTag::BOTH {
                if !num_traits::Zero::is_zero(&exact::invariance_defect(p, tag, k)) {
                    failures += 1;
                }
            }
        }
        let m = exact::pairing_matrix(p);
        let minus_ok = if p.has_minus() { num_traits::One::is_one(&m[1][1]) } else { num_traits::Zero::is_zero(&m[1][1]) };
        let ok = num_traits::One::is_one(&m[0][0])
            && num_traits::Zero::is_zero(&m[0][1])
            && num_traits::Zero::is_zero(&m[1][0])
            && minus_ok;
        if !ok {
            failures += 1;
        }
    }
    failures
}

/// `max_• |D^•(f)| / max(‖f‖₀, Σ|f||D^•|)`.
pub fn relative_kernel_defect(f: &TensorCoeffs) -> f64 {
    MultiTag::all_valid(f.params())
        .iter()
        .map(|t| product_dist_evaluate(f, t).norm() / f.norm0().max(product_dist_scale(f, t)).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Worst `‖f|_{k_j..k_d}‖_τ / ‖f‖_τ` over suffix restrictions of every length
/// that leaves at least one free axis.
pub fn suffix_restriction_ratio(f: &TensorCoeffs, tau: f64) -> Result<f64> {
    let d = f.dim();
    let full = tensor_sobolev_norm(f, tau);
    let mut worst = 0.0f64;
    for j in 1..d {
        let ws = &f.windows()[j..];
        let mut err = None;
        for_each_index(ws, |_, ks| {
            if err.is_some() {
                return;
            }
            let fixed: BTreeMap<usize, i64> = ks.iter().enumerate().map(|(i, &k)| (j + i, k)).collect();
            match restrict(f, &fixed) {
                Ok(r) => worst = worst.max(tensor_sobolev_norm(&r, tau) / full),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(worst)
}

/// `Σ_k (1+Q_j(k))^τ ‖f|_{k_j = k}‖_σ² / ‖f‖_{τ+σ}²` for one axis.
pub fn axis_restriction_ratio(f: &TensorCoeffs, axis: usize, tau: f64, sigma: f64) -> Result<f64> {
    let p = f.params().factor(axis);
    let mut lhs = 0.0;
    for k in f.windows()[axis].iter() {
        let r = restrict(f, &BTreeMap::from([(axis, k)]))?;
        lhs += (1.0 + q_unchecked(p.mu(), k)).powf(tau) * tensor_sobolev_norm(&r, sigma).powi(2);
    }
    Ok(lhs / tensor_sobolev_norm(f, tau + sigma).powi(2))
}

/// `max_{•, j} |D^•(U_j f)| / Σ|U_j f||D^•|`.
pub fn axis_invariance_defect(f: &TensorCoeffs) -> Result<f64> {
    let mut worst = 0.0f64;
    for axis in 0..f.dim() {
        let uf = apply_u_factor(f, axis)?;
        for tag in MultiTag::all_valid(f.params()) {
            let scale = product_dist_scale(&uf, &tag);
            if scale > 0.0 {
                worst = worst.max(product_dist_evaluate(&uf, &tag).norm() / scale);
            }
        }
    }
    Ok(worst)
}

/// `‖d d η‖₀ / ‖η‖₂` over random forms of each degree `0..=d-2`.
pub fn dd_defect(params: &MultiParam, k_trunc: usize, seed: u64, stream: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 0..params.dim().saturating_sub(1) {
        let eta = random_form(params, n, k_trunc, seed, substream(stream, n as u64), 0.0)?;
        let dd = exterior_derivative(&exterior_derivative(&eta)?)?;
        worst = worst.max(dd.norm0() / eta.sobolev_norm(2.0));
    }
    Ok(worst)
}

#[derive(Default)]
struct Worst(BTreeMap<&'static str, f64>);

impl Worst {
    fn add(&mut self, name: &'static str, v: f64) {
        let e = self.0.entry(name).or_insert(0.0);
        *e = e.max(v);
    }
}

fn component_checks(label: &str, params: &MultiParam, cfg: &ExperimentConfig, stream: u64) -> Result<Vec<Check>> {
    let windows = params.default_windows(cfg.k_per_axis);
    let mut worst = Worst::default();
    for s in 0..cfg.samples as u64 {
        let sub = substream(stream, s);
        let raw = random_tensor(params, &windows, cfg.seed, sub, cfg.decay_p)?;
        let f = kernel_project(&raw)?;
        worst.add("kernel_projection", relative_kernel_defect(&f));
        let again = kernel_project(&f)?;
        worst.add("projection_idempotence", again.sub(&f)?.norm0() / f.norm0());
        worst.add("axis_invariance", axis_invariance_defect(&raw)?);
        for tau in [0.0, 1.0, 2.0] {
            worst.add("restriction_suffix", suffix_restriction_ratio(&raw, tau)? - 1.0);
        }
        for axis in 0..params.dim() {
            for (tau, sigma) in [(1.0, 0.0), (1.0, 1.0), (2.0, 1.0)] {
                worst.add("restriction_axis", axis_restriction_ratio(&raw, axis, tau, sigma)? - 1.0);
            }
        }
    }
    worst.add("dd_zero", dd_defect(params, cfg.k_per_axis.min(8), cfg.seed, stream)?);
    let thresholds = [
        ("kernel_projection", TOL),
        ("projection_idempotence", TOL_DUALITY),
        ("axis_invariance", TOL),
        ("restriction_suffix", TOL),
        ("restriction_axis", TOL),
        ("dd_zero", TOL),
    ];
    Ok(thresholds
        .iter()
        .map(|(name, th)| Check::at_most(name, label, worst.0.get(name).copied().unwrap_or(0.0), *th))
        .collect())
}

fn factor_checks(p: &SeriesParam, k_trunc: usize, ladder: Ladder) -> Result<Vec<Check>> {
    let subject = format!("{p}");
    let mut out = Vec::new();
    for &tag in DistTag::valid_for(p) {
        let name = match tag {
            DistTag::Plus => "invariance_plus",
            DistTag::Minus => "invariance_minus",
        };
        out.push(Check::at_most(name, subject.clone(), invariance_defect(p, tag, k_trunc, ladder)?, TOL));
    }
    out.push(Check::at_most("unitarity", subject.clone(), unitarity_defect(p, k_trunc, ladder)?, TOL));
    out.push(Check::at_most("phi_duality", subject, duality_defect(p), TOL_DUALITY));
    Ok(out)
}

/// Runs every suite with the standard ladder.
pub fn cmd_verify_invariants(cfg: &ExperimentConfig) -> Result<Report> {
    cmd_verify_invariants_with(cfg, standard_ladder)
}

/// Runs every suite; `ladder` replaces the coefficients of `U` in the
/// per-factor checks so that faults can be injected.
pub fn cmd_verify_invariants_with(cfg: &ExperimentConfig, ladder: Ladder) -> Result<Report> {
    cfg.validate()?;
    let components = cfg.multi_params()?;
    let mut factors: Vec<SeriesParam> = Vec::new();
    for (_, mp) in &components {
        for p in mp.factors() {
            if !factors.iter().any(|q| q.same_as(p)) {
                factors.push(*p);
            }
        }
    }
    let k_unit = cfg.k_per_axis.max(64);
    let per_factor: Vec<Vec<Check>> = factors.par_iter().map(|p| factor_checks(p, k_unit, ladder)).collect::<Result<_>>()?;
    let per_component: Vec<Vec<Check>> = components
        .par_iter()
        .enumerate()
        .map(|(i, (label, mp))| component_checks(label, mp, cfg, i as u64))
        .collect::<Result<_>>()?;

    let mut report = Report::new("verify-invariants", cfg);
    report.checks.extend(per_factor.into_iter().flatten());
    report.checks.push(Check::at_most("exact_identities", "nu in {0, 1/2, 3}", exact_failures(30) as f64, 0.0));
    report.checks.extend(per_component.into_iter().flatten());
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    report.summary.insert("checks".into(), report.checks.len() as f64);
    report.summary.insert("failed".into(), failed as f64);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<SeriesParam> {
        let mut v = vec![
            SeriesParam::principal(0.0).unwrap(),
            SeriesParam::principal(1.0).unwrap(),
            SeriesParam::principal(10.0).unwrap(),
        ];
        for nu in [0.1, 0.5, 0.9] {
            v.push(SeriesParam::complementary(nu).unwrap());
            v.push(SeriesParam::complementary(-nu).unwrap());
        }
        for n in [1, 2, 5] {
            v.push(SeriesParam::discrete(n).unwrap());
        }
        v
    }

    fn flipped(p: &SeriesParam, k: i64) -> (C64, C64) {
        (p.c_plus(k), -p.c_minus(k))
    }

    #[test]
    fn suites_pass_on_the_grid() {
        for p in grid() {
            for c in factor_checks(&p, 64, standard_ladder).unwrap() {
                assert!(c.passed, "{c:?}");
            }
        }
        assert_eq!(exact_failures(20), 0);
    }

    #[test]
    fn flipped_lowering_sign_is_caught() {
        let p = SeriesParam::complementary(0.5).unwrap();
        assert!(invariance_defect(&p, DistTag::Minus, 16, flipped).unwrap() > 1e-3);
    }

    #[test]
    fn restriction_ratios_are_at_most_one() {
        let mp = MultiParam::with_default_gates(vec![
            SeriesParam::discrete(2).unwrap(),
            SeriesParam::principal(1.0).unwrap(),
            SeriesParam::complementary(0.3).unwrap(),
        ])
        .unwrap();
        let f = random_tensor(&mp, &mp.default_windows(5), 3, 0, 1.0).unwrap();
        assert!(suffix_restriction_ratio(&f, 1.0).unwrap() <= 1.0 + 1e-12);
        for axis in 0..3 {
            let r = axis_restriction_ratio(&f, axis, 1.0, 1.0).unwrap();
            assert!(r <= 1.0 + 1e-12 && r > 0.0);
        }
    }

    #[test]
    fn empty_components_are_a_config_error() {
        let cfg = ExperimentConfig::from_json(r#"{"components":[]}"#);
        assert!(cfg.is_err() || cmd_verify_invariants(&cfg.unwrap()).is_err());
    }
}
