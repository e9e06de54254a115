//! Coboundary solvers: `U g = f` in one factor, the splitting
//! `f = f_⊗ + f_d` along the last axis, and the recursion that solves
//! `U₁g₁ + ⋯ + U_d g_d = f` on a tensor product.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{phi, DistTag};
use crate::error::{Error, Result};
use crate::linalg::BandedLeastSquares;
use crate::repn::{apply_u, basis_norms_sq, CoeffVector, IndexWindow, SeriesParam, C64, I};
use crate::tensor::{
    apply_u_factor, contract_last_axis, product_dist_evaluate, product_dist_scale, tensor_sobolev_norm, MultiParam,
    MultiTag, TensorCoeffs,
};

/// Sobolev-loss bookkeeping: `σ₁(t) = t + s₁`, `L(x) = 2x + c`, and the
/// base `ς₂(t) = t + varsigma2_offset` used by the lower-degree schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub s1: f64,
    pub c: f64,
    pub varsigma2_offset: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { s1: 3.0, c: 0.5, varsigma2_offset: 4.0 }
    }
}

impl Schedule {
    pub fn loss(&self, x: f64) -> f64 {
        2.0 * x + self.c
    }
}

/// `σ_d(t)`: `σ₁(t) = t + s₁`, `σ_d(t) = L(σ_{d-1}(t) + t)`.
pub fn sigma_schedule(t: f64, d: usize, schedule: &Schedule) -> f64 {
    assert!(d >= 1, "σ_d needs d ≥ 1");
    (1..d).fold(t + schedule.s1, |s, _| schedule.loss(s + t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Extra indices on each side of the input window for degree-1 solves.
    pub pad: usize,
    pub tol_kernel: f64,
    pub tol_residual: f64,
    /// Number of pad doublings tried before giving up.
    pub max_refine: usize,
    pub t_list: Vec<f64>,
    pub schedule: Schedule,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            pad: 8,
            tol_kernel: 1e-8,
            tol_residual: 1e-8,
            max_refine: 3,
            t_list: vec![1.0, 2.0],
            schedule: Schedule::default(),
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.pad < 2 {
            return Err(Error::Config(format!("pad must be at least 2, got {}", self.pad)));
        }
        if !(self.tol_kernel > 0.0 && self.tol_residual > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_refine == 0 {
            return Err(Error::Config("max_refine must be at least 1".into()));
        }
        if self.t_list.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("Sobolev orders must be positive".into()));
        }
        Ok(())
    }
}

/// `‖g_i‖_t / ‖f‖_{σ_d(t)}` for each component `g_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevRatio {
    pub t: f64,
    pub sigma: f64,
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// `‖Σ U_i g_i - f‖₀`.
    pub residual_interior: f64,
    pub f_norm0: f64,
    /// `max_• |D^•(f)|`.
    pub kernel_defect: f64,
    pub sobolev_ratios: Vec<SobolevRatio>,
    pub refinements_used: usize,
}

impl SolveReport {
    pub fn relative_residual(&self) -> f64 {
        if self.f_norm0 == 0.0 {
            self.residual_interior
        } else {
            self.residual_interior / self.f_norm0
        }
    }

    pub fn max_ratio(&self, t: f64) -> Option<f64> {
        self.sobolev_ratios
            .iter()
            .find(|r| r.t == t)
            .map(|r| r.ratios.iter().cloned().fold(0.0, f64::max))
    }
}

/// Rejects `f` unless every valid product distribution vanishes up to
/// `tol_kernel` times `max(‖f‖₀, Σ_k |f(k) D^•(u(k))|)`; returns the largest
/// `|D^•(f)|`.
pub fn check_kernel(f: &TensorCoeffs, tol_kernel: f64) -> Result<f64> {
    let norm = f.norm0();
    let mut defect: f64 = 0.0;
    for tag in MultiTag::all_valid(f.params()) {
        let v = product_dist_evaluate(f, &tag).norm();
        let allowed = tol_kernel * norm.max(product_dist_scale(f, &tag));
        if v > allowed {
            return Err(Error::NotInKernel { defect: v, allowed });
        }
        defect = defect.max(v);
    }
    Ok(defect)
}

/// Minimises `‖U g - f‖` over `g` supported on `g_window`, with the output
/// measured in the `W^s` norm (`s = 0` is the Hilbert norm). Returns the
/// minimiser and the minimal residual.
pub fn banded_primitive(f: &CoeffVector, g_window: IndexWindow, s: f64) -> Result<(CoeffVector, f64)> {
    let p = *f.param();
    let g_window = p.clip(g_window).ok_or(Error::InvalidWindow { lo: g_window.lo, hi: g_window.hi })?;
    let rows = p.clip(g_window.expand(1)).unwrap_or(g_window).union(&f.window());
    let norms = basis_norms_sq(&p, rows);
    let mu = p.mu();
    let row_weight = |j: i64| {
        let q = 1.0 + mu + 2.0 * (j as f64) * (j as f64);
        (q.powf(s) * norms[rows.offset(j)]).sqrt()
    };
    let col_scale = |k: i64| norms[rows.offset(k)].sqrt().recip();
    let mut ls = BandedLeastSquares::new(g_window.len(), 3);
    for j in rows.iter() {
        let wj = row_weight(j);
        let mut first = None;
        let mut vals = Vec::with_capacity(3);
        for k in j - 1..=j + 1 {
            if !g_window.contains(k) {
                continue;
            }
            let u = if k == j - 1 {
                -I * 0.5 * p.c_plus(k)
            } else if k == j {
                I * j as f64
            } else {
                I * 0.5 * p.c_minus(k)
            };
            first.get_or_insert(g_window.offset(k));
            vals.push(u * wj * col_scale(k));
        }
        let rhs = f.get(j) * wj;
        match first {
            Some(first) => ls.add_row(first, &vals, rhs),
            None => ls.add_row(0, &[], rhs),
        }
    }
    let x = ls
        .solve()
        .ok_or_else(|| Error::NoConvergence("rank-deficient degree-1 system".into()))?;
    let g: Vec<C64> = g_window.iter().zip(x).map(|(k, xk)| xk * col_scale(k)).collect();
    Ok((CoeffVector::new(p, g_window, g)?, ls.residual()))
}

fn restricted_diff_norm(a: &CoeffVector, b: &CoeffVector, w: IndexWindow) -> Result<f64> {
    Ok(a.axpy(C64::new(-1.0, 0.0), b)?.embed(w)?.norm0())
}

/// Degree-1 solve without the kernel precondition. Returns the solution and
/// the number of pad doublings used.
fn degree1_core(f: &CoeffVector, opts: &SolveOptions) -> Result<(CoeffVector, usize)> {
    let p = *f.param();
    let w = f.window();
    let first_window = p.clip(w.expand(opts.pad as i64)).unwrap_or(w);
    let f_norm = f.norm0();
    if f_norm == 0.0 {
        return Ok((CoeffVector::zeros(p, first_window)?, 0));
    }
    let mut prev: Option<(CoeffVector, bool)> = None;
    for j in 0..=opts.max_refine {
        let gw = p.clip(w.expand((opts.pad << j) as i64)).unwrap_or(w);
        let (g, _) = banded_primitive(f, gw, 0.0)?;
        let residual = apply_u(&g).axpy(C64::new(-1.0, 0.0), f)?.norm0();
        let ok = residual <= opts.tol_residual * f_norm;
        if let Some((p_g, p_ok)) = prev.take() {
            let diff = restricted_diff_norm(&g, &p_g, w)?;
            let stable = diff <= opts.tol_residual * p_g.embed(w)?.norm0().max(f_norm);
            if p_ok && stable {
                return Ok((p_g, j));
            }
        }
        prev = Some((g, ok));
    }
    Err(Error::NoConvergence(format!(
        "degree-1 solve on [{}, {}] did not stabilise after {} pad doublings",
        w.lo, w.hi, opts.max_refine
    )))
}

/// Solves `U g = f` in one irreducible factor.
pub fn solve_degree1(f: &CoeffVector, opts: &SolveOptions) -> Result<(CoeffVector, SolveReport)> {
    opts.validate()?;
    let params = MultiParam::single(*f.param())?;
    let ft = TensorCoeffs::from_vector(params, f)?;
    check_kernel(&ft, opts.tol_kernel)?;
    let (g, refinements) = degree1_core(f, opts)?;
    let gt = TensorCoeffs::from_vector(ft.params().clone(), &g)?;
    let mut report = verify_solution(&ft, std::slice::from_ref(&gt), &opts.t_list, &opts.schedule)?;
    report.refinements_used = refinements;
    Ok((g, report))
}

/// `f = f_⊗ + f_d` along the last axis, with `F_±(k) = Σ_m f(k,m) D^±(u(m))`.
#[derive(Clone, Debug)]
pub struct Split {
    pub f_otimes: TensorCoeffs,
    pub f_d: TensorCoeffs,
    pub f_plus: TensorCoeffs,
    /// Identically zero when the last factor is discrete.
    pub f_minus: TensorCoeffs,
}

impl Split {
    pub fn part(&self, tag: DistTag) -> &TensorCoeffs {
        match tag {
            DistTag::Plus => &self.f_plus,
            DistTag::Minus => &self.f_minus,
        }
    }
}

pub fn split(f: &TensorCoeffs) -> Result<Split> {
    let d = f.dim();
    if d < 2 {
        return Err(Error::InvalidAxis { axis: 1, rank: d });
    }
    let last = d - 1;
    let params = f.params();
    let p_last = *params.factor(last);
    let f_plus = contract_last_axis(f, DistTag::Plus)?;
    let f_minus = contract_last_axis(f, DistTag::Minus)?;
    let mut f_otimes = f_plus.insert_axis(params.clone(), last, &phi(&p_last, DistTag::Plus))?;
    if p_last.has_minus() {
        let minus = f_minus.insert_axis(params.clone(), last, &phi(&p_last, DistTag::Minus))?;
        f_otimes = f_otimes.add(&minus)?;
    }
    let f_d = f.sub(&f_otimes)?;
    Ok(Split { f_otimes, f_d, f_plus, f_minus })
}

/// Largest product-distribution defect over the slices `f_⊗(·, ℓ)` (first
/// `d-1` factors) and `f_d(k, ·)` (last factor), both of which vanish when
/// `f` lies in the joint kernel.
pub fn split_slice_defect(sp: &Split) -> Result<f64> {
    let d = sp.f_otimes.dim();
    let last = d - 1;
    let mut defect: f64 = 0.0;
    for l in sp.f_otimes.windows()[last].iter() {
        let slice = sp.f_otimes.slice(last, l)?;
        for tag in MultiTag::all_valid(slice.params()) {
            defect = defect.max(product_dist_evaluate(&slice, &tag).norm());
        }
    }
    let p_last = sp.f_d.params().factor(last);
    for &tag in DistTag::valid_for(p_last) {
        defect = defect.max(contract_last_axis(&sp.f_d, tag)?.max_abs());
    }
    Ok(defect)
}

fn union_all(gs: &[TensorCoeffs]) -> Vec<IndexWindow> {
    let mut w = gs[0].windows().to_vec();
    for g in &gs[1..] {
        w = w.iter().zip(g.windows()).map(|(a, b)| a.union(b)).collect();
    }
    w
}

fn solve_top_inner(f: &TensorCoeffs, opts: &SolveOptions) -> Result<(Vec<TensorCoeffs>, usize)> {
    let d = f.dim();
    let params = f.params();
    if d == 1 {
        let (g, r) = degree1_core(&f.to_vector()?, opts)?;
        return Ok((vec![TensorCoeffs::from_vector(params.clone(), &g)?], r));
    }
    let last = d - 1;
    let p_last = *params.factor(last);
    let sp = split(f)?;
    let mut refinements = 0;

    // f_⊗ slices are φ_±(ℓ)·F_±, so two recursive solves cover every ℓ.
    let mut lower: Vec<Option<TensorCoeffs>> = vec![None; last];
    for &tag in DistTag::valid_for(&p_last) {
        let part = sp.part(tag);
        if part.is_zero() {
            continue;
        }
        let (gs, r) = solve_top_inner(part, opts)?;
        refinements = refinements.max(r);
        let ph = phi(&p_last, tag);
        for (slot, gi) in lower.iter_mut().zip(&gs) {
            let lifted = gi.insert_axis(params.clone(), last, &ph)?;
            *slot = Some(match slot.take() {
                None => lifted,
                Some(acc) => acc.add(&lifted)?,
            });
        }
    }

    // f_d is solved line by line in the last factor.
    let fd = &sp.f_d;
    let w_last = fd.windows()[last];
    let lines: Vec<(CoeffVector, usize)> = fd
        .data()
        .par_chunks(w_last.len())
        .map(|chunk| degree1_core(&CoeffVector::new(p_last, w_last, chunk.to_vec())?, opts))
        .collect::<Result<_>>()?;
    let out_last = lines.iter().fold(lines[0].0.window(), |acc, (g, _)| acc.union(&g.window()));
    let mut data = Vec::with_capacity(lines.len() * out_last.len());
    for (g, r) in &lines {
        refinements = refinements.max(*r);
        data.extend_from_slice(g.embed(out_last)?.coeffs());
    }
    let mut last_windows = fd.windows().to_vec();
    last_windows[last] = out_last;
    let g_last = TensorCoeffs::new(params.clone(), last_windows, data)?;

    let mut gs: Vec<TensorCoeffs> = lower
        .into_iter()
        .map(|g| g.map_or_else(|| TensorCoeffs::zeros(params.clone(), g_last.windows().to_vec()), Ok))
        .collect::<Result<_>>()?;
    gs.push(g_last);
    let w = union_all(&gs);
    let gs = gs.iter().map(|g| g.embed(&w)).collect::<Result<_>>()?;
    Ok((gs, refinements))
}

/// Solves `U₁g₁ + ⋯ + U_d g_d = f` for `f` in the joint kernel of the
/// product distributions.
pub fn solve_top(f: &TensorCoeffs, opts: &SolveOptions) -> Result<(Vec<TensorCoeffs>, SolveReport)> {
    opts.validate()?;
    check_kernel(f, opts.tol_kernel)?;
    let (gs, refinements) = solve_top_inner(f, opts)?;
    let mut report = verify_solution(f, &gs, &opts.t_list, &opts.schedule)?;
    report.refinements_used = refinements;
    if report.relative_residual() > opts.tol_residual {
        return Err(Error::NoConvergence(format!(
            "top-degree residual {:e} exceeds {:e}",
            report.relative_residual(),
            opts.tol_residual
        )));
    }
    Ok((gs, report))
}

/// `Σ_i U_i g_i`.
pub fn coboundary(gs: &[TensorCoeffs]) -> Result<TensorCoeffs> {
    let mut acc: Option<TensorCoeffs> = None;
    for (i, g) in gs.iter().enumerate() {
        let ug = apply_u_factor(g, i)?;
        acc = Some(match acc {
            None => ug,
            Some(a) => a.add(&ug)?,
        });
    }
    acc.ok_or_else(|| Error::Schema("empty primitive".into()))
}

/// Residual, kernel defect and Sobolev ratios of a candidate primitive.
pub fn verify_solution(f: &TensorCoeffs, gs: &[TensorCoeffs], t_list: &[f64], schedule: &Schedule) -> Result<SolveReport> {
    if gs.len() != f.dim() {
        return Err(Error::Schema(format!("{} components for a rank-{} input", gs.len(), f.dim())));
    }
    let residual = coboundary(gs)?.sub(f)?.norm0();
    let kernel_defect = MultiTag::all_valid(f.params())
        .iter()
        .map(|t| product_dist_evaluate(f, t).norm())
        .fold(0.0, f64::max);
    let sobolev_ratios = t_list
        .iter()
        .map(|&t| {
            let sigma = sigma_schedule(t, f.dim(), schedule);
            let denom = tensor_sobolev_norm(f, sigma);
            let ratios = gs
                .iter()
                .map(|g| {
                    let num = tensor_sobolev_norm(g, t);
                    if denom == 0.0 {
                        if num == 0.0 { 0.0 } else { f64::INFINITY }
                    } else {
                        num / denom
                    }
                })
                .collect();
            SobolevRatio { t, sigma, ratios }
        })
        .collect();
    Ok(SolveReport {
        residual_interior: residual,
        f_norm0: f.norm0(),
        kernel_defect,
        sobolev_ratios,
        refinements_used: 0,
    })
}

/// `‖f_⊗‖_t / ‖f‖_{2t+1/2}`.
pub fn regularity_check(f: &TensorCoeffs, t: f64) -> Result<f64> {
    let sp = split(f)?;
    let denom = tensor_sobolev_norm(f, 2.0 * t + 0.5);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(tensor_sobolev_norm(&sp.f_otimes, t) / denom)
}

/// Smallest Sobolev order at which the residual of an obstructed problem is
/// measured: `D^±` must be bounded on `W^s`, which needs `s > 1/2` in the
/// principal and complementary series and `s > n` in the discrete series.
pub fn obstruction_order(p: &SeriesParam) -> f64 {
    match p.discrete_n() {
        Some(n) => n as f64 + 1.0,
        None => 1.0,
    }
}

/// Smallest `W^s` residual of `U g = f` over `g` supported on `g_window`.
/// When `D^±` is bounded on `W^s` (see [`obstruction_order`]) an `f` with
/// `D^±(f) ≠ 0` keeps this bounded below however large the window.
pub fn obstruction_residual(f: &CoeffVector, g_window: IndexWindow, s: f64) -> Result<f64> {
    Ok(banded_primitive(f, g_window, s)?.1)
}

/// Reduces a product obstruction to the first factor by pairing axes `1..d`
/// with `D^{•_j}`, which annihilates `U_j g_j` for `j ≥ 1`, and returns the
/// degree-1 residual there, at [`obstruction_order`], over the window
/// `[lo - K, hi + K]`.
pub fn product_obstruction_residual(f: &TensorCoeffs, tag: &MultiTag, k_trunc: usize) -> Result<f64> {
    let mut reduced = f.clone();
    for a in (1..f.dim()).rev() {
        reduced = contract_last_axis(&reduced, tag.signs[a])?;
    }
    let v = reduced.to_vector()?;
    let p = v.param();
    let gw = p.clip(v.window().expand(k_trunc as i64)).unwrap_or(v.window());
    obstruction_residual(&v, gw, obstruction_order(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::evaluate;
    use crate::tensor::{kernel_project, phi_product};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, p: SeriesParam, w: IndexWindow) -> CoeffVector {
        let norms = basis_norms_sq(&p, w);
        let coeffs = norms
            .iter()
            .map(|n| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) / n.sqrt())
            .collect();
        CoeffVector::new(p, w, coeffs).unwrap()
    }

    fn grid() -> Vec<SeriesParam> {
        vec![
            SeriesParam::principal(0.0).unwrap(),
            SeriesParam::principal(1.0).unwrap(),
            SeriesParam::principal(10.0).unwrap(),
            SeriesParam::complementary(0.5).unwrap(),
            SeriesParam::complementary(-0.9).unwrap(),
            SeriesParam::discrete(1).unwrap(),
            SeriesParam::discrete(5).unwrap(),
        ]
    }

    #[test]
    fn schedule_examples() {
        let s = Schedule::default();
        assert_eq!(sigma_schedule(2.0, 1, &s), 5.0);
        assert_eq!(sigma_schedule(2.0, 2, &s), 14.5);
        assert!(sigma_schedule(2.0, 3, &s) > sigma_schedule(1.0, 3, &s));
        assert!(sigma_schedule(1.0, 3, &s) > sigma_schedule(1.0, 2, &s));
    }

    #[test]
    fn degree1_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let opts = SolveOptions::default();
        for p in grid() {
            let g0 = rand_vec(&mut rng, p, p.window(40));
            let f = apply_u(&g0);
            let (g, report) = solve_degree1(&f, &opts).unwrap();
            assert!(report.relative_residual() <= 1e-10, "{p:?} {}", report.relative_residual());
            // U is injective on finite sequences, so the primitive is g0.
            let diff = g.axpy(C64::new(-1.0, 0.0), &g0).unwrap().norm0();
            assert!(diff <= 1e-8 * g0.norm0(), "{p:?} {diff}");
        }
    }

    #[test]
    fn degree1_zero_gives_zero() {
        let p = SeriesParam::principal(1.0).unwrap();
        let f = CoeffVector::zeros(p, p.window(5)).unwrap();
        let (g, report) = solve_degree1(&f, &SolveOptions::default()).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert_eq!(report.residual_interior, 0.0);
    }

    #[test]
    fn degree1_rejects_lowest_discrete_vector() {
        let p = SeriesParam::discrete(2).unwrap();
        let f = CoeffVector::basis(p, 2).unwrap();
        assert!(matches!(solve_degree1(&f, &SolveOptions::default()), Err(Error::NotInKernel { .. })));
    }

    #[test]
    fn obstruction_stays_away_from_zero() {
        for p in grid() {
            let s = obstruction_order(&p);
            // |D⁺(r)| ≤ ‖D⁺‖_{-s} ‖r‖_s and D⁺(Ug - f) = -1; the slack
            // covers the truncated tail of ‖D⁺‖²_{-s}.
            let w = p.window(200_000);
            let dual_sq: f64 = w
                .iter()
                .zip(basis_norms_sq(&p, w))
                .map(|(k, n)| (1.0 + p.mu() + 2.0 * (k * k) as f64).powf(-s) / n)
                .sum();
            let lower = 0.98 / dual_sq.sqrt();
            let f = phi(&p, DistTag::Plus);
            let a = obstruction_residual(&f, p.window(32), s).unwrap();
            let b = obstruction_residual(&f, p.window(64), s).unwrap();
            assert!(b >= lower * (1.0 - 1e-9), "{p:?} {b} {lower}");
            assert!(a >= b * (1.0 - 1e-9), "{p:?} {a} {b}");
        }
    }

    #[test]
    fn in_kernel_vector_has_no_obstruction() {
        let p = SeriesParam::complementary(0.5).unwrap();
        let g0 = CoeffVector::basis(p, 3).unwrap();
        let f = apply_u(&g0);
        assert!(evaluate(DistTag::Minus, &f).norm() < 1e-14);
        assert!(obstruction_residual(&f, p.window(10), 1.0).unwrap() < 1e-12);
    }

    fn params2() -> MultiParam {
        MultiParam::with_default_gates(vec![
            SeriesParam::principal(1.0).unwrap(),
            SeriesParam::principal(2.0).unwrap(),
        ])
        .unwrap()
    }

    fn random_tensor(rng: &mut ChaCha8Rng, params: &MultiParam, k: usize) -> TensorCoeffs {
        let w = params.default_windows(k);
        let mut data = Vec::new();
        crate::tensor::for_each_index(&w, |_, idx| {
            let q: f64 = idx.iter().map(|&x| 1.0 + (x * x) as f64).product();
            data.push(C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) / q);
        });
        TensorCoeffs::new(params.clone(), w, data).unwrap()
    }

    #[test]
    fn split_of_phi_product() {
        let params = MultiParam::with_default_gates(vec![
            SeriesParam::complementary(0.5).unwrap(),
            SeriesParam::principal(0.0).unwrap(),
        ])
        .unwrap();
        for tag in MultiTag::all_valid(&params) {
            let f = phi_product(&params, &tag).unwrap();
            let sp = split(&f).unwrap();
            assert!(sp.f_d.max_abs() <= 1e-14);
            assert!(sp.f_otimes.sub(&f).unwrap().max_abs() <= 1e-14);
        }
    }

    #[test]
    fn split_is_exact_and_slices_are_in_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = params2();
        let f = kernel_project(&random_tensor(&mut rng, &params, 12)).unwrap();
        let sp = split(&f).unwrap();
        let back = sp.f_otimes.add(&sp.f_d).unwrap().sub(&f).unwrap();
        assert!(back.max_abs() <= 1e-14 * f.max_abs());
        assert!(split_slice_defect(&sp).unwrap() <= 1e-10 * f.norm0());
    }

    #[test]
    fn top_degree_round_trip_d2() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = MultiParam::with_default_gates(vec![
            SeriesParam::complementary(0.5).unwrap(),
            SeriesParam::discrete(2).unwrap(),
        ])
        .unwrap();
        let h: Vec<TensorCoeffs> = (0..2).map(|_| random_tensor(&mut rng, &params, 10)).collect();
        let f = coboundary(&h).unwrap();
        let (g, report) = solve_top(&f, &SolveOptions::default()).unwrap();
        assert_eq!(g.len(), 2);
        assert!(report.relative_residual() <= 1e-8);
        assert_eq!(report.sobolev_ratios.len(), 2);
    }

    #[test]
    fn top_degree_rejects_phi_product() {
        let params = params2();
        let f = phi_product(&params, &MultiTag::new(vec![DistTag::Minus, DistTag::Plus])).unwrap();
        assert!(matches!(solve_top(&f, &SolveOptions::default()), Err(Error::NotInKernel { .. })));
    }

    #[test]
    fn verify_zero_primitive() {
        let params = params2();
        let f = TensorCoeffs::basis(params.clone(), &[1, 1]).unwrap();
        let g = vec![TensorCoeffs::zeros(params.clone(), f.windows().to_vec()).unwrap(); 2];
        let r = verify_solution(&f, &g, &[1.0], &Schedule::default()).unwrap();
        assert!((r.residual_interior - f.norm0()).abs() < 1e-15);
        assert!(r.kernel_defect > 0.0);
    }

    #[test]
    fn regularity_zero_when_parts_vanish() {
        let params = params2();
        // Last-axis slices that are coboundaries give F_± = 0.
        let a = CoeffVector::basis(*params.factor(0), 0).unwrap();
        let v = apply_u(&CoeffVector::basis(*params.factor(1), 3).unwrap());
        let f = TensorCoeffs::outer(params, &[a, v]).unwrap();
        assert!(regularity_check(&f, 1.0).unwrap() <= 1e-15);
    }

    #[test]
    fn options_validation() {
        let bad = SolveOptions { pad: 1, ..SolveOptions::default() };
        assert!(bad.validate().is_err());
        let bad = SolveOptions { tol_residual: 0.0, ..SolveOptions::default() };
        assert!(bad.validate().is_err());
    }
}
