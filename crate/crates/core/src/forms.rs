//! Leafwise forms of the `R^d`-action generated by `U₀, …, U_{d-1}`: the
//! exterior derivative, restriction to slices, and primitives of closed
//! forms of degree `1 ≤ n ≤ d - 1`.
//!
//! A form of degree `n` is stored as one coefficient tensor per increasing
//! `n`-tuple of axes, all on a common box.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lsqr;
use crate::repn::{IndexWindow, C64};
use crate::solver::{sigma_schedule, solve_top, Schedule, SolveOptions};
use crate::tensor::{apply_u_factor, restrict, scale_by_norms, tensor_sobolev_norm, MultiParam, TensorCoeffs};

/// Increasing `n`-subsets of `0..d`, in lexicographic order.
pub fn tuples(d: usize, n: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, d: usize, n: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if acc.len() == n {
            out.push(acc.clone());
            return;
        }
        for i in start..d {
            acc.push(i);
            go(i + 1, d, n, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(0, d, n, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeafwiseForm {
    degree: usize,
    params: MultiParam,
    components: BTreeMap<Vec<usize>, TensorCoeffs>,
}

fn union_windows<'a>(it: impl Iterator<Item = &'a TensorCoeffs>) -> Option<Vec<IndexWindow>> {
    it.fold(None, |acc: Option<Vec<IndexWindow>>, c| {
        Some(match acc {
            None => c.windows().to_vec(),
            Some(w) => w.iter().zip(c.windows()).map(|(a, b)| a.union(b)).collect(),
        })
    })
}

impl LeafwiseForm {
    /// Builds a form from its components, embedding them into a common box.
    pub fn new(degree: usize, params: MultiParam, components: BTreeMap<Vec<usize>, TensorCoeffs>) -> Result<Self> {
        let d = params.dim();
        if degree > d {
            return Err(Error::InvalidDegree { degree, dim: d, reason: "degree exceeds the dimension" });
        }
        let expected = tuples(d, degree);
        if components.len() != expected.len() || !expected.iter().all(|t| components.contains_key(t)) {
            return Err(Error::Schema(format!(
                "a degree-{degree} form on {d} axes needs the components {expected:?}"
            )));
        }
        if components.values().any(|c| !c.params().same_as(&params)) {
            return Err(Error::ParamMismatch);
        }
        let w = union_windows(components.values()).ok_or_else(|| Error::Schema("no components".into()))?;
        let components = components
            .into_iter()
            .map(|(k, c)| Ok((k, c.embed(&w)?)))
            .collect::<Result<_>>()?;
        Ok(Self { degree, params, components })
    }

    pub fn zero(degree: usize, params: MultiParam, windows: Vec<IndexWindow>) -> Result<Self> {
        let z = TensorCoeffs::zeros(params.clone(), windows)?;
        let components = tuples(params.dim(), degree).into_iter().map(|t| (t, z.clone())).collect();
        Self::new(degree, params, components)
    }

    /// A 0-form.
    pub fn function(f: TensorCoeffs) -> Self {
        let params = f.params().clone();
        Self { degree: 0, params, components: BTreeMap::from([(Vec::new(), f)]) }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn params(&self) -> &MultiParam {
        &self.params
    }

    pub fn windows(&self) -> &[IndexWindow] {
        self.components.values().next().expect("forms have at least one component").windows()
    }

    pub fn components(&self) -> &BTreeMap<Vec<usize>, TensorCoeffs> {
        &self.components
    }

    pub fn component(&self, axes: &[usize]) -> Option<&TensorCoeffs> {
        self.components.get(axes)
    }

    pub fn sobolev_norm(&self, t: f64) -> f64 {
        self.components.values().map(|c| tensor_sobolev_norm(c, t).powi(2)).sum::<f64>().sqrt()
    }

    pub fn norm0(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    pub fn axpy(&self, a: C64, other: &LeafwiseForm) -> Result<Self> {
        if self.degree != other.degree {
            return Err(Error::InvalidDegree { degree: other.degree, dim: self.dim(), reason: "degrees differ" });
        }
        let components = self
            .components
            .iter()
            .map(|(k, c)| Ok((k.clone(), c.axpy(a, &other.components[k])?)))
            .collect::<Result<_>>()?;
        Self::new(self.degree, self.params.clone(), components)
    }

    pub fn sub(&self, other: &LeafwiseForm) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }
}

/// `(dω)(i₀,…,i_n) = Σ_j (-1)^j U_{i_j} ω(i₀,…,î_j,…,i_n)`.
pub fn exterior_derivative(omega: &LeafwiseForm) -> Result<LeafwiseForm> {
    let d = omega.dim();
    let n = omega.degree;
    if n >= d {
        return Err(Error::InvalidDegree { degree: n, dim: d, reason: "no forms above the top degree" });
    }
    let mut components = BTreeMap::new();
    for tuple in tuples(d, n + 1) {
        let mut acc: Option<TensorCoeffs> = None;
        for (j, &axis) in tuple.iter().enumerate() {
            let mut rest = tuple.clone();
            rest.remove(j);
            let term = apply_u_factor(&omega.components[&rest], axis)?;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc = Some(match acc {
                None => term.scale(C64::new(sign, 0.0)),
                Some(a) => a.axpy(C64::new(sign, 0.0), &term)?,
            });
        }
        components.insert(tuple, acc.expect("tuples are non-empty"));
    }
    LeafwiseForm::new(n + 1, omega.params.clone(), components)
}

/// `‖dω‖₀ / ‖ω‖₀` (zero for `ω = 0`) and whether it is within `tol`.
/// Top-degree forms are closed.
pub fn is_closed(omega: &LeafwiseForm, tol: f64) -> Result<(bool, f64)> {
    let norm = omega.norm0();
    if norm == 0.0 || omega.degree == omega.dim() {
        return Ok((true, 0.0));
    }
    let defect = exterior_derivative(omega)?.norm0() / norm;
    Ok((defect <= tol, defect))
}

fn drop_axis(tuple: &[usize], axis: usize) -> Vec<usize> {
    tuple.iter().map(|&i| if i > axis { i - 1 } else { i }).collect()
}

fn restrict_with(
    omega: &LeafwiseForm,
    axis: usize,
    mut cut: impl FnMut(&TensorCoeffs) -> Result<TensorCoeffs>,
) -> Result<LeafwiseForm> {
    let d = omega.dim();
    omega.params.check_axis(axis)?;
    if d < 2 || omega.degree >= d {
        return Err(Error::InvalidDegree { degree: omega.degree, dim: d, reason: "every component involves the axis" });
    }
    let params = omega.params.without(axis)?;
    let mut components = BTreeMap::new();
    for (tuple, c) in &omega.components {
        if !tuple.contains(&axis) {
            components.insert(drop_axis(tuple, axis), cut(c)?);
        }
    }
    LeafwiseForm::new(omega.degree, params, components)
}

/// `(ω_ℓ|_k)`: the components avoiding `axis`, each restricted at index `k`
/// (coefficients scaled by `‖u(k)‖`), as a form on the remaining axes.
pub fn restrict_form(omega: &LeafwiseForm, axis: usize, k: i64) -> Result<LeafwiseForm> {
    let fixed = BTreeMap::from([(axis, k)]);
    restrict_with(omega, axis, |c| restrict(c, &fixed))
}

/// Like [`restrict_form`] without the norm factor; zero outside the box.
pub fn slice_form(omega: &LeafwiseForm, axis: usize, k: i64) -> Result<LeafwiseForm> {
    restrict_with(omega, axis, |c| c.slice(axis, k))
}

/// `ς_d(t)`: `ς₂(t) = t + offset` and
/// `ς_d(t) = max{ς_{d-1}(ς_{d-1}(t)+t+1), ς_{d-1}(t)+t, σ_{d-1}(t)+t}`.
pub fn varsigma_schedule(t: f64, d: usize, schedule: &Schedule) -> f64 {
    assert!(d >= 2, "ς_d needs d ≥ 2");
    if d == 2 {
        return t + schedule.varsigma2_offset;
    }
    let prev = varsigma_schedule(t, d - 1, schedule);
    let a = varsigma_schedule(prev + t + 1.0, d - 1, schedule);
    let b = prev + t;
    let c = sigma_schedule(t, d - 1, schedule) + t;
    a.max(b).max(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormRatio {
    pub t: f64,
    pub varsigma: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormReport {
    /// `‖dη - ω‖₀`.
    pub residual: f64,
    pub omega_norm0: f64,
    pub closed_defect: f64,
    /// Largest `‖θ‖₀/‖ω‖₀` met in a degree-1 branch.
    pub theta_defect: f64,
    pub used_joint_fallback: bool,
    pub sobolev_ratios: Vec<FormRatio>,
}

impl FormReport {
    pub fn relative_residual(&self) -> f64 {
        if self.omega_norm0 == 0.0 {
            self.residual
        } else {
            self.residual / self.omega_norm0
        }
    }
}

#[derive(Default)]
struct Diagnostics {
    theta_defect: f64,
    fallback: bool,
}

impl Diagnostics {
    fn merge(&mut self, other: Diagnostics) {
        self.theta_defect = self.theta_defect.max(other.theta_defect);
        self.fallback |= other.fallback;
    }
}

/// Stacks per-index forms on the remaining axes back along axis 0,
/// re-inserting axis 0 into every tuple.
fn stack_axis0(params: &MultiParam, window: IndexWindow, slices: &[LeafwiseForm], prefix_zero: bool) -> Result<BTreeMap<Vec<usize>, TensorCoeffs>> {
    let mut out = BTreeMap::new();
    for tuple in slices[0].components.keys() {
        let parts: Vec<TensorCoeffs> = slices.iter().map(|s| s.components[tuple].clone()).collect();
        let stacked = TensorCoeffs::stack(params.clone(), 0, window, &parts)?;
        let mut lifted: Vec<usize> = tuple.iter().map(|i| i + 1).collect();
        if prefix_zero {
            lifted.insert(0, 0);
        }
        out.insert(lifted, stacked);
    }
    Ok(out)
}

fn zero_components(params: &MultiParam, degree: usize, windows: &[IndexWindow], into: &mut BTreeMap<Vec<usize>, TensorCoeffs>) -> Result<()> {
    for t in tuples(params.dim(), degree) {
        if let std::collections::btree_map::Entry::Vacant(e) = into.entry(t) {
            e.insert(TensorCoeffs::zeros(params.clone(), windows.to_vec())?);
        }
    }
    Ok(())
}

/// Top-degree primitive on `d` factors: `η(omit j) = (-1)^j g_j`.
fn top_primitive(omega: &LeafwiseForm, opts: &SolveOptions) -> Result<LeafwiseForm> {
    let d = omega.dim();
    let f = &omega.components[&(0..d).collect::<Vec<_>>()];
    if f.is_zero() {
        return LeafwiseForm::zero(d - 1, omega.params.clone(), omega.windows().to_vec());
    }
    let inner = SolveOptions { tol_residual: f64::INFINITY, tol_kernel: f64::INFINITY, ..opts.clone() };
    let (gs, _) = solve_top(f, &inner)?;
    let mut components = BTreeMap::new();
    for (j, g) in gs.into_iter().enumerate() {
        let mut tuple: Vec<usize> = (0..d).collect();
        tuple.remove(j);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        components.insert(tuple, g.scale(C64::new(sign, 0.0)));
    }
    LeafwiseForm::new(d - 1, omega.params.clone(), components)
}

fn primitive_inner(omega: &LeafwiseForm, opts: &SolveOptions, scale: f64) -> Result<(LeafwiseForm, Diagnostics)> {
    let d = omega.dim();
    let n = omega.degree;
    let params = &omega.params;
    let mut diag = Diagnostics::default();
    if n == d {
        return Ok((top_primitive(omega, opts)?, diag));
    }

    // η₁ from the slices of the part of ω that forgets axis 0.
    let w0 = omega.windows()[0];
    let slices: Vec<LeafwiseForm> = w0.iter().map(|k| slice_form(omega, 0, k)).collect::<Result<_>>()?;
    let solved: Vec<(LeafwiseForm, Diagnostics)> =
        slices.par_iter().map(|s| primitive_inner(s, opts, scale)).collect::<Result<_>>()?;
    let mut eta1_slices = Vec::with_capacity(solved.len());
    for (e, dg) in solved {
        diag.merge(dg);
        eta1_slices.push(e);
    }
    let mut eta1 = stack_axis0(params, w0, &eta1_slices, false)?;
    let w_eta1 = union_windows(eta1.values()).expect("non-empty");
    zero_components(params, n - 1, &w_eta1, &mut eta1)?;
    let eta1 = LeafwiseForm::new(n - 1, params.clone(), eta1)?;

    // θ(I') = ω(0, I') - U₀ η₁(I'), a form on axes 1.. with axis 0 as a parameter.
    let mut theta = BTreeMap::new();
    for tuple in tuples(d, n).into_iter().filter(|t| t.first() == Some(&0)) {
        let rest = tuple[1..].to_vec();
        let u0 = apply_u_factor(&eta1.components[&rest], 0)?;
        theta.insert(rest, omega.components[&tuple].sub(&u0)?);
    }

    if n == 1 {
        let th = &theta[&Vec::new()];
        let defect = th.norm0() / scale;
        diag.theta_defect = diag.theta_defect.max(defect);
        if defect <= opts.tol_residual {
            return Ok((eta1, diag));
        }
        if defect <= 1e3 * opts.tol_residual {
            let eta = joint_correction(omega, &eta1, opts)?;
            let remaining = exterior_derivative(&eta)?.sub(omega)?.norm0() / scale;
            if remaining <= opts.tol_residual {
                diag.fallback = true;
                return Ok((eta, diag));
            }
        }
        return Err(Error::ThetaNotVanishing { defect, allowed: opts.tol_residual });
    }

    // θ as a degree-(n-1) form on d factors whose components all avoid axis 0;
    // each slice at axis 0 is closed on the remaining factors.
    let theta_full: BTreeMap<Vec<usize>, TensorCoeffs> = theta;
    let w_theta = union_windows(theta_full.values()).expect("non-empty");
    let theta_slices: Vec<LeafwiseForm> = w_theta[0]
        .iter()
        .map(|k| {
            let comps = theta_full
                .iter()
                .map(|(t, c)| Ok((drop_axis(t, 0), c.embed(&w_theta)?.slice(0, k)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            LeafwiseForm::new(n - 1, params.without(0)?, comps)
        })
        .collect::<Result<_>>()?;
    let zetas: Vec<(LeafwiseForm, Diagnostics)> =
        theta_slices.par_iter().map(|s| primitive_inner(s, opts, scale)).collect::<Result<_>>()?;
    let mut zeta_slices = Vec::with_capacity(zetas.len());
    for (z, dg) in zetas {
        diag.merge(dg);
        zeta_slices.push(z);
    }
    // η(0, J) = -ζ(J); η(I) = η₁(I) for I avoiding 0.
    let mut comps = stack_axis0(params, w_theta[0], &zeta_slices, true)?;
    for c in comps.values_mut() {
        *c = c.scale(C64::new(-1.0, 0.0));
    }
    for (t, c) in eta1.components {
        if !t.contains(&0) {
            comps.insert(t, c);
        }
    }
    Ok((LeafwiseForm::new(n - 1, params.clone(), comps)?, diag))
}

/// Least-squares correction `δ` for a 0-form with `U_j δ ≈ ω(j) - U_j η₁`
/// jointly over all axes, in orthonormal coordinates where every `U_j` is
/// skew-adjoint.
fn joint_correction(omega: &LeafwiseForm, eta1: &LeafwiseForm, opts: &SolveOptions) -> Result<LeafwiseForm> {
    let d = omega.dim();
    let base = eta1.windows().to_vec();
    let box_w: Vec<IndexWindow> = base
        .iter()
        .zip(omega.params.factors())
        .map(|(w, p)| p.clip(w.expand(opts.pad as i64)).unwrap_or(*w))
        .collect();
    let residual = omega.sub(&exterior_derivative(eta1)?)?;
    let out_w: Vec<IndexWindow> = box_w
        .iter()
        .zip(omega.params.factors())
        .map(|(w, p)| p.clip(w.expand(1)).unwrap_or(*w))
        .collect();
    let out_w: Vec<IndexWindow> = out_w.iter().zip(residual.windows()).map(|(a, b)| a.union(b)).collect();
    let rhs: Vec<TensorCoeffs> =
        (0..d).map(|j| Ok(scale_by_norms(&residual.components[&vec![j]].embed(&out_w)?, 1.0))).collect::<Result<_>>()?;
    let params = omega.params.clone();
    let to_tensor = |x: &[C64], w: &[IndexWindow]| TensorCoeffs::new(params.clone(), w.to_vec(), x.to_vec());
    let apply = |x: &[C64]| -> Vec<C64> {
        let t = scale_by_norms(&to_tensor(x, &box_w).expect("box"), -1.0);
        let mut out = Vec::new();
        for j in 0..d {
            let u = apply_u_factor(&t, j).and_then(|u| u.embed(&out_w)).expect("box");
            out.extend_from_slice(scale_by_norms(&u, 1.0).data());
        }
        out
    };
    let n_out = out_w.iter().map(IndexWindow::len).product::<usize>();
    let apply_adj = |y: &[C64]| -> Vec<C64> {
        let mut acc = vec![C64::new(0.0, 0.0); box_w.iter().map(IndexWindow::len).product()];
        for j in 0..d {
            let yj = scale_by_norms(&to_tensor(&y[j * n_out..(j + 1) * n_out], &out_w).expect("box"), -1.0);
            let u = apply_u_factor(&yj, j).and_then(|u| u.embed(&box_w)).expect("box");
            for (a, v) in acc.iter_mut().zip(scale_by_norms(&u, 1.0).data()) {
                *a -= v;
            }
        }
        acc
    };
    let b: Vec<C64> = rhs.iter().flat_map(|r| r.data().to_vec()).collect();
    let n_cols = box_w.iter().map(IndexWindow::len).product();
    let sol = lsqr(apply, apply_adj, &b, n_cols, 1e-14, 20 * n_cols);
    let delta = scale_by_norms(&to_tensor(&sol.x, &box_w)?, -1.0);
    eta1.axpy(C64::new(1.0, 0.0), &LeafwiseForm::function(delta))
}

/// Finds `η` of degree `n - 1` with `dη = ω` for a closed `ω` of degree
/// `1 ≤ n ≤ d - 1`, restricting along axis 0 and recursing on the slices.
pub fn solve_primitive(omega: &LeafwiseForm, opts: &SolveOptions) -> Result<(LeafwiseForm, FormReport)> {
    opts.validate()?;
    let d = omega.dim();
    let n = omega.degree;
    if n == 0 || n >= d {
        return Err(Error::InvalidDegree { degree: n, dim: d, reason: "primitives are solved for 1 ≤ n ≤ d - 1" });
    }
    let (closed, closed_defect) = is_closed(omega, opts.tol_kernel)?;
    if !closed {
        return Err(Error::NotClosed { defect: closed_defect, allowed: opts.tol_kernel });
    }
    let scale = omega.norm0();
    if scale == 0.0 {
        let eta = LeafwiseForm::zero(n - 1, omega.params.clone(), omega.windows().to_vec())?;
        let report = FormReport {
            residual: 0.0,
            omega_norm0: 0.0,
            closed_defect,
            theta_defect: 0.0,
            used_joint_fallback: false,
            sobolev_ratios: Vec::new(),
        };
        return Ok((eta, report));
    }
    let (eta, diag) = primitive_inner(omega, opts, scale)?;
    let residual = exterior_derivative(&eta)?.sub(omega)?.norm0();
    let sobolev_ratios = opts
        .t_list
        .iter()
        .map(|&t| {
            let varsigma = varsigma_schedule(t, d.max(2), &opts.schedule);
            FormRatio { t, varsigma, ratio: eta.sobolev_norm(t) / omega.sobolev_norm(varsigma) }
        })
        .collect();
    let report = FormReport {
        residual,
        omega_norm0: scale,
        closed_defect,
        theta_defect: diag.theta_defect,
        used_joint_fallback: diag.fallback,
        sobolev_ratios,
    };
    if report.relative_residual() > opts.tol_residual {
        return Err(Error::NoConvergence(format!(
            "primitive residual {:e} exceeds {:e}",
            report.relative_residual(),
            opts.tol_residual
        )));
    }
    Ok((eta, report))
}
