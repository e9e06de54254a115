//! Elements of `H_{ν₁} ⊗ ⋯ ⊗ H_{ν_d}` as dense coefficient arrays over a box
//! of multi-indices, the per-factor actions `U_i`, product Sobolev norms,
//! slicing, and the product distributions `D^• = ⊗_j D^{•_j}`.
//!
//! Axes are numbered from 0. Storage is row-major with the last axis fastest.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distributions::{dist_values, phi, DistTag};
use crate::error::{Error, Result};
use crate::repn::{apply_u_line, basis_norms_sq, CoeffVector, IndexWindow, SeriesKind, SeriesParam, C64};

pub const DEFAULT_EPS0: f64 = 0.05;
pub const DEFAULT_NU0: f64 = 0.95;

/// Factors of a tensor product representation together with the uniform
/// gates `ε₀` (no `|ν|` in `(0, ε₀)`) and `ν₀` (complementary `|ν| ≤ ν₀`).
#[derive(Clone, Debug, PartialEq)]
pub struct MultiParam {
    factors: Vec<SeriesParam>,
    eps0: f64,
    nu0: f64,
}

impl MultiParam {
    pub fn new(factors: Vec<SeriesParam>, eps0: f64, nu0: f64) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParam("a tensor product needs at least one factor".into()));
        }
        if !(eps0 > 0.0 && eps0 < 1.0) || !(nu0 > 0.0 && nu0 < 1.0) {
            return Err(Error::InvalidParam(format!("gates need eps0, nu0 in (0, 1), got {eps0}, {nu0}")));
        }
        for (axis, p) in factors.iter().enumerate() {
            let abs_nu = p.abs_nu();
            match p.kind() {
                SeriesKind::Trivial => return Err(Error::TrivialFactor { axis }),
                SeriesKind::Principal | SeriesKind::Complementary if abs_nu > 0.0 && abs_nu < eps0 => {
                    return Err(Error::AssumptionGate { axis, abs_nu, eps0 });
                }
                SeriesKind::Complementary if abs_nu > nu0 => {
                    return Err(Error::SpectralGapGate { axis, abs_nu, nu0 });
                }
                _ => {}
            }
        }
        Ok(Self { factors, eps0, nu0 })
    }

    /// A single factor. The gates constrain families of factors, so here
    /// they are set just loose enough to admit `p`; only the trivial
    /// representation is rejected.
    pub fn single(p: SeriesParam) -> Result<Self> {
        let a = p.abs_nu();
        let eps0 = if a > 0.0 && a < DEFAULT_EPS0 { a * 0.5 } else { DEFAULT_EPS0 };
        let nu0 = if p.kind() == SeriesKind::Complementary && a > DEFAULT_NU0 { (a + 1.0) * 0.5 } else { DEFAULT_NU0 };
        Self::new(vec![p], eps0, nu0)
    }

    pub fn with_default_gates(factors: Vec<SeriesParam>) -> Result<Self> {
        Self::new(factors, DEFAULT_EPS0, DEFAULT_NU0)
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[SeriesParam] {
        &self.factors
    }

    pub fn factor(&self, axis: usize) -> &SeriesParam {
        &self.factors[axis]
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn mu_sum(&self) -> f64 {
        self.factors.iter().map(SeriesParam::mu).sum()
    }

    /// The product of the remaining factors after dropping `axis`.
    pub fn without(&self, axis: usize) -> Result<Self> {
        self.check_axis(axis)?;
        if self.dim() == 1 {
            return Err(Error::InvalidAxis { axis, rank: 1 });
        }
        let mut factors = self.factors.clone();
        factors.remove(axis);
        Ok(Self { factors, ..*self })
    }

    /// Keeps the given axes, in order.
    pub fn select(&self, axes: &[usize]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidParam("cannot select zero factors".into()));
        }
        let mut factors = Vec::with_capacity(axes.len());
        for &a in axes {
            self.check_axis(a)?;
            factors.push(self.factors[a]);
        }
        Ok(Self { factors, ..*self })
    }

    pub fn default_windows(&self, k_trunc: usize) -> Vec<IndexWindow> {
        self.factors.iter().map(|p| p.window(k_trunc)).collect()
    }

    pub fn same_as(&self, other: &MultiParam) -> bool {
        self.dim() == other.dim() && self.factors.iter().zip(&other.factors).all(|(a, b)| a.same_as(b))
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim() {
            Err(Error::InvalidAxis { axis, rank: self.dim() })
        } else {
            Ok(())
        }
    }
}

/// A product invariant distribution `D^• = ⊗_j D^{•_j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiTag {
    pub signs: Vec<DistTag>,
}

impl MultiTag {
    pub fn new(signs: Vec<DistTag>) -> Self {
        Self { signs }
    }

    pub fn all_plus(d: usize) -> Self {
        Self { signs: vec![DistTag::Plus; d] }
    }

    /// All tags giving non-zero functionals: `-` only on principal and
    /// complementary factors.
    pub fn all_valid(params: &MultiParam) -> Vec<MultiTag> {
        let mut out = vec![Vec::new()];
        for p in params.factors() {
            let choices = DistTag::valid_for(p);
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |&c| {
                        let mut v = prefix.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        out.into_iter().map(MultiTag::new).collect()
    }

    pub fn label(&self) -> String {
        self.signs.iter().map(|s| s.symbol()).collect()
    }
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Dense coefficients `f(k₁,…,k_d)` over a box of per-axis windows.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorCoeffs {
    params: MultiParam,
    windows: Vec<IndexWindow>,
    data: Vec<C64>,
}

fn strides_of(windows: &[IndexWindow]) -> Vec<usize> {
    let mut strides = vec![1; windows.len()];
    for a in (0..windows.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * windows[a + 1].len();
    }
    strides
}

fn total_len(windows: &[IndexWindow]) -> usize {
    windows.iter().map(IndexWindow::len).product()
}

/// Offsets of the first element of every line along `axis`.
fn line_bases(windows: &[IndexWindow], axis: usize) -> Vec<usize> {
    let strides = strides_of(windows);
    let mut bases = vec![0usize];
    for (a, w) in windows.iter().enumerate() {
        if a == axis {
            continue;
        }
        let step = strides[a];
        bases = bases.into_iter().flat_map(|b| (0..w.len()).map(move |i| b + i * step)).collect();
    }
    bases
}

/// Visits every multi-index of a box in storage order.
pub(crate) fn for_each_index(windows: &[IndexWindow], mut visit: impl FnMut(usize, &[i64])) {
    let d = windows.len();
    let total = total_len(windows);
    let mut k: Vec<i64> = windows.iter().map(|w| w.lo).collect();
    for pos in 0..total {
        visit(pos, &k);
        for a in (0..d).rev() {
            if k[a] < windows[a].hi {
                k[a] += 1;
                break;
            }
            k[a] = windows[a].lo;
        }
    }
}

impl TensorCoeffs {
    pub fn new(params: MultiParam, windows: Vec<IndexWindow>, data: Vec<C64>) -> Result<Self> {
        if windows.len() != params.dim() {
            return Err(Error::Schema(format!(
                "{} windows for {} factors",
                windows.len(),
                params.dim()
            )));
        }
        for (p, w) in params.factors().iter().zip(&windows) {
            if p.clip(*w) != Some(*w) {
                return Err(Error::InvalidIndex { k: w.lo, lowest: p.lowest_index().unwrap_or(i64::MIN) });
            }
        }
        if data.len() != total_len(&windows) {
            return Err(Error::Schema(format!(
                "box of size {} but {} coefficients",
                total_len(&windows),
                data.len()
            )));
        }
        Ok(Self { params, windows, data })
    }

    pub fn zeros(params: MultiParam, windows: Vec<IndexWindow>) -> Result<Self> {
        let n = total_len(&windows);
        Self::new(params, windows, vec![zero(); n])
    }

    pub fn from_fn(params: MultiParam, windows: Vec<IndexWindow>, f: impl Fn(&[i64]) -> C64) -> Result<Self> {
        let mut data = Vec::with_capacity(total_len(&windows));
        for_each_index(&windows, |_, k| data.push(f(k)));
        Self::new(params, windows, data)
    }

    /// The basis vector `u(k₁) ⊗ ⋯ ⊗ u(k_d)`.
    pub fn basis(params: MultiParam, k: &[i64]) -> Result<Self> {
        let windows = k.iter().map(|&ki| IndexWindow { lo: ki, hi: ki }).collect();
        Self::new(params, windows, vec![C64::new(1.0, 0.0)])
    }

    /// `v₁ ⊗ ⋯ ⊗ v_d`; the vectors must match the factors of `params`.
    pub fn outer(params: MultiParam, vectors: &[CoeffVector]) -> Result<Self> {
        if vectors.len() != params.dim()
            || !vectors.iter().zip(params.factors()).all(|(v, p)| v.param().same_as(p))
        {
            return Err(Error::ParamMismatch);
        }
        let windows: Vec<IndexWindow> = vectors.iter().map(CoeffVector::window).collect();
        Self::from_fn(params, windows, |k| {
            k.iter().zip(vectors).map(|(&ki, v)| v.get(ki)).product()
        })
    }

    pub fn from_vector(params: MultiParam, v: &CoeffVector) -> Result<Self> {
        Self::outer(params, std::slice::from_ref(v))
    }

    /// The rank-1 case as a plain coefficient vector.
    pub fn to_vector(&self) -> Result<CoeffVector> {
        if self.dim() != 1 {
            return Err(Error::InvalidAxis { axis: 1, rank: self.dim() });
        }
        CoeffVector::new(*self.params.factor(0), self.windows[0], self.data.clone())
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn params(&self) -> &MultiParam {
        &self.params
    }

    pub fn windows(&self) -> &[IndexWindow] {
        &self.windows
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset_of(&self, k: &[i64]) -> Option<usize> {
        let strides = strides_of(&self.windows);
        let mut off = 0;
        for ((w, s), &ki) in self.windows.iter().zip(&strides).zip(k) {
            if !w.contains(ki) {
                return None;
            }
            off += w.offset(ki) * s;
        }
        Some(off)
    }

    /// Coefficient at `k`; zero outside the box.
    pub fn get(&self, k: &[i64]) -> C64 {
        self.offset_of(k).map_or(zero(), |o| self.data[o])
    }

    pub fn set(&mut self, k: &[i64], value: C64) -> Result<()> {
        let off = self.offset_of(k).ok_or(Error::InvalidIndex { k: k[0], lowest: self.windows[0].lo })?;
        self.data[off] = value;
        Ok(())
    }

    pub fn for_each(&self, mut visit: impl FnMut(&[i64], C64)) {
        for_each_index(&self.windows, |pos, k| visit(k, self.data[pos]));
    }

    /// Re-windows onto another box (dropping or zero-filling).
    pub fn embed(&self, windows: &[IndexWindow]) -> Result<Self> {
        if windows.iter().zip(&self.windows).all(|(a, b)| a.covers(b)) {
            let mut out = Self::zeros(self.params.clone(), windows.to_vec())?;
            let strides = strides_of(windows);
            let shift: Vec<usize> = windows.iter().zip(&self.windows).map(|(a, b)| (b.lo - a.lo) as usize).collect();
            let mut idx = vec![0usize; self.dim()];
            for_each_index(&self.windows, |pos, k| {
                for (a, (&ka, w)) in k.iter().zip(&self.windows).enumerate() {
                    idx[a] = (ka - w.lo) as usize + shift[a];
                }
                let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
                out.data[off] = self.data[pos];
            });
            Ok(out)
        } else {
            Self::from_fn(self.params.clone(), windows.to_vec(), |k| self.get(k))
        }
    }

    pub fn union_windows(&self, other: &TensorCoeffs) -> Vec<IndexWindow> {
        self.windows.iter().zip(&other.windows).map(|(a, b)| a.union(b)).collect()
    }

    /// `self + a·other` on the union box.
    pub fn axpy(&self, a: C64, other: &TensorCoeffs) -> Result<Self> {
        if !self.params.same_as(&other.params) {
            return Err(Error::ParamMismatch);
        }
        let w = self.union_windows(other);
        let mut out = self.embed(&w)?;
        let rhs = other.embed(&w)?;
        for (o, r) in out.data.iter_mut().zip(&rhs.data) {
            *o += a * r;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TensorCoeffs) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &TensorCoeffs) -> Result<Self> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn scale(&self, a: C64) -> Self {
        Self { data: self.data.iter().map(|c| c * a).collect(), ..self.clone() }
    }

    pub fn norm0(&self) -> f64 {
        tensor_sobolev_norm(self, 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| *c == zero())
    }

    /// Plain slice `f(…, k, …)` at `axis` (no norm factor); zero when `k` is
    /// outside the window.
    pub fn slice(&self, axis: usize, k: i64) -> Result<TensorCoeffs> {
        let params = self.params.without(axis)?;
        let mut windows = self.windows.clone();
        let w_axis = windows.remove(axis);
        if !w_axis.contains(k) {
            return Self::zeros(params, windows);
        }
        let strides = strides_of(&self.windows);
        let base = w_axis.offset(k) * strides[axis];
        let sub_windows = {
            let mut ws = self.windows.clone();
            ws[axis] = IndexWindow { lo: k, hi: k };
            ws
        };
        let mut data = Vec::with_capacity(total_len(&windows));
        for_each_index(&sub_windows, |_, idx| {
            let off: usize = idx
                .iter()
                .zip(&self.windows)
                .zip(&strides)
                .enumerate()
                .map(|(a, ((&ki, w), s))| if a == axis { 0 } else { w.offset(ki) * s })
                .sum();
            data.push(self.data[base + off]);
        });
        Self::new(params, windows, data)
    }

    /// Inverse of [`slice`](Self::slice): stacks rank-(d-1) slices indexed by
    /// `window` along a new `axis`. Slices are embedded into the union of
    /// their boxes.
    pub fn stack(params: MultiParam, axis: usize, window: IndexWindow, slices: &[TensorCoeffs]) -> Result<Self> {
        params.check_axis(axis)?;
        if slices.len() != window.len() {
            return Err(Error::Schema(format!("{} slices for a window of length {}", slices.len(), window.len())));
        }
        let sub_params = params.without(axis)?;
        let mut sub_windows: Option<Vec<IndexWindow>> = None;
        for s in slices {
            if !s.params.same_as(&sub_params) {
                return Err(Error::ParamMismatch);
            }
            sub_windows = Some(match sub_windows {
                None => s.windows.clone(),
                Some(w) => w.iter().zip(&s.windows).map(|(a, b)| a.union(b)).collect(),
            });
        }
        let sub_windows = sub_windows.ok_or_else(|| Error::Schema("no slices".into()))?;
        let mut windows = sub_windows.clone();
        windows.insert(axis, window);
        let mut out = Self::zeros(params, windows)?;
        let strides = strides_of(&out.windows);
        for (i, s) in slices.iter().enumerate() {
            let s = s.embed(&sub_windows)?;
            let mut idx = vec![0usize; out.dim()];
            for_each_index(&sub_windows, |pos, k| {
                let mut j = 0;
                for a in 0..idx.len() {
                    if a == axis {
                        idx[a] = i;
                    } else {
                        idx[a] = (k[j] - sub_windows[j].lo) as usize;
                        j += 1;
                    }
                }
                let off: usize = idx.iter().zip(&strides).map(|(x, s)| x * s).sum();
                out.data[off] = s.data[pos];
            });
        }
        Ok(out)
    }

    /// `self ⊗ v` with `v` placed at a new `axis`.
    pub fn insert_axis(&self, params: MultiParam, axis: usize, v: &CoeffVector) -> Result<Self> {
        if !params.without(axis)?.same_as(&self.params) || !params.factor(axis).same_as(v.param()) {
            return Err(Error::ParamMismatch);
        }
        let mut windows = self.windows.clone();
        windows.insert(axis, v.window());
        Self::from_fn(params, windows, |k| {
            let mut rest = k.to_vec();
            let ka = rest.remove(axis);
            v.get(ka) * self.get(&rest)
        })
    }
}

/// Per-axis `(2k², ‖u(k)‖²)` tables.
fn axis_tables(f: &TensorCoeffs) -> Vec<(Vec<f64>, Vec<f64>)> {
    f.params
        .factors()
        .iter()
        .zip(&f.windows)
        .map(|(p, w)| {
            let q: Vec<f64> = w.iter().map(|k| 2.0 * (k as f64) * (k as f64)).collect();
            (q, basis_norms_sq(p, *w))
        })
        .collect()
}

/// `‖f‖_t² = Σ_k (1 + μ₁ + ⋯ + μ_d + 2|k|²)^t |f(k)|² ∏_j ‖u(k_j)‖²`.
pub fn tensor_sobolev_norm(f: &TensorCoeffs, t: f64) -> f64 {
    let mut direct = 0.0;
    for_each_term(f, |w, c, n| direct += w.powf(t) * c * n);
    let direct = direct.sqrt();
    if direct.is_finite() {
        return direct;
    }
    // Large orders overflow; redo the sum in log space.
    let logs = {
        let mut v = Vec::new();
        for_each_term(f, |w, c, n| v.push(t * w.ln() + c.ln() + n.ln()));
        v
    };
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    (0.5 * (max + sum.ln())).exp()
}

/// Visits `(1 + Σμ + 2|k|², |f(k)|², ∏‖u(k_j)‖²)` for every non-zero coefficient.
fn for_each_term(f: &TensorCoeffs, mut visit: impl FnMut(f64, f64, f64)) {
    let tables = axis_tables(f);
    let base = 1.0 + f.params.mu_sum();
    for_each_index(&f.windows, |pos, k| {
        let c = f.data[pos];
        if c == zero() {
            return;
        }
        let mut q = base;
        let mut nsq = 1.0;
        for (a, (&ka, w)) in k.iter().zip(&f.windows).enumerate() {
            let i = w.offset(ka);
            q += tables[a].0[i];
            nsq *= tables[a].1[i];
        }
        visit(q, c.norm_sqr(), nsq);
    });
}

/// Multiplies every coefficient by `(∏_j ‖u(k_j)‖)^power`; `power = 1` maps
/// coefficients to an orthonormal frame and `power = -1` maps back.
pub fn scale_by_norms(f: &TensorCoeffs, power: f64) -> TensorCoeffs {
    let tables = axis_tables(f);
    let mut out = f.clone();
    for_each_index(&f.windows, |pos, k| {
        let nsq: f64 = k.iter().zip(&f.windows).enumerate().map(|(a, (&ka, w))| tables[a].1[w.offset(ka)]).product();
        out.data[pos] *= nsq.powf(0.5 * power);
    });
    out
}

/// `U_axis f`; the window along `axis` grows by one on each side (clipped to
/// the index set).
pub fn apply_u_factor(f: &TensorCoeffs, axis: usize) -> Result<TensorCoeffs> {
    f.params.check_axis(axis)?;
    let p = *f.params.factor(axis);
    let w_in = f.windows[axis];
    let w_out = p.clip(w_in.expand(1)).unwrap_or(w_in);
    let mut out_windows = f.windows.clone();
    out_windows[axis] = w_out;
    let mut out = TensorCoeffs::zeros(f.params.clone(), out_windows)?;
    let s_in = strides_of(&f.windows)[axis];
    let s_out = strides_of(&out.windows)[axis];
    let bases_in = line_bases(&f.windows, axis);
    let bases_out = line_bases(&out.windows, axis);
    let mut line = vec![zero(); w_in.len()];
    let mut res = vec![zero(); w_out.len()];
    for (&bi, &bo) in bases_in.iter().zip(&bases_out) {
        for (i, l) in line.iter_mut().enumerate() {
            *l = f.data[bi + i * s_in];
        }
        res.iter_mut().for_each(|r| *r = zero());
        apply_u_line(&p, w_in.lo, &line, w_out.lo, &mut res);
        for (i, r) in res.iter().enumerate() {
            out.data[bo + i * s_out] = *r;
        }
    }
    Ok(out)
}

/// Fixes the indices of some axes: `f(k)·∏_{fixed j} ‖u(k_j)‖` as a tensor
/// over the remaining axes.
pub fn restrict(f: &TensorCoeffs, fixed: &BTreeMap<usize, i64>) -> Result<TensorCoeffs> {
    if fixed.len() >= f.dim() {
        return Err(Error::InvalidAxis { axis: f.dim(), rank: f.dim() });
    }
    let mut factor = 1.0;
    for (&axis, &k) in fixed {
        f.params.check_axis(axis)?;
        let p = f.params.factor(axis);
        if !f.windows[axis].contains(k) {
            return Err(Error::InvalidIndex { k, lowest: f.windows[axis].lo });
        }
        factor *= crate::repn::basis_norm_sq(p, k)?.sqrt();
    }
    let mut out = f.clone();
    // Slice from the highest axis down so lower axis numbers stay valid.
    for (&axis, &k) in fixed.iter().rev() {
        out = out.slice(axis, k)?;
    }
    Ok(out.scale(C64::new(factor, 0.0)))
}

/// Contracts the last axis against a vector indexed by that axis' window.
fn contract_last(data: &[C64], windows: &[IndexWindow], v: &[C64]) -> Vec<C64> {
    let n = windows.last().map_or(1, IndexWindow::len);
    data.chunks(n).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `D^•(f) = Σ_k f(k) ∏_j D^{•_j}(u(k_j))`.
pub fn product_dist_evaluate(f: &TensorCoeffs, tag: &MultiTag) -> C64 {
    assert_eq!(tag.signs.len(), f.dim(), "tag length must match the tensor rank");
    let mut data = f.data.clone();
    for a in (0..f.dim()).rev() {
        let v = dist_values(f.params.factor(a), tag.signs[a], f.windows[a]);
        data = contract_last(&data, &f.windows[..=a], &v);
    }
    data[0]
}

/// `Σ_k |f(k)| ∏_j |D^{•_j}(u(k_j))|`, the scale against which cancellation
/// in [`product_dist_evaluate`] is measured.
pub fn product_dist_scale(f: &TensorCoeffs, tag: &MultiTag) -> f64 {
    let mut data: Vec<C64> = f.data.iter().map(|c| C64::new(c.norm(), 0.0)).collect();
    for a in (0..f.dim()).rev() {
        let v: Vec<C64> = dist_values(f.params.factor(a), tag.signs[a], f.windows[a])
            .iter()
            .map(|c| C64::new(c.norm(), 0.0))
            .collect();
        data = contract_last(&data, &f.windows[..=a], &v);
    }
    data[0].re
}

/// Contracts the last axis with `D^tag`, giving `F(k) = Σ_m f(k,m) D^tag(u(m))`.
pub fn contract_last_axis(f: &TensorCoeffs, tag: DistTag) -> Result<TensorCoeffs> {
    let d = f.dim();
    let params = f.params.without(d - 1)?;
    let v = dist_values(f.params.factor(d - 1), tag, f.windows[d - 1]);
    let data = contract_last(&f.data, &f.windows, &v);
    TensorCoeffs::new(params, f.windows[..d - 1].to_vec(), data)
}

/// `Φ_• = ⊗_j φ_{•_j}`.
pub fn phi_product(params: &MultiParam, tag: &MultiTag) -> Result<TensorCoeffs> {
    let vectors: Vec<CoeffVector> = params.factors().iter().zip(&tag.signs).map(|(p, &s)| phi(p, s)).collect();
    TensorCoeffs::outer(params.clone(), &vectors)
}

/// `f - Σ_• Φ_• D^•(f)` over all valid tags; the result is annihilated by
/// every product distribution.
pub fn kernel_project(f: &TensorCoeffs) -> Result<TensorCoeffs> {
    let mut out = f.clone();
    for tag in MultiTag::all_valid(&f.params) {
        let v = product_dist_evaluate(f, &tag);
        if v != zero() {
            out = out.axpy(-v, &phi_product(&f.params, &tag)?)?;
        }
    }
    Ok(out)
}

/// `max_• |D^•(f)|` over valid tags.
pub fn kernel_defect(f: &TensorCoeffs) -> f64 {
    MultiTag::all_valid(&f.params)
        .iter()
        .map(|t| product_dist_evaluate(f, t).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repn::{apply_u, sobolev_norm};

    fn pp(v: &[f64]) -> MultiParam {
        MultiParam::with_default_gates(v.iter().map(|&s| SeriesParam::principal(s).unwrap()).collect()).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gates() {
        let small = SeriesParam::complementary(0.01).unwrap();
        let wide = SeriesParam::complementary(0.97).unwrap();
        let small_p = SeriesParam::principal(0.02).unwrap();
        let zero_p = SeriesParam::principal(0.0).unwrap();
        assert!(matches!(
            MultiParam::with_default_gates(vec![small]),
            Err(Error::AssumptionGate { axis: 0, .. })
        ));
        assert!(matches!(
            MultiParam::with_default_gates(vec![zero_p, wide]),
            Err(Error::SpectralGapGate { axis: 1, .. })
        ));
        assert!(matches!(
            MultiParam::with_default_gates(vec![small_p]),
            Err(Error::AssumptionGate { .. })
        ));
        assert!(MultiParam::with_default_gates(vec![zero_p]).is_ok());
        assert!(matches!(
            MultiParam::with_default_gates(vec![zero_p, SeriesParam::trivial()]),
            Err(Error::TrivialFactor { axis: 1 })
        ));
    }

    #[test]
    fn valid_tags_skip_minus_on_discrete() {
        let params = MultiParam::with_default_gates(vec![
            SeriesParam::principal(1.0).unwrap(),
            SeriesParam::discrete(2).unwrap(),
            SeriesParam::complementary(0.5).unwrap(),
        ])
        .unwrap();
        let labels: Vec<String> = MultiTag::all_valid(&params).iter().map(MultiTag::label).collect();
        assert_eq!(labels, vec!["+++", "++-", "-++", "-+-"]);
    }

    #[test]
    fn sobolev_single_term() {
        let f = TensorCoeffs::basis(pp(&[1.0, 1.0]), &[0, 0]).unwrap();
        assert!((tensor_sobolev_norm(&f, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        let z = TensorCoeffs::zeros(pp(&[1.0, 1.0]), vec![IndexWindow { lo: -2, hi: 2 }; 2]).unwrap();
        assert_eq!(tensor_sobolev_norm(&z, 3.0), 0.0);
    }

    #[test]
    fn sobolev_survives_overflow() {
        let f = TensorCoeffs::basis(pp(&[1.0]), &[100]).unwrap();
        let q: f64 = 1.0 + 0.5 + 2.0 * 100.0 * 100.0;
        let got = tensor_sobolev_norm(&f, 120.0);
        assert!(got.is_finite());
        assert!((got.ln() - 60.0 * q.ln()).abs() <= 1e-12 * got.ln());
    }

    #[test]
    fn sobolev_zero_factorizes() {
        let a_p = SeriesParam::complementary(0.4).unwrap();
        let b_p = SeriesParam::discrete(2).unwrap();
        let a = CoeffVector::from_fn(a_p, a_p.window(4), |k| c(1.0 / (1 + k * k) as f64, 0.3)).unwrap();
        let b = CoeffVector::from_fn(b_p, b_p.window(5), |k| c(0.2, k as f64 * 0.1)).unwrap();
        let params = MultiParam::with_default_gates(vec![a_p, b_p]).unwrap();
        let f = TensorCoeffs::outer(params, &[a.clone(), b.clone()]).unwrap();
        let lhs = tensor_sobolev_norm(&f, 0.0);
        let rhs = sobolev_norm(&a, 0.0) * sobolev_norm(&b, 0.0);
        assert!((lhs - rhs).abs() <= 1e-14 * rhs);
    }

    #[test]
    fn u_factor_matches_single_factor_action() {
        let params = pp(&[0.0, 1.0]);
        let f = TensorCoeffs::basis(params.clone(), &[0, 0]).unwrap();
        let g = apply_u_factor(&f, 1).unwrap();
        let u0 = apply_u(&CoeffVector::basis(*params.factor(1), 0).unwrap());
        for k in -1..=1 {
            assert_eq!(g.get(&[0, k]), u0.get(k));
        }
    }

    #[test]
    fn u_factors_commute() {
        let params = pp(&[0.5, 2.0]);
        let w = params.default_windows(3);
        let f = TensorCoeffs::from_fn(params, w, |k| c(k[0] as f64 + 0.5, (k[1] * k[0]) as f64)).unwrap();
        let a = apply_u_factor(&apply_u_factor(&f, 1).unwrap(), 0).unwrap();
        let b = apply_u_factor(&apply_u_factor(&f, 0).unwrap(), 1).unwrap();
        assert_eq!(a.windows(), b.windows());
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).norm() <= 1e-13 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn slice_and_stack_round_trip() {
        let params = MultiParam::with_default_gates(vec![
            SeriesParam::discrete(1).unwrap(),
            SeriesParam::principal(1.0).unwrap(),
            SeriesParam::complementary(0.3).unwrap(),
        ])
        .unwrap();
        let w = params.default_windows(2);
        let f = TensorCoeffs::from_fn(params.clone(), w.clone(), |k| c(k[0] as f64, (k[1] - 2 * k[2]) as f64)).unwrap();
        for axis in 0..3 {
            let slices: Vec<_> = w[axis].iter().map(|k| f.slice(axis, k).unwrap()).collect();
            let g = TensorCoeffs::stack(params.clone(), axis, w[axis], &slices).unwrap();
            assert_eq!(g, f);
        }
        let s = f.slice(1, 1).unwrap();
        assert_eq!(s.get(&[2, -1]), f.get(&[2, 1, -1]));
    }

    #[test]
    fn restrict_principal_is_plain_slice() {
        let params = pp(&[1.0, 2.0]);
        let w = params.default_windows(3);
        let f = TensorCoeffs::from_fn(params, w, |k| c(k[0] as f64, k[1] as f64)).unwrap();
        let r = restrict(&f, &BTreeMap::from([(1, 2)])).unwrap();
        assert_eq!(r, f.slice(1, 2).unwrap());
        assert!(restrict(&f, &BTreeMap::from([(1, 9)])).is_err());
        assert!(restrict(&f, &BTreeMap::from([(0, 0), (1, 0)])).is_err());
    }

    #[test]
    fn phi_products_are_dual() {
        let params = MultiParam::with_default_gates(vec![
            SeriesParam::principal(0.0).unwrap(),
            SeriesParam::complementary(-0.6).unwrap(),
            SeriesParam::discrete(3).unwrap(),
        ])
        .unwrap();
        let tags = MultiTag::all_valid(&params);
        for a in &tags {
            let f = phi_product(&params, a).unwrap();
            for b in &tags {
                let v = product_dist_evaluate(&f, b);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((v - expect).norm() <= 1e-13);
            }
            assert!(kernel_project(&f).unwrap().max_abs() <= 1e-13);
        }
    }

    #[test]
    fn basis_vector_all_plus_is_one() {
        let params = pp(&[1.0, 3.0]);
        let f = TensorCoeffs::basis(params, &[4, -7]).unwrap();
        assert_eq!(product_dist_evaluate(&f, &MultiTag::all_plus(2)), c(1.0, 0.0));
    }

    #[test]
    fn kernel_project_leaves_kernel_elements() {
        let params = pp(&[1.0, 2.0]);
        let w = params.default_windows(4);
        let f = TensorCoeffs::from_fn(params, w, |k| c((k[0] * k[1]) as f64, k[0] as f64)).unwrap();
        let p = kernel_project(&f).unwrap();
        let pp2 = kernel_project(&p).unwrap();
        let diff = pp2.sub(&p).unwrap();
        assert!(diff.max_abs() <= 1e-13 * p.max_abs());
        assert!(kernel_defect(&p) <= 1e-12 * f.norm0());
    }
}
