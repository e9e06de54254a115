//! Single irreducible unitary representations of PSL(2,R) in the K-weight basis.
//!
//! An element is stored through its coefficients `f(k)` in the orthogonal (not
//! orthonormal) basis `u(k)`, so every norm carries the weight `‖u(k)‖²`.
//! The horocycle generator `U` acts tridiagonally:
//!
//! ```text
//! U u(k) = i k u(k) - (i/2) c⁺(k) u(k+1) + (i/2) c⁻(k) u(k-1)
//! c⁺(k) = k + (1+ν)/2,   c⁻(k) = -k + (1+ν)/2
//! ```
//!
//! `c⁻(n) = 0` for the discrete series with lowest weight `n`, so the action
//! never leaves the index set `n + Z≥0`. The basis norms are the unique ones
//! (with `‖u(0)‖ = 1`, resp. `‖u(n)‖ = 1`) that make `U` skew-adjoint.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Principal,
    Complementary,
    Discrete,
    /// The one-dimensional trivial representation (ν = 1). Only admitted so
    /// that it can be rejected explicitly when building products.
    Trivial,
}

/// Parameters of one irreducible unitary representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesParam {
    kind: SeriesKind,
    nu: C64,
    n: u32,
}

impl std::fmt::Display for SeriesParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            SeriesKind::Principal => write!(f, "principal nu={}i", self.nu.im),
            SeriesKind::Complementary => write!(f, "complementary nu={}", self.nu.re),
            SeriesKind::Discrete => write!(f, "discrete n={}", self.n),
            SeriesKind::Trivial => write!(f, "trivial"),
        }
    }
}

impl SeriesParam {
    /// Principal series with `ν = i s`. `s = 0` is allowed.
    pub fn principal(s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidParam(format!("principal series needs finite Im ν, got {s}")));
        }
        Ok(Self { kind: SeriesKind::Principal, nu: C64::new(0.0, s), n: 0 })
    }

    /// Complementary series with real `ν`, `0 < |ν| < 1`.
    pub fn complementary(nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu != 0.0 && nu.abs() < 1.0) {
            return Err(Error::InvalidParam(format!(
                "complementary series needs 0 < |ν| < 1, got {nu}"
            )));
        }
        Ok(Self { kind: SeriesKind::Complementary, nu: C64::new(nu, 0.0), n: 0 })
    }

    /// Discrete series with `ν = 2n - 1`, lowest K-type `n ≥ 1`.
    pub fn discrete(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("discrete series needs n >= 1".into()));
        }
        Ok(Self { kind: SeriesKind::Discrete, nu: C64::new(2.0 * n as f64 - 1.0, 0.0), n })
    }

    pub fn trivial() -> Self {
        Self { kind: SeriesKind::Trivial, nu: C64::new(1.0, 0.0), n: 0 }
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn nu(&self) -> C64 {
        self.nu
    }

    pub fn abs_nu(&self) -> f64 {
        self.nu.norm()
    }

    /// Lowest weight `n` of a discrete series representation.
    pub fn discrete_n(&self) -> Option<u32> {
        (self.kind == SeriesKind::Discrete).then_some(self.n)
    }

    /// Casimir eigenvalue `μ = (1 - ν²)/4`.
    pub fn mu(&self) -> f64 {
        casimir_mu(self)
    }

    /// Whether the second invariant distribution `D⁻` exists.
    pub fn has_minus(&self) -> bool {
        matches!(self.kind, SeriesKind::Principal | SeriesKind::Complementary)
    }

    /// Smallest admissible index, if bounded below.
    pub fn lowest_index(&self) -> Option<i64> {
        match self.kind {
            SeriesKind::Discrete => Some(self.n as i64),
            SeriesKind::Trivial => Some(0),
            _ => None,
        }
    }

    pub fn contains(&self, k: i64) -> bool {
        match self.kind {
            SeriesKind::Principal | SeriesKind::Complementary => true,
            SeriesKind::Discrete => k >= self.n as i64,
            SeriesKind::Trivial => k == 0,
        }
    }

    pub fn check_index(&self, k: i64) -> Result<()> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(Error::InvalidIndex { k, lowest: self.lowest_index().unwrap_or(i64::MIN) })
        }
    }

    /// Default truncation: `[-K, K]`, or `[n, n + K]` in the discrete series.
    pub fn window(&self, k_trunc: usize) -> IndexWindow {
        let k = k_trunc as i64;
        match self.kind {
            SeriesKind::Principal | SeriesKind::Complementary => IndexWindow { lo: -k, hi: k },
            SeriesKind::Discrete => IndexWindow { lo: self.n as i64, hi: self.n as i64 + k },
            SeriesKind::Trivial => IndexWindow { lo: 0, hi: 0 },
        }
    }

    /// Intersects a window with the index set.
    pub fn clip(&self, w: IndexWindow) -> Option<IndexWindow> {
        let (lo, hi) = match self.kind {
            SeriesKind::Principal | SeriesKind::Complementary => (w.lo, w.hi),
            SeriesKind::Discrete => (w.lo.max(self.n as i64), w.hi),
            SeriesKind::Trivial => (w.lo.max(0), w.hi.min(0)),
        };
        (lo <= hi).then_some(IndexWindow { lo, hi })
    }

    /// Coefficient of `u(k+1)` in `U u(k)`, up to the factor `-i/2`.
    pub fn c_plus(&self, k: i64) -> C64 {
        if self.kind == SeriesKind::Trivial {
            return C64::new(0.0, 0.0);
        }
        (1.0 + self.nu) * 0.5 + k as f64
    }

    /// Coefficient of `u(k-1)` in `U u(k)`, up to the factor `i/2`.
    pub fn c_minus(&self, k: i64) -> C64 {
        if self.kind == SeriesKind::Trivial {
            return C64::new(0.0, 0.0);
        }
        (1.0 + self.nu) * 0.5 - k as f64
    }

    /// Same representation (kind and parameter).
    pub fn same_as(&self, other: &SeriesParam) -> bool {
        self.kind == other.kind && self.nu == other.nu
    }
}

pub fn casimir_mu(param: &SeriesParam) -> f64 {
    ((1.0 - param.nu * param.nu) / 4.0).re
}

/// `Q_ν(k) = μ + 2k²`.
pub fn weight_q(param: &SeriesParam, k: i64) -> Result<f64> {
    param.check_index(k)?;
    Ok(param.mu() + 2.0 * (k as f64) * (k as f64))
}

pub(crate) fn q_unchecked(mu: f64, k: i64) -> f64 {
    mu + 2.0 * (k as f64) * (k as f64)
}

/// `‖u(k)‖²`.
pub fn basis_norm_sq(param: &SeriesParam, k: i64) -> Result<f64> {
    param.check_index(k)?;
    Ok(basis_norm_sq_unchecked(param, k))
}

fn basis_norm_sq_unchecked(param: &SeriesParam, k: i64) -> f64 {
    match param.kind {
        SeriesKind::Principal | SeriesKind::Trivial => 1.0,
        SeriesKind::Complementary => {
            let nu = param.nu.re;
            (1..=k.unsigned_abs())
                .map(|i| {
                    let a = 2.0 * i as f64 - 1.0;
                    (a - nu) / (a + nu)
                })
                .product()
        }
        SeriesKind::Discrete => {
            let m = (k - param.n as i64) as u64;
            let two_n_minus_one = 2.0 * param.n as f64 - 1.0;
            (1..=m).map(|i| i as f64 / (two_n_minus_one + i as f64)).product()
        }
    }
}

/// `‖u(k)‖²` for every `k` in a window, computed by the ratio recurrence.
pub fn basis_norms_sq(param: &SeriesParam, window: IndexWindow) -> Vec<f64> {
    match param.kind {
        SeriesKind::Principal | SeriesKind::Trivial => vec![1.0; window.len()],
        SeriesKind::Complementary => {
            let nu = param.nu.re;
            let reach = window.lo.unsigned_abs().max(window.hi.unsigned_abs()) as usize;
            let mut by_abs = Vec::with_capacity(reach + 1);
            by_abs.push(1.0);
            for i in 1..=reach {
                let a = 2.0 * i as f64 - 1.0;
                by_abs.push(by_abs[i - 1] * (a - nu) / (a + nu));
            }
            window.iter().map(|k| by_abs[k.unsigned_abs() as usize]).collect()
        }
        SeriesKind::Discrete => {
            let n = param.n as i64;
            let two_n_minus_one = 2.0 * param.n as f64 - 1.0;
            let mut out = Vec::with_capacity(window.len());
            let mut current = basis_norm_sq_unchecked(param, window.lo);
            for k in window.iter() {
                if k > window.lo {
                    let m = (k - n) as f64;
                    current *= m / (two_n_minus_one + m);
                }
                out.push(current);
            }
            out
        }
    }
}

/// Inclusive truncation bounds for the basis index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexWindow {
    pub lo: i64,
    pub hi: i64,
}

impl IndexWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidWindow { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i64) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn covers(&self, other: &IndexWindow) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn expand(&self, by: i64) -> Self {
        Self { lo: self.lo - by, hi: self.hi + by }
    }

    pub fn union(&self, other: &IndexWindow) -> Self {
        Self { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(&self, other: &IndexWindow) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    pub(crate) fn offset(&self, k: i64) -> usize {
        (k - self.lo) as usize
    }
}

/// Applies `U` to a line of coefficients with custom `c±`.
///
/// `input` lives on `[lo_in, lo_in + input.len())`, `out` on
/// `[lo_out, lo_out + out.len())`; contributions falling outside `out` are
/// dropped, so callers size `out` to cover `[lo_in - 1, hi_in + 1] ∩ Z_ν`.
pub(crate) fn apply_u_line_with<P, M>(
    c_plus: P,
    c_minus: M,
    lo_in: i64,
    input: &[C64],
    lo_out: i64,
    out: &mut [C64],
) where
    P: Fn(i64) -> C64,
    M: Fn(i64) -> C64,
{
    let half_i = I * 0.5;
    for (j, &fk) in input.iter().enumerate() {
        if fk == C64::new(0.0, 0.0) {
            continue;
        }
        let k = lo_in + j as i64;
        let mut put = |idx: i64, v: C64| {
            let pos = idx - lo_out;
            if pos >= 0 && (pos as usize) < out.len() {
                out[pos as usize] += v;
            }
        };
        put(k, I * (k as f64) * fk);
        put(k + 1, -half_i * c_plus(k) * fk);
        let cm = c_minus(k);
        if cm != C64::new(0.0, 0.0) {
            put(k - 1, half_i * cm * fk);
        }
    }
}

pub(crate) fn apply_u_line(param: &SeriesParam, lo_in: i64, input: &[C64], lo_out: i64, out: &mut [C64]) {
    apply_u_line_with(|k| param.c_plus(k), |k| param.c_minus(k), lo_in, input, lo_out, out);
}

/// Truncated coefficient vector `Σ_k f(k) u(k)`; coefficients outside the
/// window are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffVector {
    param: SeriesParam,
    window: IndexWindow,
    coeffs: Vec<C64>,
}

impl CoeffVector {
    pub fn new(param: SeriesParam, window: IndexWindow, coeffs: Vec<C64>) -> Result<Self> {
        if param.clip(window) != Some(window) {
            return Err(Error::InvalidIndex {
                k: window.lo,
                lowest: param.lowest_index().unwrap_or(i64::MIN),
            });
        }
        if coeffs.len() != window.len() {
            return Err(Error::Schema(format!(
                "window of length {} but {} coefficients",
                window.len(),
                coeffs.len()
            )));
        }
        Ok(Self { param, window, coeffs })
    }

    pub fn zeros(param: SeriesParam, window: IndexWindow) -> Result<Self> {
        Self::new(param, window, vec![C64::new(0.0, 0.0); window.len()])
    }

    /// The basis vector `u(k)` on the one-point window `[k, k]`.
    pub fn basis(param: SeriesParam, k: i64) -> Result<Self> {
        param.check_index(k)?;
        Self::new(param, IndexWindow { lo: k, hi: k }, vec![C64::new(1.0, 0.0)])
    }

    pub fn from_fn(param: SeriesParam, window: IndexWindow, f: impl Fn(i64) -> C64) -> Result<Self> {
        Self::new(param, window, window.iter().map(f).collect())
    }

    pub fn param(&self) -> &SeriesParam {
        &self.param
    }

    pub fn window(&self) -> IndexWindow {
        self.window
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn get(&self, k: i64) -> C64 {
        if self.window.contains(k) {
            self.coeffs[self.window.offset(k)]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.window.iter().zip(self.coeffs.iter().copied())
    }

    /// Re-windows the vector, dropping or zero-filling as needed.
    pub fn embed(&self, window: IndexWindow) -> Result<Self> {
        Self::from_fn(self.param, window, |k| self.get(k))
    }

    pub fn scale(&self, a: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * a).collect(), ..self.clone() }
    }

    /// `self + a·other` on the union of both windows.
    pub fn axpy(&self, a: C64, other: &CoeffVector) -> Result<Self> {
        if !self.param.same_as(&other.param) {
            return Err(Error::ParamMismatch);
        }
        let w = self.window.union(&other.window);
        Self::from_fn(self.param, w, |k| self.get(k) + a * other.get(k))
    }

    pub fn norm0(&self) -> f64 {
        sobolev_norm(self, 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `U f`, on the window `[lo-1, hi+1] ∩ Z_ν`.
pub fn apply_u(f: &CoeffVector) -> CoeffVector {
    let p = f.param;
    apply_u_with(f, |k| p.c_plus(k), |k| p.c_minus(k))
}

/// `U f` with caller-supplied ladder coefficients; used to inject faults when
/// checking that the invariance suites actually detect a wrong action.
pub fn apply_u_with(
    f: &CoeffVector,
    c_plus: impl Fn(i64) -> C64,
    c_minus: impl Fn(i64) -> C64,
) -> CoeffVector {
    let out_window = f.param.clip(f.window.expand(1)).unwrap_or(f.window);
    let mut out = vec![C64::new(0.0, 0.0); out_window.len()];
    apply_u_line_with(c_plus, c_minus, f.window.lo, &f.coeffs, out_window.lo, &mut out);
    CoeffVector { param: f.param, window: out_window, coeffs: out }
}

/// `‖f‖_t = (Σ (1+μ+2k²)^t |f(k)|² ‖u(k)‖²)^{1/2}`; `t` may be negative.
pub fn sobolev_norm(f: &CoeffVector, t: f64) -> f64 {
    let mu = f.param.mu();
    let norms = basis_norms_sq(&f.param, f.window);
    f.iter()
        .zip(norms)
        .map(|((k, c), nsq)| (1.0 + q_unchecked(mu, k)).powf(t) * c.norm_sqr() * nsq)
        .sum::<f64>()
        .sqrt()
}

/// `⟨f, g⟩ = Σ f(k) conj(g(k)) ‖u(k)‖²`.
pub fn inner_product(f: &CoeffVector, g: &CoeffVector) -> Result<C64> {
    if !f.param.same_as(&g.param) {
        return Err(Error::ParamMismatch);
    }
    let Some(w) = f.window.intersect(&g.window) else {
        return Ok(C64::new(0.0, 0.0));
    };
    let norms = basis_norms_sq(&f.param, w);
    Ok(w.iter().zip(norms).map(|(k, nsq)| f.get(k) * g.get(k).conj() * nsq).sum())
}
