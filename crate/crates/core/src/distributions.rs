//! The `U`-invariant distributions `D±`, the dual elements `φ±`, and the
//! single-factor sums that control how `D±` and `φ±` scale with the Casimir
//! parameter.
//!
//! `D⁺(u(k)) = 1` in every representation. In the principal and complementary
//! series there is a second distribution
//!
//! ```text
//! D⁻(u(k)) = ∏_{i=1}^{|k|} (2i-1-ν)/(2i-1+ν)   (ν ≠ 0)
//! D⁻(u(k)) = Σ_{i=1}^{|k|} 1/(2i-1)             (ν = 0)
//! ```
//!
//! In the discrete series `D⁻` is taken to be the zero functional and
//! `φ₋ = 0`.

pub mod exact;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repn::{basis_norms_sq, q_unchecked, CoeffVector, IndexWindow, SeriesKind, SeriesParam, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistTag {
    Plus,
    Minus,
}

impl DistTag {
    pub const BOTH: [DistTag; 2] = [DistTag::Plus, DistTag::Minus];

    /// Tags that give a non-zero functional in this representation.
    pub fn valid_for(param: &SeriesParam) -> &'static [DistTag] {
        if param.has_minus() {
            &Self::BOTH
        } else {
            &Self::BOTH[..1]
        }
    }

    pub fn index(self) -> usize {
        match self {
            DistTag::Plus => 0,
            DistTag::Minus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            DistTag::Plus => '+',
            DistTag::Minus => '-',
        }
    }
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `D^tag(u(k))`.
pub fn dist_basis_value(param: &SeriesParam, tag: DistTag, k: i64) -> Result<C64> {
    param.check_index(k)?;
    let w = IndexWindow { lo: k, hi: k };
    Ok(dist_values(param, tag, w)[0])
}

/// `D^tag(u(k))` for every `k` in a window.
pub fn dist_values(param: &SeriesParam, tag: DistTag, window: IndexWindow) -> Vec<C64> {
    match tag {
        DistTag::Plus => vec![one(); window.len()],
        DistTag::Minus if !param.has_minus() => vec![zero(); window.len()],
        DistTag::Minus => {
            let reach = window.lo.unsigned_abs().max(window.hi.unsigned_abs()) as usize;
            let by_abs = minus_by_abs(param, reach);
            window.iter().map(|k| by_abs[k.unsigned_abs() as usize]).collect()
        }
    }
}

/// `D⁻(u(m))` for `m = 0..=reach`.
fn minus_by_abs(param: &SeriesParam, reach: usize) -> Vec<C64> {
    let nu = param.nu();
    let mut out = Vec::with_capacity(reach + 1);
    if nu == zero() {
        out.push(zero());
        for i in 1..=reach {
            out.push(out[i - 1] + 1.0 / (2.0 * i as f64 - 1.0));
        }
    } else {
        out.push(one());
        for i in 1..=reach {
            let a = 2.0 * i as f64 - 1.0;
            out.push(out[i - 1] * (a - nu) / (a + nu));
        }
    }
    out
}

/// `D^tag(f) = Σ_k f(k) D^tag(u(k))`.
pub fn evaluate(tag: DistTag, f: &CoeffVector) -> C64 {
    let values = dist_values(f.param(), tag, f.window());
    f.coeffs().iter().zip(values).map(|(c, d)| c * d).sum()
}

/// The element `φ^tag` with `D^a(φ_b) = δ_ab`.
///
/// In the discrete series `φ₊ = u(n)` sits at the lowest K-type and `φ₋ = 0`.
pub fn phi(param: &SeriesParam, tag: DistTag) -> CoeffVector {
    let nu = param.nu();
    match param.kind() {
        SeriesKind::Discrete | SeriesKind::Trivial => {
            let n = param.lowest_index().unwrap_or(0);
            let w = IndexWindow { lo: n, hi: n };
            let c = if tag == DistTag::Plus { one() } else { zero() };
            CoeffVector::new(*param, w, vec![c]).expect("lowest index lies in Z_ν")
        }
        SeriesKind::Principal | SeriesKind::Complementary => {
            let w = IndexWindow { lo: 0, hi: 1 };
            let coeffs = if nu == zero() {
                match tag {
                    DistTag::Plus => vec![one(), zero()],
                    DistTag::Minus => vec![-one(), one()],
                }
            } else {
                let two_nu = 2.0 * nu;
                match tag {
                    DistTag::Plus => vec![(nu - 1.0) / two_nu, (nu + 1.0) / two_nu],
                    DistTag::Minus => vec![(nu + 1.0) / two_nu, -(nu + 1.0) / two_nu],
                }
            };
            CoeffVector::new(*param, w, coeffs).expect("0 and 1 lie in Z")
        }
    }
}

/// `[D^a(φ_b)]` with rows and columns ordered `(+, -)`.
pub fn phi_pairing_matrix(param: &SeriesParam) -> [[C64; 2]; 2] {
    let mut m = [[zero(); 2]; 2];
    for a in DistTag::BOTH {
        for b in DistTag::BOTH {
            m[a.index()][b.index()] = evaluate(a, &phi(param, b));
        }
    }
    m
}

/// Truncated order sum with its tail estimate and the comparison value
/// `(1+μ)^{1/2-t}` (resp. `(1+μ+2n²)^{1/2-t}`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderSum {
    pub t: f64,
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
    pub comparison: f64,
    pub ratio: f64,
}

const ORDER_SUM_START: usize = 64;
const ORDER_SUM_MAX: usize = 1 << 22;

/// `Σ_± Σ_m (1+Q(m))^{-t} |D^±(u(m))|² / ‖u(m)‖²`.
///
/// The sum is extended until an integral tail bound drops below 1% of the
/// head. In the discrete series `1/‖u(n+m)‖²` grows like `m^{2n-1}`, so the
/// sum only converges for `t > n`.
pub fn dist_order_sum(param: &SeriesParam, t: f64) -> Result<OrderSum> {
    if t.is_nan() || t <= 0.5 {
        return Err(Error::Divergent { t, threshold: 0.5 });
    }
    let mu = param.mu();
    if let Some(n) = param.discrete_n() {
        if t <= n as f64 {
            return Err(Error::Divergent { t, threshold: n as f64 });
        }
    }
    if param.kind() == SeriesKind::Trivial {
        return Err(Error::InvalidParam("order sums are not defined for the trivial representation".into()));
    }

    let mut m_max = ORDER_SUM_START;
    loop {
        let (head, tail) = match param.kind() {
            SeriesKind::Discrete => discrete_order_sum(param, t, m_max),
            _ => symmetric_order_sum(param, t, m_max),
        };
        if tail <= 0.01 * head {
            let comparison = match param.discrete_n() {
                Some(n) => (1.0 + mu + 2.0 * (n as f64).powi(2)).powf(0.5 - t),
                None => (1.0 + mu).powf(0.5 - t),
            };
            return Ok(OrderSum {
                t,
                value: head,
                tail_bound: tail,
                terms: m_max,
                comparison,
                ratio: head / comparison,
            });
        }
        if m_max >= ORDER_SUM_MAX {
            return Err(Error::TailNotConverged { head, tail });
        }
        m_max *= 2;
    }
}

/// Head over `|m| ≤ m_max` and tail bound for principal/complementary series.
fn symmetric_order_sum(param: &SeriesParam, t: f64, m_max: usize) -> (f64, f64) {
    let mu = param.mu();
    let w = IndexWindow { lo: 0, hi: m_max as i64 };
    let norms = basis_norms_sq(param, w);
    let minus = minus_by_abs(param, m_max);
    let weight = |m: usize| (1.0 + minus[m].norm_sqr()) / norms[m];
    let mut head = weight(0) * (1.0 + mu).powf(-t);
    for m in 1..=m_max {
        head += 2.0 * weight(m) * (1.0 + q_unchecked(mu, m as i64)).powf(-t);
    }

    // Growth exponent a with weight(x) <= weight(M) (x/M)^a for x >= M.
    let big_m = m_max as f64;
    let growth = if param.nu() == zero() {
        let a = 1.0 + 0.5 * (2.0 * big_m).ln();
        a / (1.0 + a * a)
    } else if param.kind() == SeriesKind::Complementary {
        if t > 1.0 {
            1.0
        } else {
            // asymptotic rate |ν| with a safety margin
            0.5 * (1.0 + param.abs_nu())
        }
    } else {
        0.0
    };
    if 2.0 * t <= growth + 1.0 {
        return (head, f64::INFINITY);
    }
    let integral = 2f64.powf(-t) * big_m.powf(growth + 1.0 - 2.0 * t) / (2.0 * t - growth - 1.0);
    let tail = 2.0 * weight(m_max) * big_m.powf(-growth) * integral;
    (head, tail)
}

/// Discrete series: only `D⁺`, indices `n + m`, `m ≥ 0`.
fn discrete_order_sum(param: &SeriesParam, t: f64, m_max: usize) -> (f64, f64) {
    let n = param.discrete_n().expect("discrete") as i64;
    let mu = param.mu();
    let w = IndexWindow { lo: n, hi: n + m_max as i64 };
    let norms = basis_norms_sq(param, w);
    let head: f64 = w
        .iter()
        .zip(&norms)
        .map(|(k, nsq)| (1.0 + q_unchecked(mu, k)).powf(-t) / nsq)
        .sum();
    // 1/‖u(n+m)‖² = ∏_{i=1}^{2n-1} (m+i)/i grows at most like (m/M)^{2n-1} past M,
    // and 1 + Q(n+m) ≥ 2m².
    let growth = 2.0 * n as f64 - 1.0;
    let big_m = m_max as f64;
    let integral = 2f64.powf(-t) * big_m.powf(growth + 1.0 - 2.0 * t) / (2.0 * t - growth - 1.0);
    let tail = big_m.powf(-growth) * integral / norms[m_max];
    (head, tail)
}

/// `Σ_± ‖φ±‖_t²` with the comparison `(1+μ)^t` (resp. `(1+μ+2n²)^t`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhiSum {
    pub t: f64,
    pub value: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn phi_sobolev_sum(param: &SeriesParam, t: f64) -> PhiSum {
    let value: f64 = DistTag::BOTH
        .iter()
        .map(|&tag| crate::repn::sobolev_norm(&phi(param, tag), t).powi(2))
        .sum();
    let mu = param.mu();
    let bound = match param.discrete_n() {
        Some(n) => (1.0 + mu + 2.0 * (n as f64).powi(2)).powf(t),
        None => (1.0 + mu).powf(t),
    };
    PhiSum { t, value, bound, ratio: value / bound }
}
