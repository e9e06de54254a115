//! Test-side oracles, written from the defining formulas and independent of
//! the library's own kernels.
#![allow(dead_code)]

use paracoh::repn::{CoeffVector, IndexWindow, SeriesParam, C64};
use paracoh::tensor::{MultiParam, TensorCoeffs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(1+ν)/2 ± k`.
fn ladder(p: &SeriesParam, k: i64) -> (C64, C64) {
    let h = (C64::new(1.0, 0.0) + p.nu()) / 2.0;
    (h + k as f64, h - k as f64)
}

/// `U` from `U u(k) = ik u(k) - (i/2)c⁺(k) u(k+1) + (i/2)c⁻(k) u(k-1)`,
/// evaluated point by point on the window grown by one.
pub fn oracle_u(f: &CoeffVector) -> Vec<(i64, C64)> {
    let w = f.window();
    let i = c(0.0, 1.0);
    (w.lo - 1..=w.hi + 1)
        .filter(|j| f.param().contains(*j))
        .map(|j| {
            let mut v = i * j as f64 * f.get(j);
            v += -i * 0.5 * ladder(f.param(), j - 1).0 * f.get(j - 1);
            v += i * 0.5 * ladder(f.param(), j + 1).1 * f.get(j + 1);
            (j, v)
        })
        .collect()
}

/// `‖u(k)‖²` from skew-adjointness between neighbours,
/// `N(k+1)/N(k) = -conj(c⁻(k+1))/c⁺(k)`, normalised at the lowest weight
/// (or at 0).
pub fn oracle_norm_sq(p: &SeriesParam, k: i64) -> f64 {
    let start = p.lowest_index().unwrap_or(0);
    let mut n = 1.0;
    if k >= start {
        for j in start..k {
            n *= (-ladder(p, j + 1).1.conj() / ladder(p, j).0).re;
        }
    } else {
        for j in (k..start).rev() {
            n /= (-ladder(p, j + 1).1.conj() / ladder(p, j).0).re;
        }
    }
    n
}

/// Random vector with coefficients of size `(1+k²)^{-p}` in an orthonormal frame.
pub fn random_vector(rng: &mut ChaCha8Rng, p: SeriesParam, w: IndexWindow, decay: f64) -> CoeffVector {
    let coeffs = w
        .iter()
        .map(|k| {
            let s = (1.0 + (k * k) as f64).powf(-decay) / oracle_norm_sq(&p, k).sqrt();
            c(rng_val(rng), rng_val(rng)) * s
        })
        .collect();
    CoeffVector::new(p, w, coeffs).unwrap()
}

fn rng_val(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() - 0.5
}

pub fn norm0(v: &[(i64, C64)], p: &SeriesParam) -> f64 {
    v.iter().map(|(k, x)| x.norm_sqr() * oracle_norm_sq(p, *k)).sum::<f64>().sqrt()
}

/// Least-squares slope.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Unweighted `‖a - b‖₂ / ‖b‖₂` on the union of the supports, the norm
/// factors applied once so that it is the `L²` distance.
pub fn tensor_relative_error(a: &TensorCoeffs, b: &TensorCoeffs) -> f64 {
    let w = a.union_windows(b);
    let (a, b) = (a.embed(&w).unwrap(), b.embed(&w).unwrap());
    let diff = a.sub(&b).unwrap();
    diff.norm0() / b.norm0()
}

pub fn grid() -> Vec<SeriesParam> {
    let mut v: Vec<SeriesParam> = [0.0, 1.0, 10.0].iter().map(|&s| SeriesParam::principal(s).unwrap()).collect();
    for nu in [0.1, 0.5, 0.9] {
        v.push(SeriesParam::complementary(nu).unwrap());
        v.push(SeriesParam::complementary(-nu).unwrap());
    }
    for n in [1, 2, 5] {
        v.push(SeriesParam::discrete(n).unwrap());
    }
    v
}

pub fn multi(factors: Vec<SeriesParam>) -> MultiParam {
    MultiParam::with_default_gates(factors).unwrap()
}
