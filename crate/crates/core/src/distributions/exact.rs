//! Exact rational arithmetic for the invariance and duality identities at
//! rational real `ν` (`ν = 0`, complementary `ν = p/q`, discrete `ν = 2n-1`).
//!
//! For real `ν` every ladder coefficient is real and `U = i·B` with
//! `B u(k) = k u(k) - ½c⁺(k) u(k+1) + ½c⁻(k) u(k-1)`, so both identities reduce
//! to statements about `B` over the rationals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::DistTag;

pub type Rational = BigRational;

/// A representation with rational real `ν`.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactParam {
    /// Principal series at `ν = 0`.
    PrincipalZero,
    /// Complementary series with `ν = num/den`.
    Complementary { nu: Rational },
    /// Discrete series with lowest weight `n` (`ν = 2n - 1`).
    Discrete { n: u32 },
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl ExactParam {
    pub fn complementary(num: i64, den: i64) -> Self {
        ExactParam::Complementary { nu: Rational::new(BigInt::from(num), BigInt::from(den)) }
    }

    pub fn nu(&self) -> Rational {
        match self {
            ExactParam::PrincipalZero => Rational::zero(),
            ExactParam::Complementary { nu } => nu.clone(),
            ExactParam::Discrete { n } => rat(2 * *n as i64 - 1),
        }
    }

    pub fn lowest_index(&self) -> Option<i64> {
        match self {
            ExactParam::Discrete { n } => Some(*n as i64),
            _ => None,
        }
    }

    pub fn has_minus(&self) -> bool {
        !matches!(self, ExactParam::Discrete { .. })
    }

    fn c_plus(&self, k: i64) -> Rational {
        (Rational::one() + self.nu()) / rat(2) + rat(k)
    }

    fn c_minus(&self, k: i64) -> Rational {
        (Rational::one() + self.nu()) / rat(2) - rat(k)
    }
}

/// Sparse exact vector `k ↦ coefficient`.
pub type ExactVector = BTreeMap<i64, Rational>;

/// `D^tag(u(k))` over the rationals.
pub fn dist_value(param: &ExactParam, tag: DistTag, k: i64) -> Rational {
    match tag {
        DistTag::Plus => Rational::one(),
        DistTag::Minus if !param.has_minus() => Rational::zero(),
        DistTag::Minus => {
            let nu = param.nu();
            let m = k.unsigned_abs() as i64;
            if nu.is_zero() {
                (1..=m).map(|i| Rational::one() / rat(2 * i - 1)).fold(Rational::zero(), |a, b| a + b)
            } else {
                (1..=m)
                    .map(|i| (rat(2 * i - 1) - &nu) / (rat(2 * i - 1) + &nu))
                    .fold(Rational::one(), |a, b| a * b)
            }
        }
    }
}

/// `B u(k)` where `U = i B`.
pub fn ladder_image(param: &ExactParam, k: i64) -> ExactVector {
    let mut out = ExactVector::new();
    let half = Rational::new(BigInt::from(1), BigInt::from(2));
    if !rat(k).is_zero() {
        out.insert(k, rat(k));
    }
    out.insert(k + 1, -(&half * param.c_plus(k)));
    let cm = param.c_minus(k);
    if !cm.is_zero() {
        out.insert(k - 1, &half * cm);
    }
    out
}

pub fn evaluate(param: &ExactParam, tag: DistTag, f: &ExactVector) -> Rational {
    f.iter().map(|(k, c)| c * dist_value(param, tag, *k)).fold(Rational::zero(), |a, b| a + b)
}

/// `D^tag(U u(k)) / i`, which must be exactly zero.
pub fn invariance_defect(param: &ExactParam, tag: DistTag, k: i64) -> Rational {
    evaluate(param, tag, &ladder_image(param, k))
}

pub fn phi(param: &ExactParam, tag: DistTag) -> ExactVector {
    let mut out = ExactVector::new();
    match param {
        ExactParam::Discrete { n } => {
            if tag == DistTag::Plus {
                out.insert(*n as i64, Rational::one());
            }
        }
        ExactParam::PrincipalZero => match tag {
            DistTag::Plus => {
                out.insert(0, Rational::one());
            }
            DistTag::Minus => {
                out.insert(0, -Rational::one());
                out.insert(1, Rational::one());
            }
        },
        ExactParam::Complementary { nu } => {
            let two_nu = rat(2) * nu;
            let lower = (nu - Rational::one()) / &two_nu;
            let upper = (nu + Rational::one()) / &two_nu;
            match tag {
                DistTag::Plus => {
                    out.insert(0, lower);
                    out.insert(1, upper);
                }
                DistTag::Minus => {
                    out.insert(0, upper.clone());
                    out.insert(1, -upper);
                }
            }
        }
    }
    out
}

/// `[D^a(φ_b)]` over the rationals, rows and columns ordered `(+, -)`.
pub fn pairing_matrix(param: &ExactParam) -> [[Rational; 2]; 2] {
    let entry = |a: DistTag, b: DistTag| evaluate(param, a, &phi(param, b));
    [
        [entry(DistTag::Plus, DistTag::Plus), entry(DistTag::Plus, DistTag::Minus)],
        [entry(DistTag::Minus, DistTag::Plus), entry(DistTag::Minus, DistTag::Minus)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> Vec<ExactParam> {
        vec![ExactParam::PrincipalZero, ExactParam::complementary(1, 2), ExactParam::Discrete { n: 2 }]
    }

    #[test]
    fn invariance_is_exact() {
        for param in params() {
            let lo = param.lowest_index().unwrap_or(-25);
            for k in lo..lo + 50 {
                for tag in DistTag::BOTH {
                    assert!(invariance_defect(&param, tag, k).is_zero(), "{param:?} {tag:?} {k}");
                }
            }
        }
    }

    #[test]
    fn pairing_is_exact_identity() {
        for param in params() {
            let m = pairing_matrix(&param);
            assert!(m[0][0].is_one());
            assert!(m[0][1].is_zero());
            assert!(m[1][0].is_zero());
            if param.has_minus() {
                assert!(m[1][1].is_one());
            } else {
                assert!(m[1][1].is_zero());
            }
        }
    }

    #[test]
    fn minus_value_at_half() {
        let v = dist_value(&ExactParam::complementary(1, 2), DistTag::Minus, 2);
        assert_eq!(v, Rational::new(BigInt::from(5), BigInt::from(21)));
    }

    #[test]
    fn flipped_minus_ladder_breaks_invariance() {
        let param = ExactParam::complementary(1, 2);
        let k = 3;
        let mut image = ladder_image(&param, k);
        let half = Rational::new(BigInt::from(1), BigInt::from(2));
        image.insert(k - 1, -(&half * param.c_minus(k)));
        assert!(!evaluate(&param, DistTag::Minus, &image).is_zero());
    }
}
