//! `D±` and the dual vectors `φ±`.
//!
//! Exact rational checks run alongside the floating-point ones.

use paracoh::distributions::exact::{self, ExactParam};
use paracoh::distributions::{dist_order_sum, evaluate, phi, phi_pairing_matrix, phi_sobolev_sum, DistTag};
use paracoh::repn::{apply_u, CoeffVector, SeriesParam};

fn main() -> paracoh::Result<()> {
    let p = SeriesParam::complementary(0.5)?;

    // D(U v) = 0 for any finitely supported v.
    let v = CoeffVector::from_fn(p, p.window(6), |k| (k as f64).cos().into())?;
    for tag in DistTag::BOTH {
        println!("D{}(v) = {:.5}, D{}(Uv) = {:.1e}", tag.symbol(), evaluate(tag, &v), tag.symbol(), evaluate(tag, &apply_u(&v)).norm());
    }

    let m = phi_pairing_matrix(&p);
    println!("[D^a(phi_b)] = [[{:.3}, {:.3}], [{:.3}, {:.3}]]", m[0][0], m[0][1], m[1][0], m[1][1]);
    println!("phi- = {:?}", phi(&p, DistTag::Minus).coeffs());

    let q = ExactParam::complementary(1, 2);
    println!("exact pairing at nu = 1/2: {:?}", exact::pairing_matrix(&q));
    println!("exact D-(u(3)) = {}", exact::dist_value(&q, DistTag::Minus, 3));

    for s in [1.0, 10.0, 100.0] {
        let o = dist_order_sum(&SeriesParam::principal(s)?, 2.0)?;
        println!("principal s={s:>5}: order sum {:.3e}, (1+mu)^(-3/2) = {:.3e}, terms {}", o.value, o.comparison, o.terms);
    }

    // The φ± blow up as ν → 0; the ε₀ gate keeps products away from this.
    for nu in [0.4, 0.1, 0.01] {
        let s = phi_sobolev_sum(&SeriesParam::complementary(nu)?, 1.0);
        println!("nu={nu:<5} sum |phi|_1^2 = {:.3e}", s.value);
    }
    Ok(())
}
