//! The three series, their K-weight bases and the raising/lowering action.
//!
//! ```text
//! cargo run --example representations
//! ```

use paracoh::repn::{apply_u, basis_norm_sq, sobolev_norm, CoeffVector, SeriesParam};

fn main() -> paracoh::Result<()> {
    let params = [
        SeriesParam::principal(2.0)?,
        SeriesParam::complementary(0.5)?,
        SeriesParam::discrete(3)?,
    ];

    for p in &params {
        println!("{p}: mu = {:.4}, lowest index {:?}", p.mu(), p.lowest_index());

        let norms: Vec<String> = p
            .window(3)
            .iter()
            .map(|k| format!("{k}:{:.4}", basis_norm_sq(p, k).unwrap()))
            .collect();
        println!("  |u(k)|^2  {}", norms.join(" "));

        // U moves a basis vector to its two neighbours.
        let k0 = p.lowest_index().unwrap_or(0) + 1;
        let image = apply_u(&CoeffVector::basis(*p, k0)?);
        for (k, c) in image.iter().filter(|(_, c)| c.norm() > 0.0) {
            println!("  U u({k0}) has {c:.3} at u({k})");
        }

        let f = CoeffVector::from_fn(*p, p.window(20), |k| (1.0 + (k * k) as f64).powi(-2).into())?;
        println!("  |f|_0 = {:.4}  |f|_1 = {:.4}  |f|_2 = {:.4}", sobolev_norm(&f, 0.0), sobolev_norm(&f, 1.0), sobolev_norm(&f, 2.0));
    }
    Ok(())
}
