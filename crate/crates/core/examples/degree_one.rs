//! Solving `U g = f` in a single representation, and what happens when
//! `f` is obstructed.

use paracoh::repn::{apply_u, CoeffVector, SeriesParam};
use paracoh::solver::{obstruction_order, obstruction_residual, solve_degree1, SolveOptions};
use paracoh::Error;

fn main() -> paracoh::Result<()> {
    let p = SeriesParam::principal(1.5)?;
    let g = CoeffVector::from_fn(p, p.window(40), |k| (1.0 / (1.0 + (k * k) as f64)).into())?;
    let f = apply_u(&g);

    let (solved, report) = solve_degree1(&f, &SolveOptions::default())?;
    let err = solved.embed(g.window())?.axpy((-1.0).into(), &g)?.norm0() / g.norm0();
    println!("relative residual {:.2e}, distance to the true g {:.2e}", report.relative_residual(), err);
    for r in &report.sobolev_ratios {
        println!("  t = {}: |g|_t / |f|_sigma = {:.3e} (sigma = {})", r.t, r.ratios[0], r.sigma);
    }

    // The lowest weight vector of a discrete series is not a coboundary.
    let d = SeriesParam::discrete(2)?;
    let u = CoeffVector::basis(d, 2)?;
    match solve_degree1(&u, &SolveOptions::default()) {
        Err(Error::NotInKernel { defect, .. }) => println!("u(2) rejected, |D+(u)| = {defect}"),
        other => println!("unexpected: {other:?}"),
    }
    let s = obstruction_order(&d);
    for k in [16, 64, 256] {
        let w = d.window(k);
        println!("  best W^{s} residual on {} indices: {:.4}", w.len(), obstruction_residual(&u, w, s)?);
    }
    Ok(())
}
