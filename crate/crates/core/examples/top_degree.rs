//! `U₁g₁ + U₂g₂ + U₃g₃ = f` on a product of three representations.

use paracoh::harness::random::random_kernel_tensor;
use paracoh::repn::SeriesParam;
use paracoh::solver::{coboundary, regularity_check, solve_top, split, split_slice_defect, SolveOptions};
use paracoh::tensor::{kernel_defect, phi_product, MultiParam, MultiTag};

fn main() -> paracoh::Result<()> {
    let params = MultiParam::with_default_gates(vec![
        SeriesParam::principal(1.0)?,
        SeriesParam::complementary(0.5)?,
        SeriesParam::discrete(2)?,
    ])?;

    let f = random_kernel_tensor(&params, 16, 7, 0, 3.0)?;
    println!("f: {} coefficients, kernel defect {:.1e}", f.len(), kernel_defect(&f));

    let sp = split(&f)?;
    println!("split: |f_x|_0 = {:.3e}, |f_d|_0 = {:.3e}, slice defect {:.1e}", sp.f_otimes.norm0(), sp.f_d.norm0(), split_slice_defect(&sp)?);
    println!("regularity |f_x|_1 / |f|_2.5 = {:.3e}", regularity_check(&f, 1.0)?);

    let (g, report) = solve_top(&f, &SolveOptions::default())?;
    let back = coboundary(&g)?;
    println!("relative residual {:.2e}", report.relative_residual());
    println!("windows of g1: {:?}", g[0].windows());
    println!("|sum U_i g_i|_0 = {:.6e}, |f|_0 = {:.6e}", back.norm0(), f.norm0());

    for tag in MultiTag::all_valid(&params) {
        let obstructed = phi_product(&params, &tag)?;
        let verdict = solve_top(&obstructed, &SolveOptions::default()).map(|_| ()).map_err(|e| e.to_string());
        println!("Phi_{}: {verdict:?}", tag.label());
    }
    Ok(())
}
