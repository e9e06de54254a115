//! Closed leafwise 1- and 2-forms on a rank-3 product and their primitives.

use paracoh::forms::{exterior_derivative, is_closed, solve_primitive, LeafwiseForm};
use paracoh::harness::random::random_form;
use paracoh::repn::SeriesParam;
use paracoh::solver::SolveOptions;
use paracoh::tensor::MultiParam;

fn report(label: &str, omega: &LeafwiseForm) -> paracoh::Result<()> {
    let (eta, r) = solve_primitive(omega, &SolveOptions::default())?;
    let err = exterior_derivative(&eta)?.sub(omega)?.norm0() / omega.norm0();
    println!("{label}: |d eta - omega| / |omega| = {err:.2e}, theta defect {:.1e}, joint fallback {}", r.theta_defect, r.used_joint_fallback);
    Ok(())
}

fn main() -> paracoh::Result<()> {
    let params = MultiParam::with_default_gates(vec![
        SeriesParam::principal(0.0)?,
        SeriesParam::complementary(-0.4)?,
        SeriesParam::discrete(1)?,
    ])?;

    for n in 1..=2 {
        let eta = random_form(&params, n - 1, 8, 3, 0, 2.0)?;
        let omega = exterior_derivative(&eta)?;
        let (closed, defect) = is_closed(&omega, 1e-10)?;
        println!("degree {n}: {} components, closed {closed} ({defect:.1e})", omega.components().len());
        report(&format!("  primitive of a {n}-form"), &omega)?;
    }

    // A random 1-form is not closed.
    let rough = random_form(&params, 1, 8, 4, 0, 2.0)?;
    match solve_primitive(&rough, &SolveOptions::default()) {
        Err(e) => println!("random 1-form: {e}"),
        Ok(_) => println!("random 1-form unexpectedly solved"),
    }
    Ok(())
}
