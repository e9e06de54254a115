//! Running the harness on a finite direct sum of components, the way the
//! `paracoh` binary does.

use paracoh::harness::{cmd_solve_form, cmd_solve_top, cmd_sweep_bounds, ExperimentConfig};

const CONFIG: &str = r#"{
  "components": [
    {"label": "slow", "factors": [{"kind": "principal", "nu_im": 0.5}, {"kind": "discrete", "n": 1}]},
    {"label": "gap",  "factors": [{"kind": "complementary", "nu": 0.8}, {"kind": "principal", "nu_im": 3.0}]},
    {"label": "fast", "factors": [{"kind": "principal", "nu_im": 20.0}, {"kind": "discrete", "n": 4}]}
  ],
  "k_per_axis": 12,
  "t_list": [1.0, 2.0],
  "seed": 2024,
  "samples": 5
}"#;

fn main() -> paracoh::Result<()> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    println!("config hash {}", &cfg.hash()[..16]);

    let top = cmd_solve_top(&cfg, None)?;
    for c in &top.components {
        let s = c.solve.as_ref().unwrap();
        println!("{:>5}: residual {:.1e}, max ratio at t=1 {:.3e}", c.label, s.relative_residual(), s.max_ratio(1.0).unwrap());
    }
    println!("spread of the max ratio: {:.1}", top.summary["sobolev_ratio_spread"]);

    let forms = cmd_solve_form(&cfg, 1, None)?;
    println!("1-forms: max residual {:.1e}", forms.summary["max_relative_residual"]);

    let sweep = cmd_sweep_bounds(&cfg)?;
    for f in &sweep.fits {
        println!("{}: slope {:.3} over {} points (expected {})", f.name, f.slope, f.points, f.expected);
    }
    for row in sweep.rows.iter().filter(|r| r.param.starts_with("discrete") || r.param.starts_with("regularity")) {
        println!("  {:<28} ratio {:.3e}", row.param, row.ratio);
    }
    Ok(())
}
