//! Experiment driver behind the `paracoh` binary: configuration, data files,
//! random inputs, the invariant suites, solver runs over a finite direct sum
//! of components, and parameter sweeps.

pub mod config;
pub mod io;
pub mod random;
pub mod sweep;
pub mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{exterior_derivative, solve_primitive, FormReport, LeafwiseForm};
use crate::solver::{solve_top, SolveReport};
use crate::tensor::{MultiParam, TensorCoeffs};
pub use config::{ComponentSpec, ExperimentConfig, FactorSpec, Tolerances};
pub use sweep::cmd_sweep_bounds;
pub use verify::{cmd_verify_invariants, cmd_verify_invariants_with, standard_ladder, Ladder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub subject: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// A check that passes when `value ≤ threshold`.
    pub fn at_most(name: &str, subject: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), subject: subject.into(), value, threshold, passed: value <= threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentOutcome {
    pub label: String,
    /// `"ok"` or the error message.
    pub status: String,
    pub exit_code: i32,
    pub solve: Option<SolveReport>,
    pub form: Option<FormReport>,
}

impl ComponentOutcome {
    fn failed(label: &str, e: &Error) -> Self {
        Self { label: label.into(), status: e.to_string(), exit_code: e.exit_code(), solve: None, form: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub name: String,
    pub slope: f64,
    pub expected: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub components: Vec<ComponentOutcome>,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<Fit>,
    pub summary: BTreeMap<String, f64>,
    pub files: Vec<String>,
}

impl Report {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            checks: Vec::new(),
            components: Vec::new(),
            rows: Vec::new(),
            fits: Vec::new(),
            summary: BTreeMap::new(),
            files: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.components.iter().all(|c| c.exit_code == 0)
    }

    /// 0 on success, 2 for a failed check, otherwise the largest component
    /// error code.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| !c.passed) {
            return 2;
        }
        self.components.iter().map(|c| c.exit_code).max().unwrap_or(0)
    }

    /// Writes `report.json`, plus `sweep.csv` when there are table rows.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        io::write_json(&out_dir.join("report.json"), self)?;
        if !self.rows.is_empty() {
            let mut w = csv::Writer::from_path(out_dir.join("sweep.csv")).map_err(|e| Error::Config(e.to_string()))?;
            w.write_record(["param", "value", "bound", "ratio"]).map_err(|e| Error::Config(e.to_string()))?;
            for r in &self.rows {
                w.write_record([r.param.clone(), r.value.to_string(), r.bound.to_string(), r.ratio.to_string()])
                    .map_err(|e| Error::Config(e.to_string()))?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

/// Caps the global rayon pool at `PARACOH_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PARACOH_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Config(format!("PARACOH_THREADS={v} is not a count")))?;
        // A pool that already exists (tests, embedding) is left alone.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(())
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn summarize_solves(report: &mut Report, t0: Option<f64>) {
    let solves: Vec<&SolveReport> = report.components.iter().filter_map(|c| c.solve.as_ref()).collect();
    if solves.is_empty() {
        return;
    }
    let max_res = solves.iter().map(|s| s.relative_residual()).fold(0.0, f64::max);
    report.summary.insert("max_relative_residual".into(), max_res);
    if let Some(t) = t0 {
        let ratios: Vec<f64> = solves.iter().filter_map(|s| s.max_ratio(t)).collect();
        report.summary.insert("max_sobolev_ratio".into(), ratios.iter().cloned().fold(0.0, f64::max));
        report.summary.insert("sobolev_ratio_spread".into(), spread(&ratios));
    }
}

/// Solves the top-degree equation in every component: on `input` when
/// given, otherwise on a random element of each component's joint kernel.
pub fn cmd_solve_top(cfg: &ExperimentConfig, input: Option<&TensorCoeffs>) -> Result<Report> {
    cfg.validate()?;
    let opts = cfg.solve_options();
    let mut report = Report::new("solve-top", cfg);
    let jobs: Vec<(String, TensorCoeffs)> = match input {
        Some(f) => vec![("input".into(), f.clone())],
        None => cfg
            .multi_params()?
            .into_iter()
            .enumerate()
            .map(|(i, (label, params))| {
                Ok((label, random::random_kernel_tensor(&params, cfg.k_per_axis, cfg.seed, i as u64, cfg.decay_p)?))
            })
            .collect::<Result<_>>()?,
    };
    report.components = jobs
        .par_iter()
        .map(|(label, f)| match solve_top(f, &opts) {
            Ok((_, r)) => ComponentOutcome { label: label.clone(), status: "ok".into(), exit_code: 0, solve: Some(r), form: None },
            Err(e) => ComponentOutcome::failed(label, &e),
        })
        .collect();
    summarize_solves(&mut report, cfg.t_list.first().copied());
    Ok(report)
}

fn closed_form(params: &MultiParam, degree: usize, cfg: &ExperimentConfig, stream: u64) -> Result<LeafwiseForm> {
    let eta = random::random_form(params, degree - 1, cfg.k_per_axis, cfg.seed, stream, cfg.decay_p)?;
    exterior_derivative(&eta)
}

/// Finds primitives of closed forms of degree `degree` in every component;
/// random inputs are `ω = dη` for a random `η`.
pub fn cmd_solve_form(cfg: &ExperimentConfig, degree: usize, input: Option<&LeafwiseForm>) -> Result<Report> {
    cfg.validate()?;
    let d = input.map_or(cfg.dim(), LeafwiseForm::dim);
    if degree == 0 || degree >= d {
        return Err(Error::InvalidDegree { degree, dim: d, reason: "primitives are solved for 1 ≤ n ≤ d - 1" });
    }
    let opts = cfg.solve_options();
    let mut report = Report::new("solve-form", cfg);
    let jobs: Vec<(String, LeafwiseForm)> = match input {
        Some(w) => {
            if w.degree() != degree {
                return Err(Error::InvalidDegree { degree: w.degree(), dim: d, reason: "input degree differs from the request" });
            }
            vec![("input".into(), w.clone())]
        }
        None => cfg
            .multi_params()?
            .into_iter()
            .enumerate()
            .map(|(i, (label, params))| Ok((label, closed_form(&params, degree, cfg, i as u64)?)))
            .collect::<Result<_>>()?,
    };
    report.components = jobs
        .par_iter()
        .map(|(label, w)| match solve_primitive(w, &opts) {
            Ok((_, r)) => ComponentOutcome { label: label.clone(), status: "ok".into(), exit_code: 0, solve: None, form: Some(r) },
            Err(e) => ComponentOutcome::failed(label, &e),
        })
        .collect();
    let forms: Vec<&FormReport> = report.components.iter().filter_map(|c| c.form.as_ref()).collect();
    if !forms.is_empty() {
        let max_res = forms.iter().map(|f| f.relative_residual()).fold(0.0, f64::max);
        report.summary.insert("max_relative_residual".into(), max_res);
    }
    Ok(report)
}

/// Writes a random input per component into `out_dir`: a joint-kernel
/// tensor, or a closed form when `form_degree` is set.
pub fn cmd_gen(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    cfg.validate()?;
    let mut report = Report::new("gen", cfg);
    for (i, (label, params)) in cfg.multi_params()?.into_iter().enumerate() {
        let path: PathBuf = match cfg.form_degree {
            Some(n) => {
                let p = out_dir.join(format!("{label}.form.json"));
                io::save_form(&p, &closed_form(&params, n, cfg, i as u64)?)?;
                p
            }
            None => {
                let p = out_dir.join(format!("{label}.tensor.json"));
                io::save_tensor(&p, &random::random_kernel_tensor(&params, cfg.k_per_axis, cfg.seed, i as u64, cfg.decay_p)?)?;
                p
            }
        };
        report.files.push(path.display().to_string());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"components":[
                {"label":"a","factors":[{"kind":"principal","nu_im":1.0},{"kind":"principal","nu_im":2.0}]},
                {"label":"b","factors":[{"kind":"complementary","nu":0.5},{"kind":"discrete","n":1}]},
                {"label":"c","factors":[{"kind":"discrete","n":2},{"kind":"principal","nu_im":0.0}]}],
              "k_per_axis": 8, "seed": 42}"#,
        )
        .unwrap()
    }

    #[test]
    fn solve_top_on_three_components() {
        let r = cmd_solve_top(&small(), None).unwrap();
        assert_eq!(r.components.len(), 3);
        assert!(r.passed(), "{:?}", r.components);
        assert!(r.summary["max_relative_residual"] <= 1e-6);
    }

    #[test]
    fn runs_are_deterministic() {
        let a = cmd_solve_top(&small(), None).unwrap();
        let b = cmd_solve_top(&small(), None).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn gate_violations_reject_the_run() {
        let mut cfg = small();
        cfg.components[0].factors[0] = FactorSpec::Complementary { nu: 0.02 };
        assert!(matches!(cmd_solve_top(&cfg, None), Err(Error::AssumptionGate { .. })));
    }

    #[test]
    fn single_factor_reduces_to_degree_one() {
        let cfg = ExperimentConfig::from_json(
            r#"{"components":[{"label":"d1","factors":[{"kind":"discrete","n":3}]}],"k_per_axis":20}"#,
        )
        .unwrap();
        let r = cmd_solve_top(&cfg, None).unwrap();
        assert!(r.passed());
        assert_eq!(r.components[0].solve.as_ref().unwrap().sobolev_ratios[0].ratios.len(), 1);
    }

    #[test]
    fn form_degree_checks() {
        let cfg = small();
        assert!(matches!(cmd_solve_form(&cfg, 2, None), Err(Error::InvalidDegree { .. })));
        let r = cmd_solve_form(&cfg, 1, None).unwrap();
        assert!(r.passed(), "{:?}", r.components);
    }

    #[test]
    fn gen_then_solve_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let r = cmd_gen(&cfg, dir.path()).unwrap();
        assert_eq!(r.files.len(), 3);
        let f = io::load_tensor(Path::new(&r.files[1]), cfg.eps0, cfg.nu0).unwrap();
        let solved = cmd_solve_top(&cfg, Some(&f)).unwrap();
        assert!(solved.passed());
        r.write(dir.path()).unwrap();
        assert!(dir.path().join("report.json").exists());
    }
}
