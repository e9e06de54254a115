use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::repn::{SeriesKind, SeriesParam};
use crate::solver::{Schedule, SolveOptions};
use crate::tensor::{MultiParam, DEFAULT_EPS0, DEFAULT_NU0};

/// One factor as written in configuration and data files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FactorSpec {
    Principal { nu_im: f64 },
    Complementary { nu: f64 },
    Discrete { n: u32 },
}

impl FactorSpec {
    pub fn to_param(self) -> Result<SeriesParam> {
        match self {
            FactorSpec::Principal { nu_im } => SeriesParam::principal(nu_im),
            FactorSpec::Complementary { nu } => SeriesParam::complementary(nu),
            FactorSpec::Discrete { n } => SeriesParam::discrete(n),
        }
    }

    pub fn from_param(p: &SeriesParam) -> Result<Self> {
        match p.kind() {
            SeriesKind::Principal => Ok(FactorSpec::Principal { nu_im: p.nu().im }),
            SeriesKind::Complementary => Ok(FactorSpec::Complementary { nu: p.nu().re }),
            SeriesKind::Discrete => Ok(FactorSpec::Discrete { n: p.discrete_n().expect("discrete") }),
            SeriesKind::Trivial => Err(Error::Schema("the trivial representation has no file form".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub label: String,
    pub factors: Vec<FactorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub kernel: f64,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { kernel: 1e-8, residual: 1e-6 }
    }
}

fn default_eps0() -> f64 {
    DEFAULT_EPS0
}
fn default_nu0() -> f64 {
    DEFAULT_NU0
}
fn default_k() -> usize {
    16
}
fn default_t() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_pad() -> usize {
    8
}
fn default_refine() -> usize {
    3
}
fn default_decay() -> f64 {
    4.0
}
fn default_samples() -> usize {
    20
}

/// A finite direct sum of tensor-product components plus run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub components: Vec<ComponentSpec>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_nu0")]
    pub nu0: f64,
    #[serde(default = "default_k")]
    pub k_per_axis: usize,
    #[serde(default = "default_t")]
    pub t_list: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_pad")]
    pub pad: usize,
    #[serde(default = "default_refine")]
    pub max_refine: usize,
    /// Exponent `p` of the `(1+Q)^{-p}` decay of random coefficients.
    #[serde(default = "default_decay")]
    pub decay_p: f64,
    /// Random inputs per component for the statistical checks.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub form_degree: Option<usize>,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Three rank-3 components covering the principal `ν ∈ {0, i, 10i}`,
    /// complementary `ν ∈ {0.1, 0.5, 0.9}` and discrete `n ∈ {1, 2, 5}`.
    pub fn default_grid() -> Self {
        let comp = |label: &str, s: f64, nu: f64, n: u32| ComponentSpec {
            label: label.into(),
            factors: vec![
                FactorSpec::Principal { nu_im: s },
                FactorSpec::Complementary { nu },
                FactorSpec::Discrete { n },
            ],
        };
        Self {
            components: vec![comp("low", 0.0, 0.1, 1), comp("mid", 1.0, 0.5, 2), comp("high", 10.0, 0.9, 5)],
            eps0: DEFAULT_EPS0,
            nu0: DEFAULT_NU0,
            k_per_axis: default_k(),
            t_list: default_t(),
            seed: 0,
            tolerances: Tolerances::default(),
            pad: default_pad(),
            max_refine: default_refine(),
            decay_p: default_decay(),
            samples: default_samples(),
            form_degree: None,
            schedule: Schedule::default(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Config("the component list is empty".into()));
        }
        let d = self.components[0].factors.len();
        if d == 0 {
            return Err(Error::Config(format!("component '{}' has no factors", self.components[0].label)));
        }
        if let Some(c) = self.components.iter().find(|c| c.factors.len() != d) {
            return Err(Error::Config(format!("component '{}' has {} factors, expected {d}", c.label, c.factors.len())));
        }
        if self.k_per_axis == 0 {
            return Err(Error::Config("k_per_axis must be positive".into()));
        }
        if !(self.decay_p >= 0.0) {
            return Err(Error::Config("decay_p must be non-negative".into()));
        }
        self.solve_options().validate()?;
        if let Some(n) = self.form_degree {
            if n == 0 || n >= d {
                return Err(Error::InvalidDegree { degree: n, dim: d, reason: "primitives are solved for 1 ≤ n ≤ d - 1" });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.components[0].factors.len()
    }

    /// Builds every component under the shared gates.
    pub fn multi_params(&self) -> Result<Vec<(String, MultiParam)>> {
        self.components
            .iter()
            .map(|c| {
                let factors = c.factors.iter().map(|f| f.to_param()).collect::<Result<Vec<_>>>()?;
                Ok((c.label.clone(), MultiParam::new(factors, self.eps0, self.nu0)?))
            })
            .collect()
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            pad: self.pad,
            tol_kernel: self.tolerances.kernel,
            tol_residual: self.tolerances.residual,
            max_refine: self.max_refine,
            t_list: self.t_list.clone(),
            schedule: self.schedule,
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"components":[{"label":"a","factors":[{"kind":"principal","nu_im":2.0},{"kind":"discrete","n":1}]}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.dim(), 2);
        assert_eq!(cfg.k_per_axis, 16);
        assert_eq!(cfg.multi_params().unwrap().len(), 1);
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(matches!(ExperimentConfig::from_json(r#"{"components":[]}"#), Err(Error::Config(_))));
        let ragged = r#"{"components":[
            {"label":"a","factors":[{"kind":"discrete","n":1}]},
            {"label":"b","factors":[{"kind":"discrete","n":1},{"kind":"discrete","n":2}]}]}"#;
        assert!(matches!(ExperimentConfig::from_json(ragged), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_json(r#"{"components":[], "bogus": 1}"#).is_err());
    }

    #[test]
    fn gate_violation_surfaces_at_build() {
        let cfg = ExperimentConfig::from_json(
            r#"{"components":[{"label":"a","factors":[{"kind":"complementary","nu":0.01}]}]}"#,
        )
        .unwrap();
        assert!(matches!(cfg.multi_params(), Err(Error::AssumptionGate { .. })));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default_grid();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
