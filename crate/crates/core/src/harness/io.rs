//! JSON persistence for coefficient tensors, forms and reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::FactorSpec;
use crate::error::{Error, Result};
use crate::forms::LeafwiseForm;
use crate::repn::{IndexWindow, C64};
use crate::tensor::{MultiParam, TensorCoeffs};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffEntry {
    pub k: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub factors: Vec<FactorSpec>,
    pub windows: Vec<IndexWindow>,
    pub coeffs: Vec<CoeffEntry>,
    pub format_version: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormComponentFile {
    pub axes: Vec<usize>,
    pub coeffs: Vec<CoeffEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormFile {
    pub factors: Vec<FactorSpec>,
    pub windows: Vec<IndexWindow>,
    pub degree: usize,
    pub components: Vec<FormComponentFile>,
    pub format_version: u32,
}

fn factors_of(params: &MultiParam) -> Result<Vec<FactorSpec>> {
    params.factors().iter().map(FactorSpec::from_param).collect()
}

fn sparse(f: &TensorCoeffs) -> Result<Vec<CoeffEntry>> {
    let mut out = Vec::new();
    let mut bad = false;
    f.for_each(|k, c| {
        if !(c.re.is_finite() && c.im.is_finite()) {
            bad = true;
        } else if c != C64::new(0.0, 0.0) {
            out.push(CoeffEntry { k: k.to_vec(), re: c.re, im: c.im });
        }
    });
    if bad {
        return Err(Error::Schema("non-finite coefficient".into()));
    }
    Ok(out)
}

fn dense(params: &MultiParam, windows: &[IndexWindow], coeffs: &[CoeffEntry]) -> Result<TensorCoeffs> {
    for w in windows {
        IndexWindow::new(w.lo, w.hi)?;
    }
    let mut f = TensorCoeffs::zeros(params.clone(), windows.to_vec())?;
    for e in coeffs {
        if !(e.re.is_finite() && e.im.is_finite()) {
            return Err(Error::Schema(format!("non-finite coefficient at {:?}", e.k)));
        }
        if e.k.len() != windows.len() || !e.k.iter().zip(windows).all(|(k, w)| w.contains(*k)) {
            return Err(Error::Schema(format!("index {:?} outside the declared windows", e.k)));
        }
        f.set(&e.k, C64::new(e.re, e.im))?;
    }
    Ok(f)
}

fn params_from(factors: &[FactorSpec], eps0: f64, nu0: f64) -> Result<MultiParam> {
    let ps = factors.iter().map(|f| f.to_param()).collect::<Result<Vec<_>>>()?;
    MultiParam::new(ps, eps0, nu0)
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::Schema(format!("format_version {v} is not supported (expected {FORMAT_VERSION})")));
    }
    Ok(())
}

impl TensorFile {
    pub fn from_tensor(f: &TensorCoeffs) -> Result<Self> {
        Ok(Self {
            factors: factors_of(f.params())?,
            windows: f.windows().to_vec(),
            coeffs: sparse(f)?,
            format_version: FORMAT_VERSION,
        })
    }

    pub fn to_tensor(&self, eps0: f64, nu0: f64) -> Result<TensorCoeffs> {
        check_version(self.format_version)?;
        let params = params_from(&self.factors, eps0, nu0)?;
        dense(&params, &self.windows, &self.coeffs)
    }
}

impl FormFile {
    pub fn from_form(omega: &LeafwiseForm) -> Result<Self> {
        Ok(Self {
            factors: factors_of(omega.params())?,
            windows: omega.windows().to_vec(),
            degree: omega.degree(),
            components: omega
                .components()
                .iter()
                .map(|(axes, c)| Ok(FormComponentFile { axes: axes.clone(), coeffs: sparse(c)? }))
                .collect::<Result<_>>()?,
            format_version: FORMAT_VERSION,
        })
    }

    pub fn to_form(&self, eps0: f64, nu0: f64) -> Result<LeafwiseForm> {
        check_version(self.format_version)?;
        let params = params_from(&self.factors, eps0, nu0)?;
        let mut comps = BTreeMap::new();
        for c in &self.components {
            if comps.insert(c.axes.clone(), dense(&params, &self.windows, &c.coeffs)?).is_some() {
                return Err(Error::Schema(format!("duplicate component {:?}", c.axes)));
            }
        }
        LeafwiseForm::new(self.degree, params, comps)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

pub fn save_tensor(path: &Path, f: &TensorCoeffs) -> Result<()> {
    write_json(path, &TensorFile::from_tensor(f)?)
}

pub fn load_tensor(path: &Path, eps0: f64, nu0: f64) -> Result<TensorCoeffs> {
    read_json::<TensorFile>(path)?.to_tensor(eps0, nu0)
}

pub fn save_form(path: &Path, omega: &LeafwiseForm) -> Result<()> {
    write_json(path, &FormFile::from_form(omega)?)
}

pub fn load_form(path: &Path, eps0: f64, nu0: f64) -> Result<LeafwiseForm> {
    read_json::<FormFile>(path)?.to_form(eps0, nu0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repn::SeriesParam;

    fn sample() -> TensorCoeffs {
        let params = MultiParam::with_default_gates(vec![
            SeriesParam::principal(2.0).unwrap(),
            SeriesParam::discrete(1).unwrap(),
        ])
        .unwrap();
        let w = params.default_windows(3);
        TensorCoeffs::from_fn(params, w, |k| C64::new(1.0 / 3.0 * k[0] as f64, (k[1] as f64).sqrt())).unwrap()
    }

    #[test]
    fn tensor_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.json");
        let f = sample();
        save_tensor(&path, &f).unwrap();
        let g = load_tensor(&path, 0.05, 0.95).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn field_names_match_the_schema() {
        let v = serde_json::to_value(TensorFile::from_tensor(&sample()).unwrap()).unwrap();
        assert_eq!(v["factors"][0]["kind"], "principal");
        assert_eq!(v["factors"][0]["nu_im"], 2.0);
        assert_eq!(v["factors"][1]["n"], 1);
        assert_eq!(v["windows"][1]["lo"], 1);
        assert_eq!(v["format_version"], 1);
        assert!(v["coeffs"][0]["k"].is_array());
    }

    #[test]
    fn rejects_version_and_nan() {
        let mut file = TensorFile::from_tensor(&sample()).unwrap();
        file.format_version = 2;
        assert!(matches!(file.to_tensor(0.05, 0.95), Err(Error::Schema(_))));
        let mut file = TensorFile::from_tensor(&sample()).unwrap();
        file.coeffs[0].re = f64::NAN;
        assert!(matches!(file.to_tensor(0.05, 0.95), Err(Error::Schema(_))));
        let text = r#"{"factors":[{"kind":"discrete","n":1}],"windows":[{"lo":1,"hi":2}],
            "coeffs":[{"k":[1],"re":null,"im":0.0}],"format_version":1}"#;
        assert!(serde_json::from_str::<TensorFile>(text).is_err());
    }
}
