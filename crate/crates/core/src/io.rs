//! File formats: problem, design and identification configs, and shared helpers.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::control::{default_map, SimulationOptions};
use crate::error::{Error, Result};
use crate::problem::{CaratheodoryProblem, InterpolationProblem};
use crate::specest::BankOptions;
use crate::sphere::{Mobius, Point};

/// A complex number written as `[re, im]` or a bare real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CNum(pub Complex64);

impl Serialize for CNum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for CNum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Pair([f64; 2]),
            Real(f64),
        }
        Ok(CNum(match Raw::deserialize(d).map_err(|_| serde::de::Error::custom("expected a number or [re, im]"))? {
            Raw::Pair([re, im]) => Complex64::new(re, im),
            Raw::Real(re) => Complex64::new(re, 0.0),
        }))
    }
}

pub fn cnums(v: &[Complex64]) -> Vec<CNum> {
    v.iter().map(|&z| CNum(z)).collect()
}

pub fn complexes(v: &[CNum]) -> Vec<Complex64> {
    v.iter().map(|z| z.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    #[default]
    Exterior,
    Disc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub nodes: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicities: Option<Vec<usize>>,
    pub values: Vec<Vec<CNum>>,
    #[serde(default)]
    pub domain: Domain,
    /// Roots of `σ` inside the unit disc; empty selects `σ = z^n`.
    #[serde(default)]
    pub spectral_zeros: Vec<CNum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<usize>,
}

pub enum ParsedProblem {
    Exterior(InterpolationProblem),
    Disc(CaratheodoryProblem),
}

impl ProblemFile {
    pub fn check_multiplicities(&self) -> Result<()> {
        if let Some(m) = &self.multiplicities {
            let got: Vec<usize> = self.values.iter().map(Vec::len).collect();
            if *m != got {
                return Err(Error::Parse(format!("multiplicities {m:?} disagree with value counts {got:?}")));
            }
        }
        Ok(())
    }

    pub fn parse(&self) -> Result<ParsedProblem> {
        self.check_multiplicities()?;
        let values: Vec<Vec<Complex64>> = self.values.iter().map(|v| complexes(v)).collect();
        match self.domain {
            Domain::Exterior => Ok(ParsedProblem::Exterior(InterpolationProblem::new(self.nodes.clone(), values)?)),
            Domain::Disc => {
                let nodes = self
                    .nodes
                    .iter()
                    .map(|p| p.finite().ok_or_else(|| Error::Parse("disc nodes must be finite".into())))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ParsedProblem::Disc(CaratheodoryProblem::new(nodes, values)?))
            }
        }
    }

    pub fn from_exterior(p: &InterpolationProblem, spectral_zeros: &[Complex64]) -> Self {
        ProblemFile {
            nodes: p.nodes.clone(),
            multiplicities: Some(p.multiplicities()),
            values: p.values.iter().map(|v| cnums(v)).collect(),
            domain: Domain::Exterior,
            spectral_zeros: cnums(spectral_zeros),
            pivot: None,
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantFile {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

fn default_relative_degree() -> usize {
    1
}

fn default_frequency_points() -> usize {
    10_000
}

fn default_map_coeffs() -> [f64; 4] {
    let m = default_map();
    [m.a.re, m.b.re, m.c.re, m.d.re]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub plant: PlantFile,
    pub gamma: f64,
    /// `s`-plane points; `"inf"` allowed.
    #[serde(default)]
    pub spectral_zeros: Vec<Point>,
    #[serde(default = "default_relative_degree")]
    pub controller_relative_degree: usize,
    /// Real coefficients `[a, b, c, d]` of `z = (a s + b)/(c s + d)`.
    #[serde(default = "default_map_coeffs")]
    pub map: [f64; 4],
    #[serde(default)]
    pub simulation: SimulationOptions,
    #[serde(default = "default_frequency_points")]
    pub frequency_points: usize,
}

impl DesignFile {
    pub fn mobius(&self) -> Mobius {
        let [a, b, c, d] = self.map;
        let r = |x: f64| Complex64::new(x, 0.0);
        Mobius::new(r(a), r(b), r(c), r(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankFile {
    pub nodes: Vec<CNum>,
    pub multiplicities: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub zeros: Vec<CNum>,
    pub poles: Vec<CNum>,
}

fn polar(r: f64, t: f64) -> CNum {
    CNum(Complex64::from_polar(r, t))
}

fn pair(r: f64, t: f64) -> [CNum; 2] {
    [polar(r, t), polar(r, -t)]
}

fn default_bank() -> BankFile {
    let mut nodes = vec![CNum(Complex64::new(0.0, 0.0))];
    nodes.extend(pair(0.7, 1.34));
    nodes.extend(pair(0.7, 2.1));
    BankFile { nodes, multiplicities: vec![3, 1, 1, 1, 1] }
}

fn default_model() -> ModelFile {
    let zeros = [pair(0.92, 1.5), pair(0.49, 1.4), pair(0.95, 2.5)].concat();
    let poles = [pair(0.8, 2.1), pair(0.83, 1.34), pair(0.76, 0.8)].concat();
    ModelFile { zeros, poles }
}

fn default_samples() -> usize {
    100_000
}

fn default_rank_tol() -> f64 {
    1e-2
}

/// Identification setup. The defaults reproduce the degree-six example: the
/// generating model, a bank with a triple node at the origin and two conjugate
/// pairs, and reduction onto the two dominant zero pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyFile {
    #[serde(default = "default_bank")]
    pub bank: BankFile,
    /// Used for simulation and for analytic covariance.
    #[serde(default = "default_model")]
    pub model: ModelFile,
    /// Roots of `σ` for the solver. `None`: the model zeros when the data come
    /// from the model, `σ = z^n` for external series.
    #[serde(default)]
    pub spectral_zeros: Option<Vec<CNum>>,
    /// Zeros kept for model reduction; `null` disables the reduction.
    #[serde(default = "default_reduced")]
    pub reduced_zeros: Option<Vec<CNum>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub filter: BankOptions,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

fn default_reduced() -> Option<Vec<CNum>> {
    Some([pair(0.92, 1.5), pair(0.95, 2.5)].concat())
}

impl Default for IdentifyFile {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}
