//! JSON model files and the built-in examples.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::markov::{uniform_outgoing, MarkovModel};
use crate::projection::{build_factor_system, FactorSystem, Projection};
use crate::tmc::{Alphabet, Tmc};

/// Admissible open interval for the counterexample parameter.
pub const GAMMA_RANGE: (f64, f64) = (0.25, 1.0 / 3.0);
pub const DEFAULT_GAMMA: f64 = 0.3;

/// On-disk model description.
///
/// `transition` defaults to uniform probabilities over allowed successors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub alphabet: Vec<String>,
    pub incidence: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    pub projection: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub options: IndexMap<String, f64>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))
    }

    /// Canonical form: fields in declaration order, projection in file
    /// order, two-space indentation, and arrays of scalars on one line so
    /// that each matrix row reads as a row.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("model serializes");
        let mut out = String::new();
        write_value(&mut out, &value, 0);
        out.push('\n');
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelFile(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate_options(&self) -> Result<()> {
        for (name, &value) in &self.options {
            match name.as_str() {
                "gamma" => check_gamma(value)?,
                _ => return Err(Error::ModelFile(format!("unknown option `{name}`"))),
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<(MarkovModel, Projection)> {
        self.validate_options()?;
        let alphabet = Alphabet::new(self.alphabet.iter().cloned())?;
        let tmc = Tmc::new(alphabet.clone(), &self.incidence)?;
        let n = tmc.size();
        let p = match &self.transition {
            Some(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Dimension(format!("transition must be {n}x{n}")));
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
            None => uniform_outgoing(&tmc),
        };
        let model = MarkovModel::new(tmc, p)?;
        let projection = Projection::from_labels(
            &alphabet,
            self.projection.iter().map(|(a, b)| (a.as_str(), b.as_str())),
        )?;
        Ok((model, projection))
    }

    pub fn factor_system(&self) -> Result<FactorSystem> {
        let (model, projection) = self.build()?;
        build_factor_system(model, projection)
    }
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            let parts: Vec<String> = items.iter().map(Value::to_string).collect();
            out.push('[');
            out.push_str(&parts.join(", "));
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

pub fn load_model(path: &Path) -> Result<(MarkovModel, Projection)> {
    ModelFile::load(path)?.build()
}

fn check_gamma(g: f64) -> Result<()> {
    if g > GAMMA_RANGE.0 && g < GAMMA_RANGE.1 {
        Ok(())
    } else {
        Err(Error::OptionRange {
            name: "gamma".into(),
            value: g,
            range: "(1/4, 1/3)".into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// Five states over three factor symbols, full row allowable.
    Adhoc5,
    /// Full shift on four symbols onto the full two-shift.
    Fullshift4,
    /// Six states onto the full two-shift; the image is not Gibbs.
    Nongibbs6,
    /// Not full row allowable, yet the image is the full two-shift.
    ConverseFalse,
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] = [Self::Adhoc5, Self::Fullshift4, Self::Nongibbs6, Self::ConverseFalse];

    pub fn id(self) -> &'static str {
        match self {
            Self::Adhoc5 => "adhoc5",
            Self::Fullshift4 => "fullshift4",
            Self::Nongibbs6 => "nongibbs6",
            Self::ConverseFalse => "converse_false",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::Setting(format!("unknown example `{s}`")))
    }
}

fn labels(s: &[&str]) -> Vec<String> {
    s.iter().map(|x| x.to_string()).collect()
}

fn projection(pairs: &[(&str, &str)]) -> IndexMap<String, String> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn support(p: &[Vec<f64>]) -> Vec<Vec<u8>> {
    p.iter().map(|r| r.iter().map(|&v| (v > 0.0) as u8).collect()).collect()
}

/// Default transition matrix of `fullshift4`.
pub const FULLSHIFT4_TRANSITION: [[f64; 4]; 4] = [
    [0.1, 0.2, 0.3, 0.4],
    [0.4, 0.1, 0.3, 0.2],
    [0.25, 0.25, 0.2, 0.3],
    [0.3, 0.4, 0.2, 0.1],
];

/// Full shift on `{a, b, c, d}` with `a, b ↦ 0` and `c, d ↦ 1`.
pub fn fullshift4_with(transition: [[f64; 4]; 4]) -> ModelFile {
    ModelFile {
        name: Some("fullshift4".into()),
        alphabet: labels(&["a", "b", "c", "d"]),
        incidence: vec![vec![1; 4]; 4],
        transition: Some(transition.iter().map(|r| r.to_vec()).collect()),
        projection: projection(&[("a", "0"), ("b", "0"), ("c", "1"), ("d", "1")]),
        options: IndexMap::new(),
    }
}

/// The doubly stochastic six-state matrix; requires `1/4 < γ < 1/3`.
pub fn nongibbs6_transition(gamma: f64) -> Vec<Vec<f64>> {
    let g = gamma;
    vec![
        vec![0.0, 0.0, 2.0 * g, g, 1.0 - 3.0 * g, 0.0],
        vec![0.0, 0.0, g, g, 0.0, 1.0 - 2.0 * g],
        vec![0.25, 0.25, 0.0, 0.0, 0.5, 0.0],
        vec![0.25, 0.25, 0.0, 0.0, 0.0, 0.5],
        vec![0.5, 0.0, 1.0 - 3.0 * g, 0.0, 3.0 * g - 0.5, 0.0],
        vec![0.0, 0.5, 0.0, 1.0 - 2.0 * g, 0.0, 2.0 * g - 0.5],
    ]
}

/// Expands a built-in example. `gamma` applies to `nongibbs6` only.
pub fn expand_example(id: ExampleId, gamma: Option<f64>) -> Result<ModelFile> {
    if gamma.is_some() && id != ExampleId::Nongibbs6 {
        return Err(Error::Setting(format!("`{id}` takes no gamma")));
    }
    let m = match id {
        ExampleId::Adhoc5 => {
            let succ: [&[usize]; 5] = [&[1, 2, 3], &[0, 4], &[3], &[0, 4], &[1, 2, 3]];
            let incidence = succ
                .iter()
                .map(|s| (0..5).map(|j| s.contains(&j) as u8).collect())
                .collect();
            ModelFile {
                name: Some(id.id().into()),
                alphabet: labels(&["1", "2", "3", "4", "5"]),
                incidence,
                transition: None,
                projection: projection(&[("1", "a"), ("2", "b"), ("3", "c"), ("4", "b"), ("5", "a")]),
                options: IndexMap::new(),
            }
        }
        ExampleId::Fullshift4 => fullshift4_with(FULLSHIFT4_TRANSITION),
        ExampleId::Nongibbs6 => {
            let g = gamma.unwrap_or(DEFAULT_GAMMA);
            check_gamma(g)?;
            let p = nongibbs6_transition(g);
            ModelFile {
                name: Some(id.id().into()),
                alphabet: labels(&["a", "b", "c", "d", "e", "f"]),
                incidence: support(&p),
                transition: Some(p),
                projection: projection(&[
                    ("a", "0"),
                    ("b", "0"),
                    ("c", "0"),
                    ("d", "0"),
                    ("e", "1"),
                    ("f", "1"),
                ]),
                options: [("gamma".to_string(), g)].into_iter().collect(),
            }
        }
        ExampleId::ConverseFalse => ModelFile {
            name: Some(id.id().into()),
            alphabet: labels(&["a", "b", "c", "d"]),
            incidence: vec![vec![1, 1, 0, 1], vec![1, 1, 1, 0], vec![1, 0, 0, 0], vec![0, 1, 0, 0]],
            transition: None,
            projection: projection(&[("a", "0"), ("b", "1"), ("c", "0"), ("d", "1")]),
            options: IndexMap::new(),
        },
    };
    Ok(m)
}
