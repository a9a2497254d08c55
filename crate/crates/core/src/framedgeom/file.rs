//! JSON scenario files.

use serde::{Deserialize, Serialize};

use super::{Chart, Scenario};
use crate::error::{Error, Result};
use crate::symexpr::{parse_complex, CExpr, ParseContext};

/// Metric on the frame.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    /// The frame is declared orthonormal.
    FrameOrthonormal,
    /// Euclidean metric of the chart (`h(d/dz_j, d/dz_k) = delta` on a
    /// complex chart).
    Standard,
    /// Explicit Gram matrix of the (holomorphic-type) frame.
    Gram(Vec<Vec<CExpr>>),
}

impl MetricSpec {
    pub(crate) fn full_gram(&self, chart: Chart, rows: &[Vec<CExpr>]) -> Result<Vec<Vec<CExpr>>> {
        let k = rows.len();
        let small: Vec<Vec<CExpr>> = match self {
            MetricSpec::FrameOrthonormal => (0..k)
                .map(|i| (0..k).map(|j| if i == j { CExpr::one() } else { CExpr::zero() }).collect())
                .collect(),
            MetricSpec::Standard => (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| {
                            rows[i]
                                .iter()
                                .zip(&rows[j])
                                .fold(CExpr::zero(), |acc, (a, b)| acc.add(&a.mul(&b.conj())))
                                .canonical()
                        })
                        .collect()
                })
                .collect(),
            MetricSpec::Gram(g) => {
                if g.len() != k || g.iter().any(|r| r.len() != k) {
                    return Err(Error::Validation(vec![format!("gram must be {k} x {k}")]));
                }
                g.clone()
            }
        };
        Ok(match chart {
            Chart::Real(_) => small,
            Chart::Complex(m) => {
                let mut full = vec![vec![CExpr::zero(); 2 * m]; 2 * m];
                for i in 0..m {
                    for j in 0..m {
                        full[i][j] = small[i][j].clone();
                        full[m + i][m + j] = small[i][j].conj();
                    }
                }
                full
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricFile {
    Named(String),
    Gram { gram: Vec<Vec<String>> },
}

/// On-disk scenario description. Expressions use the infix grammar of
/// [`crate::symexpr::parse_complex`]; on complex charts `frame` rows are
/// the coefficients on `d/dz_j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// `"real"` or `"complex"`.
    pub kind: String,
    pub coordinates: Vec<String>,
    pub frame: Vec<Vec<String>>,
    /// Frame indices spanning the distribution.
    pub distribution: Vec<usize>,
    pub metric: MetricFile,
    /// Either one interval per real slot or, on complex charts, one per
    /// complex coordinate (used for both real and imaginary parts).
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub invariant: bool,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<ScenarioFile> {
        serde_json::from_str(text).map_err(|e| Error::Validation(vec![e.to_string()]))
    }

    pub fn build(&self) -> Result<Scenario> {
        let names: Vec<&str> = self.coordinates.iter().map(String::as_str).collect();
        let (chart, ctx) = match self.kind.as_str() {
            "real" => (Chart::Real(names.len()), ParseContext::real(&names)),
            "complex" => (Chart::Complex(names.len()), ParseContext::complex(&names)),
            other => return Err(Error::Validation(vec![format!("unknown kind `{other}`")])),
        };
        let parse = |s: &str| parse_complex(s, &ctx).map_err(Error::from);
        let rows = self
            .frame
            .iter()
            .map(|r| r.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let metric = match &self.metric {
            MetricFile::Named(s) if s == "frame-orthonormal" => MetricSpec::FrameOrthonormal,
            MetricFile::Named(s) if s == "standard" => MetricSpec::Standard,
            MetricFile::Named(s) => return Err(Error::Validation(vec![format!("unknown metric `{s}`")])),
            MetricFile::Gram { gram } => MetricSpec::Gram(
                gram.iter()
                    .map(|r| r.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let mut bounds: Vec<(f64, f64)> = self.bounds.iter().map(|b| (b[0], b[1])).collect();
        if chart.is_complex() && bounds.len() == names.len() {
            bounds = bounds.iter().flat_map(|b| [*b, *b]).collect();
        }
        let s = Scenario::new(
            &self.name,
            chart,
            self.coordinates.clone(),
            rows,
            self.distribution.clone(),
            metric,
            bounds,
            self.seed,
        )?
        .with_description(&self.description);
        Ok(if self.invariant {
            s.with_invariance(self.periodic)
        } else {
            Scenario {
                periodic: self.periodic,
                ..s
            }
        })
    }
}

pub fn load_scenario_file(path: &std::path::Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    ScenarioFile::from_json(&text)?.build()
}
