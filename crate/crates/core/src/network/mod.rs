//! Network descriptions, model assembly and flux lifts.

mod lift;
mod model;
pub mod presets;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::min_eig_sym;

pub use lift::{conserved_lift_system, ConservedLiftSystem, TiltLift};
pub use model::{Controllability, LinearModel, StructuralReport};

/// One heat reservoir attached to a boundary oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reservoir {
    pub id: String,
    /// Position of the oscillator in the ordered index set.
    #[serde(skip)]
    pub index: usize,
    pub gamma: f64,
    pub theta: f64,
}

/// Validated description of an oscillator network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub oscillator_ids: Vec<String>,
    pub kappa_sq: DMatrix<f64>,
    pub boundary: Vec<Reservoir>,
    /// Temperatures as written in the source, when they were rescaled on load.
    pub raw_temperatures: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixRows {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    oscillators: Vec<String>,
    kappa_sq: MatrixRows,
    boundary: Vec<BoundaryEntry>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    normalize_temperatures: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryEntry {
    id: String,
    gamma: f64,
    theta: f64,
}

/// Parses and validates a TOML network document.
///
/// ```
/// let doc = r#"
/// oscillators = ["a"]
/// kappa_sq = [[1.0]]
/// boundary = [{ id = "a", gamma = 1.0, theta = 1.0 }]
/// "#;
/// let spec = fluxnet::network::parse_spec(doc).unwrap();
/// assert_eq!(spec.oscillator_ids.len(), 1);
/// ```
pub fn parse_spec(document: &str) -> Result<NetworkSpec> {
    let doc: Document = toml::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    let n = doc.oscillators.len();
    let kappa_sq = match doc.kappa_sq {
        MatrixRows::Rows(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidNetwork(format!("kappa_sq must be {n}x{n}")));
            }
            DMatrix::from_fn(n, n, |i, j| rows[i][j])
        }
        MatrixRows::Flat(v) => {
            if v.len() != n * n {
                return Err(Error::InvalidNetwork(format!("kappa_sq must have {} entries", n * n)));
            }
            DMatrix::from_row_slice(n, n, &v)
        }
    };
    let boundary = doc
        .boundary
        .into_iter()
        .map(|b| Reservoir { id: b.id, index: 0, gamma: b.gamma, theta: b.theta })
        .collect();
    let spec = NetworkSpec::new(doc.oscillators, kappa_sq, boundary)?;
    Ok(if doc.normalize_temperatures { spec.normalized() } else { spec })
}

impl NetworkSpec {
    /// Builds and validates a network description; reservoir indices are resolved from ids.
    pub fn new(oscillator_ids: Vec<String>, kappa_sq: DMatrix<f64>, mut boundary: Vec<Reservoir>) -> Result<Self> {
        let n = oscillator_ids.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("no oscillators".into()));
        }
        for (i, id) in oscillator_ids.iter().enumerate() {
            if oscillator_ids[..i].contains(id) {
                return Err(Error::InvalidNetwork(format!("duplicate oscillator id '{id}'")));
            }
        }
        if kappa_sq.nrows() != n || kappa_sq.ncols() != n {
            return Err(Error::InvalidNetwork(format!("kappa_sq must be {n}x{n}")));
        }
        if kappa_sq.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidNetwork("kappa_sq has non-finite entries".into()));
        }
        let scale = kappa_sq.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (kappa_sq[(i, j)] - kappa_sq[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidNetwork(format!(
                        "kappa_sq is not symmetric at ({}, {})",
                        oscillator_ids[i], oscillator_ids[j]
                    )));
                }
            }
        }
        let min_eig = min_eig_sym(&kappa_sq)?;
        if min_eig <= 0.0 {
            return Err(Error::NotPositiveDefinite { what: "kappa_sq", min_eig });
        }
        if boundary.is_empty() {
            return Err(Error::InvalidNetwork("boundary is empty".into()));
        }
        for k in 0..boundary.len() {
            let r = &boundary[k];
            let Some(index) = oscillator_ids.iter().position(|id| *id == r.id) else {
                return Err(Error::InvalidNetwork(format!("unknown boundary id '{}'", r.id)));
            };
            if boundary[..k].iter().any(|o| o.id == r.id) {
                return Err(Error::InvalidNetwork(format!("duplicate boundary id '{}'", r.id)));
            }
            if !(r.gamma > 0.0 && r.gamma.is_finite()) {
                return Err(Error::InvalidNetwork(format!("gamma of '{}' must be positive", r.id)));
            }
            if !(r.theta > 0.0 && r.theta.is_finite()) {
                return Err(Error::InvalidNetwork(format!("theta of '{}' must be positive", r.id)));
            }
            boundary[k].index = index;
        }
        Ok(Self { oscillator_ids, kappa_sq: kappa_sq.clone(), boundary, raw_temperatures: None })
    }

    pub fn n(&self) -> usize {
        self.oscillator_ids.len()
    }

    pub fn d(&self) -> usize {
        self.boundary.len()
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.boundary.iter().map(|r| r.theta).collect()
    }

    /// True when every reservoir has the same temperature.
    pub fn is_equilibrium(&self) -> bool {
        let t0 = self.boundary[0].theta;
        self.boundary.iter().all(|r| (r.theta - t0).abs() <= 1e-12 * t0)
    }

    /// Rescales temperatures so that the mean inverse temperature equals one,
    /// keeping the original values in `raw_temperatures`.
    pub fn normalized(mut self) -> Self {
        let raw = self.temperatures();
        let c = raw.iter().map(|t| 1.0 / t).sum::<f64>() / raw.len() as f64;
        for r in &mut self.boundary {
            r.theta *= c;
        }
        if self.raw_temperatures.is_none() {
            self.raw_temperatures = Some(raw);
        }
        self
    }

    /// Replaces the reservoir temperatures.
    pub fn with_temperatures(mut self, theta: &[f64]) -> Result<Self> {
        if theta.len() != self.d() {
            return Err(Error::InvalidArgument(format!("expected {} temperatures", self.d())));
        }
        for (r, &t) in self.boundary.iter_mut().zip(theta) {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidNetwork(format!("theta of '{}' must be positive", r.id)));
            }
            r.theta = t;
        }
        self.raw_temperatures = None;
        Ok(self)
    }

    /// Serializes to the TOML schema accepted by [`parse_spec`].
    pub fn to_toml(&self) -> String {
        let n = self.n();
        let temps = self.raw_temperatures.clone().unwrap_or_else(|| self.temperatures());
        let doc = Document {
            name: None,
            oscillators: self.oscillator_ids.clone(),
            kappa_sq: MatrixRows::Rows((0..n).map(|i| (0..n).map(|j| self.kappa_sq[(i, j)]).collect()).collect()),
            boundary: self
                .boundary
                .iter()
                .zip(temps)
                .map(|(r, t)| BoundaryEntry { id: r.id.clone(), gamma: r.gamma, theta: t })
                .collect(),
            normalize_temperatures: self.raw_temperatures.is_some(),
        };
        toml::to_string(&doc).expect("serializable document")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"
        oscillators = ["1"]
        kappa_sq = [[1.0]]
        boundary = [{ id = "1", gamma = 1.0, theta = 1.0 }]
    "#;

    #[test]
    fn parses_single_oscillator() {
        let s = parse_spec(SINGLE).unwrap();
        assert_eq!((s.n(), s.d()), (1, 1));
        assert!(s.is_equilibrium());
    }

    #[test]
    fn rejects_indefinite_kappa() {
        let doc = SINGLE.replace("[[1.0]]", "[[-0.1]]");
        let err = parse_spec(&doc).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { what: "kappa_sq", .. }));
        assert!(err.to_string().contains("kappa_sq is not positive definite"));
    }

    #[test]
    fn rejects_bad_boundary() {
        assert!(parse_spec(&SINGLE.replace("id = \"1\"", "id = \"2\"")).is_err());
        assert!(parse_spec(&SINGLE.replace("gamma = 1.0", "gamma = 0.0")).is_err());
        assert!(parse_spec(&SINGLE.replace("theta = 1.0", "theta = -2.0")).is_err());
        assert!(parse_spec("oscillators = [").unwrap_err().is_input_error());
    }

    #[test]
    fn flat_matrix_and_asymmetry() {
        let doc = r#"
            oscillators = ["a", "b"]
            kappa_sq = [2.0, 0.5, 0.5, 2.0]
            boundary = [{ id = "a", gamma = 1.0, theta = 2.0 }]
        "#;
        assert_eq!(parse_spec(doc).unwrap().kappa_sq[(0, 1)], 0.5);
        assert!(parse_spec(&doc.replace("0.5, 0.5", "0.5, 0.4")).is_err());
    }

    #[test]
    fn normalization_keeps_raw_values() {
        let s = presets::lozenge(&[1.0, 2.0, 4.0]).unwrap();
        let inv_mean: f64 = s.temperatures().iter().map(|t| 1.0 / t).sum::<f64>() / 3.0;
        assert!((inv_mean - 1.0).abs() < 1e-14);
        assert_eq!(s.raw_temperatures.as_deref(), Some(&[1.0, 2.0, 4.0][..]));
        let round = parse_spec(&s.to_toml()).unwrap();
        assert_eq!(round, s);
    }
}
