use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub task_id: String,
    /// Work in time-resource units: one unit is served in 1 ms by one
    /// resource unit.
    pub resource_units: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceTypeSpec {
    pub type_id: String,
    pub task_chain: Vec<TaskSpec>,
    pub deadline_ms: u64,
    /// Relative frequency as configured; normalized by [`Catalog::new`].
    pub probability: f64,
    #[serde(default)]
    pub uplink_bits: f64,
    #[serde(default)]
    pub downlink_bits: f64,
    /// Fixed per-vehicle request period for deterministic workloads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_ms: Option<u64>,
}

impl ServiceTypeSpec {
    pub fn total_units(&self) -> f64 {
        self.task_chain.iter().map(|t| t.resource_units).sum()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("service type `{0}` has an empty task chain")]
    EmptyChain(String),
    #[error("service type `{type_id}`: {message}")]
    Invalid { type_id: String, message: String },
    #[error("duplicate service type `{0}`")]
    Duplicate(String),
}

/// Validated service-type catalog with probabilities normalized to sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    types: Vec<ServiceTypeSpec>,
    configured_weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Catalog {
    pub fn new(mut types: Vec<ServiceTypeSpec>) -> Result<Self, CatalogError> {
        if types.is_empty() {
            return Err(CatalogError::EmptyCatalog);
        }
        for (i, t) in types.iter().enumerate() {
            let invalid = |message: &str| CatalogError::Invalid {
                type_id: t.type_id.clone(),
                message: message.to_string(),
            };
            if t.task_chain.is_empty() {
                return Err(CatalogError::EmptyChain(t.type_id.clone()));
            }
            if t.type_id.is_empty() || t.type_id.contains([',', ';', '=', '|', ' ']) {
                return Err(invalid("type_id must be non-empty without separators"));
            }
            if t.task_chain.iter().any(|task| !(task.resource_units > 0.0)) {
                return Err(invalid("task resource_units must be > 0"));
            }
            if t.deadline_ms == 0 {
                return Err(invalid("deadline_ms must be > 0"));
            }
            if !(t.probability >= 0.0 && t.probability.is_finite()) {
                return Err(invalid("probability must be finite and >= 0"));
            }
            if t.uplink_bits < 0.0 || t.downlink_bits < 0.0 {
                return Err(invalid("data sizes must be >= 0"));
            }
            if types[..i].iter().any(|o| o.type_id == t.type_id) {
                return Err(CatalogError::Duplicate(t.type_id.clone()));
            }
        }
        let total: f64 = types.iter().map(|t| t.probability).sum();
        if !(total > 0.0) {
            return Err(CatalogError::Invalid {
                type_id: types[0].type_id.clone(),
                message: "probabilities sum to zero".into(),
            });
        }
        let configured_weights = types.iter().map(|t| t.probability).collect();
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(types.len());
        for t in &mut types {
            t.probability /= total;
            acc += t.probability;
            cumulative.push(acc);
        }
        *cumulative.last_mut().expect("non-empty") = 1.0;
        Ok(Catalog {
            types,
            configured_weights,
            cumulative,
        })
    }

    pub fn types(&self) -> &[ServiceTypeSpec] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn index_of(&self, type_id: &str) -> Option<usize> {
        self.types.iter().position(|t| t.type_id == type_id)
    }

    /// Weights exactly as configured, before normalization.
    pub fn configured_weights(&self) -> &[f64] {
        &self.configured_weights
    }

    /// True when the configured weights did not already sum to 1 ± 1e-9.
    pub fn was_renormalized(&self) -> bool {
        (self.configured_weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
    }

    pub fn max_deadline_ms(&self) -> u64 {
        self.types.iter().map(|t| t.deadline_ms).max().unwrap_or(1)
    }

    pub fn max_units(&self) -> f64 {
        self.types
            .iter()
            .map(ServiceTypeSpec::total_units)
            .fold(0.0, f64::max)
    }

    /// Index of a catalog entry drawn according to the probabilities.
    pub fn sample_index(&self, rng: &mut RngStream) -> usize {
        let u = rng.uniform();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.types.len() - 1)
    }
}

pub fn sample_service_request<'a>(
    catalog: &'a [ServiceTypeSpec],
    rng: &mut RngStream,
) -> Result<&'a ServiceTypeSpec, CatalogError> {
    if catalog.is_empty() {
        return Err(CatalogError::EmptyCatalog);
    }
    let total: f64 = catalog.iter().map(|t| t.probability).sum();
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * total;
    let mut acc = 0.0;
    for t in catalog {
        acc += t.probability;
        if u < acc {
            return Ok(t);
        }
    }
    Ok(catalog.last().expect("non-empty"))
}

fn task(id: &str, units: f64) -> TaskSpec {
    TaskSpec {
        task_id: id.to_string(),
        resource_units: units,
    }
}

/// Eight-entry synthetic catalog over tasks F1 (3 units) and F2 (30 units).
///
/// The listed weights sum to 1.125; [`Catalog::new`] renormalizes them and
/// keeps the configured values for reporting.
pub fn synthetic_catalog() -> Catalog {
    let f1 = || task("F1", 3.0);
    let f2 = || task("F2", 30.0);
    let entries: [(&str, Vec<TaskSpec>, u64, f64); 8] = [
        ("F1-300", vec![f1()], 300, 0.1875),
        ("F1-50", vec![f1()], 50, 0.1875),
        ("F2-300", vec![f2()], 300, 0.0625),
        ("F2-50", vec![f2()], 50, 0.0625),
        ("F1F2-300", vec![f1(), f2()], 300, 0.1875),
        ("F1F2-50", vec![f1(), f2()], 50, 0.1875),
        ("F2F1-300", vec![f2(), f1()], 300, 0.0625),
        ("F2F1-50", vec![f2(), f1()], 50, 0.1875),
    ];
    let types = entries
        .into_iter()
        .map(|(id, chain, deadline, p)| ServiceTypeSpec {
            type_id: id.to_string(),
            task_chain: chain,
            deadline_ms: deadline,
            probability: p,
            uplink_bits: 0.0,
            downlink_bits: 0.0,
            period_ms: None,
        })
        .collect();
    Catalog::new(types).expect("synthetic catalog is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::derive_stream;

    #[test]
    fn synthetic_entries_match_listing() {
        let cat = synthetic_catalog();
        let f1_300 = cat.index_of("F1-300").unwrap();
        assert_eq!(cat.configured_weights()[f1_300], 0.1875);
        assert_eq!(cat.types()[f1_300].task_chain[0].resource_units, 3.0);
        let f2 = cat.index_of("F2-50").unwrap();
        assert_eq!(cat.types()[f2].task_chain[0].resource_units, 30.0);
        assert!(cat.was_renormalized());
        let sum: f64 = cat.types().iter().map(|t| t.probability).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!((cat.types()[f1_300].probability - 0.1875 / 1.125).abs() < 1e-12);
    }

    #[test]
    fn sampled_frequency_tracks_normalized_probability() {
        let cat = synthetic_catalog();
        let mut rng = derive_stream(3, "vehicle/0");
        let idx = cat.index_of("F1-300").unwrap();
        let n = 100_000;
        let hits = (0..n).filter(|_| cat.sample_index(&mut rng) == idx).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - cat.types()[idx].probability).abs() < 0.01, "{freq}");
    }

    #[test]
    fn single_entry_catalog_always_returns_it() {
        let cat = synthetic_catalog();
        let one = vec![cat.types()[2].clone()];
        let mut rng = derive_stream(1, "x");
        for _ in 0..100 {
            assert_eq!(sample_service_request(&one, &mut rng).unwrap().type_id, "F2-300");
        }
    }

    #[test]
    fn empty_catalog_errors() {
        let mut rng = derive_stream(1, "x");
        assert_eq!(
            sample_service_request(&[], &mut rng).unwrap_err(),
            CatalogError::EmptyCatalog
        );
        assert_eq!(Catalog::new(vec![]).unwrap_err(), CatalogError::EmptyCatalog);
    }

    #[test]
    fn rejects_empty_chain() {
        let mut t = synthetic_catalog().types()[0].clone();
        t.task_chain.clear();
        assert!(matches!(Catalog::new(vec![t]), Err(CatalogError::EmptyChain(_))));
    }
}
