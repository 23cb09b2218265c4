//! Attributed graph datasets and the end-to-end generation pipeline.

use ndarray::Array2;
use thiserror::Error;

use crate::graph::{GraphError, GraphStructure};
use crate::prior::{sample_prior, PriorConfig, PriorSample, Task};
use crate::rng::{self, StreamTag};
use crate::scm::{generate_attributes, ScmError};
use crate::structure::{generate_structure, StructureError};

/// Tolerance on the mean and variance of a standardized regression target.
pub const MOMENT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Regression(Vec<f32>),
    /// Class ids in `0..n_classes`.
    Classification(Vec<u16>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Regression(t) => t.len(),
            Target::Classification(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Invalid(String),
}

/// A graph with node features, node targets, and the prior draw that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraphDataset {
    pub graph: GraphStructure,
    /// `n_nodes x n_features`, row-major.
    pub features: Array2<f32>,
    pub target: Target,
    pub task: Task,
    pub prior: PriorSample,
    pub seed: u64,
}

impl AttributedGraphDataset {
    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Checks every structural and numeric invariant.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::Invalid(m));
        self.graph.validate()?;
        let n = self.n_nodes();
        if self.features.nrows() != n {
            return bad(format!("features have {} rows for {n} nodes", self.features.nrows()));
        }
        if self.features.iter().any(|x| !x.is_finite()) {
            return bad("non-finite feature value".into());
        }
        if self.target.len() != n {
            return bad(format!("target has {} entries for {n} nodes", self.target.len()));
        }
        match (&self.target, self.task) {
            (Target::Regression(t), Task::Regression) => {
                if t.iter().any(|x| !x.is_finite()) {
                    return bad("non-finite target value".into());
                }
                let len = t.len() as f64;
                let mean = t.iter().map(|&x| x as f64).sum::<f64>() / len;
                let var = t.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / len;
                if mean.abs() > MOMENT_TOL || (var - 1.0).abs() > MOMENT_TOL {
                    return bad(format!("regression target not standardized (mean {mean}, variance {var})"));
                }
            }
            (Target::Classification(t), Task::Classification { n_classes }) => {
                if let Some(&c) = t.iter().find(|&&c| c >= n_classes) {
                    return bad(format!("class {c} outside 0..{n_classes}"));
                }
                let first = t.first().copied();
                if t.iter().all(|&c| Some(c) == first) {
                    return bad("fewer than two distinct classes".into());
                }
            }
            _ => return bad("target kind does not match the task".into()),
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("structure generation failed: {0}")]
    Structure(#[from] StructureError),
    #[error("attribute generation failed: {0}")]
    Attributes(#[from] ScmError),
}

/// Generates the dataset identified by `(config, seed)`.
pub fn generate_dataset(config: &PriorConfig, seed: u64) -> Result<AttributedGraphDataset, GenerateError> {
    let prior = sample_prior(config, seed);
    generate_from_prior(&prior)
}

/// Generates a dataset from an explicit prior draw, using the streams of
/// `prior.seed`.
pub fn generate_from_prior(prior: &PriorSample) -> Result<AttributedGraphDataset, GenerateError> {
    let (graph, _) = generate_structure(prior, &mut rng::stream(prior.seed, StreamTag::Structure))?;
    Ok(generate_attributes(
        &graph,
        prior,
        &mut rng::stream(prior.seed, StreamTag::Attributes),
    )?)
}
