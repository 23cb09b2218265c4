//! Generator of synthetic attributed graph datasets for pretraining graph
//! prior-data fitted networks.
//!
//! A dataset is fully determined by a [`PriorConfig`] and a 64-bit seed:
//! [`sample_prior`] draws its hyperparameters, [`generate_structure`] builds
//! the graph from combined degree-corrected SBMs plus preferential
//! attachment, and [`generate_attributes`] propagates random node inputs
//! through a mixed MLP/GNN structural causal model to obtain features and
//! targets. [`build_episode`] samples context/query splits and
//! masked-graph-modeling edges, and [`format`] reads and writes the `.gpfn`
//! container.

pub mod cli;
pub mod dataset;
pub mod episode;
pub mod format;
pub mod graph;
pub mod prior;
pub mod rng;
pub mod scm;
pub mod spectral;
pub mod stats;
pub mod structure;

pub use dataset::{generate_dataset, generate_from_prior, AttributedGraphDataset, GenerateError, Target};
pub use episode::{build_episode, build_episodes, Episode};
pub use format::{read_dataset, write_dataset, FormatError};
pub use graph::GraphStructure;
pub use prior::{load_config, sample_prior, PriorConfig, PriorSample, Task};
pub use scm::generate_attributes;
pub use spectral::{laplacian_pe, normalized_laplacian, smallest_eigenpairs};
pub use stats::compute_report;
pub use structure::generate_structure;
