//! Graph-aware structural causal models for node attributes.
//!
//! Every hidden layer computes an MLP transform and a GNN transform (neighbor
//! mean followed by a linear map) of the previous layer; each neuron takes
//! its value from one of the two according to a per-neuron type drawn with
//! the dataset's mixing probability. Random node inputs, optionally
//! concatenated with Laplacian positional encodings, are propagated through
//! the network and a random subset of hidden neurons becomes the observed
//! features and the target.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

use crate::dataset::{AttributedGraphDataset, Target};
use crate::graph::GraphStructure;
use crate::prior::{Activation, PriorSample, ScmParams, Task};
use crate::rng::{self, Rng};
use crate::spectral::{laplacian_pe, SpectralError};

/// Activations above this magnitude abort the draw.
pub const OVERFLOW_LIMIT: f64 = 1e12;

/// Attribute draws attempted before giving up on a dataset.
pub const ATTRIBUTE_ATTEMPTS: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum ScmError {
    #[error("activation magnitude exceeded {OVERFLOW_LIMIT:e} in layer {layer}")]
    NumericOverflow { layer: usize },
    #[error("network has {available} hidden neurons, {needed} are needed")]
    InsufficientNeurons { available: usize, needed: usize },
    #[error("degenerate target: {0}")]
    DegenerateTarget(String),
    #[error("input has {got} rows, graph has {expected} nodes")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid SCM parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("attribute generation failed after {attempts} attempts: {last}")]
    GenerationFailed { attempts: usize, last: String },
}

/// Whether a hidden neuron reads the MLP or the GNN transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuronType {
    Mlp,
    Gnn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmLayer {
    /// `hidden_width x in_width`.
    pub mlp_weight: Array2<f64>,
    pub mlp_bias: Array1<f64>,
    pub gnn_weight: Array2<f64>,
    pub gnn_bias: Array1<f64>,
    pub neuron_types: Vec<NeuronType>,
    pub activation: Activation,
}

impl ScmLayer {
    pub fn width(&self) -> usize {
        self.neuron_types.len()
    }

    fn has_gnn(&self) -> bool {
        self.neuron_types.contains(&NeuronType::Gnn)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmNetwork {
    pub layers: Vec<ScmLayer>,
    /// Standard deviation of the noise added to every hidden activation.
    pub noise_scale: f64,
}

impl ScmNetwork {
    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.mlp_weight.ncols())
    }

    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(ScmLayer::width).sum()
    }
}

fn validate_params(params: &ScmParams) -> Result<(), ScmError> {
    let bad = |m: &str| Err(ScmError::InvalidParams(m.into()));
    if params.n_layers == 0 {
        return bad("n_layers must be at least 1");
    }
    if params.hidden_width < 2 {
        return bad("hidden_width must be at least 2");
    }
    if params.input_dim == 0 {
        return bad("input_dim must be at least 1");
    }
    if params.activations.len() != params.n_layers {
        return bad("need one activation per layer");
    }
    if !(params.weight_scale > 0.0 && params.weight_scale.is_finite()) {
        return bad("weight_scale must be positive");
    }
    if !(0.0..=1.0).contains(&params.mixing_p) {
        return bad("mixing_p must lie in [0, 1]");
    }
    if !(params.noise_scale >= 0.0 && params.noise_scale.is_finite()) {
        return bad("noise_scale must be non-negative");
    }
    Ok(())
}

fn normal_matrix(rows: usize, cols: usize, std: f64, rng: &mut Rng) -> Array2<f64> {
    let dist = Normal::new(0.0, std).expect("finite std");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

/// Draws a network. Weights and biases are i.i.d. normal with standard
/// deviation `weight_scale / sqrt(in_width)`; each neuron is GNN-type with
/// probability `mixing_p`. The first layer reads `input_dim` random inputs
/// plus `lappe_k` encodings when `use_lappe`.
pub fn sample_scm(params: &ScmParams, rng: &mut Rng) -> Result<ScmNetwork, ScmError> {
    validate_params(params)?;
    let first_in = params.input_dim + if params.use_lappe { params.lappe_k } else { 0 };
    let w = params.hidden_width;
    let layers = params
        .activations
        .iter()
        .enumerate()
        .map(|(l, &activation)| {
            let in_width = if l == 0 { first_in } else { w };
            let std = params.weight_scale / (in_width as f64).sqrt();
            let mlp_weight = normal_matrix(w, in_width, std, rng);
            let mlp_bias = normal_matrix(1, w, std, rng).remove_axis(Axis(0));
            let gnn_weight = normal_matrix(w, in_width, std, rng);
            let gnn_bias = normal_matrix(1, w, std, rng).remove_axis(Axis(0));
            let neuron_types = (0..w)
                .map(|_| {
                    if rng.random_bool(params.mixing_p) {
                        NeuronType::Gnn
                    } else {
                        NeuronType::Mlp
                    }
                })
                .collect();
            ScmLayer {
                mlp_weight,
                mlp_bias,
                gnn_weight,
                gnn_bias,
                neuron_types,
                activation,
            }
        })
        .collect();
    Ok(ScmNetwork {
        layers,
        noise_scale: params.noise_scale,
    })
}

/// Row `v` of the result is the mean of `h`'s rows over the neighbors of `v`;
/// isolated nodes get a zero row.
pub fn gnn_aggregate(h: ArrayView2<'_, f64>, graph: &GraphStructure) -> Array2<f64> {
    assert_eq!(h.nrows(), graph.n_nodes(), "one row per node");
    let mut out = Array2::zeros(h.raw_dim());
    for (v, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let nbrs = graph.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        for &u in nbrs {
            row += &h.row(u as usize);
        }
        row /= nbrs.len() as f64;
    }
    out
}

fn affine(h: ArrayView2<'_, f64>, weight: &Array2<f64>, bias: &Array1<f64>, act: Activation) -> Array2<f64> {
    let mut out = h.dot(&weight.t());
    out += bias;
    out.mapv_inplace(|x| act.apply(x));
    out
}

/// Propagates per-node inputs through the network, returning every hidden
/// layer's activations (`n_nodes x hidden_width`).
pub fn propagate(
    scm: &ScmNetwork,
    graph: &GraphStructure,
    inputs: ArrayView2<'_, f64>,
    rng: &mut Rng,
) -> Result<Vec<Array2<f64>>, ScmError> {
    let n = graph.n_nodes();
    if inputs.nrows() != n {
        return Err(ScmError::ShapeMismatch { expected: n, got: inputs.nrows() });
    }
    if inputs.ncols() != scm.input_width() {
        return Err(ScmError::InvalidParams(format!(
            "inputs have {} columns, network expects {}",
            inputs.ncols(),
            scm.input_width()
        )));
    }
    let mut out: Vec<Array2<f64>> = Vec::with_capacity(scm.layers.len());
    for (l, layer) in scm.layers.iter().enumerate() {
        let prev = if l == 0 { inputs } else { out[l - 1].view() };
        let mut h = affine(prev, &layer.mlp_weight, &layer.mlp_bias, layer.activation);
        if layer.has_gnn() {
            let agg = gnn_aggregate(prev, graph);
            let g = affine(agg.view(), &layer.gnn_weight, &layer.gnn_bias, layer.activation);
            for (j, t) in layer.neuron_types.iter().enumerate() {
                if *t == NeuronType::Gnn {
                    h.column_mut(j).assign(&g.column(j));
                }
            }
        }
        let noise = scm.noise_scale;
        h.mapv_inplace(|x| {
            let z: f64 = StandardNormal.sample(rng);
            x + noise * z
        });
        if h.iter().any(|x| x.is_nan() || x.abs() > OVERFLOW_LIMIT) {
            return Err(ScmError::NumericOverflow { layer: l });
        }
        out.push(h);
    }
    Ok(out)
}

/// Mean and population standard deviation.
fn moments(x: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = x.clone().count() as f64;
    let mean = x.clone().sum::<f64>() / n;
    let var = x.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn is_constant(mean: f64, std: f64) -> bool {
    std.is_nan() || std <= 1e-10 * (1.0 + mean.abs())
}

fn standardize_in_place(col: &mut [f64]) {
    let (mean, std) = moments(col.iter().copied());
    if is_constant(mean, std) {
        col.iter_mut().for_each(|x| *x = 0.0);
    } else {
        col.iter_mut().for_each(|x| *x = (*x - mean) / std);
    }
}

/// Picks `n_features + 1` distinct hidden neurons uniformly; the first
/// `n_features` become standardized feature columns, the last the raw target.
pub fn designate_attributes(
    activations: &[Array2<f64>],
    n_features: usize,
    rng: &mut Rng,
) -> Result<(Array2<f64>, Vec<f64>), ScmError> {
    let widths: Vec<usize> = activations.iter().map(|a| a.ncols()).collect();
    let available: usize = widths.iter().sum();
    let needed = n_features + 1;
    if available < needed {
        return Err(ScmError::InsufficientNeurons { available, needed });
    }
    let n = activations.first().map_or(0, |a| a.nrows());
    let locate = |mut i: usize| {
        for (l, &w) in widths.iter().enumerate() {
            if i < w {
                return (l, i);
            }
            i -= w;
        }
        unreachable!("index below neuron count")
    };
    let picks = index::sample(rng, available, needed).into_vec();
    let mut features = Array2::zeros((n, n_features));
    for (j, &p) in picks[..n_features].iter().enumerate() {
        let (l, c) = locate(p);
        let mut col = activations[l].column(c).to_vec();
        standardize_in_place(&mut col);
        features.column_mut(j).assign(&Array1::from(col));
    }
    let (l, c) = locate(picks[n_features]);
    let mut target = activations[l].column(c).to_vec();
    standardize_in_place(&mut target);
    Ok((features, target))
}

/// Turns the raw target neuron into the dataset target: standardized values
/// for regression, empirical-quantile bins for classification (rank `r` of
/// `n`, ties broken by node index, goes to class `floor(r * C / n)`).
pub fn derive_task(raw_target: &[f64], task: Task) -> Result<Target, ScmError> {
    if raw_target.iter().any(|x| !x.is_finite()) {
        return Err(ScmError::DegenerateTarget("non-finite target value".into()));
    }
    let n = raw_target.len();
    match task {
        Task::Regression => {
            let (mean, std) = moments(raw_target.iter().copied());
            if n == 0 || is_constant(mean, std) {
                return Err(ScmError::DegenerateTarget("constant regression target".into()));
            }
            Ok(Target::Regression(
                raw_target.iter().map(|&x| ((x - mean) / std) as f32).collect(),
            ))
        }
        Task::Classification { n_classes } => {
            let c = n_classes as usize;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| raw_target[a].total_cmp(&raw_target[b]).then(a.cmp(&b)));
            let distinct = 1 + order
                .windows(2)
                .filter(|w| raw_target[w[0]] != raw_target[w[1]])
                .count();
            if n == 0 || distinct < c {
                return Err(ScmError::DegenerateTarget(format!(
                    "{distinct} distinct target values for {c} classes"
                )));
            }
            let mut classes = vec![0u16; n];
            for (rank, &v) in order.iter().enumerate() {
                classes[v] = (rank * c / n) as u16;
            }
            Ok(Target::Classification(classes))
        }
    }
}

/// Standard-normal per-node inputs, with positional encodings appended.
fn node_inputs(n: usize, input_dim: usize, lappe: Option<&Array2<f64>>, rng: &mut Rng) -> Array2<f64> {
    let extra = lappe.map_or(0, |p| p.ncols());
    let mut x = Array2::zeros((n, input_dim + extra));
    x.slice_mut(s![.., ..input_dim])
        .mapv_inplace(|_: f64| StandardNormal.sample(rng));
    if let Some(p) = lappe {
        x.slice_mut(s![.., input_dim..]).assign(p);
    }
    x
}

/// Runs the attribute pipeline for one graph, retrying with derived streams
/// when a draw overflows or produces a degenerate target.
pub fn generate_attributes(
    graph: &GraphStructure,
    prior: &PriorSample,
    rng: &mut Rng,
) -> Result<AttributedGraphDataset, ScmError> {
    let n = graph.n_nodes();
    let mut lappe_rng = rng::child(rng);
    let lappe = if prior.use_lappe {
        let pe = laplacian_pe(graph, prior.lappe_k, &mut lappe_rng)?;
        Some(Array2::from_shape_vec((n, pe.k), pe.values).expect("n x k"))
    } else {
        None
    };
    let mut last = String::new();
    for _ in 0..ATTRIBUTE_ATTEMPTS {
        let mut r = rng::child(rng);
        let inputs = node_inputs(n, prior.scm.input_dim, lappe.as_ref(), &mut r);
        let attempt = sample_scm(&prior.scm, &mut r)
            .and_then(|scm| propagate(&scm, graph, inputs.view(), &mut r))
            .and_then(|acts| designate_attributes(&acts, prior.n_features, &mut r))
            .and_then(|(features, raw)| Ok((features, derive_task(&raw, prior.task)?)));
        match attempt {
            Ok((features, target)) => {
                return Ok(AttributedGraphDataset {
                    graph: graph.clone(),
                    features: features.mapv(|x| x as f32),
                    target,
                    task: prior.task,
                    prior: prior.clone(),
                    seed: prior.seed,
                });
            }
            Err(e @ (ScmError::NumericOverflow { .. } | ScmError::DegenerateTarget(_))) => {
                last = e.to_string();
            }
            Err(e) => return Err(e),
        }
    }
    Err(ScmError::GenerationFailed {
        attempts: ATTRIBUTE_ATTEMPTS,
        last,
    })
}
