//! Prior hyperparameter distributions and per-dataset prior samples.
//!
//! A [`PriorConfig`] declares a distribution for every generator
//! hyperparameter; [`sample_prior`] turns `(config, seed)` into one concrete
//! [`PriorSample`]. Configs are read from flat TOML documents where every
//! range is written as `key.min` / `key.max`; absent keys keep their defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, StreamTag};
use crate::structure::{planted_omega, BaParams, DcsbmSpec, DegreeSampler};

/// Environment variable naming a default config file for the CLI.
pub const CONFIG_ENV: &str = "GPF_CONFIG";

/// Edge ceiling of the pretraining graphs.
pub const DEFAULT_MAX_EDGES: u64 = 194_425;

/// Largest supported class count.
pub const MAX_CLASSES: u32 = 10;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range<T> {
    pub min: T,
    pub max: T,
}

impl<T: Copy> Range<T> {
    pub const fn new(min: T, max: T) -> Self {
        Self { min, max }
    }
}

impl<T: PartialOrd + Copy> Range<T> {
    pub fn contains(&self, x: T) -> bool {
        self.min <= x && x <= self.max
    }
}

impl Range<u32> {
    fn sample(&self, rng: &mut impl rand::Rng) -> u32 {
        rng.random_range(self.min..=self.max)
    }
}

impl Range<f64> {
    fn uniform(&self, rng: &mut impl rand::Rng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    /// Log-uniform when the range is strictly positive, uniform otherwise.
    fn log_uniform(&self, rng: &mut impl rand::Rng) -> f64 {
        if self.min <= 0.0 || self.min == self.max {
            return self.uniform(rng);
        }
        let x = (rng.random_range(self.min.ln()..=self.max.ln())).exp();
        x.clamp(self.min, self.max)
    }
}

/// Elementwise nonlinearity of one SCM layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    Sine,
    Abs,
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Identity,
        Activation::Tanh,
        Activation::Relu,
        Activation::Sine,
        Activation::Abs,
    ];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Sine => x.sin(),
            Activation::Abs => x.abs(),
        }
    }
}

/// Prediction task attached to a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification { n_classes: u16 },
}

impl Task {
    pub fn n_classes(&self) -> Option<u16> {
        match *self {
            Task::Regression => None,
            Task::Classification { n_classes } => Some(n_classes),
        }
    }
}

/// Distributions over every generator hyperparameter.
///
/// Integer ranges are sampled uniformly; ranges documented as log-uniform
/// (`node_count_range`, `mean_degree_range`, `noise_scale_range`) are sampled
/// uniformly in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub node_count_range: Range<u32>,
    /// Undirected edge cap per graph.
    pub max_edges: u64,
    pub first_level_count_range: Range<u32>,
    pub blocks_per_sbm_range: Range<u32>,
    /// Target mean degree of the combined graph before preferential attachment.
    pub mean_degree_range: Range<f64>,
    /// Power-law exponent of the degree propensities.
    pub degree_exponent_range: Range<f64>,
    /// Fraction of each SBM's expected edges placed inside blocks.
    pub planted_strength_range: Range<f64>,
    /// Share of the target mean degree produced by the second-level SBM.
    pub second_level_share_range: Range<f64>,
    /// Fraction of nodes added by preferential attachment.
    pub ba_fraction_range: Range<f64>,
    pub ba_degree_zipf_range: Range<f64>,
    pub ba_degree_cap: u32,
    pub scm_layers_range: Range<u32>,
    pub scm_hidden_range: Range<u32>,
    /// Width of the random per-node input vectors (before positional encodings).
    pub scm_input_range: Range<u32>,
    pub scm_weight_scale_range: Range<f64>,
    pub scm_activation_set: Vec<Activation>,
    pub mixing_grid: Vec<f64>,
    pub lappe_probability: f64,
    pub lappe_k_range: Range<u32>,
    pub feature_count_range: Range<u32>,
    pub class_count_range: Range<u32>,
    pub regression_probability: f64,
    pub context_fraction_range: Range<f64>,
    pub mgm_fraction: f64,
    pub noise_scale_range: Range<f64>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            node_count_range: Range::new(1_000, 20_000),
            max_edges: DEFAULT_MAX_EDGES,
            first_level_count_range: Range::new(1, 5),
            blocks_per_sbm_range: Range::new(2, 20),
            mean_degree_range: Range::new(2.0, 30.0),
            degree_exponent_range: Range::new(2.0, 3.5),
            planted_strength_range: Range::new(0.5, 0.95),
            second_level_share_range: Range::new(0.1, 0.5),
            ba_fraction_range: Range::new(0.0, 0.4),
            ba_degree_zipf_range: Range::new(1.5, 3.0),
            ba_degree_cap: 32,
            scm_layers_range: Range::new(2, 8),
            scm_hidden_range: Range::new(16, 96),
            scm_input_range: Range::new(4, 32),
            scm_weight_scale_range: Range::new(0.5, 1.5),
            scm_activation_set: Activation::ALL.to_vec(),
            mixing_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            lappe_probability: 0.5,
            lappe_k_range: Range::new(2, 16),
            feature_count_range: Range::new(4, 48),
            class_count_range: Range::new(2, 10),
            regression_probability: 0.5,
            context_fraction_range: Range::new(0.05, 0.5),
            mgm_fraction: 0.1,
            noise_scale_range: Range::new(1e-3, 0.3),
        }
    }
}

fn check_range<T: PartialOrd + fmt::Display>(name: &str, r: &Range<T>) -> Result<(), ConfigError> {
    if r.min > r.max {
        return Err(ConfigError::Invalid(format!(
            "{name}: min {} exceeds max {}",
            r.min, r.max
        )));
    }
    Ok(())
}

fn check_finite_range(name: &str, r: &Range<f64>) -> Result<(), ConfigError> {
    if !r.min.is_finite() || !r.max.is_finite() {
        return Err(ConfigError::Invalid(format!("{name}: bounds must be finite")));
    }
    check_range(name, r)
}

fn check_probability(name: &str, p: f64) -> Result<(), ConfigError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ConfigError::Invalid(format!(
            "{name}: probability {p} outside [0, 1]"
        )));
    }
    Ok(())
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl PriorConfig {
    /// Parses a TOML document; absent keys, including a single absent bound
    /// of a range, keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut merged = toml::Table::try_from(PriorConfig::default()).expect("defaults serialize");
        overlay(&mut merged, user);
        let config: PriorConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_range("node_count_range", &self.node_count_range)?;
        if self.node_count_range.min == 0 {
            return Err(invalid("node_count_range: node counts must be positive"));
        }
        if self.max_edges == 0 {
            return Err(invalid("max_edges must be positive"));
        }
        check_range("first_level_count_range", &self.first_level_count_range)?;
        if self.first_level_count_range.min == 0 {
            return Err(invalid("first_level_count_range: need at least one first-level graph"));
        }
        check_range("blocks_per_sbm_range", &self.blocks_per_sbm_range)?;
        if self.blocks_per_sbm_range.min == 0 {
            return Err(invalid("blocks_per_sbm_range: need at least one block"));
        }
        check_finite_range("mean_degree_range", &self.mean_degree_range)?;
        if self.mean_degree_range.min <= 0.0 {
            return Err(invalid("mean_degree_range: mean degree must be positive"));
        }
        check_finite_range("degree_exponent_range", &self.degree_exponent_range)?;
        if self.degree_exponent_range.min <= 1.0 {
            return Err(invalid("degree_exponent_range: exponent must exceed 1"));
        }
        for (name, r) in [
            ("planted_strength_range", &self.planted_strength_range),
            ("second_level_share_range", &self.second_level_share_range),
            ("ba_fraction_range", &self.ba_fraction_range),
        ] {
            check_finite_range(name, r)?;
            check_probability(name, r.min)?;
            check_probability(name, r.max)?;
        }
        check_finite_range("ba_degree_zipf_range", &self.ba_degree_zipf_range)?;
        if self.ba_degree_zipf_range.min <= 1.0 {
            return Err(invalid("ba_degree_zipf_range: Zipf exponent must exceed 1"));
        }
        if self.ba_degree_cap == 0 {
            return Err(invalid("ba_degree_cap must be positive"));
        }
        check_range("scm_layers_range", &self.scm_layers_range)?;
        if self.scm_layers_range.min == 0 {
            return Err(invalid("scm_layers_range: need at least one layer"));
        }
        check_range("scm_hidden_range", &self.scm_hidden_range)?;
        if self.scm_hidden_range.min < 2 {
            return Err(invalid("scm_hidden_range: hidden width must be at least 2"));
        }
        check_range("scm_input_range", &self.scm_input_range)?;
        if self.scm_input_range.min == 0 {
            return Err(invalid("scm_input_range: input width must be positive"));
        }
        check_finite_range("scm_weight_scale_range", &self.scm_weight_scale_range)?;
        if self.scm_weight_scale_range.min <= 0.0 {
            return Err(invalid("scm_weight_scale_range: weight scale must be positive"));
        }
        if self.scm_activation_set.is_empty() {
            return Err(invalid("scm_activation_set must not be empty"));
        }
        if self.mixing_grid.is_empty() {
            return Err(invalid("mixing_grid must not be empty"));
        }
        for &p in &self.mixing_grid {
            check_probability("mixing_grid", p)?;
        }
        check_probability("lappe_probability", self.lappe_probability)?;
        check_range("lappe_k_range", &self.lappe_k_range)?;
        if self.lappe_k_range.min == 0 {
            return Err(invalid("lappe_k_range: k must be positive"));
        }
        check_range("feature_count_range", &self.feature_count_range)?;
        if self.feature_count_range.min == 0 {
            return Err(invalid("feature_count_range: need at least one feature"));
        }
        let max_neurons = self.scm_layers_range.max as u64 * self.scm_hidden_range.max as u64;
        if max_neurons < self.feature_count_range.max as u64 + 1 {
            return Err(invalid(format!(
                "feature_count_range.max = {} needs more hidden neurons than the largest SCM provides ({max_neurons})",
                self.feature_count_range.max
            )));
        }
        check_range("class_count_range", &self.class_count_range)?;
        if self.class_count_range.min < 2 || self.class_count_range.max > MAX_CLASSES {
            return Err(invalid(format!(
                "class_count_range must lie within [2, {MAX_CLASSES}]"
            )));
        }
        check_probability("regression_probability", self.regression_probability)?;
        check_finite_range("context_fraction_range", &self.context_fraction_range)?;
        if self.context_fraction_range.min <= 0.0 || self.context_fraction_range.max >= 1.0 {
            return Err(invalid("context_fraction_range must lie inside (0, 1)"));
        }
        if !(self.mgm_fraction > 0.0 && self.mgm_fraction < 1.0) {
            return Err(invalid(format!(
                "mgm_fraction {} must lie inside (0, 1)",
                self.mgm_fraction
            )));
        }
        check_finite_range("noise_scale_range", &self.noise_scale_range)?;
        if self.noise_scale_range.min < 0.0 {
            return Err(invalid("noise_scale_range must be non-negative"));
        }
        Ok(())
    }
}

fn overlay(base: &mut toml::Table, user: toml::Table) {
    for (key, value) in user {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => overlay(b, u),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<PriorConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    PriorConfig::from_toml_str(&text)
}

/// Parameters of the random structural causal model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmParams {
    pub n_layers: usize,
    pub hidden_width: usize,
    pub activations: Vec<Activation>,
    /// Width of the random per-node inputs, excluding positional encodings.
    pub input_dim: usize,
    pub weight_scale: f64,
    pub mixing_p: f64,
    pub use_lappe: bool,
    pub lappe_k: usize,
    pub noise_scale: f64,
}

/// One concrete draw of every prior hyperparameter for a single dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSample {
    #[serde(with = "seed_string")]
    pub seed: u64,
    pub n_total: usize,
    pub max_edges: u64,
    pub first_level_sizes: Vec<usize>,
    pub first_level: Vec<DcsbmSpec>,
    pub second_level: DcsbmSpec,
    pub ba_fraction: f64,
    pub ba: BaParams,
    pub scm: ScmParams,
    pub mixing_p: f64,
    pub use_lappe: bool,
    pub lappe_k: usize,
    pub n_features: usize,
    pub task: Task,
    pub context_fraction: f64,
    pub mgm_fraction: f64,
    pub noise_scale: f64,
}

/// TOML integers are signed 64-bit, so seeds are stored as decimal strings.
pub(crate) mod seed_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&seed.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

/// Splits `total` into `parts` positive sizes with Dirichlet(1) proportions.
fn split_sizes(total: usize, parts: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    debug_assert!(parts >= 1 && parts <= total);
    let weights: Vec<f64> = (0..parts)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = weights.iter().sum();
    let free = total - parts;
    let shares: Vec<f64> = weights.iter().map(|w| w / sum * free as f64).collect();
    let mut sizes: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut rest = free - sizes.iter().sum::<usize>();
    // largest remainder
    let mut order: Vec<usize> = (0..parts).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        sizes[i] += 1;
        rest -= 1;
    }
    sizes.iter_mut().for_each(|s| *s += 1);
    sizes
}

fn sample_sbm_spec(
    config: &PriorConfig,
    n: usize,
    mean_degree: f64,
    rng: &mut impl rand::Rng,
) -> DcsbmSpec {
    let blocks = (config.blocks_per_sbm_range.sample(rng) as usize).min(n).max(1);
    let block_sizes = split_sizes(n, blocks, rng);
    let strength = config.planted_strength_range.uniform(rng);
    let degree_exponent = config.degree_exponent_range.uniform(rng);
    let omega = planted_omega(&block_sizes, mean_degree, strength);
    DcsbmSpec {
        block_sizes,
        omega,
        degree_exponent,
    }
}

/// Draws every hyperparameter of one dataset. Pure function of
/// `(config, seed)`; `config` must be valid.
pub fn sample_prior(config: &PriorConfig, seed: u64) -> PriorSample {
    let mut rng = rng::stream(seed, StreamTag::Prior);
    let rng = &mut rng;

    let n_total = config
        .node_count_range
        .map_f64()
        .log_uniform(rng)
        .round()
        .clamp(config.node_count_range.min as f64, config.node_count_range.max as f64)
        as usize;

    // structure
    let ba_fraction = config.ba_fraction_range.uniform(rng);
    let wanted_levels = config.first_level_count_range.sample(rng) as usize;
    let levels = wanted_levels.min(n_total);
    let n_new = ((ba_fraction * n_total as f64).round() as usize).min(n_total - levels);
    let n_sbm = n_total - n_new;
    let first_level_sizes = split_sizes(n_sbm, levels, rng);

    // Keep the expected SBM edge count below 90% of the cap.
    let degree_cap = 1.8 * config.max_edges as f64 / n_sbm as f64;
    let mean_degree = config
        .mean_degree_range
        .log_uniform(rng)
        .min(degree_cap.max(f64::MIN_POSITIVE));
    let share = config.second_level_share_range.uniform(rng);
    let first_level: Vec<DcsbmSpec> = first_level_sizes
        .iter()
        .map(|&n| sample_sbm_spec(config, n, (1.0 - share) * mean_degree, rng))
        .collect();
    let second_level = sample_sbm_spec(config, n_sbm, share * mean_degree, rng);

    let zipf = config.ba_degree_zipf_range.uniform(rng);
    let ba = BaParams {
        n_new,
        degree: DegreeSampler::Zipf {
            exponent: zipf,
            cap: config.ba_degree_cap as usize,
        },
    };

    // attributes
    let mixing_p = *config.mixing_grid.choose(rng).expect("non-empty grid");
    let use_lappe = rng.random_bool(config.lappe_probability);
    let lappe_k = config.lappe_k_range.sample(rng) as usize;
    let n_features = config.feature_count_range.sample(rng) as usize;
    // Enough hidden neurons for n_features + 1 designated columns.
    let h_max = config.scm_hidden_range.max as usize;
    let min_layers = (n_features + 1).div_ceil(h_max).max(config.scm_layers_range.min as usize);
    let n_layers = rng.random_range(min_layers..=config.scm_layers_range.max as usize);
    let min_width = (n_features + 1)
        .div_ceil(n_layers)
        .max(config.scm_hidden_range.min as usize);
    let hidden_width = rng.random_range(min_width..=h_max);
    let activations = (0..n_layers)
        .map(|_| *config.scm_activation_set.choose(rng).expect("non-empty set"))
        .collect();
    let input_dim = config.scm_input_range.sample(rng) as usize;
    let weight_scale = config.scm_weight_scale_range.uniform(rng);
    let noise_scale = config.noise_scale_range.log_uniform(rng);

    let task = if rng.random_bool(config.regression_probability) {
        Task::Regression
    } else {
        Task::Classification {
            n_classes: config.class_count_range.sample(rng) as u16,
        }
    };
    let context_fraction = config.context_fraction_range.uniform(rng);

    PriorSample {
        seed,
        n_total,
        max_edges: config.max_edges,
        first_level_sizes,
        first_level,
        second_level,
        ba_fraction,
        ba,
        scm: ScmParams {
            n_layers,
            hidden_width,
            activations,
            input_dim,
            weight_scale,
            mixing_p,
            use_lappe,
            lappe_k,
            noise_scale,
        },
        mixing_p,
        use_lappe,
        lappe_k,
        n_features,
        task,
        context_fraction,
        mgm_fraction: config.mgm_fraction,
        noise_scale,
    }
}

impl Range<u32> {
    fn map_f64(&self) -> Range<f64> {
        Range::new(self.min as f64, self.max as f64)
    }
}
