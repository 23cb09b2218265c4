//! Binary dataset container (`.gpfn`).
//!
//! All integers are little-endian. Layout:
//!
//! | field | type |
//! |---|---|
//! | magic `"GPFN"` | 4 bytes |
//! | version (1) | u16 |
//! | flags (bit 0: classification) | u16 |
//! | n_nodes | u64 |
//! | arc_count | u64 |
//! | n_features | u32 |
//! | n_classes (0 for regression) | u16 |
//! | lappe_k (0 when unused) | u16 |
//! | episode_count | u16 |
//! | reserved (zero) | 6 bytes |
//! | offsets | (n_nodes + 1) x u64 |
//! | indices | arc_count x u32 |
//! | features, row-major | n_nodes x n_features x f32 |
//! | targets | n_nodes x f32 (regression) or n_nodes x u16 |
//! | episodes | see below, episode_count times |
//! | metadata length | u32 |
//! | metadata (TOML, UTF-8) | bytes |
//!
//! Each episode stores a context bitmap of `ceil(n_nodes / 8)` bytes (node
//! `i` is bit `i % 8` of byte `i / 8`), the positive count `p` as u32, `p`
//! positive pairs and `p` negative pairs as u32 pairs, then the pruned
//! graph's arc count (u64), offsets ((n_nodes + 1) x u64) and indices.
//!
//! Reserved bytes, unknown flag bits and bitmap bits past the last node must
//! be zero.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AttributedGraphDataset, DatasetError, Target};
use crate::episode::Episode;
use crate::graph::GraphStructure;
use crate::prior::{PriorSample, Task};

pub const MAGIC: [u8; 4] = *b"GPFN";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 40;
pub const FLAG_CLASSIFICATION: u16 = 1;
pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic {0:?}, not a gpfn container")]
    BadMagic([u8; 4]),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("corrupt {section} section at byte {offset}")]
    CorruptSection { section: &'static str, offset: u64 },
    #[error("invalid metadata: {0}")]
    Metadata(String),
    #[error("container violates an invariant: {0}")]
    Invariant(String),
    #[error("{0} does not fit the container format")]
    TooLarge(&'static str),
}

impl From<DatasetError> for FormatError {
    fn from(e: DatasetError) -> Self {
        FormatError::Invariant(e.to_string())
    }
}

/// Fixed-size header fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u16,
    pub flags: u16,
    pub n_nodes: u64,
    pub arc_count: u64,
    pub n_features: u32,
    pub n_classes: u16,
    pub lappe_k: u16,
    pub episode_count: u16,
}

impl Header {
    pub fn is_classification(&self) -> bool {
        self.flags & FLAG_CLASSIFICATION != 0
    }

    /// Byte offset where the episode blocks (or the metadata length) begin.
    pub fn fixed_sections_len(&self) -> u64 {
        let n = self.n_nodes;
        let target = if self.is_classification() { 2 } else { 4 };
        HEADER_LEN as u64
            + (n + 1) * 8
            + self.arc_count * 4
            + n * self.n_features as u64 * 4
            + n * target
    }
}

/// Trailing TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub generator_version: String,
    #[serde(with = "crate::prior::seed_string")]
    pub seed: u64,
    pub prior: PriorSample,
}

fn put_u16(buf: &mut Vec<u8>, x: u16) {
    buf.extend_from_slice(&x.to_le_bytes());
}
fn put_u32(buf: &mut Vec<u8>, x: u32) {
    buf.extend_from_slice(&x.to_le_bytes());
}
fn put_u64(buf: &mut Vec<u8>, x: u64) {
    buf.extend_from_slice(&x.to_le_bytes());
}

fn put_graph(buf: &mut Vec<u8>, g: &GraphStructure) {
    g.offsets().iter().for_each(|&o| put_u64(buf, o));
    g.indices().iter().for_each(|&i| put_u32(buf, i));
}

fn put_pairs(buf: &mut Vec<u8>, pairs: &[(u32, u32)]) {
    for &(u, v) in pairs {
        put_u32(buf, u);
        put_u32(buf, v);
    }
}

/// Serializes a dataset and its episodes into container bytes.
pub fn encode(dataset: &AttributedGraphDataset, episodes: &[Episode]) -> Result<Vec<u8>, FormatError> {
    let n = dataset.n_nodes();
    let episode_count = u16::try_from(episodes.len()).map_err(|_| FormatError::TooLarge("episode count"))?;
    let n_features = u32::try_from(dataset.n_features()).map_err(|_| FormatError::TooLarge("feature count"))?;
    let (flags, n_classes) = match dataset.task {
        Task::Regression => (0, 0),
        Task::Classification { n_classes } => (FLAG_CLASSIFICATION, n_classes),
    };
    let lappe_k = if dataset.prior.use_lappe {
        u16::try_from(dataset.prior.lappe_k).map_err(|_| FormatError::TooLarge("lappe_k"))?
    } else {
        0
    };
    let metadata = toml::to_string(&Metadata {
        generator_version: GENERATOR_VERSION.to_owned(),
        seed: dataset.seed,
        prior: dataset.prior.clone(),
    })
    .map_err(|e| FormatError::Metadata(e.to_string()))?;
    let meta_len = u32::try_from(metadata.len()).map_err(|_| FormatError::TooLarge("metadata"))?;

    let header = Header {
        version: VERSION,
        flags,
        n_nodes: n as u64,
        arc_count: dataset.graph.n_arcs() as u64,
        n_features,
        n_classes,
        lappe_k,
        episode_count,
    };
    let mut buf = Vec::with_capacity(header.fixed_sections_len() as usize + metadata.len() + 4);
    buf.extend_from_slice(&MAGIC);
    put_u16(&mut buf, header.version);
    put_u16(&mut buf, header.flags);
    put_u64(&mut buf, header.n_nodes);
    put_u64(&mut buf, header.arc_count);
    put_u32(&mut buf, header.n_features);
    put_u16(&mut buf, header.n_classes);
    put_u16(&mut buf, header.lappe_k);
    put_u16(&mut buf, header.episode_count);
    buf.extend_from_slice(&[0; 6]);
    debug_assert_eq!(buf.len(), HEADER_LEN);

    put_graph(&mut buf, &dataset.graph);
    for row in dataset.features.rows() {
        row.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes()));
    }
    match &dataset.target {
        Target::Regression(t) => t.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes())),
        Target::Classification(t) => t.iter().for_each(|&c| put_u16(&mut buf, c)),
    }
    for ep in episodes {
        let mut bitmap = vec![0u8; n.div_ceil(8)];
        for (i, _) in ep.context_mask.iter().enumerate().filter(|(_, &c)| c) {
            bitmap[i / 8] |= 1 << (i % 8);
        }
        buf.extend_from_slice(&bitmap);
        let count = u32::try_from(ep.mgm_positives.len()).map_err(|_| FormatError::TooLarge("MGM sample"))?;
        put_u32(&mut buf, count);
        put_pairs(&mut buf, &ep.mgm_positives);
        put_pairs(&mut buf, &ep.mgm_negatives);
        put_u64(&mut buf, ep.pruned_graph.n_arcs() as u64);
        put_graph(&mut buf, &ep.pruned_graph);
    }
    put_u32(&mut buf, meta_len);
    buf.extend_from_slice(metadata.as_bytes());
    Ok(buf)
}

/// Writes a container and syncs it to disk.
pub fn write_dataset(
    dataset: &AttributedGraphDataset,
    episodes: &[Episode],
    path: impl AsRef<Path>,
) -> Result<(), FormatError> {
    let path = path.as_ref();
    let io = |source| FormatError::Io { path: path.to_owned(), source };
    let bytes = encode(dataset, episodes)?;
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).map_err(io)?;
    let file = w.into_inner().map_err(|e| io(e.into_error()))?;
    file.sync_all().map_err(io)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: u64, section: &'static str) -> Result<&'a [u8], FormatError> {
        let corrupt = FormatError::CorruptSection { section, offset: self.pos as u64 };
        let len = usize::try_from(len).map_err(|_| corrupt)?;
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or(
            FormatError::CorruptSection { section, offset: self.pos as u64 },
        )?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self, section: &'static str) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2, section)?.try_into().unwrap()))
    }
    fn u32(&mut self, section: &'static str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, section)?.try_into().unwrap()))
    }
    fn u64(&mut self, section: &'static str) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8, section)?.try_into().unwrap()))
    }

    fn array<T, const W: usize>(
        &mut self,
        count: u64,
        section: &'static str,
        f: fn([u8; W]) -> T,
    ) -> Result<Vec<T>, FormatError> {
        let bytes_len = count
            .checked_mul(W as u64)
            .ok_or(FormatError::CorruptSection { section, offset: self.pos as u64 })?;
        let raw = self.take(bytes_len, section)?;
        Ok(raw.chunks_exact(W).map(|c| f(c.try_into().unwrap())).collect())
    }

    fn graph(&mut self, n: u64, arcs: u64, section: &'static str) -> Result<GraphStructure, FormatError> {
        let start = self.pos as u64;
        let offsets = self.array(n + 1, section, u64::from_le_bytes)?;
        let indices = self.array(arcs, section, u32::from_le_bytes)?;
        GraphStructure::from_csr(offsets, indices).map_err(|e| {
            FormatError::Invariant(format!("{section} at byte {start}: {e}"))
        })
    }

    fn pairs(&mut self, count: u64, section: &'static str) -> Result<Vec<(u32, u32)>, FormatError> {
        let flat = self.array(count * 2, section, u32::from_le_bytes)?;
        Ok(flat.chunks_exact(2).map(|p| (p[0], p[1])).collect())
    }
}

/// Parses and validates the fixed header.
pub fn decode_header(bytes: &[u8]) -> Result<Header, FormatError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4, "header")?.try_into().unwrap();
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = r.u16("header")?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let header = Header {
        version,
        flags: r.u16("header")?,
        n_nodes: r.u64("header")?,
        arc_count: r.u64("header")?,
        n_features: r.u32("header")?,
        n_classes: r.u16("header")?,
        lappe_k: r.u16("header")?,
        episode_count: r.u16("header")?,
    };
    if header.flags & !FLAG_CLASSIFICATION != 0 {
        return Err(FormatError::Invariant(format!("unknown header flags {:#06x}", header.flags)));
    }
    if r.take(6, "header")?.iter().any(|&b| b != 0) {
        return Err(FormatError::Invariant("reserved header bytes are not zero".into()));
    }
    Ok(header)
}

/// Parses container bytes, validating every structural invariant.
pub fn decode(bytes: &[u8]) -> Result<(AttributedGraphDataset, Vec<Episode>), FormatError> {
    decode_with_metadata(bytes).map(|(ds, eps, _)| (ds, eps))
}

/// [`decode`], also returning the metadata document.
pub fn decode_with_metadata(bytes: &[u8]) -> Result<(AttributedGraphDataset, Vec<Episode>, Metadata), FormatError> {
    let header = decode_header(bytes)?;
    let mut r = Reader { bytes, pos: HEADER_LEN };
    let n = header.n_nodes;
    if n > u32::MAX as u64 {
        return Err(FormatError::Invariant(format!("{n} nodes exceed the u32 id range")));
    }
    let graph = r.graph(n, header.arc_count, "graph")?;
    let f = header.n_features as usize;
    let flat = r.array(n * f as u64, "features", f32::from_le_bytes)?;
    let features = Array2::from_shape_vec((n as usize, f), flat).expect("length checked");
    let target = if header.is_classification() {
        Target::Classification(r.array(n, "targets", u16::from_le_bytes)?)
    } else {
        Target::Regression(r.array(n, "targets", f32::from_le_bytes)?)
    };

    let mut episodes = Vec::with_capacity(header.episode_count as usize);
    for _ in 0..header.episode_count {
        let bitmap_start = r.pos;
        let bitmap = r.take(n.div_ceil(8), "episode")?;
        if n % 8 != 0 && bitmap[bitmap.len() - 1] >> (n % 8) != 0 {
            return Err(FormatError::Invariant(format!("episode bitmap at byte {bitmap_start} sets bits past node {n}")));
        }
        let context_mask = (0..n as usize).map(|i| bitmap[i / 8] >> (i % 8) & 1 == 1).collect();
        let count = r.u32("episode")? as u64;
        let mgm_positives = r.pairs(count, "episode")?;
        let mgm_negatives = r.pairs(count, "episode")?;
        let arcs = r.u64("episode")?;
        let pruned_graph = r.graph(n, arcs, "episode")?;
        episodes.push(Episode {
            context_mask,
            mgm_positives,
            mgm_negatives,
            pruned_graph,
        });
    }

    let meta_len = r.u32("metadata")?;
    let meta_start = r.pos as u64;
    let meta_bytes = r.take(meta_len as u64, "metadata")?;
    if r.pos != bytes.len() {
        return Err(FormatError::CorruptSection { section: "trailer", offset: r.pos as u64 });
    }
    let text = std::str::from_utf8(meta_bytes)
        .map_err(|_| FormatError::CorruptSection { section: "metadata", offset: meta_start })?;
    let meta: Metadata = toml::from_str(text).map_err(|e| FormatError::Metadata(e.to_string()))?;

    let task = match (header.is_classification(), header.n_classes) {
        (true, c) => Task::Classification { n_classes: c },
        (false, 0) => Task::Regression,
        (false, c) => return Err(FormatError::Invariant(format!("regression container with {c} classes"))),
    };
    if task != meta.prior.task {
        return Err(FormatError::Invariant("header task differs from metadata".into()));
    }
    let dataset = AttributedGraphDataset {
        graph,
        features,
        target,
        task,
        prior: meta.prior.clone(),
        seed: meta.seed,
    };
    dataset.validate()?;
    for (i, ep) in episodes.iter().enumerate() {
        ep.validate(&dataset.graph)
            .map_err(|e| FormatError::Invariant(format!("episode {i}: {e}")))?;
    }
    Ok((dataset, episodes, meta))
}

/// Reads and validates a container.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<(AttributedGraphDataset, Vec<Episode>), FormatError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| FormatError::Io { path: path.to_owned(), source })?;
    decode(&bytes)
}

/// File name of the dataset with the given seed.
pub fn file_name(seed: u64) -> String {
    format!("{seed}.gpfn")
}
