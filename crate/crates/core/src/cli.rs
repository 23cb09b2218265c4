//! Command-line interface: `generate`, `stats`, `inspect`, and `bench`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::dataset::generate_dataset;
use crate::episode::build_episodes;
use crate::format::{self, decode_header, read_dataset, write_dataset, Header};
use crate::prior::{load_config, sample_prior, PriorConfig, PriorSample, CONFIG_ENV};
use crate::rng::{self, StreamTag};
use crate::spectral::{laplacian_pe, normalized_laplacian, EigenPairs};
use crate::stats::compute_report;
use crate::structure::generate_structure;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gpfn", version, about = "Synthetic attributed graph datasets for graph PFN pretraining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate datasets into DIR as <seed>.gpfn, seeds S, S+1, ...
    Generate {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Prior config (TOML); defaults to $GPF_CONFIG, then built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Episodes stored per dataset.
        #[arg(long, default_value_t = 0)]
        episodes: u16,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        workers: u32,
    },
    /// Print structural statistics of each container.
    Stats {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print a container's header, prior sample, and optionally a LapPE summary.
    Inspect {
        file: PathBuf,
        #[arg(long)]
        lappe: Option<usize>,
    },
    /// Time generation without writing files.
    Bench {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Only generate graph structure.
        #[arg(long)]
        structure_only: bool,
    },
}

fn resolve_config(path: Option<&Path>) -> Result<PriorConfig, String> {
    let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match path.map(Path::to_path_buf).or(env) {
        Some(p) => load_config(&p).map_err(|e| e.to_string()),
        None => Ok(PriorConfig::default()),
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate {
            count,
            seed,
            out: dir,
            config,
            episodes,
            workers,
        } => generate(count, seed, &dir, config.as_deref(), episodes, workers as usize, err),
        Command::Stats { files } => stats(&files, out, err),
        Command::Inspect { file, lappe } => inspect(&file, lappe, out),
        Command::Bench {
            count,
            seed,
            config,
            structure_only,
        } => bench(count, seed, config.as_deref(), structure_only, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn generate(
    count: usize,
    seed: u64,
    dir: &Path,
    config: Option<&Path>,
    episodes: u16,
    workers: usize,
    err: &mut dyn Write,
) -> Result<(), String> {
    let config = resolve_config(config)?;
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let first_error: Mutex<Option<String>> = Mutex::new(None);
    let start = Instant::now();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(count.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count || failed.load(Ordering::Relaxed) {
                    break;
                }
                let s = seed.wrapping_add(i as u64);
                let result = generate_dataset(&config, s)
                    .map_err(|e| e.to_string())
                    .and_then(|ds| {
                        let eps = build_episodes(&ds, episodes as usize).map_err(|e| e.to_string())?;
                        write_dataset(&ds, &eps, dir.join(format::file_name(s))).map_err(|e| e.to_string())
                    });
                if let Err(e) = result {
                    failed.store(true, Ordering::Relaxed);
                    first_error.lock().unwrap().get_or_insert(format!("seed {s}: {e}"));
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    let secs = start.elapsed().as_secs_f64();
    let _ = writeln!(
        err,
        "generated {count} datasets in {secs:.3} s ({:.2} datasets/s, {workers} workers)",
        count as f64 / secs.max(1e-9)
    );
    Ok(())
}

fn stats(files: &[PathBuf], out: &mut dyn Write, err: &mut dyn Write) -> Result<(), String> {
    let mut failures = 0;
    for file in files {
        match read_dataset(file) {
            Ok((ds, _)) => {
                let report = compute_report(&ds.graph);
                let _ = writeln!(out, "[[dataset]]\nfile = {:?}\n{report}", file.display().to_string());
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(err, "error: {}: {e}", file.display());
            }
        }
    }
    if failures > 0 {
        return Err(format!("{failures} of {} files failed validation", files.len()));
    }
    Ok(())
}

#[derive(Serialize)]
struct HeaderView {
    version: u16,
    flags: u16,
    classification: bool,
    n_nodes: u64,
    arc_count: u64,
    n_features: u32,
    n_classes: u16,
    lappe_k: u16,
    episode_count: u16,
}

impl From<Header> for HeaderView {
    fn from(h: Header) -> Self {
        Self {
            version: h.version,
            flags: h.flags,
            classification: h.is_classification(),
            n_nodes: h.n_nodes,
            arc_count: h.arc_count,
            n_features: h.n_features,
            n_classes: h.n_classes,
            lappe_k: h.lappe_k,
            episode_count: h.episode_count,
        }
    }
}

#[derive(Serialize)]
struct LapPeView {
    k: usize,
    informative_columns: usize,
    eigenvalues: Vec<f64>,
    max_residual: f64,
}

#[derive(Serialize)]
struct InspectView {
    generator_version: String,
    seed: String,
    header: HeaderView,
    #[serde(skip_serializing_if = "Option::is_none")]
    lappe: Option<LapPeView>,
    prior: PriorSample,
}

fn inspect(file: &Path, lappe: Option<usize>, out: &mut dyn Write) -> Result<(), String> {
    let bytes = std::fs::read(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let header = decode_header(&bytes).map_err(|e| e.to_string())?;
    let (ds, _, meta) = format::decode_with_metadata(&bytes).map_err(|e| e.to_string())?;
    let lappe = match lappe {
        Some(k) => {
            let pe = laplacian_pe(&ds.graph, k, &mut rng::stream(ds.seed, StreamTag::LapPe)).map_err(|e| e.to_string())?;
            let pairs = EigenPairs {
                values: pe.eigenvalues.clone(),
                vectors: (0..pe.n_informative()).map(|j| pe.column(j)).collect(),
            };
            let residual = pairs.max_residual(&normalized_laplacian(&ds.graph));
            Some(LapPeView {
                k,
                informative_columns: pe.n_informative(),
                eigenvalues: pe.eigenvalues,
                max_residual: residual,
            })
        }
        None => None,
    };
    let view = InspectView {
        generator_version: meta.generator_version,
        seed: meta.seed.to_string(),
        header: header.into(),
        lappe,
        prior: ds.prior,
    };
    let text = toml::to_string(&view).map_err(|e| e.to_string())?;
    let _ = write!(out, "{text}");
    Ok(())
}

fn bench(count: usize, seed: u64, config: Option<&Path>, structure_only: bool, out: &mut dyn Write) -> Result<(), String> {
    let config = resolve_config(config)?;
    let start = Instant::now();
    let (mut nodes, mut edges) = (0usize, 0usize);
    for i in 0..count {
        let s = seed.wrapping_add(i as u64);
        let graph = if structure_only {
            let prior = sample_prior(&config, s);
            generate_structure(&prior, &mut rng::stream(s, StreamTag::Structure))
                .map_err(|e| format!("seed {s}: {e}"))?
                .0
        } else {
            generate_dataset(&config, s).map_err(|e| format!("seed {s}: {e}"))?.graph
        };
        nodes += graph.n_nodes();
        edges += graph.n_edges();
    }
    let secs = start.elapsed().as_secs_f64();
    let _ = writeln!(out, "mode = {:?}", if structure_only { "structure" } else { "dataset" });
    let _ = writeln!(out, "count = {count}");
    let _ = writeln!(out, "seconds = {secs}");
    let _ = writeln!(out, "per_second = {}", count as f64 / secs.max(1e-9));
    let _ = writeln!(out, "mean_nodes = {}", nodes as f64 / count.max(1) as f64);
    let _ = writeln!(out, "mean_edges = {}", edges as f64 / count.max(1) as f64);
    Ok(())
}
