mod common;

use common::*;
use gpfn::episode::build_episodes;
use gpfn::format::*;
use gpfn::{generate_dataset, AttributedGraphDataset, Episode, Target};

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn dataset_with_episodes(toml: &str, seed: u64, episodes: usize) -> (AttributedGraphDataset, Vec<Episode>) {
    let ds = generate_dataset(&config(toml), seed).unwrap();
    let eps = build_episodes(&ds, episodes).unwrap();
    (ds, eps)
}

/// Section boundaries implied by the documented layout.
fn sections(ds: &AttributedGraphDataset, eps: &[Episode]) -> Vec<(&'static str, usize)> {
    let n = ds.n_nodes();
    let arcs = ds.graph.n_arcs();
    let target = match ds.target {
        Target::Regression(_) => 4,
        Target::Classification(_) => 2,
    };
    let mut out = vec![("header", 40)];
    out.push(("graph", (n + 1) * 8 + arcs * 4));
    out.push(("features", n * ds.n_features() * 4));
    out.push(("targets", n * target));
    for ep in eps {
        let p = ep.mgm_positives.len();
        out.push(("episode", n.div_ceil(8) + 4 + 16 * p + 8 + (n + 1) * 8 + (arcs - 2 * p) * 4));
    }
    out
}

#[test]
fn closed_form_size_for_thousand_nodes() {
    let toml = "node_count_range = { min = 1000, max = 1000 }\nfeature_count_range = { min = 8, max = 8 }\n";
    for episodes in [0, 2] {
        let (ds, eps) = dataset_with_episodes(toml, 17, episodes);
        assert_eq!((ds.n_nodes(), ds.n_features()), (1000, 8));
        let bytes = encode(&ds, &eps).unwrap();
        let fixed: usize = sections(&ds, &eps).iter().map(|s| s.1).sum();
        let meta_len = u32_at(&bytes, fixed) as usize;
        assert_eq!(bytes.len(), fixed + 4 + meta_len);
        let meta: toml::Table = std::str::from_utf8(&bytes[fixed + 4..]).unwrap().parse().unwrap();
        assert_eq!(meta["seed"].as_str(), Some("17"));
        assert_eq!(meta["generator_version"].as_str(), Some(GENERATOR_VERSION));

        let h = decode_header(&bytes).unwrap();
        assert_eq!(&bytes[..4], b"GPFN");
        assert_eq!((h.version, h.n_nodes, h.n_features), (1, 1000, 8));
        assert_eq!(h.arc_count as usize, ds.graph.n_arcs());
        assert_eq!(h.episode_count as usize, episodes);
        assert_eq!(u64_at(&bytes, 8), 1000);
        assert_eq!(h.fixed_sections_len() as usize, sections(&ds, &[]).iter().map(|s| s.1).sum::<usize>());
        assert_eq!(h.is_classification(), matches!(ds.target, Target::Classification(_)));
    }
}

#[test]
fn zero_episodes_have_no_blocks() {
    let (ds, _) = dataset_with_episodes("node_count_range = { min = 50, max = 50 }", 2, 0);
    let bytes = encode(&ds, &[]).unwrap();
    assert_eq!(u16::from_le_bytes([bytes[32], bytes[33]]), 0);
    let h = decode_header(&bytes).unwrap();
    assert_eq!(h.episode_count, 0);
    assert_eq!(bytes.len() as u64, h.fixed_sections_len() + 4 + u32_at(&bytes, h.fixed_sections_len() as usize) as u64);
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config();
    for seed in 0..100u64 {
        let ds = generate_dataset(&config, seed).unwrap();
        let eps = build_episodes(&ds, (seed % 3) as usize).unwrap();
        let path = dir.path().join(file_name(seed));
        write_dataset(&ds, &eps, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes, encode(&ds, &eps).unwrap());
        let (back, back_eps) = read_dataset(&path).unwrap();
        assert_eq!(back_eps, eps);
        assert_eq!(back.graph, ds.graph);
        assert_eq!(back.target, ds.target);
        assert_eq!(back.prior, ds.prior);
        assert_eq!(back.seed, seed);
        assert!(back.features.iter().zip(&ds.features).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(encode(&back, &back_eps).unwrap(), bytes);
    }
    assert_eq!(file_name(42), "42.gpfn");
}

#[test]
fn every_truncation_names_its_section() {
    let (ds, eps) = dataset_with_episodes("node_count_range = { min = 30, max = 60 }", 5, 2);
    let bytes = encode(&ds, &eps).unwrap();
    let mut bounds = Vec::new();
    let mut at = 0;
    for (name, len) in sections(&ds, &eps) {
        bounds.push((name, at, at + len));
        at += len;
    }
    bounds.push(("metadata", at, bytes.len()));
    for cut in 0..bytes.len() {
        let want = bounds.iter().find(|b| cut >= b.1 && cut < b.2).unwrap().0;
        match decode(&bytes[..cut]) {
            Err(FormatError::CorruptSection { section, offset }) => {
                assert_eq!(section, want, "cut at {cut}");
                assert!(offset as usize <= cut);
            }
            other => panic!("cut at {cut}: {other:?}"),
        }
    }
}

#[test]
fn header_errors() {
    let (ds, _) = dataset_with_episodes("node_count_range = { min = 20, max = 20 }", 1, 0);
    let bytes = encode(&ds, &[]).unwrap();
    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"GPFM");
    assert!(matches!(decode(&bad), Err(FormatError::BadMagic(m)) if &m == b"GPFM"));
    let mut bad = bytes.clone();
    bad[4] = 2;
    assert!(matches!(decode(&bad), Err(FormatError::UnsupportedVersion(2))));
    let mut bad = bytes.clone();
    bad[7] = 0x80;
    assert!(matches!(decode(&bad), Err(FormatError::Invariant(m)) if m.contains("flags")));
    let mut bad = bytes.clone();
    bad[39] = 1;
    assert!(matches!(decode(&bad), Err(FormatError::Invariant(m)) if m.contains("reserved")));
    let mut bad = bytes;
    bad.push(0);
    assert!(matches!(decode(&bad), Err(FormatError::CorruptSection { section: "trailer", .. })));
}

#[test]
fn invariant_violations_are_rejected() {
    let (ds, eps) = dataset_with_episodes("node_count_range = { min = 60, max = 60 }\nmean_degree_range = { min = 6.0, max = 6.0 }", 3, 1);
    assert!(ds.graph.n_edges() > 0);
    let bytes = encode(&ds, &eps).unwrap();
    let n = ds.n_nodes();
    let graph_at = 40 + (n + 1) * 8;

    // point the first arc somewhere that breaks symmetry or ordering
    let mut bad = bytes.clone();
    let first = u32_at(&bad, graph_at);
    bad[graph_at..graph_at + 4].copy_from_slice(&(first ^ 1).to_le_bytes());
    assert!(matches!(decode(&bad), Err(FormatError::Invariant(_))));

    let mut bad = bytes.clone();
    bad[40..48].copy_from_slice(&1u64.to_le_bytes());
    assert!(matches!(decode(&bad), Err(FormatError::Invariant(_))));

    let features_at = graph_at + ds.graph.n_arcs() * 4;
    let mut bad = bytes.clone();
    bad[features_at..features_at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(matches!(decode(&bad), Err(FormatError::Invariant(_))));

    let targets_at = features_at + n * ds.n_features() * 4;
    let mut bad = bytes.clone();
    match ds.target {
        Target::Classification(_) => bad[targets_at..targets_at + 2].copy_from_slice(&99u16.to_le_bytes()),
        Target::Regression(_) => bad[targets_at..targets_at + 4].copy_from_slice(&f32::INFINITY.to_le_bytes()),
    }
    assert!(matches!(decode(&bad), Err(FormatError::Invariant(_))));

    // an episode whose context mask is all ones
    let episode_at = targets_at + n * if matches!(ds.target, Target::Classification(_)) { 2 } else { 4 };
    let mut bad = bytes.clone();
    (0..n).for_each(|i| bad[episode_at + i / 8] |= 1 << (i % 8));
    assert!(matches!(decode(&bad), Err(FormatError::Invariant(m)) if m.contains("episode 0")));

    // padding bits past the last node
    assert_ne!(n % 8, 0);
    let mut bad = bytes.clone();
    bad[episode_at + n / 8] |= 0x80;
    assert!(matches!(decode(&bad), Err(FormatError::Invariant(m)) if m.contains("bitmap")));

    // flip the task flag
    let mut bad = bytes;
    bad[6] ^= 1;
    assert!(matches!(decode(&bad), Err(FormatError::Invariant(_))));
}

#[test]
fn write_errors_carry_the_path() {
    let (ds, _) = dataset_with_episodes("node_count_range = { min = 20, max = 20 }", 1, 0);
    let path = std::path::Path::new("/nonexistent-dir/x.gpfn");
    match write_dataset(&ds, &[], path) {
        Err(e @ FormatError::Io { .. }) => assert!(e.to_string().contains("/nonexistent-dir/x.gpfn")),
        other => panic!("{other:?}"),
    }
    assert!(matches!(read_dataset(path), Err(FormatError::Io { .. })));
}
