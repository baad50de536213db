//! Shared helpers: seed resolution, gallery/query loading, run recording.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use meaad_core::embedding::{ExpertIndex, QuerySample};
use meaad_core::error::{Error, Result};
use meaad_core::format;

pub const DEFAULT_SEED: u64 = 7;

/// Seed precedence: explicit flag, then MEAAD_SEED, then the default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("MEAAD_SEED") {
        Ok(raw) => raw.parse().map_err(|_| {
            Error::InvalidConfig(format!("MEAAD_SEED must be an integer, got {raw:?}"))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn create_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Records the resolved configuration as sorted `key=value` lines. Paths are
/// recorded by file name so reruns in different directories stay
/// byte-comparable.
pub fn write_run_config(dir: &Path, command: &str, entries: &[(String, String)]) -> Result<()> {
    let mut sorted: Vec<&(String, String)> = entries.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut w = create_file(dir, "run_config.txt")?;
    writeln!(w, "command={command}")?;
    for (key, value) in sorted {
        writeln!(w, "{key}={value}")?;
    }
    Ok(())
}

pub fn path_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn path_list(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| path_name(p))
        .collect::<Vec<_>>()
        .join(";")
}

/// Loads gallery files and orders them by expert id, insisting on a
/// complete 0..N-1 set with one shared dimension.
pub fn load_galleries(paths: &[PathBuf]) -> Result<Vec<ExpertIndex>> {
    if paths.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one --gallery is required".into(),
        ));
    }
    let mut indexes = Vec::with_capacity(paths.len());
    for path in paths {
        let file = File::open(path)?;
        indexes.push(format::read_embedding_table(BufReader::new(file))?);
    }
    indexes.sort_by_key(|idx| idx.expert_id());
    let dim = indexes[0].dimension();
    for (pos, index) in indexes.iter().enumerate() {
        if index.expert_id() != pos {
            return Err(Error::InvalidConfig(format!(
                "gallery files must cover expert ids 0..{} exactly, found id {}",
                paths.len() - 1,
                index.expert_id()
            )));
        }
        if index.dimension() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: index.dimension(),
            });
        }
    }
    Ok(indexes)
}

/// Loads and concatenates query files, checking every file against the
/// expected dimension and expert count.
pub fn load_queries(paths: &[PathBuf], dim: usize, n_experts: usize) -> Result<Vec<QuerySample>> {
    let mut all = Vec::new();
    for path in paths {
        let file = File::open(path)?;
        let (file_dim, file_experts, queries) = format::read_query_file(BufReader::new(file))?;
        if file_dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: file_dim,
            });
        }
        if file_experts != n_experts {
            return Err(Error::DimensionMismatch {
                expected: n_experts,
                actual: file_experts,
            });
        }
        all.extend(queries);
    }
    Ok(all)
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
