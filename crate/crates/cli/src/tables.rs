//! Spectral tables, optionally backed by an on-disk cache.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use sfem::{build_spectral_table, load_table, save_table, CacheError, SpectralTable1D};

use crate::CliError;

pub fn cache_path(dir: &Path, n: usize, k: usize) -> PathBuf {
    dir.join(format!("n{n}_k{k}.sfem"))
}

/// Where a table came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Built,
    Cached,
}

/// Reads the cached table when one exists (a bad file is an error, not a
/// silent rebuild), otherwise builds it and stores it in the cache.
pub fn obtain(n: usize, k: usize, cache: Option<&Path>) -> Result<(SpectralTable1D, Source), CliError> {
    let Some(dir) = cache else {
        let t = build_spectral_table(n, k).map_err(CliError::solver(format!("spectral table n={n}, K={k}")))?;
        return Ok((t, Source::Built));
    };
    let path = cache_path(dir, n, k);
    if path.exists() {
        let t = load_table(&path, n, k).map_err(|e| CliError::Solver {
            context: format!("cached table {}", path.display()),
            source: e.into(),
        })?;
        return Ok((t, Source::Cached));
    }
    let t = build_spectral_table(n, k).map_err(CliError::solver(format!("spectral table n={n}, K={k}")))?;
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    save_table(&t, &path).map_err(|e| match e {
        CacheError::Io { source, .. } => CliError::Io {
            context: format!("writing {}", path.display()),
            source,
        },
        other => CliError::Solver {
            context: format!("writing {}", path.display()),
            source: other.into(),
        },
    })?;
    Ok((t, Source::Built))
}

/// One table per axis, sharing equal `(n, K)`.
pub fn for_axes(orders: &[usize], elements: &[usize], cache: Option<&Path>) -> Result<Vec<Arc<SpectralTable1D>>, CliError> {
    let mut out: Vec<Arc<SpectralTable1D>> = Vec::with_capacity(orders.len());
    for (&n, &k) in orders.iter().zip(elements) {
        let existing = out.iter().find(|t| t.order() == n && t.elements() == k).cloned();
        let table = match existing {
            Some(t) => t,
            None => Arc::new(obtain(n, k, cache)?.0),
        };
        out.push(table);
    }
    Ok(out)
}
