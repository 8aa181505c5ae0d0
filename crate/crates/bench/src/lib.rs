//! Shared fixtures for the benchmarks.

use std::path::PathBuf;
use std::sync::Arc;

use regula_core::Catalog;

pub fn corpus() -> Arc<Catalog> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/manifest.json");
    Arc::new(Catalog::load(path).expect("bundled corpus loads"))
}
