//! File formats and cohort discovery.

pub mod cohort;
pub mod metadata;
pub mod trk;
pub mod vtp;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use cohort::{scan_cohort, CohortManifest, ManifestEntry, ScanError, ScanOptions, DEFAULT_PATTERN, METADATA_FILE};
pub use metadata::{load_metadata_csv, MetadataError};
pub use trk::{parse_trk, read_trk, write_trk, write_trk_with_header, TrkError, TrkHeader};
pub use vtp::{parse_vtp, write_vtp, VtpEncoding, VtpError};

use crate::model::{ClusterGeometry, FileFormat};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Trk { path: PathBuf, source: TrkError },
    #[error("{path}: {source}")]
    Vtp { path: PathBuf, source: VtpError },
}

/// Reads and parses one cluster file, stamping `cluster_id` on the result.
pub fn load_cluster(path: &Path, format: FileFormat, cluster_id: u32) -> Result<ClusterGeometry, LoadError> {
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    let mut g = match format {
        FileFormat::Trk => {
            parse_trk(&bytes).map_err(|source| LoadError::Trk { path: path.to_path_buf(), source })?
        }
        FileFormat::Vtp => {
            parse_vtp(&bytes).map_err(|source| LoadError::Vtp { path: path.to_path_buf(), source })?
        }
    };
    g.cluster_id = cluster_id;
    Ok(g)
}

/// Header-only check used by `fiberscope scan`: TRK files get their header
/// validated, VTP files a full parse.
pub fn check_cluster_file(path: &Path, format: FileFormat) -> Result<(), LoadError> {
    match format {
        FileFormat::Trk => {
            let bytes =
                std::fs::read(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
            TrkHeader::parse(&bytes)
                .map(|_| ())
                .map_err(|source| LoadError::Trk { path: path.to_path_buf(), source })
        }
        FileFormat::Vtp => load_cluster(path, format, 0).map(|_| ()),
    }
}
