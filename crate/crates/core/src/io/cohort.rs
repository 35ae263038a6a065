//! Cohort directory scanning.
//!
//! Default layout: `<root>/<subject_id>/<anything><cluster digits>.<trk|vtp>`
//! with an optional `<root>/metadata.csv`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use regex::Regex;
use thiserror::Error;
use walkdir::WalkDir;

use crate::io::metadata::{load_metadata_csv, MetadataError};
use crate::model::{ClusterFile, Cohort, FileFormat, SubjectRecord};

/// Matched against the path relative to the root, `/`-separated.
pub const DEFAULT_PATTERN: &str = r"^(?P<subject>[^/]+)/[^/]*?(?P<cluster>\d+)\.(?i:trk|vtp)$";
pub const METADATA_FILE: &str = "metadata.csv";

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("cohort root {0} does not exist or is not a directory")]
    BadRoot(PathBuf),
    #[error("no cluster files under {0} match the naming pattern")]
    NoMatches(PathBuf),
    #[error("bad pattern: {0}")]
    BadPattern(String),
    #[error("cluster id '{id}' in {path} is not a valid integer")]
    BadClusterId { id: String, path: PathBuf },
    #[error("{subject} has two files for cluster {cluster}: {first} and {second}")]
    DuplicateCluster { subject: String, cluster: u32, first: PathBuf, second: PathBuf },
    #[error("metadata: {0}")]
    Metadata(#[from] MetadataError),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub cluster_id: u32,
    pub path: PathBuf,
    pub format: FileFormat,
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Regex with named groups `subject` and `cluster`.
    pub pattern: String,
    /// Keep only cluster ids divisible by this stride.
    pub every: Option<u32>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { pattern: DEFAULT_PATTERN.to_string(), every: None }
    }
}

/// Files found under a cohort root, sorted by subject id then cluster id.
#[derive(Debug, Clone)]
pub struct CohortManifest {
    pub root: PathBuf,
    pub pattern: String,
    pub entries: Vec<ManifestEntry>,
    /// Metadata rows from `metadata.csv`, if present.
    pub metadata: Vec<SubjectRecord>,
}

impl CohortManifest {
    pub fn subject_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.entries.iter().map(|e| e.subject_id.as_str()).collect();
        ids.dedup();
        ids
    }

    /// Merges files and metadata into a cohort. Subjects without cluster
    /// files are dropped with a warning.
    pub fn to_cohort(&self) -> Cohort {
        let mut subjects: BTreeMap<&str, SubjectRecord> = BTreeMap::new();
        for e in &self.entries {
            subjects
                .entry(&e.subject_id)
                .or_insert_with(|| SubjectRecord::new(&e.subject_id))
                .cluster_index
                .insert(e.cluster_id, ClusterFile { path: e.path.clone(), format: e.format });
        }
        for row in &self.metadata {
            match subjects.get_mut(row.subject_id.as_str()) {
                Some(s) => s.metadata = row.metadata.clone(),
                None => log::warn!("metadata row for '{}' has no cluster files", row.subject_id),
            }
        }
        Cohort::new(subjects.into_values().collect()).expect("subject ids are unique map keys")
    }
}

pub fn scan_cohort(root: &Path, options: &ScanOptions) -> Result<CohortManifest, ScanError> {
    if !root.is_dir() {
        return Err(ScanError::BadRoot(root.to_path_buf()));
    }
    let re = Regex::new(&options.pattern).map_err(|e| ScanError::BadPattern(e.to_string()))?;
    if re.capture_names().flatten().filter(|n| *n == "subject" || *n == "cluster").count() != 2 {
        return Err(ScanError::BadPattern("pattern needs named groups 'subject' and 'cluster'".into()));
    }

    let mut found: BTreeMap<(String, u32), ManifestEntry> = BTreeMap::new();
    for item in WalkDir::new(root).follow_links(true).sort_by_file_name() {
        let item = item.map_err(|e| ScanError::Io {
            path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
            source: e.into(),
        })?;
        if !item.file_type().is_file() {
            continue;
        }
        let path = item.path();
        let Some(format) = path.extension().and_then(|e| e.to_str()).and_then(FileFormat::from_extension)
        else {
            continue;
        };
        let rel = path.strip_prefix(root).unwrap_or(path);
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        let Some(caps) = re.captures(&rel) else {
            continue;
        };
        let subject_id = caps["subject"].to_string();
        let cluster_id: u32 = caps["cluster"].parse().map_err(|_| ScanError::BadClusterId {
            id: caps["cluster"].to_string(),
            path: path.to_path_buf(),
        })?;
        if options.every.is_some_and(|n| n > 0 && !cluster_id.is_multiple_of(n)) {
            continue;
        }
        let entry = ManifestEntry { subject_id, cluster_id, path: path.to_path_buf(), format };
        if let Some(prev) = found.get(&(entry.subject_id.clone(), cluster_id)) {
            return Err(ScanError::DuplicateCluster {
                subject: entry.subject_id,
                cluster: cluster_id,
                first: prev.path.clone(),
                second: entry.path,
            });
        }
        found.insert((entry.subject_id.clone(), cluster_id), entry);
    }
    if found.is_empty() {
        return Err(ScanError::NoMatches(root.to_path_buf()));
    }

    let meta_path = root.join(METADATA_FILE);
    let metadata = if meta_path.is_file() {
        let bytes = std::fs::read(&meta_path).map_err(|source| ScanError::Io { path: meta_path, source })?;
        load_metadata_csv(&bytes)?
    } else {
        Vec::new()
    };

    Ok(CohortManifest {
        root: root.to_path_buf(),
        pattern: options.pattern.clone(),
        entries: found.into_values().collect(),
        metadata,
    })
}
