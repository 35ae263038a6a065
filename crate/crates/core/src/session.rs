//! A loaded cohort with lazily parsed clusters and cached summaries. Shared
//! by the CLI, the HTTP server and the C API.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::io::{load_cluster, scan_cohort, CohortManifest, LoadError, ScanError, ScanOptions};
use crate::model::{ClusterGeometry, ClusterKey, Cohort, Range};
use crate::projection::{default_pivot_count, pivot_mds, DistanceMetric, ProjectionError, ProjectionLayout};
use crate::stats::{cluster_summary, cohort_ranges, fingerprint, ClusterSummary, Fingerprint, RangeScope, StatsError};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{key}: {source}")]
    Stats { key: ClusterKey, source: StatsError },
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("unknown subject '{0}'")]
    UnknownSubject(String),
    #[error("unknown cluster {0}")]
    UnknownCluster(ClusterKey),
    #[error("unknown axis '{0}'")]
    UnknownAxis(String),
    #[error("no loadable clusters for this request")]
    NoClusters,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EngineConfig {
    pub range_scope: RangeScope,
}

/// Parameters of one projection. Empty `subjects` means every subject;
/// empty `axes` means every known field.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionRequest {
    #[serde(default)]
    pub subjects: Vec<String>,
    #[serde(default)]
    pub axes: Vec<String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    pub layout: ProjectionLayout,
    pub fingerprints: Vec<Fingerprint>,
    /// Pivot count actually used.
    pub k: usize,
    pub seed: u64,
    pub notices: Vec<String>,
}

/// Canonical form of a request after defaults are resolved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResolvedRequest {
    pub subjects: Vec<String>,
    pub axes: Vec<String>,
    pub k: Option<usize>,
    pub seed: u64,
    pub scope: RangeScope,
}

impl ResolvedRequest {
    /// Short stable identifier of the request, usable as a cache key.
    pub fn cache_key(&self) -> String {
        let canonical = format!(
            "subjects={}\naxes={}\nk={}\nseed={}\nscope={:?}",
            self.subjects.join("\u{1f}"),
            self.axes.join("\u{1f}"),
            self.k.map(|k| k.to_string()).unwrap_or_else(|| "default".into()),
            self.seed,
            self.scope
        );
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub struct Engine {
    manifest: CohortManifest,
    cohort: Cohort,
    config: EngineConfig,
    geometry: RwLock<HashMap<ClusterKey, Arc<ClusterGeometry>>>,
    summaries: RwLock<HashMap<ClusterKey, Arc<ClusterSummary>>>,
    cohort_ranges: OnceLock<BTreeMap<String, Range>>,
}

impl Engine {
    pub fn open(root: &Path, options: &ScanOptions, config: EngineConfig) -> Result<Self, EngineError> {
        let manifest = scan_cohort(root, options)?;
        Ok(Self::from_manifest(manifest, config))
    }

    pub fn from_manifest(manifest: CohortManifest, config: EngineConfig) -> Self {
        let cohort = manifest.to_cohort();
        Self {
            manifest,
            cohort,
            config,
            geometry: RwLock::default(),
            summaries: RwLock::default(),
            cohort_ranges: OnceLock::new(),
        }
    }

    pub fn manifest(&self) -> &CohortManifest {
        &self.manifest
    }

    pub fn cohort(&self) -> &Cohort {
        &self.cohort
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    pub fn keys(&self) -> Vec<ClusterKey> {
        self.cohort.keys()
    }

    /// Keys of the given subjects (all subjects when empty).
    pub fn keys_of<S: AsRef<str>>(&self, subjects: &[S]) -> Result<Vec<ClusterKey>, EngineError> {
        if subjects.is_empty() {
            return Ok(self.keys());
        }
        let mut keys = Vec::new();
        let wanted: BTreeSet<&str> = subjects.iter().map(AsRef::as_ref).collect();
        for id in wanted {
            let s = self.cohort.subject(id).ok_or_else(|| EngineError::UnknownSubject(id.to_string()))?;
            keys.extend(s.cluster_index.keys().map(|&c| ClusterKey::new(id, c)));
        }
        Ok(keys)
    }

    fn read(&self, key: &ClusterKey) -> Result<ClusterGeometry, EngineError> {
        let file = self.cohort.cluster_file(key).ok_or_else(|| EngineError::UnknownCluster(key.clone()))?;
        Ok(load_cluster(&file.path, file.format, key.cluster_id)?)
    }

    /// Parsed geometry, loaded on first use and kept.
    pub fn geometry(&self, key: &ClusterKey) -> Result<Arc<ClusterGeometry>, EngineError> {
        if let Some(g) = self.geometry.read().unwrap().get(key) {
            return Ok(Arc::clone(g));
        }
        let g = Arc::new(self.read(key)?);
        self.geometry.write().unwrap().entry(key.clone()).or_insert_with(|| Arc::clone(&g));
        Ok(g)
    }

    /// Cluster summary, computed on first use. Geometry read only for the
    /// summary is not retained.
    pub fn summary(&self, key: &ClusterKey) -> Result<Arc<ClusterSummary>, EngineError> {
        if let Some(s) = self.summaries.read().unwrap().get(key) {
            return Ok(Arc::clone(s));
        }
        let cached = self.geometry.read().unwrap().get(key).cloned();
        let g = match cached {
            Some(g) => g,
            None => Arc::new(self.read(key)?),
        };
        let s = cluster_summary(&g, key.clone()).map_err(|source| EngineError::Stats { key: key.clone(), source })?;
        let s = Arc::new(s);
        self.summaries.write().unwrap().entry(key.clone()).or_insert_with(|| Arc::clone(&s));
        Ok(s)
    }

    /// Summaries of `keys` computed in parallel, in input order. Failures
    /// are returned alongside instead of aborting the batch.
    pub fn summaries(&self, keys: &[ClusterKey]) -> (Vec<Arc<ClusterSummary>>, Vec<(ClusterKey, EngineError)>) {
        let results: Vec<_> = keys.par_iter().map(|k| (k, self.summary(k))).collect();
        let mut ok = Vec::new();
        let mut failed = Vec::new();
        for (k, r) in results {
            match r {
                Ok(s) => ok.push(s),
                Err(e) => failed.push((k.clone(), e)),
            }
        }
        (ok, failed)
    }

    /// Ranges over every cluster of the cohort that can be summarized.
    pub fn cohort_ranges(&self) -> Result<&BTreeMap<String, Range>, EngineError> {
        if let Some(r) = self.cohort_ranges.get() {
            return Ok(r);
        }
        let (ok, failed) = self.summaries(&self.keys());
        for (k, e) in &failed {
            log::warn!("{k} left out of cohort ranges: {e}");
        }
        let ranges = cohort_ranges(ok.iter().map(Arc::as_ref)).map_err(|_| EngineError::NoClusters)?;
        Ok(self.cohort_ranges.get_or_init(|| ranges))
    }

    /// Cohort index with ranges filled in.
    pub fn cohort_index(&self) -> Result<Cohort, EngineError> {
        let mut cohort = self.cohort.clone();
        cohort.scalar_ranges = self.cohort_ranges()?.clone();
        Ok(cohort)
    }

    fn ranges_for(&self, summaries: &[Arc<ClusterSummary>]) -> Result<BTreeMap<String, Range>, EngineError> {
        match self.config.range_scope {
            RangeScope::Cohort => self.cohort_ranges().cloned(),
            RangeScope::Selection => {
                cohort_ranges(summaries.iter().map(Arc::as_ref)).map_err(|_| EngineError::NoClusters)
            }
        }
    }

    pub fn fingerprint<S: AsRef<str>>(&self, key: &ClusterKey, axes: &[S]) -> Result<Fingerprint, EngineError> {
        let s = self.summary(key)?;
        let ranges = self.ranges_for(std::slice::from_ref(&s))?;
        let axes = resolve_axes(axes, &ranges)?;
        fingerprint(&s, &ranges, &axes).map_err(|source| EngineError::Stats { key: key.clone(), source })
    }

    pub fn resolve(&self, req: &ProjectionRequest) -> ResolvedRequest {
        let mut subjects = req.subjects.clone();
        subjects.sort();
        subjects.dedup();
        let mut axes = req.axes.clone();
        axes.sort();
        axes.dedup();
        ResolvedRequest {
            subjects,
            axes,
            k: req.k,
            seed: req.seed.unwrap_or(DEFAULT_SEED),
            scope: self.config.range_scope,
        }
    }

    /// Summarizes the requested subjects' clusters (loading them if
    /// needed), builds fingerprints and runs PivotMDS in two dimensions.
    /// `k` larger than the cluster count is clamped with a notice.
    pub fn project(&self, req: &ProjectionRequest) -> Result<ProjectionOutcome, EngineError> {
        let resolved = self.resolve(req);
        let keys = self.keys_of(&resolved.subjects)?;
        let (summaries, failed) = self.summaries(&keys);
        let mut notices: Vec<String> =
            failed.iter().map(|(k, e)| format!("{k} skipped: {e}")).collect();
        if summaries.is_empty() {
            return Err(EngineError::NoClusters);
        }
        let ranges = self.ranges_for(&summaries)?;
        let axes = resolve_axes(&resolved.axes, &ranges)?;
        let fingerprints = summaries
            .iter()
            .map(|s| fingerprint(s, &ranges, &axes).map_err(|source| EngineError::Stats { key: s.key.clone(), source }))
            .collect::<Result<Vec<_>, _>>()?;

        let n = fingerprints.len();
        let k = match resolved.k {
            Some(0) => return Err(ProjectionError::BadK { k: 0, n }.into()),
            Some(k) if k > n => {
                notices.push(format!("k = {k} exceeds the {n} clusters; using k = {n}"));
                n
            }
            Some(k) => k,
            None => default_pivot_count(n),
        };
        let metric = DistanceMetric::euclidean(&axes)?;
        let layout = pivot_mds(&fingerprints, &metric, k, 2, resolved.seed)?;
        Ok(ProjectionOutcome { layout, fingerprints, k, seed: resolved.seed, notices })
    }
}

/// Validates requested axes against the known fields; empty selects all.
fn resolve_axes<S: AsRef<str>>(axes: &[S], ranges: &BTreeMap<String, Range>) -> Result<Vec<String>, EngineError> {
    if axes.is_empty() {
        if ranges.is_empty() {
            return Err(ProjectionError::NoAxes.into());
        }
        return Ok(ranges.keys().cloned().collect());
    }
    let mut out: Vec<String> = Vec::with_capacity(axes.len());
    for a in axes {
        let a = a.as_ref();
        if !ranges.contains_key(a) {
            return Err(EngineError::UnknownAxis(a.to_string()));
        }
        out.push(a.to_string());
    }
    out.sort();
    out.dedup();
    Ok(out)
}
