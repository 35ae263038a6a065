//! Shared domain types: fibers, clusters, subjects and the identity scheme
//! used to address a cluster across the whole cohort.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// A vertex in file-native coordinates (usually millimeters, RAS).
pub type Point3 = [f64; 3];

/// Suffix appended to a per-fiber property whose name collides with a
/// per-vertex scalar of the same cluster.
pub const PROPERTY_SUFFIX: &str = " (property)";

/// One streamline.
///
/// `scalars[i]` holds the per-vertex values of the cluster's
/// `scalar_names[i]`; a fiber does not carry names itself.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FiberPolyline {
    pub points: Vec<Point3>,
    pub scalars: Vec<Vec<f64>>,
}

impl FiberPolyline {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points, scalars: Vec::new() }
    }

    pub fn with_scalars(points: Vec<Point3>, scalars: Vec<Vec<f64>>) -> Self {
        Self { points, scalars }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One fiber bundle, as stored in a single TRK or VTP file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterGeometry {
    pub cluster_id: u32,
    pub scalar_names: Vec<String>,
    pub property_names: Vec<String>,
    pub fibers: Vec<FiberPolyline>,
    /// `properties[i][f]` is property `property_names[i]` of fiber `f`.
    pub properties: Vec<Vec<f64>>,
}

impl ClusterGeometry {
    pub fn fiber_count(&self) -> usize {
        self.fibers.len()
    }

    pub fn point_count(&self) -> usize {
        self.fibers.iter().map(FiberPolyline::len).sum()
    }

    pub fn scalar_index(&self, name: &str) -> Option<usize> {
        self.scalar_names.iter().position(|n| n == name)
    }

    pub fn property_index(&self, name: &str) -> Option<usize> {
        self.property_names.iter().position(|n| n == name)
    }

    /// Every name a summary or fingerprint may refer to, scalars first.
    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.scalar_names
            .iter()
            .chain(self.property_names.iter())
            .map(String::as_str)
    }

    /// Appends the property suffix to every property name that is also a
    /// scalar name.
    pub fn disambiguate_property_names(&mut self) {
        let scalars: BTreeSet<&str> = self.scalar_names.iter().map(String::as_str).collect();
        for name in &mut self.property_names {
            if scalars.contains(name.as_str()) {
                name.push_str(PROPERTY_SUFFIX);
            }
        }
    }
}

/// A single broken invariant reported by [`validate_geometry`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub fiber: Option<usize>,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fiber {
            Some(i) => write!(f, "fiber {i}: {}", self.rule),
            None => write!(f, "cluster: {}", self.rule),
        }
    }
}

/// Checks every structural invariant of a cluster. Never fails; an empty
/// list means the geometry is valid.
pub fn validate_geometry(g: &ClusterGeometry) -> Vec<Violation> {
    let mut out = Vec::new();
    let cluster = |rule: String| Violation { fiber: None, rule };

    if g.fibers.is_empty() {
        out.push(cluster("no fibers".into()));
    }
    let mut seen = BTreeSet::new();
    for name in g.field_names() {
        if !seen.insert(name) {
            out.push(cluster(format!("duplicate field name '{name}'")));
        }
    }
    if g.properties.len() != g.property_names.len() {
        out.push(cluster(format!(
            "{} property names but {} property arrays",
            g.property_names.len(),
            g.properties.len()
        )));
    }
    for (name, values) in g.property_names.iter().zip(&g.properties) {
        if values.len() != g.fibers.len() {
            out.push(cluster(format!(
                "property '{name}' has {} values for {} fibers",
                values.len(),
                g.fibers.len()
            )));
        }
    }

    for (i, fiber) in g.fibers.iter().enumerate() {
        let mut push = |rule: String| out.push(Violation { fiber: Some(i), rule });
        if fiber.points.len() < 2 {
            push("fewer than 2 points".into());
        }
        if let Some(j) = fiber
            .points
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            push(format!("non-finite coordinate at point {j}"));
        }
        if fiber.scalars.len() != g.scalar_names.len() {
            push(format!(
                "carries {} scalar arrays, cluster declares {}",
                fiber.scalars.len(),
                g.scalar_names.len()
            ));
        }
        for (name, values) in g.scalar_names.iter().zip(&fiber.scalars) {
            if values.len() != fiber.points.len() {
                push(format!(
                    "scalar '{name}' has length {}, expected {}",
                    values.len(),
                    fiber.points.len()
                ));
            }
        }
    }
    out
}

/// Identity of one cluster of one subject.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterKey {
    pub subject_id: String,
    pub cluster_id: u32,
}

impl ClusterKey {
    pub fn new(subject_id: impl Into<String>, cluster_id: u32) -> Self {
        Self { subject_id: subject_id.into(), cluster_id }
    }
}

impl fmt::Display for ClusterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.subject_id, self.cluster_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Trk,
    Vtp,
}

impl FileFormat {
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "trk" => Some(Self::Trk),
            "vtp" => Some(Self::Vtp),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Trk => "trk",
            Self::Vtp => "vtp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterFile {
    pub path: PathBuf,
    pub format: FileFormat,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub metadata: BTreeMap<String, String>,
    pub cluster_index: BTreeMap<u32, ClusterFile>,
}

impl SubjectRecord {
    pub fn new(subject_id: impl Into<String>) -> Self {
        Self { subject_id: subject_id.into(), ..Default::default() }
    }
}

/// Closed interval of a field's cluster means across the cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn is_degenerate(&self) -> bool {
        self.min == self.max
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CohortError {
    #[error("duplicate subject id '{0}'")]
    DuplicateSubject(String),
}

/// The subjects under analysis plus the per-field ranges of the clusters
/// summarized so far.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Cohort {
    pub subjects: Vec<SubjectRecord>,
    pub scalar_ranges: BTreeMap<String, Range>,
}

impl Cohort {
    /// Subjects are kept sorted by id.
    pub fn new(mut subjects: Vec<SubjectRecord>) -> Result<Self, CohortError> {
        subjects.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
        if let Some(w) = subjects.windows(2).find(|w| w[0].subject_id == w[1].subject_id) {
            return Err(CohortError::DuplicateSubject(w[0].subject_id.clone()));
        }
        Ok(Self { subjects, scalar_ranges: BTreeMap::new() })
    }

    pub fn subject(&self, id: &str) -> Option<&SubjectRecord> {
        self.subjects
            .binary_search_by(|s| s.subject_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.subjects[i])
    }

    pub fn cluster_file(&self, key: &ClusterKey) -> Option<&ClusterFile> {
        self.subject(&key.subject_id)?.cluster_index.get(&key.cluster_id)
    }

    /// All keys in deterministic order (subject, then cluster id).
    pub fn keys(&self) -> Vec<ClusterKey> {
        self.subjects
            .iter()
            .flat_map(|s| {
                s.cluster_index
                    .keys()
                    .map(move |&c| ClusterKey::new(s.subject_id.clone(), c))
            })
            .collect()
    }

    pub fn cluster_count(&self) -> usize {
        self.subjects.iter().map(|s| s.cluster_index.len()).sum()
    }
}
