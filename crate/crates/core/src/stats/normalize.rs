use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ClusterKey, Range};
use crate::stats::{ClusterSummary, StatsError};

/// Value used for a degenerate range and for fields a cluster lacks.
pub const NEUTRAL: f64 = 0.5;

/// Which clusters define the normalization ranges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeScope {
    /// Every cluster of the cohort.
    #[default]
    Cohort,
    /// Only the clusters taking part in the current request.
    Selection,
}

/// Min-max scaling into [0, 1]; `x` is clamped into the range first.
pub fn minmax_normalize(x: f64, range: Range) -> Result<f64, StatsError> {
    let Range { min, max } = range;
    if min.is_nan() || max.is_nan() || min > max {
        return Err(StatsError::InvalidRange { min, max });
    }
    if max == min || x.is_nan() {
        return Ok(NEUTRAL);
    }
    let v = (x.clamp(min, max) - min) / (max - min);
    Ok(v.clamp(0.0, 1.0))
}

/// Per field, the min and max of cluster means over `summaries`.
pub fn cohort_ranges<'a, I>(summaries: I) -> Result<BTreeMap<String, Range>, StatsError>
where
    I: IntoIterator<Item = &'a ClusterSummary>,
{
    let mut ranges: BTreeMap<String, Range> = BTreeMap::new();
    let mut any = false;
    for s in summaries {
        any = true;
        for (name, stats) in s.per_scalar.iter().chain(&s.per_property) {
            ranges
                .entry(name.clone())
                .and_modify(|r| {
                    r.min = r.min.min(stats.mean);
                    r.max = r.max.max(stats.mean);
                })
                .or_insert(Range::new(stats.mean, stats.mean));
        }
    }
    if !any {
        return Err(StatsError::Empty);
    }
    Ok(ranges)
}

/// Cohort-normalized cluster means, one radar axis per field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub key: ClusterKey,
    pub axis_names: Vec<String>,
    pub values: Vec<f64>,
}

impl Fingerprint {
    pub fn value(&self, axis: &str) -> Option<f64> {
        self.axis_names
            .binary_search_by(|a| a.as_str().cmp(axis))
            .ok()
            .map(|i| self.values[i])
    }
}

/// Builds the fingerprint of `s` over `axes` (any order; output is sorted
/// and deduplicated). A field the cluster lacks scores [`NEUTRAL`].
pub fn fingerprint<S: AsRef<str>>(
    s: &ClusterSummary,
    ranges: &BTreeMap<String, Range>,
    axes: &[S],
) -> Result<Fingerprint, StatsError> {
    if axes.is_empty() {
        return Err(StatsError::NoAxes);
    }
    let mut axis_names: Vec<String> = axes.iter().map(|a| a.as_ref().to_string()).collect();
    axis_names.sort();
    axis_names.dedup();
    let values = axis_names
        .iter()
        .map(|axis| {
            let range = *ranges.get(axis).ok_or_else(|| StatsError::UnknownAxis(axis.clone()))?;
            match s.field(axis) {
                Some(stats) => minmax_normalize(stats.mean, range),
                None => Ok(NEUTRAL),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Fingerprint { key: s.key.clone(), axis_names, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::FieldStats;

    fn summary(subject: &str, fields: &[(&str, f64)]) -> ClusterSummary {
        ClusterSummary {
            key: ClusterKey::new(subject, 0),
            fiber_count: 1,
            point_count: 2,
            mean_fiber_length: 1.0,
            per_scalar: fields
                .iter()
                .map(|&(n, m)| {
                    (n.to_string(), FieldStats { mean: m, std: 0.0, min: m, max: m, count: 1, nan_count: 0 })
                })
                .collect(),
            per_property: BTreeMap::new(),
            warnings: vec![],
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(minmax_normalize(5.0, Range::new(0.0, 10.0)), Ok(0.5));
        assert_eq!(minmax_normalize(0.05, Range::new(0.0, 0.05)), Ok(1.0));
        assert_eq!(minmax_normalize(7.0, Range::new(7.0, 7.0)), Ok(0.5));
        assert_eq!(minmax_normalize(-3.0, Range::new(0.0, 10.0)), Ok(0.0));
        assert_eq!(minmax_normalize(30.0, Range::new(0.0, 10.0)), Ok(1.0));
        assert!(matches!(minmax_normalize(1.0, Range::new(2.0, 1.0)), Err(StatsError::InvalidRange { .. })));
    }

    #[test]
    fn ranges_use_cluster_means() {
        let s = [summary("a", &[("fa1", 2.0)]), summary("b", &[("fa1", 8.0)]), summary("c", &[("fa1", 5.0)])];
        assert_eq!(cohort_ranges(&s).unwrap()["fa1"], Range::new(2.0, 8.0));
        assert_eq!(cohort_ranges(&s[..1]).unwrap()["fa1"], Range::new(2.0, 2.0));
        assert_eq!(cohort_ranges(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn partial_fields_and_neutral_value() {
        let s = [summary("a", &[("x", 1.0), ("y", 4.0)]), summary("b", &[("x", 3.0)])];
        let ranges = cohort_ranges(&s).unwrap();
        assert_eq!(ranges["y"], Range::new(4.0, 4.0));
        let fp = fingerprint(&s[1], &ranges, &["y", "x"]).unwrap();
        assert_eq!(fp.axis_names, vec!["x", "y"]);
        assert_eq!(fp.values, vec![1.0, 0.5]);
    }

    #[test]
    fn fingerprint_errors_and_ordering() {
        let s = [summary("a", &[("a", 0.0), ("b", 1.0)]), summary("b", &[("a", 2.0), ("b", 3.0)])];
        let ranges = cohort_ranges(&s).unwrap();
        let fp = fingerprint(&s[1], &ranges, &["a"]).unwrap();
        assert_eq!(fp.values, vec![1.0]);
        let fp = fingerprint(&s[0], &ranges, &["b", "a"]).unwrap();
        assert_eq!(fp.axis_names, vec!["a", "b"]);
        assert_eq!(fp.value("b"), Some(0.0));
        assert_eq!(fingerprint(&s[0], &ranges, &["zzz"]), Err(StatsError::UnknownAxis("zzz".into())));
        assert_eq!(fingerprint::<&str>(&s[0], &ranges, &[]), Err(StatsError::NoAxes));
    }
}
