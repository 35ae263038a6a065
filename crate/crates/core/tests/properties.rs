mod common;

use std::collections::BTreeSet;

use fiberscope::io::{parse_trk, parse_vtp, write_trk, write_vtp, VtpEncoding};
use fiberscope::json::format_f64;
use fiberscope::model::{ClusterKey, Range};
use fiberscope::projection::{
    brush_select, classical_mds, distance_matrix, layout_rms, pairwise_distance, pivot_mds, procrustes_error, Rect,
};
use fiberscope::stats::{builtin_colormaps, cluster_summary, cohort_ranges, fingerprint, map_color, minmax_normalize};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn same_values(a: &fiberscope::ClusterGeometry, b: &fiberscope::ClusterGeometry) -> bool {
    a.scalar_names == b.scalar_names
        && a.property_names == b.property_names
        && a.fibers.len() == b.fibers.len()
        && a.fibers.iter().zip(&b.fibers).all(|(f, g)| {
            f.points.iter().flatten().map(|v| v.to_bits()).eq(g.points.iter().flatten().map(|v| v.to_bits()))
                && f.scalars.iter().flatten().map(|v| v.to_bits()).eq(g.scalars.iter().flatten().map(|v| v.to_bits()))
        })
        && a.properties.iter().flatten().map(|v| v.to_bits()).eq(b.properties.iter().flatten().map(|v| v.to_bits()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trk_write_then_parse_is_identity(seed in any::<u64>()) {
        let g = random_cluster(&mut rng(seed), 10, 10);
        let bytes = write_trk(&g).unwrap();
        let back = parse_trk(&bytes).unwrap();
        prop_assert!(same_values(&g, &back));
        prop_assert_eq!(write_trk(&back).unwrap(), bytes);
    }

    #[test]
    fn trk_parse_never_panics_on_truncation(seed in any::<u64>(), cut in 0usize..4096) {
        let bytes = write_trk(&random_cluster(&mut rng(seed), 4, 3)).unwrap();
        let cut = cut.min(bytes.len());
        let _ = parse_trk(&bytes[..cut]);
    }

    #[test]
    fn vtp_write_then_parse_is_identity(seed in any::<u64>(), base64 in any::<bool>()) {
        let g = random_cluster(&mut rng(seed), 10, 10);
        let encoding = if base64 { VtpEncoding::Base64 } else { VtpEncoding::Ascii };
        let back = parse_vtp(write_vtp(&g, encoding).as_bytes()).unwrap();
        prop_assert!(same_values(&g, &back));
    }

    #[test]
    fn summary_matches_two_pass_oracle(seed in any::<u64>()) {
        let g = random_stats_cluster(&mut rng(seed));
        let s = cluster_summary(&g, ClusterKey::new("S", 0)).unwrap();
        let o = oracle_summary(&g);
        prop_assert!(rel_close(s.mean_fiber_length, o.mean_fiber_length, 1e-12));
        for (name, expected) in &o.fields {
            match (s.field(name), expected) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    prop_assert_eq!((a.count, a.nan_count, a.min, a.max), (b.count, b.nan_count, b.min, b.max));
                    prop_assert!(rel_close(a.mean, b.mean, 1e-12), "{} mean {} vs {}", name, a.mean, b.mean);
                    prop_assert!(rel_close(a.std, b.std, 1e-12), "{} std {} vs {}", name, a.std, b.std);
                    prop_assert!(a.min <= a.mean && a.mean <= a.max);
                }
                _ => prop_assert!(false, "{} present in only one", name),
            }
        }
    }

    #[test]
    fn normalize_is_bounded_and_monotone(
        lo in -1e6f64..1e6, width in 0f64..1e6, a in -2e6f64..2e6, b in -2e6f64..2e6,
    ) {
        let r = Range::new(lo, lo + width);
        let (na, nb) = (minmax_normalize(a, r).unwrap(), minmax_normalize(b, r).unwrap());
        prop_assert!((0.0..=1.0).contains(&na));
        if width == 0.0 {
            prop_assert_eq!(na, 0.5);
        } else if a <= b {
            prop_assert!(na <= nb);
        }
    }

    #[test]
    fn cohort_fingerprints_span_unit_interval(seed in any::<u64>(), n in 2usize..12) {
        let mut r = rng(seed);
        let summaries: Vec<_> = (0..n)
            .map(|i| cluster_summary(&random_stats_cluster(&mut r), ClusterKey::new("S", i as u32)).unwrap())
            .collect();
        let ranges = cohort_ranges(&summaries).unwrap();
        let axes: Vec<&str> = ranges.keys().map(String::as_str).collect();
        for axis in &axes {
            let values: Vec<f64> = summaries
                .iter()
                .map(|s| fingerprint(s, &ranges, &[*axis]).unwrap().values[0])
                .collect();
            prop_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
            if ranges[*axis].is_degenerate() {
                prop_assert!(values.iter().all(|&v| v == 0.5));
            } else if values.len() == summaries.len() && summaries.iter().all(|s| s.field(axis).is_some()) {
                prop_assert!(values.contains(&0.0) && values.contains(&1.0));
            }
        }
    }

    #[test]
    fn classical_mds_recovers_planar_layouts(seed in any::<u64>(), n in 3usize..=30) {
        let x = random_planar(&mut rng(seed), n);
        let y = classical_mds(&distance_matrix(&x), 2).unwrap();
        prop_assert!(procrustes_error(&x, &y).unwrap() <= 1e-8 * layout_rms(&x));
    }

    #[test]
    fn procrustes_ignores_similarity_transforms(seed in any::<u64>(), n in 2usize..20, angle in 0f64..6.3, scale in 0.1f64..10.0) {
        let x = random_planar(&mut rng(seed), n);
        let rot = DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()]);
        let mut y = &x * rot.transpose() * scale;
        for mut row in y.row_iter_mut() {
            row[0] += 3.0;
            row[1] -= 7.0;
        }
        prop_assert!(procrustes_error(&x, &y).unwrap() <= 1e-9 * layout_rms(&x).max(1e-300));
    }

    #[test]
    fn pivot_mds_with_all_pivots_is_classical(seed in any::<u64>(), n in 2usize..40) {
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let (fps, metric) = fingerprints(&rows, &GRID_AXES);
        let layout = pivot_mds(&fps, &metric, n, 2, seed).unwrap();
        let points = DMatrix::from_fn(n, 4, |i, j| rows[i][j]);
        let reference = classical_mds(&distance_matrix(&points), 2).unwrap();
        let rms = layout_rms(&reference);
        prop_assert!(procrustes_error(&reference, &layout.coords).unwrap() <= 1e-6 * rms.max(1e-12));
    }

    #[test]
    fn pivot_mds_is_deterministic(seed in any::<u64>(), n in 1usize..60, k in 1usize..60) {
        let k = k.min(n);
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let (fps, metric) = fingerprints(&rows, &GRID_AXES);
        let a = pivot_mds(&fps, &metric, k, 2, seed).unwrap();
        let b = pivot_mds(&fps, &metric, k, 2, seed).unwrap();
        prop_assert_eq!(&a.pivots, &b.pivots);
        prop_assert!(a.coords.iter().zip(b.coords.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert_eq!(a.pivots.iter().collect::<BTreeSet<_>>().len(), k);
        prop_assert!(a.coords.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn duplicate_items_share_coordinates(seed in any::<u64>(), n in 2usize..30) {
        let mut r = rng(seed);
        let mut rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        rows.push(rows[0].clone());
        let (fps, metric) = fingerprints(&rows, &GRID_AXES);
        let layout = pivot_mds(&fps, &metric, (n / 2).max(1), 2, seed).unwrap();
        let last = rows.len() - 1;
        let scale = layout_rms(&layout.coords).max(1.0);
        prop_assert!((layout.x(0) - layout.x(last)).abs() <= 1e-9 * scale);
        prop_assert!((layout.y(0) - layout.y(last)).abs() <= 1e-9 * scale);
    }

    #[test]
    fn distances_form_a_metric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let (fps, metric) = fingerprints(&rows, &GRID_AXES);
        let d = |i: usize, j: usize| pairwise_distance(&fps[i], &fps[j], &metric).unwrap();
        prop_assert_eq!(d(0, 0), 0.0);
        prop_assert_eq!(d(0, 1), d(1, 0));
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-15);
    }

    #[test]
    fn brushing_contract(seed in any::<u64>(), grow in (0f64..0.5, 0f64..0.5, 0f64..0.5, 0f64..0.5)) {
        let mut r = rng(seed);
        let layout = random_layout(&mut r);
        let (x0, x1): (f64, f64) = (r.random_range(-1.2..1.2), r.random_range(-1.2..1.2));
        let (y0, y1): (f64, f64) = (r.random_range(-1.2..1.2), r.random_range(-1.2..1.2));
        let rect = Rect::new(x0.min(x1), y0.min(y1), x0.max(x1), y0.max(y1)).unwrap();
        let sel = brush_select(&layout, rect).unwrap();
        prop_assert!(sel.selected.is_subset(&sel.highlighted));
        let ids: BTreeSet<u32> = sel.selected.iter().map(|k| k.cluster_id).collect();
        for k in &layout.keys {
            prop_assert_eq!(sel.highlighted.contains(k), ids.contains(&k.cluster_id));
        }
        let bigger = Rect::new(rect.xmin - grow.0, rect.ymin - grow.1, rect.xmax + grow.2, rect.ymax + grow.3).unwrap();
        let sel2 = brush_select(&layout, bigger).unwrap();
        prop_assert!(sel.selected.is_subset(&sel2.selected));
        prop_assert!(sel.highlighted.is_subset(&sel2.highlighted));
    }

    #[test]
    fn formatted_floats_round_trip(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        let text = format_f64(v);
        prop_assert_eq!(text.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn colormap_endpoints_and_clamping(v in -2f64..3.0, idx in 0usize..12) {
        let maps = builtin_colormaps();
        let cmap = &maps[idx % maps.len()];
        prop_assert_eq!(map_color(0.0, cmap), cmap.stops.first().unwrap().1);
        prop_assert_eq!(map_color(1.0, cmap), cmap.stops.last().unwrap().1);
        prop_assert_eq!(map_color(v, cmap), map_color(v.clamp(0.0, 1.0), cmap));
    }
}
