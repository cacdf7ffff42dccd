//! Class scoring and change-class selection.
//!
//! Classes are scored by the mean squared RGB difference of their pixels,
//! ranked from lowest to highest score, and the scores are clustered with a
//! one-dimensional DBSCAN. The DBSCAN cluster holding the lowest score is
//! treated as "no change"; every other class is reported.

mod dbscan;
mod heatmap;
mod mask;
mod mse;

pub use dbscan::{dbscan_1d, DEFAULT_MIN_PTS};
pub use heatmap::{hsv_to_rgb, rank_color, rank_hue, render_heatmap};
pub use mask::{binary_mask, overlay, ChangeMask};
pub use mse::{class_mse, ClassStats};

use alloc::vec::Vec;

/// DBSCAN radius for optical image pairs.
pub const EPS_OPTICAL: f64 = 0.02;
/// DBSCAN radius for radiographic image pairs.
pub const EPS_RADIOGRAPHIC: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Input stats with `selected` filled in.
    pub stats: Vec<ClassStats>,
    /// Selected class ids, ascending.
    pub selected: Vec<usize>,
    /// Class ids in the lowest-score DBSCAN cluster, ascending.
    pub discarded: Vec<usize>,
    /// Number of DBSCAN clusters over the nonempty classes (noise excluded).
    pub cluster_count: usize,
}

/// Runs DBSCAN (`min_pts = 1`) over the nonempty classes' scores and
/// selects every class outside the cluster containing the minimum score.
pub fn select_change_classes(stats: &[ClassStats], eps: f64) -> Selection {
    select_change_classes_with(stats, eps, DEFAULT_MIN_PTS)
}

pub fn select_change_classes_with(stats: &[ClassStats], eps: f64, min_pts: usize) -> Selection {
    let scored: Vec<(usize, f64)> = stats
        .iter()
        .filter_map(|s| s.mse.map(|m| (s.class_id, m)))
        .collect();
    let mut out = stats.to_vec();
    out.iter_mut().for_each(|s| s.selected = false);
    if scored.is_empty() {
        return Selection {
            stats: out,
            selected: Vec::new(),
            discarded: Vec::new(),
            cluster_count: 0,
        };
    }
    let values: Vec<f64> = scored.iter().map(|&(_, m)| m).collect();
    let labels = dbscan_1d(&values, eps, min_pts);
    let cluster_count = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut lowest = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[lowest] {
            lowest = i;
        }
    }
    let low_label = labels[lowest];
    let mut selected = Vec::new();
    let mut discarded = Vec::new();
    for (i, &(class_id, _)) in scored.iter().enumerate() {
        let same = match low_label {
            Some(l) => labels[i] == Some(l),
            None => i == lowest,
        };
        if same {
            discarded.push(class_id);
        } else {
            selected.push(class_id);
        }
    }
    selected.sort_unstable();
    discarded.sort_unstable();
    for s in out.iter_mut() {
        s.selected = selected.binary_search(&s.class_id).is_ok();
    }
    Selection {
        stats: out,
        selected,
        discarded,
        cluster_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn stats_from(scores: &[Option<f64>]) -> Vec<ClassStats> {
        let mut v: Vec<ClassStats> = scores
            .iter()
            .enumerate()
            .map(|(i, &m)| ClassStats {
                class_id: i,
                pixel_count: if m.is_some() { 10 } else { 0 },
                mse: m,
                rank: None,
                selected: false,
            })
            .collect();
        mse::assign_ranks(&mut v);
        v
    }

    #[test]
    fn single_cluster_selects_nothing() {
        let s = select_change_classes(&stats_from(&[Some(0.0), Some(1e-6), Some(2e-6)]), 0.02);
        assert!(s.selected.is_empty());
        assert_eq!(s.discarded, vec![0, 1, 2]);
        assert_eq!(s.cluster_count, 1);
    }

    #[test]
    fn gap_above_eps_selects_high_class() {
        let s = select_change_classes(
            &stats_from(&[Some(0.002), Some(0.25), Some(0.001), Some(0.003)]),
            0.02,
        );
        assert_eq!(s.selected, vec![1]);
        assert!(s.stats[1].selected && !s.stats[0].selected);
    }

    #[test]
    fn chained_low_scores_discarded_together() {
        let s = select_change_classes(
            &stats_from(&[Some(0.30), Some(0.001), Some(0.015), Some(0.31), Some(0.030)]),
            0.02,
        );
        assert_eq!(s.discarded, vec![1, 2, 4]);
        assert_eq!(s.selected, vec![0, 3]);
    }

    #[test]
    fn empty_classes_never_selected() {
        let s = select_change_classes(&stats_from(&[Some(0.0), None, Some(0.5)]), 0.02);
        assert_eq!(s.selected, vec![2]);
        assert!(!s.stats[1].selected);
    }

    #[test]
    fn discarded_set_shrinks_with_eps() {
        let scores: Vec<Option<f64>> = [0.0, 0.01, 0.025, 0.04, 0.07, 0.2, 0.21, 0.5]
            .iter()
            .map(|&v| Some(v))
            .collect();
        let stats = stats_from(&scores);
        let mut prev: Option<Vec<usize>> = None;
        let mut prev_clusters = 0;
        for eps in [0.5, 0.3, 0.1, 0.05, 0.02, 0.012, 0.005, 0.001] {
            let s = select_change_classes(&stats, eps);
            if let Some(p) = &prev {
                assert!(s.discarded.iter().all(|c| p.contains(c)));
                assert!(s.cluster_count >= prev_clusters);
            }
            prev = Some(s.discarded.clone());
            prev_clusters = s.cluster_count;
        }
    }
}
