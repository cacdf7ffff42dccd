use alloc::vec;
use alloc::vec::Vec;

use crate::detection::ClusterMap;
use crate::imaging::{check_dims, RasterImage};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub class_id: usize,
    pub pixel_count: usize,
    /// `None` for an empty class.
    pub mse: Option<f64>,
    /// Position in ascending-score order among nonempty classes.
    pub rank: Option<usize>,
    pub selected: bool,
}

/// Ranks nonempty classes by ascending score, ties by class id.
pub(crate) fn assign_ranks(stats: &mut [ClassStats]) {
    let mut scored: Vec<(usize, f64)> = stats
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.mse.map(|m| (i, m)))
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(stats[a.0].class_id.cmp(&stats[b.0].class_id)));
    for s in stats.iter_mut() {
        s.rank = None;
    }
    for (rank, (i, _)) in scored.into_iter().enumerate() {
        stats[i].rank = Some(rank);
    }
}

/// `MSE(C) = 1 / (3|C|) · Σ_{p ∈ C} Σ_{c ∈ RGB} (I1(p)_c − I2(p)_c)²` for
/// every class of `cm`, ranked.
pub fn class_mse(
    reference: &RasterImage,
    aligned: &RasterImage,
    cm: &ClusterMap,
) -> Result<Vec<ClassStats>> {
    reference.same_dims(aligned)?;
    check_dims(reference.width(), reference.height(), cm.width, cm.height)?;
    let mut sums = vec![0.0; cm.n];
    let mut counts = vec![0usize; cm.n];
    let (a, b) = (reference.channels(), aligned.channels());
    for (i, &l) in cm.labels.iter().enumerate() {
        let mut s = 0.0;
        for c in 0..3 {
            let d = a[c][i] - b[c][i];
            s += d * d;
        }
        sums[l] += s;
        counts[l] += 1;
    }
    let mut stats: Vec<ClassStats> = (0..cm.n)
        .map(|k| ClassStats {
            class_id: k,
            pixel_count: counts[k],
            mse: (counts[k] > 0).then(|| sums[k] / (3 * counts[k]) as f64),
            rank: None,
            selected: false,
        })
        .collect();
    assign_ranks(&mut stats);
    Ok(stats)
}
