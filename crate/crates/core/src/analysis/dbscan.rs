use alloc::vec;
use alloc::vec::Vec;

/// Every score is a core point, so there is no noise.
pub const DEFAULT_MIN_PTS: usize = 1;

/// DBSCAN on the real line. Two values are neighbours when
/// `|a - b| <= eps`; a value is a core point when it has at least `min_pts`
/// neighbours (itself included). Clusters are numbered in order of
/// discovery, scanning the input in order; `None` marks noise.
pub fn dbscan_1d(values: &[f64], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut pos = vec![0; n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    // neighbourhoods are contiguous runs of the sorted order
    let mut lo = vec![0; n];
    let mut hi = vec![0; n];
    let mut l = 0;
    let mut h = 0;
    for p in 0..n {
        let v = values[order[p]];
        while v - values[order[l]] > eps {
            l += 1;
        }
        if h < p {
            h = p;
        }
        while h + 1 < n && values[order[h + 1]] - v <= eps {
            h += 1;
        }
        lo[p] = l;
        hi[p] = h;
    }
    let is_core = |p: usize| hi[p] - lo[p] + 1 >= min_pts;

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut next = 0;
    for start in 0..n {
        let sp = pos[start];
        if visited[sp] {
            continue;
        }
        visited[sp] = true;
        if !is_core(sp) {
            continue;
        }
        let id = next;
        next += 1;
        labels[start] = Some(id);
        let mut stack = vec![sp];
        while let Some(p) = stack.pop() {
            for q in lo[p]..=hi[p] {
                let qi = order[q];
                if labels[qi].is_none() {
                    labels[qi] = Some(id);
                }
                if !visited[q] {
                    visited[q] = true;
                    if is_core(q) {
                        stack.push(q);
                    }
                }
            }
        }
    }
    labels
}
