//! Density-based clustering (DBSCAN) over an arbitrary pairwise distance.
//!
//! Points are addressed by index so callers can cluster line segments, line
//! vectors or code snapshots with their own distance function. A point `q` is
//! a neighbour of `p` when `distance(p, q) <= eps`; the neighbourhood of `p`
//! includes `p` itself, so with `min_points = 1` every point is a core point
//! and no point is ever labelled noise.

/// Cluster label of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Cluster(usize),
    Noise,
}

impl Label {
    pub fn cluster(self) -> Option<usize> {
        match self {
            Label::Cluster(id) => Some(id),
            Label::Noise => None,
        }
    }
}

/// Runs DBSCAN on `n` points.
///
/// Cluster ids are assigned in order of the lowest point index they contain,
/// so the labelling is deterministic for a given distance function.
pub fn dbscan<F>(n: usize, eps: f64, min_points: usize, distance: F) -> Vec<Label>
where
    F: Fn(usize, usize) -> f64,
{
    let neighbours = |p: usize| -> Vec<usize> {
        (0..n)
            .filter(|&q| q == p || distance(p, q) <= eps)
            .collect()
    };

    let mut labels: Vec<Option<Label>> = vec![None; n];
    let mut next_cluster = 0;
    for p in 0..n {
        if labels[p].is_some() {
            continue;
        }
        let seeds = neighbours(p);
        if seeds.len() < min_points {
            labels[p] = Some(Label::Noise);
            continue;
        }
        let id = next_cluster;
        next_cluster += 1;
        labels[p] = Some(Label::Cluster(id));

        let mut queue = seeds;
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            match labels[q] {
                Some(Label::Cluster(_)) => continue,
                // border point previously marked as noise
                Some(Label::Noise) => {
                    labels[q] = Some(Label::Cluster(id));
                    continue;
                }
                None => labels[q] = Some(Label::Cluster(id)),
            }
            let reach = neighbours(q);
            if reach.len() >= min_points {
                queue.extend(reach.into_iter().filter(|&r| labels[r].is_none()));
            }
        }
    }
    labels
        .into_iter()
        .map(|l| l.unwrap_or(Label::Noise))
        .collect()
}

/// Groups point indices by cluster id. Noise points are dropped.
pub fn groups(labels: &[Label]) -> Vec<Vec<usize>> {
    let count = labels
        .iter()
        .filter_map(|l| l.cluster())
        .max()
        .map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); count];
    for (i, label) in labels.iter().enumerate() {
        if let Label::Cluster(id) = label {
            out[*id].push(i);
        }
    }
    out
}
