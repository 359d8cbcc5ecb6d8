//! HDBSCAN: mutual-reachability distances, minimum spanning tree,
//! single-linkage hierarchy, condensed tree, excess-of-mass selection.

use super::{check_finite, euclidean, Algorithm, AlgorithmParams, ClusterError, ClusteringResult, Labels, NOISE};

/// Lambda cap standing in for 1/0 so zero-distance merges stay finite.
const LAMBDA_MAX: f64 = 1e15;

fn lambda_of(distance: f64) -> f64 {
    if distance <= 1.0 / LAMBDA_MAX {
        LAMBDA_MAX
    } else {
        1.0 / distance
    }
}

/// HDBSCAN with `min_samples` defaulting to `min_cluster_size`.
pub fn hdbscan(
    points: &[Vec<f64>],
    min_cluster_size: usize,
) -> Result<ClusteringResult, ClusterError> {
    hdbscan_with(points, min_cluster_size, min_cluster_size)
}

/// HDBSCAN with an explicit `min_samples`.
///
/// The core distance of a point is the distance to its `min_samples`-th
/// nearest neighbor counting the point itself, so `min_samples = 1` gives
/// core distance 0. Entirely coincident inputs collapse to one cluster.
pub fn hdbscan_with(
    points: &[Vec<f64>],
    min_cluster_size: usize,
    min_samples: usize,
) -> Result<ClusteringResult, ClusterError> {
    let n = points.len();
    if min_cluster_size < 2 {
        return Err(ClusterError::BadParam(
            "min_cluster_size must be at least 2".into(),
        ));
    }
    if n < min_cluster_size {
        return Err(ClusterError::TooFewPoints {
            n,
            needed: min_cluster_size,
        });
    }
    if min_samples == 0 || min_samples > n {
        return Err(ClusterError::BadParam(format!(
            "min_samples must be in 1..={n}, got {min_samples}"
        )));
    }
    check_finite(points)?;

    let params = AlgorithmParams::Hdbscan {
        min_cluster_size,
        min_samples,
    };
    let finish = |labels: Vec<i32>| ClusteringResult {
        algorithm: Algorithm::Hdbscan,
        params: params.clone(),
        labels: Labels(labels),
        silhouette: None,
        objective: None,
    };

    // Core distances under the self-inclusive convention.
    let mut core = vec![0.0f64; n];
    for i in 0..n {
        if min_samples == 1 {
            continue;
        }
        let mut dists: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| euclidean(&points[i], &points[j]))
            .collect();
        dists.sort_by(f64::total_cmp);
        core[i] = dists[min_samples - 2];
    }

    let mrd = |a: usize, b: usize| {
        euclidean(&points[a], &points[b])
            .max(core[a])
            .max(core[b])
    };

    // Prim's MST over the implicit complete mutual-reachability graph.
    let mut in_tree = vec![false; n];
    let mut best_dist = vec![f64::INFINITY; n];
    let mut best_from = vec![0usize; n];
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n - 1);
    let mut current = 0usize;
    for _ in 1..n {
        in_tree[current] = true;
        let mut next = usize::MAX;
        let mut next_dist = f64::INFINITY;
        for i in 0..n {
            if in_tree[i] {
                continue;
            }
            let d = mrd(current, i);
            if d < best_dist[i] {
                best_dist[i] = d;
                best_from[i] = current;
            }
            if best_dist[i] < next_dist {
                next_dist = best_dist[i];
                next = i;
            }
        }
        edges.push((next_dist, best_from[next], next));
        current = next;
    }

    // Fully degenerate input: every pairwise reachability is zero.
    if edges.iter().all(|&(d, _, _)| d <= 0.0) {
        return Ok(finish(vec![0; n]));
    }

    edges.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    // Single-linkage hierarchy. Nodes 0..n are points; node n+i is the
    // cluster created by merge i. `merges[i] = (left, right, distance, size)`.
    let mut parent: Vec<usize> = (0..(2 * n - 1)).collect();
    let mut node_of_root: Vec<usize> = (0..(2 * n - 1)).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut sizes = vec![1usize; 2 * n - 1];
    let mut merges: Vec<(usize, usize, f64, usize)> = Vec::with_capacity(n - 1);
    for (i, &(d, a, b)) in edges.iter().enumerate() {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        let left = node_of_root[ra];
        let right = node_of_root[rb];
        let size = sizes[left] + sizes[right];
        let node = n + i;
        sizes[node] = size;
        parent[ra] = rb;
        node_of_root[find(&mut parent, rb)] = node;
        merges.push((left, right, d, size));
    }

    // Condense the hierarchy at min_cluster_size. Condensed cluster 0 is the
    // root. Each cluster records the lambda at which every point leaves it
    // and which child clusters it splits into.
    struct Condensed {
        birth_lambda: f64,
        child_clusters: Vec<usize>,
        /// (point, lambda at which the point leaves this cluster)
        points: Vec<(usize, f64)>,
    }
    let node_size = |node: usize| -> usize { sizes[node] };
    let leaf_points = |node: usize, merges: &[(usize, usize, f64, usize)]| -> Vec<usize> {
        let mut stack = vec![node];
        let mut out = Vec::new();
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let (l, r, _, _) = merges[x - n];
                stack.push(l);
                stack.push(r);
            }
        }
        out
    };

    let mut clusters: Vec<Condensed> = vec![Condensed {
        birth_lambda: 0.0,
        child_clusters: Vec::new(),
        points: Vec::new(),
    }];
    // Walk pairs of (hierarchy node, condensed cluster id) top-down.
    let root_node = 2 * n - 2;
    let mut stack: Vec<(usize, usize)> = vec![(root_node, 0)];
    while let Some((node, cid)) = stack.pop() {
        if node < n {
            // A bare point as the surviving side: it leaves when it splits
            // off, which its parent already recorded.
            continue;
        }
        let (left, right, dist, _) = merges[node - n];
        let lambda = lambda_of(dist);
        let left_big = node_size(left) >= min_cluster_size;
        let right_big = node_size(right) >= min_cluster_size;
        match (left_big, right_big) {
            (true, true) => {
                for child in [left, right] {
                    let child_id = clusters.len();
                    clusters.push(Condensed {
                        birth_lambda: lambda,
                        child_clusters: Vec::new(),
                        points: Vec::new(),
                    });
                    clusters[cid].child_clusters.push(child_id);
                    stack.push((child, child_id));
                }
            }
            (true, false) | (false, true) => {
                let (big, small) = if left_big { (left, right) } else { (right, left) };
                for p in leaf_points(small, &merges) {
                    clusters[cid].points.push((p, lambda));
                }
                stack.push((big, cid));
            }
            (false, false) => {
                for child in [left, right] {
                    for p in leaf_points(child, &merges) {
                        clusters[cid].points.push((p, lambda));
                    }
                }
            }
        }
    }

    // Stability: sum over everything that leaves the cluster of
    // (leave_lambda - birth_lambda) * size.
    let mut cluster_sizes = vec![0usize; clusters.len()];
    for id in (0..clusters.len()).rev() {
        let mut size = clusters[id].points.len();
        for &child in &clusters[id].child_clusters {
            size += cluster_sizes[child];
        }
        cluster_sizes[id] = size;
    }
    let stability: Vec<f64> = (0..clusters.len())
        .map(|id| {
            let birth = clusters[id].birth_lambda;
            let from_points: f64 = clusters[id]
                .points
                .iter()
                .map(|&(_, lambda)| lambda - birth)
                .sum();
            let from_children: f64 = clusters[id]
                .child_clusters
                .iter()
                .map(|&child| {
                    (clusters[child].birth_lambda - birth) * cluster_sizes[child] as f64
                })
                .sum();
            from_points + from_children
        })
        .collect();

    // Excess-of-mass selection, children before parents, root excluded. A
    // cluster keeps itself unless its children's combined stability strictly
    // exceeds its own.
    let mut selected = vec![false; clusters.len()];
    let mut sigma_hat = stability.clone();
    for id in (1..clusters.len()).rev() {
        let subtree: f64 = clusters[id]
            .child_clusters
            .iter()
            .map(|&c| sigma_hat[c])
            .sum();
        if subtree > stability[id] {
            sigma_hat[id] = subtree;
        } else {
            sigma_hat[id] = stability[id];
            selected[id] = true;
            // A winning cluster absorbs any previously selected descendants.
            let mut walk: Vec<usize> = clusters[id].child_clusters.clone();
            while let Some(c) = walk.pop() {
                selected[c] = false;
                walk.extend(clusters[c].child_clusters.iter().copied());
            }
        }
    }

    // Label the member points of each selected cluster. A point joins the
    // cluster only if it outlived the cluster's birth: its fall-out lambda
    // must strictly exceed the selected cluster's birth lambda, so splinters
    // shed at the very split that created the cluster stay noise. Clusters
    // are ordered by their smallest member so ids are stable.
    let mut member_sets: Vec<(usize, Vec<usize>)> = Vec::new();
    for id in 1..clusters.len() {
        if !selected[id] {
            continue;
        }
        let birth = clusters[id].birth_lambda;
        let mut members = Vec::new();
        let mut walk = vec![id];
        while let Some(c) = walk.pop() {
            members.extend(
                clusters[c]
                    .points
                    .iter()
                    .filter(|&&(_, lambda)| lambda > birth)
                    .map(|&(p, _)| p),
            );
            walk.extend(clusters[c].child_clusters.iter().copied());
        }
        if members.is_empty() {
            continue;
        }
        members.sort_unstable();
        member_sets.push((members[0], members));
    }
    member_sets.sort_by_key(|(first, _)| *first);

    let mut labels = vec![NOISE; n];
    for (cluster_id, (_, members)) in member_sets.iter().enumerate() {
        for &p in members {
            labels[p] = cluster_id as i32;
        }
    }
    Ok(finish(labels))
}
