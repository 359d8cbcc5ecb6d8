//! Independent brute-force oracles for the clustering algorithms.
//!
//! Everything here recomputes results straight from definitions: exhaustive
//! searches, explicit member-set bookkeeping, and recursive tree walks. None
//! of it shares code with the implementations it checks.

use rand::Rng;

use rand_chacha::ChaCha8Rng;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Random points in [0, scale)^d.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random::<f64>() * scale).collect())
        .collect()
}

/// Clustered points: a few tight groups plus sprinkled background noise.
pub fn clumpy_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let n_centers = rng.random_range(2..=3usize);
    let centers: Vec<Vec<f64>> = (0..n_centers)
        .map(|c| (0..d).map(|_| c as f64 * 30.0 + rng.random::<f64>()).collect())
        .collect();
    (0..n)
        .map(|i| {
            if i % 7 == 6 {
                (0..d).map(|_| rng.random::<f64>() * 90.0).collect()
            } else {
                let c = &centers[i % n_centers];
                c.iter().map(|v| v + rng.random::<f64>() * 1.5).collect()
            }
        })
        .collect()
}

/// Minimum inertia over every assignment of n points to at most k clusters.
pub fn exhaustive_kmeans_inertia(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let mut best = f64::INFINITY;
    let mut assignment = vec![0usize; n];
    loop {
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(&points[i]) {
                *s += v;
            }
        }
        let mut inertia = 0.0;
        for (i, &c) in assignment.iter().enumerate() {
            for (j, v) in points[i].iter().enumerate() {
                let mean = sums[c][j] / counts[c] as f64;
                inertia += (v - mean) * (v - mean);
            }
        }
        best = best.min(inertia);

        // Next assignment in base-k counting order.
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            assignment[pos] += 1;
            if assignment[pos] < k {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Exhaustive k-medoids: minimal total cost and the lexicographically
/// smallest medoid subset achieving it.
pub fn exhaustive_kmedoids(points: &[Vec<f64>], k: usize) -> (Vec<usize>, f64) {
    let n = points.len();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| euclid(&points[i], &points[j])).collect())
        .collect();
    let cost = |medoids: &[usize]| -> f64 {
        (0..n)
            .map(|i| {
                medoids
                    .iter()
                    .map(|&m| dist[i][m])
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    };
    let mut subset: Vec<usize> = (0..k).collect();
    let mut best_set = subset.clone();
    let mut best_cost = cost(&subset);
    loop {
        // Advance to the next k-combination.
        let mut i = k;
        let mut done = true;
        while i > 0 {
            i -= 1;
            if subset[i] != i + n - k {
                subset[i] += 1;
                for j in (i + 1)..k {
                    subset[j] = subset[j - 1] + 1;
                }
                done = false;
                break;
            }
        }
        if done {
            return (best_set, best_cost);
        }
        let c = cost(&subset);
        if c < best_cost - 1e-12 {
            best_cost = c;
            best_set = subset.clone();
        }
    }
}

/// DBSCAN from the definition: core points via neighborhood counts,
/// components of the core graph in ascending-min-index order, borders
/// attached to the earliest component owning a core point within eps.
pub fn brute_dbscan(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<i32> {
    let n = points.len();
    let within = |i: usize, j: usize| euclid(&points[i], &points[j]) <= eps;
    let neighborhood = |i: usize| -> Vec<usize> { (0..n).filter(|&j| within(i, j)).collect() };
    let core: Vec<bool> = (0..n).map(|i| neighborhood(i).len() >= min_pts).collect();

    // Components of the core-core adjacency graph.
    let mut component = vec![usize::MAX; n];
    let mut n_components = 0usize;
    for start in 0..n {
        if !core[start] || component[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        component[start] = n_components;
        while let Some(p) = stack.pop() {
            for q in 0..n {
                if core[q] && component[q] == usize::MAX && within(p, q) {
                    component[q] = n_components;
                    stack.push(q);
                }
            }
        }
        n_components += 1;
    }

    let mut labels = vec![-1i32; n];
    for i in 0..n {
        if core[i] {
            labels[i] = component[i] as i32;
        } else {
            // Earliest-discovered component with a core point within eps.
            let owner = (0..n_components).find(|&c| {
                (0..n).any(|q| core[q] && component[q] == c && within(i, q))
            });
            if let Some(c) = owner {
                labels[i] = c as i32;
            }
        }
    }
    labels
}

type MergeCandidate = (f64, (usize, usize), (usize, usize));

/// Ward agglomeration recomputed from raw points at every step: explicit
/// member lists, merge cost |A||B|/(|A|+|B|) * ||mean_A - mean_B||^2, ties to
/// the smallest (min-member, min-member) pair.
pub fn brute_ward(points: &[Vec<f64>], k: usize) -> Vec<i32> {
    let d = points[0].len();
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    let mean = |members: &[usize]| -> Vec<f64> {
        let mut m = vec![0.0; d];
        for &i in members {
            for (x, v) in m.iter_mut().zip(&points[i]) {
                *x += v;
            }
        }
        for x in m.iter_mut() {
            *x /= members.len() as f64;
        }
        m
    };
    while clusters.len() > k {
        let mut best: Option<MergeCandidate> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let (ma, mb) = (mean(&clusters[a]), mean(&clusters[b]));
                let gap: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y) * (x - y)).sum();
                let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
                let delta = na * nb / (na + nb) * gap;
                let ra = *clusters[a].iter().min().unwrap();
                let rb = *clusters[b].iter().min().unwrap();
                let reps = if ra < rb { (ra, rb) } else { (rb, ra) };
                let take = match &best {
                    None => true,
                    Some((bd, breps, _)) => {
                        let tol = 1e-12 * bd.abs().max(1.0);
                        delta < bd - tol || ((delta - bd).abs() <= tol && reps < *breps)
                    }
                };
                if take {
                    best = Some((delta, reps, (a, b)));
                }
            }
        }
        let (a, b) = best.expect("at least two clusters").2;
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
    }
    clusters.sort_by_key(|members| *members.iter().min().unwrap());
    let mut labels = vec![0i32; points.len()];
    for (id, members) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = id as i32;
        }
    }
    labels
}

// ---------------------------------------------------------------------------
// Brute-force HDBSCAN: Kruskal MST, explicit dendrogram, recursive
// excess-of-mass walk.
// ---------------------------------------------------------------------------

enum Dendro {
    Leaf(usize),
    Node {
        left: Box<Dendro>,
        right: Box<Dendro>,
        dist: f64,
        size: usize,
    },
}

impl Dendro {
    fn size(&self) -> usize {
        match self {
            Dendro::Leaf(_) => 1,
            Dendro::Node { size, .. } => *size,
        }
    }

    fn points(&self, out: &mut Vec<usize>) {
        match self {
            Dendro::Leaf(p) => out.push(*p),
            Dendro::Node { left, right, .. } => {
                left.points(out);
                right.points(out);
            }
        }
    }
}

/// (point, lambda at which it left its condensed parent) entries.
type Fallout = Vec<(usize, f64)>;

fn oracle_lambda(dist: f64) -> f64 {
    if dist <= 1e-15 {
        1e15
    } else {
        1.0 / dist
    }
}

/// Walks the spine of one condensed cluster: sheds below-threshold splinters
/// as (point, lambda) fallout until the cluster either splits into two real
/// subclusters or dissolves entirely.
fn condensed_split(
    node: &Dendro,
    mcs: usize,
) -> (Fallout, Vec<(&Dendro, f64)>) {
    let mut fallout: Fallout = Vec::new();
    let mut children: Vec<(&Dendro, f64)> = Vec::new();
    let mut current = node;
    loop {
        match current {
            Dendro::Leaf(_) => break,
            Dendro::Node {
                left, right, dist, ..
            } => {
                let lambda = oracle_lambda(*dist);
                let (lb, rb) = (left.size() >= mcs, right.size() >= mcs);
                match (lb, rb) {
                    (true, true) => {
                        children.push((left, lambda));
                        children.push((right, lambda));
                        break;
                    }
                    (true, false) | (false, true) => {
                        let (big, small) = if lb {
                            (left, right)
                        } else {
                            (right, left)
                        };
                        let mut pts = Vec::new();
                        small.points(&mut pts);
                        for p in pts {
                            fallout.push((p, lambda));
                        }
                        current = big;
                    }
                    (false, false) => {
                        let mut pts = Vec::new();
                        left.points(&mut pts);
                        right.points(&mut pts);
                        for p in pts {
                            fallout.push((p, lambda));
                        }
                        break;
                    }
                }
            }
        }
    }
    (fallout, children)
}

/// Recursive excess-of-mass walk over one condensed cluster. Returns
/// (sigma-hat, selected member sets). A selected set keeps only points whose
/// fall-out lambda strictly exceeds the cluster's birth lambda.
fn eom(node: &Dendro, birth_lambda: f64, mcs: usize) -> (f64, Vec<Vec<usize>>) {
    let (fallout, children) = condensed_split(node, mcs);

    let sigma: f64 = fallout.iter().map(|&(_, l)| l - birth_lambda).sum::<f64>()
        + children
            .iter()
            .map(|(c, l)| (l - birth_lambda) * c.size() as f64)
            .sum::<f64>();

    let child_results: Vec<(f64, Vec<Vec<usize>>)> = children
        .iter()
        .map(|(c, l)| eom(c, *l, mcs))
        .collect();
    let subtree: f64 = child_results.iter().map(|(s, _)| *s).sum();

    if !children.is_empty() && subtree > sigma {
        let mut merged = Vec::new();
        for (_, sets) in child_results {
            merged.extend(sets);
        }
        (subtree, merged)
    } else {
        // Selected: every condensed point entry in the subtree whose own
        // fall-out lambda strictly exceeds this cluster's birth.
        let mut entries = fallout;
        for (c, _) in &children {
            gather_point_lambdas(c, mcs, &mut entries);
        }
        let members: Vec<usize> = entries
            .iter()
            .filter(|&&(_, l)| l > birth_lambda)
            .map(|&(p, _)| p)
            .collect();
        (sigma, if members.is_empty() { vec![] } else { vec![members] })
    }
}

/// All condensed point entries of a cluster subtree, each with the lambda at
/// which it left its direct condensed parent.
fn gather_point_lambdas(node: &Dendro, mcs: usize, out: &mut Vec<(usize, f64)>) {
    let (fallout, children) = condensed_split(node, mcs);
    out.extend(fallout);
    for (c, _) in children {
        gather_point_lambdas(c, mcs, out);
    }
}

/// Independent HDBSCAN: exhaustive edge sort + Kruskal, recursive EOM walk.
pub fn brute_hdbscan(points: &[Vec<f64>], mcs: usize) -> Vec<i32> {
    let n = points.len();
    assert!(n >= mcs && mcs >= 2);
    let min_samples = mcs;

    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| euclid(&points[i], &points[j])).collect())
        .collect();
    let core: Vec<f64> = (0..n)
        .map(|i| {
            if min_samples == 1 {
                return 0.0;
            }
            let mut ds: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist[i][j]).collect();
            ds.sort_by(f64::total_cmp);
            ds[min_samples - 2]
        })
        .collect();
    let mrd = |i: usize, j: usize| dist[i][j].max(core[i]).max(core[j]);

    // Kruskal over all pairs.
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((mrd(i, j), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    if edges.iter().all(|&(d, _, _)| d <= 0.0) {
        return vec![0; n];
    }

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut trees: Vec<Option<Dendro>> = (0..n).map(|i| Some(Dendro::Leaf(i))).collect();
    let mut root_index = 0usize;
    for &(d, a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            continue;
        }
        let left = trees[ra].take().expect("root holds a tree");
        let right = trees[rb].take().expect("root holds a tree");
        let size = left.size() + right.size();
        parent[ra] = rb;
        let new_root = find(&mut parent, rb);
        trees[new_root] = Some(Dendro::Node {
            left: Box::new(left),
            right: Box::new(right),
            dist: d,
            size,
        });
        root_index = new_root;
    }
    let root = trees[root_index].take().expect("single tree remains");

    // The root condensed cluster is never selectable: selection starts at
    // its condensed children. Points falling out of the root are noise.
    let (_, children) = condensed_split(&root, mcs);
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for (child, lambda) in children {
        let (_, selected) = eom(child, lambda, mcs);
        sets.extend(selected);
    }

    for set in sets.iter_mut() {
        set.sort_unstable();
    }
    sets.sort_by_key(|s| s[0]);

    let mut labels = vec![-1i32; n];
    for (c, set) in sets.iter().enumerate() {
        for &p in set {
            labels[p] = c as i32;
        }
    }
    labels
}

/// Silhouette via the direct per-point double loop.
pub fn brute_silhouette(points: &[Vec<f64>], labels: &[i32]) -> f64 {
    let n = points.len();
    let k = labels.iter().filter(|&&l| l >= 0).max().map_or(0, |&m| m as usize + 1);
    let mut scored = 0usize;
    let mut total = 0.0;
    for i in 0..n {
        if labels[i] < 0 {
            continue;
        }
        scored += 1;
        let own = labels[i];
        let own_size = labels.iter().filter(|&&l| l == own).count();
        if own_size == 1 {
            continue;
        }
        let mut a = 0.0;
        for j in 0..n {
            if j != i && labels[j] == own {
                a += euclid(&points[i], &points[j]);
            }
        }
        a /= (own_size - 1) as f64;
        let mut b = f64::INFINITY;
        for other in 0..k as i32 {
            if other == own {
                continue;
            }
            let size = labels.iter().filter(|&&l| l == other).count();
            if size == 0 {
                continue;
            }
            let mut mean = 0.0;
            for j in 0..n {
                if labels[j] == other {
                    mean += euclid(&points[i], &points[j]);
                }
            }
            b = b.min(mean / size as f64);
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / scored as f64
}

/// Partition equality up to label renaming, with noise forced to align.
pub fn same_partition(a: &[i32], b: &[i32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut forward = std::collections::BTreeMap::new();
    let mut backward = std::collections::BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x < 0) != (y < 0) {
            return false;
        }
        if x < 0 {
            continue;
        }
        if *forward.entry(x).or_insert(y) != y {
            return false;
        }
        if *backward.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}
