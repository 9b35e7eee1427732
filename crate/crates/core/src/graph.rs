//! Gaussian-weighted k-NN similarity graph and its random-walk expansion
//! into a 0/1 adjacency indicator.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{GpacError, Result};
use crate::partition::FuzzyPartition;

/// Per-sample nearest neighbors as `(index, squared distance)`, sorted by
/// distance then index.
pub type KnnLists = Vec<Vec<(usize, f64)>>;

/// Exact k nearest neighbors of every sample by brute force.
pub fn pairwise_knn(data: &Dataset, k: usize) -> Result<KnnLists> {
    let n = data.n();
    if k < 1 || k >= n {
        return Err(GpacError::InvalidConfig(format!(
            "neighbor count k must lie in [1, {n}), got {k}"
        )));
    }
    (0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n - 1),
            |buf: &mut Vec<(f64, usize)>, i| {
                buf.clear();
                let xi = data.row(i);
                for j in (0..n).filter(|&j| j != i) {
                    let d = crate::dataset::sq_euclidean(xi, data.row(j));
                    if !d.is_finite() {
                        return Err(GpacError::NonFiniteDistance(i, j));
                    }
                    buf.push((d, j));
                }
                let by_dist_then_index =
                    |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if k < buf.len() {
                    buf.select_nth_unstable_by(k - 1, by_dist_then_index);
                    buf.truncate(k);
                }
                buf.sort_unstable_by(by_dist_then_index);
                Ok(buf.iter().map(|&(d, j)| (j, d)).collect())
            },
        )
        .collect()
}

/// Mean squared distance from each sample to its k-th nearest neighbor.
pub fn estimate_sigma(knn: &KnnLists) -> Result<f64> {
    let kth: Vec<f64> = knn.iter().filter_map(|l| l.last().map(|e| e.1)).collect();
    if kth.is_empty() {
        return Err(GpacError::InvalidDataset("empty neighbor lists".into()));
    }
    let sigma = kth.iter().sum::<f64>() / kth.len() as f64;
    if sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(GpacError::ZeroSigma)
    }
}

/// Symmetric sparse similarity graph in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    sigma: f64,
    k: usize,
}

impl KnnGraph {
    /// Builds a graph from undirected weighted edges. Duplicate edges keep
    /// the first weight seen; self loops are dropped.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        sigma: f64,
        k: usize,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(GpacError::InvalidDataset(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(GpacError::InvalidDataset(format!(
                    "edge ({i}, {j}) weight {w} outside (0, 1]"
                )));
            }
            if i != j {
                rows[i].push((j, w));
                rows[j].push((i, w));
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        let mut degrees = Vec::with_capacity(n);
        offsets.push(0);
        for mut row in rows {
            // stable sort keeps the first weight for repeated pairs
            row.sort_by_key(|e| e.0);
            row.dedup_by_key(|e| e.0);
            degrees.push(row.iter().map(|e| e.1).sum());
            for (j, w) in row {
                neighbors.push(j);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        Ok(KnnGraph {
            offsets,
            neighbors,
            weights,
            degrees,
            sigma,
            k,
        })
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Neighbor indices of `i`, ascending.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Weight of edge (i, j), 0 when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.neighbors(i).binary_search(&j) {
            Ok(pos) => self.weights(i)[pos],
            Err(_) => 0.0,
        }
    }

    /// Writes every undirected edge once as `i j w` with `i < j`, sorted.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# n={} k={} sigma={:.16e}", self.n(), self.k, self.sigma)?;
        for i in 0..self.n() {
            for (&j, &w) in self.neighbors(i).iter().zip(self.weights(i)) {
                if i < j {
                    writeln!(out, "{i} {j} {w:.16e}")?;
                }
            }
        }
        Ok(())
    }

    /// Reads the format produced by [`KnnGraph::write_edge_list`].
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let path = std::path::Path::new("<edge list>");
        let mut header: Option<(usize, usize, f64)> = None;
        let mut edges = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| GpacError::io(path, e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                header = Some(parse_header(rest).ok_or_else(|| {
                    GpacError::parse(path, format!("line {}: bad header", lineno + 1))
                })?);
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                [i, j, w] => i
                    .parse::<usize>()
                    .ok()
                    .zip(j.parse::<usize>().ok())
                    .zip(w.parse::<f64>().ok())
                    .map(|((i, j), w)| (i, j, w)),
                _ => None,
            };
            edges.push(parsed.ok_or_else(|| {
                GpacError::parse(path, format!("line {}: expected `i j w`", lineno + 1))
            })?);
        }
        let (n, k, sigma) =
            header.ok_or_else(|| GpacError::parse(path, "missing `# n= k= sigma=` header"))?;
        Self::from_edges(n, edges, sigma, k)
    }
}

fn parse_header(s: &str) -> Option<(usize, usize, f64)> {
    let mut n = None;
    let mut k = None;
    let mut sigma = None;
    for tok in s.split_whitespace() {
        let (key, val) = tok.split_once('=')?;
        match key {
            "n" => n = val.parse().ok(),
            "k" => k = val.parse().ok(),
            "sigma" => sigma = val.parse().ok(),
            _ => {}
        }
    }
    Some((n?, k?, sigma?))
}

/// Gaussian kernel weight for a squared distance; never returns 0 so that
/// every stored edge keeps a positive weight.
#[inline]
pub fn gaussian_weight(sq_dist: f64, sigma: f64) -> f64 {
    (-sq_dist / (2.0 * sigma)).exp().max(f64::MIN_POSITIVE)
}

/// Builds the union-symmetrized Gaussian k-NN graph.
pub fn build_knn_graph(data: &Dataset, k: usize, sigma: Option<f64>) -> Result<KnnGraph> {
    let knn = pairwise_knn(data, k)?;
    let sigma = match sigma {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => {
            return Err(GpacError::InvalidConfig(format!(
                "sigma must be positive, got {s}"
            )))
        }
        None => estimate_sigma(&knn)?,
    };
    let edges = knn.iter().enumerate().flat_map(|(i, list)| {
        list.iter()
            .map(move |&(j, d)| (i, j, gaussian_weight(d, sigma)))
    });
    KnnGraph::from_edges(data.n(), edges, sigma, k)
}

/// Smallest `theta >= 1` with `k^theta >= n / c`, i.e. the ceiling of
/// `log_k(n / c)`. Evaluated in integers so exact powers are not rounded up.
/// `k < 2` is treated as `k = 2`.
pub fn default_theta(n: usize, c: usize, k: usize) -> usize {
    let base = k.max(2) as u128;
    let (n, c) = (n as u128, c.max(1) as u128);
    let mut theta = 1;
    let mut reach = base * c;
    while reach < n {
        reach = reach.saturating_mul(base);
        theta += 1;
    }
    theta
}

/// The 0/1 indicator graph of pairs within `theta` hops, stored as sorted
/// adjacency sets without the diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyIndicator {
    offsets: Vec<usize>,
    members: Vec<usize>,
    theta: usize,
}

impl AdjacencyIndicator {
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    /// Sorted set A_i.
    #[inline]
    pub fn set(&self, i: usize) -> &[usize] {
        &self.members[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.set(i).binary_search(&j).is_ok()
    }

    pub fn total_size(&self) -> usize {
        self.members.len()
    }

    pub fn max_set_size(&self) -> usize {
        (0..self.n()).map(|i| self.set(i).len()).max().unwrap_or(0)
    }

    pub(crate) fn from_sets(sets: Vec<Vec<usize>>, theta: usize) -> Self {
        let mut offsets = Vec::with_capacity(sets.len() + 1);
        offsets.push(0);
        let mut members = Vec::with_capacity(sets.iter().map(Vec::len).sum());
        for s in sets {
            members.extend(s);
            offsets.push(members.len());
        }
        AdjacencyIndicator {
            offsets,
            members,
            theta,
        }
    }
}

/// Every `j != i` reachable from `i` within `theta` hops over the support of
/// the graph, found by depth-limited breadth-first search.
pub fn expand_adjacency(graph: &KnnGraph, theta: usize) -> AdjacencyIndicator {
    let n = graph.n();
    let theta = theta.max(1);
    let sets: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![usize::MAX; n], VecDeque::new()),
            |(seen, queue), i| {
                let mut reached = Vec::new();
                seen[i] = i;
                queue.clear();
                queue.push_back((i, 0usize));
                while let Some((u, depth)) = queue.pop_front() {
                    if depth == theta {
                        continue;
                    }
                    for &v in graph.neighbors(u) {
                        if seen[v] != i {
                            seen[v] = i;
                            reached.push(v);
                            queue.push_back((v, depth + 1));
                        }
                    }
                }
                reached.sort_unstable();
                reached
            },
        )
        .collect();
    AdjacencyIndicator::from_sets(sets, theta)
}

/// Degree-weighted mean of the neighbors' rows, written into `out`.
/// `probs` is the row-major n×c membership matrix.
#[inline]
pub(crate) fn neighborhood_average_into(
    graph: &KnnGraph,
    probs: &[f64],
    c: usize,
    i: usize,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (&j, &w) in graph.neighbors(i).iter().zip(graph.weights(i)) {
        let pj = &probs[j * c..(j + 1) * c];
        for (o, p) in out.iter_mut().zip(pj) {
            *o += w * p;
        }
    }
    let deg = graph.degrees[i];
    out.iter_mut().for_each(|v| *v /= deg);
}

/// Weighted average of sample `i`'s neighbors' membership vectors.
pub fn neighborhood_average(graph: &KnnGraph, partition: &FuzzyPartition, i: usize) -> Result<Vec<f64>> {
    if graph.degrees.get(i).copied().unwrap_or(0.0) <= 0.0 {
        return Err(GpacError::InvalidDataset(format!("sample {i} has zero degree")));
    }
    let mut out = vec![0.0; partition.c()];
    neighborhood_average_into(graph, partition.as_slice(), partition.c(), i, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new(xs.to_vec(), xs.len(), 1, None).unwrap()
    }

    #[test]
    fn knn_on_collinear_points() {
        let knn = pairwise_knn(&line(&[0.0, 1.0, 3.0]), 1).unwrap();
        let firsts: Vec<usize> = knn.iter().map(|l| l[0].0).collect();
        assert_eq!(firsts, vec![1, 0, 1]);
        assert_eq!(knn[2][0].1, 4.0);
    }

    #[test]
    fn knn_complete_and_ties() {
        let knn = pairwise_knn(&line(&[0.0, 5.0, 2.0, 9.0]), 3).unwrap();
        for (i, l) in knn.iter().enumerate() {
            let mut idx: Vec<usize> = l.iter().map(|e| e.0).collect();
            idx.sort();
            assert_eq!(idx, (0..4).filter(|&j| j != i).collect::<Vec<_>>());
        }
        // duplicates: distance 0 admitted, lower index wins the tie
        let knn = pairwise_knn(&line(&[1.0, 1.0, 1.0, 4.0]), 1).unwrap();
        assert_eq!(knn[0], vec![(1, 0.0)]);
        assert_eq!(knn[1], vec![(0, 0.0)]);
        assert_eq!(knn[2], vec![(0, 0.0)]);
        assert!(pairwise_knn(&line(&[0.0, 1.0]), 2).is_err());
    }

    #[test]
    fn sigma_estimates() {
        let lists: KnnLists = vec![vec![(1, 1.0)], vec![(0, 3.0)]];
        assert_eq!(estimate_sigma(&lists).unwrap(), 2.0);
        let lists: KnnLists = vec![vec![(1, 0.5), (2, 7.0)], vec![(0, 1.0), (2, 7.0)]];
        assert_eq!(estimate_sigma(&lists).unwrap(), 7.0);
        let knn = pairwise_knn(&line(&[2.0, 2.0, 2.0]), 1).unwrap();
        assert!(matches!(estimate_sigma(&knn), Err(GpacError::ZeroSigma)));
    }

    #[test]
    fn kernel_values_and_union_symmetrization() {
        // 0 and 1 coincide; 3 is far. k=1: 3's neighbor is 2 but 2's neighbor is 1 (tie -> lower index)
        let data = line(&[0.0, 0.0, 1.0, 3.0]);
        let g = build_knn_graph(&data, 1, Some(0.5)).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
        // ‖x2 − x3‖² = 4 = 2σ·4 with σ=0.5 → exp(−4)
        assert_eq!(g.weight(3, 2), (-4.0f64).exp());
        assert_eq!(g.weight(2, 3), g.weight(3, 2));
        // ‖x‖² = 2σ → e^{-1}
        let g = build_knn_graph(&line(&[0.0, 1.0]), 1, Some(0.5)).unwrap();
        assert!((g.weight(0, 1) - 0.36787944117144233).abs() < 1e-15);
    }

    #[test]
    fn theta_defaults() {
        assert_eq!(default_theta(10992, 10, 10), 4);
        assert_eq!(default_theta(1000, 10, 10), 2);
        assert_eq!(default_theta(50, 10, 10), 1);
        assert_eq!(default_theta(100, 10, 10), 1);
        assert_eq!(default_theta(101, 10, 10), 2);
    }

    #[test]
    fn path_graph_expansion() {
        let g = KnnGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)], 1.0, 1).unwrap();
        assert_eq!(expand_adjacency(&g, 1).set(0), &[1]);
        assert_eq!(expand_adjacency(&g, 2).set(0), &[1, 2]);
        let full = KnnGraph::from_edges(
            4,
            (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j, 0.5))),
            1.0,
            3,
        )
        .unwrap();
        for theta in 1..4 {
            let a = expand_adjacency(&full, theta);
            for i in 0..4 {
                assert_eq!(a.set(i).len(), 3);
                assert!(!a.contains(i, i));
            }
        }
    }

    #[test]
    fn average_examples() {
        let g = KnnGraph::from_edges(3, [(0, 1, 1.0), (0, 2, 1.0)], 1.0, 1).unwrap();
        let p = FuzzyPartition::new(vec![0.3, 0.7, 1.0, 0.0, 0.0, 1.0], 3, 2).unwrap();
        assert_eq!(neighborhood_average(&g, &p, 0).unwrap(), vec![0.5, 0.5]);
        let u = FuzzyPartition::uniform(3, 2);
        assert_eq!(neighborhood_average(&g, &u, 0).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn edge_list_round_trip() {
        let data = Dataset::new(
            vec![0.0, 0.1, 1.3, 2.2, 2.0, 0.4, 5.0, 1.0, 3.3, 3.1],
            5,
            2,
            None,
        )
        .unwrap();
        let g = build_knn_graph(&data, 2, None).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("0 "));
        let back = KnnGraph::read_edge_list(&buf[..]).unwrap();
        assert_eq!(back, g);
    }

    fn random_points() -> impl Strategy<Value = (Dataset, usize)> {
        (4usize..30, 1usize..4).prop_flat_map(|(n, d)| {
            (
                prop::collection::vec(-10.0f64..10.0, n * d),
                Just(n),
                Just(d),
                1..n.min(6),
            )
                .prop_map(|(x, n, d, k)| (Dataset::new(x, n, d, None).unwrap(), k))
        })
    }

    fn dense_power_support(g: &KnnGraph, theta: usize) -> Vec<Vec<bool>> {
        let n = g.n();
        let base: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| i == j || g.weight(i, j) > 0.0).collect())
            .collect();
        let mut acc = base.clone();
        for _ in 1..theta {
            let mut next = vec![vec![false; n]; n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = (0..n).any(|t| acc[i][t] && base[t][j]);
                }
            }
            acc = next;
        }
        for (i, row) in acc.iter_mut().enumerate() {
            row[i] = false;
        }
        acc
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn graph_is_symmetric_with_unit_weights((data, k) in random_points()) {
            let g = build_knn_graph(&data, k, Some(4.0)).unwrap();
            for i in 0..g.n() {
                prop_assert!(g.neighbors(i).len() >= k);
                prop_assert!(g.neighbors(i).len() < g.n());
                prop_assert!(g.degrees()[i] > 0.0);
                prop_assert_eq!(g.weight(i, i), 0.0);
                for (&j, &w) in g.neighbors(i).iter().zip(g.weights(i)) {
                    prop_assert!(w > 0.0 && w <= 1.0);
                    prop_assert_eq!(w, g.weight(j, i));
                }
            }
        }

        #[test]
        fn expansion_matches_dense_matrix_power((data, k) in random_points(), theta in 1usize..4) {
            let g = build_knn_graph(&data, k, Some(4.0)).unwrap();
            let a = expand_adjacency(&g, theta);
            let dense = dense_power_support(&g, theta);
            for i in 0..g.n() {
                let expected: Vec<usize> = (0..g.n()).filter(|&j| dense[i][j]).collect();
                prop_assert_eq!(a.set(i), &expected[..]);
            }
        }

        #[test]
        fn one_hop_expansion_is_graph_support((data, k) in random_points()) {
            let g = build_knn_graph(&data, k, None);
            prop_assume!(g.is_ok());
            let g = g.unwrap();
            let a = expand_adjacency(&g, 1);
            for i in 0..g.n() {
                prop_assert_eq!(a.set(i), g.neighbors(i));
            }
        }

        #[test]
        fn expansion_is_monotone_and_symmetric((data, k) in random_points(), theta in 1usize..4) {
            let g = build_knn_graph(&data, k, Some(1.0)).unwrap();
            let small = expand_adjacency(&g, theta);
            let big = expand_adjacency(&g, theta + 1);
            for i in 0..g.n() {
                for &j in small.set(i) {
                    prop_assert!(big.contains(i, j));
                    prop_assert!(small.contains(j, i));
                }
            }
        }

        #[test]
        fn average_stays_on_simplex(
            (data, k) in random_points(),
            raw in prop::collection::vec(0.01f64..1.0, 30 * 3),
        ) {
            let g = build_knn_graph(&data, k, Some(2.0)).unwrap();
            let n = g.n();
            let p = crate::partition::row_normalize(&raw[..n * 3], n, 3).unwrap();
            for i in 0..n {
                let avg = neighborhood_average(&g, &p, i).unwrap();
                prop_assert!((avg.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
