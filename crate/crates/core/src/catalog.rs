//! Graph families, seeded random connected graphs, and exhaustive
//! enumeration of small connected graphs up to isomorphism.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, Vertex};

pub fn path(n: usize) -> Graph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::new(n, &edges).expect("path edges are valid")
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::new(n, &edges).expect("cycle edges are valid")
}

pub fn complete(n: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            edges.push((u, v));
        }
    }
    Graph::new(n, &edges).expect("complete edges are valid")
}

/// Star with center 0 and `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    Graph::new(leaves + 1, &edges).expect("star edges are valid")
}

/// `rows × cols` grid graph.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((idx(r, c), idx(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((idx(r, c), idx(r + 1, c)));
            }
        }
    }
    Graph::new(rows * cols, &edges).expect("grid edges are valid")
}

/// Connected graph on `n` vertices: a uniformly labeled random recursive
/// tree plus each remaining pair independently with probability `p`.
pub fn random_connected(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<Vertex> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut adj = vec![vec![false; n]; n];
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (a, b) = (perm[i], perm[j]);
        adj[a][b] = true;
        adj[b][a] = true;
    }
    for u in 0..n {
        for v in u + 1..n {
            if !adj[u][v] && rng.random_bool(p) {
                adj[u][v] = true;
                adj[v][u] = true;
            }
        }
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if adj[u][v] {
                edges.push((u, v));
            }
        }
    }
    Graph::connected(n, &edges).expect("spanning tree guarantees connectivity")
}

/// Upper-triangle adjacency bitmask, pair (i,j) with i<j at a fixed position.
fn pair_bit(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

fn mask_to_graph(n: usize, mask: u64) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if mask >> pair_bit(n, i, j) & 1 == 1 {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, &edges).expect("mask edges are valid")
}

/// Canonical code: minimum relabeled bitmask over orderings that list
/// vertices by ascending (degree, sorted neighbour degrees).
fn canonical_code(n: usize, adj: &[Vec<bool>]) -> u64 {
    let deg: Vec<usize> = adj.iter().map(|r| r.iter().filter(|&&b| b).count()).collect();
    let inv: Vec<(usize, Vec<usize>)> = (0..n)
        .map(|v| {
            let mut nd: Vec<usize> = (0..n).filter(|&u| adj[v][u]).map(|u| deg[u]).collect();
            nd.sort_unstable();
            (deg[v], nd)
        })
        .collect();
    let mut order: Vec<Vertex> = (0..n).collect();
    order.sort_by(|&a, &b| inv[a].cmp(&inv[b]));
    let mut classes: Vec<Vec<Vertex>> = Vec::new();
    for &v in &order {
        match classes.last_mut() {
            Some(c) if inv[c[0]] == inv[v] => c.push(v),
            _ => classes.push(vec![v]),
        }
    }
    let mut best = u64::MAX;
    let mut perm = Vec::with_capacity(n);
    fn rec(
        classes: &mut [Vec<Vertex>],
        ci: usize,
        perm: &mut Vec<Vertex>,
        adj: &[Vec<bool>],
        n: usize,
        best: &mut u64,
    ) {
        if ci == classes.len() {
            let mut code = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    if adj[perm[i]][perm[j]] {
                        code |= 1 << pair_bit(n, i, j);
                    }
                }
            }
            *best = (*best).min(code);
            return;
        }
        permute_class(classes, ci, 0, perm, adj, n, best);
    }
    fn permute_class(
        classes: &mut [Vec<Vertex>],
        ci: usize,
        pos: usize,
        perm: &mut Vec<Vertex>,
        adj: &[Vec<bool>],
        n: usize,
        best: &mut u64,
    ) {
        let len = classes[ci].len();
        if pos == len {
            let base = perm.len();
            perm.extend_from_slice(&classes[ci]);
            rec(classes, ci + 1, perm, adj, n, best);
            perm.truncate(base);
            return;
        }
        for i in pos..len {
            classes[ci].swap(pos, i);
            permute_class(classes, ci, pos + 1, perm, adj, n, best);
            classes[ci].swap(pos, i);
        }
    }
    rec(&mut classes, 0, &mut perm, adj, n, &mut best);
    best
}

/// All graphs on `n` vertices up to isomorphism, as canonical bitmasks.
fn all_graph_codes(n: usize) -> Vec<u64> {
    assert!(n <= 10, "exhaustive enumeration is limited to n <= 10");
    if n <= 1 {
        return vec![0];
    }
    let smaller = all_graph_codes(n - 1);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &code in &smaller {
        let mut adj = vec![vec![false; n]; n];
        for i in 0..n - 1 {
            for j in i + 1..n - 1 {
                if code >> pair_bit(n - 1, i, j) & 1 == 1 {
                    adj[i][j] = true;
                    adj[j][i] = true;
                }
            }
        }
        for subset in 0u64..(1 << (n - 1)) {
            for (u, row) in adj.iter_mut().enumerate().take(n - 1) {
                row[n - 1] = subset >> u & 1 == 1;
            }
            for u in 0..n - 1 {
                adj[n - 1][u] = adj[u][n - 1];
            }
            let c = canonical_code(n, &adj);
            if seen.insert(c) {
                out.push(c);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Connected graphs on exactly `n` vertices, one per isomorphism class.
pub fn connected_graphs(n: usize) -> Vec<Graph> {
    all_graph_codes(n)
        .into_iter()
        .map(|c| mask_to_graph(n, c))
        .filter(Graph::is_connected)
        .collect()
}

/// Connected graphs with `1 ≤ n ≤ max_n`, one per isomorphism class.
pub fn connected_graphs_up_to(max_n: usize) -> Vec<Graph> {
    (1..=max_n).flat_map(connected_graphs).collect()
}

/// `count` seeded random connected graphs with sizes in `min_n..=max_n`.
pub fn random_catalog(count: usize, min_n: usize, max_n: usize, seed: u64) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(min_n..=max_n);
            let p = rng.random_range(0.1..0.5);
            random_connected(n, p, rng.random())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connected_counts_match_known_sequence() {
        let counts: Vec<usize> = (1..=6).map(|n| connected_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 6, 21, 112]);
    }

    #[test]
    fn families_have_expected_shape() {
        assert_eq!(cycle(5).edge_count(), 5);
        assert_eq!(complete(5).edge_count(), 10);
        assert_eq!(star(3).degree(0), 3);
        assert_eq!(grid(2, 3).edge_count(), 7);
        assert_eq!(path(1).edge_count(), 0);
    }

    #[test]
    fn random_graphs_are_connected_and_seeded() {
        for s in 0..20 {
            let g = random_connected(9, 0.2, s);
            assert!(g.is_connected());
            assert_eq!(g, random_connected(9, 0.2, s));
        }
    }
}
