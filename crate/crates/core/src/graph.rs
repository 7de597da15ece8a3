//! Undirected finite graphs, walk counting and self-avoiding walk enumeration.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Vertex identifier. The total order on vertices is index order.
pub type Vertex = usize;

/// Default cap on the number of walks a single enumeration may produce.
pub const DEFAULT_WALK_CAP: usize = 10_000_000;

/// Simple undirected graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<Vertex>>,
    edges: usize,
}

impl Graph {
    /// Builds a graph from an edge list. Rejects self-loops, parallel edges
    /// and out-of-range endpoints. Connectivity is not required here; see
    /// [`Graph::connected`].
    pub fn new(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return invalid(format!("edge ({u},{v}) out of range for n={n}"));
            }
            if u == v {
                return invalid(format!("self-loop at vertex {u}"));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return invalid(format!("parallel edge at vertex {v}"));
            }
        }
        Ok(Graph {
            adj,
            edges: edges.len(),
        })
    }

    /// Like [`Graph::new`] but also requires a connected graph with n ≥ 1.
    pub fn connected(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let g = Self::new(n, edges)?;
        if n == 0 {
            return invalid("graph has no vertices");
        }
        if !g.is_connected() {
            return invalid("graph is disconnected");
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::with_capacity(self.edges);
        for (u, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        n == 0 || self.bfs_distances(0).iter().all(Option::is_some)
    }

    /// Hop distances from `src`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, src: Vertex) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &x in &self.adj[v] {
                if dist[x].is_none() {
                    dist[x] = Some(d + 1);
                    queue.push_back(x);
                }
            }
        }
        dist
    }

    /// All-pairs hop distances (`usize::MAX` when unreachable).
    pub fn distance_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.n())
            .map(|s| {
                self.bfs_distances(s)
                    .into_iter()
                    .map(|d| d.unwrap_or(usize::MAX))
                    .collect()
            })
            .collect()
    }
}

/// A self-avoiding walk stored as its vertex sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SawWalk(Vec<Vertex>);

impl SawWalk {
    /// Validates that `vertices` is a nonempty self-avoiding walk in `g`.
    pub fn new(g: &Graph, vertices: Vec<Vertex>) -> Result<Self> {
        if vertices.is_empty() {
            return invalid("walk must contain at least one vertex");
        }
        if let Some(&v) = vertices.iter().find(|&&v| v >= g.n()) {
            return invalid(format!("walk vertex {v} out of range"));
        }
        if let Some(w) = vertices.windows(2).find(|w| !g.has_edge(w[0], w[1])) {
            return invalid(format!("walk step {}-{} is not an edge", w[0], w[1]));
        }
        let mut seen = vec![false; g.n()];
        for &v in &vertices {
            if std::mem::replace(&mut seen[v], true) {
                return invalid(format!("walk repeats vertex {v}"));
            }
        }
        Ok(SawWalk(vertices))
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() == 1
    }

    pub fn start(&self) -> Vertex {
        self.0[0]
    }

    pub fn end(&self) -> Vertex {
        self.0[self.0.len() - 1]
    }

    pub fn reverse(&self) -> SawWalk {
        SawWalk(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Display for SawWalk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// Depth-first SAW enumeration from `start`, calling `visit` on each walk of
/// exactly `k` edges. The callback sees the vertex stack.
fn for_each_saw(g: &Graph, start: Vertex, k: usize, visit: &mut dyn FnMut(&[Vertex])) {
    fn rec(
        g: &Graph,
        k: usize,
        stack: &mut Vec<Vertex>,
        on: &mut [bool],
        visit: &mut dyn FnMut(&[Vertex]),
    ) {
        if stack.len() == k + 1 {
            visit(stack);
            return;
        }
        let last = stack[stack.len() - 1];
        for &x in g.neighbors(last) {
            if !on[x] {
                on[x] = true;
                stack.push(x);
                rec(g, k, stack, on, visit);
                stack.pop();
                on[x] = false;
            }
        }
    }
    let mut on = vec![false; g.n()];
    on[start] = true;
    let mut stack = vec![start];
    rec(g, k, &mut stack, &mut on, visit);
}

/// All SAWs with `k` edges from `start`, in lexicographic order.
pub fn enumerate_saws(g: &Graph, start: Vertex, k: usize) -> Result<Vec<SawWalk>> {
    enumerate_saws_capped(g, start, k, DEFAULT_WALK_CAP)
}

pub fn enumerate_saws_capped(
    g: &Graph,
    start: Vertex,
    k: usize,
    cap: usize,
) -> Result<Vec<SawWalk>> {
    if start >= g.n() {
        return invalid(format!("start vertex {start} out of range"));
    }
    let mut out = Vec::new();
    let mut overflow = false;
    for_each_saw(g, start, k, &mut |s| {
        if out.len() < cap {
            out.push(SawWalk(s.to_vec()));
        } else {
            overflow = true;
        }
    });
    if overflow {
        return Err(Error::Resource {
            what: "self-avoiding walks",
            size: cap as u128 + 1,
            cap: cap as u128,
        });
    }
    Ok(out)
}

/// All SAWs with `k` edges in `g` (every start vertex, both orientations),
/// sorted lexicographically.
pub fn all_saws(g: &Graph, k: usize, cap: usize) -> Result<Vec<SawWalk>> {
    let mut out = Vec::new();
    for v in 0..g.n() {
        let remaining = cap.saturating_sub(out.len());
        let mut part = enumerate_saws_capped(g, v, k, remaining).map_err(|_| Error::Resource {
            what: "self-avoiding walks",
            size: cap as u128 + 1,
            cap: cap as u128,
        })?;
        out.append(&mut part);
    }
    Ok(out)
}

/// Number of SAWs with `k` edges from `start` (no materialization).
pub fn count_saws(g: &Graph, start: Vertex, k: usize) -> u64 {
    let mut c = 0u64;
    for_each_saw(g, start, k, &mut |_| c += 1);
    c
}

/// Counts SAWs from `start` by (length, end vertex): `out[l][u]`.
pub fn saw_counts_by_end(g: &Graph, start: Vertex) -> Vec<Vec<u64>> {
    fn rec(g: &Graph, v: Vertex, depth: usize, on: &mut [bool], out: &mut Vec<Vec<u64>>) {
        if out.len() <= depth {
            out.push(vec![0; g.n()]);
        }
        out[depth][v] += 1;
        for &x in g.neighbors(v) {
            if !on[x] {
                on[x] = true;
                rec(g, x, depth + 1, on, out);
                on[x] = false;
            }
        }
    }
    let mut on = vec![false; g.n()];
    on[start] = true;
    let mut out = Vec::new();
    rec(g, start, 0, &mut on, &mut out);
    out
}

/// Length of the longest SAW in `g`.
pub fn longest_saw(g: &Graph) -> usize {
    (0..g.n())
        .map(|v| saw_counts_by_end(g, v).len() - 1)
        .max()
        .unwrap_or(0)
}

/// c_k: the maximum over vertices of the number of SAWs of length `k`.
pub fn saw_count_sup(g: &Graph, k: usize) -> u64 {
    (0..g.n()).map(|v| count_saws(g, v, k)).max().unwrap_or(0)
}

/// Radius-k connective constant c_k^{1/k}.
pub fn connective_constant_k(g: &Graph, k: usize) -> Result<f64> {
    if k == 0 {
        return invalid("connective constant needs k >= 1");
    }
    let ck = saw_count_sup(g, k);
    if ck == 0 {
        return Err(Error::Degenerate(format!("no self-avoiding walks of length {k}")));
    }
    Ok((ck as f64).powf(1.0 / k as f64))
}

/// Number of walks of length `l` from `u` to `w`. Saturates at `u128::MAX`.
pub fn count_walks(g: &Graph, u: Vertex, w: Vertex, l: usize) -> u128 {
    let mut cur = vec![0u128; g.n()];
    cur[u] = 1;
    for _ in 0..l {
        let mut next = vec![0u128; g.n()];
        for (v, &c) in cur.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &x in g.neighbors(v) {
                next[x] = next[x].saturating_add(c);
            }
        }
        cur = next;
    }
    cur[w]
}

/// A graph read from an edge-list file with its original vertex ids.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `labels[i]` is the file id of vertex `i`.
    pub labels: Vec<u64>,
}

impl LoadedGraph {
    pub fn was_relabeled(&self) -> bool {
        self.labels.iter().enumerate().any(|(i, &l)| l != i as u64)
    }
}

/// Parses the edge-list format: a header line `n m` followed by `m` lines
/// `u v`; lines starting with `#` are comments. Vertex ids with gaps are
/// compacted in ascending order.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<LoadedGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut raw_edges: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected two integers, found {:?}", body),
            });
        }
        let parse = |s: &str| {
            s.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("not a nonnegative integer: {s:?}"),
            })
        };
        let (a, b) = (parse(fields[0])?, parse(fields[1])?);
        match header {
            None => header = Some((a as usize, b as usize)),
            Some(_) => raw_edges.push((a, b)),
        }
    }
    let (n, m) = header.ok_or(Error::Parse {
        line: 0,
        msg: "missing 'n m' header".into(),
    })?;
    if raw_edges.len() != m {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header declares {m} edges, found {}", raw_edges.len()),
        });
    }
    let mut ids: BTreeMap<u64, usize> = BTreeMap::new();
    for &(a, b) in &raw_edges {
        ids.insert(a, 0);
        ids.insert(b, 0);
    }
    let labels: Vec<u64> = if ids.is_empty() {
        (0..n as u64).collect()
    } else {
        ids.keys().copied().collect()
    };
    if labels.len() != n {
        return invalid(format!(
            "header declares {n} vertices but edges mention {}",
            labels.len()
        ));
    }
    for (i, id) in labels.iter().enumerate() {
        ids.insert(*id, i);
    }
    let edges: Vec<(Vertex, Vertex)> = raw_edges.iter().map(|(a, b)| (ids[a], ids[b])).collect();
    let graph = Graph::connected(n, &edges)?;
    Ok(LoadedGraph { graph, labels })
}

pub fn load_edge_list(path: &Path) -> Result<LoadedGraph> {
    let file = std::fs::File::open(path)?;
    parse_edge_list(std::io::BufReader::new(file))
}

/// Serializes a graph in the edge-list format.
pub fn to_edge_list(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        s.push_str(&format!("{u} {v}\n"));
    }
    s
}
