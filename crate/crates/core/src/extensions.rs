//! Walk extensions of graphs and Gibbs distributions, the extended influence
//! matrix L, its dominating matrix J, and the structural matrices D_k, C_k,
//! I_{<2k}.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gibbs::{influence_entry_exact, influence_matrix_exact, GibbsSpec, Pinning, Spin};
use crate::graph::{all_saws, longest_saw, saw_counts_by_end, Graph, SawWalk, Vertex, DEFAULT_WALK_CAP};
use crate::spectral::{knb_matrix, LabeledMatrix};

/// Canonical vertex name in an extended graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum VertexName {
    Base(Vertex),
    /// Split vertex detached from `origin`, attached to `neighbor`.
    Split { origin: Vertex, neighbor: Vertex },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitVertex {
    pub origin: Vertex,
    pub neighbor: Vertex,
    /// The vertex following `origin` on the walk that created this split.
    pub successor: Vertex,
}

impl SplitVertex {
    /// +1 if the successor exceeds the detached neighbour, −1 otherwise.
    pub fn spin(&self) -> Spin {
        if self.successor > self.neighbor {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }
}

/// A base graph with split vertices appended after the base vertices, in
/// ascending (origin, neighbor) order.
#[derive(Clone, Debug)]
pub struct ExtendedGraph {
    base: Graph,
    graph: Graph,
    split: Vec<SplitVertex>,
    removed: Vec<(Vertex, Vertex)>,
}

impl ExtendedGraph {
    pub fn base(&self) -> &Graph {
        &self.base
    }

    /// The extended graph; split vertex i has index `base().n() + i`.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn split_vertices(&self) -> &[SplitVertex] {
        &self.split
    }

    /// Removed base edges as `(origin, neighbor)`.
    pub fn removed_edges(&self) -> &[(Vertex, Vertex)] {
        &self.removed
    }

    pub fn name(&self, v: Vertex) -> VertexName {
        let n = self.base.n();
        if v < n {
            VertexName::Base(v)
        } else {
            let s = self.split[v - n];
            VertexName::Split {
                origin: s.origin,
                neighbor: s.neighbor,
            }
        }
    }

    /// Edge set under canonical names.
    pub fn canonical_edges(&self) -> BTreeSet<(VertexName, VertexName)> {
        self.graph
            .edges()
            .into_iter()
            .map(|(a, b)| {
                let (x, y) = (self.name(a), self.name(b));
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect()
    }

    /// Rebuilds the extension from the base graph and the recorded surgery.
    pub fn replay(&self) -> Result<Graph> {
        let removed: BTreeSet<(Vertex, Vertex)> = self
            .removed
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        let n = self.base.n();
        let mut edges: Vec<(Vertex, Vertex)> = self
            .base
            .edges()
            .into_iter()
            .filter(|e| !removed.contains(e))
            .collect();
        edges.extend(self.split.iter().enumerate().map(|(i, s)| (s.neighbor, n + i)));
        Graph::new(n + self.split.len(), &edges)
    }
}

/// Mutable surgery state over base vertices.
struct Surgery {
    adj: Vec<BTreeSet<Vertex>>,
    split: BTreeMap<(Vertex, Vertex), Vertex>,
    removed: Vec<(Vertex, Vertex)>,
}

impl Surgery {
    fn new(g: &Graph) -> Self {
        Surgery {
            adj: (0..g.n()).map(|v| g.neighbors(v).iter().copied().collect()).collect(),
            split: BTreeMap::new(),
            removed: Vec::new(),
        }
    }

    fn apply(&mut self, walk: &SawWalk) -> Result<()> {
        let p = walk.vertices();
        if let Some(w) = p.windows(2).find(|w| !self.adj[w[0]].contains(&w[1])) {
            return invalid(format!("walk {walk} uses edge {}-{} absent from the graph", w[0], w[1]));
        }
        for i in 0..p.len().saturating_sub(1) {
            let u = p[i];
            let next = p[i + 1];
            let prev = if i > 0 { Some(p[i - 1]) } else { None };
            let shed: Vec<Vertex> = self.adj[u]
                .iter()
                .copied()
                .filter(|&z| z != next && Some(z) != prev)
                .collect();
            for z in shed {
                self.adj[u].remove(&z);
                self.adj[z].remove(&u);
                self.removed.push((u, z));
                self.split.insert((u, z), next);
            }
        }
        Ok(())
    }

    fn finish(self, base: &Graph) -> Result<ExtendedGraph> {
        let n = base.n();
        let mut edges = Vec::new();
        for (u, set) in self.adj.iter().enumerate() {
            edges.extend(set.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        let split: Vec<SplitVertex> = self
            .split
            .iter()
            .map(|(&(origin, neighbor), &successor)| SplitVertex {
                origin,
                neighbor,
                successor,
            })
            .collect();
        edges.extend(split.iter().enumerate().map(|(i, s)| (s.neighbor, n + i)));
        Ok(ExtendedGraph {
            base: base.clone(),
            graph: Graph::new(n + split.len(), &edges)?,
            split,
            removed: self.removed,
        })
    }
}

fn check_walk(g: &Graph, p: &SawWalk) -> Result<()> {
    SawWalk::new(g, p.vertices().to_vec()).map(|_| ())
}

/// The P-extension of `g`.
pub fn extend_graph(g: &Graph, p: &SawWalk) -> Result<ExtendedGraph> {
    check_walk(g, p)?;
    let mut s = Surgery::new(g);
    s.apply(p)?;
    s.finish(g)
}

/// Whether two walks of equal length k have starts at distance ≥ 2k.
pub fn compatible(g: &Graph, p: &SawWalk, q: &SawWalk) -> bool {
    let k = p.len();
    q.len() == k && g.bfs_distances(p.start())[q.start()].is_none_or(|d| d >= 2 * k)
}

/// The {P,Q}-extension: the Q-extension of the P-extension.
pub fn extend_graph_pq(g: &Graph, p: &SawWalk, q: &SawWalk) -> Result<ExtendedGraph> {
    check_walk(g, p)?;
    check_walk(g, q)?;
    if !compatible(g, p, q) {
        return invalid(format!("walks {p} and {q} are not compatible"));
    }
    let mut s = Surgery::new(g);
    s.apply(p)?;
    s.apply(q)?;
    s.finish(g)
}

/// An extended graph together with the pinning Λ ∪ split vertices.
#[derive(Clone, Debug)]
pub struct ExtendedGibbs {
    pub spec: GibbsSpec,
    pub graph: ExtendedGraph,
    pub pin: Pinning,
}

fn extended_pinning(ext: &ExtendedGraph, pin: &Pinning) -> Pinning {
    let n = ext.base().n();
    let mut out = pin.clone();
    for (i, s) in ext.split_vertices().iter().enumerate() {
        out.insert(n + i, s.spin());
    }
    out
}

fn check_avoids(pin: &Pinning, p: &SawWalk) -> Result<()> {
    match p.vertices().iter().find(|&&v| pin.contains(v)) {
        Some(v) => invalid(format!("walk {p} meets pinned vertex {v}")),
        None => Ok(()),
    }
}

pub fn extended_gibbs(spec: &GibbsSpec, g: &Graph, pin: &Pinning, p: &SawWalk) -> Result<ExtendedGibbs> {
    check_avoids(pin, p)?;
    let graph = extend_graph(g, p)?;
    let pin = extended_pinning(&graph, pin);
    Ok(ExtendedGibbs {
        spec: *spec,
        graph,
        pin,
    })
}

pub fn extended_gibbs_pq(
    spec: &GibbsSpec,
    g: &Graph,
    pin: &Pinning,
    p: &SawWalk,
    q: &SawWalk,
) -> Result<ExtendedGibbs> {
    check_avoids(pin, p)?;
    check_avoids(pin, q)?;
    let graph = extend_graph_pq(g, p, q)?;
    let pin = extended_pinning(&graph, pin);
    Ok(ExtendedGibbs {
        spec: *spec,
        graph,
        pin,
    })
}

/// E_{Λ,k}: SAWs of length k avoiding the pinned set, sorted.
pub fn free_walks(g: &Graph, pin: &Pinning, k: usize) -> Result<Vec<SawWalk>> {
    Ok(all_saws(g, k, DEFAULT_WALK_CAP)?
        .into_iter()
        .filter(|w| w.vertices().iter().all(|&v| !pin.contains(v)))
        .collect())
}

/// Largest base graph for which the per-entry exact matrices are built.
pub const MAX_EXTENSION_N: usize = 10;

fn check_size(g: &Graph, k: usize) -> Result<()> {
    if g.n() > MAX_EXTENSION_N || k > 2 {
        return Err(Error::Resource {
            what: "extended-influence instance (n <= 10, k <= 2)",
            size: g.n().max(k) as u128,
            cap: MAX_EXTENSION_N as u128,
        });
    }
    Ok(())
}

/// L(P,Q): 0 for incompatible pairs and for extensions whose pinning has
/// probability zero, else I^{P,Q}(start P, start Q).
pub fn extended_influence_matrix(
    spec: &GibbsSpec,
    g: &Graph,
    pin: &Pinning,
    k: usize,
) -> Result<LabeledMatrix<SawWalk>> {
    check_size(g, k)?;
    let walks = free_walks(g, pin, k)?;
    let dist = g.distance_matrix();
    let rows: Vec<Vec<f64>> = walks
        .par_iter()
        .map(|p| {
            walks
                .iter()
                .map(|q| {
                    if dist[p.start()][q.start()] < 2 * k {
                        return Ok(0.0);
                    }
                    let ext = extended_gibbs_pq(spec, g, pin, p, q)?;
                    // an infeasible extended pinning carries no influence
                    match influence_entry_exact(spec, ext.graph.graph(), &ext.pin, p.start(), q.start()) {
                        Err(Error::Degenerate(_)) => Ok(0.0),
                        r => r,
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    LabeledMatrix::from_data(walks.clone(), walks, rows.concat())
}

/// J(P,Q) = Σ_{ℓ ≥ 2k} δ^ℓ · #(SAWs of length ℓ from start P to start Q in
/// G_{P,Q}), and 0 for incompatible pairs.
pub fn domination_matrix_j(g: &Graph, pin: &Pinning, k: usize, delta: f64) -> Result<LabeledMatrix<SawWalk>> {
    check_size(g, k)?;
    let walks = free_walks(g, pin, k)?;
    let dist = g.distance_matrix();
    let rows: Vec<Vec<f64>> = walks
        .par_iter()
        .map(|p| {
            walks
                .iter()
                .map(|q| {
                    if dist[p.start()][q.start()] < 2 * k {
                        return Ok(0.0);
                    }
                    let ext = extend_graph_pq(g, p, q)?;
                    let counts = saw_counts_by_end(ext.graph(), p.start());
                    Ok(counts
                        .iter()
                        .enumerate()
                        .skip(2 * k)
                        .map(|(l, c)| delta.powi(l as i32) * c[q.start()] as f64)
                        .sum())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    LabeledMatrix::from_data(walks.clone(), walks, rows.concat())
}

/// Σ_{ℓ=k}^{L−k} δ^{ℓ+k}‖H_{G,k}^ℓ‖₂ where L is the longest SAW in `g`.
pub fn j_norm_bound(g: &Graph, k: usize, delta: f64) -> Result<f64> {
    let longest = longest_saw(g);
    if longest < 2 * k {
        return Ok(0.0);
    }
    let h = knb_matrix(g, k)?;
    let mut total = 0.0;
    for l in k..=longest - k {
        total += delta.powi((l + k) as i32) * h.sigma(l)?;
    }
    Ok(total)
}

/// Row/column label for the mixed vertex/walk matrices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Index {
    Vertex(Vertex),
    Walk(SawWalk),
}

#[derive(Clone, Debug)]
pub struct StructuralMatrices {
    /// (V∖Λ) × E_{Λ,k}: 1 iff the vertex starts the walk.
    pub d: LabeledMatrix<Index>,
    /// E_{Λ,k} × (V∖Λ): 1 iff the vertex ends the walk.
    pub c: LabeledMatrix<Index>,
    /// I^{Λ,τ} restricted to pairs at distance < 2k.
    pub i_less: LabeledMatrix<Vertex>,
}

pub fn structural_matrices(spec: &GibbsSpec, g: &Graph, pin: &Pinning, k: usize) -> Result<StructuralMatrices> {
    let walks = free_walks(g, pin, k)?;
    let free = pin.free_vertices(g);
    let vlabels: Vec<Index> = free.iter().map(|&v| Index::Vertex(v)).collect();
    let wlabels: Vec<Index> = walks.iter().cloned().map(Index::Walk).collect();
    let mut d = LabeledMatrix::zeros(vlabels.clone(), wlabels.clone())?;
    let mut c = LabeledMatrix::zeros(wlabels, vlabels)?;
    for (j, w) in walks.iter().enumerate() {
        if let Ok(i) = free.binary_search(&w.start()) {
            d.set(i, j, 1.0);
        }
        if let Ok(i) = free.binary_search(&w.end()) {
            c.set(j, i, 1.0);
        }
    }
    let mut i_less = influence_matrix_exact(spec, g, pin)?;
    let dist = g.distance_matrix();
    for (a, &w) in free.iter().enumerate() {
        for (b, &u) in free.iter().enumerate() {
            if dist[w][u] >= 2 * k {
                i_less.set(a, b, 0.0);
            }
        }
    }
    Ok(StructuralMatrices { d, c, i_less })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{cycle, path, star};
    use crate::regimes::sup_abs_h;

    fn walk(g: &Graph, v: &[Vertex]) -> SawWalk {
        SawWalk::new(g, v.to_vec()).unwrap()
    }

    #[test]
    fn star_extension() {
        let g = star(3);
        let p = walk(&g, &[0, 2]);
        let ext = extend_graph(&g, &p).unwrap();
        assert_eq!(ext.split_vertices().len(), 2);
        assert_eq!(ext.graph().neighbors(0), &[2]);
        let names: Vec<VertexName> = (4..6).map(|v| ext.name(v)).collect();
        assert_eq!(
            names,
            vec![
                VertexName::Split { origin: 0, neighbor: 1 },
                VertexName::Split { origin: 0, neighbor: 3 }
            ]
        );
        for v in 4..6 {
            assert_eq!(ext.graph().degree(v), 1);
        }
        assert_eq!(ext.replay().unwrap(), *ext.graph());
    }

    #[test]
    fn path_extension_is_identity() {
        let g = path(5);
        let ext = extend_graph(&g, &walk(&g, &[0, 1, 2])).unwrap();
        assert!(ext.split_vertices().is_empty());
        assert_eq!(*ext.graph(), g);
    }

    #[test]
    fn single_edge_extension_counts() {
        let g = crate::catalog::random_connected(8, 0.4, 9);
        for w in 0..8 {
            for &x in g.neighbors(w) {
                let ext = extend_graph(&g, &walk(&g, &[w, x])).unwrap();
                assert_eq!(ext.split_vertices().len(), g.degree(w) - 1);
            }
        }
    }

    #[test]
    fn pq_extension_order_independent() {
        let g = cycle(8);
        let p = walk(&g, &[0, 1]);
        let q = walk(&g, &[4, 5]);
        let a = extend_graph_pq(&g, &p, &q).unwrap();
        let b = extend_graph_pq(&g, &q, &p).unwrap();
        assert_eq!(a.canonical_edges(), b.canonical_edges());
        let near = walk(&g, &[1, 2]);
        assert!(extend_graph_pq(&g, &p, &near).is_err());
    }

    #[test]
    fn split_pins_follow_ordering() {
        let g = star(3);
        let pg = extended_gibbs(&GibbsSpec::hard_core(1.0).unwrap(), &g, &Pinning::new(), &walk(&g, &[0, 2])).unwrap();
        // split (0,1): successor 2 > 1 → +1; split (0,3): 2 < 3 → −1
        assert_eq!(pg.pin.get(4), Some(Spin::Plus));
        assert_eq!(pg.pin.get(5), Some(Spin::Minus));
        let pin = Pinning::from_pairs([(0, Spin::Plus)]);
        let p = walk(&g, &[0, 2]);
        assert!(extended_gibbs(&GibbsSpec::hard_core(1.0).unwrap(), &g, &pin, &p).is_err());
    }

    #[test]
    fn l_matrix_on_c6() {
        let g = cycle(6);
        let spec = GibbsSpec::hard_core(1.0).unwrap();
        let l = extended_influence_matrix(&spec, &g, &Pinning::new(), 1).unwrap();
        assert_eq!(l.nrows(), 12);
        let dist = g.distance_matrix();
        for (i, p) in l.row_labels().iter().enumerate() {
            for (j, q) in l.col_labels().iter().enumerate() {
                let v = l.get(i, j);
                if dist[p.start()][q.start()] < 2 {
                    assert_eq!(v, 0.0);
                } else {
                    let ext = extended_gibbs_pq(&spec, &g, &Pinning::new(), p, q).unwrap();
                    let direct = influence_entry_exact(&spec, ext.graph.graph(), &ext.pin, p.start(), q.start()).unwrap();
                    assert!((v - direct).abs() < 1e-12);
                }
            }
        }
        let delta = sup_abs_h(&spec, 2);
        let j = domination_matrix_j(&g, &Pinning::new(), 1, delta).unwrap();
        for (a, b) in l.data().iter().zip(j.data()) {
            assert!(a.abs() <= b + 1e-9);
            assert!(*b >= 0.0);
        }
    }

    #[test]
    fn structural_row_and_column_sums() {
        let g = crate::catalog::random_connected(7, 0.3, 1);
        let pin = Pinning::from_pairs([(3, Spin::Minus)]);
        let spec = GibbsSpec::ising(0.5, 1.0).unwrap();
        for k in 1..=2 {
            let s = structural_matrices(&spec, &g, &pin, k).unwrap();
            let walks = free_walks(&g, &pin, k).unwrap();
            for (i, lbl) in s.d.row_labels().iter().enumerate() {
                let Index::Vertex(v) = lbl else { unreachable!() };
                let row_sum: f64 = s.d.row(i).iter().sum();
                assert_eq!(row_sum as usize, walks.iter().filter(|w| w.start() == *v).count());
                let col_sum: f64 = (0..s.c.nrows()).map(|r| s.c.get(r, i)).sum();
                assert_eq!(col_sum as usize, walks.iter().filter(|w| w.end() == *v).count());
            }
            let dist = g.distance_matrix();
            for (a, &w) in s.i_less.row_labels().iter().enumerate() {
                for (b, &u) in s.i_less.col_labels().iter().enumerate() {
                    if dist[w][u] >= 2 * k {
                        assert_eq!(s.i_less.get(a, b), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn size_guard() {
        let g = path(11);
        let spec = GibbsSpec::hard_core(1.0).unwrap();
        assert!(matches!(
            extended_influence_matrix(&spec, &g, &Pinning::new(), 1),
            Err(Error::Resource { .. })
        ));
    }
}
