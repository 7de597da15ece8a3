//! Tree of self-avoiding walks, tree recursions for log-ratios, edge
//! influence weights and the path-sum influence matrix.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gibbs::{GibbsSpec, Pinning, Spin};
use crate::graph::{Graph, Vertex};
use crate::spectral::LabeledMatrix;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// Real number extended by ±∞, used for log-ratios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// The ratio e^x in [0, +∞].
    pub fn exp(self) -> f64 {
        match self {
            ExtReal::NegInf => 0.0,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::Finite(x) => x.exp(),
        }
    }

    /// Marginal probability of +1 corresponding to this log-ratio.
    pub fn to_marginal(self) -> f64 {
        match self {
            ExtReal::NegInf => 0.0,
            ExtReal::PosInf => 1.0,
            ExtReal::Finite(x) => 1.0 / (1.0 + (-x).exp()),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::Finite(x) => x,
        }
    }

    pub fn from_f64(x: f64) -> ExtReal {
        if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else if x == f64::INFINITY {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(x)
        }
    }
}

/// ln(1 + e^t) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// ln((β e^x + 1)/(e^x + γ)), the per-child term of H_d.
pub fn log_factor(spec: &GibbsSpec, x: ExtReal) -> ExtReal {
    let (b, g) = (spec.beta(), spec.gamma());
    match x {
        ExtReal::NegInf => ExtReal::Finite(-g.ln()),
        ExtReal::PosInf => {
            if b > 0.0 {
                ExtReal::Finite(b.ln())
            } else {
                ExtReal::NegInf
            }
        }
        ExtReal::Finite(x) => {
            let num = if b > 0.0 { softplus(x + b.ln()) } else { 0.0 };
            let den = g.ln() + softplus(x - g.ln());
            ExtReal::Finite(num - den)
        }
    }
}

/// H_d: log-ratio at a node from its children's log-ratios.
pub fn recursion_log(spec: &GibbsSpec, ys: &[ExtReal]) -> ExtReal {
    let mut acc = spec.lambda().ln();
    for &y in ys {
        match log_factor(spec, y) {
            ExtReal::Finite(t) => acc += t,
            _ => return ExtReal::NegInf,
        }
    }
    ExtReal::Finite(acc)
}

/// F_d in the ratio domain: λ·Π (βx_i+1)/(x_i+γ), limits at x_i = ∞.
pub fn recursion_f(spec: &GibbsSpec, xs: &[f64]) -> Result<f64> {
    let mut acc = spec.lambda();
    for &x in xs {
        if x.is_nan() || x < 0.0 {
            return invalid(format!("ratio {x} outside [0, +inf]"));
        }
        let factor = if x.is_infinite() {
            spec.beta()
        } else {
            (spec.beta() * x + 1.0) / (x + spec.gamma())
        };
        acc *= factor;
        if acc.is_nan() {
            return Err(Error::Domain("indeterminate 0*inf in ratio recursion".into()));
        }
    }
    Ok(acc)
}

/// h(x) = −(1−βγ)e^x / ((βe^x+1)(e^x+γ)), with limits at ±∞.
pub fn recursion_h(spec: &GibbsSpec, x: ExtReal) -> f64 {
    let (b, g) = (spec.beta(), spec.gamma());
    let c = 1.0 - b * g;
    match x {
        ExtReal::NegInf => 0.0,
        ExtReal::PosInf => {
            if b > 0.0 {
                0.0
            } else {
                -c
            }
        }
        ExtReal::Finite(x) => {
            if c == 0.0 {
                return 0.0;
            }
            // e^x/((βe^x+1)(e^x+γ)) = 1/((βe^x+1)(1+γe^{−x}))
            let d1 = b * x.exp() + 1.0;
            let d2 = 1.0 + g * (-x).exp();
            -c / (d1 * d2)
        }
    }
}

/// The interval J_d of attainable log-ratios at a node with d children,
/// returned with ascending endpoints.
pub fn j_interval(spec: &GibbsSpec, d: usize) -> (ExtReal, ExtReal) {
    let l = spec.lambda().ln();
    let d = d as f64;
    let by_beta = if spec.beta() == 0.0 && d > 0.0 {
        ExtReal::NegInf
    } else if d == 0.0 {
        ExtReal::Finite(l)
    } else {
        ExtReal::Finite(l + d * spec.beta().ln())
    };
    let by_gamma = ExtReal::Finite(l - d * spec.gamma().ln());
    if by_beta.as_f64() <= by_gamma.as_f64() {
        (by_beta, by_gamma)
    } else {
        (by_gamma, by_beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// A self-avoiding walk (the root included).
    Saw,
    /// A walk closing a cycle; always a pinned leaf.
    CycleCloser,
}

#[derive(Clone, Debug)]
pub struct TsawNode {
    pub origin: Vertex,
    pub parent: Option<usize>,
    pub depth: usize,
    pub pin: Option<Spin>,
    pub kind: NodeKind,
    pub children: Vec<usize>,
}

/// Tree of self-avoiding walks rooted at a vertex. Nodes are stored in DFS
/// pre-order, so every child has a larger index than its parent. Copies of
/// pinned vertices are leaves.
#[derive(Clone, Debug)]
pub struct TsawTree {
    nodes: Vec<TsawNode>,
}

impl TsawTree {
    pub fn nodes(&self) -> &[TsawNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_vertex(&self) -> Vertex {
        self.nodes[0].origin
    }

    /// The walk generating node `id`, from the root.
    pub fn walk(&self, id: usize) -> Vec<Vertex> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(i) = cur {
            out.push(self.nodes[i].origin);
            cur = self.nodes[i].parent;
        }
        out.reverse();
        out
    }
}

pub fn build_tsaw(g: &Graph, w: Vertex, pin: &Pinning) -> Result<TsawTree> {
    build_tsaw_capped(g, w, pin, DEFAULT_NODE_CAP)
}

pub fn build_tsaw_capped(g: &Graph, w: Vertex, pin: &Pinning, cap: usize) -> Result<TsawTree> {
    if w >= g.n() {
        return invalid(format!("root {w} out of range"));
    }
    if pin.contains(w) {
        return invalid(format!("root {w} is pinned"));
    }
    struct Builder<'a> {
        g: &'a Graph,
        pin: &'a Pinning,
        cap: usize,
        nodes: Vec<TsawNode>,
        walk: Vec<Vertex>,
        pos: Vec<Option<usize>>,
    }
    impl Builder<'_> {
        fn push(&mut self, parent: usize, origin: Vertex, pin: Option<Spin>, kind: NodeKind) -> Result<usize> {
            if self.nodes.len() >= self.cap {
                return Err(Error::Resource {
                    what: "self-avoiding-walk tree nodes",
                    size: self.cap as u128 + 1,
                    cap: self.cap as u128,
                });
            }
            let id = self.nodes.len();
            let depth = self.nodes[parent].depth + 1;
            self.nodes.push(TsawNode {
                origin,
                parent: Some(parent),
                depth,
                pin,
                kind,
                children: Vec::new(),
            });
            self.nodes[parent].children.push(id);
            Ok(id)
        }

        fn expand(&mut self, id: usize) -> Result<()> {
            let r = self.walk.len() - 1;
            let v = self.walk[r];
            for &x in self.g.neighbors(v) {
                match self.pos[x] {
                    Some(j) if j + 2 <= r => {
                        // closing walk v_0..v_r x has length r+1 and returns to v_j
                        let spin = if self.walk[j + 1] > self.walk[r] {
                            Spin::Minus
                        } else {
                            Spin::Plus
                        };
                        self.push(id, x, Some(spin), NodeKind::CycleCloser)?;
                    }
                    Some(_) => {}
                    None => {
                        let fixed = self.pin.get(x);
                        let child = self.push(id, x, fixed, NodeKind::Saw)?;
                        if fixed.is_none() {
                            self.pos[x] = Some(r + 1);
                            self.walk.push(x);
                            self.expand(child)?;
                            self.walk.pop();
                            self.pos[x] = None;
                        }
                    }
                }
            }
            Ok(())
        }
    }
    let mut b = Builder {
        g,
        pin,
        cap,
        nodes: vec![TsawNode {
            origin: w,
            parent: None,
            depth: 0,
            pin: None,
            kind: NodeKind::Saw,
            children: Vec::new(),
        }],
        walk: vec![w],
        pos: vec![None; g.n()],
    };
    b.pos[w] = Some(0);
    b.expand(0)?;
    Ok(TsawTree { nodes: b.nodes })
}

/// Per-node subtree log-ratios.
#[derive(Clone, Debug)]
pub struct RatioTable(pub Vec<ExtReal>);

impl RatioTable {
    pub fn root(&self) -> ExtReal {
        self.0[0]
    }
}

pub fn compute_ratios(tree: &TsawTree, spec: &GibbsSpec) -> RatioTable {
    let mut vals = vec![ExtReal::NegInf; tree.len()];
    let mut buf = Vec::new();
    for id in (0..tree.len()).rev() {
        let node = &tree.nodes[id];
        vals[id] = match node.pin {
            Some(Spin::Plus) => ExtReal::PosInf,
            Some(Spin::Minus) => ExtReal::NegInf,
            None => {
                buf.clear();
                buf.extend(node.children.iter().map(|&c| vals[c]));
                recursion_log(spec, &buf)
            }
        };
    }
    RatioTable(vals)
}

/// α for the edge from each node to its parent (0 at the root).
pub fn edge_weights(tree: &TsawTree, table: &RatioTable, spec: &GibbsSpec) -> Vec<f64> {
    tree.nodes
        .iter()
        .enumerate()
        .map(|(id, node)| match node.parent {
            None => 0.0,
            Some(p) if node.pin.is_some() || tree.nodes[p].pin.is_some() => 0.0,
            Some(_) => recursion_h(spec, table.0[id]),
        })
        .collect()
}

/// Path sums from the root to the copies of each vertex, plus the root
/// log-ratio.
pub fn influence_row(
    g: &Graph,
    spec: &GibbsSpec,
    pin: &Pinning,
    w: Vertex,
    cap: usize,
) -> Result<(Vec<f64>, ExtReal)> {
    let tree = build_tsaw_capped(g, w, pin, cap)?;
    let table = compute_ratios(&tree, spec);
    let alpha = edge_weights(&tree, &table, spec);
    let mut prod = vec![0.0; tree.len()];
    prod[0] = 1.0;
    let mut row = vec![0.0; g.n()];
    for id in 1..tree.len() {
        let p = tree.nodes[id].parent.unwrap_or(0);
        prod[id] = prod[p] * alpha[id];
        row[tree.nodes[id].origin] += prod[id];
    }
    Ok((row, table.root()))
}

/// μ_w(+1 | pin) from the root of T_SAW(G, w).
pub fn tsaw_marginal(spec: &GibbsSpec, g: &Graph, pin: &Pinning, w: Vertex) -> Result<f64> {
    let tree = build_tsaw(g, w, pin)?;
    Ok(compute_ratios(&tree, spec).root().to_marginal())
}

pub fn influence_matrix_tsaw(spec: &GibbsSpec, g: &Graph, pin: &Pinning) -> Result<LabeledMatrix<Vertex>> {
    influence_matrix_tsaw_capped(spec, g, pin, DEFAULT_NODE_CAP)
}

pub fn influence_matrix_tsaw_capped(
    spec: &GibbsSpec,
    g: &Graph,
    pin: &Pinning,
    cap: usize,
) -> Result<LabeledMatrix<Vertex>> {
    pin.check(g)?;
    let free = pin.free_vertices(g);
    let rows: Vec<(Vec<f64>, ExtReal)> = free
        .par_iter()
        .map(|&w| influence_row(g, spec, pin, w, cap))
        .collect::<Result<_>>()?;
    let nondeg: Vec<bool> = rows.iter().map(|(_, r)| r.is_finite()).collect();
    let mut m = LabeledMatrix::zeros(free.clone(), free.clone())?;
    for (i, (row, _)) in rows.iter().enumerate() {
        if !nondeg[i] {
            continue;
        }
        for (j, &u) in free.iter().enumerate() {
            if !nondeg[j] {
                continue;
            }
            m.set(i, j, if i == j { 1.0 } else { row[u] });
        }
    }
    Ok(m)
}

/// Graphviz rendering with pins, log-ratios and edge weights.
pub fn to_dot(tree: &TsawTree, table: Option<&RatioTable>, weights: Option<&[f64]>) -> String {
    let mut s = String::from("digraph tsaw {\n  node [shape=circle];\n");
    for (id, node) in tree.nodes.iter().enumerate() {
        let mut label = node.origin.to_string();
        if let Some(p) = node.pin {
            let _ = write!(label, "\\n{p}");
        }
        if let Some(t) = table {
            let _ = write!(label, "\\nlogR={:.4}", t.0[id].as_f64());
        }
        let shape = match node.kind {
            NodeKind::CycleCloser => ", shape=box",
            NodeKind::Saw if node.pin.is_some() => ", shape=doublecircle",
            NodeKind::Saw => "",
        };
        let _ = writeln!(s, "  n{id} [label=\"{label}\"{shape}];");
        if let Some(p) = node.parent {
            match weights {
                Some(w) => {
                    let _ = writeln!(s, "  n{p} -> n{id} [label=\"{:.4}\"];", w[id]);
                }
                None => {
                    let _ = writeln!(s, "  n{p} -> n{id};");
                }
            }
        }
    }
    s.push_str("}\n");
    s
}
