//! Two-spin Gibbs parameters, pinnings and the exact enumeration engine.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::graph::{Graph, Vertex};
use crate::spectral::{spectral_radius_sym, LabeledMatrix, DEFAULT_TOL};

/// Default cap on free vertices for exhaustive enumeration.
pub const DEFAULT_ENUM_CAP: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Minus,
    Plus,
}

impl Spin {
    pub fn is_plus(self) -> bool {
        self == Spin::Plus
    }

    pub fn sign(self) -> i8 {
        if self.is_plus() {
            1
        } else {
            -1
        }
    }

    pub fn from_sign(s: i64) -> Option<Spin> {
        match s {
            1 => Some(Spin::Plus),
            -1 => Some(Spin::Minus),
            _ => None,
        }
    }

    pub fn flip(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_plus() { "+1" } else { "-1" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    HardCore,
    Ising,
    General,
}

/// Parameters (β, γ, λ) with 0 ≤ β ≤ γ, γ > 0, λ > 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsSpec {
    beta: f64,
    gamma: f64,
    lambda: f64,
}

impl GibbsSpec {
    pub fn new(beta: f64, gamma: f64, lambda: f64) -> Result<Self> {
        let finite = beta.is_finite() && gamma.is_finite() && lambda.is_finite();
        if !finite || beta < 0.0 || gamma <= 0.0 || lambda <= 0.0 {
            return domain(format!(
                "need beta >= 0, gamma > 0, lambda > 0 (got beta={beta}, gamma={gamma}, lambda={lambda})"
            ));
        }
        if beta > gamma {
            return domain(format!("need beta <= gamma (got beta={beta}, gamma={gamma})"));
        }
        Ok(GibbsSpec {
            beta,
            gamma,
            lambda,
        })
    }

    pub fn hard_core(lambda: f64) -> Result<Self> {
        Self::new(0.0, 1.0, lambda)
    }

    pub fn ising(beta: f64, lambda: f64) -> Result<Self> {
        Self::new(beta, beta, lambda)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kind(&self) -> ModelKind {
        if self.beta == 0.0 && self.gamma == 1.0 {
            ModelKind::HardCore
        } else if self.beta == self.gamma {
            ModelKind::Ising
        } else {
            ModelKind::General
        }
    }

    /// Unnormalized conditional weights (w(+), w(−)) of a vertex whose
    /// neighbours hold `plus` (+1)-spins and `minus` (−1)-spins.
    pub fn local_weights(&self, plus: usize, minus: usize) -> (f64, f64) {
        (
            self.lambda * self.beta.powi(plus as i32),
            self.gamma.powi(minus as i32),
        )
    }
}

/// Partial spin assignment (Λ, τ).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pinning {
    spins: BTreeMap<Vertex, Spin>,
}

impl Pinning {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Vertex, Spin)>) -> Self {
        Pinning {
            spins: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, v: Vertex, s: Spin) {
        self.spins.insert(v, s);
    }

    pub fn get(&self, v: Vertex) -> Option<Spin> {
        self.spins.get(&v).copied()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.spins.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, Spin)> + '_ {
        self.spins.iter().map(|(&v, &s)| (v, s))
    }

    pub fn check(&self, g: &Graph) -> Result<()> {
        match self.spins.keys().find(|&&v| v >= g.n()) {
            Some(v) => invalid(format!("pinned vertex {v} out of range")),
            None => Ok(()),
        }
    }

    /// Free vertices of `g` in ascending order.
    pub fn free_vertices(&self, g: &Graph) -> Vec<Vertex> {
        (0..g.n()).filter(|v| !self.contains(*v)).collect()
    }

    /// Pinning extended by one more assignment.
    pub fn with(&self, v: Vertex, s: Spin) -> Pinning {
        let mut p = self.clone();
        p.insert(v, s);
        p
    }
}

/// Parses lines `v +1` / `v -1` (`#` comments). File vertex ids are
/// translated through `labels` (the loader's relabeling map).
pub fn parse_pinning<R: BufRead>(reader: R, labels: &[u64]) -> Result<Pinning> {
    let index: BTreeMap<u64, Vertex> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut pin = Pinning::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(format!("expected 'v +1' or 'v -1', found {body:?}")));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|_| err(format!("bad vertex id {:?}", fields[0])))?;
        let v = *index
            .get(&id)
            .ok_or_else(|| err(format!("vertex {id} not in graph")))?;
        let spin = match fields[1] {
            "+1" | "1" | "+" => Spin::Plus,
            "-1" | "-" => Spin::Minus,
            other => return Err(err(format!("bad spin {other:?}"))),
        };
        if pin.get(v).is_some_and(|s| s != spin) {
            return Err(err(format!("vertex {id} pinned twice with different spins")));
        }
        pin.insert(v, spin);
    }
    Ok(pin)
}

/// λ^{#+}·β^{#++ edges}·γ^{#−− edges}, with 0^0 = 1.
pub fn weight(spec: &GibbsSpec, g: &Graph, sigma: &[Spin]) -> Result<f64> {
    if sigma.len() != g.n() {
        return invalid("configuration length differs from vertex count");
    }
    let plus = sigma.iter().filter(|s| s.is_plus()).count();
    let (mut pp, mut mm) = (0, 0);
    for (u, v) in g.edges() {
        match (sigma[u], sigma[v]) {
            (Spin::Plus, Spin::Plus) => pp += 1,
            (Spin::Minus, Spin::Minus) => mm += 1,
            _ => {}
        }
    }
    if pp > 0 && spec.beta == 0.0 {
        return Ok(0.0);
    }
    Ok(spec.lambda.powi(plus as i32) * spec.beta.powi(pp) * spec.gamma.powi(mm))
}

/// Gray-code enumerator over the configurations consistent with a pinning.
pub struct Enumerator<'a> {
    spec: GibbsSpec,
    g: &'a Graph,
    free: Vec<Vertex>,
    base: Vec<Spin>,
}

impl<'a> Enumerator<'a> {
    pub fn new(spec: &GibbsSpec, g: &'a Graph, pin: &Pinning, cap: usize) -> Result<Self> {
        pin.check(g)?;
        let free = pin.free_vertices(g);
        if free.len() > cap.min(62) {
            return Err(Error::Resource {
                what: "free vertices for exact enumeration",
                size: free.len() as u128,
                cap: cap.min(62) as u128,
            });
        }
        let base = (0..g.n()).map(|v| pin.get(v).unwrap_or(Spin::Minus)).collect();
        Ok(Enumerator {
            spec: *spec,
            g,
            free,
            base,
        })
    }

    pub fn free(&self) -> &[Vertex] {
        &self.free
    }

    /// Calls `visit(weight, mask)` for every supported configuration; bit i
    /// of `mask` is set iff `free[i]` holds +1.
    pub fn for_each(&self, mut visit: impl FnMut(f64, u64)) {
        let g = self.g;
        let n = g.n();
        let m = g.edge_count();
        let mut sigma = self.base.clone();
        let (mut a, mut b, mut c) = (0usize, 0usize, 0usize);
        a += sigma.iter().filter(|s| s.is_plus()).count();
        for (u, v) in g.edges() {
            match (sigma[u], sigma[v]) {
                (Spin::Plus, Spin::Plus) => b += 1,
                (Spin::Minus, Spin::Minus) => c += 1,
                _ => {}
            }
        }
        let pow_table = |x: f64, len: usize| -> Vec<f64> {
            let mut t = Vec::with_capacity(len + 1);
            let mut acc = 1.0;
            for _ in 0..=len {
                t.push(acc);
                acc *= x;
            }
            t
        };
        let lam = pow_table(self.spec.lambda, n);
        let bet = pow_table(self.spec.beta, m);
        let gam = pow_table(self.spec.gamma, m);
        let mut mask = 0u64;
        let f = self.free.len();
        let total = 1u64 << f;
        for step in 0..total {
            if step > 0 {
                let j = step.trailing_zeros() as usize;
                let v = self.free[j];
                let old = sigma[v];
                for &x in g.neighbors(v) {
                    match (old, sigma[x]) {
                        (Spin::Plus, Spin::Plus) => b -= 1,
                        (Spin::Minus, Spin::Minus) => c -= 1,
                        _ => {}
                    }
                    match (old.flip(), sigma[x]) {
                        (Spin::Plus, Spin::Plus) => b += 1,
                        (Spin::Minus, Spin::Minus) => c += 1,
                        _ => {}
                    }
                }
                if old.is_plus() {
                    a -= 1;
                } else {
                    a += 1;
                }
                sigma[v] = old.flip();
                mask ^= 1 << j;
            }
            let w = lam[a] * bet[b] * gam[c];
            if w > 0.0 {
                visit(w, mask);
            }
        }
    }
}

/// Z, per-vertex marginals and the local marginal lower bound for one pinning.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactSummary {
    pub z: f64,
    /// μ_v(+1) for each free vertex.
    pub marginals: BTreeMap<Vertex, f64>,
    /// Smallest supported conditional marginal under this pinning.
    pub b_bound: f64,
    /// Free vertices whose marginal is exactly 0 or 1.
    pub degenerate: Vec<Vertex>,
}

impl ExactSummary {
    pub fn is_feasible(&self) -> bool {
        self.z > 0.0
    }
}

pub fn exact_partition(spec: &GibbsSpec, g: &Graph, pin: &Pinning) -> Result<f64> {
    let e = Enumerator::new(spec, g, pin, DEFAULT_ENUM_CAP)?;
    let mut z = 0.0;
    e.for_each(|w, _| z += w);
    Ok(z)
}

pub fn exact_summary(spec: &GibbsSpec, g: &Graph, pin: &Pinning) -> Result<ExactSummary> {
    exact_summary_capped(spec, g, pin, DEFAULT_ENUM_CAP)
}

pub fn exact_summary_capped(
    spec: &GibbsSpec,
    g: &Graph,
    pin: &Pinning,
    cap: usize,
) -> Result<ExactSummary> {
    let e = Enumerator::new(spec, g, pin, cap)?;
    let f = e.free().len();
    let mut z = 0.0;
    let mut plus = vec![0.0; f];
    let mut support = 0u64;
    let mut plus_count = vec![0u64; f];
    e.for_each(|w, mask| {
        z += w;
        support += 1;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            plus[i] += w;
            plus_count[i] += 1;
            bits &= bits - 1;
        }
    });
    let mut marginals = BTreeMap::new();
    let mut degenerate = Vec::new();
    let mut b_bound = if z > 0.0 { 1.0f64 } else { 0.0 };
    for (i, &v) in e.free().iter().enumerate() {
        if z == 0.0 {
            continue;
        }
        let mu = (plus[i] / z).clamp(0.0, 1.0);
        let (has_plus, has_minus) = (plus_count[i] > 0, plus_count[i] < support);
        let mu = match (has_plus, has_minus) {
            (false, _) => 0.0,
            (_, false) => 1.0,
            _ => mu,
        };
        if !(has_plus && has_minus) {
            degenerate.push(v);
        }
        if has_plus {
            b_bound = b_bound.min(mu);
        }
        if has_minus {
            b_bound = b_bound.min(1.0 - mu);
        }
        marginals.insert(v, mu);
    }
    Ok(ExactSummary {
        z,
        marginals,
        b_bound,
        degenerate,
    })
}

/// P[σ(v)=+1 | pin].
pub fn exact_marginal(spec: &GibbsSpec, g: &Graph, pin: &Pinning, v: Vertex) -> Result<f64> {
    if pin.contains(v) {
        return invalid(format!("vertex {v} is pinned"));
    }
    let s = exact_summary(spec, g, pin)?;
    if s.z == 0.0 {
        return Err(Error::Degenerate("pinning has probability zero".into()));
    }
    Ok(s.marginals[&v])
}

/// Brute-force influence matrix over the free vertices.
pub fn influence_matrix_exact(
    spec: &GibbsSpec,
    g: &Graph,
    pin: &Pinning,
) -> Result<LabeledMatrix<Vertex>> {
    influence_matrix_exact_capped(spec, g, pin, DEFAULT_ENUM_CAP)
}

pub fn influence_matrix_exact_capped(
    spec: &GibbsSpec,
    g: &Graph,
    pin: &Pinning,
    cap: usize,
) -> Result<LabeledMatrix<Vertex>> {
    let e = Enumerator::new(spec, g, pin, cap)?;
    let free = e.free().to_vec();
    let f = free.len();
    // joint[w][u]: weight with w=+ and u=+; cross[w][u]: w=− and u=+.
    let mut joint = vec![0.0; f * f];
    let mut cross = vec![0.0; f * f];
    let mut z = 0.0;
    let mut support = 0u64;
    let mut plus_count = vec![0u64; f];
    e.for_each(|wt, mask| {
        z += wt;
        support += 1;
        let mut bits = mask;
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            plus_count[u] += 1;
            for w in 0..f {
                if mask >> w & 1 == 1 {
                    joint[w * f + u] += wt;
                } else {
                    cross[w * f + u] += wt;
                }
            }
            bits &= bits - 1;
        }
    });
    if z == 0.0 {
        return Err(Error::Degenerate("pinning has probability zero".into()));
    }
    let nondeg: Vec<bool> = plus_count.iter().map(|&c| c > 0 && c < support).collect();
    let mut m = LabeledMatrix::zeros(free.clone(), free)?;
    for w in 0..f {
        if !nondeg[w] {
            continue;
        }
        let zp = joint[w * f + w];
        let zm = z - zp;
        for u in 0..f {
            if !nondeg[u] {
                continue;
            }
            let val = if u == w {
                1.0
            } else {
                joint[w * f + u] / zp - cross[w * f + u] / zm
            };
            m.set(w, u, val);
        }
    }
    Ok(m)
}

/// M·I·M⁻¹ with M(v,v) = √(μ_v(+1)μ_v(−1)), restricted to nondegenerate
/// free vertices. Symmetric up to rounding.
pub fn symmetrized_influence(
    spec: &GibbsSpec,
    g: &Graph,
    pin: &Pinning,
    infl: &LabeledMatrix<Vertex>,
) -> Result<LabeledMatrix<Vertex>> {
    let s = exact_summary(spec, g, pin)?;
    if !s.is_feasible() {
        return Err(Error::Degenerate("pinning has probability zero".into()));
    }
    let keep: Vec<Vertex> = s
        .marginals
        .iter()
        .filter(|(v, _)| !s.degenerate.contains(v))
        .map(|(&v, _)| v)
        .collect();
    let scale: Vec<f64> = keep.iter().map(|v| (s.marginals[v] * (1.0 - s.marginals[v])).sqrt()).collect();
    let mut out = LabeledMatrix::zeros(keep.clone(), keep.clone())?;
    for (a, w) in keep.iter().enumerate() {
        for (b, u) in keep.iter().enumerate() {
            let x = infl
                .get_by_label(w, u)
                .ok_or_else(|| Error::InvalidInput(format!("influence matrix lacks entry ({w},{u})")))?;
            out.set(a, b, scale[a] * x / scale[b]);
        }
    }
    Ok(out)
}

/// ρ(I) computed on the symmetrized form (averaged with its transpose to
/// remove rounding asymmetry).
pub fn influence_spectral_radius(
    spec: &GibbsSpec,
    g: &Graph,
    pin: &Pinning,
    infl: &LabeledMatrix<Vertex>,
) -> Result<f64> {
    let s = symmetrized_influence(spec, g, pin, infl)?;
    if s.nrows() == 0 {
        return Ok(0.0);
    }
    let t = s.transpose();
    let mut sym = s.clone();
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            sym.set(i, j, 0.5 * (s.get(i, j) + t.get(i, j)));
        }
    }
    Ok(spectral_radius_sym(&sym, DEFAULT_TOL)?.value)
}

/// Single influence entry I(w,u) under the pinning.
pub fn influence_entry_exact(
    spec: &GibbsSpec,
    g: &Graph,
    pin: &Pinning,
    w: Vertex,
    u: Vertex,
) -> Result<f64> {
    let e = Enumerator::new(spec, g, pin, DEFAULT_ENUM_CAP)?;
    let pos = |v: Vertex| {
        e.free()
            .iter()
            .position(|&x| x == v)
            .ok_or_else(|| Error::InvalidInput(format!("vertex {v} is pinned")))
    };
    let (iw, iu) = (pos(w)?, pos(u)?);
    let (mut z, mut zw, mut zwu, mut zu) = (0.0, 0.0, 0.0, 0.0);
    let (mut n, mut nw, mut nu) = (0u64, 0u64, 0u64);
    e.for_each(|wt, mask| {
        let (bw, bu) = (mask >> iw & 1 == 1, mask >> iu & 1 == 1);
        z += wt;
        n += 1;
        if bw {
            zw += wt;
            nw += 1;
        }
        if bu {
            zu += wt;
            nu += 1;
        }
        if bw && bu {
            zwu += wt;
        }
    });
    if z == 0.0 {
        return Err(Error::Degenerate("pinning has probability zero".into()));
    }
    let nondeg = |c: u64| c > 0 && c < n;
    if !nondeg(nw) || !nondeg(nu) {
        return Ok(0.0);
    }
    if w == u {
        return Ok(1.0);
    }
    Ok(zwu / zw - (zu - zwu) / (z - zw))
}

/// Options for [`b_marginal_bound`].
#[derive(Clone, Debug)]
pub struct BBoundOptions {
    /// Largest pinned-set size considered (default n−1).
    pub pin_budget: Option<usize>,
    /// Exhaustive over all pinnings up to this many vertices.
    pub exhaustive_max_n: usize,
    /// Number of sampled pinnings beyond the exhaustive range.
    pub samples: usize,
    pub seed: u64,
}

impl Default for BBoundOptions {
    fn default() -> Self {
        BBoundOptions {
            pin_budget: None,
            exhaustive_max_n: 10,
            samples: 1000,
            seed: 0,
        }
    }
}

/// Largest b with every supported conditional marginal ≥ b over the
/// considered pinnings (the empty pinning always included).
pub fn b_marginal_bound(spec: &GibbsSpec, g: &Graph, opts: &BBoundOptions) -> Result<f64> {
    let n = g.n();
    let budget = opts.pin_budget.unwrap_or(n.saturating_sub(1)).min(n.saturating_sub(1));
    let mut best = exact_summary(spec, g, &Pinning::new())?.b_bound;
    let mut consider = |pin: &Pinning| -> Result<()> {
        let s = exact_summary(spec, g, pin)?;
        if s.is_feasible() {
            best = best.min(s.b_bound);
        }
        Ok(())
    };
    if n <= opts.exhaustive_max_n {
        for subset in 1u64..(1 << n) {
            let size = subset.count_ones() as usize;
            if size > budget {
                continue;
            }
            let members: Vec<Vertex> = (0..n).filter(|&v| subset >> v & 1 == 1).collect();
            for spins in 0u64..(1 << size) {
                let pin = Pinning::from_pairs(members.iter().enumerate().map(|(i, &v)| {
                    (v, if spins >> i & 1 == 1 { Spin::Plus } else { Spin::Minus })
                }));
                consider(&pin)?;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.samples {
            let mut pin = Pinning::new();
            for v in 0..n {
                if pin.len() < budget && rng.random_bool(0.5) {
                    pin.insert(v, if rng.random_bool(0.5) { Spin::Plus } else { Spin::Minus });
                }
            }
            consider(&pin)?;
        }
    }
    Ok(best)
}

/// Random pinning with positive probability: a uniformly sized random
/// subset of at most `max_size` vertices with random spins, repaired so
/// that no two pinned +1 vertices are adjacent when β = 0.
pub fn random_feasible_pinning<R: Rng>(
    spec: &GibbsSpec,
    g: &Graph,
    max_size: usize,
    rng: &mut R,
) -> Pinning {
    let n = g.n();
    let size = if max_size == 0 { 0 } else { rng.random_range(1..=max_size.min(n)) };
    let mut order: Vec<Vertex> = (0..n).collect();
    for i in 0..size {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut pin = Pinning::new();
    for &v in &order[..size] {
        let mut s = if rng.random_bool(0.5) { Spin::Plus } else { Spin::Minus };
        if spec.beta() == 0.0 && s.is_plus() && g.neighbors(v).iter().any(|&x| pin.get(x) == Some(Spin::Plus)) {
            s = Spin::Minus;
        }
        pin.insert(v, s);
    }
    pin
}
