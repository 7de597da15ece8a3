//! Labeled dense matrices, symmetric power iteration, the adjacency matrix
//! and the k-non-backtracking matrix with its walk-reversal involution.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{all_saws, connective_constant_k, Graph, SawWalk, Vertex};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_ITER_CAP: usize = 100_000;
/// Maximum number of walk labels a non-backtracking matrix may carry.
pub const DEFAULT_LABEL_CAP: usize = 20_000;

/// Types usable as matrix labels.
pub trait Label: Clone + Eq + Hash + Debug {}
impl<T: Clone + Eq + Hash + Debug> Label for T {}

/// Dense row-major matrix whose rows and columns carry labels.
#[derive(Clone, Debug)]
pub struct LabeledMatrix<L, T = f64> {
    row_labels: Vec<L>,
    col_labels: Vec<L>,
    row_index: HashMap<L, usize>,
    col_index: HashMap<L, usize>,
    data: Vec<T>,
}

fn index_of<L: Label>(labels: &[L], what: &str) -> Result<HashMap<L, usize>> {
    let mut map = HashMap::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        if map.insert(l.clone(), i).is_some() {
            return invalid(format!("duplicate {what} label {l:?}"));
        }
    }
    Ok(map)
}

impl<L: Label, T: Copy + Default> LabeledMatrix<L, T> {
    pub fn zeros(rows: Vec<L>, cols: Vec<L>) -> Result<Self> {
        let data = vec![T::default(); rows.len() * cols.len()];
        Self::from_data(rows, cols, data)
    }

    pub fn from_data(rows: Vec<L>, cols: Vec<L>, data: Vec<T>) -> Result<Self> {
        if data.len() != rows.len() * cols.len() {
            return invalid(format!(
                "data length {} does not match {}x{}",
                data.len(),
                rows.len(),
                cols.len()
            ));
        }
        Ok(LabeledMatrix {
            row_index: index_of(&rows, "row")?,
            col_index: index_of(&cols, "column")?,
            row_labels: rows,
            col_labels: cols,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn ncols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[L] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[L] {
        &self.col_labels
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        let c = self.ncols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.ncols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let c = self.ncols();
        self.data[i * c + j] = v;
    }

    pub fn row_of(&self, l: &L) -> Option<usize> {
        self.row_index.get(l).copied()
    }

    pub fn col_of(&self, l: &L) -> Option<usize> {
        self.col_index.get(l).copied()
    }

    pub fn get_by_label(&self, r: &L, c: &L) -> Option<T> {
        Some(self.get(self.row_of(r)?, self.col_of(c)?))
    }

    pub fn set_by_label(&mut self, r: &L, c: &L, v: T) -> Result<()> {
        match (self.row_of(r), self.col_of(c)) {
            (Some(i), Some(j)) => {
                self.set(i, j, v);
                Ok(())
            }
            _ => invalid(format!("unknown label pair ({r:?}, {c:?})")),
        }
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = (self.nrows(), self.ncols());
        let mut data = Vec::with_capacity(r * c);
        for j in 0..c {
            for i in 0..r {
                data.push(self.get(i, j));
            }
        }
        LabeledMatrix {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            row_index: self.col_index.clone(),
            col_index: self.row_index.clone(),
            data,
        }
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> LabeledMatrix<L, U> {
        LabeledMatrix {
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
            row_index: self.row_index.clone(),
            col_index: self.col_index.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    fn same_square_labels(&self) -> bool {
        self.row_labels == self.col_labels
    }
}

impl<L: Label, T: Copy + Default + PartialEq> LabeledMatrix<L, T> {
    /// Exact symmetry test (integer matrices).
    pub fn is_symmetric_exact(&self) -> bool {
        self.same_square_labels()
            && (0..self.nrows()).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

impl<L: Label> LabeledMatrix<L, u64> {
    /// Exact product; errors on label mismatch or overflow.
    pub fn checked_matmul(&self, other: &Self) -> Result<Self> {
        if self.col_labels != other.row_labels {
            return invalid("inner label sets differ");
        }
        let (r, m, c) = (self.nrows(), self.ncols(), other.ncols());
        let mut data = vec![0u64; r * c];
        for i in 0..r {
            for k in 0..m {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..c {
                    let prod = a.checked_mul(other.get(k, j)).ok_or_else(overflow)?;
                    let cell = &mut data[i * c + j];
                    *cell = cell.checked_add(prod).ok_or_else(overflow)?;
                }
            }
        }
        LabeledMatrix::from_data(self.row_labels.clone(), other.col_labels.clone(), data)
    }

    pub fn to_f64(&self) -> LabeledMatrix<L, f64> {
        self.map(|x| x as f64)
    }

    pub fn max_entry(&self) -> u64 {
        self.data.iter().copied().max().unwrap_or(0)
    }
}

fn overflow() -> Error {
    Error::Resource {
        what: "integer matrix entry",
        size: u64::MAX as u128 + 1,
        cap: u64::MAX as u128,
    }
}

impl<L: Label> LabeledMatrix<L, f64> {
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.same_square_labels()
            && (0..self.nrows())
                .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Largest entrywise absolute difference; labels must agree.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.row_labels != other.row_labels || self.col_labels != other.col_labels {
            return invalid("label sets differ");
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs())))
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn mul_vec_t(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(i)) {
                    *o += a * xi;
                }
            }
        }
    }

    fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }
}

/// Result of a symmetric power iteration.
#[derive(Clone, Debug)]
pub struct SpectralRadius {
    pub value: f64,
    /// Unit positive principal eigenvector, for nonnegative input.
    pub perron: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Deterministic start vector. All-ones for nonnegative operators; a
/// low-discrepancy perturbation otherwise, since all-ones can be an exact
/// non-dominant eigenvector of a signed matrix.
fn start_vector(dim: usize, nonneg: bool) -> Vec<f64> {
    let golden = 0.618_033_988_749_895_f64;
    let mut x: Vec<f64> = (0..dim)
        .map(|i| {
            if nonneg {
                1.0
            } else {
                1.0 + ((i as f64 + 1.0) * golden).fract()
            }
        })
        .collect();
    normalize(&mut x);
    x
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// Top eigenvalue of a positive semidefinite operator by power iteration.
/// Stops once the residual is below `tol·max(1, θ)`; at the cap a residual
/// below `√tol·max(1, θ)` is still accepted because the Rayleigh quotient
/// error is quadratic in the residual.
pub fn top_eigen_psd(
    dim: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    nonneg: bool,
    tol: f64,
    cap: usize,
) -> Result<(f64, Vec<f64>, usize)> {
    if dim == 0 {
        return Ok((0.0, Vec::new(), 0));
    }
    let mut x = start_vector(dim, nonneg);
    let mut y = vec![0.0; dim];
    let mut residual = f64::INFINITY;
    let mut theta = 0.0;
    for it in 1..=cap {
        apply(&x, &mut y);
        theta = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - theta * a).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = theta.abs().max(1.0);
        if residual <= tol * scale {
            return Ok((theta.max(0.0), x, it));
        }
        if normalize(&mut y) == 0.0 {
            return Ok((0.0, x, it));
        }
        std::mem::swap(&mut x, &mut y);
    }
    if residual <= tol.sqrt() * theta.abs().max(1.0) {
        return Ok((theta.max(0.0), x, cap));
    }
    Err(Error::Convergence(format!(
        "power iteration residual {residual:.3e} after {cap} iterations (estimate {theta})"
    )))
}

/// Spectral radius of a symmetric matrix by power iteration on its square.
pub fn spectral_radius_sym<L: Label>(m: &LabeledMatrix<L>, tol: f64) -> Result<SpectralRadius> {
    spectral_radius_sym_capped(m, tol, DEFAULT_ITER_CAP)
}

pub fn spectral_radius_sym_capped<L: Label>(
    m: &LabeledMatrix<L>,
    tol: f64,
    cap: usize,
) -> Result<SpectralRadius> {
    if !m.is_symmetric(tol.max(1e-12) * m.max_abs().max(1.0)) {
        return invalid("spectral_radius_sym requires a symmetric matrix");
    }
    let dim = m.nrows();
    let nonneg = m.is_nonnegative();
    let mut tmp = vec![0.0; dim];
    let apply = |x: &[f64], out: &mut [f64]| {
        let mut t = vec![0.0; x.len()];
        m.mul_vec(x, &mut t);
        m.mul_vec(&t, out);
    };
    let (theta, x, iterations) = top_eigen_psd(dim, apply, nonneg, tol, cap)?;
    let value = theta.sqrt();
    let perron = if nonneg && value > 0.0 {
        m.mul_vec(&x, &mut tmp);
        let mut v: Vec<f64> = x.iter().zip(&tmp).map(|(a, b)| a + b / value).collect();
        normalize(&mut v);
        let v: Vec<f64> = v.into_iter().map(|c| c.max(0.0)).collect();
        Some(v)
    } else {
        None
    };
    Ok(SpectralRadius {
        value,
        perron,
        iterations,
    })
}

/// Operator 2-norm (largest singular value) of a rectangular matrix.
pub fn operator_norm<L: Label>(m: &LabeledMatrix<L>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let nonneg = m.is_nonnegative();
    let rows = m.nrows();
    let apply = |x: &[f64], out: &mut [f64]| {
        let mut t = vec![0.0; rows];
        m.mul_vec(x, &mut t);
        m.mul_vec_t(&t, out);
    };
    let (theta, _, _) = top_eigen_psd(m.ncols(), apply, nonneg, DEFAULT_TOL, DEFAULT_ITER_CAP)?;
    Ok(theta.sqrt())
}

/// 0/1 adjacency matrix labeled by vertex.
pub fn adjacency_matrix(g: &Graph) -> LabeledMatrix<Vertex, u64> {
    let labels: Vec<Vertex> = (0..g.n()).collect();
    let mut m = LabeledMatrix::zeros(labels.clone(), labels).expect("distinct labels");
    for (u, v) in g.edges() {
        m.set(u, v, 1);
        m.set(v, u, 1);
    }
    m
}

/// ρ(A_G) together with the Perron vector.
pub fn adjacency_spectral_radius(g: &Graph) -> Result<SpectralRadius> {
    spectral_radius_sym(&adjacency_matrix(g).to_f64(), DEFAULT_TOL)
}

/// The k-non-backtracking matrix stored as successor lists over E_k.
#[derive(Clone, Debug)]
pub struct KnbMatrix {
    k: usize,
    walks: Vec<SawWalk>,
    succ: Vec<Vec<usize>>,
    rev: Vec<usize>,
}

pub fn knb_matrix(g: &Graph, k: usize) -> Result<KnbMatrix> {
    knb_matrix_capped(g, k, DEFAULT_LABEL_CAP)
}

pub fn knb_matrix_capped(g: &Graph, k: usize, label_cap: usize) -> Result<KnbMatrix> {
    if k == 0 {
        return invalid("non-backtracking matrix needs k >= 1");
    }
    let walks = all_saws(g, k, label_cap)?;
    if walks.is_empty() {
        return Err(Error::Degenerate(format!(
            "graph has no self-avoiding walks of length {k}"
        )));
    }
    let index: HashMap<&[Vertex], usize> = walks
        .iter()
        .enumerate()
        .map(|(i, w)| (w.vertices(), i))
        .collect();
    let mut succ = Vec::with_capacity(walks.len());
    let mut buf = Vec::with_capacity(k + 1);
    for w in &walks {
        let vs = w.vertices();
        let mut row = Vec::new();
        for &x in g.neighbors(w.end()) {
            if vs.contains(&x) {
                continue;
            }
            buf.clear();
            buf.extend_from_slice(&vs[1..]);
            buf.push(x);
            row.push(index[buf.as_slice()]);
        }
        succ.push(row);
    }
    let rev = walks
        .iter()
        .map(|w| index[w.reverse().vertices()])
        .collect();
    Ok(KnbMatrix {
        k,
        walks,
        succ,
        rev,
    })
}

impl KnbMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn walks(&self) -> &[SawWalk] {
        &self.walks
    }

    pub fn dim(&self) -> usize {
        self.walks.len()
    }

    /// Indices of walks Q with H(P,Q)=1.
    pub fn successors(&self, p: usize) -> &[usize] {
        &self.succ[p]
    }

    /// Index of the reversed walk.
    pub fn reversal(&self, p: usize) -> usize {
        self.rev[p]
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.succ) {
            *o = s.iter().map(|&q| x[q]).sum();
        }
    }

    fn apply_t(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (p, s) in self.succ.iter().enumerate() {
            for &q in s {
                out[q] += x[p];
            }
        }
    }

    /// Dense 0/1 form.
    pub fn to_labeled(&self) -> LabeledMatrix<SawWalk, u64> {
        let mut m = LabeledMatrix::zeros(self.walks.clone(), self.walks.clone())
            .expect("walk labels are distinct");
        for (p, s) in self.succ.iter().enumerate() {
            for &q in s {
                m.set(p, q, 1);
            }
        }
        m
    }

    /// H^l in exact integer arithmetic (H^0 = identity).
    pub fn power(&self, l: usize) -> Result<LabeledMatrix<SawWalk, u64>> {
        let d = self.dim();
        let mut cur = vec![0u64; d * d];
        for i in 0..d {
            cur[i * d + i] = 1;
        }
        for _ in 0..l {
            let mut next = vec![0u64; d * d];
            for (p, s) in self.succ.iter().enumerate() {
                let row = &mut next[p * d..(p + 1) * d];
                for &q in s {
                    for (r, c) in row.iter_mut().zip(&cur[q * d..(q + 1) * d]) {
                        *r = r.checked_add(*c).ok_or_else(overflow)?;
                    }
                }
            }
            cur = next;
        }
        LabeledMatrix::from_data(self.walks.clone(), self.walks.clone(), cur)
    }

    /// H^l·R in exact integer arithmetic.
    pub fn power_times_r(&self, l: usize) -> Result<LabeledMatrix<SawWalk, u64>> {
        let hl = self.power(l)?;
        let d = self.dim();
        let mut data = vec![0u64; d * d];
        for p in 0..d {
            for q in 0..d {
                data[p * d + q] = hl.get(p, self.rev[q]);
            }
        }
        LabeledMatrix::from_data(self.walks.clone(), self.walks.clone(), data)
    }

    /// σ_{k,l} = ‖H^l‖₂, as the spectral radius of the symmetric H^l·R.
    pub fn sigma(&self, l: usize) -> Result<f64> {
        if l == 0 {
            return invalid("sigma needs l >= 1");
        }
        let d = self.dim();
        let apply_s = |x: &[f64], out: &mut [f64]| {
            let mut a: Vec<f64> = (0..d).map(|p| x[self.rev[p]]).collect();
            let mut b = vec![0.0; d];
            for _ in 0..l {
                self.apply(&a, &mut b);
                std::mem::swap(&mut a, &mut b);
            }
            out.copy_from_slice(&a);
        };
        let apply_b = |x: &[f64], out: &mut [f64]| {
            let mut t = vec![0.0; d];
            apply_s(x, &mut t);
            apply_s(&t, out);
        };
        let (theta, _, _) = top_eigen_psd(d, apply_b, true, DEFAULT_TOL, DEFAULT_ITER_CAP)?;
        Ok(theta.sqrt())
    }

    /// ‖H^l‖₂ through (H^l)ᵀH^l; an independent route to [`KnbMatrix::sigma`].
    pub fn power_norm_direct(&self, l: usize) -> Result<f64> {
        let d = self.dim();
        let apply_b = |x: &[f64], out: &mut [f64]| {
            let mut a = x.to_vec();
            let mut b = vec![0.0; d];
            for _ in 0..l {
                self.apply(&a, &mut b);
                std::mem::swap(&mut a, &mut b);
            }
            for _ in 0..l {
                self.apply_t(&a, &mut b);
                std::mem::swap(&mut a, &mut b);
            }
            out.copy_from_slice(&a);
        };
        let (theta, _, _) = top_eigen_psd(d, apply_b, true, DEFAULT_TOL, DEFAULT_ITER_CAP)?;
        Ok(theta.sqrt())
    }
}

/// Permutation matrix sending each walk label to its reverse.
pub fn involution_r(walks: &[SawWalk]) -> Result<LabeledMatrix<SawWalk, u64>> {
    let mut m = LabeledMatrix::zeros(walks.to_vec(), walks.to_vec())?;
    for (i, w) in walks.iter().enumerate() {
        let j = m
            .col_of(&w.reverse())
            .ok_or_else(|| Error::InvalidInput(format!("reverse of walk {w} is not a label")))?;
        m.set(i, j, 1);
    }
    Ok(m)
}

pub fn sigma_kl(g: &Graph, k: usize, l: usize) -> Result<f64> {
    knb_matrix(g, k)?.sigma(l)
}

pub fn hk_power_root_norm(g: &Graph, k: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return invalid("N must be >= 1");
    }
    Ok(sigma_kl(g, k, n)?.powf(1.0 / n as f64))
}

/// Spectral summary of a graph.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectralReport {
    pub rho_adjacency: f64,
    pub connective_k: f64,
    pub hk_norms: Vec<(usize, f64)>,
    pub hk_root_norms: Vec<(usize, f64)>,
}

/// ρ(A), 𝔡_k and ‖H^l‖₂ (with its l-th root) for l = 1..=n_max.
pub fn spectral_report(g: &Graph, k: usize, n_max: usize) -> Result<SpectralReport> {
    let rho_adjacency = adjacency_spectral_radius(g)?.value;
    let connective_k = connective_constant_k(g, k)?;
    let h = knb_matrix(g, k)?;
    let mut hk_norms = Vec::with_capacity(n_max);
    let mut hk_root_norms = Vec::with_capacity(n_max);
    for l in 1..=n_max {
        let s = h.sigma(l)?;
        hk_norms.push((l, s));
        hk_root_norms.push((l, s.powf(1.0 / l as f64)));
    }
    Ok(SpectralReport {
        rho_adjacency,
        connective_k,
        hk_norms,
        hk_root_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{complete, cycle, path, star};
    use nalgebra::DMatrix;

    fn dense_sym_radius(m: &LabeledMatrix<SawWalk, u64>) -> f64 {
        let d = m.nrows();
        let a = DMatrix::from_fn(d, d, |i, j| m.get(i, j) as f64);
        a.symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    #[test]
    fn adjacency_examples() {
        let a = adjacency_matrix(&complete(2));
        assert_eq!(a.data(), &[0, 1, 1, 0]);
        let c3 = adjacency_matrix(&cycle(3));
        assert_eq!(c3.data(), &[0, 1, 1, 1, 0, 1, 1, 1, 0]);
        let p3 = adjacency_matrix(&path(3));
        assert_eq!(p3.data(), &[0, 1, 0, 1, 0, 1, 0, 1, 0]);
    }

    #[test]
    fn adjacency_radius_examples() {
        for n in 3..9 {
            let r = adjacency_spectral_radius(&cycle(n)).unwrap();
            assert!((r.value - 2.0).abs() < 1e-9, "C{n}: {}", r.value);
            let k = adjacency_spectral_radius(&complete(n)).unwrap();
            assert!((k.value - (n as f64 - 1.0)).abs() < 1e-9);
        }
        let s = adjacency_spectral_radius(&star(3)).unwrap();
        assert!((s.value - 3f64.sqrt()).abs() < 1e-9);
        let phi = s.perron.unwrap();
        assert!(phi.iter().all(|&x| x > 0.0));
        assert!((norm(&phi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = LabeledMatrix::from_data(vec![0, 1], vec![0, 1], vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(spectral_radius_sym(&m, 1e-10).is_err());
    }

    #[test]
    fn labeled_lookup_agrees_with_index() {
        let m = LabeledMatrix::from_data(vec!['a', 'b'], vec!['x', 'y', 'z'], (0..6).collect::<Vec<u64>>())
            .unwrap();
        assert_eq!(m.get_by_label(&'b', &'y'), Some(m.get(1, 1)));
        assert_eq!(m.transpose().get_by_label(&'y', &'b'), Some(4));
        assert!(LabeledMatrix::<char, u64>::zeros(vec!['a', 'a'], vec!['x']).is_err());
    }

    #[test]
    fn knb_examples() {
        let c5 = knb_matrix(&cycle(5), 1).unwrap();
        assert!(c5.succ.iter().all(|s| s.len() == 1));
        let p3 = knb_matrix(&path(3), 1).unwrap().to_labeled();
        assert_eq!(p3.nrows(), 4);
        let p3g = path(3);
        let w = |v: &[usize]| SawWalk::new(&p3g, v.to_vec()).unwrap();
        assert_eq!(p3.get_by_label(&w(&[0, 1]), &w(&[1, 2])), Some(1));
        assert_eq!(p3.get_by_label(&w(&[2, 1]), &w(&[1, 0])), Some(1));
        assert_eq!(p3.data().iter().sum::<u64>(), 2);
        let g = path(5);
        let h3 = knb_matrix(&g, 2).unwrap().to_labeled();
        let w = |v: &[usize]| SawWalk::new(&g, v.to_vec()).unwrap();
        assert_eq!(h3.get_by_label(&w(&[0, 1, 2]), &w(&[1, 2, 3])), Some(1));
        assert_eq!(h3.get_by_label(&w(&[1, 2, 3]), &w(&[2, 3, 4])), Some(1));
        assert_eq!(h3.get_by_label(&w(&[0, 1, 2]), &w(&[2, 3, 4])), Some(0));
        assert!(knb_matrix(&complete(2), 2).is_err());
    }

    #[test]
    fn involution_examples() {
        let walks = knb_matrix(&complete(2), 1).unwrap().walks().to_vec();
        let r = involution_r(&walks).unwrap();
        assert_eq!(r.data(), &[0, 1, 1, 0]);
        let big = knb_matrix(&complete(4), 2).unwrap();
        let r = involution_r(big.walks()).unwrap();
        let rr = r.checked_matmul(&r).unwrap();
        assert!((0..rr.nrows()).all(|i| (0..rr.ncols()).all(|j| rr.get(i, j) == u64::from(i == j))));
        assert!((0..r.nrows()).all(|i| r.get(i, i) == 0));
        let not_closed = vec![big.walks()[0].clone()];
        assert!(involution_r(&not_closed).is_err());
    }

    #[test]
    fn sigma_examples() {
        for l in 1..5 {
            assert!((sigma_kl(&cycle(6), 1, l).unwrap() - 1.0).abs() < 1e-9);
        }
        let h = knb_matrix(&complete(4), 1).unwrap();
        assert!((h.sigma(1).unwrap() - 2.0).abs() < 1e-9);
        let oracle = dense_sym_radius(&h.power_times_r(1).unwrap());
        assert!((oracle - 2.0).abs() < 1e-9);
        assert!((hk_power_root_norm(&cycle(7), 1, 5).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sigma_matches_dense_oracle_and_direct_route() {
        for g in [star(3), complete(5), crate::catalog::grid(2, 3), crate::catalog::random_connected(7, 0.3, 4)] {
            for k in 1..=2 {
                let h = knb_matrix(&g, k).unwrap();
                for l in 1..=3 {
                    let s = h.sigma(l).unwrap();
                    let oracle = dense_sym_radius(&h.power_times_r(l).unwrap());
                    assert!((s - oracle).abs() < 1e-8, "{s} vs {oracle}");
                    assert!((s - h.power_norm_direct(l).unwrap()).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn operator_norm_of_signed_matrix() {
        let m = LabeledMatrix::from_data(vec![0, 1], vec![0, 1], vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        assert!((operator_norm(&m).unwrap() - 2.0).abs() < 1e-9);
        let r = spectral_radius_sym(&m, 1e-10).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn report_serializes_with_exact_field_names() {
        let rep = spectral_report(&cycle(6), 1, 3).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, vec!["connective_k", "hk_norms", "hk_root_norms", "rho_adjacency"]);
        assert!(obj["hk_norms"][0].as_array().unwrap().len() == 2);
    }
}
