//! Library results checked against independent reference computations:
//! a naive enumerator, dense nalgebra decompositions and a DFS walk counter.

use std::collections::BTreeMap;

use gibbs_spectral::catalog::{complete, cycle, grid, path, random_catalog, random_connected, star};
use gibbs_spectral::dynamics::{estimate_partition_function, exact_transition_matrix, ZOptions};
use gibbs_spectral::gibbs::{
    b_marginal_bound, exact_partition, exact_summary, influence_matrix_exact, random_feasible_pinning,
    BBoundOptions,
};
use gibbs_spectral::graph::count_saws;
use gibbs_spectral::spectral::{adjacency_spectral_radius, knb_matrix, spectral_radius_sym, DEFAULT_TOL};
use gibbs_spectral::tsaw::{influence_matrix_tsaw, tsaw_marginal};
use gibbs_spectral::{GibbsSpec, Graph, Pinning, Spin, Vertex};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Weights of every configuration consistent with `pin`, by direct products.
fn naive_weights(spec: &GibbsSpec, g: &Graph, pin: &Pinning) -> Vec<(Vec<bool>, f64)> {
    let n = g.n();
    let mut out = Vec::new();
    for mask in 0u32..1 << n {
        let plus: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
        if pin.iter().any(|(v, s)| plus[v] != s.is_plus()) {
            continue;
        }
        let np = plus.iter().filter(|&&p| p).count() as i32;
        let (mut pp, mut mm) = (0, 0);
        for (a, b) in g.edges() {
            match (plus[a], plus[b]) {
                (true, true) => pp += 1,
                (false, false) => mm += 1,
                _ => {}
            }
        }
        let w = spec.lambda().powi(np) * spec.beta().powi(pp) * spec.gamma().powi(mm);
        out.push((plus, w));
    }
    out
}

fn naive_influence(spec: &GibbsSpec, g: &Graph, pin: &Pinning) -> BTreeMap<(Vertex, Vertex), f64> {
    let ws = naive_weights(spec, g, pin);
    let free: Vec<Vertex> = (0..g.n()).filter(|&v| !pin.contains(v)).collect();
    let mass = |f: &dyn Fn(&[bool]) -> bool| ws.iter().filter(|(c, _)| f(c)).map(|(_, w)| w).sum::<f64>();
    let z = mass(&|_| true);
    let degenerate = |v: Vertex| {
        let p = mass(&|c| c[v]);
        p == 0.0 || p == z
    };
    let mut out = BTreeMap::new();
    for &w in &free {
        for &u in &free {
            let val = if degenerate(w) || degenerate(u) {
                0.0
            } else if w == u {
                1.0
            } else {
                mass(&|c| c[w] && c[u]) / mass(&|c| c[w]) - mass(&|c| !c[w] && c[u]) / mass(&|c| !c[w])
            };
            out.insert((w, u), val);
        }
    }
    out
}

fn test_graphs() -> Vec<Graph> {
    let mut gs = vec![path(4), cycle(5), complete(4), star(3), grid(2, 3)];
    gs.extend(random_catalog(12, 3, 8, 77));
    gs
}

fn test_specs() -> Vec<GibbsSpec> {
    vec![
        GibbsSpec::hard_core(0.5).unwrap(),
        GibbsSpec::hard_core(2.0).unwrap(),
        GibbsSpec::ising(0.4, 1.0).unwrap(),
        GibbsSpec::ising(2.5, 0.7).unwrap(),
        GibbsSpec::new(0.3, 1.5, 1.2).unwrap(),
    ]
}

#[test]
fn influence_matches_naive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for g in test_graphs() {
        for spec in test_specs() {
            for round in 0..3 {
                let pin = if round == 0 {
                    Pinning::new()
                } else {
                    random_feasible_pinning(&spec, &g, g.n() / 2, &mut rng)
                };
                let oracle = naive_influence(&spec, &g, &pin);
                let exact = influence_matrix_exact(&spec, &g, &pin).unwrap();
                let tree = influence_matrix_tsaw(&spec, &g, &pin).unwrap();
                for (&(w, u), &val) in &oracle {
                    let e = exact.get_by_label(&w, &u).unwrap();
                    let t = tree.get_by_label(&w, &u).unwrap();
                    assert!((e - val).abs() < 1e-9, "exact {e} vs {val} at ({w},{u}) {spec:?}");
                    assert!((t - val).abs() < 1e-9, "tsaw {t} vs {val} at ({w},{u}) {spec:?}");
                }
            }
        }
    }
}

#[test]
fn partition_and_marginals_match_naive_enumeration() {
    for g in test_graphs() {
        for spec in test_specs() {
            let ws = naive_weights(&spec, &g, &Pinning::new());
            let z: f64 = ws.iter().map(|x| x.1).sum();
            let s = exact_summary(&spec, &g, &Pinning::new()).unwrap();
            assert!((s.z / z - 1.0).abs() < 1e-12);
            for v in 0..g.n() {
                let p: f64 = ws.iter().filter(|(c, _)| c[v]).map(|x| x.1).sum::<f64>() / z;
                assert!((s.marginals[&v] - p).abs() < 1e-12);
                assert!((tsaw_marginal(&spec, &g, &Pinning::new(), v).unwrap() - p).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn adjacency_radius_matches_dense_eigensolver() {
    for g in test_graphs() {
        let n = g.n();
        let a = DMatrix::from_fn(n, n, |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 });
        let oracle = a.clone().symmetric_eigen().eigenvalues.iter().fold(0.0f64, |m, x: &f64| m.max(x.abs()));
        let r = adjacency_spectral_radius(&g).unwrap();
        assert!((r.value - oracle).abs() < 1e-8, "{} vs {oracle}", r.value);
        let phi = r.perron.unwrap();
        let av: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)] * phi[j]).sum()).collect();
        for i in 0..n {
            assert!((av[i] - r.value * phi[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn star_s3_radius_is_sqrt3() {
    let r = adjacency_spectral_radius(&star(3)).unwrap().value;
    assert!((r - 3f64.sqrt()).abs() < 1e-9);
}

#[test]
fn sigma_matches_dense_svd() {
    for g in [complete(4), grid(2, 3), random_connected(6, 0.4, 3)] {
        for k in 1..=2 {
            let h = knb_matrix(&g, k).unwrap();
            for l in 1..=3 {
                let p = h.power(l).unwrap();
                let d = p.nrows();
                let m = DMatrix::from_fn(d, d, |i, j| p.get(i, j) as f64);
                let top = m.singular_values().iter().fold(0.0f64, |a, &b| a.max(b));
                assert!((h.sigma(l).unwrap() - top).abs() < 1e-7 * top.max(1.0));
            }
        }
    }
    assert!((knb_matrix(&complete(4), 1).unwrap().sigma(1).unwrap() - 2.0).abs() < 1e-9);
}

/// Number of k-non-backtracking walks of `l` steps from walk `p` ending in
/// the (k+1)-vertex window `q`.
fn dfs_walk_count(g: &Graph, p: &[Vertex], q: &[Vertex], l: usize) -> u64 {
    if l == 0 {
        return (p == q) as u64;
    }
    let last = *p.last().unwrap();
    let mut total = 0;
    for &v in g.neighbors(last) {
        if p.contains(&v) {
            continue;
        }
        let mut next: Vec<Vertex> = p[1..].to_vec();
        next.push(v);
        total += dfs_walk_count(g, &next, q, l - 1);
    }
    total
}

#[test]
fn knb_powers_match_dfs_counter() {
    for g in [cycle(6), complete(4), grid(2, 4), random_connected(7, 0.35, 11), random_connected(8, 0.3, 2)] {
        for k in 1..=2 {
            let h = knb_matrix(&g, k).unwrap();
            for l in 1..=5 {
                let p = h.power(l).unwrap();
                for (i, a) in h.walks().iter().enumerate() {
                    for (j, b) in h.walks().iter().enumerate() {
                        assert_eq!(p.get(i, j), dfs_walk_count(&g, a.vertices(), b.vertices(), l));
                    }
                }
            }
        }
    }
}

#[test]
fn saw_counts_match_dfs() {
    fn count(g: &Graph, walk: &mut Vec<Vertex>, k: usize) -> u64 {
        if walk.len() == k + 1 {
            return 1;
        }
        let last = *walk.last().unwrap();
        let mut t = 0;
        for &v in g.neighbors(last) {
            if !walk.contains(&v) {
                walk.push(v);
                t += count(g, walk, k);
                walk.pop();
            }
        }
        t
    }
    let g = random_connected(8, 0.4, 9);
    for v in 0..8 {
        for k in 0..=7 {
            assert_eq!(count_saws(&g, v, k), count(&g, &mut vec![v], k));
        }
    }
}

#[test]
fn stationary_vector_matches_gibbs_by_matrix_power() {
    for (g, spec) in [
        (complete(2), GibbsSpec::hard_core(1.0).unwrap()),
        (cycle(4), GibbsSpec::ising(2.0, 0.8).unwrap()),
        (path(4), GibbsSpec::hard_core(0.5).unwrap()),
    ] {
        let p = exact_transition_matrix(&spec, &g).unwrap();
        let d = p.nrows();
        let m = DMatrix::from_fn(d, d, |i, j| p.get(i, j));
        let mut power = m.clone();
        for _ in 0..12 {
            power = &power * &power;
        }
        let ws = naive_weights(&spec, &g, &Pinning::new());
        let z: f64 = ws.iter().map(|x| x.1).sum();
        for (j, &mask) in p.col_labels().iter().enumerate() {
            let w = ws
                .iter()
                .find(|(c, _)| (0..g.n()).all(|v| c[v] == (mask >> v & 1 == 1)))
                .unwrap()
                .1;
            assert!((power[(0, j)] - w / z).abs() < 1e-10);
        }
    }
}

#[test]
fn k2_stationary_is_uniform_over_three_states() {
    let p = exact_transition_matrix(&GibbsSpec::hard_core(1.0).unwrap(), &complete(2)).unwrap();
    let pi = gibbs_spectral::dynamics::stationary_distribution(&p).unwrap();
    assert_eq!(pi.len(), 3);
    assert!(pi.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
}

#[test]
fn b_bound_k2_is_one_third() {
    let b = b_marginal_bound(&GibbsSpec::hard_core(1.0).unwrap(), &complete(2), &BBoundOptions::default()).unwrap();
    assert!((b - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn influence_spectral_radius_matches_dense_eigenvalues() {
    let g = random_connected(7, 0.35, 4);
    let spec = GibbsSpec::hard_core(1.3).unwrap();
    let pin = Pinning::from_pairs([(0, Spin::Minus)]);
    let i = influence_matrix_exact(&spec, &g, &pin).unwrap();
    let d = i.nrows();
    let m = DMatrix::from_fn(d, d, |a, b| i.get(a, b));
    let oracle = m.complex_eigenvalues().iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let r = gibbs_spectral::gibbs::influence_spectral_radius(&spec, &g, &pin, &i).unwrap();
    assert!((r - oracle).abs() < 1e-8, "{r} vs {oracle}");
    let sym = gibbs_spectral::gibbs::symmetrized_influence(&spec, &g, &pin, &i).unwrap();
    assert!(spectral_radius_sym(&sym, DEFAULT_TOL).is_ok());
}

#[test]
fn c6_hard_core_estimates_within_five_percent() {
    let g = cycle(6);
    let spec = GibbsSpec::hard_core(0.5).unwrap();
    let exact = exact_partition(&spec, &g, &Pinning::new()).unwrap();
    let hits = (0..20)
        .filter(|&seed| {
            let est = estimate_partition_function(&spec, &g, 0.05, 0.9, seed, &ZOptions::default()).unwrap();
            (est.z_hat / exact - 1.0).abs() <= 0.05
        })
        .count();
    assert!(hits >= 18, "{hits}/20");
}
