//! Published constants, worked examples and closed-form relations.

use gibbs_spectral::catalog::{complete, cycle, path, random_connected, star};
use gibbs_spectral::extensions::{extend_graph, extend_graph_pq, extended_gibbs, VertexName};
use gibbs_spectral::gibbs::influence_matrix_exact;
use gibbs_spectral::regimes::{
    delta_c, hc_potential_params, ising_uniqueness_interval, lambda_c, verify_potential_contraction,
};
use gibbs_spectral::spectral::{adjacency_spectral_radius, knb_matrix};
use gibbs_spectral::{GibbsSpec, Pinning, SawWalk, Spin};

#[test]
fn knb_shift_example_on_five_vertex_path() {
    let g = path(5);
    let h = knb_matrix(&g, 2).unwrap().to_labeled();
    let w = |v: &[usize]| SawWalk::new(&g, v.to_vec()).unwrap();
    let (p, q, r) = (w(&[0, 1, 2]), w(&[1, 2, 3]), w(&[2, 3, 4]));
    assert_eq!(h.get_by_label(&p, &q), Some(1));
    assert_eq!(h.get_by_label(&q, &r), Some(1));
    assert_eq!(h.get_by_label(&p, &r), Some(0));
}

#[test]
fn influence_diagonal_is_one() {
    for spec in [GibbsSpec::hard_core(1.0).unwrap(), GibbsSpec::ising(0.3, 2.0).unwrap()] {
        let g = random_connected(6, 0.4, 1);
        let m = influence_matrix_exact(&spec, &g, &Pinning::new()).unwrap();
        for i in 0..m.nrows() {
            assert_eq!(m.get(i, i), 1.0);
        }
    }
}

#[test]
fn lambda_c_at_two_and_delta_c_at_four() {
    assert!((lambda_c(2.0).unwrap() - 4.0).abs() < 1e-10);
    assert!((delta_c(4.0).unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn potential_boundedness_constant() {
    for lambda in [0.5, 1.0, 2.0, 0.9 * lambda_c(3.0).unwrap()] {
        let spec = GibbsSpec::hard_core(lambda).unwrap();
        let p = hc_potential_params(lambda).unwrap();
        let rep = verify_potential_contraction(&spec, &p, 6, 10_000, 3).unwrap();
        assert!(rep.worst_violation <= 1e-9);
        assert!(rep.boundedness_max <= lambda / (1.0 + lambda) + 1e-9);
    }
}

#[test]
fn delta_below_threshold_ratio_under_slack() {
    // for λ < (1−ε)λ_c(R): 1/Δc(λ) ≤ (1−z)/R with z > 0 depending on ε only
    for eps in [0.1, 0.3, 0.6] {
        let mut zmin = f64::INFINITY;
        for r in [1.5, 2.0, 3.0, 5.0, 10.0, 40.0] {
            let lambda = (1.0 - eps) * lambda_c(r).unwrap();
            let dc = delta_c(lambda).unwrap();
            zmin = zmin.min(1.0 - r / dc);
        }
        assert!(zmin > 0.0, "eps={eps} z={zmin}");
    }
}

#[test]
fn uniqueness_interval_matches_open_form() {
    let u = ising_uniqueness_interval(3.0, 1e-300).unwrap();
    assert!((u.lo - 0.5).abs() < 1e-12 && (u.hi - 2.0).abs() < 1e-12);
}

#[test]
fn adjacency_radius_between_sqrt_degree_and_degree() {
    for seed in 0..20 {
        let g = random_connected(9, 0.3, seed);
        let r = adjacency_spectral_radius(&g).unwrap().value;
        let d = g.max_degree() as f64;
        assert!(d.sqrt() <= r + 1e-9 && r <= d + 1e-9);
    }
}

#[test]
fn split_vertex_pin_follows_successor_order() {
    // star with center 0 and leaves 1,2,3; walk 0→2 detaches leaves 1 and 3
    let g = star(3);
    let pin = Pinning::new();
    let ext = extended_gibbs(&GibbsSpec::hard_core(1.0).unwrap(), &g, &pin, &SawWalk::new(&g, vec![0, 2]).unwrap()).unwrap();
    let n = g.n();
    let spins: Vec<(usize, Spin)> = ext
        .graph
        .split_vertices()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.neighbor, ext.pin.get(n + i).unwrap()))
        .collect();
    assert_eq!(spins, vec![(1, Spin::Plus), (3, Spin::Minus)]);
}

#[test]
fn pq_extension_order_does_not_matter() {
    let g = cycle(10);
    let p = SawWalk::new(&g, vec![0, 1]).unwrap();
    let q = SawWalk::new(&g, vec![5, 6]).unwrap();
    let a = extend_graph_pq(&g, &p, &q).unwrap();
    let b = extend_graph_pq(&g, &q, &p).unwrap();
    assert_eq!(a.canonical_edges(), b.canonical_edges());
    let e = extend_graph(&complete(4), &SawWalk::new(&complete(4), vec![0, 1, 2]).unwrap()).unwrap();
    assert!(e.canonical_edges().iter().any(|(x, y)| matches!(x, VertexName::Split { .. }) || matches!(y, VertexName::Split { .. })));
}
