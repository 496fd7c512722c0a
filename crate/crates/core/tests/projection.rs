use eqles::group::{enumerate_group, ORDER};
use eqles::projection::{
    cached_basis, commutation_violation, project, projector_matrix, LayerKind, SignedPerm,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_weights(kind: LayerKind, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..kind.weight_len()).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn unit_eigenvalue_counts() {
    for (kind, rank) in [(LayerKind::Lift, 9), (LayerKind::Inner, 48), (LayerKind::Final, 9)] {
        assert_eq!(kind.expected_rank(), rank);
        let p = projector_matrix(kind);
        assert!((p.trace() - rank as f64).abs() < 1e-10, "{kind:?}: trace {}", p.trace());
        assert!(p.idempotence_defect() < 1e-12);
        assert!(p.symmetry_defect() < 1e-12);
        let b = cached_basis(kind);
        assert_eq!(b.rank(), rank);
        assert!(b.orthonormality_defect() < 1e-12);
        b.verify().unwrap();
    }
}

#[test]
fn layer_dimensions() {
    assert_eq!((LayerKind::Lift.out_dim(), LayerKind::Lift.in_dim()), (ORDER, 9));
    assert_eq!((LayerKind::Inner.out_dim(), LayerKind::Inner.in_dim()), (ORDER, ORDER));
    assert_eq!((LayerKind::Final.out_dim(), LayerKind::Final.in_dim()), (9, ORDER));
    for kind in LayerKind::ALL {
        assert_eq!(LayerKind::from_tag(kind.tag()), Some(kind));
    }
}

#[test]
fn unprojected_weights_do_not_commute() {
    for kind in LayerKind::ALL {
        assert!(commutation_violation(kind, &random_weights(kind, 1)) > 1e-3);
    }
}

#[test]
fn representations_match_the_group() {
    for g in enumerate_group() {
        let reg = SignedPerm::regular(g);
        let e: Vec<f64> = (0..ORDER).map(|j| j as f64).collect();
        assert_eq!(reg.apply(&e), g.regular_rep().apply(&e));
        let t = SignedPerm::tensor(g);
        let v: Vec<f64> = (0..9).map(|j| j as f64 + 1.0).collect();
        let expected = g.tensor_rep().apply(&std::array::from_fn(|i| v[i]));
        assert_eq!(t.apply(&v), expected.to_vec());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projection_commutes_and_is_idempotent(k in 0usize..3, seed in any::<u64>()) {
        let kind = LayerKind::ALL[k];
        let w = random_weights(kind, seed);
        let p = project(kind, &w).unwrap();
        prop_assert!(commutation_violation(kind, &p) < 1e-12);
        let pp = project(kind, &p).unwrap();
        let d = p.iter().zip(&pp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn projection_is_linear(k in 0usize..3, s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0) {
        let kind = LayerKind::ALL[k];
        let (w1, w2) = (random_weights(kind, s1), random_weights(kind, s2));
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + y).collect();
        let (p1, p2, pm) = (
            project(kind, &w1).unwrap(),
            project(kind, &w2).unwrap(),
            project(kind, &mix).unwrap(),
        );
        for i in 0..pm.len() {
            prop_assert!((pm[i] - (a * p1[i] + p2[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_expansions_are_equivariant(k in 0usize..3, seed in any::<u64>()) {
        let kind = LayerKind::ALL[k];
        let b = cached_basis(kind);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..b.rank()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = b.expand(&theta).unwrap();
        prop_assert!(commutation_violation(kind, &w) < 1e-12);
        let mut back = vec![0.0; b.rank()];
        b.pull_back(&w, &mut back);
        for i in 0..theta.len() {
            prop_assert!((back[i] - theta[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn wrong_weight_length_is_rejected() {
    assert!(project(LayerKind::Inner, &[0.0; 10]).is_err());
}

#[test]
fn basis_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lift.bin");
    let b = cached_basis(LayerKind::Lift);
    b.save(&path).unwrap();
    let back = eqles::projection::SharedBasis::load(&path).unwrap();
    assert_eq!(back.rank(), b.rank());
    for c in 0..b.rank() {
        assert_eq!(back.column(c), b.column(c));
    }
}
