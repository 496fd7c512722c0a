use eqles::grid::Grid;
use eqles::group::{
    act_on_physical_field, cayley_table, enumerate_group, GroupElement, PhysicalField, ORDER,
};
use eqles::tensor3::{flatten, matmul, transpose, Mat3, IDENTITY};
use proptest::prelude::*;

fn element() -> impl Strategy<Value = GroupElement> {
    (0usize..ORDER).prop_map(GroupElement::from_index)
}

fn as_f64(m: [[i32; 3]; 3]) -> Mat3 {
    m.map(|r| r.map(f64::from))
}

#[test]
fn census_by_determinant() {
    let dets: Vec<i32> = enumerate_group().iter().map(|g| g.matrix().determinant()).collect();
    assert_eq!(dets.len(), 48);
    assert_eq!(dets.iter().filter(|&&d| d == 1).count(), 24);
    assert_eq!(dets.iter().filter(|&&d| d == -1).count(), 24);
}

#[test]
fn all_signed_permutation_matrices_appear_once() {
    let mut seen = std::collections::HashSet::new();
    for g in enumerate_group() {
        let m = g.matrix().matrix();
        for row in m {
            assert_eq!(row.iter().map(|v| v.abs()).sum::<i32>(), 1);
        }
        assert!(seen.insert(m));
    }
    assert_eq!(seen.len(), 48);
}

#[test]
fn cayley_table_is_a_latin_square() {
    let t = cayley_table();
    for i in 0..ORDER {
        let mut row: Vec<usize> = t[i].to_vec();
        let mut col: Vec<usize> = (0..ORDER).map(|j| t[j][i]).collect();
        row.sort_unstable();
        col.sort_unstable();
        assert_eq!(row, (1..=48).collect::<Vec<_>>());
        assert_eq!(col, row);
    }
}

#[test]
fn first_and_forty_third_elements() {
    assert_eq!(GroupElement::IDENTITY.matrix().matrix_f64(), IDENTITY);
    assert_eq!(GroupElement::from_flat(1).unwrap(), GroupElement::IDENTITY);
    assert_eq!(
        GroupElement::from_flat(43).unwrap().matrix().matrix(),
        [[-1, 0, 0], [0, -1, 0], [0, 0, -1]]
    );
    assert!(GroupElement::from_flat(0).is_err());
    assert!(GroupElement::from_flat(49).is_err());
}

#[test]
fn flat_index_from_parts() {
    for g in enumerate_group() {
        let back = GroupElement::from_parts(g.perm_index(), g.sign_index()).unwrap();
        assert_eq!(back, g);
        assert_eq!(g.flat_index(), g.perm_index() + 6 * (g.sign_index() - 1));
    }
}

proptest! {
    #[test]
    fn composition_is_the_matrix_product(g in element(), h in element()) {
        let gh = g.compose(h).matrix().matrix();
        let prod = matmul(&as_f64(g.matrix().matrix()), &as_f64(h.matrix().matrix()));
        prop_assert_eq!(as_f64(gh), prod);
    }

    #[test]
    fn composition_is_associative(a in element(), b in element(), c in element()) {
        prop_assert_eq!(a.compose(b).compose(c), a.compose(b.compose(c)));
    }

    #[test]
    fn inverse_is_the_transpose(g in element()) {
        prop_assert_eq!(g.compose(g.inverse()), GroupElement::IDENTITY);
        prop_assert_eq!(g.inverse().compose(g), GroupElement::IDENTITY);
        prop_assert_eq!(
            as_f64(g.inverse().matrix().matrix()),
            transpose(&as_f64(g.matrix().matrix()))
        );
    }

    #[test]
    fn regular_representation_is_a_homomorphism(g in element(), h in element()) {
        let lhs = g.compose(h).regular_rep();
        let rhs = g.regular_rep().then_after(&h.regular_rep());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn tensor_representation_conjugates(g in element(), v in prop::array::uniform9(-2.0f64..2.0)) {
        let a: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| v[3 * i + j]));
        let r = g.matrix();
        let expected = flatten(&r.conjugate(&a));
        let got = g.tensor_rep().apply(&v);
        for k in 0..9 {
            prop_assert!((expected[k] - got[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn field_action_is_a_left_action(
        g in element(),
        h in element(),
        seed in prop::collection::vec(-1.0f64..1.0, 64 * 3),
    ) {
        let grid = Grid::periodic(4).unwrap();
        let v: Vec<[f64; 3]> = seed.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let f = PhysicalField::Vector(v);
        let two = act_on_physical_field(g, &act_on_physical_field(h, &f, &grid).unwrap(), &grid).unwrap();
        let one = act_on_physical_field(g.compose(h), &f, &grid).unwrap();
        prop_assert_eq!(two, one);
    }

    #[test]
    fn scalar_action_preserves_values(g in element(), s in prop::collection::vec(-1.0f64..1.0, 64)) {
        let grid = Grid::periodic(4).unwrap();
        let PhysicalField::Scalar(out) =
            act_on_physical_field(g, &PhysicalField::Scalar(s.clone()), &grid).unwrap()
        else {
            unreachable!()
        };
        let mut a = s.clone();
        let mut b = out;
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn wrong_field_length_is_rejected() {
    let grid = Grid::periodic(4).unwrap();
    let f = PhysicalField::Scalar(vec![0.0; 10]);
    assert!(act_on_physical_field(GroupElement::IDENTITY, &f, &grid).is_err());
}
