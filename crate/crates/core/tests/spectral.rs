use eqles::fft::{self, C64};
use eqles::grid::Grid;
use eqles::group::{act_on_physical_field, enumerate_group, PhysicalField};
use eqles::simulation::init_velocity;
use eqles::spectral::{
    self, act_on_spectral_field, dealias_velocity, derivative, in_dealias_band, leray_project,
    SpectralVelocity,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direct `n³`-term sum `û(k) = n⁻³ Σ_x u(x) e^{−2πi k·x/n}`.
fn naive_dft(u: &[f64], n: usize) -> Vec<C64> {
    let grid = Grid::periodic(n).unwrap();
    (0..grid.len())
        .map(|k| {
            let kk = grid.coords(k);
            let mut s = C64::default();
            for (x, v) in u.iter().enumerate() {
                let xx = grid.coords(x);
                let phase = (0..3).map(|a| (kk[a] * xx[a]) as f64).sum::<f64>() * std::f64::consts::TAU
                    / n as f64;
                s += C64::from_polar(*v, -phase);
            }
            s / grid.len() as f64
        })
        .collect()
}

fn random_physical(grid: Grid, seed: u64) -> [Vec<f64>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_transform_matches_direct_sum(seed in any::<u64>(), n in prop::sample::select(vec![4usize, 6])) {
        let grid = Grid::periodic(n).unwrap();
        let u = random_physical(grid, seed);
        let fast = fft::forward_real(&u[0], n);
        let slow = naive_dft(&u[0], n);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).norm() < 1e-14);
        }
        let pair = fft::forward_real_many(&[&u[1], &u[2]], n);
        let (s1, s2) = (naive_dft(&u[1], n), naive_dft(&u[2], n));
        for k in 0..grid.len() {
            prop_assert!((pair[0][k] - s1[k]).norm() < 1e-14);
            prop_assert!((pair[1][k] - s2[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn transform_round_trip(seed in any::<u64>()) {
        let grid = Grid::periodic(8).unwrap();
        let u = random_physical(grid, seed);
        let back = SpectralVelocity::from_physical(grid, &u).unwrap().to_physical();
        for c in 0..3 {
            for (a, b) in u[c].iter().zip(&back[c]) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn energy_is_the_physical_mean(seed in any::<u64>()) {
        let grid = Grid::periodic(8).unwrap();
        let u = random_physical(grid, seed);
        let mean = u.iter().flatten().map(|v| 0.5 * v * v).sum::<f64>() / grid.len() as f64;
        let e = SpectralVelocity::from_physical(grid, &u).unwrap().energy();
        prop_assert!((e - mean).abs() < 1e-13);
    }

    #[test]
    fn leray_projection_is_idempotent_and_solenoidal(seed in any::<u64>()) {
        let grid = Grid::new(8, 3.0).unwrap();
        let u = SpectralVelocity::from_physical(grid, &random_physical(grid, seed)).unwrap();
        let p = leray_project(&u);
        prop_assert!(p.max_divergence() < 1e-13);
        prop_assert!(leray_project(&p).relative_distance(&p) < 1e-14);
        prop_assert!(p.energy() <= u.energy() + 1e-15);
    }

    #[test]
    fn spectral_action_matches_physical_action(seed in 0u64..1000, e in 0usize..48) {
        let g = enumerate_group()[e];
        let grid = Grid::periodic(8).unwrap();
        let mut u = init_velocity(grid, seed, 0.5).unwrap();
        dealias_velocity(&mut u);
        let p = u.to_physical();
        let vec_field: Vec<[f64; 3]> = (0..grid.len()).map(|i| [p[0][i], p[1][i], p[2][i]]).collect();
        let PhysicalField::Vector(moved) =
            act_on_physical_field(g, &PhysicalField::Vector(vec_field), &grid).unwrap()
        else {
            unreachable!()
        };
        let spec = act_on_spectral_field(g, &u).to_physical();
        for i in 0..grid.len() {
            for c in 0..3 {
                prop_assert!((moved[i][c] - spec[c][i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn right_hand_side_is_equivariant(seed in 0u64..1000, e in 0usize..48) {
        let g = enumerate_group()[e];
        let grid = Grid::periodic(12).unwrap();
        let u = init_velocity(grid, seed, 0.5).unwrap();
        let lhs = spectral::rhs(&act_on_spectral_field(g, &u), None, None, 1e-2);
        let rhs = act_on_spectral_field(g, &spectral::rhs(&u, None, None, 1e-2));
        prop_assert!(lhs.relative_distance(&rhs) < 1e-13);
    }

    #[test]
    fn right_hand_side_conserves_energy_without_viscosity(seed in 0u64..1000) {
        let grid = Grid::periodic(12).unwrap();
        let u = init_velocity(grid, seed, 0.5).unwrap();
        let r = spectral::rhs(&u, None, None, 0.0);
        let transfer: f64 = (0..grid.len())
            .map(|k| (0..3).map(|c| (u.comp[c][k].conj() * r.comp[c][k]).re).sum::<f64>())
            .sum();
        prop_assert!(transfer.abs() < 1e-14);
    }
}

#[test]
fn derivative_of_a_single_mode() {
    let grid = Grid::new(8, 2.0).unwrap();
    let n = grid.n();
    let h = grid.spacing();
    let u: Vec<f64> = (0..grid.len())
        .map(|i| (2.0 * std::f64::consts::PI * 3.0 * grid.coords(i)[2] as f64 * h / 2.0).sin())
        .collect();
    let d = fft::inverse_real(&derivative(&grid, &fft::forward_real(&u, n), 2), n);
    for (i, v) in d.iter().enumerate() {
        let x = grid.coords(i)[2] as f64 * h;
        let expected = 3.0 * std::f64::consts::PI * (3.0 * std::f64::consts::PI * x).cos();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }
}

#[test]
fn dealias_band_follows_the_two_thirds_rule() {
    let grid = Grid::periodic(12).unwrap();
    for idx in 0..grid.len() {
        let k = grid.wavevector(idx);
        assert_eq!(in_dealias_band(&grid, idx), k.iter().all(|x| x.abs() <= 3));
    }
}

#[test]
fn nonlinear_stress_of_a_dealiased_field_is_the_product() {
    let grid = Grid::periodic(12).unwrap();
    let u = init_velocity(grid, 3, 0.5).unwrap();
    let p = u.to_physical();
    let s = spectral::nonlinear_stress(&u);
    for (slot, (i, j)) in eqles::tensor3::SYM_INDEX.iter().enumerate() {
        let prod: Vec<f64> = (0..grid.len()).map(|x| p[*i][x] * p[*j][x]).collect();
        let expected = fft::forward_real(&prod, 12);
        for k in 0..grid.len() {
            assert!((s.comp[slot][k] - expected[k]).norm() < 1e-14);
        }
    }
}
