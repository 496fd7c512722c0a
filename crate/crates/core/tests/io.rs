use std::path::Path;

use eqles::closures::{ClosureModel, ModelKind};
use eqles::error::Error;
use eqles::fft::C64;
use eqles::filtering::SnapshotPair;
use eqles::grid::Grid;
use eqles::io::{
    decode_model, decode_pair, decode_snapshot, encode_model, encode_pair, encode_snapshot, read_model,
    read_pair, read_snapshot, write_model, write_pair, write_snapshot,
};
use eqles::simulation::Snapshot;
use eqles::spectral::SpectralVelocity;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_velocity(grid: Grid, seed: u64) -> SpectralVelocity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comp = std::array::from_fn(|_| (0..grid.len()).map(|_| C64::new(rng.gen(), rng.gen())).collect());
    SpectralVelocity::from_components(grid, comp).unwrap()
}

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (1usize..5, 0.5f64..20.0).prop_map(|(h, l)| Grid::new(2 * h, l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn snapshots_round_trip(grid in grid_strategy(), seed in any::<u64>(), time in -10.0f64..10.0) {
        let s = Snapshot { time, u: random_velocity(grid, seed) };
        let bytes = encode_snapshot(&s);
        prop_assert_eq!(decode_snapshot(&bytes, Path::new("mem")).unwrap(), s);
    }

    #[test]
    fn pairs_round_trip(grid in grid_strategy(), seed in any::<u64>(), time in 0.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let p = SnapshotPair {
            time,
            u_bar: random_velocity(grid, seed),
            tau: (0..grid.len()).map(|_| std::array::from_fn(|_| rng.gen())).collect(),
        };
        prop_assert_eq!(decode_pair(&encode_pair(&p), Path::new("mem")).unwrap(), p);
    }

    #[test]
    fn truncated_files_are_rejected(cut in 0usize..200, seed in any::<u64>()) {
        let grid = Grid::periodic(2).unwrap();
        let bytes = encode_snapshot(&Snapshot { time: 1.0, u: random_velocity(grid, seed) });
        let cut = cut.min(bytes.len() - 1);
        let err = decode_snapshot(&bytes[..cut], Path::new("mem")).unwrap_err();
        prop_assert!(matches!(err, Error::Format { .. }), "{}", err);
    }

    #[test]
    fn models_round_trip_bit_exactly(k in 0usize..6, seed in any::<u64>()) {
        let kind = ModelKind::ALL[k];
        let m = ClosureModel::init(kind, &mut ChaCha8Rng::seed_from_u64(seed));
        let bytes = encode_model(&m);
        let back = decode_model(&bytes, Path::new("mem")).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(encode_model(&back), bytes);
    }
}

#[test]
fn files_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(4, 3.5).unwrap();
    let s = Snapshot { time: 0.25, u: random_velocity(grid, 3) };
    let sp = dir.path().join("s.bin");
    write_snapshot(&sp, &s).unwrap();
    assert_eq!(read_snapshot(&sp).unwrap(), s);
    let p = SnapshotPair { time: 0.5, u_bar: s.u.clone(), tau: vec![[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; grid.len()] };
    let pp = dir.path().join("p.bin");
    write_pair(&pp, &p).unwrap();
    assert_eq!(read_pair(&pp).unwrap(), p);
    let m = ClosureModel::init(ModelKind::Tbnn, &mut ChaCha8Rng::seed_from_u64(1));
    let mp = dir.path().join("m.bin");
    write_model(&mp, &m).unwrap();
    assert_eq!(read_model(&mp).unwrap(), m);
    assert!(matches!(read_model(&sp), Err(Error::Format { .. })));
    assert!(matches!(read_snapshot(&dir.path().join("missing.bin")), Err(Error::Io(_))));
}

#[test]
fn headers_are_checked() {
    let p = Path::new("mem");
    let grid = Grid::periodic(2).unwrap();
    let good = encode_snapshot(&Snapshot { time: 0.0, u: SpectralVelocity::zeros(grid) });
    let mut wrong_magic = good.clone();
    wrong_magic[0] = b'X';
    assert!(decode_snapshot(&wrong_magic, p).is_err());
    let mut wrong_version = good.clone();
    wrong_version[8] = 9;
    assert!(decode_snapshot(&wrong_version, p).is_err());
    let mut odd_grid = good.clone();
    odd_grid[12] = 3;
    assert!(decode_snapshot(&odd_grid, p).is_err());
    let mut huge_grid = good.clone();
    huge_grid[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
    assert!(decode_snapshot(&huge_grid, p).is_err());
    let mut trailing = good;
    trailing.push(0);
    assert!(decode_snapshot(&trailing, p).is_err());
    assert!(decode_pair(b"LESSFS01", p).is_err());
}
