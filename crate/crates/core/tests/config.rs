use eqles::closures::ModelKind;
use eqles::config::RunConfig;
use eqles::error::Error;
use proptest::prelude::*;

#[test]
fn defaults_describe_the_desk_run() {
    let c = RunConfig::default();
    assert_eq!((c.sim.n, c.les_n), (64, 16));
    assert_eq!(c.models, ModelKind::ALL.to_vec());
    assert_eq!(c.train.adam.learning_rate, 1e-3);
    assert_eq!(c.les_grid().unwrap().n(), 16);
    assert_eq!(c.dns_grid().unwrap().n(), 64);
}

#[test]
fn config_files_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "dns_n = 32\nles_n = 8\nmodels = tbnn\nepochs = 2\n").unwrap();
    let c = RunConfig::load(&path).unwrap();
    assert_eq!((c.sim.n, c.les_n, c.train.epochs), (32, 8, 2));
    assert!(matches!(RunConfig::load(&dir.path().join("none.cfg")), Err(Error::Io(_))));
}

#[test]
fn bad_values_name_the_line() {
    let err = RunConfig::parse("nu = 1e-3\ncfl = x\n").unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

proptest! {
    #[test]
    fn text_form_round_trips(
        seed in any::<u64>(),
        les in prop::sample::select(vec![4usize, 8, 16, 24]),
        nu in 1e-5f64..1e-1,
        epochs in 1usize..20,
        batch in 1usize..8,
        mask in 1u8..64,
        split in 0.0f64..1.0,
    ) {
        let mut c = RunConfig::default();
        c.set_seed(seed);
        c.les_n = les;
        c.sim.nu = nu;
        c.train.epochs = epochs;
        c.train.batch_size = batch;
        c.split_fraction = split;
        c.models = ModelKind::ALL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, m)| *m).collect();
        prop_assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }
}
