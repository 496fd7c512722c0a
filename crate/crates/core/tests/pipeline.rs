use std::fs;

use eqles::closures::ModelKind;
use eqles::config::RunConfig;
use eqles::error::Error;
use eqles::pipeline::{self, Layout, OutputLock};

fn tiny(dir: &std::path::Path) -> RunConfig {
    let text = format!(
        "dns_n = 16\nles_n = 8\nwarmup_time = 0.2\nsample_every = 2\nn_snapshots = 6\n\
         epochs = 2\nequivariance_time = 0.05\nkde_max_samples = 2000\nout_dir = {}\n",
        dir.display()
    );
    RunConfig::parse(&text).unwrap()
}

#[test]
fn full_pipeline_on_a_tiny_box() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let layout = Layout::new(dir.path());

    assert!(matches!(pipeline::cmd_filter(&cfg), Err(Error::InvalidArgument(_))));
    let dns = pipeline::cmd_dns(&cfg).unwrap();
    assert_eq!(dns.files.len(), 6);
    let series = fs::read_to_string(layout.timeseries()).unwrap();
    assert!(series.starts_with("t,E,eps\n"));
    assert_eq!(series.lines().count(), dns.output.timeseries.len() + 1);

    assert_eq!(pipeline::cmd_filter(&cfg).unwrap().len(), 6);
    let (train, test) = pipeline::load_split(&cfg).unwrap();
    assert_eq!((train.len(), test.len()), (3, 3));
    assert!(train.last().unwrap().time < test[0].time);

    assert!(matches!(pipeline::cmd_evaluate(&cfg), Err(Error::InvalidArgument(_))));
    for kind in ModelKind::ALL {
        let s = pipeline::cmd_train(&cfg, kind).unwrap();
        assert!(s.model_file.exists());
        assert_eq!(s.history.len(), if kind.is_trainable() { 6 } else { 0 });
        assert_eq!(pipeline::load_model(&layout, &cfg, kind).unwrap(), s.model);
    }

    let summary = pipeline::cmd_evaluate(&cfg).unwrap();
    assert_eq!(summary.models.len(), 6);
    assert_eq!(summary.times.len(), 3);
    let none = summary.get(ModelKind::NoModel).unwrap();
    assert_eq!(none.apriori, 1.0);
    assert_eq!(none.equivariance_prior.mean(), None);
    for m in &summary.models {
        assert_eq!(m.solution.errors[0], 0.0, "{}", m.kind);
        assert!(m.les_duration >= summary.eddy_turnover_time.min(summary.times[2] - summary.times[0]));
    }
    let eval = layout.eval_dir();
    for name in [
        "errors.csv",
        "errors_vs_time.csv",
        "equi.csv",
        "spectrum.csv",
        "dist_tau11.csv",
        "dist_tau23.csv",
        "dist_dissipation.csv",
        "qr_density_filtered_dns.csv",
        "qr_density_gconv.csv",
        "vieillefosse.csv",
        "metadata.csv",
    ] {
        assert!(eval.join(name).exists(), "{name}");
    }
    let equi = fs::read_to_string(eval.join("equi.csv")).unwrap();
    assert_eq!(equi.lines().count(), 1 + 6 * 48);
    assert!(equi.lines().any(|l| l.starts_with("nomodel,1,N.A.,")));
    assert!(!dir.path().join(".eqles.lock").exists());
}

#[test]
fn a_held_lock_blocks_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let _lock = OutputLock::acquire(dir.path()).unwrap();
    assert!(matches!(pipeline::cmd_dns(&cfg), Err(Error::Config(_))));
    assert!(matches!(pipeline::cmd_train(&cfg, ModelKind::Smagorinsky), Err(Error::Config(_))));
}

#[test]
fn training_needs_a_full_batch() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    pipeline::cmd_dns(&cfg).unwrap();
    pipeline::cmd_filter(&cfg).unwrap();
    cfg.train.batch_size = 10;
    assert!(matches!(pipeline::cmd_train(&cfg, ModelKind::Tbnn), Err(Error::Config(_))));
}

#[test]
fn selftest_with_a_basis_cache() {
    let dir = tempfile::tempdir().unwrap();
    let first = pipeline::cmd_selftest(Some(dir.path()));
    assert!(first.iter().all(|c| c.passed), "{first:#?}");
    let second = pipeline::cmd_selftest(Some(dir.path()));
    assert!(second.iter().all(|c| c.passed));
    assert!(second.iter().any(|c| c.detail.starts_with("rank 48 (expected 48), loaded")));
}
