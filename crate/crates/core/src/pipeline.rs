//! End-to-end commands: DNS, filtering, training, evaluation and self-test.
//!
//! All artifacts live below one output directory:
//! `dns/` (snapshots, `timeseries.csv`), `pairs/`, `models/` and `eval/`.

use std::fs::{self, File, OpenOptions};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::closures::train::{self, LossRecord, TrainingSample};
use crate::closures::{ClosureModel, ModelKind};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evaluation::{self as ev, cell, opt_cell, CsvWriter, EquivarianceReport};
use crate::filtering::{self, FilterSpec, SnapshotPair};
use crate::grid::Grid;
use crate::group::{self, enumerate_group, GroupElement, ORDER};
use crate::io;
use crate::projection::{self, LayerKind, SharedBasis};
use crate::simulation::{self, DnsOutput, ForcingTargets, LesConfig, Snapshot, StepPolicy};
use crate::spectral::{self, SpectralVelocity};
use crate::tensor3::{Mat3, Sym6};

/// Paths of every artifact below the output directory.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn dns_dir(&self) -> PathBuf {
        self.root.join("dns")
    }

    pub fn pairs_dir(&self) -> PathBuf {
        self.root.join("pairs")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.root.join("eval")
    }

    pub fn snapshot(&self, i: usize) -> PathBuf {
        self.dns_dir().join(format!("snapshot_{i:04}.bin"))
    }

    pub fn pair(&self, i: usize) -> PathBuf {
        self.pairs_dir().join(format!("pair_{i:04}.bin"))
    }

    pub fn timeseries(&self) -> PathBuf {
        self.dns_dir().join("timeseries.csv")
    }

    pub fn model(&self, kind: ModelKind) -> PathBuf {
        self.models_dir().join(format!("{kind}.bin"))
    }

    pub fn loss(&self, kind: ModelKind) -> PathBuf {
        self.models_dir().join(format!("loss_{kind}.csv"))
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".eqles.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(OutputLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Config(format!(
                "output directory {} is in use (remove {} if no other run is active)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn csv_file(path: &Path, header: &[&str]) -> Result<CsvWriter<BufWriter<File>>> {
    CsvWriter::new(BufWriter::new(File::create(path)?), header)
}

fn numbered_files(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(prefix) && n.ends_with(".bin"))
        })
        .collect();
    files.sort();
    Ok(files)
}

#[derive(Clone, Debug)]
pub struct DnsSummary {
    pub output: DnsOutput,
    pub files: Vec<PathBuf>,
}

fn write_timeseries(path: &Path, out: &DnsOutput) -> Result<()> {
    let mut w = csv_file(path, &["t", "E", "eps"])?;
    for s in &out.timeseries {
        w.row(&[cell(s.time), cell(s.energy), cell(s.dissipation)])?;
    }
    w.finish()?;
    Ok(())
}

/// Forced DNS with snapshot files and the energy/dissipation series. The
/// series is written even when the run becomes unstable.
pub fn cmd_dns(cfg: &RunConfig) -> Result<DnsSummary> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    let _lock = OutputLock::acquire(&cfg.out_dir)?;
    fs::create_dir_all(layout.dns_dir())?;
    for old in numbered_files(&layout.dns_dir(), "snapshot_")? {
        fs::remove_file(old)?;
    }
    let mut files = Vec::new();
    let mut output = DnsOutput::default();
    let result = simulation::run_dns(
        &cfg.sim,
        |s| {
            let path = layout.snapshot(files.len());
            io::write_snapshot(&path, &s)?;
            files.push(path);
            Ok(())
        },
        &mut output,
    );
    write_timeseries(&layout.timeseries(), &output)?;
    result?;
    Ok(DnsSummary { output, files })
}

pub fn load_snapshots(layout: &Layout) -> Result<Vec<Snapshot>> {
    let files = numbered_files(&layout.dns_dir(), "snapshot_")?;
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no snapshots in {}",
            layout.dns_dir().display()
        )));
    }
    files.iter().map(|f| io::read_snapshot(f)).collect()
}

pub fn filter_spec(cfg: &RunConfig) -> Result<FilterSpec> {
    FilterSpec::for_grid(&cfg.les_grid()?, cfg.filter_width_factor)
}

/// One pair file per snapshot, in chronological order.
pub fn cmd_filter(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    let _lock = OutputLock::acquire(&cfg.out_dir)?;
    let mut snaps = load_snapshots(&layout)?;
    snaps.sort_by(|a, b| a.time.total_cmp(&b.time));
    let coarse = cfg.les_grid()?;
    let spec = filter_spec(cfg)?;
    fs::create_dir_all(layout.pairs_dir())?;
    for old in numbered_files(&layout.pairs_dir(), "pair_")? {
        fs::remove_file(old)?;
    }
    let mut out = Vec::with_capacity(snaps.len());
    for (i, s) in snaps.iter().enumerate() {
        let pair = filtering::make_pair(s.time, &s.u, &coarse, &spec)?;
        let path = layout.pair(i);
        io::write_pair(&path, &pair)?;
        out.push(path);
    }
    Ok(out)
}

pub fn load_pairs(layout: &Layout) -> Result<Vec<SnapshotPair>> {
    let files = numbered_files(&layout.pairs_dir(), "pair_")?;
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no snapshot pairs in {}",
            layout.pairs_dir().display()
        )));
    }
    files.iter().map(|f| io::read_pair(f)).collect()
}

/// Chronological train/test split of the pair files.
pub fn load_split(cfg: &RunConfig) -> Result<(Vec<SnapshotPair>, Vec<SnapshotPair>)> {
    filtering::build_dataset(load_pairs(&Layout::new(&cfg.out_dir))?, cfg.split_fraction)
}

pub fn samples(pairs: &[SnapshotPair]) -> Result<Vec<TrainingSample>> {
    pairs.iter().map(TrainingSample::from_pair).collect()
}

/// Untrained closure of a family, seeded from the run seed.
pub fn initial_model(cfg: &RunConfig, kind: ModelKind) -> ClosureModel {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed.wrapping_add(u64::from(kind.tag()) << 32));
    ClosureModel::init(kind, &mut rng)
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub model: ClosureModel,
    pub history: Vec<LossRecord>,
    pub model_file: PathBuf,
}

/// Trains one closure on the training split and stores it; classical
/// closures are stored unchanged with an empty history.
pub fn cmd_train(cfg: &RunConfig, kind: ModelKind) -> Result<TrainSummary> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    let _lock = OutputLock::acquire(&cfg.out_dir)?;
    let mut model = initial_model(cfg, kind);
    let mut history = Vec::new();
    if kind.is_trainable() {
        let (train_pairs, _) = load_split(cfg)?;
        if train_pairs.len() < cfg.train.batch_size {
            return Err(Error::Config(format!(
                "{} training pairs are fewer than batch_size = {}",
                train_pairs.len(),
                cfg.train.batch_size
            )));
        }
        let data = samples(&train_pairs)?;
        let delta = filter_spec(cfg)?.width;
        let progress = cfg.sim.progress;
        history = train::train_with_progress(&mut model, &data, delta, &cfg.train, |r| {
            if progress {
                eprintln!("model={kind} epoch={} batch={} loss={:.6e}", r.epoch, r.batch, r.loss);
            }
        })?;
    }
    fs::create_dir_all(layout.models_dir())?;
    let model_file = layout.model(kind);
    io::write_model(&model_file, &model)?;
    let mut w = csv_file(&layout.loss(kind), &["batch", "epoch", "loss"])?;
    for r in &history {
        w.row(&[r.batch.to_string(), r.epoch.to_string(), cell(r.loss)])?;
    }
    w.finish()?;
    Ok(TrainSummary {
        model,
        history,
        model_file,
    })
}

/// Stored closure of a family; classical closures fall back to their
/// defaults when no file exists.
pub fn load_model(layout: &Layout, cfg: &RunConfig, kind: ModelKind) -> Result<ClosureModel> {
    let path = layout.model(kind);
    if path.exists() {
        let m = io::read_model(&path)?;
        if m.kind() != kind {
            return Err(Error::format(&path, format!("holds a {} model", m.kind())));
        }
        Ok(m)
    } else if kind.is_trainable() {
        Err(Error::InvalidArgument(format!(
            "no trained {kind} model at {} (run train first)",
            path.display()
        )))
    } else {
        Ok(initial_model(cfg, kind))
    }
}

/// Per-model results of the evaluation.
#[derive(Clone, Debug)]
pub struct ModelEvaluation {
    pub kind: ModelKind,
    pub apriori: f64,
    pub equivariance_prior: EquivarianceReport,
    pub equivariance_post: EquivarianceReport,
    pub solution: ev::SolutionError,
    /// Time-averaged LES spectrum over the states reached.
    pub spectrum: ev::SpectrumResult,
    /// LES time span reached from the first test time.
    pub les_duration: f64,
    pub instability: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EvalSummary {
    pub models: Vec<ModelEvaluation>,
    /// Time-averaged spectrum of the filtered DNS on the test times.
    pub reference_spectrum: ev::SpectrumResult,
    pub dns_spectrum: ev::SpectrumResult,
    pub times: Vec<f64>,
    pub dissipation: f64,
    pub kolmogorov_length: f64,
    pub eddy_turnover_time: f64,
    pub t_scale: f64,
}

impl EvalSummary {
    pub fn get(&self, kind: ModelKind) -> Option<&ModelEvaluation> {
        self.models.iter().find(|m| m.kind == kind)
    }
}

/// Integral length over rms velocity of a spectral field.
pub fn eddy_turnover_time(u: &SpectralVelocity) -> f64 {
    let e = simulation::shell_energies(u);
    let kb = u.grid.base_wavenumber();
    let total: f64 = e.iter().sum();
    let u_rms = (2.0 * total / 3.0).sqrt();
    let weighted: f64 = e.iter().enumerate().skip(1).map(|(k, v)| v / (k as f64 * kb)).sum();
    let length = std::f64::consts::PI / (2.0 * u_rms * u_rms) * weighted;
    length / u_rms
}

fn les_config(cfg: &RunConfig, u0: &SpectralVelocity) -> LesConfig {
    LesConfig {
        nu: cfg.sim.nu,
        policy: StepPolicy::Adaptive { cfl: cfg.sim.cfl },
        targets: Some(ForcingTargets::from_field(u0, cfg.sim.forced_shells)),
        truncate_closure: true,
    }
}

fn strided<T: Copy>(v: &[T], stride: usize) -> Vec<T> {
    v.iter().step_by(stride).copied().collect()
}

fn component_name(c: usize) -> &'static str {
    ["tau11", "tau22", "tau33", "tau12", "tau13", "tau23"][c]
}

/// Writes one distribution file: a window from the reference samples and a
/// density column per sample set (`N.A.` where the estimate is undefined).
fn write_distribution(path: &Path, columns: &[(String, Vec<f64>)]) -> Result<()> {
    let window = ev::sample_window(&columns[0].1)?;
    let grid = ev::linspace(window.0, window.1, 512);
    let dens: Vec<Option<Vec<f64>>> = columns.iter().map(|(_, s)| ev::kde_1d(s, &grid).ok()).collect();
    let mut header = vec!["x"];
    header.extend(columns.iter().map(|(n, _)| n.as_str()));
    let mut w = csv_file(path, &header)?;
    for (i, x) in grid.iter().enumerate() {
        let mut row = vec![cell(*x)];
        row.extend(dens.iter().map(|d| opt_cell(d.as_ref().map(|d| d[i]))));
        w.row(&row)?;
    }
    w.finish()?;
    Ok(())
}

fn write_qr_density(path: &Path, fields: &[Vec<Mat3>], t_scale: f64, max_samples: usize) -> Result<()> {
    let mut q = Vec::new();
    let mut r = Vec::new();
    for a in fields {
        let (qi, ri) = ev::qr_invariants(a);
        q.extend(qi.iter().map(|v| v * t_scale * t_scale));
        r.extend(ri.iter().map(|v| v * t_scale.powi(3)));
    }
    let stride = ev::subsample_stride(q.len(), max_samples);
    let (q, r) = (strided(&q, stride), strided(&r, stride));
    let g = ev::linspace(-10.0, 10.0, 256);
    let mut w = csv_file(path, &["q_tilde", "r_tilde", "density"])?;
    match ev::kde_2d(&q, &r, &g, &g) {
        Ok(d) => {
            for (i, qv) in g.iter().enumerate() {
                for (j, rv) in g.iter().enumerate() {
                    w.row(&[cell(*qv), cell(*rv), cell(d[[i, j]])])?;
                }
            }
        }
        Err(_) => w.row(&["N.A.".into(), "N.A.".into(), "N.A.".into()])?,
    }
    w.finish()?;
    Ok(())
}

/// A-priori and a-posteriori evaluation of every configured model on the
/// test split, written as CSV files below `eval/`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvalSummary> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out_dir);
    let _lock = OutputLock::acquire(&cfg.out_dir)?;
    let (_, test) = load_split(cfg)?;
    if test.is_empty() {
        return Err(Error::Config("the test split is empty; lower split_fraction".into()));
    }
    let les = cfg.les_grid()?;
    let delta = filter_spec(cfg)?.width;
    let test_samples = samples(&test)?;
    let times: Vec<f64> = test.iter().map(|p| p.time).collect();
    let reference: Vec<SpectralVelocity> = test.iter().map(|p| p.u_bar.clone()).collect();
    let ref_grads: Vec<Vec<Mat3>> = test_samples.iter().map(|s| s.a.clone()).collect();

    let dns: Vec<Snapshot> = load_snapshots(&layout)?
        .into_iter()
        .filter(|s| times.contains(&s.time))
        .collect();
    if dns.is_empty() {
        return Err(Error::InvalidArgument("no DNS snapshots at the test times".into()));
    }
    let dissipation =
        dns.iter().map(|s| simulation::dissipation(&s.u, cfg.sim.nu)).sum::<f64>() / dns.len() as f64;
    let eta = ev::kolmogorov_length(cfg.sim.nu, dissipation);
    let turnover = dns.iter().map(|s| eddy_turnover_time(&s.u)).sum::<f64>() / dns.len() as f64;
    let dns_spectrum = ev::mean_spectrum(&dns.iter().map(|s| ev::energy_spectrum(&s.u)).collect::<Vec<_>>());
    drop(dns);
    let reference_spectrum =
        ev::mean_spectrum(&reference.iter().map(ev::energy_spectrum).collect::<Vec<_>>());
    let t_scale = ev::t_scale(&ref_grads)?;
    // The LES runs over the test times and at least one eddy turnover.
    let mut run_times = times.clone();
    let horizon = times[0] + turnover;
    if horizon > *times.last().unwrap() {
        run_times.push(horizon);
    }

    let mut results = Vec::new();
    let mut apriori_outputs: Vec<(ModelKind, Vec<Vec<Sym6>>)> = Vec::new();
    let mut trajectories: Vec<(ModelKind, Vec<Vec<Mat3>>)> = Vec::new();
    for &kind in &cfg.models {
        let model = load_model(&layout, cfg, kind)?;
        let progress = |what: &str| {
            if cfg.sim.progress {
                eprintln!("evaluate model={kind} {what}");
            }
        };
        progress("a-priori");
        let apriori = ev::apriori_tensor_error(&model, &test_samples, delta)?;
        apriori_outputs.push((kind, test_samples.iter().map(|s| model.stress(&s.a, delta)).collect()));
        progress("equivariance");
        let equivariance_prior = ev::equivariance_error_prior(&model, &test_samples[0].a, &les, delta);
        let equivariance_post = ev::equivariance_error_post(
            &model,
            &reference[0],
            cfg.equivariance_time,
            delta,
            &les_config(cfg, &reference[0]),
        )?;
        progress("a-posteriori");
        let run = simulation::run_les(&reference[0], &run_times, &les_config(cfg, &reference[0]), |v| {
            model.spectral_stress(v, delta)
        });
        let states = &run.states[..run.states.len().min(times.len())];
        let solution = ev::aposteriori_solution_error(states, &reference, &times)?;
        let spectrum = ev::mean_spectrum(&states.iter().map(ev::energy_spectrum).collect::<Vec<_>>());
        trajectories.push((kind, states.iter().map(spectral::velocity_gradient).collect()));
        results.push(ModelEvaluation {
            kind,
            apriori,
            equivariance_prior,
            equivariance_post,
            solution,
            spectrum,
            les_duration: run.times.last().map_or(0.0, |t| t - times[0]),
            instability: run.instability,
        });
    }

    let eval_dir = layout.eval_dir();
    fs::create_dir_all(&eval_dir)?;
    let mut w = csv_file(&eval_dir.join("errors.csv"), &["model", "metric", "value"])?;
    for r in &results {
        let m = r.kind.name().to_string();
        w.row(&[m.clone(), "apriori_tensor".into(), cell(r.apriori)])?;
        w.row(&[m.clone(), "aposteriori_solution".into(), opt_cell(r.solution.mean())])?;
        w.row(&[m.clone(), "equivariance_prior".into(), opt_cell(r.equivariance_prior.mean())])?;
        w.row(&[m.clone(), "equivariance_post".into(), opt_cell(r.equivariance_post.mean())])?;
        w.row(&[m, "les_duration".into(), cell(r.les_duration)])?;
    }
    w.finish()?;

    let mut w = csv_file(&eval_dir.join("errors_vs_time.csv"), &["model", "t", "error"])?;
    for r in &results {
        for (t, e) in r.solution.times.iter().zip(&r.solution.errors) {
            w.row(&[r.kind.name().into(), cell(*t), cell(*e)])?;
        }
    }
    w.finish()?;

    let mut w = csv_file(&eval_dir.join("equi.csv"), &["model", "element", "prior", "post"])?;
    for r in &results {
        for e in 0..ORDER {
            let pick = |rep: &EquivarianceReport| {
                if rep.defined {
                    cell(rep.per_element[e])
                } else {
                    "N.A.".to_string()
                }
            };
            w.row(&[
                r.kind.name().into(),
                (e + 1).to_string(),
                pick(&r.equivariance_prior),
                pick(&r.equivariance_post),
            ])?;
        }
    }
    w.finish()?;

    let kb = les.base_wavenumber();
    let mut w = csv_file(
        &eval_dir.join("spectrum.csv"),
        &["model", "kappa", "E", "kappa_tilde", "E_tilde"],
    )?;
    let mut spectrum_rows = |name: &str, s: &ev::SpectrumResult| -> Result<()> {
        for (k, ((kt, et), e)) in s
            .normalized(dissipation, cfg.sim.nu, kb)
            .into_iter()
            .zip(&s.energy)
            .enumerate()
        {
            w.row(&[name.into(), k.to_string(), cell(*e), cell(kt), cell(et)])?;
        }
        Ok(())
    };
    spectrum_rows("dns", &dns_spectrum)?;
    spectrum_rows("filtered_dns", &reference_spectrum)?;
    for r in &results {
        spectrum_rows(r.kind.name(), &r.spectrum)?;
    }
    let kolmogorov = ev::SpectrumResult {
        energy: (0..dns_spectrum.energy.len())
            .map(|k| if k == 0 { 0.0 } else { ev::kolmogorov_spectrum(k as f64 * kb, dissipation) })
            .collect(),
    };
    spectrum_rows("kolmogorov", &kolmogorov)?;
    w.finish()?;

    // A-priori distributions on the test split.
    let stride = ev::subsample_stride(test_samples.len() * les.len(), cfg.kde_max_samples);
    let flat_tau: Vec<Sym6> = test_samples.iter().flat_map(|s| s.tau.iter().copied()).collect();
    let flat_a: Vec<Mat3> = ref_grads.iter().flatten().copied().collect();
    for c in 0..6 {
        let mut cols = vec![("filtered_dns".to_string(), strided(&flat_tau.iter().map(|t| t[c]).collect::<Vec<_>>(), stride))];
        for (kind, out) in &apriori_outputs {
            let v: Vec<f64> = out.iter().flatten().map(|m| m[c]).collect();
            cols.push((kind.name().to_string(), strided(&v, stride)));
        }
        write_distribution(&eval_dir.join(format!("dist_{}.csv", component_name(c))), &cols)?;
    }
    let mut cols = vec![(
        "filtered_dns".to_string(),
        strided(&ev::dissipation_coefficient(&flat_tau, &flat_a)?, stride),
    )];
    for (kind, out) in &apriori_outputs {
        let m: Vec<Sym6> = out.iter().flatten().copied().collect();
        cols.push((kind.name().to_string(), strided(&ev::dissipation_coefficient(&m, &flat_a)?, stride)));
    }
    write_distribution(&eval_dir.join("dist_dissipation.csv"), &cols)?;

    // A-posteriori velocity-gradient invariants.
    write_qr_density(&eval_dir.join("qr_density_filtered_dns.csv"), &ref_grads, t_scale, cfg.kde_max_samples)?;
    for (kind, fields) in &trajectories {
        write_qr_density(
            &eval_dir.join(format!("qr_density_{kind}.csv")),
            fields,
            t_scale,
            cfg.kde_max_samples,
        )?;
    }
    let mut w = csv_file(&eval_dir.join("vieillefosse.csv"), &["r_tilde", "q_tilde"])?;
    for (r, q) in ev::vieillefosse_curve(-10.0, 201) {
        w.row(&[cell(r), cell(q)])?;
    }
    w.finish()?;

    let summary = EvalSummary {
        models: results,
        reference_spectrum,
        dns_spectrum,
        times,
        dissipation,
        kolmogorov_length: eta,
        eddy_turnover_time: turnover,
        t_scale,
    };
    let mut w = csv_file(&eval_dir.join("metadata.csv"), &["key", "value"])?;
    let levels: Vec<String> = ev::contour_levels().iter().map(|l| cell(*l)).collect();
    for (k, v) in [
        ("test_snapshots", summary.times.len().to_string()),
        ("first_test_time", cell(summary.times[0])),
        ("last_test_time", cell(*summary.times.last().unwrap())),
        ("mean_dissipation", cell(summary.dissipation)),
        ("kolmogorov_length", cell(summary.kolmogorov_length)),
        ("eddy_turnover_time", cell(summary.eddy_turnover_time)),
        ("t_scale", cell(summary.t_scale)),
        ("filter_width", cell(delta)),
        ("kde_stride", stride.to_string()),
        ("kde_bandwidth_rule", "silverman".into()),
        ("qr_contour_levels", levels.join(" ")),
    ] {
        w.row(&[k.into(), v])?;
    }
    w.finish()?;
    Ok(summary)
}

/// One self-test outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn basis_for(kind: LayerKind, cache: Option<&Path>) -> Result<(SharedBasis, String)> {
    let Some(dir) = cache else {
        return Ok((projection::shared_basis(kind)?, "computed".into()));
    };
    let path = dir.join(format!("basis_{kind:?}.bin").to_lowercase());
    if path.exists() {
        return Ok((SharedBasis::load(&path)?, format!("loaded {}", path.display())));
    }
    let b = projection::shared_basis(kind)?;
    fs::create_dir_all(dir)?;
    b.save(&path)?;
    Ok((b, format!("computed and cached at {}", path.display())))
}

/// Fast invariant suite: group axioms, projector ranks and spectral
/// identities. With a cache directory the equivariant bases are loaded from
/// (or written to) it and verified.
pub fn cmd_selftest(cache: Option<&Path>) -> Vec<Check> {
    let mut out = Vec::new();
    let elements = enumerate_group();
    let dets: Vec<i32> = elements.iter().map(|g| g.matrix().determinant()).collect();
    let proper = dets.iter().filter(|&&d| d == 1).count();
    out.push(check(
        "group census",
        elements.len() == ORDER && proper == 24 && dets.len() - proper == 24,
        format!("{} elements, {proper} with det +1, {} with det -1", elements.len(), dets.len() - proper),
    ));
    let table = group::cayley_table();
    let latin = (0..ORDER).all(|i| {
        let mut row: Vec<usize> = table[i].to_vec();
        let mut col: Vec<usize> = (0..ORDER).map(|j| table[j][i]).collect();
        row.sort_unstable();
        col.sort_unstable();
        row == (1..=ORDER).collect::<Vec<_>>() && col == row
    });
    out.push(check("cayley table latin square", latin, "48 x 48".into()));
    let inverses = elements
        .iter()
        .all(|&g| g.compose(g.inverse()) == GroupElement::IDENTITY);
    out.push(check("inverses", inverses, "g g^-1 = e for all g".into()));

    for kind in LayerKind::ALL {
        let name = format!("{kind:?} basis").to_lowercase();
        match basis_for(kind, cache) {
            Ok((b, how)) => out.push(check(
                &name,
                b.rank() == kind.expected_rank() && b.verify().is_ok(),
                format!("rank {} (expected {}), {how}", b.rank(), kind.expected_rank()),
            )),
            Err(e) => out.push(check(&name, false, e.to_string())),
        }
    }

    match spectral_checks() {
        Ok(v) => out.extend(v),
        Err(e) => out.push(check("spectral identities", false, e.to_string())),
    }
    out
}

fn spectral_checks() -> Result<Vec<Check>> {
    let grid = Grid::periodic(16)?;
    let u = simulation::init_velocity(grid, 1, 0.5)?;
    let phys = u.to_physical();
    let back = SpectralVelocity::from_physical(grid, &phys)?;
    let round = back.relative_distance(&u);
    let mut noisy = u.clone();
    for c in noisy.comp.iter_mut() {
        for (i, z) in c.iter_mut().enumerate() {
            *z += crate::fft::C64::new((i as f64 * 0.37).sin(), 0.0) * 1e-3;
        }
    }
    let div = spectral::leray_project(&noisy).max_divergence();
    let step = simulation::rk3_step(&u, 1e-2, |v| spectral::rhs(v, None, None, 1e-2));
    let g = enumerate_group()[17];
    let lhs = spectral::rhs(&spectral::act_on_spectral_field(g, &u), None, None, 1e-2);
    let rhs = spectral::act_on_spectral_field(g, &spectral::rhs(&u, None, None, 1e-2));
    let equi = lhs.relative_distance(&rhs);
    Ok(vec![
        check("fft round trip", round < 1e-13, format!("relative error {round:e}")),
        check("leray projection", div < 1e-12, format!("max divergence {div:e}")),
        check(
            "solver step divergence",
            step.max_divergence() < 1e-12,
            format!("max divergence {:e}", step.max_divergence()),
        ),
        check("solver equivariance", equi < 1e-12, format!("relative error {equi:e}")),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let lock = OutputLock::acquire(dir.path()).unwrap();
        assert!(matches!(OutputLock::acquire(dir.path()), Err(Error::Config(_))));
        drop(lock);
        OutputLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn selftest_passes() {
        let report = cmd_selftest(None);
        assert!(report.iter().all(|c| c.passed), "{report:#?}");
    }
}
