//! Run configuration read from `key = value` files.

use std::path::{Path, PathBuf};

use crate::closures::{AdamConfig, ModelKind, TrainConfig};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::simulation::SimConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub les_n: usize,
    pub filter_width_factor: f64,
    pub split_fraction: f64,
    /// Models handled by `train` and `evaluate`.
    pub models: Vec<ModelKind>,
    pub train: TrainConfig,
    /// Time of the a-posteriori equivariance comparison.
    pub equivariance_time: f64,
    /// Upper bound on the points entering each density estimate.
    pub kde_max_samples: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sim: SimConfig::default(),
            les_n: 16,
            filter_width_factor: 4.0,
            split_fraction: 0.5,
            models: ModelKind::ALL.to_vec(),
            train: TrainConfig {
                epochs: 5,
                batch_size: 1,
                ..TrainConfig::default()
            },
            equivariance_time: 0.1,
            kde_max_samples: 2_000_000,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} = {value:?}")))
}

impl RunConfig {
    pub fn les_grid(&self) -> Result<Grid> {
        Grid::new(self.les_n, self.sim.length)
    }

    pub fn dns_grid(&self) -> Result<Grid> {
        self.sim.grid()
    }

    /// Applies one setting; `line` is only used in messages.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "nu" => self.sim.nu = parse_value(key, value, line)?,
            "cfl" => self.sim.cfl = parse_value(key, value, line)?,
            "box_length" => self.sim.length = parse_value(key, value, line)?,
            "dns_n" => self.sim.n = parse_value(key, value, line)?,
            "initial_energy" => self.sim.initial_energy = parse_value(key, value, line)?,
            "forced_shells" => self.sim.forced_shells = parse_value(key, value, line)?,
            "warmup_time" => self.sim.warmup_time = parse_value(key, value, line)?,
            "sample_every" => self.sim.sample_every = parse_value(key, value, line)?,
            "n_snapshots" => self.sim.n_snapshots = parse_value(key, value, line)?,
            "seed" => self.set_seed(parse_value(key, value, line)?),
            "progress" => self.sim.progress = parse_value(key, value, line)?,
            "les_n" => self.les_n = parse_value(key, value, line)?,
            "filter_width_factor" => self.filter_width_factor = parse_value(key, value, line)?,
            "split_fraction" => self.split_fraction = parse_value(key, value, line)?,
            "models" => {
                self.models = value
                    .split(',')
                    .map(|m| m.trim().parse::<ModelKind>())
                    .collect::<Result<_>>()?
            }
            "epochs" => self.train.epochs = parse_value(key, value, line)?,
            "batch_size" => self.train.batch_size = parse_value(key, value, line)?,
            "learning_rate" => self.train.adam.learning_rate = parse_value(key, value, line)?,
            "beta1" => self.train.adam.beta1 = parse_value(key, value, line)?,
            "beta2" => self.train.adam.beta2 = parse_value(key, value, line)?,
            "epsilon" => self.train.adam.epsilon = parse_value(key, value, line)?,
            "equivariance_time" => self.equivariance_time = parse_value(key, value, line)?,
            "kde_max_samples" => self.kde_max_samples = parse_value(key, value, line)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(Error::Config(format!("line {line}: unknown key {key:?}"))),
        }
        Ok(())
    }

    /// One seed drives the DNS initial field and network training.
    pub fn set_seed(&mut self, seed: u64) {
        self.sim.seed = seed;
        self.train.seed = seed;
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", i + 1)));
            }
            cfg.set(key, value.trim(), i + 1)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The file form of this configuration; `parse(to_text())` reproduces it.
    pub fn to_text(&self) -> String {
        let models: Vec<&str> = self.models.iter().map(|m| m.name()).collect();
        let a: &AdamConfig = &self.train.adam;
        let rows: [(&str, String); 24] = [
            ("nu", self.sim.nu.to_string()),
            ("cfl", self.sim.cfl.to_string()),
            ("box_length", self.sim.length.to_string()),
            ("dns_n", self.sim.n.to_string()),
            ("initial_energy", self.sim.initial_energy.to_string()),
            ("forced_shells", self.sim.forced_shells.to_string()),
            ("warmup_time", self.sim.warmup_time.to_string()),
            ("sample_every", self.sim.sample_every.to_string()),
            ("n_snapshots", self.sim.n_snapshots.to_string()),
            ("seed", self.sim.seed.to_string()),
            ("progress", self.sim.progress.to_string()),
            ("les_n", self.les_n.to_string()),
            ("filter_width_factor", self.filter_width_factor.to_string()),
            ("split_fraction", self.split_fraction.to_string()),
            ("models", models.join(",")),
            ("epochs", self.train.epochs.to_string()),
            ("batch_size", self.train.batch_size.to_string()),
            ("learning_rate", a.learning_rate.to_string()),
            ("beta1", a.beta1.to_string()),
            ("beta2", a.beta2.to_string()),
            ("epsilon", a.epsilon.to_string()),
            ("equivariance_time", self.equivariance_time.to_string()),
            ("kde_max_samples", self.kde_max_samples.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let (dns, les) = (self.sim.n, self.les_n);
        if les % 2 != 0 || dns % 2 != 0 {
            return Err(Error::Config(format!("dns_n ({dns}) and les_n ({les}) must be even")));
        }
        if les >= dns || les < 4 {
            return Err(Error::Config(format!(
                "les_n ({les}) must be at least 4 and smaller than dns_n ({dns})"
            )));
        }
        if !(self.filter_width_factor.is_finite() && self.filter_width_factor >= 1.0) {
            return Err(Error::Config("filter_width_factor must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.split_fraction) {
            return Err(Error::Config("split_fraction must lie in [0, 1]".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("models must name at least one model".into()));
        }
        if !(self.equivariance_time.is_finite() && self.equivariance_time > 0.0) {
            return Err(Error::Config("equivariance_time must be positive".into()));
        }
        if self.kde_max_samples < 2 {
            return Err(Error::Config("kde_max_samples must be at least 2".into()));
        }
        self.train.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn comments_and_overrides() {
        let c = RunConfig::parse("# desk\nles_n = 8  # coarse\nmodels = smag, tbnn\nseed=7\n").unwrap();
        assert_eq!(c.les_n, 8);
        assert_eq!(c.models, vec![ModelKind::Smagorinsky, ModelKind::Tbnn]);
        assert_eq!((c.sim.seed, c.train.seed), (7, 7));
    }

    #[test]
    fn invalid_files_are_rejected() {
        for text in [
            "colour = red",
            "les_n = 64",
            "les_n = 15",
            "filter_width_factor = 0.5",
            "nu",
            "nu = fast",
            "seed = 1\nseed = 2",
            "models = lstm",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }
}
