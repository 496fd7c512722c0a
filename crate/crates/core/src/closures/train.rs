//! Mini-batch training of the network closures against the discrete SFS.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{Adam, AdamConfig};
use super::nets::{self, PointNet};
use super::ClosureModel;
use crate::error::{Error, Result};
use crate::filtering::SnapshotPair;
use crate::spectral;
use crate::par;
use crate::tensor3::{Mat3, Sym6, SYM_WEIGHT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            batch_size: 10,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.adam;
        let positive = a.learning_rate > 0.0 && a.epsilon > 0.0;
        let betas = (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2);
        if self.epochs == 0 || self.batch_size == 0 || !positive || !betas {
            return Err(Error::Config(format!("invalid training configuration {self:?}")));
        }
        Ok(())
    }
}

/// One recorded mini-batch loss; `batch` counts from 0 across all epochs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRecord {
    pub batch: usize,
    pub epoch: usize,
    pub loss: f64,
}

/// Gradient field and target of one snapshot, prepared once for training.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub time: f64,
    pub a: Vec<Mat3>,
    pub tau: Vec<Sym6>,
    /// `Σ_x ‖τ(x)‖²`.
    pub norm_sq: f64,
}

impl TrainingSample {
    pub fn new(time: f64, a: Vec<Mat3>, tau: Vec<Sym6>) -> Result<Self> {
        if a.len() != tau.len() {
            return Err(Error::ShapeMismatch {
                expected: a.len(),
                actual: tau.len(),
            });
        }
        let norm_sq = weighted_norm_sq(&tau);
        if norm_sq.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::ZeroNormTarget(time));
        }
        Ok(TrainingSample {
            time,
            a,
            tau,
            norm_sq,
        })
    }

    pub fn from_pair(pair: &SnapshotPair) -> Result<Self> {
        Self::new(
            pair.time,
            spectral::velocity_gradient(&pair.u_bar),
            pair.tau.clone(),
        )
    }
}

/// `Σ_x ‖a(x) − b(x)‖²` with the full-tensor Frobenius norm.
pub fn weighted_distance_sq(a: &[Sym6], b: &[Sym6]) -> f64 {
    assert_eq!(a.len(), b.len(), "stress fields differ in length");
    par::sum_range(a.len(), |i| {
        (0..6).map(|c| SYM_WEIGHT[c] * (a[i][c] - b[i][c]).powi(2)).sum::<f64>()
    })
}

/// `Σ_x ‖a(x)‖²`, summed exactly like [`weighted_distance_sq`] against zero.
pub fn weighted_norm_sq(a: &[Sym6]) -> f64 {
    par::sum_range(a.len(), |i| {
        (0..6).map(|c| SYM_WEIGHT[c] * (0.0 - a[i][c]).powi(2)).sum::<f64>()
    })
}

/// Relative squared error of one predicted stress field.
pub fn relative_squared_error(m: &[Sym6], tau: &[Sym6], norm_sq: f64) -> f64 {
    weighted_distance_sq(m, tau) / norm_sq
}

/// Mean relative squared error of the model over a batch.
pub fn loss(model: &ClosureModel, batch: &[TrainingSample], delta: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let total: f64 = batch
        .iter()
        .map(|s| relative_squared_error(&model.stress(&s.a, delta), &s.tau, s.norm_sq))
        .sum();
    Ok(total / batch.len() as f64)
}

/// Batch loss and its gradient with respect to the free parameters.
pub fn loss_and_gradient<N: PointNet + ?Sized>(
    net: &N,
    batch: &[TrainingSample],
    delta: f64,
) -> (f64, Vec<f64>) {
    let refs: Vec<&TrainingSample> = batch.iter().collect();
    batch_loss_and_gradient(net, &refs, delta)
}

fn batch_loss_and_gradient<N: PointNet + ?Sized>(
    net: &N,
    batch: &[&TrainingSample],
    delta: f64,
) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut grad = vec![0.0; net.parameter_count()];
    for s in batch {
        let scale = 1.0 / (s.norm_sq * batch.len() as f64);
        let (l, g) = nets::loss_and_gradient(net, &s.a, &s.tau, delta, scale);
        total += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    (total, grad)
}

/// Trains a network closure in place and returns the per-batch loss history.
/// Each batch loss is evaluated before the update it drives.
pub fn train(
    model: &mut ClosureModel,
    data: &[TrainingSample],
    delta: f64,
    config: &TrainConfig,
) -> Result<Vec<LossRecord>> {
    train_with_progress(model, data, delta, config, |_| {})
}

pub fn train_with_progress<F: FnMut(&LossRecord)>(
    model: &mut ClosureModel,
    data: &[TrainingSample],
    delta: f64,
    config: &TrainConfig,
    mut progress: F,
) -> Result<Vec<LossRecord>> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("no training samples".into()));
    }
    let name = model.name();
    let net = model
        .network_mut()
        .ok_or_else(|| Error::InvalidArgument(format!("model {name} has no trainable network")))?;
    let mut params = net.params();
    let mut opt = Adam::new(params.len(), config.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::new();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<&TrainingSample> = idx.iter().map(|&i| &data[i]).collect();
            let (l, g) = batch_loss_and_gradient(&*net, &batch, delta);
            let record = LossRecord {
                batch: history.len(),
                epoch,
                loss: l,
            };
            if !l.is_finite() || g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    loss: l,
                    batch: record.batch,
                });
            }
            opt.step(&mut params, &g);
            net.set_params(&params);
            progress(&record);
            history.push(record);
        }
    }
    Ok(history)
}

/// Mean loss of the first and last epochs of a history.
pub fn epoch_means(history: &[LossRecord]) -> Option<(f64, f64)> {
    let first = history.first()?.epoch;
    let last = history.last()?.epoch;
    let mean = |e: usize| {
        let v: Vec<f64> = history.iter().filter(|r| r.epoch == e).map(|r| r.loss).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    Some((mean(first), mean(last)))
}
