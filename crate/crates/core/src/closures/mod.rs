//! Closure models for the sub-filter stress and their training.

pub mod adam;
pub mod classical;
pub mod mlp;
pub mod nets;
pub mod train;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{self, SpectralStress, SpectralVelocity};
use crate::tensor3::{Mat3, Sym6};

pub use adam::{Adam, AdamConfig};
pub use nets::{ConvNet, GConvNet, PointNet, TbnnNet};
pub use train::{train, LossRecord, TrainConfig};

/// Closure family, independent of any trained parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    NoModel,
    Smagorinsky,
    Clark,
    Tbnn,
    GConv,
    Conv,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::NoModel,
        ModelKind::Smagorinsky,
        ModelKind::Clark,
        ModelKind::Tbnn,
        ModelKind::GConv,
        ModelKind::Conv,
    ];

    pub const TRAINABLE: [ModelKind; 3] = [ModelKind::Tbnn, ModelKind::GConv, ModelKind::Conv];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::NoModel => "nomodel",
            ModelKind::Smagorinsky => "smag",
            ModelKind::Clark => "clark",
            ModelKind::Tbnn => "tbnn",
            ModelKind::GConv => "gconv",
            ModelKind::Conv => "conv",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            ModelKind::NoModel => 0,
            ModelKind::Smagorinsky => 1,
            ModelKind::Clark => 2,
            ModelKind::Tbnn => 3,
            ModelKind::GConv => 4,
            ModelKind::Conv => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.tag() == tag)
    }

    pub fn is_trainable(self) -> bool {
        ModelKind::TRAINABLE.contains(&self)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model {s:?}; expected one of nomodel, smag, clark, tbnn, gconv, conv"
                ))
            })
    }
}

/// A closure with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ClosureModel {
    NoModel,
    Smagorinsky { cs: f64 },
    Clark,
    Tbnn(TbnnNet),
    GConv(GConvNet),
    Conv(ConvNet),
}

impl ClosureModel {
    /// Default closure of a family; networks get seeded random weights.
    pub fn init<R: Rng>(kind: ModelKind, rng: &mut R) -> Self {
        match kind {
            ModelKind::NoModel => ClosureModel::NoModel,
            ModelKind::Smagorinsky => ClosureModel::Smagorinsky {
                cs: classical::SMAGORINSKY_CONSTANT,
            },
            ModelKind::Clark => ClosureModel::Clark,
            ModelKind::Tbnn => ClosureModel::Tbnn(TbnnNet::new(&[64; 4], rng)),
            ModelKind::GConv => ClosureModel::GConv(GConvNet::new(
                GConvNet::DEFAULT_CHANNELS,
                GConvNet::DEFAULT_INNER_LAYERS,
                rng,
            )),
            ModelKind::Conv => ClosureModel::Conv(ConvNet::new(&[60; 4], rng)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ClosureModel::NoModel => ModelKind::NoModel,
            ClosureModel::Smagorinsky { .. } => ModelKind::Smagorinsky,
            ClosureModel::Clark => ModelKind::Clark,
            ClosureModel::Tbnn(_) => ModelKind::Tbnn,
            ClosureModel::GConv(_) => ModelKind::GConv,
            ClosureModel::Conv(_) => ModelKind::Conv,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn network(&self) -> Option<&dyn PointNet> {
        match self {
            ClosureModel::Tbnn(n) => Some(n),
            ClosureModel::GConv(n) => Some(n),
            ClosureModel::Conv(n) => Some(n),
            _ => None,
        }
    }

    pub fn network_mut(&mut self) -> Option<&mut dyn PointNet> {
        match self {
            ClosureModel::Tbnn(n) => Some(n),
            ClosureModel::GConv(n) => Some(n),
            ClosureModel::Conv(n) => Some(n),
            _ => None,
        }
    }

    /// Trainable scalars: free coefficients for the group convolution.
    pub fn parameter_count(&self) -> usize {
        match self {
            ClosureModel::NoModel | ClosureModel::Clark => 0,
            ClosureModel::Smagorinsky { .. } => 1,
            _ => self.network().unwrap().parameter_count(),
        }
    }

    /// Model stress at every point of a filtered velocity-gradient field.
    pub fn stress(&self, a: &[Mat3], delta: f64) -> Vec<Sym6> {
        let pointwise = |f: &(dyn Fn(&Mat3) -> Sym6 + Sync)| -> Vec<Sym6> {
            let mut out = vec![[0.0; 6]; a.len()];
            par::fill_indexed(&mut out, |i| f(&a[i]));
            out
        };
        match self {
            ClosureModel::NoModel => vec![[0.0; 6]; a.len()],
            ClosureModel::Smagorinsky { cs } => {
                pointwise(&|m| classical::smagorinsky(m, delta, *cs))
            }
            ClosureModel::Clark => pointwise(&|m| classical::clark(m, delta)),
            _ => nets::predict(self.network().unwrap(), a, delta),
        }
    }

    /// Model stress of a spectral velocity, or `None` for the no-model.
    pub fn spectral_stress(&self, u: &SpectralVelocity, delta: f64) -> Option<SpectralStress> {
        if let ClosureModel::NoModel = self {
            return None;
        }
        let a = spectral::velocity_gradient(u);
        let m = self.stress(&a, delta);
        Some(SpectralStress::from_physical(u.grid, &m).expect("stress field matches its grid"))
    }
}
