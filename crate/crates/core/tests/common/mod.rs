#![allow(dead_code)]

use eqles::closures::train::{self, TrainingSample};
use eqles::closures::{ClosureModel, ModelKind, PointNet};
use eqles::tensor3::{sym_deviatoric, to_sym, Mat3, Sym6};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DELTA: f64 = 0.4;

pub fn random_mat<R: Rng>(rng: &mut R) -> Mat3 {
    std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
}

/// Two samples of 4³ random gradients with random deviatoric targets.
pub fn toy_batch(seed: u64) -> Vec<TrainingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..2)
        .map(|t| {
            let a: Vec<Mat3> = (0..64).map(|_| random_mat(&mut rng)).collect();
            let tau: Vec<Sym6> = (0..64)
                .map(|_| sym_deviatoric(&to_sym(&random_mat(&mut rng))))
                .collect();
            TrainingSample::new(t as f64, a, tau).unwrap()
        })
        .collect()
}

/// `‖g_analytic − g_fd‖ / ‖g_fd‖` with central differences of step 1e-6,
/// over all coordinates or over `subset` randomly chosen ones.
pub fn gradient_check(net: &mut dyn PointNet, batch: &[TrainingSample], subset: Option<usize>) -> f64 {
    let h = 1e-6;
    let analytic = train::loss_and_gradient(&*net, batch, DELTA).1;
    let p0 = net.params();
    let coords: Vec<usize> = match subset {
        Some(k) => sample(&mut ChaCha8Rng::seed_from_u64(17), p0.len(), k.min(p0.len())).into_vec(),
        None => (0..p0.len()).collect(),
    };
    let mut p = p0.clone();
    let mut diff = 0.0;
    let mut norm = 0.0;
    for i in coords {
        p[i] = p0[i] + h;
        net.set_params(&p);
        let up = train::loss_and_gradient(&*net, batch, DELTA).0;
        p[i] = p0[i] - h;
        net.set_params(&p);
        let down = train::loss_and_gradient(&*net, batch, DELTA).0;
        p[i] = p0[i];
        let fd = (up - down) / (2.0 * h);
        diff += (analytic[i] - fd).powi(2);
        norm += fd * fd;
    }
    net.set_params(&p0);
    (diff / norm).sqrt()
}

pub fn model_gradient_check(kind: ModelKind, subset: Option<usize>) -> f64 {
    let mut model = ClosureModel::init(kind, &mut ChaCha8Rng::seed_from_u64(5));
    gradient_check(model.network_mut().unwrap(), &toy_batch(11), subset)
}

use eqles::simulation::{apply_forcing, rk3_step, ForcingTargets};
use eqles::spectral::{self, SpectralVelocity};

/// One solver step: RK3 on the pressure-free right-hand side, then the
/// shell forcing when `targets` is given.
pub fn step(u: &SpectralVelocity, dt: f64, nu: f64, targets: Option<&ForcingTargets>) -> SpectralVelocity {
    let mut next = rk3_step(u, dt, |v| spectral::rhs(v, None, None, nu));
    if let Some(t) = targets {
        apply_forcing(&mut next, t);
    }
    next
}
