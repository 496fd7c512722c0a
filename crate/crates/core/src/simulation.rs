//! Time integration for DNS and LES: random initial fields, Wray's
//! low-storage RK3, CFL-type adaptive steps and shell-energy forcing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par;
use crate::spectral::{self, SpectralStress, SpectralVelocity};

/// Stage weights of Wray's scheme on the current stage tendency.
pub const RK3_GAMMA: [f64; 3] = [8.0 / 15.0, 5.0 / 12.0, 3.0 / 4.0];
/// Stage weights on the previous stage tendency.
pub const RK3_ZETA: [f64; 2] = [-17.0 / 60.0, -5.0 / 12.0];

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub nu: f64,
    pub cfl: f64,
    pub length: f64,
    pub n: usize,
    pub initial_energy: f64,
    /// Shells `1..=forced_shells` are held at their initial energies.
    pub forced_shells: usize,
    pub warmup_time: f64,
    pub sample_every: usize,
    pub n_snapshots: usize,
    pub seed: u64,
    /// Print `step=.. t=.. dt=.. E=..` lines to standard error.
    pub progress: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nu: 2e-3,
            cfl: 0.35,
            length: std::f64::consts::TAU,
            n: 64,
            initial_energy: 0.2,
            forced_shells: 2,
            warmup_time: 1.0,
            sample_every: 10,
            n_snapshots: 30,
            seed: 0,
            progress: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64, name: &str| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        pos(self.nu, "nu")?;
        pos(self.cfl, "cfl")?;
        pos(self.length, "box_length")?;
        pos(self.initial_energy, "initial_energy")?;
        if !(self.warmup_time.is_finite() && self.warmup_time >= 0.0) {
            return Err(Error::Config("warmup_time must be nonnegative".into()));
        }
        if self.forced_shells == 0 || self.sample_every == 0 || self.n_snapshots == 0 {
            return Err(Error::Config(
                "forced_shells, sample_every and n_snapshots must be at least 1".into(),
            ));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.length)
    }
}

/// Shell level `κ` with `κ ≤ ‖k‖ < κ + 1`.
#[inline]
pub fn shell_index(k: [i64; 3]) -> usize {
    let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as u64;
    k2.isqrt() as usize
}

/// `E(κ) = ½ Σ_{k ∈ K(κ)} ‖û(k)‖²` for `κ = 0..len`.
pub fn shell_energies(u: &SpectralVelocity) -> Vec<f64> {
    let g = u.grid;
    let max = shell_index([g.n() as i64 / 2; 3]) + 1;
    let mut e = vec![0.0; max];
    for idx in 0..g.len() {
        let s = shell_index(g.wavevector(idx));
        e[s] += 0.5 * u.comp.iter().map(|c| c[idx].norm_sqr()).sum::<f64>();
    }
    e
}

/// Largest shell fully contained in the dealiasing band.
pub fn largest_complete_shell(grid: &Grid) -> usize {
    let n = grid.n() as i64;
    ((n - 1) / 3) as usize
}

/// Steps 1–3 of the initialization: Gaussian white noise, projection, and
/// per-shell normalization to `E(κ) = κ^(-5/3)`. Only shells fully inside
/// the dealiasing band are kept; the mean is zero.
pub fn init_velocity_unscaled(grid: Grid, seed: u64) -> Result<SpectralVelocity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phys: [Vec<f64>; 3] = std::array::from_fn(|_| {
        (0..grid.len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    });
    let mut u = spectral::leray_project(&SpectralVelocity::from_physical(grid, &phys)?);
    let kmax = largest_complete_shell(&grid);
    let energies = shell_energies(&u);
    let shells: Vec<usize> = (0..grid.len()).map(|i| shell_index(grid.wavevector(i))).collect();
    for c in u.comp.iter_mut() {
        for (idx, v) in c.iter_mut().enumerate() {
            let s = shells[idx];
            if s == 0 || s > kmax || energies[s] == 0.0 {
                *v = Default::default();
            } else {
                *v *= ((s as f64).powf(-5.0 / 3.0) / energies[s]).sqrt();
            }
        }
    }
    Ok(u)
}

/// Random divergence-free field with a `κ^(-5/3)` shell spectrum and total
/// energy `energy`.
pub fn init_velocity(grid: Grid, seed: u64, energy: f64) -> Result<SpectralVelocity> {
    let mut u = init_velocity_unscaled(grid, seed)?;
    let e = u.energy();
    u.scale((energy / e).sqrt());
    Ok(u)
}

/// `C min(h / max|u_i|, h² / ν)`.
pub fn adaptive_dt_from(h: f64, max_velocity: f64, nu: f64, cfl: f64) -> f64 {
    let viscous = if nu > 0.0 { h * h / nu } else { f64::INFINITY };
    let convective = if max_velocity > 0.0 {
        h / max_velocity
    } else {
        f64::INFINITY
    };
    cfl * convective.min(viscous)
}

/// Largest velocity component magnitude over the grid, in physical space.
pub fn max_velocity(u: &SpectralVelocity) -> f64 {
    let p = u.to_physical();
    p.iter()
        .map(|c| par::max_range(c.len(), |i| c[i].abs()))
        .fold(0.0, |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

pub fn adaptive_dt(u: &SpectralVelocity, nu: f64, cfl: f64) -> f64 {
    adaptive_dt_from(u.grid.spacing(), max_velocity(u), nu, cfl)
}

/// Mean dissipation `ν Σ_k |ξ|² ‖û(k)‖²`.
pub fn dissipation(u: &SpectralVelocity, nu: f64) -> f64 {
    let g = u.grid;
    nu * par::sum_range(g.len(), |idx| {
        let xi = spectral::angular_wavevector(&g, idx);
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        k2 * u.comp.iter().map(|c| c[idx].norm_sqr()).sum::<f64>()
    })
}

/// States the RK3 integrator can advance.
pub trait RkState: Clone {
    /// `self += a x`.
    fn axpy(&mut self, a: f64, x: &Self);
}

impl RkState for f64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
}

impl RkState for SpectralVelocity {
    fn axpy(&mut self, a: f64, x: &Self) {
        SpectralVelocity::axpy(self, a, x);
    }
}

/// One step of Wray's three-stage low-storage Runge–Kutta scheme.
pub fn rk3_step<S: RkState, F: FnMut(&S) -> S>(u: &S, dt: f64, mut rhs: F) -> S {
    let f0 = rhs(u);
    let mut v = u.clone();
    v.axpy(dt * RK3_GAMMA[0], &f0);
    let f1 = rhs(&v);
    v.axpy(dt * RK3_GAMMA[1], &f1);
    v.axpy(dt * RK3_ZETA[0], &f0);
    let f2 = rhs(&v);
    v.axpy(dt * RK3_GAMMA[2], &f2);
    v.axpy(dt * RK3_ZETA[1], &f1);
    v
}

/// Shell energies the forcing holds fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingTargets {
    pub energies: Vec<f64>,
}

impl ForcingTargets {
    /// Current energies of shells `1..=shells`.
    pub fn from_field(u: &SpectralVelocity, shells: usize) -> Self {
        let e = shell_energies(u);
        ForcingTargets {
            energies: (1..=shells).map(|k| e.get(k).copied().unwrap_or(0.0)).collect(),
        }
    }

    pub fn shells(&self) -> usize {
        self.energies.len()
    }
}

/// Rescales each forced shell to its target energy. Returns the shells that
/// could not be rescaled because they carry no energy.
pub fn apply_forcing(u: &mut SpectralVelocity, targets: &ForcingTargets) -> Vec<usize> {
    let g = u.grid;
    let e = shell_energies(u);
    let mut factors = vec![1.0; targets.shells() + 1];
    let mut skipped = Vec::new();
    for (s, &t) in targets.energies.iter().enumerate() {
        let kappa = s + 1;
        let cur = e.get(kappa).copied().unwrap_or(0.0);
        if cur > 0.0 {
            factors[kappa] = (t / cur).sqrt();
        } else if t > 0.0 {
            skipped.push(kappa);
        }
    }
    let reach = targets.shells() as i64;
    for idx in 0..g.len() {
        let k = g.wavevector(idx);
        if k.iter().any(|x| x.abs() > reach) {
            continue;
        }
        let s = shell_index(k);
        if (1..=targets.shells()).contains(&s) {
            let f = factors[s];
            for c in u.comp.iter_mut() {
                c[idx] *= f;
            }
        }
    }
    skipped
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub u: SpectralVelocity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSample {
    pub time: f64,
    pub energy: f64,
    pub dissipation: f64,
}

#[derive(Clone, Debug, Default)]
pub struct DnsOutput {
    pub timeseries: Vec<TimeSample>,
    pub snapshot_times: Vec<f64>,
    pub targets: Option<ForcingTargets>,
    /// Forced shells that could not be rescaled, with the step number.
    pub forcing_warnings: Vec<(usize, usize)>,
}

fn unstable(time: f64, what: &str) -> Error {
    Error::Instability {
        time,
        detail: format!("non-finite values in {what}"),
    }
}

/// Forced DNS: warm-up until `t = 0`, then one snapshot every
/// `sample_every` steps starting with the post-warm-up state. Snapshots are
/// handed to `sink` as they are produced. On instability the error carries
/// the failure time; `partial` keeps the series recorded so far.
pub fn run_dns<F>(config: &SimConfig, mut sink: F, partial: &mut DnsOutput) -> Result<()>
where
    F: FnMut(Snapshot) -> Result<()>,
{
    config.validate()?;
    let grid = config.grid()?;
    let mut u = init_velocity(grid, config.seed, config.initial_energy)?;
    let targets = ForcingTargets::from_field(&u, config.forced_shells);
    partial.targets = Some(targets.clone());
    let nu = config.nu;
    let mut t = -config.warmup_time;
    let mut step = 0usize;
    let record = |u: &SpectralVelocity, t: f64, out: &mut DnsOutput| {
        out.timeseries.push(TimeSample {
            time: t,
            energy: u.energy(),
            dissipation: dissipation(u, nu),
        });
    };
    record(&u, t, partial);

    let mut advance = |u: &mut SpectralVelocity, t: &mut f64, max_dt: f64, out: &mut DnsOutput| {
        let mut dt = adaptive_dt(u, nu, config.cfl);
        if !dt.is_finite() {
            return Err(unstable(*t, "velocity"));
        }
        dt = dt.min(max_dt);
        let mut next = rk3_step(u, dt, |v| spectral::rhs(v, None, None, nu));
        step += 1;
        let skipped = apply_forcing(&mut next, &targets);
        out.forcing_warnings.extend(skipped.into_iter().map(|s| (step, s)));
        *t += dt;
        if !next.is_finite() {
            return Err(unstable(*t, "velocity"));
        }
        *u = next;
        record(u, *t, out);
        if config.progress {
            eprintln!("step={step} t={:.6} dt={dt:.6e} E={:.6e}", *t, u.energy());
        }
        Ok(())
    };

    // The last warm-up step is clipped so that t + (-t) lands on zero exactly.
    while t < 0.0 {
        let remaining = -t;
        advance(&mut u, &mut t, remaining, partial)?;
    }
    for s in 0..config.n_snapshots {
        if s > 0 {
            for _ in 0..config.sample_every {
                advance(&mut u, &mut t, f64::INFINITY, partial)?;
            }
        }
        partial.snapshot_times.push(t);
        sink(Snapshot { time: t, u: u.clone() })?;
    }
    Ok(())
}

/// How LES time steps are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum StepPolicy {
    Adaptive { cfl: f64 },
    /// Reuse a recorded step sequence.
    Replay(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LesConfig {
    pub nu: f64,
    pub policy: StepPolicy,
    pub targets: Option<ForcingTargets>,
    /// Truncate the closure stress to the dealiasing band before taking its
    /// divergence.
    pub truncate_closure: bool,
}

#[derive(Clone, Debug, Default)]
pub struct LesOutput {
    pub times: Vec<f64>,
    pub states: Vec<SpectralVelocity>,
    pub steps: Vec<f64>,
    /// Time at which the trajectory produced non-finite values.
    pub instability: Option<f64>,
}

/// Right-hand side with a closure stress `m` added to the resolved stress.
pub fn les_rhs(
    u: &SpectralVelocity,
    closure: Option<&SpectralStress>,
    nu: f64,
    truncate_closure: bool,
) -> SpectralVelocity {
    if truncate_closure || closure.is_none() {
        return spectral::rhs(u, None, closure, nu);
    }
    let mut out = spectral::rhs(u, None, None, nu);
    let m = closure.unwrap();
    let g = u.grid;
    let mut div = SpectralVelocity::zeros(g);
    for i in 0..3 {
        let cols = [m.get(i, 0), m.get(i, 1), m.get(i, 2)];
        par::fill_indexed(&mut div.comp[i], |idx| {
            let xi = spectral::angular_wavevector(&g, idx);
            let d = cols[0][idx] * xi[0] + cols[1][idx] * xi[1] + cols[2][idx] * xi[2];
            spectral::times_neg_i(d)
        });
    }
    spectral::leray_project_in_place(&mut div);
    out.axpy(1.0, &div);
    out
}

/// Integrates the LES from `u0` (at `times[0]`) and records the state at
/// every requested time. Modes of `u0` outside the dealiasing band only
/// decay viscously, so the first recorded state is `u0` itself. `closure` maps a state to its model stress in
/// spectral form, or `None` for no model.
pub fn run_les<F>(u0: &SpectralVelocity, times: &[f64], config: &LesConfig, closure: F) -> LesOutput
where
    F: Fn(&SpectralVelocity) -> Option<SpectralStress>,
{
    let mut out = LesOutput::default();
    let Some(&t0) = times.first() else {
        return out;
    };
    let mut u = u0.clone();
    let targets = config
        .targets
        .clone()
        .unwrap_or_else(|| ForcingTargets::from_field(&u, 2));
    let mut t = t0;
    out.times.push(t);
    out.states.push(u.clone());
    let mut replay_pos = 0usize;
    let rhs = |v: &SpectralVelocity| {
        let m = closure(v);
        les_rhs(v, m.as_ref(), config.nu, config.truncate_closure)
    };
    for &target in &times[1..] {
        while t < target {
            let dt = match &config.policy {
                StepPolicy::Adaptive { cfl } => {
                    let d = adaptive_dt(&u, config.nu, *cfl);
                    if d.is_finite() {
                        d.min(target - t)
                    } else {
                        d
                    }
                }
                StepPolicy::Replay(seq) => match seq.get(replay_pos) {
                    Some(&d) => d,
                    None => target - t,
                },
            };
            replay_pos += 1;
            if !dt.is_finite() || dt <= 0.0 {
                out.instability = Some(t);
                return out;
            }
            let mut next = rk3_step(&u, dt, rhs);
            apply_forcing(&mut next, &targets);
            out.steps.push(dt);
            t = if dt == target - t {
                target
            } else {
                t + dt
            };
            if !next.is_finite() {
                out.instability = Some(t);
                return out;
            }
            u = next;
        }
        out.times.push(target);
        out.states.push(u.clone());
    }
    out
}
