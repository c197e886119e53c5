//! Bounded particle swarm optimization with four update rules:
//!
//! - `Vanilla`: `v' = v + c1 r1 (p_i - z) + c2 r2 (p_g - z)`
//! - `Inertia`: `v' = w(k) v + ...` with the sigmoid schedule
//!   `w(k) = 2 w0 / (1 + exp(sigma k / k_max))`
//! - `ConstantInertia`: as `Inertia` with a fixed `omega_const`
//! - `Mpso`: `Inertia` followed by a per-particle line search along the new
//!   velocity. Candidate `n` (1..=j) is `z0 + a(n) * v0` where the per-dimension
//!   speed coefficient `a(n)` is `n` for slow dimensions, `n / j` for fast ones
//!   and `1 +/- n / j` in between. The unrefined move `z0 + v0` always stays in
//!   the candidate set, so refinement never does worse than `Inertia` given the
//!   same random draws.
//!
//! All randomness comes from one ChaCha stream per swarm. Draws for a sweep are
//! taken in particle order before any evaluation, evaluations may run on the
//! rayon pool, and best-position reduction happens in particle order, so runs
//! are bit-identical regardless of thread count.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitness to minimize over a fixed-dimension position vector.
///
/// Implementations must be pure: the optimizer calls `evaluate` from several
/// threads at once and relies on identical inputs giving identical outputs.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, position: &[f64]) -> f64;
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, position: &[f64]) -> f64 {
        (self.f)(position)
    }
}

/// `sum(z^2)`.
pub fn sphere(dim: usize) -> FnObjective<impl Fn(&[f64]) -> f64 + Sync> {
    FnObjective::new(dim, |z: &[f64]| z.iter().map(|x| x * x).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Vanilla,
    Inertia,
    ConstantInertia,
    Mpso,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Vanilla, Variant::Inertia, Variant::ConstantInertia, Variant::Mpso];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::Inertia => "inertia",
            Variant::ConstantInertia => "constant-inertia",
            Variant::Mpso => "mpso",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown swarm variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PSOConfig {
    /// Number of particles, `M`.
    pub swarm_size: usize,
    pub c1: f64,
    pub c2: f64,
    /// Lower bound of the search box, applied to every dimension.
    pub z_min: f64,
    pub z_max: f64,
    /// Velocity cap `N_i1`; `None` means half the box width.
    pub n_i1: Option<f64>,
    /// Velocity floor `N_i2`; `None` means 1% of the box width.
    pub n_i2: Option<f64>,
    pub sigma: f64,
    /// Ceiling of the inertia schedule, `w(0)`.
    pub omega0: f64,
    /// Inertia used by [`Variant::ConstantInertia`].
    pub omega_const: f64,
    /// Refinement sub-steps `j` per particle per iteration.
    pub sub_steps: usize,
    pub k_max: usize,
    pub target_fitness: f64,
    pub seed: u64,
}

impl Default for PSOConfig {
    fn default() -> Self {
        Self {
            swarm_size: 50,
            c1: 2.0,
            c2: 2.4,
            z_min: -5.0,
            z_max: 5.0,
            n_i1: None,
            n_i2: None,
            sigma: 0.8,
            omega0: 0.9,
            omega_const: 0.7,
            sub_steps: 3,
            k_max: 1000,
            target_fitness: 0.005,
            seed: 0,
        }
    }
}

impl PSOConfig {
    pub fn velocity_cap(&self) -> f64 {
        self.n_i1.unwrap_or(0.5 * (self.z_max - self.z_min))
    }

    pub fn velocity_floor(&self) -> f64 {
        self.n_i2.unwrap_or(0.01 * (self.z_max - self.z_min))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.swarm_size < 2 {
            return bad(format!("swarm_size must be >= 2, got {}", self.swarm_size));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return bad("c1 and c2 must be finite and >= 0".into());
        }
        if !(self.z_min.is_finite() && self.z_max.is_finite() && self.z_min < self.z_max) {
            return bad(format!("need z_min < z_max, got [{}, {}]", self.z_min, self.z_max));
        }
        let (cap, floor) = (self.velocity_cap(), self.velocity_floor());
        if !(cap.is_finite() && floor > 0.0 && floor < cap) {
            return bad(format!("need 0 < n_i2 < n_i1 < inf, got n_i2={floor}, n_i1={cap}"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive".into());
        }
        if !(self.omega0.is_finite() && self.omega_const.is_finite()) {
            return bad("inertia weights must be finite".into());
        }
        if self.sub_steps == 0 {
            return bad("j must be >= 1".into());
        }
        if self.k_max == 0 {
            return bad("k_max must be >= 1".into());
        }
        if self.target_fitness.is_nan() {
            return bad("target_fitness must be a number".into());
        }
        Ok(())
    }
}

/// `2 w0 / (1 + exp(sigma k / k_max))`.
pub fn inertia_weight(k: usize, config: &PSOConfig) -> f64 {
    2.0 * config.omega0 / (1.0 + (config.sigma * k as f64 / config.k_max as f64).exp())
}

fn same_len(expected: usize, others: &[&[f64]]) -> Result<()> {
    match others.iter().find(|o| o.len() != expected) {
        Some(o) => Err(Error::DimensionMismatch { expected, got: o.len() }),
        None => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn attract(v: &[f64], z: &[f64], p_i: &[f64], p_g: &[f64], omega: f64, c1: f64, c2: f64, r1: f64, r2: f64) -> Result<Vec<f64>> {
    same_len(v.len(), &[z, p_i, p_g])?;
    Ok((0..v.len())
        .map(|d| omega * v[d] + c1 * r1 * (p_i[d] - z[d]) + c2 * r2 * (p_g[d] - z[d]))
        .collect())
}

/// Velocity rule without inertia damping. The result is not clamped.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update_vanilla(v: &[f64], z: &[f64], p_i: &[f64], p_g: &[f64], c1: f64, c2: f64, r1: f64, r2: f64) -> Result<Vec<f64>> {
    attract(v, z, p_i, p_g, 1.0, c1, c2, r1, r2)
}

/// Inertia-weighted velocity rule, clamped per dimension to `[-cap, cap]`.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update_inertia(
    v: &[f64],
    z: &[f64],
    p_i: &[f64],
    p_g: &[f64],
    omega: f64,
    c1: f64,
    c2: f64,
    r1: f64,
    r2: f64,
    cap: f64,
) -> Result<Vec<f64>> {
    let mut out = attract(v, z, p_i, p_g, omega, c1, c2, r1, r2)?;
    clamp_velocity(&mut out, cap);
    Ok(out)
}

fn clamp_velocity(v: &mut [f64], cap: f64) {
    for x in v {
        *x = x.clamp(-cap, cap);
    }
}

/// `z + v`, clamped into `[z_min, z_max]`.
pub fn position_update(z: &[f64], v: &[f64], z_min: f64, z_max: f64) -> Vec<f64> {
    z.iter().zip(v).map(|(a, b)| (a + b).clamp(z_min, z_max)).collect()
}

/// Speed coefficient `a(n)` for one velocity component.
pub fn speed_coefficient(v_base: f64, n: usize, config: &PSOConfig, sign: f64) -> f64 {
    let speed = v_base.abs();
    let ratio = n as f64 / config.sub_steps as f64;
    if speed < config.velocity_floor() {
        n as f64
    } else if speed >= config.velocity_cap() {
        ratio
    } else {
        1.0 + sign * ratio
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Velocity produced by this iteration's update, before refinement.
    pub base_velocity: Vec<f64>,
    pub fitness: f64,
    pub personal_best: Vec<f64>,
    pub personal_best_fitness: f64,
}

impl Particle {
    fn offer_personal_best(&mut self) {
        if self.fitness < self.personal_best_fitness {
            self.personal_best.clone_from(&self.position);
            self.personal_best_fitness = self.fitness;
        }
    }
}

/// Random numbers consumed by one particle in one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub r1: f64,
    pub r2: f64,
    /// One `+1`/`-1` per refinement sub-step.
    pub signs: Vec<f64>,
}

impl Draws {
    fn take(rng: &mut ChaCha8Rng, sub_steps: usize) -> Self {
        let r1 = rng.gen_range(0.0..=1.0);
        let r2 = rng.gen_range(0.0..=1.0);
        let signs = (0..sub_steps).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        Self { r1, r2, signs }
    }
}

fn checked_eval(objective: &dyn Objective, position: &[f64], particle: usize, sub_step: Option<usize>) -> Result<f64> {
    let value = objective.evaluate(position);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteFitness { particle, sub_step, value })
    }
}

/// Line search along the particle's base velocity.
///
/// `particle.position` and `particle.fitness` must hold the unrefined move
/// `base_position + base_velocity`; candidate `n` replaces it only when
/// strictly better. `signs[n - 1]` picks the mid-band direction of sub-step
/// `n`. Returns the kept fitness.
pub fn refine_substeps(
    particle: &mut Particle,
    base_position: &[f64],
    objective: &dyn Objective,
    config: &PSOConfig,
    signs: &[f64],
    index: usize,
) -> Result<f64> {
    same_len(base_position.len(), &[&particle.base_velocity])?;
    if signs.len() < config.sub_steps {
        return Err(Error::DimensionMismatch { expected: config.sub_steps, got: signs.len() });
    }
    let mut candidate = vec![0.0; base_position.len()];
    for n in 1..=config.sub_steps {
        for (d, c) in candidate.iter_mut().enumerate() {
            let v0 = particle.base_velocity[d];
            let a = speed_coefficient(v0, n, config, signs[n - 1]);
            *c = (base_position[d] + a * v0).clamp(config.z_min, config.z_max);
        }
        let fit = checked_eval(objective, &candidate, index, Some(n))?;
        if fit < particle.fitness {
            particle.position.copy_from_slice(&candidate);
            particle.fitness = fit;
        }
    }
    particle.offer_personal_best();
    Ok(particle.fitness)
}

/// Moves one particle and updates its personal best. `omega` is ignored by
/// [`Variant::Vanilla`].
#[allow(clippy::too_many_arguments)]
pub fn step_particle(
    particle: &mut Particle,
    global_best: &[f64],
    omega: f64,
    draws: &Draws,
    variant: Variant,
    objective: &dyn Objective,
    config: &PSOConfig,
    index: usize,
) -> Result<()> {
    let Particle { position, velocity, personal_best, .. } = &*particle;
    let cap = config.velocity_cap();
    let (c1, c2, r1, r2) = (config.c1, config.c2, draws.r1, draws.r2);
    let velocity = match variant {
        Variant::Vanilla => {
            let mut v = velocity_update_vanilla(velocity, position, personal_best, global_best, c1, c2, r1, r2)?;
            clamp_velocity(&mut v, cap);
            v
        }
        _ => velocity_update_inertia(velocity, position, personal_best, global_best, omega, c1, c2, r1, r2, cap)?,
    };
    let base_position = std::mem::take(&mut particle.position);
    particle.position = position_update(&base_position, &velocity, config.z_min, config.z_max);
    particle.fitness = checked_eval(objective, &particle.position, index, None)?;
    particle.base_velocity.clone_from(&velocity);
    particle.velocity = velocity;
    if variant == Variant::Mpso {
        refine_substeps(particle, &base_position, objective, config, &draws.signs, index)?;
    } else {
        particle.offer_personal_best();
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best: Vec<f64>,
    pub global_best_fitness: f64,
    /// Completed sweeps.
    pub iteration: usize,
    rng: ChaCha8Rng,
}

impl Swarm {
    /// Random positions in the box, random velocities within the cap.
    pub fn init(objective: &dyn Objective, config: &PSOConfig) -> Result<Self> {
        config.validate()?;
        let dim = objective.dim();
        let cap = config.velocity_cap();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut particles: Vec<Particle> = (0..config.swarm_size)
            .map(|_| {
                let position: Vec<f64> = (0..dim).map(|_| rng.gen_range(config.z_min..=config.z_max)).collect();
                let velocity: Vec<f64> = (0..dim).map(|_| rng.gen_range(-cap..=cap)).collect();
                Particle {
                    personal_best: position.clone(),
                    base_velocity: velocity.clone(),
                    position,
                    velocity,
                    fitness: f64::INFINITY,
                    personal_best_fitness: f64::INFINITY,
                }
            })
            .collect();
        particles
            .par_iter_mut()
            .enumerate()
            .map(|(i, p)| {
                p.fitness = checked_eval(objective, &p.position, i, None)?;
                p.personal_best_fitness = p.fitness;
                Ok(())
            })
            .collect::<Vec<Result<()>>>()
            .into_iter()
            .collect::<Result<()>>()?;

        let mut swarm = Self {
            global_best: particles[0].personal_best.clone(),
            global_best_fitness: particles[0].personal_best_fitness,
            particles,
            iteration: 0,
            rng,
        };
        swarm.reduce_global_best();
        Ok(swarm)
    }

    fn reduce_global_best(&mut self) {
        for p in &self.particles {
            if p.personal_best_fitness < self.global_best_fitness {
                self.global_best.clone_from(&p.personal_best);
                self.global_best_fitness = p.personal_best_fitness;
            }
        }
    }

    /// Inertia weight the next sweep will use.
    pub fn current_inertia(&self, config: &PSOConfig, variant: Variant) -> f64 {
        match variant {
            Variant::Vanilla => 1.0,
            Variant::ConstantInertia => config.omega_const,
            Variant::Inertia | Variant::Mpso => inertia_weight(self.iteration.min(config.k_max), config),
        }
    }

    /// Draws the random numbers for the next sweep without consuming them.
    pub fn peek_draws(&self, config: &PSOConfig) -> Vec<Draws> {
        let mut rng = self.rng.clone();
        (0..self.particles.len()).map(|_| Draws::take(&mut rng, config.sub_steps)).collect()
    }
}

pub fn swarm_init(objective: &dyn Objective, config: &PSOConfig) -> Result<Swarm> {
    Swarm::init(objective, config)
}

/// One synchronous sweep: every particle moves against the global best of
/// the previous sweep, then personal and global bests are reduced.
pub fn pso_iteration(swarm: &mut Swarm, objective: &dyn Objective, config: &PSOConfig, variant: Variant) -> Result<()> {
    let omega = swarm.current_inertia(config, variant);
    let draws: Vec<Draws> = (0..swarm.particles.len())
        .map(|_| Draws::take(&mut swarm.rng, config.sub_steps))
        .collect();
    let global_best = &swarm.global_best;
    swarm
        .particles
        .par_iter_mut()
        .zip(draws.par_iter())
        .enumerate()
        .map(|(i, (p, d))| step_particle(p, global_best, omega, d, variant, objective, config, i))
        .collect::<Vec<Result<()>>>()
        .into_iter()
        .collect::<Result<()>>()?;
    swarm.reduce_global_best();
    swarm.iteration += 1;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRun {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub initial_best_fitness: f64,
    /// Global best fitness after each completed sweep.
    pub trace: Vec<f64>,
    pub iterations_used: usize,
    pub reached_target: bool,
}

/// Sweeps until the global best reaches `target_fitness` or `k_max` sweeps
/// have run. At least one sweep always runs.
pub fn run_optimizer(objective: &dyn Objective, config: &PSOConfig, variant: Variant) -> Result<OptimizerRun> {
    let mut swarm = Swarm::init(objective, config)?;
    let initial_best_fitness = swarm.global_best_fitness;
    let mut trace = Vec::new();
    loop {
        pso_iteration(&mut swarm, objective, config, variant)?;
        trace.push(swarm.global_best_fitness);
        if swarm.global_best_fitness <= config.target_fitness || swarm.iteration >= config.k_max {
            break;
        }
    }
    Ok(OptimizerRun {
        reached_target: swarm.global_best_fitness <= config.target_fitness,
        best_position: swarm.global_best,
        best_fitness: swarm.global_best_fitness,
        initial_best_fitness,
        iterations_used: swarm.iteration,
        trace,
    })
}

/// `iteration,global_best_fitness` rows, iterations counted from 1.
pub fn trace_to_csv(trace: &[f64]) -> String {
    let mut out = String::from("iteration,global_best_fitness\n");
    for (i, f) in trace.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, f));
    }
    out
}
