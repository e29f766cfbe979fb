//! Binary particle swarm search over feature masks.
//!
//! Standard BPSO moves each particle by the inertia/cognitive/social
//! velocity rule, squashes velocities through a sigmoid and resamples
//! position bits as Bernoulli draws. The IBPSO variant watches for gBest
//! fitness stagnation and, after `stagnation_limit` flat generations,
//! replaces gBest with the bitwise AND of all pBest strings so the swarm
//! departs the local optimum. A separate best-ever archive keeps the
//! reported answer monotone even when a regenerated gBest is worse.
//!
//! Fitness is a pluggable `Fn(&FeatureMask) -> f64` (higher is better,
//! values in `[0,1]`); evaluations of one generation may run concurrently.
//! Each particle draws from its own seeded RNG stream, so results are
//! identical for any thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Variant {
    Bpso,
    Ibpso,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmParams {
    /// Swarm size.
    pub particles: usize,
    /// Inertia weight w.
    pub inertia: f64,
    /// Cognitive acceleration c1 (pull toward pBest).
    pub cognitive: f64,
    /// Social acceleration c2 (pull toward gBest).
    pub social: f64,
    /// Symmetric velocity clamp; bounds sigmoid saturation.
    pub vmax: f64,
    pub max_iter: usize,
    /// Flat generations of gBest fitness before IBPSO regenerates.
    pub stagnation_limit: usize,
    pub variant: Variant,
}

impl Default for SwarmParams {
    fn default() -> Self {
        SwarmParams {
            particles: 30,
            inertia: 1.0,
            cognitive: 2.0,
            social: 2.0,
            vmax: 6.0,
            max_iter: 100,
            stagnation_limit: 3,
            variant: Variant::Bpso,
        }
    }
}

impl SwarmParams {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::InvalidParam(format!(
                "swarm needs at least 2 particles, got {}",
                self.particles
            )));
        }
        if self.vmax <= 0.0 || !self.vmax.is_finite() {
            return Err(Error::InvalidParam(format!("vmax must be positive, got {}", self.vmax)));
        }
        if self.stagnation_limit == 0 {
            return Err(Error::InvalidParam("stagnation_limit must be >= 1".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: FeatureMask,
    pub velocity: Vec<f64>,
    pub pbest_position: FeatureMask,
    pub pbest_fitness: f64,
}

/// Strict-improvement rule shared by pBest, gBest and the archive: higher
/// fitness wins; at equal fitness the mask with fewer selected features wins.
pub(crate) fn improves(
    new_fitness: f64,
    new_mask: &FeatureMask,
    old_fitness: f64,
    old_mask: &FeatureMask,
) -> bool {
    new_fitness > old_fitness
        || (new_fitness == old_fitness && new_mask.popcount() < old_mask.popcount())
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest_position: FeatureMask,
    pub gbest_fitness: f64,
    pub best_ever_position: FeatureMask,
    pub best_ever_fitness: f64,
    pub stagnation_counter: usize,
    pub iteration: usize,
    pub params: SwarmParams,
    rngs: Vec<ChaCha8Rng>,
    master_rng: ChaCha8Rng,
}

impl SwarmState {
    pub fn dimension(&self) -> usize {
        self.gbest_position.len()
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Build a swarm of random particles: Bernoulli(0.5) position bits, uniform
/// velocities in [-vmax, vmax], pBest seeded with the evaluated start
/// position, gBest with the best pBest. Deterministic given the seed.
pub fn init_swarm<F>(dim: usize, params: SwarmParams, seed: u64, fitness: &F) -> Result<SwarmState>
where
    F: Fn(&FeatureMask) -> f64 + Sync,
{
    if dim < 1 {
        return Err(Error::InvalidParam("dimension must be >= 1".to_string()));
    }
    params.validate()?;

    let mut rngs: Vec<ChaCha8Rng> = (0..params.particles)
        .map(|i| stream_rng(seed, i as u64 + 1))
        .collect();
    let master_rng = stream_rng(seed, 0);

    let mut particles: Vec<Particle> = rngs
        .iter_mut()
        .map(|rng| {
            let bits: Vec<bool> = (0..dim).map(|_| rng.gen::<f64>() < 0.5).collect();
            let velocity: Vec<f64> =
                (0..dim).map(|_| rng.gen_range(-params.vmax..params.vmax)).collect();
            let position = FeatureMask::from_bits(bits);
            Particle {
                pbest_position: position.clone(),
                pbest_fitness: 0.0,
                position,
                velocity,
            }
        })
        .collect();

    let initial: Vec<f64> = particles
        .par_iter()
        .map(|p| fitness(&p.position))
        .collect();
    for (p, &f) in particles.iter_mut().zip(&initial) {
        p.pbest_fitness = f;
    }

    let mut best = 0usize;
    for i in 1..particles.len() {
        if improves(
            particles[i].pbest_fitness,
            &particles[i].pbest_position,
            particles[best].pbest_fitness,
            &particles[best].pbest_position,
        ) {
            best = i;
        }
    }
    let gbest_position = particles[best].pbest_position.clone();
    let gbest_fitness = particles[best].pbest_fitness;

    Ok(SwarmState {
        best_ever_position: gbest_position.clone(),
        best_ever_fitness: gbest_fitness,
        gbest_position,
        gbest_fitness,
        particles,
        stagnation_counter: 0,
        iteration: 0,
        params,
        rngs,
        master_rng,
    })
}

#[inline]
fn bit_as_real(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn velocity_component(
    v_old: f64,
    x: f64,
    pbest: f64,
    gbest: f64,
    params: &SwarmParams,
    rand1: f64,
    rand2: f64,
) -> f64 {
    let v = params.inertia * v_old
        + params.cognitive * rand1 * (pbest - x)
        + params.social * rand2 * (gbest - x);
    v.clamp(-params.vmax, params.vmax)
}

/// New velocity vector for one particle: inertia plus cognitive and social
/// pulls with fresh Uniform(0,1) draws per dimension, clamped to +/-vmax.
pub fn update_velocity<R: Rng>(
    p: &Particle,
    gbest: &FeatureMask,
    params: &SwarmParams,
    rng: &mut R,
) -> Vec<f64> {
    (0..p.velocity.len())
        .map(|d| {
            let rand1: f64 = rng.gen();
            let rand2: f64 = rng.gen();
            velocity_component(
                p.velocity[d],
                bit_as_real(p.position.get(d)),
                bit_as_real(p.pbest_position.get(d)),
                bit_as_real(gbest.get(d)),
                params,
                rand1,
                rand2,
            )
        })
        .collect()
}

/// Probability that a bit switches on given its velocity.
#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Resample the position: each bit independently 1 with probability
/// sigmoid(velocity).
pub fn update_position<R: Rng>(p: &Particle, rng: &mut R) -> FeatureMask {
    FeatureMask::from_bits(
        p.velocity
            .iter()
            .map(|&v| rng.gen::<f64>() < sigmoid(v))
            .collect(),
    )
}

/// Fold one generation of evaluated fitnesses into pBests, gBest and the
/// best-ever archive, then advance the stagnation counter (reset only on a
/// strict gBest fitness improvement).
pub fn update_bests(s: &mut SwarmState, fitnesses: &[f64]) -> Result<()> {
    if fitnesses.len() != s.particles.len() {
        return Err(Error::DimensionMismatch {
            expected: s.particles.len(),
            got: fitnesses.len(),
        });
    }
    let before = s.gbest_fitness;
    for (p, &f) in s.particles.iter_mut().zip(fitnesses) {
        if improves(f, &p.position, p.pbest_fitness, &p.pbest_position) {
            p.pbest_position = p.position.clone();
            p.pbest_fitness = f;
        }
        if improves(f, &p.position, s.best_ever_fitness, &s.best_ever_position) {
            s.best_ever_position = p.position.clone();
            s.best_ever_fitness = f;
        }
    }
    for p in &s.particles {
        if improves(
            p.pbest_fitness,
            &p.pbest_position,
            s.gbest_fitness,
            &s.gbest_position,
        ) {
            s.gbest_position = p.pbest_position.clone();
            s.gbest_fitness = p.pbest_fitness;
        }
    }
    if s.gbest_fitness > before {
        s.stagnation_counter = 0;
    } else {
        s.stagnation_counter += 1;
    }
    Ok(())
}

/// Escape a stagnated optimum: replace gBest with the bitwise AND of all
/// pBest strings, evaluated and accepted even if worse. An all-zero AND
/// (disjoint pBest supports) redraws gBest uniformly instead, since the
/// zero mask has fitness 0 and would trap the swarm.
pub fn regenerate_gbest_and<F>(s: &mut SwarmState, fitness: &F) -> Result<()>
where
    F: Fn(&FeatureMask) -> f64 + Sync,
{
    if s.params.variant != Variant::Ibpso {
        return Err(Error::InvalidParam(
            "gBest regeneration is an IBPSO operation".to_string(),
        ));
    }
    if s.stagnation_counter < s.params.stagnation_limit {
        return Err(Error::InvalidParam(format!(
            "regeneration requires {} stagnant iterations, have {}",
            s.params.stagnation_limit, s.stagnation_counter
        )));
    }
    let mut combined = s.particles[0].pbest_position.clone();
    for p in &s.particles[1..] {
        combined = combined.and(&p.pbest_position);
    }
    if combined.popcount() == 0 {
        let dim = combined.len();
        combined =
            FeatureMask::from_bits((0..dim).map(|_| s.master_rng.gen::<f64>() < 0.5).collect());
    }
    let f = fitness(&combined);
    if improves(f, &combined, s.best_ever_fitness, &s.best_ever_position) {
        s.best_ever_position = combined.clone();
        s.best_ever_fitness = f;
    }
    s.gbest_position = combined;
    s.gbest_fitness = f;
    s.stagnation_counter = 0;
    Ok(())
}

/// One per-iteration line of a search trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub gbest_fitness: f64,
    pub best_ever_fitness: f64,
    pub mean_popcount: f64,
    pub stagnation: usize,
    pub regenerated: bool,
}

/// Render trace rows as `iteration,gbest_fitness,best_ever_fitness,
/// mean_popcount,stagnated,regenerated` CSV.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out =
        String::from("iteration,gbest_fitness,best_ever_fitness,mean_popcount,stagnated,regenerated\n");
    for row in trace {
        out.push_str(&format!(
            "{},{:.9},{:.9},{:.3},{},{}\n",
            row.iteration,
            row.gbest_fitness,
            row.best_ever_fitness,
            row.mean_popcount,
            row.stagnation,
            u8::from(row.regenerated),
        ));
    }
    out
}

/// Result of a swarm run: the best-ever archive (not the possibly
/// regenerated gBest) plus the per-iteration trace.
#[derive(Debug, Clone)]
pub struct SearchRun {
    pub best_position: FeatureMask,
    pub best_fitness: f64,
    pub trace: Vec<TraceRow>,
}

/// Run the full search loop: velocity -> position -> evaluate -> best
/// bookkeeping, regenerating gBest whenever the IBPSO trigger fires.
pub fn run<F>(dim: usize, params: SwarmParams, seed: u64, fitness: F) -> Result<SearchRun>
where
    F: Fn(&FeatureMask) -> f64 + Sync,
{
    let mut s = init_swarm(dim, params, seed, &fitness)?;
    let mut trace = Vec::with_capacity(s.params.max_iter);
    for iter in 1..=s.params.max_iter {
        s.iteration = iter;
        for i in 0..s.particles.len() {
            // split borrows: rng i drives particle i
            let (particles, rngs) = (&mut s.particles, &mut s.rngs);
            let rng = &mut rngs[i];
            let p = &mut particles[i];
            p.velocity = update_velocity(p, &s.gbest_position, &s.params, rng);
            p.position = update_position(p, rng);
        }
        let fitnesses: Vec<f64> = s
            .particles
            .par_iter()
            .map(|p| fitness(&p.position))
            .collect();
        update_bests(&mut s, &fitnesses)?;

        let mut regenerated = false;
        if s.params.variant == Variant::Ibpso
            && s.stagnation_counter >= s.params.stagnation_limit
        {
            regenerate_gbest_and(&mut s, &fitness)?;
            regenerated = true;
        }

        let mean_popcount = s
            .particles
            .iter()
            .map(|p| p.position.popcount() as f64)
            .sum::<f64>()
            / s.particles.len() as f64;
        trace.push(TraceRow {
            iteration: iter,
            gbest_fitness: s.gbest_fitness,
            best_ever_fitness: s.best_ever_fitness,
            mean_popcount,
            stagnation: s.stagnation_counter,
            regenerated,
        });
    }
    Ok(SearchRun {
        best_position: s.best_ever_position,
        best_fitness: s.best_ever_fitness,
        trace,
    })
}
