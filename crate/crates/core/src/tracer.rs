//! Non-sequential Monte Carlo transport with deterministic Fresnel
//! branching, Russian roulette and order-independent parallel reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{collected_through_lens, ResolvedLens, Side, TallySet};
use crate::geometry::{Ray, SurfaceId};
use crate::physics::interact;
use crate::scene::Scene;
use crate::sources::ResolvedSource;

/// Rays per work item. Fixed so the reduction tree never depends on the
/// worker count.
const CHUNK: u64 = 64;
/// Largest tolerated fraction of emitted rays with a lost branch.
pub const MAX_LOST_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceLimits {
    pub max_generation: u32,
    /// Children below this fraction of their emitted ray's power enter
    /// roulette. Zero disables roulette.
    pub roulette_threshold: f64,
    pub roulette_survival: f64,
}

impl Default for TraceLimits {
    fn default() -> Self {
        Self { max_generation: 64, roulette_threshold: 1e-4, roulette_survival: 0.5 }
    }
}

impl TraceLimits {
    pub fn check(&self) -> Result<(), TraceError> {
        if self.max_generation < 1 {
            return Err(TraceError::InvalidLimits("max_generation must be at least 1".into()));
        }
        if !(self.roulette_survival > 0.0 && self.roulette_survival < 1.0) {
            return Err(TraceError::InvalidLimits(format!(
                "roulette_survival {} must lie in (0, 1)",
                self.roulette_survival
            )));
        }
        if !(self.roulette_threshold >= 0.0) {
            return Err(TraceError::InvalidLimits("roulette_threshold must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TallyMode {
    /// Every leaf contributes its carried power.
    #[default]
    PowerWeighted,
    /// Each emitted ray contributes its full power to its single strongest
    /// leaf, mimicking literal ray counting.
    CountedRays,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("invalid trace limits: {0}")]
    InvalidLimits(String),
    #[error("{lost} of {total} rays were lost inside a solid (limit {limit:.4}%)", limit = MAX_LOST_FRACTION * 100.0)]
    LostRays { lost: u64, total: u64 },
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalEvent {
    /// Left the last solid and escaped; `surface` is the final crossing.
    Exited {
        ray: Ray,
        surface: Option<SurfaceId>,
    },
    Killed(f64),
    CapReached(f64),
    /// No further intersection while inside a solid, or an interface that
    /// disagrees with the ray's medium.
    Lost(f64),
}

impl TerminalEvent {
    pub fn power(&self) -> f64 {
        match self {
            TerminalEvent::Exited { ray, .. } => ray.power,
            TerminalEvent::Killed(p) | TerminalEvent::CapReached(p) | TerminalEvent::Lost(p) => *p,
        }
    }
}

/// Leaves of one emitted ray's branching tree, in depth-first order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RayTrace {
    pub events: Vec<TerminalEvent>,
    /// Power added to roulette survivors.
    pub roulette_boost: f64,
    pub interactions: u64,
}

impl RayTrace {
    pub fn lost(&self) -> bool {
        self.events.iter().any(|e| matches!(e, TerminalEvent::Lost(_)))
    }
}

/// Expand one ray depth-first, reflected child before transmitted child.
pub fn trace_ray<R: Rng + ?Sized>(scene: &Scene, ray: Ray, limits: &TraceLimits, rng: &mut R) -> RayTrace {
    let cutoff = limits.roulette_threshold * ray.power;
    let mut out = RayTrace::default();
    let mut stack: Vec<(Ray, Option<SurfaceId>)> = vec![(ray, None)];
    while let Some((ray, last)) = stack.pop() {
        let Some((id, hit)) = scene.nearest_hit_after(&ray, last) else {
            if ray.medium == scene.ambient() {
                out.events.push(TerminalEvent::Exited { ray, surface: last });
            } else {
                out.events.push(TerminalEvent::Lost(ray.power));
            }
            continue;
        };
        let iface = scene.interface(id, &hit);
        let Ok(outcome) = interact(&ray, &hit, &iface) else {
            out.events.push(TerminalEvent::Lost(ray.power));
            continue;
        };
        out.interactions += 1;
        // pushed in reverse so the reflected child is expanded first
        for child in [outcome.transmitted, outcome.reflected].into_iter().flatten() {
            if child.generation > limits.max_generation {
                out.events.push(TerminalEvent::CapReached(child.power));
                continue;
            }
            let mut child = child;
            if child.power < cutoff {
                if rng.random::<f64>() >= limits.roulette_survival {
                    out.events.push(TerminalEvent::Killed(child.power));
                    continue;
                }
                let boosted = child.power / limits.roulette_survival;
                out.roulette_boost += boosted - child.power;
                child.power = boosted;
            }
            stack.push((child, Some(id)));
        }
    }
    out
}

/// Resolved lens pair used to classify exits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detectors {
    pub front: ResolvedLens,
    pub back: ResolvedLens,
}

impl Detectors {
    pub fn lens(&self, side: Side) -> &ResolvedLens {
        match side {
            Side::Front => &self.front,
            Side::Back => &self.back,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Worker threads; 0 uses the ambient rayon pool. Results never depend
    /// on this value.
    pub workers: usize,
    pub mode: TallyMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: 0, workers: 0, mode: TallyMode::PowerWeighted }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tally: TallySet,
    pub emitted_power: f64,
    pub exited_power: f64,
    /// Net roulette loss: power of killed rays minus power added to
    /// survivors. Zero in expectation; makes the power balance exact.
    pub killed_power: f64,
    pub capped_power: f64,
    pub lost_power: f64,
    pub roulette_killed_power: f64,
    pub roulette_boost_power: f64,
    pub lost_rays: u64,
    pub interactions: u64,
    pub seed: u64,
    pub ray_count: u64,
    pub mode: TallyMode,
}

impl RunReport {
    /// `emitted - (exited + killed + capped)`; lost power shows up here.
    pub fn power_imbalance(&self) -> f64 {
        self.emitted_power - (self.exited_power + self.killed_power + self.capped_power)
    }
}

#[derive(Debug, Clone, Default)]
struct Partial {
    tally: TallySet,
    emitted: f64,
    exited: f64,
    killed: f64,
    capped: f64,
    lost: f64,
    boost: f64,
    lost_rays: u64,
    interactions: u64,
}

impl Partial {
    fn merge(&mut self, o: &Partial) {
        self.tally.merge(&o.tally);
        self.emitted += o.emitted;
        self.exited += o.exited;
        self.killed += o.killed;
        self.capped += o.capped;
        self.lost += o.lost;
        self.boost += o.boost;
        self.lost_rays += o.lost_rays;
        self.interactions += o.interactions;
    }

    fn book_exit(&mut self, ray: &Ray, power: f64, detectors: &Detectors) {
        let side = if ray.direction.z > 0.0 { Side::Back } else { Side::Front };
        let collected = collected_through_lens(ray, detectors.lens(side));
        self.tally.record(ray.direction, power, collected);
        self.exited += power;
    }
}

/// Generator for emitted ray `index`: one ChaCha stream per index.
pub fn ray_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Job<'a> {
    scene: &'a Scene,
    source: &'a ResolvedSource,
    detectors: &'a Detectors,
    limits: &'a TraceLimits,
    opts: RunOptions,
}

impl Job<'_> {
    fn chunk(&self, chunk: u64) -> Partial {
        let mut part = Partial::default();
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(self.source.total_rays());
        for i in start..end {
            let mut rng = ray_rng(self.opts.seed, i);
            let ray = self.source.emit(i, &mut rng);
            let emitted = ray.power;
            part.emitted += emitted;
            let trace = trace_ray(self.scene, ray, self.limits, &mut rng);
            part.interactions += trace.interactions;
            if trace.lost() {
                part.lost_rays += 1;
            }
            match self.opts.mode {
                TallyMode::PowerWeighted => {
                    part.boost += trace.roulette_boost;
                    for ev in &trace.events {
                        match ev {
                            TerminalEvent::Exited { ray, .. } => part.book_exit(ray, ray.power, self.detectors),
                            TerminalEvent::Killed(p) => part.killed += p,
                            TerminalEvent::CapReached(p) => part.capped += p,
                            TerminalEvent::Lost(p) => part.lost += p,
                        }
                    }
                }
                TallyMode::CountedRays => {
                    let strongest = trace.events.iter().fold(None::<&TerminalEvent>, |best, e| match best {
                        Some(b) if b.power() >= e.power() => Some(b),
                        _ => Some(e),
                    });
                    match strongest {
                        Some(TerminalEvent::Exited { ray, .. }) => part.book_exit(ray, emitted, self.detectors),
                        Some(TerminalEvent::Killed(_)) => part.killed += emitted,
                        Some(TerminalEvent::CapReached(_)) => part.capped += emitted,
                        Some(TerminalEvent::Lost(_)) | None => part.lost += emitted,
                    }
                }
            }
        }
        part
    }

    fn chunks(&self) -> Vec<Partial> {
        let n = self.source.total_rays().div_ceil(CHUNK);
        self.map_chunks(n)
    }

    #[cfg(feature = "parallel")]
    fn map_chunks(&self, n: u64) -> Vec<Partial> {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(|c| self.chunk(c)).collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn map_chunks(&self, n: u64) -> Vec<Partial> {
        (0..n).map(|c| self.chunk(c)).collect()
    }
}

/// Trace every ray of `source`. Bitwise reproducible for fixed inputs and
/// seed regardless of `opts.workers`.
pub fn run(
    scene: &Scene,
    source: &ResolvedSource,
    detectors: &Detectors,
    limits: &TraceLimits,
    opts: RunOptions,
) -> Result<RunReport, TraceError> {
    limits.check()?;
    let job = Job { scene, source, detectors, limits, opts };
    let parts = dispatch(&job, opts.workers)?;
    finish(parts, source, opts)
}

/// Single-threaded reference path, identical results to [`run`].
pub fn run_sequential(
    scene: &Scene,
    source: &ResolvedSource,
    detectors: &Detectors,
    limits: &TraceLimits,
    opts: RunOptions,
) -> Result<RunReport, TraceError> {
    limits.check()?;
    let job = Job { scene, source, detectors, limits, opts };
    let n = source.total_rays().div_ceil(CHUNK);
    let parts = (0..n).map(|c| job.chunk(c)).collect();
    finish(parts, source, opts)
}

#[cfg(feature = "parallel")]
fn dispatch(job: &Job<'_>, workers: usize) -> Result<Vec<Partial>, TraceError> {
    if workers == 0 {
        return Ok(job.chunks());
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| TraceError::Pool(e.to_string()))?;
    Ok(pool.install(|| job.chunks()))
}

#[cfg(not(feature = "parallel"))]
fn dispatch(job: &Job<'_>, _workers: usize) -> Result<Vec<Partial>, TraceError> {
    Ok(job.chunks())
}

fn finish(parts: Vec<Partial>, source: &ResolvedSource, opts: RunOptions) -> Result<RunReport, TraceError> {
    let mut total = Partial::default();
    for p in &parts {
        total.merge(p);
    }
    let ray_count = source.total_rays();
    if total.lost_rays as f64 > MAX_LOST_FRACTION * ray_count as f64 {
        return Err(TraceError::LostRays { lost: total.lost_rays, total: ray_count });
    }
    Ok(RunReport {
        tally: total.tally,
        emitted_power: total.emitted,
        exited_power: total.exited,
        killed_power: total.killed - total.boost,
        capped_power: total.capped,
        lost_power: total.lost,
        roulette_killed_power: total.killed,
        roulette_boost_power: total.boost,
        lost_rays: total.lost_rays,
        interactions: total.interactions,
        seed: opts.seed,
        ray_count,
        mode: opts.mode,
    })
}
