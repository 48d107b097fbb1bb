//! A boid flock on the flat unit torus, and Rips filtrations of its samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filtration::{build_rips, Filtration, Simplex};

/// Default seed of the flock experiment.
pub const DEFAULT_SEED: u64 = 20;

/// Rule constants. Distances are in torus units, speeds per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoidConfig {
    /// Bumped whenever a default below changes.
    pub version: u32,
    pub agents: usize,
    pub perception: f64,
    pub personal_space: f64,
    pub cohesion: f64,
    pub alignment: f64,
    pub separation: f64,
    pub min_speed: f64,
    pub max_speed: f64,
    /// Stop once some agent has wrapped around the torus this many times.
    pub rotations: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for BoidConfig {
    fn default() -> Self {
        BoidConfig {
            version: 1,
            agents: 20,
            perception: 0.2,
            personal_space: 0.05,
            cohesion: 0.005,
            alignment: 0.05,
            separation: 0.05,
            min_speed: 0.002,
            max_speed: 0.01,
            rotations: 5.0,
            samples: 60,
            seed: DEFAULT_SEED,
        }
    }
}

/// Signed shortest displacement from `a` to `b` on the unit circle.
fn wrap_delta(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(1.0);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Geodesic distance on the flat unit torus.
pub fn torus_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let axis = |x: f64, y: f64| {
        let d = (x - y).abs().rem_euclid(1.0);
        d.min(1.0 - d)
    };
    axis(a[0], b[0]).hypot(axis(a[1], b[1]))
}

/// Pairwise torus distances.
pub fn torus_distances(points: &[[f64; 2]]) -> Vec<Vec<f64>> {
    points.iter().map(|&a| points.iter().map(|&b| torus_distance(a, b)).collect()).collect()
}

/// Flock state: positions in `[0, 1)²`, velocities, and distance travelled
/// along each axis without wrapping.
#[derive(Debug, Clone)]
pub struct Flock {
    pub pos: Vec<[f64; 2]>,
    pub vel: Vec<[f64; 2]>,
    travelled: Vec<[f64; 2]>,
    cfg: BoidConfig,
}

impl Flock {
    pub fn new(cfg: BoidConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pos = (0..cfg.agents).map(|_| [rng.gen(), rng.gen()]).collect();
        let vel = (0..cfg.agents)
            .map(|_| {
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let s = rng.gen_range(cfg.min_speed..=cfg.max_speed);
                [s * a.cos(), s * a.sin()]
            })
            .collect();
        Flock { pos, vel, travelled: vec![[0.0; 2]; cfg.agents], cfg }
    }

    /// Largest number of full turns any agent has made around either axis.
    pub fn rotations(&self) -> f64 {
        self.travelled.iter().flat_map(|t| [t[0].abs(), t[1].abs()]).fold(0.0, f64::max)
    }

    /// One update: steer towards neighbours' centre and heading, away from
    /// agents that are too close, then move.
    pub fn step(&mut self) {
        let c = self.cfg;
        let n = self.pos.len();
        let mut next = self.vel.clone();
        for i in 0..n {
            let (mut centre, mut heading, mut push, mut seen) = ([0.0; 2], [0.0; 2], [0.0; 2], 0usize);
            for j in (0..n).filter(|&j| j != i) {
                let d = [wrap_delta(self.pos[i][0], self.pos[j][0]), wrap_delta(self.pos[i][1], self.pos[j][1])];
                let dist = d[0].hypot(d[1]);
                if dist < c.perception {
                    seen += 1;
                    for k in 0..2 {
                        centre[k] += d[k];
                        heading[k] += self.vel[j][k];
                    }
                }
                if dist < c.personal_space && dist > 0.0 {
                    for k in 0..2 {
                        push[k] -= d[k] / dist;
                    }
                }
            }
            for k in 0..2 {
                if seen > 0 {
                    next[i][k] += c.cohesion * centre[k] / seen as f64;
                    next[i][k] += c.alignment * (heading[k] / seen as f64 - self.vel[i][k]);
                }
                next[i][k] += c.separation * push[k] * c.max_speed;
            }
            let speed = next[i][0].hypot(next[i][1]);
            let clamped = speed.clamp(c.min_speed, c.max_speed);
            if speed > 0.0 && clamped != speed {
                next[i] = [next[i][0] * clamped / speed, next[i][1] * clamped / speed];
            }
        }
        self.vel = next;
        for i in 0..n {
            for k in 0..2 {
                self.pos[i][k] = (self.pos[i][k] + self.vel[i][k]).rem_euclid(1.0);
                self.travelled[i][k] += self.vel[i][k];
            }
        }
    }
}

/// Runs the flock until an agent completes `cfg.rotations` turns, returning
/// `cfg.samples` evenly spaced snapshots (first and last included).
pub fn simulate(cfg: BoidConfig) -> Result<Vec<Vec<[f64; 2]>>> {
    if cfg.agents == 0 || cfg.samples == 0 || !(cfg.max_speed > 0.0) || cfg.min_speed > cfg.max_speed {
        return Err(Error::input("boid configuration needs agents, samples and 0 < min_speed <= max_speed"));
    }
    let mut flock = Flock::new(cfg);
    let mut history = vec![flock.pos.clone()];
    // a free agent turns once per 1 / max_speed steps at most
    let cap = ((cfg.rotations + 1.0) / cfg.min_speed).ceil() as usize * 2;
    while flock.rotations() < cfg.rotations {
        if history.len() > cap {
            return Err(Error::input("flock never completed the requested rotations"));
        }
        flock.step();
        history.push(flock.pos.clone());
    }
    let last = history.len() - 1;
    Ok((0..cfg.samples)
        .map(|k| {
            let idx = if cfg.samples == 1 { 0 } else { (k * last + (cfg.samples - 1) / 2) / (cfg.samples - 1) };
            history[idx].clone()
        })
        .collect())
}

/// Rips 2-skeleton on the whole point set under the torus metric, with
/// grades capped at `eps_max`: simplices wider than `eps_max` all enter at
/// `eps_max`, so every sample shares one simplex set.
pub fn capped_rips(points: &[[f64; 2]], eps_max: f64) -> Result<Filtration> {
    let full = build_rips(&torus_distances(points), f64::INFINITY, 2)?;
    let items: Vec<(Simplex, f64)> =
        full.simplices().iter().zip(full.grades()).map(|(s, &g)| (s.clone(), g.min(eps_max))).collect();
    Filtration::from_graded(items)
}
