//! Experiment generators and crocker summaries.

pub mod annulus;
pub mod boids;
pub mod crocker;

pub use annulus::{annulus_family, AnnulusParams};
pub use boids::{BoidConfig, Flock};
pub use crocker::{crocker, crocker_stack, CrockerStack};

use crate::engine::{run_moves, run_naive, run_vineyard_family, FamilyRun, RunOptions};
use crate::error::Result;
use crate::filtration::Filtration;
use crate::par::Exec;

/// Costs of the four strategies on the annulus video.
#[derive(Debug, Clone)]
pub struct AnnulusReport {
    pub naive_coarse: FamilyRun,
    pub naive_fine: FamilyRun,
    pub vineyard_fine: FamilyRun,
    pub moves_coarse: FamilyRun,
    /// Betti triples of the coarse frames, from the move sweep.
    pub coarse_betti: Vec<[usize; 3]>,
}

/// Naive reduction at `coarse` and `fine` frame counts, vineyards along the
/// straight-line homotopy through all `fine` frames, and moves between the
/// `coarse` frames.
pub fn annulus_experiment(params: AnnulusParams, coarse: usize, fine: usize, opts: RunOptions, exec: Exec) -> Result<AnnulusReport> {
    let fine_frames: Vec<Filtration> = annulus_family(params, fine).collect();
    let coarse_frames: Vec<Filtration> = annulus_family(params, coarse).collect();
    let naive_coarse = run_naive(&coarse_frames, exec)?;
    let naive_fine = run_naive(&fine_frames, exec)?;
    let vineyard_fine = run_vineyard_family(&fine_frames, opts.check)?;
    let t = params.threshold();
    let mut coarse_betti = Vec::new();
    let moves_coarse = crate::engine::run_moves_with(annulus_family(params, coarse), opts, |_, f, dec| {
        coarse_betti.push(annulus::betti_of(f, dec, t));
    })?;
    Ok(AnnulusReport { naive_coarse, naive_fine, vineyard_fine, moves_coarse, coarse_betti })
}

/// Costs of the three strategies on the boid flock, plus its diagrams.
#[derive(Debug, Clone)]
pub struct BoidReport {
    pub naive: FamilyRun,
    pub vineyard: FamilyRun,
    pub moves: FamilyRun,
    pub filtrations: Vec<Filtration>,
}

pub fn boid_experiment(cfg: BoidConfig, eps_max: f64, opts: RunOptions, exec: Exec) -> Result<BoidReport> {
    let samples = boids::simulate(cfg)?;
    let filtrations = samples.iter().map(|p| boids::capped_rips(p, eps_max)).collect::<Result<Vec<_>>>()?;
    let naive = run_naive(&filtrations, exec)?;
    let vineyard = run_vineyard_family(&filtrations, opts.check)?;
    let moves = run_moves(&filtrations, opts)?;
    Ok(BoidReport { naive, vineyard, moves, filtrations })
}
