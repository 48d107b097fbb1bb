//! Crocker plots (Betti numbers over time and scale) and their α-smoothed
//! stacks, computed from graded persistence diagrams.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::par::{map_collect, Exec};
use crate::reduce::GradedPair;

/// Rank of `M_t(ε − α) → M_t(ε + α)` for classes of dimension `dim`: the
/// number of pairs born by `ε − α` and still alive after `ε + α`.
pub fn smoothed_rank(pairs: &[GradedPair], dim: usize, eps: f64, alpha: f64) -> usize {
    pairs.iter().filter(|g| g.dim == dim && g.birth <= eps - alpha && g.death > eps + alpha).count()
}

/// `grid[t][k]` = Betti number in dimension `dim` at scale `eps[k]` of the
/// diagram at time `t`.
pub fn crocker(diagrams: &[Vec<GradedPair>], dim: usize, eps: &[f64]) -> Vec<Vec<usize>> {
    diagrams.iter().map(|d| eps.iter().map(|&e| smoothed_rank(d, dim, e, 0.0)).collect()).collect()
}

/// Ranks indexed by `(t, ε, α)`, with the sampled axes.
#[derive(Debug, Clone, PartialEq)]
pub struct CrockerStack {
    pub dim: usize,
    pub eps: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `ranks[t][e][a]`.
    pub ranks: Vec<Vec<Vec<usize>>>,
}

impl CrockerStack {
    pub fn times(&self) -> usize {
        self.ranks.len()
    }

    pub fn get(&self, t: usize, e: usize, a: usize) -> usize {
        self.ranks[t][e][a]
    }

    /// The crocker plot at smoothing index `a`.
    pub fn layer(&self, a: usize) -> Vec<Vec<usize>> {
        self.ranks.iter().map(|row| row.iter().map(|r| r[a]).collect()).collect()
    }

    /// Long-form CSV `t,eps,alpha,rank`, with `t` counted from 1.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,eps,alpha,rank\n");
        for (t, row) in self.ranks.iter().enumerate() {
            for (e, cell) in row.iter().enumerate() {
                for (a, r) in cell.iter().enumerate() {
                    let _ = writeln!(s, "{},{},{},{}", t + 1, self.eps[e], self.alpha[a], r);
                }
            }
        }
        s
    }
}

pub fn crocker_stack(diagrams: &[Vec<GradedPair>], dim: usize, eps: &[f64], alpha: &[f64], exec: Exec) -> Result<CrockerStack> {
    if let Some(a) = alpha.iter().find(|a| !(**a >= 0.0)) {
        return Err(Error::input(format!("smoothing values must be non-negative, got {a}")));
    }
    let ranks = map_collect(exec, diagrams, |d| {
        eps.iter().map(|&e| alpha.iter().map(|&a| smoothed_rank(d, dim, e, a)).collect()).collect()
    });
    Ok(CrockerStack { dim, eps: eps.to_vec(), alpha: alpha.to_vec(), ranks })
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}
