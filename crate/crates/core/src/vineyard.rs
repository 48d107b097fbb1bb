//! Adjacent transpositions of a decomposition and straight-line homotopy
//! schedules.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::filtration::{reindex_bijection, Filtration};
use crate::matrix::OpCounter;
use crate::reduce::{Decomposition, Target};

/// Which branch of the case analysis a transposition took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwapCase {
    /// Both columns zero in `R` (two creators).
    BothPositive,
    /// Both columns nonzero in `R` (two destroyers).
    BothNegative,
    /// Left column nonzero, right column zero.
    NegativePositive,
    /// Left column zero, right column nonzero.
    PositiveNegative,
}

/// Outcome of one transposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapReport {
    pub case: SwapCase,
    pub r_ops: u64,
    pub v_ops: u64,
    /// Whether the pairing of the two simplices changed.
    pub switched: bool,
}

impl Decomposition {
    /// Id of the simplex paired with simplex `id`, if any.
    fn partner(&self, id: usize) -> Option<usize> {
        self.low[id].or(self.pivot[id])
    }

    /// Exchanges the simplices at positions `i` and `i + 1`, restoring both
    /// invariants with at most two column additions per matrix.
    pub fn transpose(&mut self, i: usize) -> Result<SwapReport> {
        let m = self.m();
        if i + 1 >= m {
            return Err(Error::input(format!("transposition position {i} out of range for m = {m}")));
        }
        if self.d.entry(i, i + 1) {
            return Err(Error::FaceOrder(format!("simplex at {i} is a face of the simplex at {}", i + 1)));
        }
        let (r0, v0) = (self.r_ops(), self.v_ops());
        let sigma = self.r.col_id(i);
        let tau = self.r.col_id(i + 1);
        let (row_s, row_t) = (self.r.row_id(i), self.r.row_id(i + 1));
        // columns whose low sits on the two exchanged rows
        let k_id = self.pivot[row_s];
        let l_id = self.pivot[row_t];
        let partners_before = (self.partner(sigma), self.partner(tau));

        let neg_s = !self.r.is_zero_column(i);
        let neg_t = !self.r.is_zero_column(i + 1);
        let case = match (neg_s, neg_t) {
            (false, false) => SwapCase::BothPositive,
            (true, true) => SwapCase::BothNegative,
            (true, false) => SwapCase::NegativePositive,
            (false, true) => SwapCase::PositiveNegative,
        };
        let coupled = self.v.entry(i, i + 1);
        match case {
            SwapCase::BothPositive => {
                if coupled {
                    self.add(i + 1, i, Target::V);
                }
                // k and l, if present, are to the right of i + 1 or absent
                let clash = match (k_id, l_id) {
                    (Some(k), Some(l)) => self.r.entry(i, self.r.col_pos(l)).then_some((k, l)),
                    _ => None,
                };
                self.swap(i);
                if let Some((k, l)) = clash {
                    let (kp, lp) = (self.r.col_pos(k), self.r.col_pos(l));
                    if kp < lp {
                        self.add(lp, kp, Target::Both);
                    } else {
                        self.add(kp, lp, Target::Both);
                    }
                }
            }
            SwapCase::BothNegative => {
                if coupled {
                    let before = self.r.low(i) < self.r.low(i + 1);
                    self.add(i + 1, i, Target::Both);
                    self.swap(i);
                    if !before {
                        self.add(i + 1, i, Target::Both);
                    }
                } else {
                    self.swap(i);
                }
            }
            SwapCase::NegativePositive => {
                if coupled {
                    self.add(i + 1, i, Target::Both);
                    self.swap(i);
                    self.add(i + 1, i, Target::Both);
                } else {
                    self.swap(i);
                }
            }
            SwapCase::PositiveNegative => {
                if coupled {
                    self.add(i + 1, i, Target::V);
                }
                self.swap(i);
            }
        }
        for id in [Some(sigma), Some(tau), k_id, l_id].into_iter().flatten() {
            self.refresh(id);
        }
        let switched = partners_before != (self.partner(sigma), self.partner(tau));
        Ok(SwapReport { case, r_ops: self.r_ops() - r0, v_ops: self.v_ops() - v0, switched })
    }
}

/// Adjacent swaps (swap `k` exchanges positions `k`, `k + 1`) in the order a
/// homotopy realizes them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TranspositionSchedule {
    pub m: usize,
    pub swaps: Vec<usize>,
    /// Crossings resolved by the tie-break because grades coincided at an endpoint.
    pub ties: usize,
}

impl TranspositionSchedule {
    pub fn len(&self) -> usize {
        self.swaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.swaps.is_empty()
    }

    /// Header `transpositions m=<m> count=<k>`, then one 1-based position per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("transpositions m={} count={}\n", self.m, self.swaps.len());
        for k in &self.swaps {
            let _ = writeln!(s, "{}", k + 1);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    pos: usize,
    left: usize,
    right: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.pos.cmp(&other.pos))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Transpositions induced by `F(σ, τ) = (1 − τ) f_0(σ) + τ f_1(σ)` between
/// the orders of `k0` and `k1`, sorted by crossing time (lower position
/// first on ties). Each inverted pair crosses once, so the length is the
/// Kendall distance between the two orders.
pub fn straight_line_schedule(k0: &Filtration, k1: &Filtration) -> Result<TranspositionSchedule> {
    let target = reindex_bijection(k0, k1)?;
    let m = k0.len();
    let goal = target.as_slice();
    let f0: Vec<f64> = k0.grades().to_vec();
    let f1: Vec<f64> = (0..m).map(|id| k1.grade(goal[id])).collect();
    let mut order: Vec<usize> = (0..m).collect();
    let mut heap = BinaryHeap::new();
    let mut ties = 0usize;
    let event = |order: &[usize], pos: usize| -> Option<(Event, bool)> {
        let (a, b) = (order[pos], order[pos + 1]);
        if goal[a] < goal[b] {
            return None;
        }
        let d0 = f0[b] - f0[a];
        let d1 = f1[b] - f1[a];
        let denom = d0 - d1;
        let tie = d0 <= 0.0 || d1 >= 0.0;
        let time = if denom > 0.0 { (d0 / denom).clamp(0.0, 1.0) } else { 0.0 };
        Some((Event { time, pos, left: a, right: b }, tie))
    };
    for pos in 0..m.saturating_sub(1) {
        if let Some((e, _)) = event(&order, pos) {
            heap.push(Reverse(e));
        }
    }
    let mut swaps = Vec::new();
    while let Some(Reverse(e)) = heap.pop() {
        if order[e.pos] != e.left || order[e.pos + 1] != e.right {
            continue;
        }
        if event(&order, e.pos).is_some_and(|(_, tie)| tie) {
            ties += 1;
        }
        order.swap(e.pos, e.pos + 1);
        swaps.push(e.pos);
        for p in [e.pos.checked_sub(1), Some(e.pos + 1)].into_iter().flatten() {
            if p + 1 < m {
                if let Some((ne, _)) = event(&order, p) {
                    heap.push(Reverse(ne));
                }
            }
        }
    }
    debug_assert!(order.iter().enumerate().all(|(k, &id)| goal[id] == k));
    Ok(TranspositionSchedule { m, swaps, ties })
}

/// Applies `swaps` in order, returning the counter delta.
pub fn run_vineyard(dec: &mut Decomposition, swaps: &[usize]) -> Result<OpCounter> {
    let start = dec.counter();
    for &k in swaps {
        dec.transpose(k)?;
    }
    Ok(dec.counter().since(&start))
}
