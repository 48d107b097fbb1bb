//! Permutations, permutation distances, LIS/LCS, and move schedules.
//!
//! A [`Permutation`] is stored in one-line (sequence) form: `image[k]` is the
//! symbol sitting at position `k`. Positions and symbols are 0-based. A move
//! `(i, j)` removes the symbol at position `i` and reinserts it at position
//! `j`; the symbols strictly between shift by one toward `i`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// A bijection on `0..m` in sequence form, with a lazily built inverse.
#[derive(Debug, Clone)]
pub struct Permutation {
    image: Vec<usize>,
    inverse: OnceLock<Vec<usize>>,
}

impl PartialEq for Permutation {
    fn eq(&self, other: &Self) -> bool {
        self.image == other.image
    }
}

impl Eq for Permutation {}

impl Permutation {
    pub fn identity(m: usize) -> Self {
        Self::from_vec_unchecked((0..m).collect())
    }

    /// Validates that `image` is a bijection on `0..image.len()`.
    pub fn from_vec(image: Vec<usize>) -> Result<Self> {
        let m = image.len();
        let mut seen = vec![false; m];
        for &s in &image {
            if s >= m || std::mem::replace(&mut seen[s], true) {
                return Err(Error::input(format!("not a permutation of 0..{m}")));
            }
        }
        Ok(Self::from_vec_unchecked(image))
    }

    pub(crate) fn from_vec_unchecked(image: Vec<usize>) -> Self {
        Permutation { image, inverse: OnceLock::new() }
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut v: Vec<usize> = (0..m).collect();
        v.shuffle(rng);
        Self::from_vec_unchecked(v)
    }

    /// The move permutation `m_ij` as a sequence: applying it to a sequence
    /// relocates position `i` to `j`.
    pub fn move_perm(m: usize, i: usize, j: usize) -> Self {
        let mut v: Vec<usize> = (0..m).collect();
        apply_move(&mut v, i, j);
        Self::from_vec_unchecked(v)
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.image
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.image
    }

    /// Symbol at position `k`.
    pub fn get(&self, k: usize) -> usize {
        self.image[k]
    }

    /// `inverse()[s]` is the position of symbol `s`.
    pub fn inverse(&self) -> &[usize] {
        self.inverse.get_or_init(|| {
            let mut inv = vec![0; self.image.len()];
            for (k, &s) in self.image.iter().enumerate() {
                inv[s] = k;
            }
            inv
        })
    }

    pub fn inverted(&self) -> Permutation {
        Self::from_vec_unchecked(self.inverse().to_vec())
    }

    /// Function composition `(self ∘ other)(k) = self(other(k))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::input("composition of permutations of different length"));
        }
        Ok(Self::from_vec_unchecked(other.image.iter().map(|&k| self.image[k]).collect()))
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(k, &s)| k == s)
    }

    /// Relocates position `i` to position `j` in place.
    pub fn apply_move(&mut self, i: usize, j: usize) {
        apply_move(&mut self.image, i, j);
        self.inverse = OnceLock::new();
    }
}

/// Removes the element at `i` and reinserts it at `j`.
pub fn apply_move<T>(seq: &mut [T], i: usize, j: usize) {
    if i < j {
        seq[i..=j].rotate_left(1);
    } else if j < i {
        seq[j..=i].rotate_right(1);
    }
}

fn check_len(p: &Permutation, q: &Permutation) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::input(format!("length mismatch: {} vs {}", p.len(), q.len())));
    }
    Ok(())
}

/// Target positions of the symbols of `p` in the order they appear in `p`,
/// i.e. the sequence `q⁻¹ ∘ p`.
fn relative(p: &Permutation, q: &Permutation) -> Vec<usize> {
    let qi = q.inverse();
    p.as_slice().iter().map(|&s| qi[s]).collect()
}

/// Number of symbol pairs ordered differently by `p` and `q`.
pub fn kendall_distance(p: &Permutation, q: &Permutation) -> Result<u64> {
    check_len(p, q)?;
    let mut seq = relative(p, q);
    let mut buf = vec![0; seq.len()];
    Ok(count_inversions(&mut seq, &mut buf))
}

fn count_inversions(a: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut a[..mid], &mut buf[..mid]);
    inv += count_inversions(&mut a[mid..], &mut buf[mid..]);
    let (mut x, mut y, mut k) = (0, mid, 0);
    while x < mid && y < n {
        if a[x] <= a[y] {
            buf[k] = a[x];
            x += 1;
        } else {
            buf[k] = a[y];
            y += 1;
            inv += (mid - x) as u64;
        }
        k += 1;
    }
    buf[k..k + mid - x].copy_from_slice(&a[x..mid]);
    k += mid - x;
    buf[k..k + n - y].copy_from_slice(&a[y..n]);
    a.copy_from_slice(&buf[..n]);
    inv
}

/// Spearman footrule: total absolute displacement of symbols between `p` and `q`.
pub fn spearman_distance(p: &Permutation, q: &Permutation) -> Result<u64> {
    check_len(p, q)?;
    let (pi, qi) = (p.inverse(), q.inverse());
    Ok(pi.iter().zip(qi).map(|(&a, &b)| a.abs_diff(b) as u64).sum())
}

/// One longest strictly increasing subsequence, by patience sorting.
pub fn lis(seq: &[usize]) -> Vec<usize> {
    let idx = lis_positions(seq);
    idx.into_iter().map(|k| seq[k]).collect()
}

/// Positions (ascending) of the longest strictly increasing subsequence that
/// is lexicographically smallest in positions, i.e. the one that keeps the
/// leftmost elements.
pub fn lis_positions(seq: &[usize]) -> Vec<usize> {
    // patience sorting from the right: from_here[k] = length of the longest
    // increasing run starting at k; heads[l] = largest head of a run of length l+1
    let mut heads: Vec<usize> = Vec::new();
    let mut from_here = vec![0; seq.len()];
    for (k, &x) in seq.iter().enumerate().rev() {
        let l = heads.partition_point(|&h| h > x);
        from_here[k] = l + 1;
        if l == heads.len() {
            heads.push(x);
        } else {
            heads[l] = x;
        }
    }
    let mut need = heads.len();
    let mut out = Vec::with_capacity(need);
    for (k, &x) in seq.iter().enumerate() {
        if need > 0 && from_here[k] == need && out.last().is_none_or(|&t: &usize| seq[t] < x) {
            out.push(k);
            need -= 1;
        }
    }
    out
}

/// A longest common subsequence of `p` and `q`, as symbols in order.
pub fn lcs_via_lis(p: &Permutation, q: &Permutation) -> Result<Vec<usize>> {
    check_len(p, q)?;
    let rel = relative(p, q);
    Ok(lis_positions(&rel).into_iter().map(|k| p.get(k)).collect())
}

/// Minimal number of moves turning `p` into `q`: `m - |LCS(p, q)|`.
pub fn move_distance(p: &Permutation, q: &Permutation) -> Result<usize> {
    Ok(p.len() - lcs_via_lis(p, q)?.len())
}

/// Relocation of the element at position `from` to position `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub from: usize,
    pub to: usize,
}

impl Move {
    pub fn new(from: usize, to: usize) -> Self {
        Move { from, to }
    }

    pub fn span(&self) -> usize {
        self.from.abs_diff(self.to)
    }

    /// Spearman distance between a sequence and its image under this move.
    pub fn displacement(&self) -> u64 {
        2 * self.span() as u64
    }
}

/// An ordered list of moves together with its endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveSchedule {
    pub moves: Vec<Move>,
    pub source: Permutation,
    pub target: Permutation,
}

impl MoveSchedule {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Applies every move to the source sequence.
    pub fn replay(&self) -> Permutation {
        let mut p = self.source.clone();
        for mv in &self.moves {
            p.apply_move(mv.from, mv.to);
        }
        p
    }

    /// Sum of the per-move Spearman distances `F(ŝ_i ∘ p, ŝ_{i+1} ∘ p)`.
    pub fn total_displacement(&self) -> u64 {
        self.moves.iter().map(Move::displacement).sum()
    }

    /// Text form: header `moves m=<m> count=<d>`, then 1-based `i j` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("moves m={} count={}\n", self.source.len(), self.moves.len());
        for mv in &self.moves {
            let _ = writeln!(s, "{} {}", mv.from + 1, mv.to + 1);
        }
        s
    }
}

/// Parses the text produced by [`MoveSchedule::to_text`] into `(m, moves)`.
pub fn parse_moves(text: &str) -> Result<(usize, Vec<Move>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let mut words = header.split_whitespace();
    let bad_header = || Error::Parse { line: 1, msg: format!("bad header `{header}`") };
    if words.next() != Some("moves") {
        return Err(bad_header());
    }
    let field = |w: Option<&str>, key: &str| -> Option<usize> { w?.strip_prefix(key)?.parse().ok() };
    let m = field(words.next(), "m=").ok_or_else(bad_header)?;
    let count = field(words.next(), "count=").ok_or_else(bad_header)?;
    let mut moves = Vec::with_capacity(count);
    for (n, line) in lines {
        let nums: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: n + 1, msg: format!("{e}") })?;
        match nums[..] {
            [i, j] if (1..=m).contains(&i) && (1..=m).contains(&j) => moves.push(Move::new(i - 1, j - 1)),
            _ => return Err(Error::Parse { line: n + 1, msg: format!("expected `i j` in 1..={m}") }),
        }
    }
    if moves.len() != count {
        return Err(Error::Parse { line: 1, msg: format!("header says {count} moves, found {}", moves.len()) });
    }
    Ok((m, moves))
}

/// Where a moved symbol lands inside its admissible window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    /// Right moves land just after the LCS predecessor, left moves on the
    /// successor's slot.
    #[default]
    Adjacent,
    /// The opposite end of the window from [`Placement::Adjacent`].
    Far,
    /// The admissible slot closest to the symbol's target position.
    Nearest,
}

/// Incremental LCS-based sorter of `p` into `q`.
///
/// Works on the relative sequence `q⁻¹ ∘ p`, whose values are target
/// positions. `kept` holds the values already in common with the target, with
/// sentinels handled by [`LcsSorter::window`].
#[derive(Debug, Clone)]
pub struct LcsSorter {
    rel: Vec<usize>,
    pos: Vec<usize>,
    kept: BTreeSet<usize>,
    pending: BTreeSet<usize>,
    ledger: DisplacementLedger,
    source: Permutation,
    target: Permutation,
    moves: Vec<Move>,
}

impl LcsSorter {
    pub fn new(p: &Permutation, q: &Permutation) -> Result<Self> {
        check_len(p, q)?;
        let rel = relative(p, q);
        let m = rel.len();
        let mut pos = vec![0; m];
        for (k, &v) in rel.iter().enumerate() {
            pos[v] = k;
        }
        let kept: BTreeSet<usize> = lis(&rel).into_iter().collect();
        let pending = (0..m).filter(|v| !kept.contains(v)).collect();
        let ledger = DisplacementLedger::from_relative(&rel);
        Ok(LcsSorter { rel, pos, kept, pending, ledger, source: p.clone(), target: q.clone(), moves: Vec::new() })
    }

    pub fn is_done(&self) -> bool {
        self.pending.is_empty()
    }

    /// Target positions of the symbols still to be moved, ascending.
    pub fn pending(&self) -> impl Iterator<Item = usize> + '_ {
        self.pending.iter().copied()
    }

    /// Smallest pending target position, if any.
    pub fn first_pending(&self) -> Option<usize> {
        self.pending.first().copied()
    }

    pub fn remaining(&self) -> usize {
        self.pending.len()
    }

    pub fn lcs_len(&self) -> usize {
        self.kept.len()
    }

    /// Current position of the symbol whose target position is `v`.
    pub fn position_of(&self, v: usize) -> usize {
        self.pos[v]
    }

    /// Current relative sequence (target positions in current order).
    pub fn relative(&self) -> &[usize] {
        &self.rel
    }

    pub fn ledger(&self) -> &DisplacementLedger {
        &self.ledger
    }

    /// Current position and the inclusive range of admissible destinations
    /// for pending value `v`.
    pub fn window(&self, v: usize) -> (usize, usize, usize) {
        let i = self.pos[v];
        let m = self.rel.len();
        // sentinel positions: -1 for a missing predecessor, m for a missing successor
        let ip = self.kept.range(..v).next_back().map_or(-1, |&u| self.pos[u] as isize);
        let inx = self.kept.range(v + 1..).next().map_or(m as isize, |&u| self.pos[u] as isize);
        let i_s = i as isize;
        if i_s < ip {
            (i, ip as usize, (inx - 1) as usize)
        } else {
            debug_assert!(inx < i_s, "pending value already inside its window");
            (i, (ip + 1) as usize, inx as usize)
        }
    }

    /// The move for `v` under `placement`.
    pub fn candidate(&self, v: usize, placement: Placement) -> Move {
        let (i, lo, hi) = self.window(v);
        let right = lo > i;
        let to = match (placement, right) {
            (Placement::Nearest, _) => v.clamp(lo, hi),
            (Placement::Adjacent, true) | (Placement::Far, false) => lo,
            (Placement::Adjacent, false) | (Placement::Far, true) => hi,
        };
        Move::new(i, to)
    }

    /// Moves pending value `v` to position `to`, which must lie in its window.
    pub fn apply(&mut self, v: usize, to: usize) -> Move {
        let (i, lo, hi) = self.window(v);
        assert!((lo..=hi).contains(&to), "destination outside the admissible window");
        self.ledger.apply_move(i, to);
        apply_move(&mut self.rel, i, to);
        let (a, b) = (i.min(to), i.max(to));
        for k in a..=b {
            self.pos[self.rel[k]] = k;
        }
        self.pending.remove(&v);
        self.kept.insert(v);
        let mv = Move::new(i, to);
        self.moves.push(mv);
        mv
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn finish(self) -> MoveSchedule {
        MoveSchedule { moves: self.moves, source: self.source, target: self.target }
    }
}

/// Minimal-size schedule: pending symbols in ascending target order, each
/// placed adjacent to its LCS neighbour.
pub fn lcs_sort(p: &Permutation, q: &Permutation) -> Result<MoveSchedule> {
    let mut s = LcsSorter::new(p, q)?;
    while let Some(v) = s.first_pending() {
        let mv = s.candidate(v, Placement::Adjacent);
        s.apply(v, mv.to);
    }
    Ok(s.finish())
}

/// Minimal-size schedule choosing, at each step, the move that minimises the
/// Spearman distance to the target. Ties go to the smallest target position.
pub fn greedy_schedule(p: &Permutation, q: &Permutation) -> Result<MoveSchedule> {
    let mut s = LcsSorter::new(p, q)?;
    while !s.is_done() {
        let (v, mv) = s
            .pending()
            .map(|v| (v, s.candidate(v, Placement::Nearest)))
            .min_by_key(|&(v, mv)| (s.ledger().total_after(mv.from, mv.to), v))
            .expect("pending is non-empty");
        s.apply(v, mv.to);
    }
    Ok(s.finish())
}

/// A uniformly random valid minimal schedule: random pending symbol, random
/// destination in its window.
pub fn random_schedule<R: Rng + ?Sized>(p: &Permutation, q: &Permutation, rng: &mut R) -> Result<MoveSchedule> {
    let mut s = LcsSorter::new(p, q)?;
    while !s.is_done() {
        let k = rng.gen_range(0..s.remaining());
        let v = s.pending().nth(k).expect("index in range");
        let (_, lo, hi) = s.window(v);
        s.apply(v, rng.gen_range(lo..=hi));
    }
    Ok(s.finish())
}

/// Collapses maximal runs of adjacent transpositions that carry one element
/// along (`k, k+1, ..., k+r-1` or `k, k-1, ..., k-r+1`) into single moves.
/// Swap `k` exchanges positions `k` and `k + 1`.
pub fn coarsen_transpositions(swaps: &[usize]) -> Vec<Move> {
    let mut out = Vec::new();
    let mut t = 0;
    while t < swaps.len() {
        let start = swaps[t];
        let mut end = t + 1;
        while end < swaps.len() && swaps[end] == swaps[end - 1] + 1 {
            end += 1;
        }
        if end - t > 1 {
            out.push(Move::new(start, swaps[end - 1] + 1));
            t = end;
            continue;
        }
        while end < swaps.len() && swaps[end] + 1 == swaps[end - 1] {
            end += 1;
        }
        if end - t > 1 {
            out.push(Move::new(start + 1, swaps[end - 1]));
        } else {
            out.push(Move::new(start, start + 1));
        }
        t = end;
    }
    out
}

/// Signed displacement (current minus target position) for every symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisplacementLedger {
    /// Current relative sequence: values are target positions.
    seq: Vec<usize>,
    disp: Vec<i64>,
    total: u64,
}

impl DisplacementLedger {
    pub fn new(p: &Permutation, q: &Permutation) -> Result<Self> {
        check_len(p, q)?;
        Ok(Self::from_relative(&relative(p, q)))
    }

    fn from_relative(rel: &[usize]) -> Self {
        let mut disp = vec![0i64; rel.len()];
        for (k, &v) in rel.iter().enumerate() {
            disp[v] = k as i64 - v as i64;
        }
        let total = disp.iter().map(|d| d.unsigned_abs()).sum();
        DisplacementLedger { seq: rel.to_vec(), disp, total }
    }

    /// Sum of absolute displacements; equals the Spearman distance to the target.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Signed displacement of the symbol whose target position is `v`.
    pub fn displacement(&self, v: usize) -> i64 {
        self.disp[v]
    }

    /// Change in [`total`](Self::total) if the move `(i, j)` were applied.
    pub fn delta(&self, i: usize, j: usize) -> i64 {
        if i == j {
            return 0;
        }
        let moved = self.seq[i];
        let step: i64 = if i < j { -1 } else { 1 };
        let shift = j as i64 - i as i64;
        let mut delta = abs_change(self.disp[moved], shift);
        let (a, b) = if i < j { (i + 1, j) } else { (j, i - 1) };
        if a <= b {
            for &v in &self.seq[a..=b] {
                delta += abs_change(self.disp[v], step);
            }
        }
        delta
    }

    pub fn total_after(&self, i: usize, j: usize) -> u64 {
        (self.total as i64 + self.delta(i, j)) as u64
    }

    /// Applies the three-case update for the move `(i, j)`.
    pub fn apply_move(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let delta = self.delta(i, j);
        let moved = self.seq[i];
        let step: i64 = if i < j { -1 } else { 1 };
        self.disp[moved] += j as i64 - i as i64;
        let (a, b) = if i < j { (i + 1, j) } else { (j, i - 1) };
        if a <= b {
            for k in a..=b {
                self.disp[self.seq[k]] += step;
            }
        }
        apply_move(&mut self.seq, i, j);
        self.total = (self.total as i64 + delta) as u64;
    }
}

fn abs_change(d: i64, by: i64) -> i64 {
    (d + by).abs() - d.abs()
}
