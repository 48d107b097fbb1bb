//! Sparse GF(2) matrices with cheap simultaneous row/column permutation.
//!
//! Column payloads store *original* row ids sorted by id; every notion of
//! order (low entries, triangularity, dense dumps) is derived through the
//! `row_pos` indirection. Permuting rows or columns therefore only touches the
//! indirection arrays and never rewrites a column.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::schedule::Permutation;

/// Instrumentation record for the cost metrics reported by the engine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OpCounter {
    /// Column additions.
    pub col_ops: u64,
    /// Nonzero-status tests (low queries, entry tests, row scans).
    pub entry_queries: u64,
    /// Row/column exchanges or whole permutation applications.
    pub perms_applied: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Component-wise difference `self - earlier`; counters are monotone.
    pub fn since(&self, earlier: &OpCounter) -> OpCounter {
        OpCounter {
            col_ops: self.col_ops - earlier.col_ops,
            entry_queries: self.entry_queries - earlier.entry_queries,
            perms_applied: self.perms_applied - earlier.perms_applied,
        }
    }
}

impl std::ops::Add for OpCounter {
    type Output = OpCounter;
    fn add(self, rhs: OpCounter) -> OpCounter {
        OpCounter {
            col_ops: self.col_ops + rhs.col_ops,
            entry_queries: self.entry_queries + rhs.entry_queries,
            perms_applied: self.perms_applied + rhs.perms_applied,
        }
    }
}

impl std::ops::AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: OpCounter) {
        *self = *self + rhs;
    }
}

/// Which side of the matrix a permutation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
    Both,
}

#[derive(Debug, Default)]
struct Counters {
    col_ops: AtomicU64,
    entry_queries: AtomicU64,
    perms_applied: AtomicU64,
}

impl Counters {
    fn snapshot(&self) -> OpCounter {
        OpCounter {
            col_ops: self.col_ops.load(Ordering::Relaxed),
            entry_queries: self.entry_queries.load(Ordering::Relaxed),
            perms_applied: self.perms_applied.load(Ordering::Relaxed),
        }
    }

    fn from_snapshot(c: OpCounter) -> Self {
        Counters {
            col_ops: AtomicU64::new(c.col_ops),
            entry_queries: AtomicU64::new(c.entry_queries),
            perms_applied: AtomicU64::new(c.perms_applied),
        }
    }

    fn query(&self, n: u64) {
        self.entry_queries.fetch_add(n, Ordering::Relaxed);
    }
}

/// Square sparse GF(2) matrix with position indirection on both axes.
#[derive(Debug)]
pub struct PermutableMatrix {
    /// Column payloads indexed by column id; each is sorted by row id.
    cols: Vec<Vec<usize>>,
    row_pos: Vec<usize>,
    row_at: Vec<usize>,
    col_pos: Vec<usize>,
    col_at: Vec<usize>,
    counters: Counters,
}

impl Clone for PermutableMatrix {
    fn clone(&self) -> Self {
        PermutableMatrix {
            cols: self.cols.clone(),
            row_pos: self.row_pos.clone(),
            row_at: self.row_at.clone(),
            col_pos: self.col_pos.clone(),
            col_at: self.col_at.clone(),
            counters: Counters::from_snapshot(self.counters.snapshot()),
        }
    }
}

impl PartialEq for PermutableMatrix {
    /// Content equality in current position order; counters are ignored.
    fn eq(&self, other: &Self) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        (0..self.dim()).all(|j| self.column_positions(j) == other.column_positions(j))
    }
}

impl Eq for PermutableMatrix {}

impl PermutableMatrix {
    /// The `m x m` zero matrix.
    pub fn zeros(m: usize) -> Self {
        Self::from_columns(vec![Vec::new(); m]).expect("empty columns are valid")
    }

    /// The `m x m` identity.
    pub fn identity(m: usize) -> Self {
        Self::from_columns((0..m).map(|i| vec![i]).collect()).expect("identity is valid")
    }

    /// Builds a matrix from columns given as lists of row positions, with
    /// identity indirection. Duplicate entries are rejected.
    pub fn from_columns(cols: Vec<Vec<usize>>) -> Result<Self> {
        let m = cols.len();
        let mut sorted = Vec::with_capacity(m);
        for (j, mut c) in cols.into_iter().enumerate() {
            c.sort_unstable();
            if c.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!("column {j} has a duplicate row")));
            }
            if c.last().is_some_and(|&r| r >= m) {
                return Err(Error::input(format!("column {j} has a row out of range")));
            }
            sorted.push(c);
        }
        let ident: Vec<usize> = (0..m).collect();
        Ok(PermutableMatrix {
            cols: sorted,
            row_pos: ident.clone(),
            row_at: ident.clone(),
            col_pos: ident.clone(),
            col_at: ident,
            counters: Counters::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn counter(&self) -> OpCounter {
        self.counters.snapshot()
    }

    pub fn reset_counter(&mut self) {
        self.counters = Counters::default();
    }

    pub(crate) fn note_queries(&self, n: u64) {
        self.counters.query(n);
    }

    // ---- id / position bookkeeping -------------------------------------

    /// Original id of the column currently at `pos`.
    pub fn col_id(&self, pos: usize) -> usize {
        self.col_at[pos]
    }

    /// Original id of the row currently at `pos`.
    pub fn row_id(&self, pos: usize) -> usize {
        self.row_at[pos]
    }

    /// Current position of the row with original id `id`.
    pub fn row_pos(&self, id: usize) -> usize {
        self.row_pos[id]
    }

    /// Current position of the column with original id `id`.
    pub fn col_pos(&self, id: usize) -> usize {
        self.col_pos[id]
    }

    /// Stored row ids of the column at position `pos` (sorted by id, not position).
    pub fn column_ids(&self, pos: usize) -> &[usize] {
        &self.cols[self.col_at[pos]]
    }

    /// Stored row ids of the column with original id `id`.
    pub fn column_by_id(&self, id: usize) -> &[usize] {
        &self.cols[id]
    }

    /// Row positions of the column at `pos`, ascending.
    pub fn column_positions(&self, pos: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.column_ids(pos).iter().map(|&r| self.row_pos[r]).collect();
        v.sort_unstable();
        v
    }

    pub fn is_zero_column(&self, pos: usize) -> bool {
        self.counters.query(1);
        self.column_ids(pos).is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    // ---- queries -------------------------------------------------------

    /// Row position of the lowest nonzero entry of the column at `pos`.
    pub fn low(&self, pos: usize) -> Option<usize> {
        self.counters.query(1);
        self.low_uncounted(pos)
    }

    /// Original row id of the lowest nonzero entry of the column at `pos`.
    pub fn low_id(&self, pos: usize) -> Option<usize> {
        self.low(pos).map(|p| self.row_at[p])
    }

    pub(crate) fn low_uncounted(&self, pos: usize) -> Option<usize> {
        self.column_ids(pos).iter().map(|&r| self.row_pos[r]).max()
    }

    pub(crate) fn low_of_id_uncounted(&self, col_id: usize) -> Option<usize> {
        self.cols[col_id].iter().map(|&r| self.row_pos[r]).max()
    }

    /// Entry at (row position `i`, column position `j`).
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.counters.query(1);
        self.column_ids(j).binary_search(&self.row_at[i]).is_ok()
    }

    /// Column positions in `cols` whose entry in row position `i` is nonzero.
    pub fn nonzero_in_row(&self, i: usize, cols: std::ops::Range<usize>) -> Vec<usize> {
        let rid = self.row_at[i];
        self.counters.query(cols.len() as u64);
        cols.filter(|&j| self.column_ids(j).binary_search(&rid).is_ok()).collect()
    }

    // ---- mutation ------------------------------------------------------

    /// `col(target) <- col(target) + col(source)` over GF(2).
    pub fn add_column(&mut self, target: usize, source: usize) -> Result<()> {
        if target == source {
            return Err(Error::input("add_column: target and source coincide"));
        }
        let (t, s) = (self.col_at[target], self.col_at[source]);
        let merged = symmetric_difference(&self.cols[t], &self.cols[s]);
        self.cols[t] = merged;
        self.counters.col_ops.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Adds an external column (given as row ids) into the column at `target`.
    pub fn add_ids(&mut self, target: usize, ids: &[usize]) {
        let t = self.col_at[target];
        self.cols[t] = symmetric_difference(&self.cols[t], ids);
        self.counters.col_ops.fetch_add(1, Ordering::Relaxed);
    }

    /// Replaces the payload of the column at `pos`; not counted as a column operation.
    pub fn set_column_ids(&mut self, pos: usize, ids: Vec<usize>) {
        let id = self.col_at[pos];
        self.cols[id] = ids;
    }

    /// Exchanges rows at positions `i` and `i + 1`.
    pub fn swap_rows(&mut self, i: usize) {
        swap_adjacent(&mut self.row_at, &mut self.row_pos, i);
        self.counters.perms_applied.fetch_add(1, Ordering::Relaxed);
    }

    /// Exchanges columns at positions `i` and `i + 1`.
    pub fn swap_columns(&mut self, i: usize) {
        swap_adjacent(&mut self.col_at, &mut self.col_pos, i);
        self.counters.perms_applied.fetch_add(1, Ordering::Relaxed);
    }

    /// Exchanges positions `i` and `i + 1` on both axes; one permutation.
    pub fn swap_both(&mut self, i: usize) {
        swap_adjacent(&mut self.row_at, &mut self.row_pos, i);
        swap_adjacent(&mut self.col_at, &mut self.col_pos, i);
        self.counters.perms_applied.fetch_add(1, Ordering::Relaxed);
    }

    /// Relocates position `from` to `to`, shifting the positions in between
    /// by one, on the given axes. Costs `O(|from - to|)`.
    pub fn move_index(&mut self, from: usize, to: usize, axis: Axis) {
        if matches!(axis, Axis::Rows | Axis::Both) {
            relocate(&mut self.row_at, &mut self.row_pos, from, to);
        }
        if matches!(axis, Axis::Cols | Axis::Both) {
            relocate(&mut self.col_at, &mut self.col_pos, from, to);
        }
        self.counters.perms_applied.fetch_add(1, Ordering::Relaxed);
    }

    /// Applies `p` in sequence form: afterwards position `k` holds what was
    /// at position `p[k]`.
    pub fn apply_permutation(&mut self, p: &Permutation, axis: Axis) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::input("permutation length does not match matrix"));
        }
        if matches!(axis, Axis::Rows | Axis::Both) {
            permute_axis(&mut self.row_at, &mut self.row_pos, p.as_slice());
        }
        if matches!(axis, Axis::Cols | Axis::Both) {
            permute_axis(&mut self.col_at, &mut self.col_pos, p.as_slice());
        }
        self.counters.perms_applied.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// A fresh matrix holding the current content with identity indirection.
    pub fn materialize(&self) -> PermutableMatrix {
        let cols = (0..self.dim()).map(|j| self.column_positions(j)).collect();
        PermutableMatrix::from_columns(cols).expect("positions are a valid matrix")
    }

    /// Dense 0/1 rows in current order.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let m = self.dim();
        let mut out = vec![vec![0u8; m]; m];
        for j in 0..m {
            for i in self.column_positions(j) {
                out[i][j] = 1;
            }
        }
        out
    }

    /// Debug dump: dense 0/1 grid in current order, row-major, one row per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for row in self.to_dense() {
            let line: Vec<String> = row.iter().map(|b| b.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}

/// Symmetric difference of two id-sorted lists.
pub(crate) fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => {
                out.push(a[x]);
                x += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[y]);
                y += 1;
            }
            std::cmp::Ordering::Equal => {
                x += 1;
                y += 1;
            }
        }
    }
    out.extend_from_slice(&a[x..]);
    out.extend_from_slice(&b[y..]);
    out
}

fn swap_adjacent(at: &mut [usize], pos: &mut [usize], i: usize) {
    at.swap(i, i + 1);
    pos[at[i]] = i;
    pos[at[i + 1]] = i + 1;
}

fn relocate(at: &mut [usize], pos: &mut [usize], from: usize, to: usize) {
    if from < to {
        at[from..=to].rotate_left(1);
        for k in from..=to {
            pos[at[k]] = k;
        }
    } else if to < from {
        at[to..=from].rotate_right(1);
        for k in to..=from {
            pos[at[k]] = k;
        }
    }
}

fn permute_axis(at: &mut Vec<usize>, pos: &mut [usize], seq: &[usize]) {
    let next: Vec<usize> = seq.iter().map(|&k| at[k]).collect();
    *at = next;
    for (k, &id) in at.iter().enumerate() {
        pos[id] = k;
    }
}
