//! The `R = DV` decomposition, the standard column reduction, and
//! persistence pairs.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::filtration::Filtration;
use crate::matrix::{OpCounter, PermutableMatrix};

/// A boundary matrix `D` with `R = D V`, `V` unit upper triangular.
///
/// All three matrices share one position indirection, so a column id is the
/// index of its simplex in the filtration the decomposition was built from.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub(crate) d: PermutableMatrix,
    pub(crate) r: PermutableMatrix,
    pub(crate) v: PermutableMatrix,
    dims: Vec<usize>,
    /// `pivot[row id]` = id of the R column whose low entry is that row.
    pub(crate) pivot: Vec<Option<usize>>,
    /// `low[col id]` = row id of the low entry of that R column.
    pub(crate) low: Vec<Option<usize>>,
    pub(crate) perms: u64,
}

/// Which matrices a column addition acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Target {
    V,
    Both,
}

impl Decomposition {
    /// Runs the standard reduction on `d`.
    pub fn reduce(d: &PermutableMatrix) -> Decomposition {
        let mut dec = Self::unreduced(d);
        dec.rereduce();
        dec
    }

    pub fn from_filtration(f: &Filtration) -> Decomposition {
        Self::reduce(&f.boundary_matrix())
    }

    /// `R = D`, `V = I`, with counters reset.
    fn unreduced(d: &PermutableMatrix) -> Decomposition {
        let m = d.dim();
        let mut dm = d.clone();
        dm.reset_counter();
        let r = dm.clone();
        let mut v = d.clone();
        for id in 0..m {
            let p = v.col_pos(id);
            v.set_column_ids(p, vec![id]);
        }
        v.reset_counter();
        let dims = (0..m).map(|id| d.column_by_id(id).len().max(1) - 1).collect();
        let mut dec = Decomposition { d: dm, r, v, dims, pivot: vec![None; m], low: vec![None; m], perms: 0 };
        dec.rebuild_pivots();
        dec
    }

    /// Continues the standard reduction from the current `R`, `V`: for each
    /// column left to right, add the earlier column sharing its low until
    /// the low is unique or the column vanishes.
    pub fn rereduce(&mut self) {
        let m = self.m();
        self.pivot = vec![None; m];
        for j in 0..m {
            let jid = self.r.col_id(j);
            loop {
                let Some(lp) = self.r.low(j) else {
                    self.low[jid] = None;
                    break;
                };
                let lid = self.r.row_id(lp);
                match self.pivot[lid] {
                    Some(kid) => {
                        let k = self.r.col_pos(kid);
                        self.add(j, k, Target::Both);
                    }
                    None => {
                        self.pivot[lid] = Some(jid);
                        self.low[jid] = Some(lid);
                        break;
                    }
                }
            }
        }
    }

    pub fn m(&self) -> usize {
        self.r.dim()
    }

    pub fn d(&self) -> &PermutableMatrix {
        &self.d
    }

    pub fn r(&self) -> &PermutableMatrix {
        &self.r
    }

    pub fn v(&self) -> &PermutableMatrix {
        &self.v
    }

    /// Column additions on `R` and `V` together, entry queries over all three
    /// matrices, and permutations applied to the decomposition.
    pub fn counter(&self) -> OpCounter {
        let (d, r, v) = (self.d.counter(), self.r.counter(), self.v.counter());
        OpCounter {
            col_ops: r.col_ops + v.col_ops,
            entry_queries: d.entry_queries + r.entry_queries + v.entry_queries,
            perms_applied: self.perms,
        }
    }

    pub fn r_ops(&self) -> u64 {
        self.r.counter().col_ops
    }

    pub fn v_ops(&self) -> u64 {
        self.v.counter().col_ops
    }

    /// Simplex dimension of the column at position `pos`.
    pub fn dim_at(&self, pos: usize) -> usize {
        self.dims[self.r.col_id(pos)]
    }

    /// Original ids in current order.
    pub fn order(&self) -> Vec<usize> {
        (0..self.m()).map(|k| self.r.col_id(k)).collect()
    }

    /// Adds column `source` into `target`. Adding a zero `R` column is a no-op
    /// and is neither performed nor counted.
    pub(crate) fn add(&mut self, target: usize, source: usize, which: Target) {
        if which == Target::Both && !self.r.column_ids(source).is_empty() {
            self.r.add_column(target, source).expect("distinct columns");
        }
        self.v.add_column(target, source).expect("distinct columns");
    }

    /// Exchanges positions `i`, `i + 1` in all three matrices.
    pub(crate) fn swap(&mut self, i: usize) {
        self.d.swap_both(i);
        self.r.swap_both(i);
        self.v.swap_both(i);
        self.perms += 1;
    }

    /// Relocates position `from` to `to` in all three matrices.
    pub(crate) fn relocate(&mut self, from: usize, to: usize) {
        use crate::matrix::Axis;
        self.d.move_index(from, to, Axis::Both);
        self.r.move_index(from, to, Axis::Both);
        self.v.move_index(from, to, Axis::Both);
        self.perms += 1;
    }

    /// Recomputes the low caches of one column (by id) and updates the pivot map.
    pub(crate) fn refresh(&mut self, id: usize) {
        if let Some(old) = self.low[id] {
            if self.pivot[old] == Some(id) {
                self.pivot[old] = None;
            }
        }
        let new = self.r.low_of_id_uncounted(id).map(|p| self.r.row_id(p));
        self.low[id] = new;
        if let Some(row) = new {
            self.pivot[row] = Some(id);
        }
    }

    pub(crate) fn rebuild_pivots(&mut self) {
        let m = self.m();
        self.pivot = vec![None; m];
        for id in 0..m {
            let l = self.r.low_of_id_uncounted(id).map(|p| self.r.row_id(p));
            self.low[id] = l;
            if let Some(row) = l {
                self.pivot[row] = Some(id);
            }
        }
    }

    /// Position of the R column whose low sits at row position `row`.
    pub(crate) fn pivot_col(&self, row: usize) -> Option<usize> {
        self.pivot[self.r.row_id(row)].map(|id| self.r.col_pos(id))
    }

    /// Checks both decomposition invariants, reporting the first failure.
    pub fn check(&self) -> Result<()> {
        let m = self.m();
        for c in 0..m {
            let mut acc: Vec<usize> = Vec::new();
            for &vid in self.v.column_ids(c) {
                acc = crate::matrix::symmetric_difference(&acc, self.d.column_by_id(vid));
            }
            if acc != self.r.column_ids(c) {
                return Err(Error::Invariant(format!("R != DV at column {c}")));
            }
            let vc = self.v.column_positions(c);
            if vc.last() != Some(&c) {
                return Err(Error::Invariant(format!("V not unit upper triangular at column {c}")));
            }
        }
        let mut seen = vec![false; m];
        for c in 0..m {
            if let Some(l) = self.r.low_uncounted(c) {
                if std::mem::replace(&mut seen[l], true) {
                    return Err(Error::Invariant(format!("R not reduced: low {l} repeats")));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> bool {
        self.check().is_ok()
    }

    /// Persistence pairs read off the low entries of `R`.
    pub fn pairs(&self) -> PersistenceDiagram {
        let m = self.m();
        let mut paired = vec![false; m];
        let mut pairs = Vec::new();
        for j in 0..m {
            if let Some(i) = self.r.low_uncounted(j) {
                paired[i] = true;
                paired[j] = true;
                pairs.push(Pair { dim: self.dim_at(i), birth: i, death: Some(j) });
            }
        }
        for (k, &p) in paired.iter().enumerate() {
            if !p {
                pairs.push(Pair { dim: self.dim_at(k), birth: k, death: None });
            }
        }
        PersistenceDiagram::new(m, pairs)
    }
}

/// Convenience wrapper: reduce a boundary matrix.
pub fn reduce(d: &PermutableMatrix) -> Decomposition {
    Decomposition::reduce(d)
}

/// A birth/death pair in position coordinates; `death == None` is essential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub dim: usize,
    pub birth: usize,
    pub death: Option<usize>,
}

/// Persistence pairs of one filtration, sorted, in position coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PersistenceDiagram {
    m: usize,
    pairs: Vec<Pair>,
}

/// A pair in grade coordinates; essential deaths are `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradedPair {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

impl PersistenceDiagram {
    pub fn new(m: usize, mut pairs: Vec<Pair>) -> Self {
        pairs.sort_unstable();
        PersistenceDiagram { m, pairs }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Size of the filtration the diagram belongs to.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self, p: usize) -> impl Iterator<Item = &Pair> + '_ {
        self.pairs.iter().filter(move |x| x.dim == p)
    }

    /// `β_p` after each prefix: entry `k` counts dimension-`p` pairs with
    /// `birth <= k < death`.
    pub fn betti_curve(&self, p: usize) -> Vec<usize> {
        let mut diff = vec![0i64; self.m + 1];
        for x in self.dim(p) {
            diff[x.birth] += 1;
            diff[x.death.unwrap_or(self.m)] -= 1;
        }
        let mut run = 0i64;
        diff[..self.m]
            .iter()
            .map(|d| {
                run += d;
                run as usize
            })
            .collect()
    }

    /// Pairs in grade coordinates, dropping pairs of zero persistence if asked.
    pub fn graded(&self, grades: &[f64], drop_zero: bool) -> Vec<GradedPair> {
        self.pairs
            .iter()
            .map(|x| GradedPair {
                dim: x.dim,
                birth: grades[x.birth],
                death: x.death.map_or(f64::INFINITY, |d| grades[d]),
            })
            .filter(|g| !drop_zero || g.birth < g.death)
            .collect()
    }

    /// Betti numbers of the subcomplex of simplices with grade `<= t`.
    pub fn betti_at_grade(&self, grades: &[f64], t: f64, max_dim: usize) -> Vec<usize> {
        let mut out = vec![0; max_dim + 1];
        for g in self.graded(grades, false) {
            if g.dim <= max_dim && g.birth <= t && t < g.death {
                out[g.dim] += 1;
            }
        }
        out
    }

    /// CSV `dim,birth_index,death_index,birth_grade,death_grade`, 1-based
    /// indices, `inf` for essential deaths. Without grades the grade columns
    /// repeat the indices.
    pub fn to_csv(&self, grades: Option<&[f64]>) -> String {
        let mut s = String::from("dim,birth_index,death_index,birth_grade,death_grade\n");
        for x in &self.pairs {
            let g = |k: usize| grades.map_or_else(|| (k + 1).to_string(), |g| g[k].to_string());
            let (di, dg) = match x.death {
                Some(d) => ((d + 1).to_string(), g(d)),
                None => ("inf".to_string(), "inf".to_string()),
            };
            let _ = writeln!(s, "{},{},{},{},{}", x.dim, x.birth + 1, di, g(x.birth), dg);
        }
        s
    }
}

/// Reads the grade columns of a diagram CSV written by
/// [`PersistenceDiagram::to_csv`].
pub fn parse_diagram_csv(text: &str) -> Result<Vec<GradedPair>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("dim,") {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: n + 1, msg };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [dim, _, _, birth, death] = fields[..] else {
            return Err(bad(format!("expected 5 fields, found {}", fields.len())));
        };
        let dim = dim.parse().map_err(|e| bad(format!("bad dim `{dim}`: {e}")))?;
        let birth: f64 = birth.parse().map_err(|e| bad(format!("bad birth `{birth}`: {e}")))?;
        let death: f64 = death.parse().map_err(|e| bad(format!("bad death `{death}`: {e}")))?;
        if birth.is_nan() || death.is_nan() || death < birth {
            return Err(bad(format!("invalid pair ({birth}, {death})")));
        }
        out.push(GradedPair { dim, birth, death });
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::filtration::{build_rips_points, Simplex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: &[usize]) -> Simplex {
        Simplex::new(v.to_vec()).unwrap()
    }

    pub(crate) fn triangle() -> Filtration {
        Filtration::from_order(vec![s(&[0]), s(&[1]), s(&[2]), s(&[0, 2]), s(&[1, 2]), s(&[0, 1])]).unwrap()
    }

    /// Random Rips filtration with at most `max_m` simplices.
    pub(crate) fn random_filtration(rng: &mut ChaCha8Rng, max_m: usize) -> Filtration {
        loop {
            let n = rng.gen_range(3..8);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let f = build_rips_points(&pts, rng.gen_range(0.3..1.2), 2).unwrap();
            if f.len() <= max_m {
                return f;
            }
        }
    }

    /// Pairs from ranks of dense GF(2) submatrices: `(i, j)` is a pair iff
    /// `r(i, j) - r(i+1, j) - r(i, j-1) + r(i+1, j-1) = 1` where `r(a, b)` is the
    /// rank of rows `a..` and columns `..=b` of `D`.
    pub(crate) fn rank_oracle_pairs(f: &Filtration) -> PersistenceDiagram {
        let d = f.boundary_matrix().to_dense();
        let m = d.len();
        let rank = |a: usize, b: Option<usize>| -> i64 {
            let Some(b) = b else { return 0 };
            let rows: Vec<Vec<u8>> = (a..m).map(|i| d[i][..=b].to_vec()).collect();
            gf2_rank(rows) as i64
        };
        let mut pairs = Vec::new();
        let mut paired = vec![false; m];
        for j in 0..m {
            for i in 0..j {
                let x = rank(i, Some(j)) - rank(i + 1, Some(j)) - rank(i, j.checked_sub(1)) + rank(i + 1, j.checked_sub(1));
                if x == 1 {
                    pairs.push(Pair { dim: f.simplex(i).dim(), birth: i, death: Some(j) });
                    paired[i] = true;
                    paired[j] = true;
                }
            }
        }
        for k in 0..m {
            if !paired[k] {
                pairs.push(Pair { dim: f.simplex(k).dim(), birth: k, death: None });
            }
        }
        PersistenceDiagram::new(m, pairs)
    }

    pub(crate) fn gf2_rank(mut rows: Vec<Vec<u8>>) -> usize {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut rank = 0;
        for c in 0..ncols {
            let Some(p) = (rank..rows.len()).find(|&r| rows[r][c] == 1) else { continue };
            rows.swap(rank, p);
            for r in 0..rows.len() {
                if r != rank && rows[r][c] == 1 {
                    let pivot = rows[rank].clone();
                    for (x, y) in rows[r].iter_mut().zip(pivot) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn triangle_reduction() {
        let dec = Decomposition::from_filtration(&triangle());
        assert_eq!(dec.r_ops(), 2);
        assert_eq!(dec.v_ops(), 2);
        // low(a) = w, low(b) = v, col(c) = 0
        assert_eq!(dec.r().low(3), Some(2));
        assert_eq!(dec.r().low(4), Some(1));
        assert_eq!(dec.r().low(5), None);
        assert!(dec.validate());
        let dgm = dec.pairs();
        let expected = vec![
            Pair { dim: 0, birth: 0, death: None },
            Pair { dim: 0, birth: 1, death: Some(4) },
            Pair { dim: 0, birth: 2, death: Some(3) },
            Pair { dim: 1, birth: 5, death: None },
        ];
        assert_eq!(dgm.pairs(), &expected[..]);
        assert_eq!(dgm.betti_curve(0), vec![1, 2, 3, 2, 1, 1]);
        assert_eq!(dgm.betti_curve(1), vec![0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn zero_matrix_reduces_trivially() {
        let dec = Decomposition::reduce(&PermutableMatrix::zeros(5));
        assert_eq!(dec.counter().col_ops, 0);
        assert_eq!(dec.v(), &PermutableMatrix::identity(5));
        assert_eq!(dec.pairs().len(), 5);
        assert!(dec.pairs().pairs().iter().all(|p| p.death.is_none() && p.dim == 0));
    }

    #[test]
    fn single_essential_class_curve() {
        let dgm = PersistenceDiagram::new(4, vec![Pair { dim: 0, birth: 0, death: None }]);
        assert_eq!(dgm.betti_curve(0), vec![1; 4]);
    }

    #[test]
    fn broken_decompositions_fail_validation() {
        let mut dec = Decomposition::from_filtration(&triangle());
        dec.r.swap_columns(3);
        assert!(!dec.validate());
        let mut dec = Decomposition::from_filtration(&triangle());
        dec.r.add_column(5, 4).unwrap();
        assert!(!dec.validate());
    }

    #[test]
    fn diagram_csv() {
        let f = triangle();
        let dgm = Decomposition::from_filtration(&f).pairs();
        let csv = dgm.to_csv(None);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "dim,birth_index,death_index,birth_grade,death_grade");
        assert_eq!(&lines[1..], &["0,1,inf,1,inf", "0,2,5,2,5", "0,3,4,3,4", "1,6,inf,6,inf"]);
    }

    #[test]
    fn diagram_csv_reads_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_filtration(&mut rng, 30);
        let dgm = Decomposition::from_filtration(&f).pairs();
        let back = parse_diagram_csv(&dgm.to_csv(Some(f.grades()))).unwrap();
        assert_eq!(back, dgm.graded(f.grades(), false));
        assert!(matches!(parse_diagram_csv("dim,a\n0,1,2\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn matches_rank_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let f = random_filtration(&mut rng, 30);
            let dec = Decomposition::from_filtration(&f);
            assert!(dec.validate());
            assert_eq!(dec.pairs(), rank_oracle_pairs(&f));
        }
    }

    /// Reduces by repeatedly picking a random pair `i < j` of columns with
    /// equal lows, in any order.
    fn reduce_shuffled(d: &PermutableMatrix, rng: &mut ChaCha8Rng) -> Decomposition {
        let mut dec = Decomposition::unreduced(d);
        loop {
            let m = dec.m();
            let lows: Vec<Option<usize>> = (0..m).map(|c| dec.r.low_uncounted(c)).collect();
            let mut clashes = Vec::new();
            for j in 0..m {
                for i in 0..j {
                    if lows[i].is_some() && lows[i] == lows[j] {
                        clashes.push((i, j));
                    }
                }
            }
            if clashes.is_empty() {
                dec.rebuild_pivots();
                return dec;
            }
            let (i, j) = clashes[rng.gen_range(0..clashes.len())];
            dec.add(j, i, Target::Both);
        }
    }

    #[test]
    fn pairing_is_independent_of_reduction_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..120 {
            let f = random_filtration(&mut rng, 40);
            let d = f.boundary_matrix();
            let base = Decomposition::reduce(&d).pairs();
            let shuffled = reduce_shuffled(&d, &mut rng);
            assert!(shuffled.validate());
            assert_eq!(shuffled.pairs(), base);
            // random left-to-right additions followed by re-reduction
            let mut dec = Decomposition::reduce(&d);
            let m = dec.m();
            for _ in 0..10 {
                let j = rng.gen_range(1..m);
                let i = rng.gen_range(0..j);
                dec.add(j, i, Target::Both);
            }
            dec.rereduce();
            assert!(dec.validate());
            assert_eq!(dec.pairs(), base);
        }
    }

    #[test]
    fn betti_numbers_match_ranks() {
        // β_p(K_k) = dim C_p - rank ∂_p - rank ∂_{p+1}, all on the prefix
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let f = random_filtration(&mut rng, 25);
            let dgm = Decomposition::from_filtration(&f).pairs();
            let d = f.boundary_matrix().to_dense();
            for k in 0..f.len() {
                for p in 0..3 {
                    let in_dim = |q: usize| -> Vec<usize> { (0..=k).filter(|&x| f.simplex(x).dim() == q).collect() };
                    let rank_of = |q: usize| -> usize {
                        if q == 0 {
                            return 0;
                        }
                        let cols = in_dim(q);
                        let rows: Vec<Vec<u8>> = in_dim(q - 1).iter().map(|&r| cols.iter().map(|&c| d[r][c]).collect()).collect();
                        gf2_rank(rows)
                    };
                    let expected = in_dim(p).len() - rank_of(p) - rank_of(p + 1);
                    assert_eq!(dgm.betti_curve(p)[k], expected);
                }
            }
        }
    }
}
