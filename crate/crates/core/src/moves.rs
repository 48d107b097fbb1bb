//! Move operations: relocate one simplex across an interval, restoring the
//! decomposition only once the relocation is complete.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::reduce::{Decomposition, Target};

/// Outcome of one move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveReport {
    pub from: usize,
    pub to: usize,
    pub r_ops: u64,
    pub v_ops: u64,
}

impl MoveReport {
    pub fn span(&self) -> usize {
        self.from.abs_diff(self.to)
    }
}

/// Column sets a right move will touch, computed without mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DonorTrace {
    /// Columns in `[i, j]` whose `V` entry in row `i` is nonzero (includes `i`).
    pub v_row: Vec<usize>,
    /// Columns with an `R` entry in row `i` whose low lies in `[i, j]`.
    pub r_row: Vec<usize>,
}

impl DonorTrace {
    /// `|𝕀| + |𝕁|`.
    pub fn size(&self) -> usize {
        self.v_row.len() + self.r_row.len()
    }

    /// Column operations the move will perform: each donor chain costs one
    /// addition per member after the first.
    pub fn predicted_ops(&self) -> usize {
        self.v_row.len().saturating_sub(1) + self.r_row.len().saturating_sub(1)
    }
}

impl Decomposition {
    /// Relocates the simplex at `i` to `j`, dispatching on direction.
    pub fn move_simplex(&mut self, i: usize, j: usize) -> Result<MoveReport> {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.move_right(i, j),
            std::cmp::Ordering::Greater => self.move_left(i, j),
            std::cmp::Ordering::Equal => Ok(MoveReport { from: i, to: j, r_ops: 0, v_ops: 0 }),
        }
    }

    fn check_span(&self, i: usize, j: usize) -> Result<()> {
        let m = self.m();
        if i >= m || j >= m {
            return Err(Error::input(format!("move ({i}, {j}) out of range for m = {m}")));
        }
        Ok(())
    }

    /// Whether moving position `i` to `j` keeps every face before its cofaces.
    pub fn move_is_valid(&self, i: usize, j: usize) -> bool {
        if i < j {
            self.d.nonzero_in_row(i, i + 1..j + 1).is_empty()
        } else {
            !self.d.column_positions(i).iter().any(|&r| r >= j)
        }
    }

    /// The sets a right move `(i, j)` would feed to its donor chains.
    pub fn donor_trace(&self, i: usize, j: usize) -> Result<DonorTrace> {
        self.check_span(i, j)?;
        if j <= i {
            return Err(Error::input("donor_trace expects a right move"));
        }
        let v_row = self.v.nonzero_in_row(i, i..j + 1);
        let sigma_row = self.r.row_id(i);
        let mut r_row: Vec<usize> = (i..=j)
            .filter_map(|row| self.pivot_col(row))
            .filter(|&c| {
                self.r.note_queries(1);
                self.r.column_ids(c).binary_search(&sigma_row).is_ok()
            })
            .collect();
        r_row.sort_unstable();
        Ok(DonorTrace { v_row, r_row })
    }

    /// Column operations that moving `i` to `j` would perform (each acts on
    /// `V`, and on `R` unless the `R` column added is zero), without touching
    /// `self`. Right moves read the donor trace; left moves have no
    /// closed-form trace, so they are executed on a scratch copy.
    pub fn move_cost(&self, i: usize, j: usize) -> Result<u64> {
        if i < j {
            return Ok(self.donor_trace(i, j)?.predicted_ops() as u64);
        }
        let mut scratch = self.clone();
        Ok(scratch.move_simplex(i, j)?.v_ops)
    }

    /// Moves the simplex at `i` to position `j > i`; the simplices in
    /// `(i, j]` shift down by one.
    pub fn move_right(&mut self, i: usize, j: usize) -> Result<MoveReport> {
        self.check_span(i, j)?;
        if j <= i {
            return Err(Error::input("move_right needs i < j"));
        }
        if !self.move_is_valid(i, j) {
            return Err(Error::FaceOrder(format!("a coface of the simplex at {i} lies in ({i}, {j}]")));
        }
        let (r0, v0) = (self.r_ops(), self.v_ops());
        let trace = self.donor_trace(i, j)?;
        let sigma = self.r.col_id(i);
        let mut touched: Vec<usize> = trace.v_row.iter().chain(&trace.r_row).map(|&c| self.r.col_id(c)).collect();
        if let Some(p) = self.pivot[self.r.row_id(i)] {
            touched.push(p);
        }
        let donor = self.restore_right(&trace.v_row);
        self.restore_right(&trace.r_row);
        self.relocate(i, j);
        let (dr, dv) = donor.expect("the row-i set contains i");
        let sp = self.r.col_pos(sigma);
        self.r.set_column_ids(sp, dr);
        self.v.set_column_ids(sp, dv);
        for id in touched {
            self.refresh(id);
        }
        Ok(MoveReport { from: i, to: j, r_ops: self.r_ops() - r0, v_ops: self.v_ops() - v0 })
    }

    /// Donor chain over `cols` (ascending positions). Each column receives
    /// the current donor; the donor switches to a column's old content when
    /// that column's old low is smaller (a zero column counts as smallest).
    fn restore_right(&mut self, cols: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
        let (&first, rest) = cols.split_first()?;
        let mut d_low = self.r.low(first);
        let mut d_r = self.r.column_ids(first).to_vec();
        let mut d_v = self.v.column_ids(first).to_vec();
        for &k in rest {
            let low = self.r.low(k);
            let old_r = self.r.column_ids(k).to_vec();
            let old_v = self.v.column_ids(k).to_vec();
            if !d_r.is_empty() {
                self.r.add_ids(k, &d_r);
            }
            self.v.add_ids(k, &d_v);
            if low < d_low {
                d_low = low;
                d_r = old_r;
                d_v = old_v;
            }
        }
        Some((d_r, d_v))
    }

    /// Moves the simplex at `i` to position `j < i`; the simplices in
    /// `[j, i)` shift up by one.
    pub fn move_left(&mut self, i: usize, j: usize) -> Result<MoveReport> {
        self.check_span(i, j)?;
        if j >= i {
            return Err(Error::input("move_left needs j < i"));
        }
        if !self.move_is_valid(i, j) {
            return Err(Error::FaceOrder(format!("a face of the simplex at {i} lies in [{j}, {i})")));
        }
        let (r0, v0) = (self.r_ops(), self.v_ops());
        let sigma = self.r.col_id(i);
        // clear V's column i below the diagonal inside [j, i), lowest entry first
        loop {
            self.v.note_queries(1);
            let below = self.v.column_ids(i).iter().map(|&r| self.v.row_pos(r)).filter(|&r| r >= j && r < i).max();
            match below {
                Some(k) => self.add(i, k, Target::Both),
                None => break,
            }
        }
        let sigma_pivot = self.pivot[self.r.row_id(i)];
        self.relocate(i, j);
        let mut dirty: BTreeSet<usize> = [Some(sigma), sigma_pivot].into_iter().flatten().map(|id| self.r.col_pos(id)).collect();
        self.restore_left(&mut dirty);
        Ok(MoveReport { from: i, to: j, r_ops: self.r_ops() - r0, v_ops: self.v_ops() - v0 })
    }

    /// Left-to-right re-reduction of the `dirty` columns against the rest.
    fn restore_left(&mut self, dirty: &mut BTreeSet<usize>) {
        for &c in dirty.iter() {
            let id = self.r.col_id(c);
            if let Some(l) = self.low[id] {
                if self.pivot[l] == Some(id) {
                    self.pivot[l] = None;
                }
            }
            self.low[id] = None;
        }
        while let Some(c) = dirty.pop_first() {
            let cid = self.r.col_id(c);
            loop {
                let Some(lp) = self.r.low(c) else { break };
                let lid = self.r.row_id(lp);
                match self.pivot[lid] {
                    None => {
                        self.set_pivot(lid, cid);
                        break;
                    }
                    Some(hid) => {
                        let hp = self.r.col_pos(hid);
                        if hp < c {
                            self.add(c, hp, Target::Both);
                        } else {
                            self.set_pivot(lid, cid);
                            self.low[hid] = None;
                            dirty.insert(hp);
                            break;
                        }
                    }
                }
            }
        }
    }

    fn set_pivot(&mut self, row: usize, col: usize) {
        self.pivot[row] = Some(col);
        self.low[col] = Some(row);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{Filtration, Simplex};
    use crate::reduce::tests::{random_filtration, triangle};
    use crate::schedule::Permutation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn oracle(f: &Filtration, dec: &Decomposition) -> crate::reduce::PersistenceDiagram {
        let order = Permutation::from_vec(dec.order()).unwrap();
        Decomposition::from_filtration(&f.reordered(&order).unwrap()).pairs()
    }

    #[test]
    fn worked_right_move() {
        let f = triangle();
        let mut dec = Decomposition::from_filtration(&f);
        let trace = dec.donor_trace(3, 5).unwrap();
        assert_eq!(trace.v_row, vec![3, 4, 5]);
        assert!(trace.r_row.is_empty());
        let rep = dec.move_right(3, 5).unwrap();
        assert_eq!((rep.r_ops, rep.v_ops), (2, 2));
        assert_eq!(trace.predicted_ops(), 2);
        dec.check().unwrap();
        // order is now u v w b c a
        assert_eq!(dec.order(), vec![0, 1, 2, 4, 5, 3]);
        assert_eq!(dec.r().column_positions(3), vec![1, 2]);
        assert_eq!(dec.r().column_positions(4), vec![0, 1]);
        assert!(dec.r().column_positions(5).is_empty());
        assert_eq!(dec.v().column_positions(5), vec![3, 4, 5]);

        let mut vine = Decomposition::from_filtration(&f);
        vine.transpose(3).unwrap();
        vine.transpose(4).unwrap();
        assert_eq!((vine.r_ops() - 2, vine.v_ops() - 2), (4, 4));
        assert_eq!(vine.pairs(), dec.pairs());
    }

    /// The star at `d` followed by the triangle `abc`, with the triangle
    /// edges brought in front of the star by three left moves.
    fn star_then_triangle() -> Filtration {
        let e = |a, b| Simplex::new(vec![a, b]).unwrap();
        let mut s: Vec<Simplex> = (0..4).map(Simplex::vertex).collect();
        s.extend([e(0, 3), e(1, 3), e(2, 3), e(0, 1), e(1, 2), e(0, 2)]);
        Filtration::from_order(s).unwrap()
    }

    #[test]
    fn schedule_costs_depend_on_order() {
        // symbols 0..6 stand for the edges u v w x y z
        let (u, x, y, z) = (0, 3, 4, 5);
        let schedules = [
            ([(x, u), (y, u), (z, u)], [2, 3, 1]),
            ([(x, u), (z, u), (y, z)], [2, 2, 4]),
            ([(y, u), (x, y), (z, u)], [4, 2, 2]),
            ([(y, u), (z, u), (x, y)], [4, 3, 3]),
            ([(z, u), (x, z), (y, z)], [2, 2, 4]),
            ([(z, u), (y, z), (x, z)], [2, 5, 3]),
        ];
        let f = star_then_triangle();
        for (moves, costs) in schedules {
            let mut dec = Decomposition::from_filtration(&f);
            let mut seq: Vec<usize> = (0..6).collect();
            for ((sym, tgt), cost) in moves.into_iter().zip(costs) {
                let i = 4 + seq.iter().position(|&q| q == sym).unwrap();
                let j = 4 + seq.iter().position(|&q| q == tgt).unwrap();
                assert_eq!(dec.move_cost(i, j).unwrap(), cost);
                let rep = dec.move_simplex(i, j).unwrap();
                assert_eq!(rep.v_ops, cost);
                assert!(rep.r_ops <= rep.v_ops);
                let e = seq.remove(i - 4);
                seq.insert(j - 4, e);
            }
            // the last schedule, as listed, leaves y ahead of x
            let head = if moves[1] == (y, z) { [y, x, z] } else { [x, y, z] };
            assert_eq!(seq[..3], head);
            assert_eq!(dec.pairs(), oracle(&f, &dec));
        }
    }

    #[test]
    fn moving_back_restores_pairs() {
        let f = triangle();
        let mut dec = Decomposition::from_filtration(&f);
        let original = dec.pairs();
        dec.move_right(3, 5).unwrap();
        dec.move_left(5, 3).unwrap();
        dec.check().unwrap();
        assert_eq!(dec.order(), (0..6).collect::<Vec<_>>());
        assert_eq!(dec.pairs(), original);
    }

    #[test]
    fn free_right_move() {
        let f = Filtration::from_order((0..4).map(Simplex::vertex).collect()).unwrap();
        let mut dec = Decomposition::from_filtration(&f);
        let rep = dec.move_right(1, 2).unwrap();
        assert_eq!((rep.r_ops, rep.v_ops), (0, 0));
        assert_eq!(dec.donor_trace(0, 3).unwrap().predicted_ops(), 0);
    }

    #[test]
    fn adjacent_left_move_matches_transposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let f = random_filtration(&mut rng, 30);
            let i = rng.gen_range(1..f.len());
            let mut a = Decomposition::from_filtration(&f);
            let mut b = a.clone();
            match (a.move_left(i, i - 1), b.transpose(i - 1)) {
                (Ok(_), Ok(_)) => assert_eq!(a.pairs(), b.pairs()),
                (Err(Error::FaceOrder(_)), Err(Error::FaceOrder(_))) => {}
                other => panic!("disagreement: {other:?}"),
            }
        }
    }

    #[test]
    fn face_order_violations_are_rejected() {
        let mut dec = Decomposition::from_filtration(&triangle());
        let before = dec.clone();
        // vertex u (0) cannot pass edge a (3)
        assert!(matches!(dec.move_right(0, 4), Err(Error::FaceOrder(_))));
        // edge a (3) cannot pass its vertex w (2)
        assert!(matches!(dec.move_left(3, 1), Err(Error::FaceOrder(_))));
        assert_eq!(dec.order(), before.order());
        assert_eq!(dec.counter().col_ops, before.counter().col_ops);
    }

    #[test]
    fn random_moves_match_fresh_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut done = 0;
        while done < 1500 {
            let f = random_filtration(&mut rng, 40);
            let m = f.len();
            let mut dec = Decomposition::from_filtration(&f);
            for _ in 0..20 {
                let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..m));
                if i == j || !dec.move_is_valid(i, j) {
                    continue;
                }
                let predicted = dec.move_cost(i, j).unwrap();
                let rep = dec.move_simplex(i, j).unwrap();
                assert_eq!(rep.v_ops, predicted);
                assert!(rep.r_ops <= rep.v_ops);
                let budget = 2 * rep.span() as u64;
                assert!(rep.r_ops <= budget && rep.v_ops <= budget, "{rep:?} over budget");
                dec.check().unwrap();
                assert_eq!(dec.pairs(), oracle(&f, &dec));
                done += 1;
            }
        }
    }

    #[test]
    fn creators_outside_the_interval_keep_their_status() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let f = random_filtration(&mut rng, 35);
            let m = f.len();
            let mut dec = Decomposition::from_filtration(&f);
            let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..m));
            if i == j || !dec.move_is_valid(i, j) {
                continue;
            }
            let creators = |d: &Decomposition| -> Vec<(usize, bool)> {
                (0..m).map(|k| (d.r().col_id(k), d.r().column_ids(k).is_empty())).collect()
            };
            let before = creators(&dec);
            dec.move_simplex(i, j).unwrap();
            let after = creators(&dec);
            let (lo, hi) = (i.min(j), i.max(j));
            for k in (0..lo).chain(hi + 1..m) {
                assert_eq!(before[k], after[k]);
            }
        }
    }
}
