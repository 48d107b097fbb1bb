//! Sweeping a filtration family: reduce once, then update by moves or by
//! vineyards, or reduce every member from scratch.

use std::borrow::Borrow;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::filtration::{reindex_bijection, Filtration};
use crate::matrix::OpCounter;
use crate::par::{map_collect, Exec};
use crate::reduce::{Decomposition, PersistenceDiagram};
use crate::schedule::{coarsen_transpositions, LcsSorter, Move, MoveSchedule, Permutation};
use crate::vineyard::straight_line_schedule;

/// How moves between consecutive members are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Pending symbols in ascending target order, adjacent placement.
    #[default]
    Lcs,
    /// Smallest resulting Spearman distance first.
    Greedy,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub strategy: Strategy,
    /// Run the full invariant check after every member.
    pub check: bool,
}

/// Per-member output of a family sweep.
#[derive(Debug, Clone, Default)]
pub struct FamilyRun {
    pub diagrams: Vec<PersistenceDiagram>,
    /// Counter totals after each member, including the initial reduction.
    pub cumulative: Vec<OpCounter>,
    /// Moves or transpositions performed to reach each member (0 for the first).
    pub steps: Vec<usize>,
    /// Updates whose column additions exceeded `2|i − j|` (moves) or 2
    /// (transpositions) in either matrix.
    pub over_budget: usize,
}

impl FamilyRun {
    pub fn total(&self) -> OpCounter {
        self.cumulative.last().copied().unwrap_or_default()
    }

    pub fn total_steps(&self) -> usize {
        self.steps.iter().sum()
    }

    fn record(&mut self, dec: &Decomposition, steps: usize, check: bool) -> Result<()> {
        if check {
            dec.check()?;
        }
        self.cumulative.push(dec.counter());
        self.diagrams.push(dec.pairs());
        self.steps.push(steps);
        Ok(())
    }
}

/// Face and coface lists by simplex id, read off the boundary matrix.
struct Incidence {
    faces: Vec<Vec<usize>>,
    cofaces: Vec<Vec<usize>>,
}

impl Incidence {
    fn new(dec: &Decomposition) -> Self {
        let m = dec.m();
        let faces: Vec<Vec<usize>> = (0..m).map(|id| dec.d().column_by_id(id).to_vec()).collect();
        let mut cofaces = vec![Vec::new(); m];
        for (id, fs) in faces.iter().enumerate() {
            for &f in fs {
                cofaces[f].push(id);
            }
        }
        Incidence { faces, cofaces }
    }

    /// Part of `[lo, hi]` that the simplex `id` at position `i` can reach
    /// without passing one of its faces or cofaces.
    fn clip(&self, dec: &Decomposition, id: usize, i: usize, lo: usize, hi: usize) -> Option<(usize, usize)> {
        let pos = |s: &usize| dec.r().col_pos(*s);
        if lo > i {
            let stop = self.cofaces[id].iter().map(pos).filter(|&p| p > i).min().unwrap_or(usize::MAX);
            let hi = hi.min(stop.saturating_sub(1));
            (lo <= hi).then_some((lo, hi))
        } else {
            let start = self.faces[id].iter().map(pos).filter(|&p| p < i).max().map_or(0, |p| p + 1);
            let lo = lo.max(start);
            (lo <= hi).then_some((lo, hi))
        }
    }
}

/// Order of `next` expressed in the decomposition's column ids, given that
/// the decomposition currently realizes `prev`.
fn target_ids(dec: &Decomposition, prev: &Filtration, next: &Filtration) -> Result<Permutation> {
    let q = reindex_bijection(prev, next)?;
    let order = dec.order();
    let mut target = vec![0; order.len()];
    for (ppos, &id) in order.iter().enumerate() {
        target[q.get(ppos)] = id;
    }
    Permutation::from_vec(target)
}

/// Moves the decomposition from its current order to `target` (in column
/// ids) with a minimal number of moves, never letting a simplex pass one
/// of its faces. Returns the moves and how many went over budget.
fn sort_by_moves(dec: &mut Decomposition, inc: &Incidence, target: &Permutation, strategy: Strategy) -> Result<(Vec<Move>, usize)> {
    let current = Permutation::from_vec(dec.order())?;
    let mut s = LcsSorter::new(&current, target)?;
    let mut over = 0;
    while !s.is_done() {
        let reach = |v: usize| {
            let (i, lo, hi) = s.window(v);
            inc.clip(dec, target.get(v), i, lo, hi).map(|(lo, hi)| (v, i, lo, hi))
        };
        let pick = match strategy {
            Strategy::Lcs => s.pending().find_map(reach).map(|(v, i, lo, hi)| (v, if lo > i { lo } else { hi })),
            Strategy::Greedy => s
                .pending()
                .filter_map(reach)
                .map(|(v, i, lo, hi)| (v, i, v.clamp(lo, hi)))
                .min_by_key(|&(v, i, to)| (s.ledger().total_after(i, to), v))
                .map(|(v, _, to)| (v, to)),
        };
        let (v, to) = pick.ok_or_else(|| Error::Invariant("no move keeps faces ahead of cofaces".into()))?;
        let mv = s.apply(v, to);
        let rep = dec.move_simplex(mv.from, mv.to)?;
        let budget = 2 * rep.span() as u64;
        if rep.r_ops > budget || rep.v_ops > budget {
            over += 1;
        }
    }
    Ok((s.finish().moves, over))
}

/// Plans the moves carrying `a` to `b` by executing them on a reduction of
/// `a`. Returns the schedule (positions of `a` as symbols) and the column
/// additions it cost in V.
pub fn plan_moves(a: &Filtration, b: &Filtration, strategy: Strategy) -> Result<(MoveSchedule, u64)> {
    let mut dec = Decomposition::from_filtration(a);
    let inc = Incidence::new(&dec);
    let target = target_ids(&dec, a, b)?;
    let before = dec.v_ops();
    let (moves, _) = sort_by_moves(&mut dec, &inc, &target, strategy)?;
    let cost = dec.v_ops() - before;
    Ok((MoveSchedule { moves, source: Permutation::identity(a.len()), target }, cost))
}

/// Reduces `f` and applies `moves` in order.
pub fn apply_moves(f: &Filtration, moves: &[Move], check: bool) -> Result<Decomposition> {
    let mut dec = Decomposition::from_filtration(f);
    for (k, mv) in moves.iter().enumerate() {
        dec.move_simplex(mv.from, mv.to).map_err(|e| match e {
            Error::FaceOrder(msg) => Error::FaceOrder(format!("move {}: {msg}", k + 1)),
            Error::Input(msg) => Error::Input(format!("move {}: {msg}", k + 1)),
            other => other,
        })?;
    }
    if check {
        dec.check()?;
    }
    Ok(dec)
}

fn with_index<T>(k: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("member {k}: {msg}")),
        Error::FaceOrder(msg) => Error::FaceOrder(format!("member {k}: {msg}")),
        other => other,
    })
}

/// Reduces the first member, then reaches every later member by moves.
/// Only the previous and the current member are held at any time.
pub fn run_moves<I>(members: I, opts: RunOptions) -> Result<FamilyRun>
where
    I: IntoIterator,
    I::Item: Borrow<Filtration>,
{
    run_moves_with(members, opts, |_, _, _| {})
}

/// [`run_moves`] with a hook invoked after each member is reached.
pub fn run_moves_with<I, H>(members: I, opts: RunOptions, mut hook: H) -> Result<FamilyRun>
where
    I: IntoIterator,
    I::Item: Borrow<Filtration>,
    H: FnMut(usize, &Filtration, &Decomposition),
{
    sweep(members, opts.check, &mut hook, |dec, inc, prev, next| {
        let target = target_ids(dec, prev, next)?;
        let (moves, over) = sort_by_moves(dec, inc, &target, opts.strategy)?;
        Ok((moves.len(), over))
    })
}

/// Reaches every member by the straight-line transposition schedule.
pub fn run_vineyard_family<I>(members: I, check: bool) -> Result<FamilyRun>
where
    I: IntoIterator,
    I::Item: Borrow<Filtration>,
{
    sweep(members, check, &mut |_, _, _| {}, |dec, _, prev, next| {
        let sched = straight_line_schedule(prev, next)?;
        let mut over = 0;
        for &k in &sched.swaps {
            let rep = dec.transpose(k)?;
            if rep.r_ops > 2 || rep.v_ops > 2 {
                over += 1;
            }
        }
        Ok((sched.len(), over))
    })
}

/// Reaches every member by moves obtained from coarsening the straight-line
/// transposition schedule (runs carrying one simplex become one move).
pub fn run_coarsened<I>(members: I, check: bool) -> Result<FamilyRun>
where
    I: IntoIterator,
    I::Item: Borrow<Filtration>,
{
    sweep(members, check, &mut |_, _, _| {}, |dec, _, prev, next| {
        let sched = straight_line_schedule(prev, next)?;
        let moves = coarsen_transpositions(&sched.swaps);
        let mut over = 0;
        for mv in &moves {
            let rep = dec.move_simplex(mv.from, mv.to)?;
            if rep.r_ops > 2 * rep.span() as u64 || rep.v_ops > 2 * rep.span() as u64 {
                over += 1;
            }
        }
        Ok((moves.len(), over))
    })
}

fn sweep<I, H, U>(members: I, check: bool, hook: &mut H, mut update: U) -> Result<FamilyRun>
where
    I: IntoIterator,
    I::Item: Borrow<Filtration>,
    H: FnMut(usize, &Filtration, &Decomposition),
    U: FnMut(&mut Decomposition, &Incidence, &Filtration, &Filtration) -> Result<(usize, usize)>,
{
    let mut run = FamilyRun::default();
    let mut iter = members.into_iter();
    let Some(first) = iter.next() else { return Ok(run) };
    let mut dec = Decomposition::from_filtration(first.borrow());
    let inc = Incidence::new(&dec);
    run.record(&dec, 0, check)?;
    hook(0, first.borrow(), &dec);
    let mut prev = first;
    for (k, next) in iter.enumerate().map(|(k, f)| (k + 1, f)) {
        let (steps, over) = with_index(k, update(&mut dec, &inc, prev.borrow(), next.borrow()))?;
        run.over_budget += over;
        run.record(&dec, steps, check)?;
        hook(k, next.borrow(), &dec);
        prev = next;
    }
    Ok(run)
}

/// Reduces every member from scratch, in parallel under [`Exec::Parallel`].
pub fn run_naive<F>(members: &[F], exec: Exec) -> Result<FamilyRun>
where
    F: Borrow<Filtration> + Sync,
{
    if let Some(first) = members.first() {
        for (k, f) in members.iter().enumerate() {
            if !f.borrow().same_simplices(first.borrow()) {
                return Err(Error::input(format!("member {k}: filtrations have different simplex sets")));
            }
        }
    }
    let each = map_collect(exec, members, |f| {
        let dec = Decomposition::from_filtration(f.borrow());
        (dec.pairs(), dec.counter())
    });
    let mut run = FamilyRun::default();
    let mut acc = OpCounter::default();
    for (pairs, c) in each {
        acc += c;
        run.cumulative.push(acc);
        run.diagrams.push(pairs);
        run.steps.push(0);
    }
    Ok(run)
}

/// One row of the cost report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostRow {
    pub strategy: String,
    /// 1-based member index.
    pub member_index: usize,
    pub col_ops_cum: u64,
    pub queries_cum: u64,
    pub perms_cum: u64,
}

pub fn cost_report(runs: &[(&str, &FamilyRun)]) -> Vec<CostRow> {
    runs.iter()
        .flat_map(|(name, run)| {
            run.cumulative.iter().enumerate().map(move |(k, c)| CostRow {
                strategy: name.to_string(),
                member_index: k + 1,
                col_ops_cum: c.col_ops,
                queries_cum: c.entry_queries,
                perms_cum: c.perms_applied,
            })
        })
        .collect()
}

/// CSV with header `strategy,member_index,col_ops_cum,queries_cum,perms_cum`.
pub fn cost_csv(rows: &[CostRow]) -> String {
    let mut s = String::from("strategy,member_index,col_ops_cum,queries_cum,perms_cum\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.strategy, r.member_index, r.col_ops_cum, r.queries_cum, r.perms_cum);
    }
    s
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::filtration::{build_lower_star, build_rips_points};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Random family over one simplex set: either a drifting point cloud
    /// under the full Rips 2-skeleton or a drifting small image.
    pub(crate) fn random_family(rng: &mut ChaCha8Rng, len: usize) -> Vec<Filtration> {
        if rng.gen_bool(0.5) {
            let n = rng.gen_range(3..6);
            let mut pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            (0..len)
                .map(|_| {
                    let f = build_rips_points(&pts, f64::INFINITY, 2).unwrap();
                    for p in &mut pts {
                        p[0] += rng.gen_range(-0.3..0.3);
                        p[1] += rng.gen_range(-0.3..0.3);
                    }
                    f
                })
                .collect()
        } else {
            let (h, w) = (rng.gen_range(2..4), rng.gen_range(2..4));
            let mut img: Vec<Vec<f64>> = (0..h).map(|_| (0..w).map(|_| rng.gen::<f64>()).collect()).collect();
            (0..len)
                .map(|_| {
                    let f = build_lower_star(&img).unwrap();
                    img.iter_mut().flatten().for_each(|x| *x += rng.gen_range(-0.5..0.5));
                    f
                })
                .collect()
        }
    }

    fn fresh(f: &Filtration) -> PersistenceDiagram {
        Decomposition::from_filtration(f).pairs()
    }

    #[test]
    fn single_member_is_one_reduction() {
        let f = crate::reduce::tests::triangle();
        let run = run_moves([&f], RunOptions::default()).unwrap();
        let dec = Decomposition::from_filtration(&f);
        assert_eq!(run.diagrams, vec![dec.pairs()]);
        assert_eq!(run.total(), dec.counter());
        assert_eq!(run.steps, vec![0]);
        let naive = run_naive(&[&f], Exec::Sequential).unwrap();
        assert_eq!(naive.diagrams, run.diagrams);
        assert_eq!(naive.total(), run.total());
    }

    #[test]
    fn empty_family() {
        let run = run_moves(Vec::<Filtration>::new(), RunOptions::default()).unwrap();
        assert!(run.diagrams.is_empty());
        assert!(cost_report(&[("moves", &run)]).is_empty());
    }

    #[test]
    fn repeated_member_needs_no_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_family(&mut rng, 1).remove(0);
        let fam = [&f, &f, &f];
        for run in [run_moves(fam, RunOptions::default()).unwrap(), run_vineyard_family(fam, true).unwrap()] {
            assert_eq!(run.steps, vec![0, 0, 0]);
            assert_eq!(run.cumulative[0].col_ops, run.total().col_ops);
        }
    }

    #[test]
    fn all_strategies_agree_with_fresh_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let fam = random_family(&mut rng, 5);
            let oracle: Vec<_> = fam.iter().map(fresh).collect();
            let lcs = run_moves(&fam, RunOptions { strategy: Strategy::Lcs, check: true }).unwrap();
            let greedy = run_moves(&fam, RunOptions { strategy: Strategy::Greedy, check: true }).unwrap();
            let vine = run_vineyard_family(&fam, true).unwrap();
            let coarse = run_coarsened(&fam, true).unwrap();
            let naive = run_naive(&fam, Exec::Parallel).unwrap();
            for run in [&lcs, &greedy, &vine, &coarse, &naive] {
                assert_eq!(run.diagrams, oracle);
                assert_eq!(run.over_budget, 0);
            }
            for k in 1..fam.len() {
                let d = crate::schedule::move_distance(&Permutation::identity(fam[0].len()), &reindex_bijection(&fam[k - 1], &fam[k]).unwrap()).unwrap();
                assert!(lcs.steps[k] >= d);
                assert!(coarse.steps[k] <= vine.steps[k]);
            }
        }
    }

    #[test]
    fn planned_moves_replay_to_the_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let fam = random_family(&mut rng, 2);
            let (sched, cost) = plan_moves(&fam[0], &fam[1], Strategy::Lcs).unwrap();
            assert_eq!(sched.replay(), sched.target);
            let dec = apply_moves(&fam[0], &sched.moves, true).unwrap();
            assert_eq!(dec.pairs(), fresh(&fam[1]));
            assert_eq!(dec.v_ops() - Decomposition::from_filtration(&fam[0]).v_ops(), cost);
        }
    }

    #[test]
    fn coarsened_moves_cost_no_more_than_vineyards() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..60 {
            let fam = random_family(&mut rng, 6);
            let vine = run_vineyard_family(&fam, false).unwrap();
            let coarse = run_coarsened(&fam, false).unwrap();
            assert!(coarse.total().col_ops <= vine.total().col_ops, "{} > {}", coarse.total().col_ops, vine.total().col_ops);
        }
    }

    #[test]
    fn mismatched_member_is_reported_by_index() {
        let f = crate::reduce::tests::triangle();
        let g = Filtration::from_order(f.simplices()[..3].to_vec()).unwrap();
        let err = run_moves([&f, &f, &g], RunOptions::default()).unwrap_err();
        assert!(err.to_string().contains("member 2"), "{err}");
        assert!(run_naive(&[&f, &g], Exec::Sequential).is_err());
    }

    static LIVE: AtomicUsize = AtomicUsize::new(0);
    static PEAK: AtomicUsize = AtomicUsize::new(0);

    struct Tracked(Filtration);

    impl Tracked {
        fn new(f: Filtration) -> Self {
            let now = LIVE.fetch_add(1, Ordering::SeqCst) + 1;
            PEAK.fetch_max(now, Ordering::SeqCst);
            Tracked(f)
        }
    }

    impl Drop for Tracked {
        fn drop(&mut self) {
            LIVE.fetch_sub(1, Ordering::SeqCst);
        }
    }

    impl Borrow<Filtration> for Tracked {
        fn borrow(&self) -> &Filtration {
            &self.0
        }
    }

    #[test]
    fn sweep_holds_two_members_at_most() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let fam = random_family(&mut rng, 8);
        let expected: Vec<_> = fam.iter().map(fresh).collect();
        let run = run_moves(fam.into_iter().map(Tracked::new), RunOptions::default()).unwrap();
        assert_eq!(run.diagrams, expected);
        assert_eq!(PEAK.load(Ordering::SeqCst), 2);
        assert_eq!(LIVE.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn cost_rows_are_cumulative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fam = random_family(&mut rng, 4);
        let run = run_moves(&fam, RunOptions::default()).unwrap();
        let naive = run_naive(&fam, Exec::Sequential).unwrap();
        let rows = cost_report(&[("moves", &run), ("naive", &naive)]);
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[3].col_ops_cum, run.total().col_ops);
        assert!(rows.windows(2).filter(|w| w[0].strategy == w[1].strategy).all(|w| w[0].col_ops_cum <= w[1].col_ops_cum));
        let per_member: u64 = fam.iter().map(|f| Decomposition::from_filtration(f).counter().col_ops).sum();
        assert_eq!(rows[7].col_ops_cum, per_member);
        let csv = cost_csv(&rows);
        assert!(csv.starts_with("strategy,member_index,col_ops_cum,queries_cum,perms_cum\nmoves,1,"));
        assert_eq!(csv.lines().count(), 9);
    }
}
