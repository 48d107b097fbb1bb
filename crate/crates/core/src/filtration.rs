//! Simplices, simplexwise filtrations, and the Rips / lower-star constructors.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::PermutableMatrix;
use crate::schedule::Permutation;

/// A simplex given by its strictly increasing vertex list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex(Vec<usize>);

impl Simplex {
    /// Sorts the vertices; rejects empty or repeated vertex lists.
    pub fn new(mut vertices: Vec<usize>) -> Result<Self> {
        vertices.sort_unstable();
        if vertices.is_empty() {
            return Err(Error::input("a simplex needs at least one vertex"));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input(format!("repeated vertex in {vertices:?}")));
        }
        Ok(Simplex(vertices))
    }

    pub fn vertex(v: usize) -> Self {
        Simplex(vec![v])
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    /// Codimension-one faces, in lexicographic order of the removed vertex.
    pub fn boundary(&self) -> impl Iterator<Item = Simplex> + '_ {
        let n = if self.0.len() > 1 { self.0.len() } else { 0 };
        (0..n).map(move |skip| {
            Simplex(self.0.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v).collect())
        })
    }

    /// Whether `self` is a proper face of `other`.
    pub fn is_face_of(&self, other: &Simplex) -> bool {
        self.0.len() < other.0.len() && self.0.iter().all(|v| other.0.binary_search(v).is_ok())
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// A simplexwise filtration: one simplex per position, faces first, grades
/// non-decreasing.
#[derive(Debug, Clone)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    grades: Vec<f64>,
    index: Arc<HashMap<Simplex, usize>>,
}

impl PartialEq for Filtration {
    fn eq(&self, other: &Self) -> bool {
        self.simplices == other.simplices && self.grades == other.grades
    }
}

/// Total order used to refine grades into a simplexwise order.
fn refine_order(a: &(Simplex, f64), b: &(Simplex, f64)) -> std::cmp::Ordering {
    a.1.total_cmp(&b.1).then(a.0.dim().cmp(&b.0.dim())).then_with(|| a.0.cmp(&b.0))
}

impl Filtration {
    /// Sorts by (grade, dimension, vertex list) and validates.
    pub fn from_graded(mut items: Vec<(Simplex, f64)>) -> Result<Self> {
        if let Some((s, _)) = items.iter().find(|(_, g)| g.is_nan()) {
            return Err(Error::input(format!("NaN grade on {s}")));
        }
        items.sort_by(refine_order);
        Self::from_ordered(items)
    }

    /// Keeps the given order; validates uniqueness, face order and monotone grades.
    pub fn from_ordered(items: Vec<(Simplex, f64)>) -> Result<Self> {
        let (simplices, grades): (Vec<_>, Vec<_>) = items.into_iter().unzip();
        if let Some(k) = grades.windows(2).position(|w| !(w[0] <= w[1])) {
            return Err(Error::input(format!("grades decrease at position {}", k + 2)));
        }
        Self::assemble(simplices, grades)
    }

    /// Uses the positions themselves as grades.
    pub fn from_order(simplices: Vec<Simplex>) -> Result<Self> {
        let grades = (0..simplices.len()).map(|k| k as f64).collect();
        Self::assemble(simplices, grades)
    }

    fn assemble(simplices: Vec<Simplex>, grades: Vec<f64>) -> Result<Self> {
        let mut index = HashMap::with_capacity(simplices.len());
        for (k, s) in simplices.iter().enumerate() {
            if index.insert(s.clone(), k).is_some() {
                return Err(Error::input(format!("simplex {s} appears twice")));
            }
        }
        let f = Filtration { simplices, grades, index: Arc::new(index) };
        f.check_face_order()?;
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn simplex(&self, k: usize) -> &Simplex {
        &self.simplices[k]
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn grade(&self, k: usize) -> f64 {
        self.grades[k]
    }

    pub fn grades(&self) -> &[f64] {
        &self.grades
    }

    pub fn position(&self, s: &Simplex) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.simplices.iter().map(Simplex::dim).collect()
    }

    /// Number of simplices per dimension.
    pub fn counts_by_dim(&self) -> Vec<usize> {
        let mut c = Vec::new();
        for s in &self.simplices {
            if c.len() <= s.dim() {
                c.resize(s.dim() + 1, 0);
            }
            c[s.dim()] += 1;
        }
        c
    }

    /// Positions of the codimension-one faces of the simplex at `k`.
    pub fn face_positions(&self, k: usize) -> Vec<usize> {
        self.simplices[k].boundary().map(|f| self.index[&f]).collect()
    }

    fn check_face_order(&self) -> Result<()> {
        for (k, s) in self.simplices.iter().enumerate() {
            for f in s.boundary() {
                match self.index.get(&f) {
                    None => return Err(Error::FaceOrder(format!("face {f} of {s} is missing"))),
                    Some(&p) if p >= k => {
                        return Err(Error::FaceOrder(format!("face {f} of {s} comes after it")));
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// The boundary matrix in filtration order.
    pub fn boundary_matrix(&self) -> PermutableMatrix {
        let cols = (0..self.len()).map(|k| self.face_positions(k)).collect();
        PermutableMatrix::from_columns(cols).expect("face positions are distinct and in range")
    }

    /// Same simplex set (ignoring order and grades).
    pub fn same_simplices(&self, other: &Filtration) -> bool {
        self.len() == other.len() && self.simplices.iter().all(|s| other.index.contains_key(s))
    }

    /// The filtration whose position `k` holds the simplex at `seq[k]`.
    /// Grades are reassigned to positions since the new order need not be
    /// grade-monotone.
    pub fn reordered(&self, seq: &Permutation) -> Result<Filtration> {
        if seq.len() != self.len() {
            return Err(Error::input("reorder length mismatch"));
        }
        Self::from_order(seq.as_slice().iter().map(|&k| self.simplices[k].clone()).collect())
    }

    /// Parses `grade v0 v1 ...` lines (`#` comments, blank lines ignored)
    /// and sorts with the tie-break rule.
    pub fn parse(text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: n + 1, msg };
            let mut words = line.split_whitespace();
            let g: f64 = words
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|e| bad(format!("bad grade: {e}")))?;
            let verts = words
                .map(|w| w.parse::<usize>().map_err(|e| bad(format!("bad vertex `{w}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let s = Simplex::new(verts).map_err(|e| bad(e.to_string()))?;
            if g.is_nan() {
                return Err(bad("NaN grade".into()));
            }
            items.push((s, g));
        }
        if items.is_empty() {
            return Err(Error::Parse { line: 1, msg: "no simplices".into() });
        }
        Self::from_graded(items)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (simplex, g) in self.simplices.iter().zip(&self.grades) {
            let vs: Vec<String> = simplex.vertices().iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{g} {}", vs.join(" "));
        }
        s
    }
}

/// `q` with `q[position in a] = position in b` for every simplex.
pub fn reindex_bijection(a: &Filtration, b: &Filtration) -> Result<Permutation> {
    if !a.same_simplices(b) {
        return Err(Error::input("filtrations have different simplex sets"));
    }
    let image = a.simplices.iter().map(|s| b.index[s]).collect();
    Permutation::from_vec(image)
}

/// Filtrations over one simplex set.
#[derive(Debug, Clone)]
pub struct FiltrationFamily {
    members: Vec<Filtration>,
}

impl FiltrationFamily {
    pub fn new(members: Vec<Filtration>) -> Result<Self> {
        if let Some(first) = members.first() {
            if let Some(k) = members.iter().position(|f| !f.same_simplices(first)) {
                return Err(Error::input(format!("member {k} has a different simplex set")));
            }
        }
        Ok(FiltrationFamily { members })
    }

    pub fn members(&self) -> &[Filtration] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Reindexing bijection from member `k` to member `k + 1`.
    pub fn bijection(&self, k: usize) -> Result<Permutation> {
        reindex_bijection(&self.members[k], &self.members[k + 1])
    }

    pub fn into_members(self) -> Vec<Filtration> {
        self.members
    }
}

impl std::ops::Index<usize> for FiltrationFamily {
    type Output = Filtration;
    fn index(&self, k: usize) -> &Filtration {
        &self.members[k]
    }
}

/// Euclidean distance matrix of a point cloud.
pub fn euclidean_distances(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()).collect())
        .collect()
}

/// Vietoris–Rips filtration from a distance matrix: every simplex of
/// dimension `<= dim_max` whose diameter is `<= eps_max`, graded by diameter.
pub fn build_rips(dist: &[Vec<f64>], eps_max: f64, dim_max: usize) -> Result<Filtration> {
    let n = dist.len();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::input(format!("distance row {i} has length {}", row.len())));
        }
        for (j, &d) in row.iter().enumerate() {
            if !(d >= 0.0) || d != dist[j][i] {
                return Err(Error::input(format!("distance matrix not symmetric non-negative at ({i},{j})")));
            }
        }
    }
    let mut items: Vec<(Simplex, f64)> = (0..n).map(|v| (Simplex::vertex(v), 0.0)).collect();
    let mut frontier: Vec<(Vec<usize>, f64)> = (0..n).map(|v| (vec![v], 0.0)).collect();
    for _ in 0..dim_max {
        let mut next = Vec::new();
        for (verts, diam) in &frontier {
            let last = *verts.last().expect("non-empty");
            for w in last + 1..n {
                let reach = verts.iter().map(|&u| dist[u][w]).fold(0.0, f64::max);
                if reach <= eps_max {
                    let mut grown = verts.clone();
                    grown.push(w);
                    next.push((grown, diam.max(reach)));
                }
            }
        }
        items.extend(next.iter().map(|(v, d)| (Simplex(v.clone()), *d)));
        frontier = next;
    }
    Filtration::from_graded(items)
}

/// Rips filtration of a point cloud under the Euclidean metric.
pub fn build_rips_points(points: &[Vec<f64>], eps_max: f64, dim_max: usize) -> Result<Filtration> {
    build_rips(&euclidean_distances(points), eps_max, dim_max)
}

/// Lower-star filtration of an `H x W` image on the Freudenthal
/// triangulation. Vertex `(r, c)` has id `r * W + c`; each square is split by
/// the diagonal from `(r+1, c)` to `(r, c+1)`.
pub fn build_lower_star(image: &[Vec<f64>]) -> Result<Filtration> {
    let h = image.len();
    let w = image.first().map_or(0, Vec::len);
    if h < 2 || w < 2 {
        return Err(Error::input("lower-star images must be at least 2x2"));
    }
    if image.iter().any(|row| row.len() != w) {
        return Err(Error::input("ragged image rows"));
    }
    let id = |r: usize, c: usize| r * w + c;
    let val = |v: usize| image[v / w][v % w];
    let mut cells: Vec<Vec<usize>> = (0..h * w).map(|v| vec![v]).collect();
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                cells.push(vec![id(r, c), id(r, c + 1)]);
            }
            if r + 1 < h {
                cells.push(vec![id(r, c), id(r + 1, c)]);
            }
            if r + 1 < h && c + 1 < w {
                cells.push(vec![id(r + 1, c), id(r, c + 1)]);
                cells.push(vec![id(r, c), id(r, c + 1), id(r + 1, c)]);
                cells.push(vec![id(r, c + 1), id(r + 1, c), id(r + 1, c + 1)]);
            }
        }
    }
    let items = cells
        .into_iter()
        .map(|vs| {
            let g = vs.iter().map(|&v| val(v)).fold(f64::NEG_INFINITY, f64::max);
            Simplex::new(vs).map(|s| (s, g))
        })
        .collect::<Result<Vec<_>>>()?;
    Filtration::from_graded(items)
}

/// Parses a CSV grid of reals (comma or whitespace separated).
pub fn parse_grid_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse { line: n + 1, msg: format!("`{t}`: {e}") }))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parses a plain (P2) PGM image into a grid of raw gray levels.
pub fn parse_pgm(text: &str) -> Result<Vec<Vec<f64>>> {
    let tokens: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .collect();
    let bad = |msg: &str| Error::Parse { line: 1, msg: msg.to_string() };
    if tokens.first() != Some(&"P2") {
        return Err(bad("expected P2 magic"));
    }
    let num = |k: usize| -> Result<f64> {
        tokens.get(k).ok_or_else(|| bad("truncated PGM"))?.parse::<f64>().map_err(|_| bad("bad PGM number"))
    };
    let (w, h) = (num(1)? as usize, num(2)? as usize);
    let _maxval = num(3)?;
    if tokens.len() != 4 + w * h {
        return Err(bad("PGM pixel count does not match header"));
    }
    (0..h).map(|r| (0..w).map(|c| num(4 + r * w + c)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: &[usize]) -> Simplex {
        Simplex::new(v.to_vec()).unwrap()
    }

    /// u, v, w, then a = uw, b = vw, c = uv.
    pub(crate) fn triangle_boundary() -> Filtration {
        Filtration::from_order(vec![s(&[0]), s(&[1]), s(&[2]), s(&[0, 2]), s(&[1, 2]), s(&[0, 1])]).unwrap()
    }

    #[test]
    fn simplex_validation() {
        assert!(Simplex::new(vec![]).is_err());
        assert!(Simplex::new(vec![1, 1]).is_err());
        assert_eq!(Simplex::new(vec![2, 0]).unwrap().vertices(), &[0, 2]);
        assert_eq!(s(&[0, 1, 2]).boundary().count(), 3);
        assert_eq!(s(&[4]).boundary().count(), 0);
        assert!(s(&[0, 2]).is_face_of(&s(&[0, 1, 2])));
    }

    #[test]
    fn face_order_is_enforced() {
        assert!(Filtration::from_order(vec![s(&[0, 1]), s(&[0]), s(&[1])]).is_err());
        assert!(Filtration::from_order(vec![s(&[0]), s(&[0, 1])]).is_err());
        assert!(Filtration::from_order(vec![s(&[0]), s(&[0])]).is_err());
    }

    #[test]
    fn triangle_boundary_matrix() {
        let f = triangle_boundary();
        let d = f.boundary_matrix();
        assert_eq!(d.column_positions(3), vec![0, 2]);
        assert_eq!(d.column_positions(4), vec![1, 2]);
        assert_eq!(d.column_positions(5), vec![0, 1]);
        let verts = Filtration::from_order((0..4).map(Simplex::vertex).collect()).unwrap();
        assert_eq!(verts.boundary_matrix().nnz(), 0);
    }

    #[test]
    fn rips_examples() {
        let unit = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let f = build_rips(&unit, 1.0, 2).unwrap();
        assert_eq!(f.len(), 7);
        assert!((3..6).all(|k| f.grade(k) == 1.0 && f.simplex(k).dim() == 1));
        let far = vec![vec![0.0, 5.0], vec![5.0, 0.0]];
        assert_eq!(build_rips(&far, 1.0, 2).unwrap().len(), 2);
        let skew = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(build_rips(&skew, 1.0, 1).is_err());
    }

    #[test]
    fn rips_matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.gen_range(3..9);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let d = euclidean_distances(&pts);
            let eps = rng.gen_range(0.2..0.8);
            let f = build_rips(&d, eps, 2).unwrap();
            let mut expected = 0;
            for mask in 1u32..(1 << n) {
                let vs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
                if vs.len() > 3 {
                    continue;
                }
                let diam = vs.iter().flat_map(|&a| vs.iter().map(move |&b| (a, b))).map(|(a, b)| d[a][b]).fold(0.0, f64::max);
                if diam <= eps {
                    expected += 1;
                    let k = f.position(&Simplex(vs.clone())).expect("simplex present");
                    assert_eq!(f.grade(k), diam);
                }
            }
            assert_eq!(f.len(), expected);
        }
    }

    #[test]
    fn lower_star_counts() {
        let flat = vec![vec![0.0; 9]; 9];
        let f = build_lower_star(&flat).unwrap();
        assert_eq!(f.counts_by_dim(), vec![81, 208, 128]);
        assert_eq!(f.len(), 417);
        let small = build_lower_star(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(small.counts_by_dim(), vec![4, 5, 2]);
        assert!(build_lower_star(&[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn lower_star_grades_are_vertex_maxima() {
        // ids: 0=(0,0) 1=(0,1) 2=(1,0) 3=(1,1) with values 0,1,2,3
        let f = build_lower_star(&[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let grade = |v: &[usize]| f.grade(f.position(&s(v)).unwrap());
        assert_eq!(grade(&[0, 1]), 1.0);
        assert_eq!(grade(&[1, 2]), 2.0);
        assert_eq!(grade(&[0, 2]), 2.0);
        assert_eq!(grade(&[2, 3]), 3.0);
        assert_eq!(grade(&[0, 1, 2]), 2.0);
        assert_eq!(grade(&[1, 2, 3]), 3.0);
        assert!(f.position(&s(&[0, 3])).is_none());
    }

    #[test]
    fn reindexing() {
        let k0 = triangle_boundary();
        assert!(reindex_bijection(&k0, &k0).unwrap().is_identity());
        let k1 = k0.reordered(&Permutation::from_vec(vec![0, 1, 2, 4, 3, 5]).unwrap()).unwrap();
        assert_eq!(reindex_bijection(&k0, &k1).unwrap().as_slice(), &[0, 1, 2, 4, 3, 5]);
        let other = Filtration::from_order(vec![s(&[0]), s(&[1])]).unwrap();
        assert!(reindex_bijection(&k0, &other).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let text = "# triangle\n0 0\n0 1\n0 2\n1 0 2\n2 1 2\n3 0 1\n";
        let f = Filtration::parse(text).unwrap();
        assert_eq!(f.simplices(), triangle_boundary().simplices());
        assert_eq!(f.grades(), &[0.0, 0.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(Filtration::parse(&f.to_text()).unwrap(), f);
        assert!(Filtration::parse("").is_err());
        match Filtration::parse("0 0\nx 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Filtration::parse("0 0 1\n").is_err());
    }

    #[test]
    fn image_parsers() {
        assert_eq!(parse_grid_csv("1,2\n3,4\n").unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(parse_pgm("P2\n# c\n2 1\n255\n0 255\n").unwrap(), vec![vec![0.0, 255.0]]);
        assert!(parse_pgm("P5 1 1 1 0").is_err());
    }

    proptest::proptest! {
        #[test]
        fn boundary_squares_to_zero(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..8);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let f = build_rips_points(&pts, 0.7, 3).unwrap();
            let d = f.boundary_matrix().to_dense();
            let m = f.len();
            for i in 0..m {
                for j in 0..m {
                    if i >= j {
                        proptest::prop_assert_eq!(d[i][j], 0);
                    }
                    let sq = (0..m).fold(0u8, |acc, k| acc ^ (d[i][k] & d[k][j]));
                    proptest::prop_assert_eq!(sq, 0);
                }
            }
        }

        #[test]
        fn reindexing_inverts(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
            let img2: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
            let (a, b) = (build_lower_star(&img).unwrap(), build_lower_star(&img2).unwrap());
            let ab = reindex_bijection(&a, &b).unwrap();
            let ba = reindex_bijection(&b, &a).unwrap();
            proptest::prop_assert!(ba.compose(&ab).unwrap().is_identity());
        }
    }
}
