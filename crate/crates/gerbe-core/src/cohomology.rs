//! Linear algebra for coboundary equations: exact GF(2) elimination on
//! bit-packed rows, dense real elimination with partial pivoting, Betti
//! numbers, cohomology-class comparison and the `R* = Z/2 x R` splitting.
//!
//! Solvability decisions over the reals are made by residual: a candidate
//! solution is computed and accepted iff `||dx - y||_inf <= tol`.

use crate::error::{GerbeError, Result};
use crate::simplicial::{coboundary, Cochain, Complex, Region, RStar, Sign, Simplex};

/// Coefficient field for rank computations.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Field {
    GF2,
    R,
}

/// A cohomology class over GF(2), held by a representing sign cocycle.
#[derive(Clone, Debug)]
pub struct SignClass {
    pub rep: Cochain<Sign>,
}

/// A cohomology class over the reals, held by a representing cocycle and the
/// tolerance under which it was validated.
#[derive(Clone, Debug)]
pub struct RealClass {
    pub rep: Cochain<f64>,
    pub tol: f64,
}

/// The split form of an `R*` class: a GF(2) part and a real part of equal
/// degree.
#[derive(Clone, Debug)]
pub struct RStarClass {
    pub sign: SignClass,
    pub real: RealClass,
}

// ---------------------------------------------------------------------------
// GF(2) matrices

/// Dense GF(2) matrix with 64 columns packed per word.
struct Gf2Matrix {
    rows: Vec<Vec<u64>>,
}

impl Gf2Matrix {
    fn zero(nrows: usize, cols: usize) -> Gf2Matrix {
        let words = cols.div_ceil(64);
        Gf2Matrix { rows: vec![vec![0u64; words]; nrows] }
    }

    fn set(&mut self, r: usize, c: usize, bit: bool) {
        let w = c / 64;
        let m = 1u64 << (c % 64);
        if bit {
            self.rows[r][w] |= m;
        } else {
            self.rows[r][w] &= !m;
        }
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r][c / 64] >> (c % 64) & 1 == 1
    }

    fn xor_row(&mut self, target: usize, source: usize) {
        let (lo, hi) = if target < source {
            let (a, b) = self.rows.split_at_mut(source);
            (&mut a[target], &b[0])
        } else {
            let (a, b) = self.rows.split_at_mut(target);
            (&mut b[0], &a[source])
        };
        for (t, s) in lo.iter_mut().zip(hi.iter()) {
            *t ^= *s;
        }
    }

    /// Reduced row echelon form over the first `pivot_cols` columns;
    /// returns (rank, pivot column per reduced row).
    fn reduce(&mut self, pivot_cols: usize) -> (usize, Vec<usize>) {
        let mut rank = 0;
        let mut pivots = Vec::new();
        for c in 0..pivot_cols {
            let Some(p) = (rank..self.rows.len()).find(|&r| self.get(r, c)) else {
                continue;
            };
            self.rows.swap(rank, p);
            for r in 0..self.rows.len() {
                if r != rank && self.get(r, c) {
                    self.xor_row(r, rank);
                }
            }
            pivots.push(c);
            rank += 1;
        }
        (rank, pivots)
    }
}

/// Builds the coboundary matrix `δ_k` of the complex over `cols(k-simplices)`
/// and `rows((k+1)-simplices)`; real version carries alternating signs.
fn coboundary_rows(complex: &Complex, k: usize) -> Vec<Vec<(usize, f64)>> {
    let mut rows = Vec::with_capacity(complex.count(k + 1));
    for s in complex.simplices(k + 1) {
        let mut row = Vec::with_capacity(k + 2);
        for i in 0..=k + 1 {
            let col = complex.position(&s.face(i)).expect("face closure");
            row.push((col, if i % 2 == 0 { 1.0 } else { -1.0 }));
        }
        rows.push(row);
    }
    rows
}

fn rank_gf2(complex: &Complex, k: usize) -> usize {
    let n = complex.count(k);
    let mut m = Gf2Matrix::zero(complex.count(k + 1), n);
    for (r, row) in coboundary_rows(complex, k).iter().enumerate() {
        for &(c, _) in row {
            m.set(r, c, true);
        }
    }
    m.reduce(n).0
}

fn rank_real(complex: &Complex, k: usize, tol: f64) -> usize {
    let rows: Vec<Vec<f64>> = coboundary_rows(complex, k)
        .iter()
        .map(|r| {
            let mut dense = vec![0.0; complex.count(k)];
            for &(c, v) in r {
                dense[c] += v;
            }
            dense
        })
        .collect();
    real_rank(rows, tol)
}

fn real_rank(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some((p, pv)) = (rank..rows.len())
            .map(|r| (r, rows[r][c].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            break;
        };
        if pv <= tol {
            continue;
        }
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != 0.0 {
                let f = rows[r][c] / rows[rank][c];
                for j in c..cols {
                    let sub = f * rows[rank][j];
                    rows[r][j] -= sub;
                }
                rows[r][c] = 0.0;
            }
        }
        rank += 1;
    }
    rank
}

// ---------------------------------------------------------------------------
// Cocycle checks

/// Errors unless `δy = +1` exactly.
pub fn require_sign_cocycle(complex: &Complex, y: &Cochain<Sign>) -> Result<()> {
    let dy = coboundary(complex, y);
    for (s, v) in dy.iter() {
        if v.is_minus() {
            return Err(GerbeError::NotACocycle(-1.0, s.verts().to_vec()));
        }
    }
    Ok(())
}

/// Errors unless `||δy||_inf <= tol`.
pub fn require_real_cocycle(complex: &Complex, y: &Cochain<f64>, tol: f64) -> Result<()> {
    let dy = coboundary(complex, y);
    for (s, v) in dy.iter() {
        if v.abs() > tol {
            return Err(GerbeError::NotACocycle(*v, s.verts().to_vec()));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Coboundary solves

/// Solves `δx = y` over GF(2) for a sign `(k+1)`-cocycle `y` on the whole
/// complex.  `None` when the class of `y` is nontrivial.
pub fn solve_sign(complex: &Complex, y: &Cochain<Sign>) -> Result<Option<Cochain<Sign>>> {
    if *y.region() != Region::Whole {
        return Err(GerbeError::RegionMismatch);
    }
    require_sign_cocycle(complex, y)?;
    let k = y.degree() - 1;
    let n = complex.count(k);
    let mut m = Gf2Matrix::zero(complex.count(k + 1), n + 1);
    for (r, row) in coboundary_rows(complex, k).iter().enumerate() {
        for &(c, _) in row {
            m.set(r, c, true);
        }
        let s = complex.simplices(k + 1)[r].clone();
        if y.get_canonical(&s).expect("cocycle covers region").is_minus() {
            m.set(r, n, true);
        }
    }
    let (rank, pivots) = m.reduce(n);
    // any fully reduced row with only the rhs bit set means inconsistency
    for r in rank..m.rows.len() {
        if m.get(r, n) {
            return Ok(None);
        }
    }
    let mut x: Cochain<Sign> = Cochain::identity(complex, Region::Whole, k);
    for (r, &c) in pivots.iter().enumerate() {
        if m.get(r, n) {
            x.set(complex.simplices(k)[c].verts(), Sign::MINUS);
        }
    }
    Ok(Some(x))
}

/// Solves `δx = y` over the reals for a `(k+1)`-cocycle `y` on the whole
/// complex, accepting the candidate iff the residual is within `tol`.
pub fn solve_real(complex: &Complex, y: &Cochain<f64>, tol: f64) -> Result<Option<Cochain<f64>>> {
    if *y.region() != Region::Whole {
        return Err(GerbeError::RegionMismatch);
    }
    require_real_cocycle(complex, y, tol)?;
    let k = y.degree() - 1;
    let n = complex.count(k);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(complex.count(k + 1));
    for (r, row) in coboundary_rows(complex, k).iter().enumerate() {
        let mut dense = vec![0.0; n + 1];
        for &(c, v) in row {
            dense[c] += v;
        }
        let s = &complex.simplices(k + 1)[r];
        dense[n] = y.get_canonical(s).expect("cocycle covers region");
        rows.push(dense);
    }
    // forward elimination with partial pivoting over the unknown columns
    let mut rank = 0;
    let mut pivots: Vec<usize> = Vec::new();
    for c in 0..n {
        let Some((p, pv)) = (rank..rows.len())
            .map(|r| (r, rows[r][c].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            break;
        };
        if pv <= tol {
            continue;
        }
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != 0.0 {
                let f = rows[r][c] / rows[rank][c];
                for j in c..=n {
                    let sub = f * rows[rank][j];
                    rows[r][j] -= sub;
                }
                rows[r][c] = 0.0;
            }
        }
        pivots.push(c);
        rank += 1;
    }
    // candidate: pivot unknowns from the reduced system, free unknowns zero
    let mut sol = vec![0.0; n];
    for (r, &c) in pivots.iter().enumerate() {
        sol[c] = rows[r][n] / rows[r][c];
    }
    let mut x: Cochain<f64> = Cochain::identity(complex, Region::Whole, k);
    for (c, &v) in sol.iter().enumerate() {
        if v != 0.0 {
            x.set(complex.simplices(k)[c].verts(), v);
        }
    }
    // accept by residual, not by rank bookkeeping
    let dx = coboundary(complex, &x);
    let residual = dx
        .iter()
        .map(|(s, v)| (v - y.get_canonical(s).unwrap()).abs())
        .fold(0.0f64, f64::max);
    if residual <= tol.max(1e-12 * y.norm_inf().max(1.0)) {
        Ok(Some(x))
    } else {
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// Betti numbers and class comparison

/// `dim H^k` of the complex over the chosen field.
pub fn betti(complex: &Complex, k: usize, field: Field) -> usize {
    let n = complex.count(k);
    if n == 0 {
        return 0;
    }
    let (rank_k, rank_km1) = match field {
        Field::GF2 => (
            if k == 3 { 0 } else { rank_gf2(complex, k) },
            if k == 0 { 0 } else { rank_gf2(complex, k - 1) },
        ),
        Field::R => {
            let tol = crate::DEFAULT_TOL;
            (
                if k == 3 { 0 } else { rank_real(complex, k, tol) },
                if k == 0 { 0 } else { rank_real(complex, k - 1, tol) },
            )
        }
    };
    n - rank_k - rank_km1
}

/// True iff the sign cocycles represent the same GF(2) class.
pub fn same_class_sign(complex: &Complex, x1: &Cochain<Sign>, x2: &Cochain<Sign>) -> Result<bool> {
    let diff = x1.combine(&x2.inverse());
    Ok(solve_sign(complex, &diff)?.is_some())
}

/// True iff the real cocycles differ by a coboundary within `tol`.
pub fn same_class_real(complex: &Complex, x1: &Cochain<f64>, x2: &Cochain<f64>, tol: f64) -> Result<bool> {
    let diff = x1.combine(&x2.inverse());
    Ok(solve_real(complex, &diff, tol)?.is_some())
}

/// Validates the components of an `R*` cocycle and splits it into its GF(2)
/// and real classes.
pub fn split_rstar(complex: &Complex, x: &Cochain<RStar>, tol: f64) -> Result<RStarClass> {
    let sign = x.sign_part();
    let real = x.log_part();
    require_sign_cocycle(complex, &sign)?;
    require_real_cocycle(complex, &real, tol)?;
    Ok(RStarClass {
        sign: SignClass { rep: sign },
        real: RealClass { rep: real, tol },
    })
}

// ---------------------------------------------------------------------------
// Potential integration on connected regions

/// Integrates a closed 1-cochain on a region to a vertex potential with
/// `f(base) = 0`, walking a breadth-first spanning tree of the region's edge
/// graph.  Vertices unreachable from `base` (possible only for disconnected
/// whole-complex regions) start their own component at 0.
pub fn integrate_potential(
    complex: &Complex,
    x: &Cochain<f64>,
    region: Region,
    base: usize,
) -> Result<Cochain<f64>> {
    use std::collections::{BTreeMap, VecDeque};
    let verts: Vec<Simplex> = complex.region_simplices(&region, 0);
    let edges: Vec<Simplex> = complex.region_simplices(&region, 1);
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in &edges {
        let (p, q) = (e.verts()[0], e.verts()[1]);
        adj.entry(p).or_default().push(q);
        adj.entry(q).or_default().push(p);
    }
    let mut f: BTreeMap<usize, f64> = BTreeMap::new();
    let mut roots: Vec<usize> = vec![base];
    roots.extend(verts.iter().map(|v| v.verts()[0]));
    for root in roots {
        if f.contains_key(&root) {
            continue;
        }
        f.insert(root, 0.0);
        let mut queue = VecDeque::from([root]);
        while let Some(p) = queue.pop_front() {
            let fp = f[&p];
            for &q in adj.get(&p).into_iter().flatten() {
                if f.contains_key(&q) {
                    continue;
                }
                let step = x.get(&[p, q]).ok_or_else(|| GerbeError::EdgeOutsideRegion(vec![p, q]))?;
                f.insert(q, fp + step);
                queue.push_back(q);
            }
        }
    }
    let mut out: Cochain<f64> = Cochain::identity(complex, region, 0);
    for (v, val) in f {
        out.set(&[v], val);
    }
    Ok(out)
}
