//! Finite simplicial complexes, closed-star regions, cochains, simplicial
//! maps and loop paths.
//!
//! Conventions used throughout the crate:
//!
//! * every simplex is identified by its sorted vertex list (the canonical
//!   orientation); stored cochain values always refer to that orientation,
//!   and reversing an odd permutation of the vertices inverts (multiplicative
//!   coefficients) or negates (additive coefficients) the value;
//! * the open cover of the underlying space is the closed vertex-star cover;
//!   double and triple overlaps are closed stars of edges and triangles.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{GerbeError, Result};

// ---------------------------------------------------------------------------
// Simplices

/// A simplex, stored as its sorted list of distinct vertex indices.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Simplex(Vec<usize>);

impl Simplex {
    /// Canonicalizes `verts` (must be distinct). Returns the sorted simplex
    /// and the sign of the sorting permutation.
    pub fn from_unsorted(verts: &[usize]) -> (Simplex, Sign) {
        let mut v = verts.to_vec();
        // insertion sort, counting inversions; lists have at most 4 entries
        let mut inversions = 0usize;
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                inversions += 1;
                j -= 1;
            }
        }
        let sign = if inversions % 2 == 0 { Sign::PLUS } else { Sign::MINUS };
        (Simplex(v), sign)
    }

    /// Builds a simplex from an already sorted, duplicate-free vertex list.
    pub fn from_sorted(verts: Vec<usize>) -> Simplex {
        debug_assert!(verts.windows(2).all(|w| w[0] < w[1]));
        Simplex(verts)
    }

    pub fn vertex(v: usize) -> Simplex {
        Simplex(vec![v])
    }

    pub fn edge(a: usize, b: usize) -> Simplex {
        Simplex(if a < b { vec![a, b] } else { vec![b, a] })
    }

    pub fn verts(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    /// The i-th face (vertex i removed), still sorted.
    pub fn face(&self, i: usize) -> Simplex {
        let mut v = self.0.clone();
        v.remove(i);
        Simplex(v)
    }

    pub fn contains_simplex(&self, other: &Simplex) -> bool {
        other.0.iter().all(|v| self.0.contains(v))
    }

    /// All faces of every dimension, including the simplex itself.
    pub fn all_faces(&self) -> Vec<Simplex> {
        let n = self.0.len();
        let mut out = Vec::new();
        for mask in 1u32..(1 << n) {
            let verts: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| self.0[i]).collect();
            out.push(Simplex(verts));
        }
        out
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Coefficients

/// A multiplicative sign, `+1` or `-1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sign(i8);

impl Sign {
    pub const PLUS: Sign = Sign(1);
    pub const MINUS: Sign = Sign(-1);

    pub fn new(v: i64) -> Result<Sign> {
        match v {
            1 => Ok(Sign::PLUS),
            -1 => Ok(Sign::MINUS),
            other => Err(GerbeError::ParseError(format!("sign value must be +1 or -1, got {other}"))),
        }
    }

    pub fn from_f64(v: f64) -> Sign {
        if v < 0.0 { Sign::MINUS } else { Sign::PLUS }
    }

    pub fn val(self) -> i8 {
        self.0
    }

    pub fn is_minus(self) -> bool {
        self.0 < 0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        Sign(self.0 * rhs.0)
    }
}

impl fmt::Debug for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.0 > 0 { "+1" } else { "-1" })
    }
}

/// An element of `R*` split as sign times `exp(log)`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct RStar {
    pub sign: Sign,
    pub log: f64,
}

impl RStar {
    pub const ONE: RStar = RStar { sign: Sign::PLUS, log: 0.0 };

    pub fn new(sign: Sign, log: f64) -> RStar {
        RStar { sign, log }
    }

    pub fn from_value(v: f64) -> RStar {
        RStar { sign: Sign::from_f64(v), log: v.abs().ln() }
    }

    pub fn value(self) -> f64 {
        self.sign.as_f64() * self.log.exp()
    }

    /// Raises to the power `±1` given by an orientation sign.
    pub fn orient_pow(self, s: Sign) -> RStar {
        if s.is_minus() {
            RStar { sign: self.sign, log: -self.log }
        } else {
            self
        }
    }
}

impl std::ops::Mul for RStar {
    type Output = RStar;
    fn mul(self, rhs: RStar) -> RStar {
        RStar { sign: self.sign * rhs.sign, log: self.log + rhs.log }
    }
}

/// Coefficient group of a cochain: the identity, the group operation and
/// inversion (which is also how an odd vertex permutation acts on values).
pub trait Coeff: Copy + PartialEq + fmt::Debug {
    fn identity() -> Self;
    fn op(self, other: Self) -> Self;
    fn inv(self) -> Self;

    fn orient(self, sign: Sign) -> Self {
        if sign.is_minus() { self.inv() } else { self }
    }
}

impl Coeff for Sign {
    fn identity() -> Sign {
        Sign::PLUS
    }
    fn op(self, other: Sign) -> Sign {
        self * other
    }
    fn inv(self) -> Sign {
        self
    }
}

impl Coeff for f64 {
    fn identity() -> f64 {
        0.0
    }
    fn op(self, other: f64) -> f64 {
        self + other
    }
    fn inv(self) -> f64 {
        -self
    }
}

impl Coeff for RStar {
    fn identity() -> RStar {
        RStar::ONE
    }
    fn op(self, other: RStar) -> RStar {
        self * other
    }
    fn inv(self) -> RStar {
        RStar { sign: self.sign, log: -self.log }
    }
}

// ---------------------------------------------------------------------------
// Complexes and star regions

/// A finite simplicial complex of dimension at most 3.
///
/// Simplices are closed under taking faces and every vertex lies in at least
/// one edge.
#[derive(Clone)]
pub struct Complex {
    vertex_count: usize,
    by_dim: [Vec<Simplex>; 4],
    index: HashMap<Simplex, usize>,
    stars: HashMap<Simplex, Arc<StarRegion>>,
}

/// The closed star of a base simplex: all simplices containing the base,
/// together with their faces.  Connected (a cone over the link of the base);
/// contractibility is a modeling assumption of the cover.
#[derive(Clone, Debug)]
pub struct StarRegion {
    base: Simplex,
    members: [BTreeSet<Simplex>; 4],
}

impl StarRegion {
    pub fn base(&self) -> &Simplex {
        &self.base
    }

    pub fn simplices(&self, k: usize) -> impl Iterator<Item = &Simplex> {
        self.members[k].iter()
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        s.dim() <= 3 && self.members[s.dim()].contains(s)
    }

    pub fn count(&self, k: usize) -> usize {
        self.members[k].len()
    }
}

/// Builds a complex from its maximal simplices, closing under faces.
pub fn build_complex(vertex_count: usize, maximal: &[Vec<usize>]) -> Result<Complex> {
    let mut all: BTreeSet<Simplex> = BTreeSet::new();
    for m in maximal {
        if m.len() > 4 {
            return Err(GerbeError::SimplexTooLarge(m.clone()));
        }
        let mut sorted = m.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != m.len() {
            return Err(GerbeError::ParseError(format!("simplex {m:?} has repeated vertices")));
        }
        if let Some(&v) = sorted.iter().find(|&&v| v >= vertex_count) {
            return Err(GerbeError::ReferenceError(format!("vertex {v} out of range 0..{vertex_count}")));
        }
        let s = Simplex::from_sorted(sorted);
        for f in s.all_faces() {
            all.insert(f);
        }
    }
    let mut by_dim: [Vec<Simplex>; 4] = Default::default();
    for s in all {
        by_dim[s.dim()].push(s);
    }
    // every vertex must lie in at least one edge
    let mut in_edge = vec![false; vertex_count];
    for e in &by_dim[1] {
        for &v in e.verts() {
            in_edge[v] = true;
        }
    }
    for v in 0..vertex_count {
        if !in_edge[v] {
            return Err(GerbeError::DanglingVertex(v));
        }
    }
    let mut index = HashMap::new();
    for k in 0..4 {
        for (i, s) in by_dim[k].iter().enumerate() {
            index.insert(s.clone(), i);
        }
    }
    let mut c = Complex { vertex_count, by_dim, index, stars: HashMap::new() };
    // precompute closed stars of all possible cover bases (dim <= 2)
    let mut stars = HashMap::new();
    for k in 0..3 {
        for s in &c.by_dim[k] {
            stars.insert(s.clone(), Arc::new(c.compute_star(s)));
        }
    }
    c.stars = stars;
    Ok(c)
}

impl Complex {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn dim(&self) -> usize {
        (0..4).rev().find(|&k| !self.by_dim[k].is_empty()).unwrap_or(0)
    }

    pub fn simplices(&self, k: usize) -> &[Simplex] {
        &self.by_dim[k]
    }

    pub fn count(&self, k: usize) -> usize {
        self.by_dim[k].len()
    }

    pub fn has(&self, s: &Simplex) -> bool {
        self.index.contains_key(s)
    }

    pub fn has_verts(&self, verts: &[usize]) -> bool {
        let (s, _) = Simplex::from_unsorted(verts);
        self.has(&s)
    }

    /// Position of `s` within the list of simplices of its dimension.
    pub fn position(&self, s: &Simplex) -> Option<usize> {
        self.index.get(s).copied()
    }

    fn compute_star(&self, base: &Simplex) -> StarRegion {
        let mut members: [BTreeSet<Simplex>; 4] = Default::default();
        for k in base.dim()..4 {
            for s in &self.by_dim[k] {
                if s.contains_simplex(base) {
                    for f in s.all_faces() {
                        members[f.dim()].insert(f);
                    }
                }
            }
        }
        StarRegion { base: base.clone(), members }
    }

    /// The closed star of `base`: all simplices containing it plus their faces.
    pub fn closed_star(&self, base: &Simplex) -> Result<Arc<StarRegion>> {
        if !self.has(base) {
            return Err(GerbeError::NotASimplex(base.verts().to_vec()));
        }
        if let Some(s) = self.stars.get(base) {
            return Ok(s.clone());
        }
        Ok(Arc::new(self.compute_star(base)))
    }

    pub fn star_of_vertex(&self, v: usize) -> Arc<StarRegion> {
        self.stars[&Simplex::vertex(v)].clone()
    }

    pub fn star_of_edge(&self, a: usize, b: usize) -> Arc<StarRegion> {
        self.stars[&Simplex::edge(a, b)].clone()
    }

    /// Simplices of degree `k` belonging to `region`.
    pub fn region_simplices(&self, region: &Region, k: usize) -> Vec<Simplex> {
        match region {
            Region::Whole => self.by_dim.get(k).cloned().unwrap_or_default(),
            Region::Star(base) => {
                let star = self.stars.get(base).cloned().unwrap_or_else(|| Arc::new(self.compute_star(base)));
                star.simplices(k).cloned().collect()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Cochains

/// The domain of a cochain: the whole complex or a closed-star region.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Region {
    Whole,
    Star(Simplex),
}

/// An orientation-antisymmetric assignment of coefficients to the
/// `k`-simplices of a region.  Values are stored for the canonical (sorted)
/// orientation; accessors apply the permutation sign.
#[derive(Clone, PartialEq, Debug)]
pub struct Cochain<G> {
    degree: usize,
    region: Region,
    values: BTreeMap<Simplex, G>,
}

impl<G: Coeff> Cochain<G> {
    /// The cochain taking the identity value on every `k`-simplex of `region`.
    pub fn identity(complex: &Complex, region: Region, degree: usize) -> Cochain<G> {
        let mut values = BTreeMap::new();
        for s in complex.region_simplices(&region, degree) {
            values.insert(s, G::identity());
        }
        Cochain { degree, region, values }
    }

    /// Builds a cochain by evaluating `f` on every canonical `k`-simplex.
    pub fn from_fn(complex: &Complex, region: Region, degree: usize, mut f: impl FnMut(&Simplex) -> G) -> Cochain<G> {
        let mut values = BTreeMap::new();
        for s in complex.region_simplices(&region, degree) {
            let v = f(&s);
            values.insert(s, v);
        }
        Cochain { degree, region, values }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Value on the simplex spanned by `verts`, in the orientation given by
    /// the listed order.  `None` if the simplex is not in the region.
    pub fn get(&self, verts: &[usize]) -> Option<G> {
        let (s, sign) = Simplex::from_unsorted(verts);
        self.values.get(&s).map(|v| v.orient(sign))
    }

    /// Value on a canonical (sorted) simplex.
    pub fn get_canonical(&self, s: &Simplex) -> Option<G> {
        self.values.get(s).copied()
    }

    /// Sets the value for the orientation given by the listed vertex order.
    pub fn set(&mut self, verts: &[usize], value: G) {
        let (s, sign) = Simplex::from_unsorted(verts);
        self.values.insert(s, value.orient(sign));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Simplex, &G)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise group operation with another cochain over the same region.
    pub fn combine(&self, other: &Cochain<G>) -> Cochain<G> {
        debug_assert_eq!(self.degree, other.degree);
        let mut values = self.values.clone();
        for (s, v) in values.iter_mut() {
            if let Some(w) = other.values.get(s) {
                *v = v.op(*w);
            }
        }
        Cochain { degree: self.degree, region: self.region.clone(), values }
    }

    /// Pointwise inverse.
    pub fn inverse(&self) -> Cochain<G> {
        let values = self.values.iter().map(|(s, v)| (s.clone(), v.inv())).collect();
        Cochain { degree: self.degree, region: self.region.clone(), values }
    }

    /// Restriction to a subregion (keeps only simplices present in `region`).
    pub fn restrict(&self, complex: &Complex, region: Region) -> Cochain<G> {
        let mut values = BTreeMap::new();
        for s in complex.region_simplices(&region, self.degree) {
            if let Some(v) = self.values.get(&s) {
                values.insert(s, *v);
            }
        }
        Cochain { degree: self.degree, region, values }
    }
}

impl Cochain<f64> {
    /// Maximum absolute value over the region.
    pub fn norm_inf(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, factor: f64) -> Cochain<f64> {
        let values = self.values.iter().map(|(s, v)| (s.clone(), factor * v)).collect();
        Cochain { degree: self.degree, region: self.region.clone(), values }
    }
}

impl Cochain<RStar> {
    pub fn sign_part(&self) -> Cochain<Sign> {
        let values = self.values.iter().map(|(s, v)| (s.clone(), v.sign)).collect();
        Cochain { degree: self.degree, region: self.region.clone(), values }
    }

    pub fn log_part(&self) -> Cochain<f64> {
        let values = self.values.iter().map(|(s, v)| (s.clone(), v.log)).collect();
        Cochain { degree: self.degree, region: self.region.clone(), values }
    }
}

/// Coboundary in the standard simplicial convention:
/// `(δx)(σ) = Σ_i (-1)^i x(σ with vertex i removed)`.
///
/// The result lives on the `(k+1)`-simplices of the same region; it is empty
/// when the region has none.
pub fn coboundary<G: Coeff>(complex: &Complex, x: &Cochain<G>) -> Cochain<G> {
    let k = x.degree;
    Cochain::from_fn(complex, x.region.clone(), k + 1, |s| {
        let mut acc = G::identity();
        for i in 0..=k + 1 {
            let face = s.face(i);
            let term = x
                .values
                .get(&face)
                .copied()
                .unwrap_or_else(G::identity);
            acc = acc.op(if i % 2 == 1 { term.inv() } else { term });
        }
        acc
    })
}

// ---------------------------------------------------------------------------
// Simplicial maps

/// A simplicial map given by a vertex assignment; images of simplices may be
/// degenerate (repeated vertices).
#[derive(Clone)]
pub struct SimplicialMap {
    pub domain: Arc<Complex>,
    pub codomain: Arc<Complex>,
    vertex_map: Vec<usize>,
}

impl SimplicialMap {
    pub fn new(domain: Arc<Complex>, codomain: Arc<Complex>, vertex_map: Vec<usize>) -> Result<SimplicialMap> {
        if vertex_map.len() != domain.vertex_count() {
            return Err(GerbeError::ReferenceError(format!(
                "vertex map has {} entries for {} domain vertices",
                vertex_map.len(),
                domain.vertex_count()
            )));
        }
        if let Some(&w) = vertex_map.iter().find(|&&w| w >= codomain.vertex_count()) {
            return Err(GerbeError::ReferenceError(format!("vertex image {w} out of range")));
        }
        let m = SimplicialMap { domain, codomain, vertex_map };
        // image of every simplex must be a (possibly degenerate) simplex
        for k in 0..4 {
            for s in m.domain.simplices(k) {
                if let Some(img) = m.image_simplex(s) {
                    if !m.codomain.has(&img) {
                        return Err(GerbeError::InvalidMap(s.verts().to_vec()));
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn apply(&self, v: usize) -> usize {
        self.vertex_map[v]
    }

    pub fn vertex_map(&self) -> &[usize] {
        &self.vertex_map
    }

    /// Sorted image vertex set; `None` when the image is degenerate.
    pub fn image_simplex(&self, s: &Simplex) -> Option<Simplex> {
        let mut img: Vec<usize> = s.verts().iter().map(|&v| self.vertex_map[v]).collect();
        img.sort_unstable();
        if img.windows(2).any(|w| w[0] == w[1]) {
            None
        } else {
            Some(Simplex::from_sorted(img))
        }
    }
}

/// Pullback of a cochain on the codomain (whole-complex region) along a
/// simplicial map; degenerate images contribute the identity.
pub fn pullback<G: Coeff>(map: &SimplicialMap, x: &Cochain<G>) -> Result<Cochain<G>> {
    if x.region != Region::Whole {
        return Err(GerbeError::RegionMismatch);
    }
    let k = x.degree;
    Ok(Cochain::from_fn(&map.domain, Region::Whole, k, |s| {
        let img: Vec<usize> = s.verts().iter().map(|&v| map.vertex_map[v]).collect();
        let mut sorted = img.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            G::identity()
        } else {
            x.get(&img).unwrap_or_else(G::identity)
        }
    }))
}

// ---------------------------------------------------------------------------
// Loops

/// A closed edge path `v_0, v_1, ..., v_n = v_0`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LoopPath {
    vertices: Vec<usize>,
}

impl LoopPath {
    /// `vertices` must be a closed cycle (first equals last) with at least
    /// three edges.
    pub fn new(vertices: Vec<usize>) -> Result<LoopPath> {
        if vertices.len() < 4 || vertices.first() != vertices.last() {
            return Err(GerbeError::ParseError(
                "a loop needs at least 3 edges and must close up (first vertex repeated last)".into(),
            ));
        }
        Ok(LoopPath { vertices })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Oriented edges `(v_t, v_{t+1})`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn reversed(&self) -> LoopPath {
        let mut v = self.vertices.clone();
        v.reverse();
        LoopPath { vertices: v }
    }

    /// Checks that every consecutive pair is an edge of `complex`.
    pub fn validate_on(&self, complex: &Complex) -> Result<()> {
        for (p, q) in self.edges() {
            if p == q || !complex.has(&Simplex::edge(p, q)) {
                return Err(GerbeError::EdgeOutsideRegion(vec![p, q]));
            }
        }
        Ok(())
    }
}

/// Sum of oriented edge values of a real 1-cochain along a loop.
pub fn loop_sum(x: &Cochain<f64>, path: &LoopPath) -> Result<f64> {
    let mut acc = 0.0;
    for (p, q) in path.edges() {
        match x.get(&[p, q]) {
            Some(v) => acc += v,
            None => return Err(GerbeError::EdgeOutsideRegion(vec![p, q])),
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Surface orientation

/// Consistent orientation signs (relative to the canonical sorted order) for
/// the triangles of a surface complex, found by propagation across shared
/// edges.  Fails with `UnorientedDomain` for non-orientable surfaces.
pub fn orient_surface(complex: &Complex) -> Result<Cochain<Sign>> {
    let tris = complex.simplices(2);
    if tris.is_empty() {
        return Err(GerbeError::UnorientedDomain);
    }
    // edge -> triangles containing it
    let mut cotris: HashMap<Simplex, Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for i in 0..3 {
            cotris.entry(tri.face(i)).or_default().push(t);
        }
    }
    if cotris.values().any(|v| v.len() > 2) {
        return Err(GerbeError::UnorientedDomain);
    }
    let mut orient: Vec<Option<Sign>> = vec![None; tris.len()];
    for start in 0..tris.len() {
        if orient[start].is_some() {
            continue;
        }
        orient[start] = Some(Sign::PLUS);
        let mut queue = vec![start];
        while let Some(t) = queue.pop() {
            let ot = orient[t].unwrap();
            for i in 0..3 {
                let e = tris[t].face(i);
                // induced orientation sign of edge e in triangle t: (-1)^i
                let ind_t = if i % 2 == 0 { ot } else { ot * Sign::MINUS };
                for &t2 in &cotris[&e] {
                    if t2 == t {
                        continue;
                    }
                    let j = (0..3).find(|&j| tris[t2].face(j) == e).unwrap();
                    // consistency: induced orientations must be opposite
                    let needed = if j % 2 == 0 { ind_t * Sign::MINUS } else { ind_t };
                    match orient[t2] {
                        None => {
                            orient[t2] = Some(needed);
                            queue.push(t2);
                        }
                        Some(o) if o == needed => {}
                        Some(_) => return Err(GerbeError::UnorientedDomain),
                    }
                }
            }
        }
    }
    let mut oc = Cochain::identity(complex, Region::Whole, 2);
    for (t, tri) in tris.iter().enumerate() {
        oc.set(tri.verts(), orient[t].unwrap());
    }
    Ok(oc)
}

/// Oriented boundary circles of an oriented surface: edges lying in exactly
/// one triangle, directed by the induced boundary orientation and chained
/// into loops.
pub fn oriented_boundary_loops(complex: &Complex, orientation: &Cochain<Sign>) -> Result<Vec<LoopPath>> {
    let tris = complex.simplices(2);
    let mut edge_count: HashMap<Simplex, usize> = HashMap::new();
    for tri in tris {
        for i in 0..3 {
            *edge_count.entry(tri.face(i)).or_default() += 1;
        }
    }
    // directed boundary edges p -> q
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for tri in tris {
        let ot = orientation.get_canonical(tri).ok_or(GerbeError::UnorientedDomain)?;
        let [a, b, c] = [tri.verts()[0], tri.verts()[1], tri.verts()[2]];
        // positively oriented triangle (a,b,c) induces directed edges
        // a->b, b->c, c->a on its boundary
        for (p, q) in [(a, b), (b, c), (c, a)] {
            let e = Simplex::edge(p, q);
            if edge_count[&e] == 1 {
                let (p, q) = if ot.is_minus() { (q, p) } else { (p, q) };
                if next.insert(p, q).is_some() {
                    return Err(GerbeError::UnorientedDomain);
                }
            }
        }
    }
    let mut loops = Vec::new();
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let starts: Vec<usize> = next.keys().copied().collect();
    for start in starts {
        if seen.contains(&start) {
            continue;
        }
        let mut cycle = vec![start];
        let mut cur = start;
        loop {
            let nxt = *next.get(&cur).ok_or(GerbeError::UnorientedDomain)?;
            seen.insert(cur);
            cycle.push(nxt);
            cur = nxt;
            if cur == start {
                break;
            }
        }
        loops.push(LoopPath::new(cycle)?);
    }
    Ok(loops)
}
