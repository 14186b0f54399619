//! Named test complexes and seeded random data generators.
//!
//! All random data is built by applying coboundaries and gauges to valid
//! seeds, so validity holds by construction (never by rejection sampling).

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::{LineBundleConn, Metric0};
use crate::cohomology::solve_real;
use crate::error::{GerbeError, Result};
use crate::simplicial::{
    build_complex, coboundary, orient_surface, oriented_boundary_loops, Cochain, Complex, LoopPath,
    Region, RStar, Sign, Simplex,
};

// ---------------------------------------------------------------------------
// Closed complexes

/// Circle with `n >= 3` vertices and edges.
pub fn circle(n: usize) -> Complex {
    let edges: Vec<Vec<usize>> = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    build_complex(n, &edges).expect("circle is a valid complex")
}

/// The full loop `0, 1, ..., n-1, 0` around `circle(n)`.
pub fn circle_loop(n: usize) -> LoopPath {
    let mut v: Vec<usize> = (0..n).collect();
    v.push(0);
    LoopPath::new(v).expect("circle loop")
}

/// Minimal (7-vertex) triangulation of the torus: faces `{i, i+1, i+3}` and
/// `{i, i+2, i+3}` mod 7.
pub fn torus7() -> Complex {
    let faces: Vec<Vec<usize>> = (0..7)
        .flat_map(|i| [[i, (i + 1) % 7, (i + 3) % 7], [i, (i + 2) % 7, (i + 3) % 7]])
        .map(|f| f.to_vec())
        .collect();
    build_complex(7, &faces).expect("torus7 is a valid complex")
}

/// Klein bottle from a 4x4 grid: columns wrap around directly, rows wrap
/// with a column flip.
pub fn klein16() -> Complex {
    let n = 4usize;
    let v = |i: usize, j: usize| -> usize {
        // identify (n, j) ~ (0, -j) and (i, n) ~ (i, 0)
        let (i, j) = if i == n { (0, (n - j % n) % n) } else { (i, j % n) };
        i * n + j
    };
    let mut faces = Vec::new();
    for i in 0..n {
        for j in 0..n {
            faces.push(vec![v(i, j), v(i + 1, j), v(i, j + 1)]);
            faces.push(vec![v(i + 1, j), v(i, j + 1), v(i + 1, j + 1)]);
        }
    }
    build_complex(n * n, &faces).expect("klein16 is a valid complex")
}

/// 6-vertex triangulation of the projective plane (icosahedron antipodal
/// quotient).
pub fn rp2_6() -> Complex {
    let faces: Vec<Vec<usize>> = vec![
        vec![0, 1, 2],
        vec![0, 2, 3],
        vec![0, 3, 4],
        vec![0, 4, 5],
        vec![0, 1, 5],
        vec![1, 2, 4],
        vec![2, 4, 5],
        vec![2, 3, 5],
        vec![1, 3, 5],
        vec![1, 3, 4],
    ];
    build_complex(6, &faces).expect("rp2_6 is a valid complex")
}

/// 3-torus on a periodic 3x3x3 vertex grid, each unit cube split into six
/// tetrahedra along coordinate-order chains.
pub fn t3_27() -> Complex {
    let n = 3usize;
    let idx = |x: usize, y: usize, z: usize| (x % n) * n * n + (y % n) * n + z % n;
    let mut tets = Vec::new();
    let perms: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for p in perms {
                    let mut c = [x, y, z];
                    let mut tet = vec![idx(c[0], c[1], c[2])];
                    for axis in p {
                        c[axis] += 1;
                        tet.push(idx(c[0], c[1], c[2]));
                    }
                    tets.push(tet);
                }
            }
        }
    }
    build_complex(n * n * n, &tets).expect("t3_27 is a valid complex")
}

/// Real projective 3-space: antipodal quotient of the barycentric
/// subdivision of the boundary of the 4-dimensional cross-polytope.
///
/// Vertices `0..8` of the cross-polytope are `+e_i` for `i` and `-e_i` for
/// `i+4`; its boundary has no simplex containing an antipodal pair, so after
/// one barycentric subdivision the antipodal action is simplicially free and
/// the quotient is a genuine triangulation.
pub fn rp3_40() -> Complex {
    // boundary of the cross-polytope: 16 tetrahedra (one sign choice per axis)
    let mut tets = Vec::new();
    for mask in 0u32..16 {
        let tet: Vec<usize> = (0..4).map(|a| if mask >> a & 1 == 1 { a + 4 } else { a }).collect();
        tets.push(tet);
    }
    let sphere = build_complex(8, &tets).expect("cross-polytope boundary");
    let antipode = |v: usize| (v + 4) % 8;
    // index all simplices of the sphere (subdivision vertices)
    let mut sid: BTreeMap<Simplex, usize> = BTreeMap::new();
    for k in 0..4 {
        for s in sphere.simplices(k) {
            let n = sid.len();
            sid.insert(s.clone(), n);
        }
    }
    // orbit representative of a simplex under the antipodal map
    let rep = |s: &Simplex| -> Simplex {
        let mut anti: Vec<usize> = s.verts().iter().map(|&v| antipode(v)).collect();
        anti.sort_unstable();
        let anti = Simplex::from_sorted(anti);
        if anti < *s { anti } else { s.clone() }
    };
    // re-index orbit representatives densely
    let mut orbit_id: BTreeMap<Simplex, usize> = BTreeMap::new();
    for s in sid.keys() {
        let r = rep(s);
        let n = orbit_id.len();
        orbit_id.entry(r).or_insert(n);
    }
    // maximal chains vertex ⊂ edge ⊂ triangle ⊂ tet, mapped to orbit ids
    let mut chains = Vec::new();
    for tet in sphere.simplices(3) {
        for tri_i in 0..4 {
            let tri = tet.face(tri_i);
            for e_i in 0..3 {
                let e = tri.face(e_i);
                for v_i in 0..2 {
                    let v = e.face(v_i);
                    chains.push(vec![
                        orbit_id[&rep(&v)],
                        orbit_id[&rep(&e)],
                        orbit_id[&rep(&tri)],
                        orbit_id[&rep(tet)],
                    ]);
                }
            }
        }
    }
    build_complex(orbit_id.len(), &chains).expect("rp3 quotient is a valid complex")
}

// ---------------------------------------------------------------------------
// Surfaces with boundary and prisms

/// A surface fixture: the complex plus its oriented boundary circles.
pub struct SurfaceFixture {
    pub complex: Complex,
    pub boundary: Vec<LoopPath>,
    /// Consistent triangle orientations used to direct the boundary.
    pub orientation: Cochain<Sign>,
}

fn surface_fixture(complex: Complex) -> SurfaceFixture {
    let orientation = orient_surface(&complex).expect("fixture surfaces are orientable");
    let boundary = oriented_boundary_loops(&complex, &orientation).expect("boundary extraction");
    SurfaceFixture { complex, boundary, orientation }
}

/// Product cylinder `circle(n) x interval`: vertices `0..n` on the bottom
/// circle and `n..2n` on top.
pub fn cylinder(n: usize) -> SurfaceFixture {
    let mut faces = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push(vec![i, j, n + i]);
        faces.push(vec![j, n + i, n + j]);
    }
    surface_fixture(build_complex(2 * n, &faces).expect("cylinder"))
}

/// Triangulated disk: a fan around center vertex 0 with ring `1..=n`.
pub fn disk(n: usize) -> SurfaceFixture {
    let mut faces = Vec::new();
    for i in 1..=n {
        let j = if i == n { 1 } else { i + 1 };
        faces.push(vec![0, i, j]);
    }
    surface_fixture(build_complex(n + 1, &faces).expect("disk"))
}

/// The full icosahedron boundary (a 2-sphere).
pub fn icosahedron() -> Complex {
    build_complex(12, &icosahedron_faces()).expect("icosahedron")
}

fn icosahedron_faces() -> Vec<Vec<usize>> {
    let mut faces = Vec::new();
    for i in 0..5 {
        let ni = (i + 1) % 5;
        faces.push(vec![0, 1 + i, 1 + ni]);
        faces.push(vec![11, 6 + i, 6 + ni]);
        faces.push(vec![1 + i, 1 + ni, 6 + i]);
        faces.push(vec![1 + ni, 6 + i, 6 + ni]);
    }
    faces
}

/// Pair of pants: the icosahedron sphere with three pairwise vertex-disjoint
/// faces removed, leaving three boundary circles.
pub fn pants() -> SurfaceFixture {
    let removed = [vec![0usize, 1, 2], vec![9usize, 10, 11], vec![3usize, 4, 8]];
    let faces: Vec<Vec<usize>> = icosahedron_faces()
        .into_iter()
        .filter(|f| {
            let mut s = f.clone();
            s.sort_unstable();
            !removed.iter().any(|r| {
                let mut r = r.clone();
                r.sort_unstable();
                r == s
            })
        })
        .collect();
    surface_fixture(build_complex(12, &faces).expect("pants"))
}

/// Prism over a surface complex: vertices `v` (bottom) and `v + n` (top),
/// each triangle `a<b<c` split into the three staircase tetrahedra.  The
/// splitting depends only on vertex order, so adjacent prisms share faces.
pub fn prism_over(surface: &Complex) -> Complex {
    let n = surface.vertex_count();
    let mut tets = Vec::new();
    for t in surface.simplices(2) {
        let [a, b, c] = [t.verts()[0], t.verts()[1], t.verts()[2]];
        tets.push(vec![a, b, c, c + n]);
        tets.push(vec![a, b, b + n, c + n]);
        tets.push(vec![a, a + n, b + n, c + n]);
    }
    build_complex(2 * n, &tets).expect("prism")
}

// ---------------------------------------------------------------------------
// Random data

/// Deterministic generator for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sign(rng: &mut ChaCha8Rng) -> Sign {
    if rng.gen::<bool>() { Sign::PLUS } else { Sign::MINUS }
}

/// Random vertex log-metric with entries in `(-2, 2)`.
pub fn random_metric(complex: &Complex, rng: &mut ChaCha8Rng) -> Metric0 {
    Metric0 { m: Cochain::from_fn(complex, Region::Whole, 0, |_| rng.gen_range(-2.0..2.0)) }
}

/// Random gauge: signs and logs per vertex.
pub fn random_gauge(complex: &Complex, rng: &mut ChaCha8Rng) -> crate::bundle::Gauge {
    crate::bundle::Gauge {
        g: Cochain::from_fn(complex, Region::Whole, 0, |_| {
            RStar::new(random_sign(rng), rng.gen_range(-1.0..1.0))
        }),
    }
}

/// Random sign cocycle: the coboundary of a random vertex sign function.
pub fn random_sign_cocycle(complex: &Complex, rng: &mut ChaCha8Rng) -> Cochain<Sign> {
    let seed: Cochain<Sign> = Cochain::from_fn(complex, Region::Whole, 0, |_| random_sign(rng));
    coboundary(complex, &seed)
}

/// Random bundle with arbitrary (generally non-flat) connection.
pub fn random_bundle(complex: &Complex, rng: &mut ChaCha8Rng) -> LineBundleConn {
    LineBundleConn {
        sigma: random_sign_cocycle(complex, rng),
        lambda: Cochain::from_fn(complex, Region::Whole, 1, |_| rng.gen_range(-1.5..1.5)),
    }
}

/// Random closed real `k`-cochain: a random cochain with its curvature
/// projected away by a coboundary solve.  Generically its class is nonzero
/// whenever `H^k` is.
pub fn random_closed(complex: &Complex, k: usize, rng: &mut ChaCha8Rng) -> Result<Cochain<f64>> {
    let raw: Cochain<f64> = Cochain::from_fn(complex, Region::Whole, k, |_| rng.gen_range(-1.0..1.0));
    if k == 3 || complex.count(k + 1) == 0 {
        return Ok(raw);
    }
    let curv = coboundary(complex, &raw);
    let fix = solve_real(complex, &curv, crate::DEFAULT_TOL)?
        .ok_or_else(|| GerbeError::InvalidData("curvature of a cochain must be exact".into()))?;
    Ok(raw.combine(&fix.inverse()))
}

/// Random flat bundle: coboundary sign part, closed log part.
pub fn random_flat_bundle(complex: &Complex, rng: &mut ChaCha8Rng) -> Result<LineBundleConn> {
    Ok(LineBundleConn {
        sigma: random_sign_cocycle(complex, rng),
        lambda: random_closed(complex, 1, rng)?,
    })
}

// ---------------------------------------------------------------------------
// Random gerbe data

use crate::gerbe::{Gerbe, GerbeConnection, GerbeMetric, ObjectBundle, ObjectConnection, OverlapFunctions};

/// Random trivial-class gerbe: `s = δc` for a random `R*` 1-cochain `c`.
/// The sign part of `δs` is exactly `+1`; the log part cancels to roundoff.
pub fn random_coboundary_gerbe(complex: &Complex, rng: &mut ChaCha8Rng) -> Gerbe {
    let c: Cochain<RStar> = Cochain::from_fn(complex, Region::Whole, 1, |_| {
        RStar::new(random_sign(rng), rng.gen_range(-1.0..1.0))
    });
    Gerbe { s: coboundary(complex, &c) }
}

/// Coboundary gerbe twisted by prescribed sign/log 2-cocycles, giving
/// control over the gerbe class and the log holonomy contribution.
pub fn random_twisted_gerbe(
    complex: &Complex,
    rng: &mut ChaCha8Rng,
    sign_twist: Option<&Cochain<Sign>>,
    log_twist: Option<&Cochain<f64>>,
) -> Gerbe {
    let base = random_coboundary_gerbe(complex, rng);
    let s = Cochain::from_fn(complex, Region::Whole, 2, |t| {
        let v = base.s.get_canonical(t).unwrap();
        let sgn = sign_twist.and_then(|w| w.get_canonical(t)).unwrap_or(Sign::PLUS);
        let lg = log_twist.and_then(|z| z.get_canonical(t)).unwrap_or(0.0);
        RStar::new(v.sign * sgn, v.log + lg)
    });
    Gerbe { s }
}

/// Random flat gerbe connection of coboundary type:
/// `λ_ij = δ⁰(f_i − f_j)` on each edge star, for random global vertex
/// functions `f_i`.  Covariant constancy and flatness hold by construction.
pub fn random_flat_gerbe_connection(complex: &Complex, rng: &mut ChaCha8Rng) -> GerbeConnection {
    let diffs: BTreeMap<usize, Cochain<f64>> = complex
        .simplices(0)
        .iter()
        .map(|vx| {
            let f: Cochain<f64> = Cochain::from_fn(complex, Region::Whole, 0, |_| rng.gen_range(-1.0..1.0));
            (vx.verts()[0], coboundary(complex, &f))
        })
        .collect();
    connection_from_chart_forms(complex, &diffs)
}

/// Random (generally curved) gerbe connection: `λ_ij = a_i − a_j` for
/// random global 1-cochains `a_i`.
pub fn random_gerbe_connection(complex: &Complex, rng: &mut ChaCha8Rng) -> GerbeConnection {
    let forms: BTreeMap<usize, Cochain<f64>> = complex
        .simplices(0)
        .iter()
        .map(|vx| {
            let a: Cochain<f64> = Cochain::from_fn(complex, Region::Whole, 1, |_| rng.gen_range(-1.0..1.0));
            (vx.verts()[0], a)
        })
        .collect();
    connection_from_chart_forms(complex, &forms)
}

fn connection_from_chart_forms(complex: &Complex, forms: &BTreeMap<usize, Cochain<f64>>) -> GerbeConnection {
    let lambda = complex
        .simplices(1)
        .iter()
        .map(|e| {
            let (i, j) = (e.verts()[0], e.verts()[1]);
            let c = Cochain::from_fn(complex, Region::Star(e.clone()), 1, |ed| {
                forms[&i].get_canonical(ed).unwrap() - forms[&j].get_canonical(ed).unwrap()
            });
            (e.clone(), c)
        })
        .collect();
    GerbeConnection { lambda }
}

/// Random gerbe metric: the canonical metric `−2·log|s_ij·|` perturbed by
/// chart differences `p_i − p_j`, preserving the norm-1 condition exactly.
pub fn random_gerbe_metric(complex: &Complex, g: &Gerbe, rng: &mut ChaCha8Rng) -> GerbeMetric {
    let p: BTreeMap<usize, Cochain<f64>> = complex
        .simplices(0)
        .iter()
        .map(|vx| {
            let f: Cochain<f64> = Cochain::from_fn(complex, Region::Whole, 0, |_| rng.gen_range(-1.0..1.0));
            (vx.verts()[0], f)
        })
        .collect();
    let m = complex
        .simplices(1)
        .iter()
        .map(|e| {
            let (i, j) = (e.verts()[0], e.verts()[1]);
            let c = Cochain::from_fn(complex, Region::Star(e.clone()), 0, |vx| {
                let v = vx.verts()[0];
                let slog = g.s_at(i, j, v).map(|r| r.log).unwrap_or(0.0);
                -2.0 * slog + p[&i].get(&[v]).unwrap() - p[&j].get(&[v]).unwrap()
            });
            (e.clone(), c)
        })
        .collect();
    GerbeMetric { m }
}

/// Twists an object by a sign 1-cocycle `w`, a closed global 1-cochain `z`
/// and per-chart vertex functions `ρ_i`:
/// `ε' = ε·w`, `u'_ij = u_ij + (ρ_i − ρ_j)`, `α'_i = α_i + z − δ⁰ρ_i`.
/// Every object constraint is preserved, and the difference bundle of the
/// twisted object against the original is gauge-equivalent to `(w, z)`.
pub fn twist_object(
    complex: &Complex,
    obj: &ObjectBundle,
    oc: &ObjectConnection,
    w: &Cochain<Sign>,
    z: &Cochain<f64>,
    rho: &BTreeMap<usize, Cochain<f64>>,
) -> (ObjectBundle, ObjectConnection) {
    let eps = obj.eps.combine(w);
    let u: OverlapFunctions = obj
        .u
        .iter()
        .map(|(e, c)| {
            let (i, j) = (e.verts()[0], e.verts()[1]);
            let shifted = Cochain::from_fn(complex, c.region().clone(), 0, |vx| {
                c.get_canonical(vx).unwrap() + rho[&i].get_canonical(vx).unwrap()
                    - rho[&j].get_canonical(vx).unwrap()
            });
            (e.clone(), shifted)
        })
        .collect();
    let alpha: BTreeMap<usize, Cochain<f64>> = oc
        .alpha
        .iter()
        .map(|(&i, a)| {
            let drho = coboundary(complex, &rho[&i]);
            let shifted = Cochain::from_fn(complex, a.region().clone(), 1, |ed| {
                a.get_canonical(ed).unwrap() + z.get_canonical(ed).unwrap()
                    - drho.get_canonical(ed).unwrap()
            });
            (i, shifted)
        })
        .collect();
    (ObjectBundle { eps, u }, ObjectConnection { alpha })
}

// ---------------------------------------------------------------------------
// Named lookup (CLI `generate`)

/// Complex fixtures by name; surface fixtures also report boundary loops.
pub fn by_name(name: &str, size: Option<usize>) -> Result<(Complex, Vec<LoopPath>)> {
    match name {
        "circle" => {
            let n = size.unwrap_or(3).max(3);
            Ok((circle(n), vec![circle_loop(n)]))
        }
        "torus" => Ok((torus7(), Vec::new())),
        "klein" => Ok((klein16(), Vec::new())),
        "rp2" => Ok((rp2_6(), Vec::new())),
        "t3" => Ok((t3_27(), Vec::new())),
        "rp3" => Ok((rp3_40(), Vec::new())),
        "cylinder" => {
            let f = cylinder(size.unwrap_or(4).max(3));
            Ok((f.complex, f.boundary))
        }
        "disk" => {
            let f = disk(size.unwrap_or(5).max(3));
            Ok((f.complex, f.boundary))
        }
        "pants" => {
            let f = pants();
            Ok((f.complex, f.boundary))
        }
        "sphere" => Ok((icosahedron(), Vec::new())),
        "prism-cylinder" => {
            let f = cylinder(size.unwrap_or(4).max(3));
            Ok((prism_over(&f.complex), Vec::new()))
        }
        "prism-pants" => Ok((prism_over(&pants().complex), Vec::new())),
        other => Err(GerbeError::UnknownFixture(other.to_string())),
    }
}
