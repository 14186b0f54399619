//! JSON file formats for complexes, maps, loops, bundles, and gerbes.
//!
//! All maps use canonical sorted-simplex string keys (`"p,q"`, `"i,j,k"`) so
//! that serialized output is deterministic and diffs are stable.  Stored
//! values are always for the canonical (ascending) vertex order; antisymmetry
//! is reconstructed by the cochain accessors.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundle::{LineBundleConn, Metric0};
use crate::error::{GerbeError, Result};
use crate::fixtures::SurfaceFixture;
use crate::gerbe::{Gerbe, GerbeConnection, GerbeMetric};
use crate::simplicial::{
    build_complex, orient_surface, oriented_boundary_loops, Cochain, Complex, LoopPath, RStar,
    Region, Sign, Simplex, SimplicialMap,
};

// ---------------------------------------------------------------------------
// File schemas

#[derive(Serialize, Deserialize)]
pub struct ComplexFile {
    pub vertices: usize,
    pub maximal_simplices: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_loops: Option<Vec<Vec<usize>>>,
}

#[derive(Serialize, Deserialize)]
pub struct MapFile {
    /// Path of the domain complex file, relative to this file.
    pub domain: String,
    /// Path of the codomain complex file, relative to this file.
    pub codomain: String,
    pub vertex_map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
pub struct LoopFile {
    pub vertices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
pub struct BundleFile {
    /// Transport sign per canonical edge `"p,q"` (p < q), value for p→q.
    pub sign: BTreeMap<String, i64>,
    /// Log transport magnitude per canonical edge, value for p→q.
    pub log: BTreeMap<String, f64>,
    /// Vertex log-metric `"v"`; optional.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<BTreeMap<String, f64>>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
pub struct RStarFile {
    pub sign: i64,
    pub log: f64,
}

#[derive(Serialize, Deserialize)]
pub struct GerbeFile {
    /// Transition constant per canonical triangle `"i,j,k"`.
    pub s: BTreeMap<String, RStarFile>,
    /// Overlap connection forms: per canonical edge `"i,j"`, the chart form
    /// on the edges `"p,q"` of its closed star.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conn: Option<BTreeMap<String, BTreeMap<String, f64>>>,
    /// Overlap metric functions: per canonical edge `"i,j"`, values on the
    /// vertices `"v"` of its closed star.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<BTreeMap<String, BTreeMap<String, f64>>>,
}

// ---------------------------------------------------------------------------
// Key helpers

fn key(verts: &[usize]) -> String {
    verts.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_key(k: &str, arity: usize) -> Result<Vec<usize>> {
    let parts: Vec<usize> = k
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| GerbeError::ParseError(format!("bad simplex key `{k}`")))?;
    if parts.len() != arity {
        return Err(GerbeError::ParseError(format!(
            "key `{k}` has {} indices, expected {arity}",
            parts.len()
        )));
    }
    if parts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GerbeError::ParseError(format!(
            "key `{k}` is not in strictly ascending canonical order"
        )));
    }
    Ok(parts)
}

fn parse_sign(v: i64, ctx: &str) -> Result<Sign> {
    Sign::new(v).map_err(|_| GerbeError::ParseError(format!("sign for {ctx} must be ±1, got {v}")))
}

// ---------------------------------------------------------------------------
// Complexes, maps, loops

/// The maximal simplices of a complex: those that are faces of nothing bigger.
pub fn maximal_simplices(c: &Complex) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in 0..4 {
        for s in c.simplices(k) {
            let covered = k + 1 < 4
                && c.simplices(k + 1).iter().any(|bigger| {
                    s.verts().iter().all(|v| bigger.verts().contains(v))
                });
            if !covered {
                out.push(s.verts().to_vec());
            }
        }
    }
    out.sort();
    out
}

pub fn complex_to_file(c: &Complex, boundary: Option<&[LoopPath]>) -> ComplexFile {
    ComplexFile {
        vertices: c.vertex_count(),
        maximal_simplices: maximal_simplices(c),
        boundary_loops: boundary.map(|ls| ls.iter().map(|l| l.vertices().to_vec()).collect()),
    }
}

pub fn complex_from_file(f: &ComplexFile) -> Result<Complex> {
    let c = build_complex(f.vertices, &f.maximal_simplices)?;
    if let Some(loops) = &f.boundary_loops {
        for l in loops {
            LoopPath::new(l.clone())?.validate_on(&c)?;
        }
    }
    Ok(c)
}

/// Rebuilds a surface fixture from a complex file carrying boundary loops;
/// the triangle orientation is recomputed and the stored loops are checked
/// against the complex (their traversal direction is taken as given).
pub fn surface_from_file(f: &ComplexFile) -> Result<SurfaceFixture> {
    let complex = complex_from_file(f)?;
    let orientation = orient_surface(&complex)?;
    let boundary = match &f.boundary_loops {
        Some(loops) => {
            let mut out = Vec::with_capacity(loops.len());
            for l in loops {
                let lp = LoopPath::new(l.clone())?;
                lp.validate_on(&complex)?;
                out.push(lp);
            }
            out
        }
        None => oriented_boundary_loops(&complex, &orientation)?,
    };
    Ok(SurfaceFixture { complex, boundary, orientation })
}

pub fn loop_from_file(f: &LoopFile) -> Result<LoopPath> {
    LoopPath::new(f.vertices.clone())
}

pub fn loop_to_file(l: &LoopPath) -> LoopFile {
    LoopFile { vertices: l.vertices().to_vec() }
}

/// Loads a map file and the two complex files it references (paths resolved
/// relative to the map file's own directory).
pub fn load_map(path: &Path) -> Result<SimplicialMap> {
    let mf: MapFile = read_json(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let dom: ComplexFile = read_json(&base.join(&mf.domain))?;
    let cod: ComplexFile = read_json(&base.join(&mf.codomain))?;
    let domain = Arc::new(complex_from_file(&dom)?);
    let codomain = Arc::new(complex_from_file(&cod)?);
    SimplicialMap::new(domain, codomain, mf.vertex_map)
}

// ---------------------------------------------------------------------------
// Bundles

pub fn bundle_to_file(c: &Complex, b: &LineBundleConn, h: Option<&Metric0>) -> BundleFile {
    let mut sign = BTreeMap::new();
    let mut log = BTreeMap::new();
    for e in c.simplices(1) {
        let k = key(e.verts());
        sign.insert(k.clone(), b.sigma.get_canonical(e).unwrap().val() as i64);
        log.insert(k, b.lambda.get_canonical(e).unwrap());
    }
    let metric = h.map(|h| {
        c.simplices(0)
            .iter()
            .map(|v| (key(v.verts()), h.m.get_canonical(v).unwrap()))
            .collect()
    });
    BundleFile { sign, log, metric }
}

pub fn bundle_from_file(c: &Complex, f: &BundleFile) -> Result<(LineBundleConn, Option<Metric0>)> {
    let mut sigma = Cochain::identity(c, Region::Whole, 1);
    let mut lambda = Cochain::identity(c, Region::Whole, 1);
    for (k, &v) in &f.sign {
        let verts = parse_key(k, 2)?;
        require_simplex(c, &verts)?;
        sigma.set(&verts, parse_sign(v, k)?);
    }
    for (k, &v) in &f.log {
        let verts = parse_key(k, 2)?;
        require_simplex(c, &verts)?;
        lambda.set(&verts, v);
    }
    let metric = match &f.metric {
        None => None,
        Some(m) => {
            let mut mm = Cochain::identity(c, Region::Whole, 0);
            for (k, &v) in m {
                let verts = parse_key(k, 1)?;
                require_simplex(c, &verts)?;
                mm.set(&verts, v);
            }
            Some(Metric0 { m: mm })
        }
    };
    Ok((LineBundleConn { sigma, lambda }, metric))
}

fn require_simplex(c: &Complex, verts: &[usize]) -> Result<()> {
    if c.has(&Simplex::from_sorted(verts.to_vec())) {
        Ok(())
    } else {
        Err(GerbeError::ReferenceError(format!(
            "{verts:?} is not a simplex of the complex"
        )))
    }
}

// ---------------------------------------------------------------------------
// Gerbes

pub fn gerbe_to_file(
    c: &Complex,
    g: &Gerbe,
    conn: Option<&GerbeConnection>,
    h: Option<&GerbeMetric>,
) -> GerbeFile {
    let mut s = BTreeMap::new();
    for t in c.simplices(2) {
        let v = g.s.get_canonical(t).unwrap();
        s.insert(key(t.verts()), RStarFile { sign: v.sign.val() as i64, log: v.log });
    }
    let conn = conn.map(|conn| {
        conn.lambda
            .iter()
            .map(|(e, lam)| {
                let inner = star_simplices(c, e, 1)
                    .iter()
                    .map(|ed| (key(ed.verts()), lam.get_canonical(ed).unwrap()))
                    .collect();
                (key(e.verts()), inner)
            })
            .collect()
    });
    let metric = h.map(|h| {
        h.m.iter()
            .map(|(e, m)| {
                let inner = star_simplices(c, e, 0)
                    .iter()
                    .map(|v| (key(v.verts()), m.get_canonical(v).unwrap()))
                    .collect();
                (key(e.verts()), inner)
            })
            .collect()
    });
    GerbeFile { s, conn, metric }
}

fn star_simplices(c: &Complex, e: &Simplex, k: usize) -> Vec<Simplex> {
    let star = c.closed_star(e).expect("stored overlap is a simplex");
    star.simplices(k).cloned().collect()
}

pub fn gerbe_from_file(
    c: &Complex,
    f: &GerbeFile,
) -> Result<(Gerbe, Option<GerbeConnection>, Option<GerbeMetric>)> {
    let mut s = Cochain::identity(c, Region::Whole, 2);
    for (k, v) in &f.s {
        let verts = parse_key(k, 3)?;
        require_simplex(c, &verts)?;
        s.set(&verts, RStar::new(parse_sign(v.sign, k)?, v.log));
    }
    let gerbe = Gerbe { s };

    let conn = match &f.conn {
        None => None,
        Some(conn) => {
            let mut lambda = BTreeMap::new();
            for (ek, inner) in conn {
                let everts = parse_key(ek, 2)?;
                require_simplex(c, &everts)?;
                let e = Simplex::from_sorted(everts);
                let mut lam = Cochain::identity(c, Region::Star(e.clone()), 1);
                for (k, &v) in inner {
                    let verts = parse_key(k, 2)?;
                    require_simplex(c, &verts)?;
                    lam.set(&verts, v);
                }
                lambda.insert(e, lam);
            }
            // overlaps not listed carry the zero form
            for e in c.simplices(1) {
                lambda
                    .entry(e.clone())
                    .or_insert_with(|| Cochain::identity(c, Region::Star(e.clone()), 1));
            }
            Some(GerbeConnection { lambda })
        }
    };

    let metric = match &f.metric {
        None => None,
        Some(metric) => {
            let mut m = BTreeMap::new();
            for (ek, inner) in metric {
                let everts = parse_key(ek, 2)?;
                require_simplex(c, &everts)?;
                let e = Simplex::from_sorted(everts);
                let mut mc = Cochain::identity(c, Region::Star(e.clone()), 0);
                for (k, &v) in inner {
                    let verts = parse_key(k, 1)?;
                    require_simplex(c, &verts)?;
                    mc.set(&verts, v);
                }
                m.insert(e, mc);
            }
            for e in c.simplices(1) {
                m.entry(e.clone())
                    .or_insert_with(|| Cochain::identity(c, Region::Star(e.clone()), 0));
            }
            Some(GerbeMetric { m })
        }
    };

    Ok((gerbe, conn, metric))
}

// ---------------------------------------------------------------------------
// File round trips

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GerbeError::ParseError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| GerbeError::ParseError(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| GerbeError::ParseError(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| GerbeError::ParseError(format!("{}: {e}", path.display())))
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
