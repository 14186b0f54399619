//! Real line bundles with connection, in edge-transport form.
//!
//! A bundle is a pair of 1-cochains: transport signs `σ` (a sign cocycle, so
//! transports glue over triangles) and log transport magnitudes `λ`.  The
//! parallel transport across an oriented edge `p→q` is `σ(e)·exp(λ(e))`, and
//! reversing the edge inverts it.  A metric assigns each vertex frame the
//! squared norm `exp(m(v))`; its compatible connection has
//! `λ_h(p→q) = (m(p) − m(q))/2`, which preserves norms and is flat because
//! it is (half) a coboundary.
//!
//! The holonomy form `θ = λ − λ_h` measures the failure of compatibility; it
//! is invariant under the joint gauge action on bundle and metric, and for a
//! flat connection its class together with the sign class `[σ]` classifies
//! the bundle up to gauge.

use crate::cohomology::{
    require_real_cocycle, require_sign_cocycle, same_class_real, solve_real, solve_sign, RealClass,
    RStarClass, SignClass,
};
use crate::error::{GerbeError, Result};
use crate::simplicial::{coboundary, Cochain, Complex, LoopPath, RStar, Region, Sign, Simplex};

/// A real line bundle with connection in edge-transport form.
#[derive(Clone, Debug)]
pub struct LineBundleConn {
    /// Transport signs per canonical edge; must satisfy `δσ = +1`.
    pub sigma: Cochain<Sign>,
    /// Log transport magnitudes per canonical edge.
    pub lambda: Cochain<f64>,
}

/// A vertex log-metric: the frame at `v` has squared norm `exp(m(v))`.
#[derive(Clone, Debug)]
pub struct Metric0 {
    pub m: Cochain<f64>,
}

impl Metric0 {
    pub fn flat(complex: &Complex) -> Metric0 {
        Metric0 { m: Cochain::identity(complex, Region::Whole, 0) }
    }
}

/// A gauge transformation: a nowhere-zero real function on vertices, stored
/// as sign and log parts.
#[derive(Clone, Debug)]
pub struct Gauge {
    pub g: Cochain<RStar>,
}

impl LineBundleConn {
    /// The trivial bundle with zero connection.
    pub fn trivial(complex: &Complex) -> LineBundleConn {
        LineBundleConn {
            sigma: Cochain::identity(complex, Region::Whole, 1),
            lambda: Cochain::identity(complex, Region::Whole, 1),
        }
    }

    /// Transport across the oriented edge `p→q`.
    pub fn transport(&self, p: usize, q: usize) -> Option<RStar> {
        let s = self.sigma.get(&[p, q])?;
        let l = self.lambda.get(&[p, q])?;
        Some(RStar::new(s, l))
    }
}

/// Triangles where the sign part fails to be a cocycle (`δσ ≠ +1`).
pub fn validate_bundle(complex: &Complex, b: &LineBundleConn) -> Vec<Simplex> {
    let ds = coboundary(complex, &b.sigma);
    ds.iter()
        .filter(|(_, v)| v.is_minus())
        .map(|(s, _)| s.clone())
        .collect()
}

/// Curvature 2-cochain `F = δλ`.
pub fn curvature(complex: &Complex, b: &LineBundleConn) -> Cochain<f64> {
    coboundary(complex, &b.lambda)
}

pub fn is_flat(complex: &Complex, b: &LineBundleConn, tol: f64) -> bool {
    curvature(complex, b).norm_inf() <= tol
}

/// The unique metric-compatible connection for transport signs `σ`:
/// `λ_h(p→q) = (m(p) − m(q))/2`.  Norm-preserving and exactly flat.
pub fn metric_connection(complex: &Complex, sigma: &Cochain<Sign>, h: &Metric0) -> Result<LineBundleConn> {
    let ds = coboundary(complex, sigma);
    if let Some((t, _)) = ds.iter().find(|(_, v)| v.is_minus()) {
        return Err(GerbeError::InvalidSignCocycle(t.verts().to_vec()));
    }
    let lambda = coboundary(complex, &h.m).scale(-0.5);
    Ok(LineBundleConn { sigma: sigma.clone(), lambda })
}

/// Holonomy form `θ(b,h) = λ − λ_h`; defined for non-flat bundles as well.
pub fn holonomy_form(complex: &Complex, b: &LineBundleConn, h: &Metric0) -> Cochain<f64> {
    // λ_h = −δm/2, so θ = λ + δm/2
    b.lambda.combine(&coboundary(complex, &h.m).scale(0.5))
}

/// Holonomy around a loop: the product of edge transports.
pub fn loop_holonomy(b: &LineBundleConn, path: &LoopPath) -> Result<RStar> {
    let mut acc = RStar::ONE;
    for (p, q) in path.edges() {
        let t = b
            .transport(p, q)
            .ok_or_else(|| GerbeError::EdgeOutsideRegion(vec![p, q]))?;
        acc = acc * t;
    }
    Ok(acc)
}

/// The sign (first Stiefel–Whitney) class `[σ]`.
pub fn w1_class(complex: &Complex, b: &LineBundleConn) -> Result<SignClass> {
    require_sign_cocycle(complex, &b.sigma)?;
    Ok(SignClass { rep: b.sigma.clone() })
}

/// The real holonomy class `[θ(b,h)]` of a flat bundle; independent of the
/// metric because changing `h` shifts `θ` by an exact cochain.
pub fn ctilde_class(complex: &Complex, b: &LineBundleConn, h: &Metric0, tol: f64) -> Result<RealClass> {
    let f = curvature(complex, b);
    if let Some((t, v)) = f.iter().find(|(_, v)| v.abs() > tol) {
        return Err(GerbeError::HolonomyClassUndefined(*v, t.verts().to_vec()));
    }
    let theta = holonomy_form(complex, b, h);
    Ok(RealClass { rep: theta, tol })
}

/// Split holonomy class `([σ], [θ])` of a flat bundle.
pub fn holonomy_class(complex: &Complex, b: &LineBundleConn, tol: f64) -> Result<RStarClass> {
    let sign = w1_class(complex, b)?;
    let real = ctilde_class(complex, b, &Metric0::flat(complex), tol)?;
    Ok(RStarClass { sign, real })
}

/// Joint gauge action on a bundle and metric:
/// `t′(p→q) = g(q)·t(e)·g(p)⁻¹`, `m′ = m − 2·log|g|`.  Leaves `θ` fixed.
pub fn gauge_apply(complex: &Complex, g: &Gauge, b: &LineBundleConn, h: &Metric0) -> (LineBundleConn, Metric0) {
    let dsig = coboundary(complex, &g.g.sign_part());
    let dlog = coboundary(complex, &g.g.log_part());
    let b2 = LineBundleConn {
        sigma: b.sigma.combine(&dsig),
        lambda: b.lambda.combine(&dlog),
    };
    let h2 = Metric0 { m: h.m.combine(&g.g.log_part().scale(-2.0)) };
    (b2, h2)
}

/// Finds a gauge carrying the flat bundle `b1` to `b2`, when the two are
/// classified identically; `None` when either the sign classes or the real
/// holonomy classes differ.
pub fn gauge_equivalent(
    complex: &Complex,
    b1: &LineBundleConn,
    b2: &LineBundleConn,
    tol: f64,
) -> Result<Option<Gauge>> {
    for b in [b1, b2] {
        let f = curvature(complex, b);
        if let Some((t, v)) = f.iter().find(|(_, v)| v.abs() > tol) {
            return Err(GerbeError::NotFlat(*v, t.verts().to_vec()));
        };
    }
    let sign_diff = b1.sigma.combine(&b2.sigma.inverse());
    let Some(eps) = solve_sign(complex, &sign_diff)? else {
        return Ok(None);
    };
    let log_diff = b2.lambda.combine(&b1.lambda.inverse());
    let Some(logg) = solve_real(complex, &log_diff, tol)? else {
        return Ok(None);
    };
    let g = Cochain::from_fn(complex, Region::Whole, 0, |s| {
        RStar::new(
            eps.get_canonical(s).unwrap(),
            logg.get_canonical(s).unwrap(),
        )
    });
    Ok(Some(Gauge { g }))
}

/// Builds the flat bundle `(σ, z)` from cocycle data; its classes are
/// `[σ]` and `[z]`.
pub fn connection_from_class(
    complex: &Complex,
    sigma: &Cochain<Sign>,
    z: &Cochain<f64>,
    tol: f64,
) -> Result<LineBundleConn> {
    require_sign_cocycle(complex, sigma)?;
    require_real_cocycle(complex, z, tol)?;
    Ok(LineBundleConn { sigma: sigma.clone(), lambda: z.clone() })
}

/// Metric-independence helper used by tests and the acceptance suite: checks
/// `same_class(θ_h, θ_h')` for a flat bundle under two metrics.
pub fn ctilde_metric_independent(
    complex: &Complex,
    b: &LineBundleConn,
    h1: &Metric0,
    h2: &Metric0,
    tol: f64,
) -> Result<bool> {
    let t1 = ctilde_class(complex, b, h1, tol)?;
    let t2 = ctilde_class(complex, b, h2, tol)?;
    same_class_real(complex, &t1.rep, &t2.rep, tol)
}
