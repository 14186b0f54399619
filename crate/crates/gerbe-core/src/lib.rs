//! Real line bundles and real gerbes on finite simplicial complexes.
//!
//! The library works on a fixed discrete model: a finite simplicial complex of
//! dimension at most 3, covered by the closed stars of its vertices.  Edge and
//! triangle stars play the role of double and triple overlaps of the cover.
//! On this substrate it provides
//!
//! * cochains with `R*`-type coefficients (signs, log-magnitudes, or both),
//!   coboundaries, pullbacks and loop sums ([`simplicial`]);
//! * exact GF(2) and tolerance-based real linear algebra for coboundary
//!   equations, Betti numbers and class comparison ([`cohomology`]);
//! * real line bundles with connection in edge-transport form: metrics,
//!   compatible flat connections, holonomy forms and the sign/log splitting of
//!   the holonomy class ([`bundle`]);
//! * real gerbes: triangle cocycle data, overlap connections and metrics,
//!   adaptations, the holonomy 2-form, surface holonomy and the full object
//!   (trivialization) calculus ([`gerbe`]);
//! * the loop-space and map-space layer: pullbacks to circles, cylinders,
//!   surfaces and prisms, fiber torsors, cylinder transport and the canonical
//!   map-space trivialization checks ([`transgression`]);
//! * named test fixtures and seeded random data generators ([`fixtures`]),
//!   JSON file formats ([`io`]) and run reports ([`report`]).

pub mod bundle;
pub mod cohomology;
pub mod error;
pub mod fixtures;
pub mod gerbe;
pub mod io;
pub mod report;
pub mod simplicial;
pub mod transgression;

pub use error::GerbeError;
pub use simplicial::{Complex, Cochain, LoopPath, Sign, Simplex, SimplicialMap, StarRegion};

/// Default tolerance for real-coefficient rank and residual decisions.
pub const DEFAULT_TOL: f64 = 1e-9;
