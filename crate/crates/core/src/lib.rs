//! Source unfoldings of convex polyhedra with respect to a closed curve on
//! the surface.
//!
//! The pipeline splits the surface along the curve, fits the cone each half
//! lives on, computes the cut locus of each half by wavefront propagation, and
//! lays the pieces out in the plane.

pub mod fixtures;
pub mod geom;
pub mod io;
pub mod surface;
pub mod svg;
pub mod curve;
pub mod cone;
pub mod cutlocus;
pub mod unfold;
pub mod verify;
