//! Flat surfaces with cone points built by doubling polygons, their geodesic
//! flow and periodic cylinders, and finite element experiments on the
//! concentration of Laplace eigenfunctions near polygon vertices.

pub mod bz;
pub mod cylinder;
pub mod develop;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod flow;
pub mod geom;
pub mod mesh;
pub mod neighborhood;
pub mod polygon;
pub mod scalar;
pub mod spectral;
pub mod surface;
pub mod triangulate;

pub use bz::{bz_estimate_check, estimate_ratio, ConstantEstimate, Grid, ResonancePolicy};
pub use cylinder::{
    check_cc, enumerate_maximal_cylinders, enumerate_saddle_connections, extend_strip, pairwise_angle_bound, BoundCheck,
    CCReport, Cylinder, SaddleConnection, Strip,
};
pub use eigen::{solve_eigs, EigenPair};
pub use error::{Error, Result};
pub use fem::BoundaryCondition;
pub use flow::{billiard_trace, min_distance_to_p, trace, PhasePoint, Termination, Trajectory};
pub use geom::{Isometry, Vec2};
pub use mesh::{mesh_polygon, Marker, Mesh};
pub use neighborhood::{cone_neighborhood, surface_distance_to_p, ConeNeighborhood};
pub use polygon::{validate_polygon, Polygon, ValidationReport, VertexRef};
pub use scalar::{Exact, Scalar, TAU_LEN};
pub use spectral::{control_constant, mass_ratio, ControlReport, Neighborhood};
pub use surface::{double, double_f64, ConePoint, FlatSurface};
