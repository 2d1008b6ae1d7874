//! Discrete geometry of the two hypersurface families: closed planar curves
//! and axially symmetric profiles over the `z`-axis.

mod curvature;
mod graph;
mod model;
mod operators;
mod state;

pub use curvature::{curvature_data, shrinker_quantity, NodeCurvature, PhiField};
pub use graph::{graph_over_model, GraphFunction, GraphNorms};
pub use model::{ModelKind, ShrinkerModel, SHRINKER_RADIUS};
pub use operators::{apply_drift_laplacian, laplacian, DriftLaplacian};
pub use state::{make_model_surface, Geometry, SurfaceState, MIN_CURVE_NODES};

pub(crate) use curvature::shrinker_quantity_with;
pub(crate) use graph::lagrange4;
pub(crate) use operators::apply_with;
pub(crate) use state::profile_slope;
