//! CAD nut model: mesh construction, feature-edge sampling, depth
//! rasterization and per-pose visibility classification of edge samples.

mod cache;
mod classify;
mod mesh;
mod raster;

pub use cache::{PrerenderCache, CACHE_FORMAT_VERSION};
pub use classify::{classify_edges, ClassifiedPoint, EdgeClass, EdgeModel};
pub use mesh::{
    build_hex_nut, extract_feature_edges, feature_edges, load_obj, sample_feature_edges,
    EdgeSample, EdgeTag, FeatureEdge, NutParams, TriMesh, BORE_SEGMENTS,
};
pub use raster::{render_depth, render_depth_into, DepthImage};

/// Default crease angle above which a shared mesh edge is a feature edge.
pub const DEFAULT_DIHEDRAL_THRESHOLD: f64 = std::f64::consts::PI / 6.0;

/// Default depth slack for the occlusion test, meters.
pub const DEFAULT_SILHOUETTE_EPS: f64 = 0.002;
