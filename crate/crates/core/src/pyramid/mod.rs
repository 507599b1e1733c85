//! Multi-scale image decompositions.

mod laplacian;
mod steerable;

pub use laplacian::{expand, laplacian_build, laplacian_collapse, reduce, LaplacianPyramid};
pub use steerable::{
    amplitude_of, csp_build, csp_collapse, csp_filters, default_depth, phase_of, ComplexBand, PyramidParams,
    SteerableFilters, SteerablePyramid,
};
