//! Vectorization of raster engineering drawings into graphs of cubic Bezier components,
//! and graph neural network classification of those components as contour, text or
//! dimension.
//!
//! The pipeline runs: binarize, thin, remove spurs, extract traces, split at corners,
//! prune and merge terminals, fit cubics, normalize, featurize, build the component
//! graph, then classify nodes with a GraphSAGE, GCN or MLP model.

pub mod curvefit;
pub mod error;
pub mod graph;
pub mod nn;
pub mod pipeline;
pub mod io;
pub mod raster;
pub mod skeleton;
pub mod svg;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
