//! End-to-end vectorization of one drawing raster into a component graph.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::curvefit::{fit_cubic_bezier, CubicBezier};
use crate::error::{Error, Result};
use crate::graph::{
    build_graph, label_from_ground_truth, normalize_components, ClassScheme, ComponentGraph, Provenance,
    DEFAULT_SAMPLES,
};
use crate::raster::{binarize, BinaryRaster, ColorRaster, GrayRaster, DEFAULT_THRESHOLD};
use crate::skeleton::{remove_spurs, skeletonize, ThinningMethod, DEFAULT_MAX_SPUR_LEN};
use crate::trace::{
    extract_traces, prune_and_merge, split_at_corners, Trace, VertexSet, DEFAULT_MERGE_RADIUS,
    DEFAULT_SPIKE_THRESHOLD,
};

/// Parameters of every vectorization stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizeConfig {
    pub threshold: u16,
    pub method: ThinningMethod,
    pub max_spur_len: usize,
    pub spike_threshold: f64,
    pub merge_radius: f64,
    pub n: usize,
}

impl Default for VectorizeConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            method: ThinningMethod::default(),
            max_spur_len: DEFAULT_MAX_SPUR_LEN,
            spike_threshold: DEFAULT_SPIKE_THRESHOLD,
            merge_radius: DEFAULT_MERGE_RADIUS,
            n: DEFAULT_SAMPLES,
        }
    }
}

impl VectorizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::Config(format!("n must be at least 4, got {}", self.n)));
        }
        if self.threshold > 256 {
            return Err(Error::Config(format!("threshold {} exceeds 256", self.threshold)));
        }
        if !(self.spike_threshold >= 0.0) || !(self.merge_radius >= 0.0) {
            return Err(Error::Config("spike_threshold and merge_radius must be non-negative".into()));
        }
        Ok(())
    }

    fn as_params(&self) -> BTreeMap<String, serde_json::Value> {
        match serde_json::to_value(self).expect("config serializes") {
            serde_json::Value::Object(m) => m.into_iter().collect(),
            _ => unreachable!(),
        }
    }
}

/// Every intermediate product of one vectorization run.
#[derive(Debug, Clone)]
pub struct Vectorization {
    pub mask: BinaryRaster,
    pub skeleton: BinaryRaster,
    /// Traces that survived pruning, one per component.
    pub traces: Vec<Trace>,
    pub vertices: VertexSet,
    /// Fitted curves in raster pixel coordinates, parallel to `traces`.
    pub curves: Vec<CubicBezier>,
    pub graph: ComponentGraph,
}

/// Traces the skeleton, splits them at corners and drops the tiny ones.
pub fn trace_skeleton(skeleton: &BinaryRaster, cfg: &VectorizeConfig) -> (Vec<Trace>, VertexSet) {
    let split: Vec<Trace> = extract_traces(skeleton)
        .iter()
        .flat_map(|t| split_at_corners(t, cfg.spike_threshold))
        .collect();
    prune_and_merge(&split, cfg.merge_radius)
}

/// Runs the full pipeline on a grayscale drawing.
pub fn vectorize(img: &GrayRaster, cfg: &VectorizeConfig) -> Result<Vectorization> {
    cfg.validate()?;
    let mask = binarize(img, cfg.threshold);
    let skeleton = remove_spurs(&skeletonize(&mask, cfg.method), cfg.max_spur_len);
    let (traces, vertices) = trace_skeleton(&skeleton, cfg);
    let curves: Vec<CubicBezier> = traces
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut c = fit_cubic_bezier(t);
            c.source_trace = i;
            c.vertex_ids = vertices.trace_ends[i];
            c
        })
        .collect();
    let (normalized, norm) = normalize_components(&curves)?;
    let mut graph = build_graph(&normalized, &vertices, cfg.n);
    graph.provenance = Provenance {
        source_size: Some([img.width(), img.height()]),
        normalization: Some(norm),
        params: cfg.as_params(),
        ..Provenance::default()
    };
    Ok(Vectorization {
        mask,
        skeleton,
        traces,
        vertices,
        curves,
        graph,
    })
}

/// Labels a vectorized graph from a ground-truth color raster of the same drawing.
pub fn label_graph(g: &ComponentGraph, gt: &ColorRaster, scheme: ClassScheme) -> Result<ComponentGraph> {
    let norm = g
        .provenance
        .normalization
        .ok_or_else(|| Error::MalformedGraph("graph has no normalization to map back to pixels".into()))?;
    label_from_ground_truth(g, gt, scheme, |p| norm.invert(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::feature_dim;

    fn plus_sign() -> GrayRaster {
        let mut img = GrayRaster::filled(40, 40, 255).unwrap();
        for i in 5..35 {
            for k in 19..22 {
                img.set(i, k, 0);
                img.set(k, i, 0);
            }
        }
        img
    }

    #[test]
    fn plus_sign_becomes_four_connected_arms() {
        let v = vectorize(&plus_sign(), &VectorizeConfig::default()).unwrap();
        assert_eq!(v.graph.node_count(), 4);
        assert_eq!(v.graph.edges.len(), 6);
        assert!(v.graph.nodes.iter().all(|n| n.features.len() == feature_dim(4)));
        assert_eq!(v.graph.provenance.source_size, Some([40, 40]));
        assert_eq!(v.graph.provenance.params["n"], serde_json::json!(4));
    }

    #[test]
    fn blank_page_is_degenerate() {
        let img = GrayRaster::filled(10, 10, 255).unwrap();
        assert!(matches!(
            vectorize(&img, &VectorizeConfig::default()),
            Err(Error::DegenerateDrawing)
        ));
    }

    #[test]
    fn config_rejects_small_n_and_unknown_keys() {
        let cfg = VectorizeConfig {
            n: 3,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(serde_json::from_str::<VectorizeConfig>(r#"{"bogus": 1}"#).is_err());
        let parsed: VectorizeConfig = serde_json::from_str(r#"{"method": "zhang-suen", "n": 6}"#).unwrap();
        assert_eq!(parsed.n, 6);
    }
}
