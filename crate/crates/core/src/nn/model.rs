use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ComponentGraph;

use super::adam::AdamState;
use super::layers::{layer_backward, layer_forward, GraphStructure, LayerCache, LayerOp, LayerParams};
use super::matrix::DenseMatrix;

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// GraphSAGE with mean aggregation.
    Gs,
    Gcn,
    Mlp,
}

/// Layer widths of a model. `linear_widths` lists hidden linear layers only; a final
/// linear layer to `num_classes` is always appended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub conv_widths: Vec<usize>,
    pub linear_widths: Vec<usize>,
    pub in_dim: usize,
    pub num_classes: usize,
}

/// Named architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Gs3,
    Gs4,
    Gs5,
    Gcn,
    Mlp,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Gs3, Preset::Gs4, Preset::Gs5, Preset::Gcn, Preset::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Gs3 => "gs3",
            Preset::Gs4 => "gs4",
            Preset::Gs5 => "gs5",
            Preset::Gcn => "gcn",
            Preset::Mlp => "mlp",
        }
    }

    pub fn config(self, in_dim: usize, num_classes: usize) -> ModelConfig {
        let (kind, conv, lin): (_, &[usize], &[usize]) = match self {
            Preset::Gs3 => (ModelKind::Gs, &[32, 64, 128], &[32]),
            Preset::Gs4 => (ModelKind::Gs, &[32, 64, 128, 256], &[128, 32]),
            Preset::Gs5 => (ModelKind::Gs, &[32, 64, 128, 256, 512], &[256, 128, 32]),
            Preset::Gcn => (ModelKind::Gcn, &[32, 64, 128], &[32]),
            Preset::Mlp => (ModelKind::Mlp, &[], &[32, 64, 128, 32]),
        };
        ModelConfig {
            kind,
            conv_widths: conv.to_vec(),
            linear_widths: lin.to_vec(),
            in_dim,
            num_classes,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown model preset {s:?}")))
    }
}

impl ModelConfig {
    /// Operator and (in, out) width of every layer, input to output.
    pub fn layers(&self) -> Vec<(LayerOp, usize, usize)> {
        let conv_op = match self.kind {
            ModelKind::Gs => LayerOp::Sage,
            ModelKind::Gcn => LayerOp::Gcn,
            ModelKind::Mlp => LayerOp::Linear,
        };
        let mut out = Vec::new();
        let mut prev = self.in_dim;
        for &w in &self.conv_widths {
            out.push((conv_op, prev, w));
            prev = w;
        }
        for &w in self.linear_widths.iter().chain(std::iter::once(&self.num_classes)) {
            out.push((LayerOp::Linear, prev, w));
            prev = w;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.num_classes < 2 {
            return Err(Error::Config(format!(
                "in_dim {} and num_classes {} must be positive and at least 2",
                self.in_dim, self.num_classes
            )));
        }
        if self.conv_widths.iter().chain(&self.linear_widths).any(|&w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.kind == ModelKind::Mlp && !self.conv_widths.is_empty() {
            return Err(Error::Config("an MLP has no conv layers".into()));
        }
        Ok(())
    }

    /// Glorot-uniform weights and zero biases.
    pub fn init_params(&self, seed: u64) -> Vec<LayerParams> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.layers()
            .into_iter()
            .map(|(op, i, o)| {
                let limit = (6.0 / (i + o) as f64).sqrt();
                let count = if op == LayerOp::Sage { 2 } else { 1 };
                let weights = (0..count)
                    .map(|_| {
                        let data = (0..i * o).map(|_| rng.gen_range(-limit..=limit)).collect();
                        DenseMatrix::from_vec(i, o, data).expect("sized above")
                    })
                    .collect();
                LayerParams {
                    weights,
                    bias: vec![0.0; o],
                }
            })
            .collect()
    }

    fn check_params(&self, params: &[LayerParams]) -> Result<()> {
        let layers = self.layers();
        if layers.len() != params.len() {
            return Err(Error::Shape(format!(
                "config has {} layers, params have {}",
                layers.len(),
                params.len()
            )));
        }
        for (l, ((op, i, o), p)) in layers.iter().zip(params).enumerate() {
            let count = if *op == LayerOp::Sage { 2 } else { 1 };
            if p.weights.len() != count
                || p.bias.len() != *o
                || p.weights.iter().any(|w| w.shape() != (*i, *o))
            {
                return Err(Error::Shape(format!("layer {l} params do not map {i} to {o}")));
            }
        }
        Ok(())
    }
}

/// Everything the backward needs from one forward.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
}

/// A configured network with its parameters, optimizer state and best-checkpoint metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Vec<LayerParams>,
    pub optimizer: AdamState,
    #[serde(default)]
    pub best_val_accuracy: Option<f64>,
    #[serde(default)]
    pub best_epoch: Option<usize>,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = config.init_params(seed);
        let optimizer = AdamState::new(&params);
        Ok(Self {
            config,
            params,
            optimizer,
            best_val_accuracy: None,
            best_epoch: None,
        })
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(LayerParams::num_values).sum()
    }

    /// Logits for every node. ReLU follows every layer except the last.
    pub fn forward(&self, x: &DenseMatrix, g: &GraphStructure) -> Result<(DenseMatrix, ForwardCache)> {
        if x.cols() != self.config.in_dim {
            return Err(Error::Shape(format!(
                "{} input features, model expects {}",
                x.cols(),
                self.config.in_dim
            )));
        }
        let layers = self.config.layers();
        let last = layers.len() - 1;
        let mut h = x.clone();
        let mut caches = Vec::with_capacity(layers.len());
        for (l, ((op, _, _), p)) in layers.iter().zip(&self.params).enumerate() {
            let (y, c) = layer_forward(*op, &h, g, p, l != last)?;
            caches.push(c);
            h = y;
        }
        Ok((h, ForwardCache { layers: caches }))
    }

    pub fn logits(&self, x: &DenseMatrix, g: &GraphStructure) -> Result<DenseMatrix> {
        Ok(self.forward(x, g)?.0)
    }

    /// Parameter gradients given the loss gradient at the logits.
    pub fn backward(&self, g: &GraphStructure, cache: &ForwardCache, dlogits: &DenseMatrix) -> Result<Vec<LayerParams>> {
        let layers = self.config.layers();
        if cache.layers.len() != layers.len() {
            return Err(Error::MissingCache);
        }
        let mut grads = vec![None; layers.len()];
        let mut d = dlogits.clone();
        for l in (0..layers.len()).rev() {
            let (gp, dh) = layer_backward(layers[l].0, g, &self.params[l], &cache.layers[l], &d)?;
            grads[l] = Some(gp);
            d = dh;
        }
        Ok(grads.into_iter().map(|g| g.expect("filled above")).collect())
    }

    fn check_graph(&self, g: &ComponentGraph) -> Result<()> {
        let k = g.scheme.num_classes();
        if k != self.config.num_classes {
            return Err(Error::ClassCountMismatch {
                model: self.config.num_classes,
                graph: k,
            });
        }
        if g.feature_dim() != self.config.in_dim {
            return Err(Error::Shape(format!(
                "graph has {} features per node (n = {}), model expects {}",
                g.feature_dim(),
                g.n,
                self.config.in_dim
            )));
        }
        Ok(())
    }

    /// Predicted class per node; exact ties go to the lowest class index.
    pub fn predict(&self, g: &ComponentGraph) -> Result<Vec<usize>> {
        self.check_graph(g)?;
        let (x, s) = graph_inputs(g)?;
        Ok(argmax_rows(&self.logits(&x, &s)?))
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            version: u32,
            #[serde(flatten)]
            model: &'a Model,
        }
        serde_json::to_string(&File {
            version: MODEL_FILE_VERSION,
            model: self,
        })
        .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            version: u32,
            #[serde(flatten)]
            model: Model,
        }
        let f: File = serde_json::from_str(text)?;
        if f.version != MODEL_FILE_VERSION {
            return Err(Error::VersionMismatch {
                expected: MODEL_FILE_VERSION,
                found: f.version,
            });
        }
        let m = f.model;
        m.config.validate()?;
        m.config.check_params(&m.params)?;
        if !m.optimizer.matches(&m.params) {
            return Err(Error::Shape("optimizer state does not match params".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Feature matrix and neighbor structure of a graph.
pub fn graph_inputs(g: &ComponentGraph) -> Result<(DenseMatrix, GraphStructure)> {
    let x = DenseMatrix::from_vec(g.node_count(), g.feature_dim(), g.feature_matrix())?;
    let s = GraphStructure::from_edges(g.node_count(), &g.edges)?;
    Ok((x, s))
}

pub fn argmax_rows(m: &DenseMatrix) -> Vec<usize> {
    (0..m.rows())
        .map(|r| {
            let row = m.row(r);
            let mut best = 0;
            for (i, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
