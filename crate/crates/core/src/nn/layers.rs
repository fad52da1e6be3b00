//! Single-layer forwards and their backward passes.

use crate::error::{Error, Result};

use super::matrix::DenseMatrix;

/// Undirected neighbor structure with the normalizations the conv layers need.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphStructure {
    neighbors: Vec<Vec<usize>>,
    /// `1 / sqrt(deg + 1)` per node, for the self-looped symmetric normalization.
    inv_sqrt_deg: Vec<f64>,
}

impl GraphStructure {
    /// Builds from an undirected edge list. Duplicate edges and self edges are ignored.
    pub fn from_edges(num_nodes: usize, edges: &[[usize; 2]]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); num_nodes];
        for &[a, b] in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::Shape(format!(
                    "edge ({a}, {b}) outside {num_nodes} nodes"
                )));
            }
            if a != b {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for ns in &mut neighbors {
            ns.sort_unstable();
            ns.dedup();
        }
        let inv_sqrt_deg = neighbors
            .iter()
            .map(|ns| 1.0 / ((ns.len() + 1) as f64).sqrt())
            .collect();
        Ok(Self {
            neighbors,
            inv_sqrt_deg,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Disjoint union; node indices of later parts are offset.
    pub fn union(parts: &[&GraphStructure]) -> Self {
        let mut neighbors = Vec::new();
        let mut inv_sqrt_deg = Vec::new();
        for p in parts {
            let off = neighbors.len();
            neighbors.extend(
                p.neighbors
                    .iter()
                    .map(|ns| ns.iter().map(|&u| u + off).collect::<Vec<_>>()),
            );
            inv_sqrt_deg.extend_from_slice(&p.inv_sqrt_deg);
        }
        Self {
            neighbors,
            inv_sqrt_deg,
        }
    }

    fn check_rows(&self, h: &DenseMatrix) -> Result<()> {
        if h.rows() != self.num_nodes() {
            return Err(Error::Shape(format!(
                "{} feature rows for {} nodes",
                h.rows(),
                self.num_nodes()
            )));
        }
        Ok(())
    }

    /// Row v of the result is the mean of the neighbor rows of v, or zero.
    pub fn mean_neighbors(&self, h: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(h)?;
        let mut out = DenseMatrix::zeros(h.rows(), h.cols());
        for (v, ns) in self.neighbors.iter().enumerate() {
            if ns.is_empty() {
                continue;
            }
            let k = 1.0 / ns.len() as f64;
            let row = out.row_mut(v);
            for &u in ns {
                for (o, x) in row.iter_mut().zip(h.row(u)) {
                    *o += x;
                }
            }
            for o in row {
                *o *= k;
            }
        }
        Ok(out)
    }

    /// Transpose of `mean_neighbors`: each node's gradient is spread evenly over its neighbors.
    pub fn mean_neighbors_backward(&self, dm: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(dm)?;
        let mut out = DenseMatrix::zeros(dm.rows(), dm.cols());
        for (v, ns) in self.neighbors.iter().enumerate() {
            if ns.is_empty() {
                continue;
            }
            let k = 1.0 / ns.len() as f64;
            for &u in ns {
                let src = dm.row(v);
                for (o, x) in out.row_mut(u).iter_mut().zip(src) {
                    *o += k * x;
                }
            }
        }
        Ok(out)
    }

    /// `D^-1/2 (A + I) D^-1/2 h`. The operator is symmetric, so it is its own backward.
    pub fn gcn_propagate(&self, h: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows(h)?;
        let mut out = DenseMatrix::zeros(h.rows(), h.cols());
        for (v, ns) in self.neighbors.iter().enumerate() {
            let dv = self.inv_sqrt_deg[v];
            let row = out.row_mut(v);
            for (o, x) in row.iter_mut().zip(h.row(v)) {
                *o += dv * dv * x;
            }
            for &u in ns {
                let w = dv * self.inv_sqrt_deg[u];
                for (o, x) in row.iter_mut().zip(h.row(u)) {
                    *o += w * x;
                }
            }
        }
        Ok(out)
    }
}

/// Trainable tensors of one layer. Conv layers of GraphSAGE carry two weights
/// (self, neighbor); every other layer carries one.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LayerParams {
    pub weights: Vec<DenseMatrix>,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn zeros_like(&self) -> Self {
        Self {
            weights: self
                .weights
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect(),
            bias: vec![0.0; self.bias.len()],
        }
    }

    pub fn num_values(&self) -> usize {
        self.weights.iter().map(|w| w.data().len()).sum::<usize>() + self.bias.len()
    }
}

/// Which operator a layer applies before its weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerOp {
    Sage,
    Gcn,
    Linear,
}

/// What a layer keeps from its forward for the backward.
#[derive(Debug, Clone)]
pub struct LayerCache {
    input: DenseMatrix,
    /// Neighbor mean for SAGE, propagated input for GCN.
    aggregated: Option<DenseMatrix>,
    output: DenseMatrix,
    relu: bool,
}

fn check_weights(op: LayerOp, p: &LayerParams, in_dim: usize) -> Result<()> {
    let want = if op == LayerOp::Sage { 2 } else { 1 };
    if p.weights.len() != want {
        return Err(Error::Shape(format!(
            "{op:?} layer expects {want} weight matrices, got {}",
            p.weights.len()
        )));
    }
    let out = p.bias.len();
    for w in &p.weights {
        if w.shape() != (in_dim, out) {
            return Err(Error::Shape(format!(
                "weight {:?} does not map {in_dim} to {out}",
                w.shape()
            )));
        }
    }
    Ok(())
}

/// `act(op(H) W + b)`; SAGE computes `H W_self + mean(H) W_neigh + b`.
pub fn layer_forward(
    op: LayerOp,
    h: &DenseMatrix,
    g: &GraphStructure,
    p: &LayerParams,
    relu: bool,
) -> Result<(DenseMatrix, LayerCache)> {
    check_weights(op, p, h.cols())?;
    let (mut z, aggregated) = match op {
        LayerOp::Sage => {
            let m = g.mean_neighbors(h)?;
            let mut z = h.matmul(&p.weights[0])?;
            z.add_assign(&m.matmul(&p.weights[1])?)?;
            (z, Some(m))
        }
        LayerOp::Gcn => {
            let a = g.gcn_propagate(h)?;
            (a.matmul(&p.weights[0])?, Some(a))
        }
        LayerOp::Linear => (h.matmul(&p.weights[0])?, None),
    };
    z.add_row(&p.bias)?;
    if relu {
        z.relu_inplace();
    }
    let cache = LayerCache {
        input: h.clone(),
        aggregated,
        output: z.clone(),
        relu,
    };
    Ok((z, cache))
}

/// Returns the parameter gradients and the gradient with respect to the layer input.
pub fn layer_backward(
    op: LayerOp,
    g: &GraphStructure,
    p: &LayerParams,
    cache: &LayerCache,
    dout: &DenseMatrix,
) -> Result<(LayerParams, DenseMatrix)> {
    if dout.shape() != cache.output.shape() {
        return Err(Error::Shape(format!(
            "upstream gradient {:?} for output {:?}",
            dout.shape(),
            cache.output.shape()
        )));
    }
    let mut dz = dout.clone();
    if cache.relu {
        for (d, &y) in dz.data_mut().iter_mut().zip(cache.output.data()) {
            if y <= 0.0 {
                *d = 0.0;
            }
        }
    }
    let bias = dz.col_sums();
    let (weights, dh) = match op {
        LayerOp::Sage => {
            let m = cache.aggregated.as_ref().ok_or(Error::MissingCache)?;
            let dws = cache.input.t_matmul(&dz)?;
            let dwn = m.t_matmul(&dz)?;
            let mut dh = dz.matmul_t(&p.weights[0])?;
            let dm = dz.matmul_t(&p.weights[1])?;
            dh.add_assign(&g.mean_neighbors_backward(&dm)?)?;
            (vec![dws, dwn], dh)
        }
        LayerOp::Gcn => {
            let a = cache.aggregated.as_ref().ok_or(Error::MissingCache)?;
            let dw = a.t_matmul(&dz)?;
            let da = dz.matmul_t(&p.weights[0])?;
            (vec![dw], g.gcn_propagate(&da)?)
        }
        LayerOp::Linear => {
            let dw = cache.input.t_matmul(&dz)?;
            (vec![dw], dz.matmul_t(&p.weights[0])?)
        }
    };
    Ok((LayerParams { weights, bias }, dh))
}
