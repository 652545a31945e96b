//! Multi-level message-passing encoder.
//!
//! Every node of a [`HierGraph`] (atoms, motifs and the graph node) starts
//! from a row of one shared token table. Each layer updates
//!
//! ```text
//! z_v = (1 + eps) h_v + sum_{u in N(v)} (h_u + e_uv)
//! h_v' = W2 tanh(W1 z_v + b1) + b2
//! ```
//!
//! with `tanh` applied to `h'` between layers (not after the last). Neighbor
//! sums run in ascending neighbor index, so outputs are bit-reproducible.

use crate::hierseg::{EdgeKind, HierEdge, HierGraph, NodeToken};
use crate::numeric::{block, block_mut, c, tanh, Block, BlockMut, Blocks, Real};
use ndarray::{s, Array1, Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GnnDims {
    pub d: usize,
    pub layers: usize,
    /// Width of the perceptron's hidden layer.
    pub hidden: usize,
}

impl GnnDims {
    /// Hidden width defaults to `2 * d`.
    pub fn new(d: usize, layers: usize) -> Self {
        GnnDims {
            d,
            layers,
            hidden: 2 * d,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnnLayer<T> {
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    pub w2: Array2<T>,
    pub b2: Array1<T>,
    /// Self-weight, stored as a length-1 array so it is a block like the rest.
    pub eps: Array1<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnnParams<T> {
    pub dims: GnnDims,
    /// `NodeToken::COUNT x d`
    pub node_emb: Array2<T>,
    /// `EdgeKind::COUNT x d`
    pub edge_emb: Array2<T>,
    pub layers: Vec<GnnLayer<T>>,
}

fn uniform<T: Real>(rng: &mut ChaCha8Rng, shape: (usize, usize), bound: f64) -> Array2<T> {
    Array2::from_shape_simple_fn(shape, || c(rng.random_range(-bound..=bound)))
}

/// Seeded initialization: token and edge embeddings `U(-1, 1)`, weights
/// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases and `eps` zero. Values are
/// drawn in f64 so f32 and f64 models from one seed agree up to rounding.
pub fn init_params<T: Real>(seed: u64, dims: GnnDims) -> GnnParams<T> {
    assert!(
        dims.d >= 1 && dims.hidden >= 1,
        "dimensions must be positive"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let node_emb = uniform(&mut rng, (NodeToken::COUNT, dims.d), 1.0);
    let edge_emb = uniform(&mut rng, (EdgeKind::COUNT, dims.d), 1.0);
    let layers = (0..dims.layers)
        .map(|_| GnnLayer {
            w1: uniform(
                &mut rng,
                (dims.d, dims.hidden),
                1.0 / (dims.d as f64).sqrt(),
            ),
            b1: Array1::zeros(dims.hidden),
            w2: uniform(
                &mut rng,
                (dims.hidden, dims.d),
                1.0 / (dims.hidden as f64).sqrt(),
            ),
            b2: Array1::zeros(dims.d),
            eps: Array1::zeros(1),
        })
        .collect();
    GnnParams {
        dims,
        node_emb,
        edge_emb,
        layers,
    }
}

impl<T: Real> GnnParams<T> {
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill_zero();
        z
    }

    pub fn cast<U: Real>(&self) -> GnnParams<U> {
        let f = |x: &T| c::<U>(x.to_f64().unwrap());
        GnnParams {
            dims: self.dims,
            node_emb: self.node_emb.map(f),
            edge_emb: self.edge_emb.map(f),
            layers: self
                .layers
                .iter()
                .map(|l| GnnLayer {
                    w1: l.w1.map(f),
                    b1: l.b1.map(f),
                    w2: l.w2.map(f),
                    b2: l.b2.map(f),
                    eps: l.eps.map(f),
                })
                .collect(),
        }
    }
}

impl<T: Real> Blocks<T> for GnnParams<T> {
    fn blocks(&self) -> Vec<Block<'_, T>> {
        let mut out = vec![
            block!("gnn.node_emb", self.node_emb),
            block!("gnn.edge_emb", self.edge_emb),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            out.push(block!(format!("gnn.layer{i}.w1"), l.w1));
            out.push(block!(format!("gnn.layer{i}.b1"), l.b1));
            out.push(block!(format!("gnn.layer{i}.w2"), l.w2));
            out.push(block!(format!("gnn.layer{i}.b2"), l.b2));
            out.push(block!(format!("gnn.layer{i}.eps"), l.eps));
        }
        out
    }

    fn blocks_mut(&mut self) -> Vec<BlockMut<'_, T>> {
        let mut out = vec![
            block_mut!("gnn.node_emb", self.node_emb),
            block_mut!("gnn.edge_emb", self.edge_emb),
        ];
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push(block_mut!(format!("gnn.layer{i}.w1"), l.w1));
            out.push(block_mut!(format!("gnn.layer{i}.b1"), l.b1));
            out.push(block_mut!(format!("gnn.layer{i}.w2"), l.w2));
            out.push(block_mut!(format!("gnn.layer{i}.b2"), l.b2));
            out.push(block_mut!(format!("gnn.layer{i}.eps"), l.eps));
        }
        out
    }
}

/// Per-level embeddings of one molecule.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFeatures<T> {
    /// `a x d`
    pub node_mat: Array2<T>,
    /// `b x d`
    pub motif_mat: Array2<T>,
    pub graph_vec: Array1<T>,
}

impl<T: Real> LevelFeatures<T> {
    pub fn a(&self) -> usize {
        self.node_mat.nrows()
    }

    pub fn b(&self) -> usize {
        self.motif_mat.nrows()
    }

    pub fn dim(&self) -> usize {
        self.graph_vec.len()
    }

    pub fn zeros(a: usize, b: usize, d: usize) -> Self {
        LevelFeatures {
            node_mat: Array2::zeros((a, d)),
            motif_mat: Array2::zeros((b, d)),
            graph_vec: Array1::zeros(d),
        }
    }

    /// All `a + b + 1` rows stacked in node order.
    pub fn stacked(&self) -> Array2<T> {
        let (a, b, d) = (self.a(), self.b(), self.dim());
        let mut out = Array2::zeros((a + b + 1, d));
        out.slice_mut(s![..a, ..]).assign(&self.node_mat);
        out.slice_mut(s![a..a + b, ..]).assign(&self.motif_mat);
        out.row_mut(a + b).assign(&self.graph_vec);
        out
    }

    /// Inverse of [`stacked`](Self::stacked).
    pub fn from_stacked(rows: &Array2<T>, a: usize, b: usize) -> Self {
        assert_eq!(rows.nrows(), a + b + 1, "row count");
        LevelFeatures {
            node_mat: rows.slice(s![..a, ..]).to_owned(),
            motif_mat: rows.slice(s![a..a + b, ..]).to_owned(),
            graph_vec: rows.row(a + b).to_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.node_mat.iter().all(|x| x.is_finite())
            && self.motif_mat.iter().all(|x| x.is_finite())
            && self.graph_vec.iter().all(|x| x.is_finite())
    }
}

struct LayerCache<T> {
    h_in: Array2<T>,
    /// `tanh(z W1 + b1)`
    q: Array2<T>,
    z: Array2<T>,
    h_out: Array2<T>,
}

/// Forward activations kept for the backward pass.
pub struct ForwardCache<T> {
    layers: Vec<LayerCache<T>>,
}

fn aggregate<T: Real>(hg: &HierGraph, edge_emb: &Array2<T>, h: &Array2<T>, eps: T) -> Array2<T> {
    let mut z = h * (T::one() + eps);
    for (v, nbrs) in hg.adjacency().iter().enumerate() {
        let mut row = z.row_mut(v);
        for &(u, k) in nbrs {
            let e = edge_emb.row(hg.edges[k].kind.index());
            row.zip_mut_with(&h.row(u), |acc, &x| *acc += x);
            row.zip_mut_with(&e, |acc, &x| *acc += x);
        }
    }
    z
}

fn embed_tokens<T: Real>(hg: &HierGraph, params: &GnnParams<T>) -> Array2<T> {
    let mut h = Array2::zeros((hg.node_count(), params.dims.d));
    for (v, tok) in hg.tokens.iter().enumerate() {
        h.row_mut(v).assign(&params.node_emb.row(tok.index()));
    }
    h
}

fn forward<T: Real>(
    hg: &HierGraph,
    params: &GnnParams<T>,
    keep: bool,
) -> (Array2<T>, Option<ForwardCache<T>>) {
    let mut h = embed_tokens(hg, params);
    let mut caches = Vec::new();
    let last = params.layers.len().saturating_sub(1);
    for (l, layer) in params.layers.iter().enumerate() {
        let z = aggregate(hg, &params.edge_emb, &h, layer.eps[0]);
        let mut q = z.dot(&layer.w1);
        q += &layer.b1;
        q.mapv_inplace(tanh);
        let mut out = q.dot(&layer.w2);
        out += &layer.b2;
        if l < last {
            out.mapv_inplace(tanh);
        }
        if keep {
            caches.push(LayerCache {
                h_in: h,
                q,
                z,
                h_out: out.clone(),
            });
        }
        h = out;
    }
    (h, keep.then_some(ForwardCache { layers: caches }))
}

fn split<T: Real>(hg: &HierGraph, h: &Array2<T>) -> LevelFeatures<T> {
    LevelFeatures::from_stacked(h, hg.a(), hg.b())
}

pub fn encode<T: Real>(hg: &HierGraph, params: &GnnParams<T>) -> LevelFeatures<T> {
    split(hg, &forward(hg, params, false).0)
}

/// Forward pass that also returns the activations needed by [`backward`].
pub fn encode_with_cache<T: Real>(
    hg: &HierGraph,
    params: &GnnParams<T>,
) -> (LevelFeatures<T>, ForwardCache<T>) {
    let (h, cache) = forward(hg, params, true);
    (split(hg, &h), cache.expect("cache requested"))
}

/// Accumulates into `grads` the gradient of a scalar loss whose gradient with
/// respect to the encoder outputs is `d_out`.
pub fn backward<T: Real>(
    hg: &HierGraph,
    params: &GnnParams<T>,
    cache: &ForwardCache<T>,
    d_out: &LevelFeatures<T>,
    grads: &mut GnnParams<T>,
) {
    let mut dh = d_out.stacked();
    let last = params.layers.len().saturating_sub(1);
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let lc = &cache.layers[l];
        let g = &mut grads.layers[l];
        let mut dr = dh;
        if l < last {
            dr.zip_mut_with(&lc.h_out, |d, &y| *d *= T::one() - y * y);
        }
        g.w2 += &lc.q.t().dot(&dr);
        g.b2 += &dr.sum_axis(Axis(0));
        let mut dp = dr.dot(&layer.w2.t());
        dp.zip_mut_with(&lc.q, |d, &y| *d *= T::one() - y * y);
        g.w1 += &lc.z.t().dot(&dp);
        g.b1 += &dp.sum_axis(Axis(0));
        let dz = dp.dot(&layer.w1.t());

        g.eps[0] += (&dz * &lc.h_in).sum();
        let mut dh_in = &dz * (T::one() + layer.eps[0]);
        for (v, nbrs) in hg.adjacency().iter().enumerate() {
            let dzv = dz.row(v);
            for &(u, k) in nbrs {
                dh_in.row_mut(u).zip_mut_with(&dzv, |acc, &x| *acc += x);
                grads
                    .edge_emb
                    .row_mut(hg.edges[k].kind.index())
                    .zip_mut_with(&dzv, |acc, &x| *acc += x);
            }
        }
        dh = dh_in;
    }
    for (v, tok) in hg.tokens.iter().enumerate() {
        grads
            .node_emb
            .row_mut(tok.index())
            .zip_mut_with(&dh.row(v), |acc, &x| *acc += x);
    }
}

/// Zero-padded batch of level features with validity masks.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchedFeatures<T> {
    /// `batch x max_a x d`
    pub node: Array3<T>,
    pub node_mask: Array2<bool>,
    /// `batch x max_b x d`
    pub motif: Array3<T>,
    pub motif_mask: Array2<bool>,
    /// `batch x d`
    pub graph: Array2<T>,
}

impl<T: Real> BatchedFeatures<T> {
    pub fn len(&self) -> usize {
        self.graph.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pad(items: &[LevelFeatures<T>]) -> Self {
        Self::pad_to(items, 0, 0)
    }

    /// Pads to at least `min_a` node rows and `min_b` motif rows.
    pub fn pad_to(items: &[LevelFeatures<T>], min_a: usize, min_b: usize) -> Self {
        let d = items.first().map_or(0, |f| f.dim());
        let max_a = items.iter().map(|f| f.a()).max().unwrap_or(0).max(min_a);
        let max_b = items.iter().map(|f| f.b()).max().unwrap_or(0).max(min_b);
        let n = items.len();
        let mut out = BatchedFeatures {
            node: Array3::zeros((n, max_a, d)),
            node_mask: Array2::from_elem((n, max_a), false),
            motif: Array3::zeros((n, max_b, d)),
            motif_mask: Array2::from_elem((n, max_b), false),
            graph: Array2::zeros((n, d)),
        };
        for (i, f) in items.iter().enumerate() {
            out.node.slice_mut(s![i, ..f.a(), ..]).assign(&f.node_mat);
            out.node_mask.slice_mut(s![i, ..f.a()]).fill(true);
            out.motif.slice_mut(s![i, ..f.b(), ..]).assign(&f.motif_mat);
            out.motif_mask.slice_mut(s![i, ..f.b()]).fill(true);
            out.graph.row_mut(i).assign(&f.graph_vec);
        }
        out
    }

    /// The unpadded features of sample `i`.
    pub fn sample(&self, i: usize) -> LevelFeatures<T> {
        let a = self.node_mask.row(i).iter().filter(|&&m| m).count();
        let b = self.motif_mask.row(i).iter().filter(|&&m| m).count();
        LevelFeatures {
            node_mat: self.node.slice(s![i, ..a, ..]).to_owned(),
            motif_mat: self.motif.slice(s![i, ..b, ..]).to_owned(),
            graph_vec: self.graph.row(i).to_owned(),
        }
    }
}

/// Encodes every graph (in parallel) and pads the results.
pub fn encode_batch<T: Real>(hgs: &[HierGraph], params: &GnnParams<T>) -> BatchedFeatures<T> {
    assert!(!hgs.is_empty(), "empty batch");
    let items: Vec<LevelFeatures<T>> = hgs.par_iter().map(|hg| encode(hg, params)).collect();
    BatchedFeatures::pad(&items)
}

/// A graph with some atoms replaced by the mask token.
#[derive(Clone, Debug)]
pub struct MaskedGraph {
    pub graph: HierGraph,
    /// Masked atom indices, ascending.
    pub atoms: Vec<usize>,
    /// Bonds with at least one masked endpoint, ascending. Their edge type is
    /// hidden from the encoder as well.
    pub bonds: Vec<usize>,
}

/// Number of atoms masked at `ratio`: `ceil(ratio * a)`.
pub fn mask_count(ratio: f64, a: usize) -> usize {
    ((ratio * a as f64 - 1e-9).ceil().max(0.0) as usize).min(a)
}

pub fn mask_atoms(hg: &HierGraph, ratio: f64, seed: u64) -> MaskedGraph {
    assert!(
        (0.0..=1.0).contains(&ratio),
        "mask ratio must lie in [0, 1]"
    );
    let a = hg.a();
    let k = mask_count(ratio, a);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..a).collect();
    for i in 0..k {
        let j = rng.random_range(i..a);
        order.swap(i, j);
    }
    let mut atoms = order[..k].to_vec();
    atoms.sort_unstable();
    let mut masked = vec![false; a];
    for &i in &atoms {
        masked[i] = true;
    }

    let mut graph = hg.clone();
    for &i in &atoms {
        graph.tokens[i] = NodeToken::Mask;
    }
    let mut bonds = Vec::new();
    let edges: Vec<HierEdge> = hg
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| match e.kind {
            EdgeKind::Bond(_) if masked[e.u] || masked[e.v] => {
                bonds.push(k);
                HierEdge {
                    kind: EdgeKind::MaskedBond,
                    ..*e
                }
            }
            _ => *e,
        })
        .collect();
    MaskedGraph {
        graph: graph.with_edges(edges),
        atoms,
        bonds,
    }
}
