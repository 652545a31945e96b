//! Projection of level features into the language-model width, token
//! reduction, token-file export, and contrastive projector alignment.

use crate::encoder::{BatchedFeatures, LevelFeatures};
use crate::hierseg::Level;
use crate::numeric::{block, block_mut, c, Block, BlockMut, Blocks, Real};
use crate::optim::Adam;
use crate::paramfile::{ParamFile, ParamFileError, PROJECTOR_MAGIC};
use crate::pretrain::losses::{contrastive_with_grad, derangement};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FusionError {
    #[error("projector expects input width {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("{0:?} level has no tokens")]
    EmptyLevel(Level),
    #[error("unknown reduction mode '{0}'")]
    UnknownMode(String),
    #[error("alignment needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("alignment diverged at step {0}")]
    Diverged(usize),
}

/// Affine map `x W + b` shared by every level.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorParams<T> {
    /// `d_gnn x d_llm`
    pub w: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Real> ProjectorParams<T> {
    /// `W ~ U(-1/sqrt(d_gnn), 1/sqrt(d_gnn))`, zero bias.
    pub fn init(seed: u64, d_gnn: usize, d_llm: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (d_gnn as f64).sqrt();
        ProjectorParams {
            w: Array2::from_shape_simple_fn((d_gnn, d_llm), || c(rng.random_range(-bound..=bound))),
            b: Array1::zeros(d_llm),
        }
    }

    pub fn d_gnn(&self) -> usize {
        self.w.nrows()
    }

    pub fn d_llm(&self) -> usize {
        self.w.ncols()
    }

    pub fn apply(&self, rows: &Array2<T>) -> Array2<T> {
        rows.dot(&self.w) + &self.b
    }

    pub fn apply_vec(&self, x: ArrayView1<T>) -> Array1<T> {
        x.dot(&self.w) + &self.b
    }

    pub fn to_file(&self) -> ParamFile {
        ParamFile::from_params(PROJECTOR_MAGIC, self.d_gnn(), 0, self)
    }

    pub fn from_file(file: &ParamFile) -> Result<Self, ParamFileError> {
        let d_llm = match file.block("proj.b") {
            Some(b) if b.shape.len() == 1 => b.shape[0],
            _ => return Err(ParamFileError::Mismatch("proj.b".into())),
        };
        let mut p = ProjectorParams {
            w: Array2::zeros((file.d_gnn as usize, d_llm)),
            b: Array1::zeros(d_llm),
        };
        file.load_into(&mut p)?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<(), ParamFileError> {
        self.to_file().save(path)
    }

    pub fn load(path: &Path) -> Result<Self, ParamFileError> {
        Self::from_file(&ParamFile::load(path, PROJECTOR_MAGIC)?)
    }
}

impl<T: Real> Blocks<T> for ProjectorParams<T> {
    fn blocks(&self) -> Vec<Block<'_, T>> {
        vec![block!("proj.w", self.w), block!("proj.b", self.b)]
    }

    fn blocks_mut(&mut self) -> Vec<BlockMut<'_, T>> {
        vec![block_mut!("proj.w", self.w), block_mut!("proj.b", self.b)]
    }
}

pub fn project<T: Real>(
    features: &LevelFeatures<T>,
    p: &ProjectorParams<T>,
) -> Result<LevelFeatures<T>, FusionError> {
    if features.dim() != p.d_gnn() {
        return Err(FusionError::DimMismatch {
            expected: p.d_gnn(),
            got: features.dim(),
        });
    }
    Ok(LevelFeatures {
        node_mat: p.apply(&features.node_mat),
        motif_mat: p.apply(&features.motif_mat),
        graph_vec: p.apply_vec(features.graph_vec.view()),
    })
}

/// Projects a padded batch; padded rows stay zero.
pub fn project_batch<T: Real>(
    batch: &BatchedFeatures<T>,
    p: &ProjectorParams<T>,
) -> Result<BatchedFeatures<T>, FusionError> {
    let d_in = batch.graph.ncols();
    if d_in != p.d_gnn() {
        return Err(FusionError::DimMismatch {
            expected: p.d_gnn(),
            got: d_in,
        });
    }
    let proj3 = |x: &ndarray::Array3<T>, mask: &Array2<bool>| {
        let (n, rows, _) = x.dim();
        let mut out = ndarray::Array3::zeros((n, rows, p.d_llm()));
        for i in 0..n {
            for r in 0..rows {
                if mask[[i, r]] {
                    out.slice_mut(ndarray::s![i, r, ..])
                        .assign(&p.apply_vec(x.slice(ndarray::s![i, r, ..])));
                }
            }
        }
        out
    };
    Ok(BatchedFeatures {
        node: proj3(&batch.node, &batch.node_mask),
        node_mask: batch.node_mask.clone(),
        motif: proj3(&batch.motif, &batch.motif_mask),
        motif_mask: batch.motif_mask.clone(),
        graph: p.apply(&batch.graph),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reduction {
    None,
    Hierarchical,
    All,
    Level(Level),
}

impl Reduction {
    pub const MODES: [&'static str; 6] = ["none", "hier", "all", "node", "motif", "graph"];

    pub fn tag(self) -> u8 {
        match self {
            Reduction::None => 0,
            Reduction::Hierarchical => 1,
            Reduction::All => 2,
            Reduction::Level(Level::Atom) => 3,
            Reduction::Level(Level::Motif) => 4,
            Reduction::Level(Level::Graph) => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Reduction::None,
            1 => Reduction::Hierarchical,
            2 => Reduction::All,
            3 => Reduction::Level(Level::Atom),
            4 => Reduction::Level(Level::Motif),
            5 => Reduction::Level(Level::Graph),
            _ => return None,
        })
    }

    /// Number of tokens produced for a molecule with `a` atoms and `b` motifs.
    pub fn token_count(self, a: usize, b: usize) -> usize {
        match self {
            Reduction::None => a + b + 1,
            Reduction::Hierarchical => 3,
            Reduction::All | Reduction::Level(_) => 1,
        }
    }
}

impl FromStr for Reduction {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self, FusionError> {
        match s {
            "none" => Ok(Reduction::None),
            "hier" => Ok(Reduction::Hierarchical),
            "all" => Ok(Reduction::All),
            "node" => Ok(Reduction::Level(Level::Atom)),
            "motif" => Ok(Reduction::Level(Level::Motif)),
            "graph" => Ok(Reduction::Level(Level::Graph)),
            other => Err(FusionError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(Reduction::MODES[self.tag() as usize])
    }
}

fn level_code(l: Level) -> u8 {
    match l {
        Level::Atom => 0,
        Level::Motif => 1,
        Level::Graph => 2,
    }
}

fn level_from_code(x: u8) -> Option<Level> {
    match x {
        0 => Some(Level::Atom),
        1 => Some(Level::Motif),
        2 => Some(Level::Graph),
        _ => None,
    }
}

/// Reduced tokens ready to prefix a prompt.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenBundle<T> {
    /// `k x d_llm`
    pub tokens: Array2<T>,
    pub level_ids: Vec<Level>,
    pub reduction: Reduction,
}

impl<T: Real> TokenBundle<T> {
    pub fn k(&self) -> usize {
        self.tokens.nrows()
    }

    pub fn d_llm(&self) -> usize {
        self.tokens.ncols()
    }
}

/// Accumulates `rows[i]` where `mask[i]`, in row order. Returns the sum and
/// the count.
fn masked_sum<T: Real>(rows: ArrayView2<T>, mask: Option<ArrayView1<bool>>) -> (Array1<T>, usize) {
    let mut acc = Array1::zeros(rows.ncols());
    let mut n = 0;
    for (i, r) in rows.axis_iter(Axis(0)).enumerate() {
        if mask.is_none_or(|m| m[i]) {
            acc += &r;
            n += 1;
        }
    }
    (acc, n)
}

fn masked_mean<T: Real>(
    rows: ArrayView2<T>,
    mask: Option<ArrayView1<bool>>,
    level: Level,
) -> Result<Array1<T>, FusionError> {
    let (sum, n) = masked_sum(rows, mask);
    if n == 0 {
        return Err(FusionError::EmptyLevel(level));
    }
    Ok(sum / c::<T>(n as f64))
}

/// One sample's projected rows, possibly padded.
struct View<'a, T> {
    node: ArrayView2<'a, T>,
    node_mask: Option<ArrayView1<'a, bool>>,
    motif: ArrayView2<'a, T>,
    motif_mask: Option<ArrayView1<'a, bool>>,
    graph: ArrayView1<'a, T>,
}

impl<'a, T: Real> View<'a, T> {
    fn of(f: &'a LevelFeatures<T>) -> Self {
        View {
            node: f.node_mat.view(),
            node_mask: None,
            motif: f.motif_mat.view(),
            motif_mask: None,
            graph: f.graph_vec.view(),
        }
    }

    fn rows(&self, mode_level: Level) -> (ArrayView2<'a, T>, Option<ArrayView1<'a, bool>>) {
        match mode_level {
            Level::Atom => (self.node, self.node_mask),
            Level::Motif => (self.motif, self.motif_mask),
            Level::Graph => (self.graph.insert_axis(Axis(0)), None),
        }
    }

    fn reduce(&self, mode: Reduction) -> Result<TokenBundle<T>, FusionError> {
        let d = self.graph.len();
        let stack = |rows: Vec<Array1<T>>| {
            let mut out = Array2::zeros((rows.len(), d));
            for (i, r) in rows.iter().enumerate() {
                out.row_mut(i).assign(r);
            }
            out
        };
        let (tokens, level_ids) = match mode {
            Reduction::None => {
                let mut rows = Vec::new();
                let mut ids = Vec::new();
                for level in [Level::Atom, Level::Motif] {
                    let (r, m) = self.rows(level);
                    for (i, row) in r.axis_iter(Axis(0)).enumerate() {
                        if m.is_none_or(|m| m[i]) {
                            rows.push(row.to_owned());
                            ids.push(level);
                        }
                    }
                }
                rows.push(self.graph.to_owned());
                ids.push(Level::Graph);
                (stack(rows), ids)
            }
            Reduction::Hierarchical => {
                let (nr, nm) = self.rows(Level::Atom);
                let (mr, mm) = self.rows(Level::Motif);
                let rows = vec![
                    masked_mean(nr, nm, Level::Atom)?,
                    masked_mean(mr, mm, Level::Motif)?,
                    self.graph.to_owned(),
                ];
                (stack(rows), vec![Level::Atom, Level::Motif, Level::Graph])
            }
            Reduction::All => {
                let (nr, nm) = self.rows(Level::Atom);
                let (mr, mm) = self.rows(Level::Motif);
                let (s1, n1) = masked_sum(nr, nm);
                let (s2, n2) = masked_sum(mr, mm);
                let total = s1 + &s2 + &self.graph;
                let mean = total / c::<T>((n1 + n2 + 1) as f64);
                (stack(vec![mean]), vec![Level::Graph])
            }
            Reduction::Level(level) => {
                let (r, m) = self.rows(level);
                (stack(vec![masked_mean(r, m, level)?]), vec![level])
            }
        };
        Ok(TokenBundle {
            tokens,
            level_ids,
            reduction: mode,
        })
    }
}

/// Reduces one molecule's projected features.
pub fn reduce<T: Real>(
    projected: &LevelFeatures<T>,
    mode: Reduction,
) -> Result<TokenBundle<T>, FusionError> {
    View::of(projected).reduce(mode)
}

/// Nodes, then motifs, then the graph token.
pub fn reduce_none<T: Real>(projected: &LevelFeatures<T>) -> TokenBundle<T> {
    reduce(projected, Reduction::None).expect("never fails")
}

/// `[mean(nodes), mean(motifs), graph]`.
pub fn reduce_hierarchical<T: Real>(
    projected: &LevelFeatures<T>,
) -> Result<TokenBundle<T>, FusionError> {
    reduce(projected, Reduction::Hierarchical)
}

/// Mean over all `a + b + 1` tokens.
pub fn reduce_all<T: Real>(projected: &LevelFeatures<T>) -> TokenBundle<T> {
    reduce(projected, Reduction::All).expect("never fails")
}

/// Mean over one level's tokens.
pub fn select_level<T: Real>(
    projected: &LevelFeatures<T>,
    level: Level,
) -> Result<TokenBundle<T>, FusionError> {
    reduce(projected, Reduction::Level(level))
}

/// Reduces every sample of a padded batch; padding never enters a sum or a
/// divisor.
pub fn reduce_batch<T: Real>(
    batch: &BatchedFeatures<T>,
    mode: Reduction,
) -> Result<Vec<TokenBundle<T>>, FusionError> {
    (0..batch.len())
        .map(|i| {
            View {
                node: batch.node.index_axis(Axis(0), i),
                node_mask: Some(batch.node_mask.row(i)),
                motif: batch.motif.index_axis(Axis(0), i),
                motif_mask: Some(batch.motif_mask.row(i)),
                graph: batch.graph.row(i),
            }
            .reduce(mode)
        })
        .collect()
}

pub const TOKEN_MAGIC: [u8; 8] = *b"HGTOKENS";
pub const TOKEN_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TokenFileError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a token file")]
    BadMagic,
    #[error("unsupported token file version {0}")]
    Version(u32),
    #[error("token file is truncated or has trailing bytes")]
    Length,
    #[error("invalid reduction tag {0}")]
    Reduction(u8),
    #[error("invalid level id {0}")]
    Level(u8),
}

/// Header: magic, version, k, d_llm, reduction tag, k level ids; then the
/// `k x d_llm` tokens as row-major f32 little-endian.
pub fn token_bytes(bundle: &TokenBundle<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(21 + bundle.k() * (1 + 4 * bundle.d_llm()));
    out.extend_from_slice(&TOKEN_MAGIC);
    out.extend_from_slice(&TOKEN_VERSION.to_le_bytes());
    out.extend_from_slice(&(bundle.k() as u32).to_le_bytes());
    out.extend_from_slice(&(bundle.d_llm() as u32).to_le_bytes());
    out.push(bundle.reduction.tag());
    out.extend(bundle.level_ids.iter().map(|&l| level_code(l)));
    for x in bundle.tokens.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn tokens_from_bytes(bytes: &[u8]) -> Result<TokenBundle<f32>, TokenFileError> {
    if bytes.len() < 21 {
        return Err(if bytes.starts_with(&TOKEN_MAGIC) || bytes.len() < 8 {
            TokenFileError::Length
        } else {
            TokenFileError::BadMagic
        });
    }
    if bytes[..8] != TOKEN_MAGIC {
        return Err(TokenFileError::BadMagic);
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != TOKEN_VERSION {
        return Err(TokenFileError::Version(version));
    }
    let k = u32_at(12) as usize;
    let d = u32_at(16) as usize;
    let reduction = Reduction::from_tag(bytes[20]).ok_or(TokenFileError::Reduction(bytes[20]))?;
    let expected = k
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(21 + k))
        .ok_or(TokenFileError::Length)?;
    if bytes.len() != expected {
        return Err(TokenFileError::Length);
    }
    let level_ids = bytes[21..21 + k]
        .iter()
        .map(|&x| level_from_code(x).ok_or(TokenFileError::Level(x)))
        .collect::<Result<Vec<_>, _>>()?;
    let data: Vec<f32> = bytes[21 + k..]
        .chunks_exact(4)
        .map(|ch| f32::from_le_bytes(ch.try_into().unwrap()))
        .collect();
    Ok(TokenBundle {
        tokens: Array2::from_shape_vec((k, d), data).expect("length checked"),
        level_ids,
        reduction,
    })
}

pub fn export_tokens(bundle: &TokenBundle<f32>, path: &Path) -> Result<(), TokenFileError> {
    std::fs::write(path, token_bytes(bundle))?;
    Ok(())
}

pub fn import_tokens(path: &Path) -> Result<TokenBundle<f32>, TokenFileError> {
    tokens_from_bytes(&std::fs::read(path)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignConfig {
    pub seed: u64,
    pub lr: f64,
    pub steps: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            seed: 0,
            lr: 1e-3,
            steps: 500,
        }
    }
}

/// Mean of all `a + b + 1` raw feature rows, per pair.
fn pooled_inputs(data: &[(LevelFeatures<f32>, Array1<f32>)]) -> Array2<f32> {
    let d = data[0].0.dim();
    let mut x = Array2::zeros((data.len(), d));
    for (i, (f, _)) in data.iter().enumerate() {
        let ones = LevelFeatures {
            node_mat: f.node_mat.clone(),
            motif_mat: f.motif_mat.clone(),
            graph_vec: f.graph_vec.clone(),
        };
        let pooled = reduce_all(&ones);
        x.row_mut(i).assign(&pooled.tokens.row(0));
    }
    x
}

/// Trains a projector so that the all-reduced token of each molecule scores
/// high against its own text vector and low against others (frozen
/// encoder). Text vectors must have width `d_llm`.
pub fn align_projector(
    data: &[(LevelFeatures<f32>, Array1<f32>)],
    d_llm: usize,
    cfg: &AlignConfig,
) -> Result<ProjectorParams<f32>, FusionError> {
    let n = data.len();
    if n < 2 {
        return Err(FusionError::TooFewPairs(n));
    }
    let d_gnn = data[0].0.dim();
    for (f, t) in data {
        if f.dim() != d_gnn {
            return Err(FusionError::DimMismatch {
                expected: d_gnn,
                got: f.dim(),
            });
        }
        if t.len() != d_llm {
            return Err(FusionError::DimMismatch {
                expected: d_llm,
                got: t.len(),
            });
        }
    }
    let mut p = ProjectorParams::<f32>::init(cfg.seed, d_gnn, d_llm);
    // reduce_all(project(x)) = project(mean(x)) for an affine map
    let x = pooled_inputs(data);
    let mut text = Array2::zeros((n, d_llm));
    for (i, (_, t)) in data.iter().enumerate() {
        text.row_mut(i).assign(t);
    }
    let mut adam = Adam::with_lr(&p, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0a11_c0de);
    for step in 0..cfg.steps {
        let perm_text = derangement(n, &mut rng);
        let perm_mol = derangement(n, &mut rng);
        let tokens = p.apply(&x);
        let (loss, d_tokens) = contrastive_with_grad(&tokens, &text, &perm_text, &perm_mol);
        if !loss.is_finite() {
            return Err(FusionError::Diverged(step));
        }
        let grad = ProjectorParams {
            w: x.t().dot(&d_tokens),
            b: d_tokens.sum_axis(Axis(0)),
        };
        adam.step(&mut p, &grad);
    }
    Ok(p)
}

/// Fraction of ordered pairs `(i, j != i)` where molecule `i` scores higher
/// against its own text than against text `j`.
pub fn matched_pair_rate(tokens: &Array2<f32>, text: &Array2<f32>) -> f64 {
    let s = tokens.dot(&text.t());
    let n = s.nrows();
    let mut wins = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && s[[i, i]] > s[[i, j]] {
                wins += 1;
            }
        }
    }
    wins as f64 / (n * (n - 1)) as f64
}
