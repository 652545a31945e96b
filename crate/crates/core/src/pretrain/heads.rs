use crate::encoder::{init_params, GnnDims, GnnParams};
use crate::molgraph::{BondOrder, Element};
use crate::numeric::{block, block_mut, c, Block, BlockMut, Blocks, Real};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Atom-type classes predicted for masked atoms.
pub const ATOM_CLASSES: usize = Element::COUNT;
/// Bond-type classes predicted for masked bonds.
pub const BOND_CLASSES: usize = BondOrder::ALL.len();

/// Prediction heads on top of the encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Heads<T> {
    /// `d x ATOM_CLASSES`
    pub at_w: Array2<T>,
    pub at_b: Array1<T>,
    /// `2d x BOND_CLASSES`
    pub bt_w: Array2<T>,
    pub bt_b: Array1<T>,
    pub an_w: Array1<T>,
    pub an_b: Array1<T>,
    pub bn_w: Array1<T>,
    pub bn_b: Array1<T>,
    /// `d x d_text`, maps graph vectors into the text space.
    pub text_map: Array2<T>,
}

fn uniform2<T: Real>(rng: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<T> {
    let bound = 1.0 / (shape.0 as f64).sqrt();
    Array2::from_shape_simple_fn(shape, || c(rng.random_range(-bound..=bound)))
}

fn uniform1<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Array1<T> {
    let bound = 1.0 / (n as f64).sqrt();
    Array1::from_shape_simple_fn(n, || c(rng.random_range(-bound..=bound)))
}

impl<T: Real> Heads<T> {
    pub fn init(seed: u64, d: usize, d_text: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Heads {
            at_w: uniform2(&mut rng, (d, ATOM_CLASSES)),
            at_b: Array1::zeros(ATOM_CLASSES),
            bt_w: uniform2(&mut rng, (2 * d, BOND_CLASSES)),
            bt_b: Array1::zeros(BOND_CLASSES),
            an_w: uniform1(&mut rng, d),
            an_b: Array1::zeros(1),
            bn_w: uniform1(&mut rng, d),
            bn_b: Array1::zeros(1),
            text_map: uniform2(&mut rng, (d, d_text)),
        }
    }

    pub fn d_text(&self) -> usize {
        self.text_map.ncols()
    }

    pub fn cast<U: Real>(&self) -> Heads<U> {
        let f = |x: &T| c::<U>(x.to_f64().unwrap());
        Heads {
            at_w: self.at_w.map(f),
            at_b: self.at_b.map(f),
            bt_w: self.bt_w.map(f),
            bt_b: self.bt_b.map(f),
            an_w: self.an_w.map(f),
            an_b: self.an_b.map(f),
            bn_w: self.bn_w.map(f),
            bn_b: self.bn_b.map(f),
            text_map: self.text_map.map(f),
        }
    }
}

impl<T: Real> Blocks<T> for Heads<T> {
    fn blocks(&self) -> Vec<Block<'_, T>> {
        vec![
            block!("heads.atom_type.w", self.at_w),
            block!("heads.atom_type.b", self.at_b),
            block!("heads.bond_type.w", self.bt_w),
            block!("heads.bond_type.b", self.bt_b),
            block!("heads.atom_count.w", self.an_w),
            block!("heads.atom_count.b", self.an_b),
            block!("heads.bond_count.w", self.bn_w),
            block!("heads.bond_count.b", self.bn_b),
            block!("heads.text_map", self.text_map),
        ]
    }

    fn blocks_mut(&mut self) -> Vec<BlockMut<'_, T>> {
        vec![
            block_mut!("heads.atom_type.w", self.at_w),
            block_mut!("heads.atom_type.b", self.at_b),
            block_mut!("heads.bond_type.w", self.bt_w),
            block_mut!("heads.bond_type.b", self.bt_b),
            block_mut!("heads.atom_count.w", self.an_w),
            block_mut!("heads.atom_count.b", self.an_b),
            block_mut!("heads.bond_count.w", self.bn_w),
            block_mut!("heads.bond_count.b", self.bn_b),
            block_mut!("heads.text_map", self.text_map),
        ]
    }
}

/// Encoder plus heads; also used as the gradient and optimizer-state type.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub gnn: GnnParams<T>,
    pub heads: Heads<T>,
}

impl<T: Real> Model<T> {
    /// Encoder from `seed`, heads from `seed + 1`.
    pub fn init(seed: u64, dims: GnnDims, d_text: usize) -> Self {
        Model {
            gnn: init_params(seed, dims),
            heads: Heads::init(seed.wrapping_add(1), dims.d, d_text),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill_zero();
        z
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            gnn: self.gnn.cast(),
            heads: self.heads.cast(),
        }
    }
}

impl<T: Real> Blocks<T> for Model<T> {
    fn blocks(&self) -> Vec<Block<'_, T>> {
        let mut b = self.gnn.blocks();
        b.extend(self.heads.blocks());
        b
    }

    fn blocks_mut(&mut self) -> Vec<BlockMut<'_, T>> {
        let mut b = self.gnn.blocks_mut();
        b.extend(self.heads.blocks_mut());
        b
    }
}
