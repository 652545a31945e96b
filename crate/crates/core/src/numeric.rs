//! Scalar trait shared by the f32 training path and the f64 gradient check,
//! plus the named-block view used by optimizers, checkpoints and checks.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

pub trait Real:
    LinalgScalar
    + ScalarOperand
    + Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an f64 constant.
#[inline]
pub fn c<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("representable constant")
}

/// `tanh` through a single `exp`.
#[inline]
pub fn tanh<T: Real>(x: T) -> T {
    let e = (c::<T>(-2.0) * x.abs()).exp();
    ((T::one() - e) / (T::one() + e)).copysign(x)
}

/// A named, shaped, row-major parameter block.
pub struct Block<'a, T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [T],
}

pub struct BlockMut<'a, T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a mut [T],
}

/// Parameter containers expose their arrays as an ordered list of blocks.
/// Both methods must list the same blocks in the same order.
pub trait Blocks<T: Real> {
    fn blocks(&self) -> Vec<Block<'_, T>>;
    fn blocks_mut(&mut self) -> Vec<BlockMut<'_, T>>;

    fn param_count(&self) -> usize {
        self.blocks().iter().map(|b| b.data.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.blocks()
            .iter()
            .all(|b| b.data.iter().all(|x| x.is_finite()))
    }

    fn fill_zero(&mut self) {
        for b in self.blocks_mut() {
            b.data.fill(T::zero());
        }
    }

    /// `self += other`, block by block.
    fn add_assign_from(&mut self, other: &Self) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (d, &s) in dst.data.iter_mut().zip(src.data) {
                *d += s;
            }
        }
    }

    fn scale(&mut self, k: T) {
        for b in self.blocks_mut() {
            for x in b.data.iter_mut() {
                *x *= k;
            }
        }
    }
}

/// Row-major slice of a standard-layout array.
macro_rules! block {
    ($name:expr, $arr:expr) => {
        $crate::numeric::Block {
            name: $name.into(),
            shape: $arr.shape().to_vec(),
            data: $arr.as_slice().expect("standard layout"),
        }
    };
}

macro_rules! block_mut {
    ($name:expr, $arr:expr) => {
        $crate::numeric::BlockMut {
            name: $name.into(),
            shape: $arr.shape().to_vec(),
            data: $arr.as_slice_mut().expect("standard layout"),
        }
    };
}

pub(crate) use block;
pub(crate) use block_mut;

/// Numerically stable `ln σ(x)`.
pub fn log_sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0f64) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!((log_sigmoid(-800.0f64) + 800.0).abs() < 1e-9);
        assert!(log_sigmoid(800.0f64).abs() < 1e-300);
        assert!((sigmoid(2.0f64) - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn tanh_matches_std() {
        for i in -400..=400 {
            let x = i as f64 * 0.05;
            assert!((tanh(x) - x.tanh()).abs() < 1e-15, "{x}");
            assert!((tanh(x as f32) - (x as f32).tanh()).abs() < 1e-6, "{x}");
        }
        assert_eq!(tanh(0.0f64), 0.0);
    }
}
