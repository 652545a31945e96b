//! Adam optimizer over any block container.

use crate::numeric::{c, Blocks, Real};

/// Moment-based optimizer with bias correction.
#[derive(Clone, Debug)]
pub struct Adam<P> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: P,
    v: P,
    t: i32,
}

impl<P: Clone> Adam<P> {
    pub fn new<T: Real>(params: &P, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self
    where
        P: Blocks<T>,
    {
        let mut zero = params.clone();
        zero.fill_zero();
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            m: zero.clone(),
            v: zero,
            t: 0,
        }
    }

    /// Defaults: betas 0.9 / 0.999, eps 1e-8.
    pub fn with_lr<T: Real>(params: &P, lr: f64) -> Self
    where
        P: Blocks<T>,
    {
        Self::new(params, lr, 0.9, 0.999, 1e-8)
    }

    pub fn step<T: Real>(&mut self, params: &mut P, grad: &P)
    where
        P: Blocks<T>,
    {
        self.t += 1;
        let one = T::one();
        let b1: T = c(self.beta1);
        let b2: T = c(self.beta2);
        let corr1: T = c(1.0 - self.beta1.powi(self.t));
        let corr2: T = c(1.0 - self.beta2.powi(self.t));
        let lr: T = c(self.lr);
        let eps: T = c(self.eps);
        let blocks = params
            .blocks_mut()
            .into_iter()
            .zip(grad.blocks())
            .zip(self.m.blocks_mut())
            .zip(self.v.blocks_mut());
        for (((p, g), m), v) in blocks {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = b1 * m.data[i] + (one - b1) * gi;
                v.data[i] = b2 * v.data[i] + (one - b2) * gi * gi;
                let m_hat = m.data[i] / corr1;
                let v_hat = v.data[i] / corr2;
                p.data[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
