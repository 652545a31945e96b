//! Loss terms with their gradients with respect to the encoder outputs and
//! head parameters.

use super::heads::Heads;
use super::PretrainError;
use crate::encoder::LevelFeatures;
use crate::hierseg::HierGraph;
use crate::numeric::{c, log_sigmoid, sigmoid, Real};
use ndarray::{concatenate, Array1, Array2, ArrayView1, Axis};

/// Lower clamp for link probabilities.
pub const PROB_CLAMP: f64 = 1e-7;

/// Labels for the self-supervised objectives of one (masked) molecule.
#[derive(Clone, Debug, PartialEq)]
pub struct SslTargets {
    /// `(atom, element class)` for every masked atom.
    pub atoms: Vec<(usize, usize)>,
    /// `(u, v, bond class)` for every bond with a masked endpoint.
    pub bonds: Vec<(usize, usize, usize)>,
    /// Atom count.
    pub y_an: f64,
    /// Bond count.
    pub y_bn: f64,
}

impl SslTargets {
    pub fn from_masked(masked: &crate::encoder::MaskedGraph) -> Self {
        let mol = &masked.graph.mol;
        SslTargets {
            atoms: masked
                .atoms
                .iter()
                .map(|&i| (i, mol.atom(i).element.index()))
                .collect(),
            bonds: masked
                .bonds
                .iter()
                .map(|&k| {
                    let b = mol.bond(k);
                    (b.a, b.b, b.order.index())
                })
                .collect(),
            y_an: mol.atom_count() as f64,
            y_bn: mol.bond_count() as f64,
        }
    }
}

/// Binary cross-entropy on a clamped probability, and its derivative with
/// respect to the logit (zero where the clamp is active).
fn bce<T: Real>(logit: T, y: bool) -> (T, T) {
    let lo: T = c(PROB_CLAMP);
    let hi = T::one() - lo;
    let p = sigmoid(logit);
    let (pc, active) = if p < lo {
        (lo, false)
    } else if p > hi {
        (hi, false)
    } else {
        (p, true)
    };
    let yt = if y { T::one() } else { T::zero() };
    let loss = -(yt * pc.ln() + (T::one() - yt) * (T::one() - pc).ln());
    let grad = if active { p - yt } else { T::zero() };
    (loss, grad)
}

/// Link loss over all unordered atom pairs, scored by `sigmoid(n_i . n_j)`.
/// Returns the loss and its gradient with respect to `node_mat`.
pub fn link_with_grad<T: Real>(node_mat: &Array2<T>, hg: &HierGraph) -> (T, Array2<T>) {
    let a = node_mat.nrows();
    let mut loss = T::zero();
    let mut grad = Array2::zeros(node_mat.raw_dim());
    for i in 0..a {
        for j in i + 1..a {
            let ni = node_mat.row(i);
            let nj = node_mat.row(j);
            let (l, g) = bce(ni.dot(&nj), hg.mol.bond_between(i, j).is_some());
            loss += l;
            if g != T::zero() {
                grad.row_mut(i).scaled_add(g, &nj);
                grad.row_mut(j).scaled_add(g, &ni);
            }
        }
    }
    (loss, grad)
}

pub fn loss_link<T: Real>(features: &LevelFeatures<T>, hg: &HierGraph) -> T {
    link_with_grad(&features.node_mat, hg).0
}

/// Softmax cross-entropy for one row of logits; returns the loss and
/// `softmax - onehot`.
pub fn softmax_xent<T: Real>(logits: ArrayView1<T>, class: usize) -> (T, Array1<T>) {
    let max = logits.fold(T::neg_infinity(), |m, &x| m.max(x));
    let exp = logits.mapv(|x| (x - max).exp());
    let z = exp.sum();
    let loss = z.ln() + max - logits[class];
    let mut g = exp / z;
    g[class] -= T::one();
    (loss, g)
}

/// Mean masked atom-type cross-entropy. When `grads` is given, the gradient
/// of `w * loss` is accumulated into the node and head gradients.
pub fn atom_type_with_grad<T: Real>(
    node_mat: &Array2<T>,
    targets: &SslTargets,
    heads: &Heads<T>,
    mut grads: Option<(&mut Array2<T>, &mut Heads<T>, T)>,
) -> Result<T, PretrainError> {
    if targets.atoms.is_empty() {
        return Err(PretrainError::EmptyMask("atom"));
    }
    let inv: T = c(1.0 / targets.atoms.len() as f64);
    let mut loss = T::zero();
    for &(v, class) in &targets.atoms {
        let x = node_mat.row(v);
        let logits = x.dot(&heads.at_w) + &heads.at_b;
        let (l, g) = softmax_xent(logits.view(), class);
        loss += l * inv;
        if let Some((d_nodes, d_heads, w)) = grads.as_mut() {
            let g = g * (inv * *w);
            for (k, &xk) in x.iter().enumerate() {
                d_heads.at_w.row_mut(k).scaled_add(xk, &g);
            }
            d_heads.at_b += &g;
            d_nodes.row_mut(v).scaled_add(T::one(), &heads.at_w.dot(&g));
        }
    }
    Ok(loss)
}

pub fn loss_atom_type<T: Real>(
    features: &LevelFeatures<T>,
    targets: &SslTargets,
    heads: &Heads<T>,
) -> Result<T, PretrainError> {
    atom_type_with_grad(&features.node_mat, targets, heads, None)
}

/// Bond-head input `[n_u + n_v ; n_u * n_v]`, symmetric in `u` and `v`.
pub fn bond_input<T: Real>(nu: ArrayView1<T>, nv: ArrayView1<T>) -> Array1<T> {
    concatenate(Axis(0), &[(&nu + &nv).view(), (&nu * &nv).view()]).expect("same width")
}

/// Mean bond-type cross-entropy over bonds with a masked endpoint.
pub fn bond_type_with_grad<T: Real>(
    node_mat: &Array2<T>,
    targets: &SslTargets,
    heads: &Heads<T>,
    mut grads: Option<(&mut Array2<T>, &mut Heads<T>, T)>,
) -> Result<T, PretrainError> {
    if targets.bonds.is_empty() {
        return Err(PretrainError::EmptyMask("bond"));
    }
    let d = node_mat.ncols();
    let inv: T = c(1.0 / targets.bonds.len() as f64);
    let mut loss = T::zero();
    for &(u, v, class) in &targets.bonds {
        let (nu, nv) = (node_mat.row(u), node_mat.row(v));
        let x = bond_input(nu, nv);
        let logits = x.dot(&heads.bt_w) + &heads.bt_b;
        let (l, g) = softmax_xent(logits.view(), class);
        loss += l * inv;
        if let Some((d_nodes, d_heads, w)) = grads.as_mut() {
            let g = g * (inv * *w);
            for (k, &xk) in x.iter().enumerate() {
                d_heads.bt_w.row_mut(k).scaled_add(xk, &g);
            }
            d_heads.bt_b += &g;
            let dx = heads.bt_w.dot(&g);
            let (d_sum, d_prod) = dx.view().split_at(Axis(0), d);
            let du = &d_sum + &(&d_prod * &nv);
            let dv = &d_sum + &(&d_prod * &nu);
            d_nodes.row_mut(u).scaled_add(T::one(), &du);
            d_nodes.row_mut(v).scaled_add(T::one(), &dv);
        }
    }
    Ok(loss)
}

pub fn loss_bond_type<T: Real>(
    features: &LevelFeatures<T>,
    targets: &SslTargets,
    heads: &Heads<T>,
) -> Result<T, PretrainError> {
    bond_type_with_grad(&features.node_mat, targets, heads, None)
}

/// Smooth-L1 of a residual: quadratic below 1 in magnitude, linear above.
pub fn smooth_l1<T: Real>(r: T) -> T {
    let half: T = c(0.5);
    if r.abs() < T::one() {
        half * r * r
    } else {
        r.abs() - half
    }
}

/// Derivative of [`smooth_l1`] with respect to the residual.
pub fn smooth_l1_grad<T: Real>(r: T) -> T {
    if r.abs() < T::one() {
        r
    } else {
        r.signum()
    }
}

/// Atom-count and bond-count losses from linear heads on the graph vector.
pub fn counts_with_grad<T: Real>(
    graph_vec: &Array1<T>,
    targets: &SslTargets,
    heads: &Heads<T>,
    weights: (T, T),
    grads: Option<(&mut Array1<T>, &mut Heads<T>)>,
) -> (T, T) {
    let pred_an = graph_vec.dot(&heads.an_w) + heads.an_b[0];
    let pred_bn = graph_vec.dot(&heads.bn_w) + heads.bn_b[0];
    let r_an = c::<T>(targets.y_an) - pred_an;
    let r_bn = c::<T>(targets.y_bn) - pred_bn;
    if let Some((d_graph, d_heads)) = grads {
        // d loss / d pred = -smooth_l1'(y - pred)
        let g_an = -smooth_l1_grad(r_an) * weights.0;
        let g_bn = -smooth_l1_grad(r_bn) * weights.1;
        d_heads.an_w.scaled_add(g_an, graph_vec);
        d_heads.an_b[0] += g_an;
        d_heads.bn_w.scaled_add(g_bn, graph_vec);
        d_heads.bn_b[0] += g_bn;
        d_graph.scaled_add(g_an, &heads.an_w);
        d_graph.scaled_add(g_bn, &heads.bn_w);
    }
    (smooth_l1(r_an), smooth_l1(r_bn))
}

pub fn loss_counts<T: Real>(
    features: &LevelFeatures<T>,
    targets: &SslTargets,
    heads: &Heads<T>,
) -> (T, T) {
    counts_with_grad(
        &features.graph_vec,
        targets,
        heads,
        (T::one(), T::one()),
        None,
    )
}

/// Contrastive loss from precomputed scores: positives, molecule paired with
/// a negative text, and text paired with a negative molecule.
pub fn contrastive_from_scores<T: Real>(pos: &[T], neg_text: &[T], neg_mol: &[T]) -> T {
    let n = pos.len();
    let half: T = c(0.5);
    let mut total = T::zero();
    for i in 0..n {
        total +=
            -half * (log_sigmoid(pos[i]) + log_sigmoid(-neg_text[i]) + log_sigmoid(-neg_mol[i]));
    }
    total / c(n as f64)
}

/// Contrastive loss over a batch. `mol` rows are the molecule vectors already
/// mapped to the text dimension. Returns the loss and the gradient with
/// respect to `mol`.
pub fn contrastive_with_grad<T: Real>(
    mol: &Array2<T>,
    text: &Array2<T>,
    perm_text: &[usize],
    perm_mol: &[usize],
) -> (T, Array2<T>) {
    let n = mol.nrows();
    let score = |i: usize, j: usize| mol.row(i).dot(&text.row(j));
    let pos: Vec<T> = (0..n).map(|i| score(i, i)).collect();
    let neg_text: Vec<T> = (0..n).map(|i| score(i, perm_text[i])).collect();
    let neg_mol: Vec<T> = (0..n).map(|i| score(perm_mol[i], i)).collect();
    let loss = contrastive_from_scores(&pos, &neg_text, &neg_mol);

    let k: T = c(0.5 / n as f64);
    let mut grad = Array2::zeros(mol.raw_dim());
    for i in 0..n {
        // d/ds of -ln sigma(s) is -(1 - sigma(s)); of -ln(1 - sigma(s)) is sigma(s)
        let g_pos = -(T::one() - sigmoid(pos[i])) * k;
        let g_nt = sigmoid(neg_text[i]) * k;
        let g_nm = sigmoid(neg_mol[i]) * k;
        grad.row_mut(i).scaled_add(g_pos, &text.row(i));
        grad.row_mut(i).scaled_add(g_nt, &text.row(perm_text[i]));
        grad.row_mut(perm_mol[i]).scaled_add(g_nm, &text.row(i));
    }
    (loss, grad)
}

/// A seeded cyclic permutation (Sattolo), hence a derangement for `n >= 2`.
pub fn derangement(n: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..i);
        p.swap(i, j);
    }
    p
}

/// Contrastive loss for raw molecule vectors `x_m` (mapped by
/// `heads.text_map`) and unit text vectors, with negatives drawn from two
/// seeded derangements.
pub fn loss_contrastive<T: Real>(
    graph_vecs: &Array2<T>,
    text_vecs: &Array2<T>,
    heads: &Heads<T>,
    seed: u64,
) -> Result<T, PretrainError> {
    use rand::SeedableRng;
    let n = graph_vecs.nrows();
    if n < 2 {
        return Err(PretrainError::BatchTooSmall(n));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pt = derangement(n, &mut rng);
    let pm = derangement(n, &mut rng);
    let mapped = graph_vecs.dot(&heads.text_map);
    Ok(contrastive_with_grad(&mapped, text_vecs, &pt, &pm).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn smooth_l1_values() {
        assert_eq!(smooth_l1(0.0f64), 0.0);
        assert_eq!(smooth_l1(0.5f64), 0.125);
        assert_eq!(smooth_l1(-2.0f64), 1.5);
        let below = 0.5 * 1.0f64 * 1.0;
        let above = 1.0f64 - 0.5;
        assert!((below - above).abs() <= 1e-12);
        assert_eq!(smooth_l1(1.0f64), 0.5);
    }

    #[test]
    fn contrastive_zero_scores() {
        let z = [0.0f64; 4];
        let l = contrastive_from_scores(&z, &z, &z);
        assert!((l - 1.5 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn contrastive_hand_scores() {
        // positive +2, both negatives -2
        let l = contrastive_from_scores(&[2.0f64, 2.0], &[-2.0, -2.0], &[-2.0, -2.0]);
        let s2 = 1.0 / (1.0 + (-2.0f64).exp());
        let expected = -0.5 * (s2.ln() + 2.0 * (1.0 - 1.0 / (1.0 + 2.0f64.exp())).ln());
        assert!((l - expected).abs() < 1e-12);
        assert!((l - 0.1904).abs() < 1e-4);
    }

    #[test]
    fn contrastive_limit_is_zero() {
        let l = contrastive_from_scores(&[60.0f64], &[-60.0], &[-60.0]);
        assert!(l < 1e-20);
    }

    #[test]
    fn derangements_have_no_fixed_points() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in 2..20 {
            let p = derangement(n, &mut rng);
            assert!(p.iter().enumerate().all(|(i, &j)| i != j));
            let mut s = p.clone();
            s.sort();
            assert_eq!(s, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn softmax_uniform_is_ln_k() {
        let (l, _) = softmax_xent(Array1::<f64>::zeros(10).view(), 3);
        assert!((l - 10f64.ln()).abs() < 1e-12);
        let (l, _) = softmax_xent(array![50.0f64, 0.0, 0.0].view(), 0);
        assert!(l < 1e-20);
    }

    #[test]
    fn bce_clamps() {
        let (l, g) = bce(0.0f64, true);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g + 0.5).abs() < 1e-15);
        let (l, g) = bce(-100.0f64, true);
        assert!((l + PROB_CLAMP.ln()).abs() < 1e-9);
        assert_eq!(g, 0.0);
    }
}
