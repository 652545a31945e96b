//! Built-in verification suites: gradients against finite differences,
//! token-pooling algebra, segmentation laws and canonicalization
//! stability.

use crate::dataprep::synth::random_smiles;
use crate::dataprep::text_embed_stub;
use crate::encoder::{GnnDims, LevelFeatures};
use crate::fusion::{project, reduce, ProjectorParams, Reduction};
use crate::hierseg::{fragment_bonds, segment, EdgeKind, SimpleBrics};
use crate::molgraph::{canonicalize, is_isomorphic, parse_smiles, Molecule, RingInfo};
use crate::pretrain::gradcheck::gradient_check;
use crate::pretrain::{LossWeights, Model, Sample};
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Worst observed error where the suite measures one, else 0.
    pub worst: f64,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: &'static str, cases: usize, failures: usize, worst: f64, detail: String) -> Self {
        SuiteReport {
            name,
            passed: failures == 0 && cases > 0,
            cases,
            failures,
            worst,
            detail,
        }
    }
}

fn molecules(seed: u64, n: usize, min: usize, max: usize) -> Vec<Molecule> {
    random_smiles(seed, n, min, max)
        .iter()
        .map(|s| parse_smiles(s).expect("generator output parses"))
        .collect()
}

/// Every parameter block of the joint objective against central
/// differences in f64 (`d = 8`, two layers, all six loss terms).
pub fn gradient_suite(seed: u64, n_molecules: usize, h: f64, tol: f64) -> SuiteReport {
    let d_text = 8;
    let model: Model<f64> = Model::init(seed, GnnDims::new(8, 2), d_text);
    let batch: Vec<Sample<f64>> = molecules(seed ^ 0x6772_6164, n_molecules, 5, 12)
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let hg = segment(m, &SimpleBrics);
            let text = text_embed_stub(&format!("molecule {i} token{}", i * 7), d_text, seed)
                .expect("d_text >= 8");
            let text = Array1::from(text.iter().map(|&x| x as f64).collect::<Vec<_>>());
            Sample::new(&hg, 0.3, seed.wrapping_add(i as u64), Some(text))
        })
        .collect();
    match gradient_check(&model, &batch, &LossWeights::default(), seed, h) {
        Ok(checks) => {
            let bad: Vec<String> = checks
                .iter()
                .filter(|c| !(c.rel_error <= tol))
                .map(|c| format!("{} {:.2e}", c.name, c.rel_error))
                .collect();
            let worst = checks.iter().map(|c| c.rel_error).fold(0.0, f64::max);
            SuiteReport::new("gradient", checks.len(), bad.len(), worst, bad.join("; "))
        }
        Err(e) => SuiteReport::new("gradient", 1, 1, f64::INFINITY, e.to_string()),
    }
}

fn rel_err(x: &Array1<f64>, y: &Array1<f64>) -> f64 {
    let diff = (x - y).mapv(|v| v * v).sum().sqrt();
    let scale = x
        .mapv(|v| v * v)
        .sum()
        .sqrt()
        .max(y.mapv(|v| v * v).sum().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// On random feature sets and projectors: the all-reduced token equals the
/// `(a, b, 1)`-weighted mean of the hierarchical tokens and the projection
/// of the raw mean; token counts are `a + b + 1`, 3 and 1.
pub fn pooling_suite(seed: u64, n: usize, tol: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let a = rng.random_range(1..=30);
        let b = rng.random_range(1..=a.min(10));
        let d = rng.random_range(1..=16);
        let d_llm = rng.random_range(1..=24);
        let mut sample = |r: usize, c: usize| {
            Array2::from_shape_simple_fn((r, c), || rng.random_range(-3.0..3.0))
        };
        let f = LevelFeatures {
            node_mat: sample(a, d),
            motif_mat: sample(b, d),
            graph_vec: sample(1, d).row(0).to_owned(),
        };
        let p = ProjectorParams {
            w: sample(d, d_llm),
            b: sample(1, d_llm).row(0).to_owned(),
        };
        let projected = project(&f, &p).expect("matching widths");
        let none = reduce(&projected, Reduction::None).unwrap();
        let hier = reduce(&projected, Reduction::Hierarchical).unwrap();
        let all = reduce(&projected, Reduction::All).unwrap();
        let counts_ok = none.k() == a + b + 1 && hier.k() == 3 && all.k() == 1;
        let all_tok = all.tokens.row(0).to_owned();
        let weighted =
            (&hier.tokens.row(0) * a as f64 + &hier.tokens.row(1) * b as f64 + &hier.tokens.row(2))
                / (a + b + 1) as f64;
        let raw_mean = f.stacked().mean_axis(ndarray::Axis(0)).unwrap();
        let proj_of_mean = p.apply_vec(raw_mean.view());
        let e = rel_err(&all_tok, &weighted).max(rel_err(&all_tok, &proj_of_mean));
        worst = worst.max(e);
        if !counts_ok || !(e <= tol) {
            failures += 1;
        }
    }
    SuiteReport::new("pooling", n, failures, worst, String::new())
}

/// Segmentation laws on generated molecules: motif ids partition the atoms,
/// one motif link per atom, one graph link per motif, no ring bond cut.
pub fn segmentation_suite(seed: u64, n: usize) -> SuiteReport {
    let mut failures = Vec::new();
    for (i, mol) in molecules(seed, n, 5, 50).iter().enumerate() {
        let hg = segment(mol, &SimpleBrics);
        let (a, b) = (hg.a(), hg.b());
        let rings = RingInfo::membership(mol);
        let cuts_ring = fragment_bonds(mol, &SimpleBrics)
            .iter()
            .any(|&k| rings.ring_bond[k]);
        let ok = hg.check().is_ok()
            && hg.count_edges(|k| k == EdgeKind::MotifLink) == a
            && hg.count_edges(|k| k == EdgeKind::GraphLink) == b
            && !cuts_ring;
        if !ok {
            failures.push(i);
        }
    }
    let detail = format!("{:?}", &failures[..failures.len().min(10)]);
    SuiteReport::new("segmentation", n, failures.len(), 0.0, detail)
}

/// Canonical strings are unchanged by random atom renumbering, and
/// canonical equality agrees with the isomorphism oracle on small pairs.
pub fn canonical_suite(
    seed: u64,
    n_molecules: usize,
    n_perms: usize,
    n_pairs: usize,
) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut cases = 0;
    for mol in molecules(seed ^ 0xca11, n_molecules, 5, 40) {
        let want = canonicalize(&mol);
        for _ in 0..n_perms {
            let mut perm: Vec<usize> = (0..mol.atom_count()).collect();
            perm.shuffle(&mut rng);
            cases += 1;
            failures += usize::from(canonicalize(&mol.permute(&perm)) != want);
        }
    }
    let small = molecules(seed ^ 0x150, n_pairs.max(2), 5, 12);
    for i in 0..n_pairs {
        let x = &small[i % small.len()];
        let y = if rng.random_bool(0.5) {
            let mut perm: Vec<usize> = (0..x.atom_count()).collect();
            perm.shuffle(&mut rng);
            x.permute(&perm)
        } else {
            small[rng.random_range(0..small.len())].clone()
        };
        cases += 1;
        let oracle = is_isomorphic(x, &y).expect("within oracle size");
        failures += usize::from((canonicalize(x) == canonicalize(&y)) != oracle);
    }
    SuiteReport::new("canonicalization", cases, failures, 0.0, String::new())
}

/// The suites run by the `selfcheck` command at their default sizes.
pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    vec![
        gradient_suite(seed, 10, 1e-5, 1e-4),
        pooling_suite(seed, 1000, 1e-5),
        segmentation_suite(seed, 1000),
        canonical_suite(seed, 500, 20, 500),
    ]
}
