//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use hiermol::dataprep::synth::random_smiles;
use hiermol::dataprep::{clean, CleanConfig};
use hiermol::encoder::{encode, GnnDims};
use hiermol::fusion::{
    project, reduce, token_bytes, tokens_from_bytes, ProjectorParams, Reduction,
};
use hiermol::hierseg::{fragment_bonds, segment, EdgeKind, Level, SimpleBrics};
use hiermol::metrics::{
    bleu_n, levenshtein, morgan_fp, path_fp, rouge_l, rouge_n, structural_keys_fp, tanimoto,
    tokenize, Tokenization,
};
use hiermol::molgraph::{decode_selfies, parse_smiles, validate_valence, Molecule};
use hiermol::optim::Adam;
use hiermol::paramfile::{ParamFile, CHECKPOINT_MAGIC};
use hiermol::pretrain::losses::{contrastive_from_scores, smooth_l1};
use hiermol::pretrain::{
    batch_objective, load_checkpoint, masked_atom_accuracy, sample_atom_accuracy, save_checkpoint,
    train, LossWeights, Model, Sample, TrainConfig, TrainItem,
};
use hiermol::selfcheck::{canonical_suite, gradient_suite, pooling_suite};
use ndarray::Array1;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, VecDeque};
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mols(smiles: &[String]) -> Vec<Molecule> {
    smiles.iter().map(|s| parse_smiles(s).unwrap()).collect()
}

fn c1_gradients() -> Outcome {
    let t = Instant::now();
    let r = gradient_suite(0, 10, 1e-5, 1e-4);
    let secs = t.elapsed().as_secs_f64();
    outcome(
        r.passed && secs < 60.0,
        format!(
            "{} blocks, worst rel err {:.2e}, {secs:.1}s",
            r.cases, r.worst
        ),
    )
}

fn c2_pooling() -> Outcome {
    let r = pooling_suite(0, 1000, 1e-5);
    outcome(
        r.passed,
        format!("{} feature sets, worst rel err {:.2e}", r.cases, r.worst),
    )
}

/// Bond `k` lies on a cycle iff its endpoints stay connected without it.
fn on_cycle(mol: &Molecule, k: usize) -> bool {
    let bond = mol.bond(k);
    let mut seen = vec![false; mol.atom_count()];
    let mut queue = VecDeque::from([bond.a]);
    seen[bond.a] = true;
    while let Some(u) = queue.pop_front() {
        for &(v, b) in mol.neighbors(u) {
            if b != k && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen[bond.b]
}

fn c3_segmentation() -> Outcome {
    let cfg = CleanConfig::default();
    let cleaned: Vec<String> = random_smiles(3, 1200, 5, 50)
        .iter()
        .filter_map(|s| clean(s, &cfg).ok())
        .collect();
    let mut violations = 0;
    for mol in mols(&cleaned) {
        let hg = segment(&mol, &SimpleBrics);
        let (a, b) = (hg.a(), hg.b());
        let mut members = vec![0usize; b];
        let ids_ok = hg.partition.motif_id.len() == a
            && hg.partition.motif_id.iter().all(|&m| {
                m < b && {
                    members[m] += 1;
                    true
                }
            });
        let partition_ok = ids_ok && members.iter().all(|&n| n > 0);
        let e_m: Vec<_> = hg
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::MotifLink)
            .collect();
        let e_g: Vec<_> = hg
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::GraphLink)
            .collect();
        let links_ok = e_m.len() == a
            && e_g.len() == b
            && partition_ok
            && e_m.iter().all(|e| e.v == a + hg.partition.motif_id[e.u])
            && e_g.iter().map(|e| e.v).collect::<BTreeSet<_>>().len() == b;
        let ring_cut = fragment_bonds(&mol, &SimpleBrics)
            .iter()
            .any(|&k| on_cycle(&mol, k));
        let ring_split = (0..mol.bond_count()).any(|k| {
            let bd = mol.bond(k);
            on_cycle(&mol, k) && hg.partition.motif_id[bd.a] != hg.partition.motif_id[bd.b]
        });
        if !(partition_ok && links_ok) || ring_cut || ring_split {
            violations += 1;
        }
    }
    outcome(
        cleaned.len() >= 1000 && violations == 0,
        format!(
            "{} cleaned molecules, {violations} violations",
            cleaned.len()
        ),
    )
}

fn c4_smooth_l1() -> Outcome {
    let quad = |r: f64| 0.5 * r * r;
    let lin = |r: f64| r.abs() - 0.5;
    let at_one = (quad(1.0) - 0.5).abs() <= 1e-12
        && (lin(1.0) - 0.5).abs() <= 1e-12
        && (smooth_l1(1.0f64) - 0.5).abs() <= 1e-12
        && (smooth_l1(-1.0f64) - 0.5).abs() <= 1e-12
        && (smooth_l1(1.0f64 - 1e-12) - 0.5).abs() <= 1e-12;
    let spots = smooth_l1(0.5f64) == 0.125 && smooth_l1(2.0f64) == 1.5 && smooth_l1(-2.0f64) == 1.5;
    outcome(
        at_one && spots,
        format!(
            "f(1) = {}, f(0.5) = {}, f(2) = {}",
            smooth_l1(1.0f64),
            smooth_l1(0.5f64),
            smooth_l1(2.0f64)
        ),
    )
}

fn c5_contrastive() -> Outcome {
    let zero = contrastive_from_scores(&[0.0f64; 8], &[0.0; 8], &[0.0; 8]);
    let zero_ok = (zero - 1.5 * std::f64::consts::LN_2).abs() <= 1e-9;

    let t = Instant::now();
    let n = 64;
    // duplicate molecules would force tied scores
    let mut seen = BTreeSet::new();
    let smiles: Vec<String> = random_smiles(5, 4 * n, 8, 30)
        .into_iter()
        .filter(|s| seen.insert(s.clone()))
        .take(n)
        .collect();
    let graphs: Vec<_> = mols(&smiles)
        .iter()
        .map(|m| segment(m, &SimpleBrics))
        .collect();
    let items: Vec<TrainItem> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut t = vec![0f32; n];
            t[i] = 1.0;
            TrainItem {
                graph: g.clone(),
                text: Some(t),
            }
        })
        .collect();
    let cfg = TrainConfig {
        d_gnn: 64,
        layers: 2,
        d_text: n,
        lr: 3e-3,
        batch_size: n,
        mask_ratio: 0.0,
        epochs: 500,
        weights: LossWeights {
            contrastive: 1.0,
            ..LossWeights::zero()
        },
        ..Default::default()
    };
    let out = match train(&items, &cfg, |_, _| {}) {
        Ok(o) => o,
        Err(e) => return outcome(false, e.to_string()),
    };
    let model = out.checkpoint.model;
    let mapped: Vec<Array1<f32>> = graphs
        .iter()
        .map(|g| encode(g, &model.gnn).graph_vec.dot(&model.heads.text_map))
        .collect();
    // text i is the basis vector e_i, so score(i, j) = mapped_i[j]
    let wins = (0..n)
        .filter(|&i| {
            (0..n)
                .filter(|&j| j != i)
                .all(|j| mapped[i][i] > mapped[i][j])
        })
        .count();
    let pair_wins = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .filter(|&(i, j)| mapped[i][i] > mapped[i][j])
        .count();
    let rate = wins as f64 / n as f64;
    let secs = t.elapsed().as_secs_f64();
    outcome(
        zero_ok && out.steps == 500 && rate >= 0.9 && secs < 120.0,
        format!(
            "zero-score loss {zero:.12}, {} steps, matched beats every mismatch for {wins}/{n}, ordered pairs {pair_wins}/{}, {secs:.1}s",
            out.steps,
            n * (n - 1)
        ),
    )
}

fn c6_overfit() -> Outcome {
    let t = Instant::now();
    let graphs: Vec<_> = mols(&random_smiles(6, 16, 8, 24))
        .iter()
        .map(|m| segment(m, &SimpleBrics))
        .collect();
    let samples: Vec<Sample<f32>> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| Sample::new(g, 0.15, 100 + i as u64, None))
        .collect();
    let weights = LossWeights {
        contrastive: 0.0,
        ..Default::default()
    };
    let mut model: Model<f32> = Model::init(0, GnnDims::new(64, 2), 8);
    let mut adam = Adam::with_lr(&model, 1e-2);
    let mut first = f64::NAN;
    for step in 0..500 {
        let (report, grad) = match batch_objective(&model, &samples, &weights, 0, true) {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("step {step}: {e}")),
        };
        if step == 0 {
            first = report.total;
        }
        adam.step(&mut model, &grad.expect("gradient requested"));
    }
    let last = batch_objective(&model, &samples, &weights, 0, false)
        .unwrap()
        .0
        .total;
    let acc = sample_atom_accuracy(&model, &samples);
    let fresh = masked_atom_accuracy(&model, &graphs, 0.15, 77);
    let masked: usize = samples.iter().map(|s| s.targets.atoms.len()).sum();
    let secs = t.elapsed().as_secs_f64();
    outcome(
        acc >= 0.95 && last < first && secs < 120.0,
        format!(
            "500 steps, masked atom-type accuracy {acc:.3} on {masked} trained masks ({fresh:.3} on fresh masks), total loss {first:.1} -> {last:.1}, {secs:.1}s"
        ),
    )
}

fn c7_canonical() -> Outcome {
    let r = canonical_suite(7, 500, 20, 1000);
    outcome(
        r.passed,
        format!("{} checks, {} disagreements", r.cases, r.failures),
    )
}

fn selfies_alphabet() -> Vec<String> {
    let elements = ["B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"];
    let mut tokens = Vec::new();
    for e in elements {
        for prefix in ["", "-", "=", "#"] {
            tokens.push(format!("[{prefix}{e}]"));
        }
    }
    for kind in ["Branch1", "Branch2", "Ring1", "Ring2"] {
        for prefix in ["", "=", "#"] {
            tokens.push(format!("[{prefix}{kind}]"));
        }
    }
    tokens.push("[nop]".into());
    tokens
}

fn c8_selfies() -> Outcome {
    let alphabet = selfies_alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    let mut atoms = 0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=40);
        let size = rng.random_range(2..=alphabet.len());
        let subset: Vec<&String> = alphabet.choose_multiple(&mut rng, size).collect();
        let s: String = (0..k)
            .map(|_| subset.choose(&mut rng).unwrap().as_str())
            .collect();
        match decode_selfies(&s) {
            Ok(m) => {
                atoms += m.atom_count();
                violations += usize::from(!validate_valence(&m).is_empty());
            }
            Err(_) => violations += 1,
        }
    }
    outcome(
        violations == 0,
        format!("1000 strings, {atoms} atoms decoded, {violations} violations"),
    )
}

fn lev_rec(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = lev_rec(ra, rb) + usize::from(x != y);
            sub.min(lev_rec(ra, b) + 1).min(lev_rec(a, rb) + 1)
        }
    }
}

fn c9_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let letters: Vec<char> = "abcC(=O)".chars().collect();
    let rand_str = |rng: &mut ChaCha8Rng| -> String {
        let n = rng.random_range(0..=8);
        (0..n).map(|_| *letters.choose(rng).unwrap()).collect()
    };
    let mut lev_bad = 0;
    for _ in 0..200 {
        let (a, b) = (rand_str(&mut rng), rand_str(&mut rng));
        let ca: Vec<char> = a.chars().collect();
        let cb: Vec<char> = b.chars().collect();
        lev_bad += usize::from(levenshtein(&a, &b) != lev_rec(&ca, &cb));
    }
    let pool = mols(&random_smiles(90, 200, 5, 40));
    let mut fp_bad = 0;
    for _ in 0..1000 {
        let x = pool.choose(&mut rng).unwrap();
        let y = pool.choose(&mut rng).unwrap();
        let pairs = [
            (morgan_fp(x, 2, 2048), morgan_fp(y, 2, 2048)),
            (path_fp(x, 7, 2048), path_fp(y, 7, 2048)),
            (structural_keys_fp(x), structural_keys_fp(y)),
        ];
        for (fx, fy) in &pairs {
            let s = tanimoto(fx, fy).unwrap();
            let ok = tanimoto(fx, fx).unwrap() == 1.0
                && (0.0..=1.0).contains(&s)
                && s == tanimoto(fy, fx).unwrap();
            fp_bad += usize::from(!ok);
        }
    }
    let mut text_bad = 0;
    for s in ["the cat sat on the mat", "a", "CC(=O)Oc1ccccc1C(=O)O"] {
        for mode in [Tokenization::Whitespace, Tokenization::Chars] {
            let t = tokenize(s, mode);
            let scores = [
                bleu_n(&t, &t, 2).unwrap(),
                bleu_n(&t, &t, 4).unwrap(),
                rouge_n(&t, &t, 1).unwrap(),
                rouge_n(&t, &t, 2).unwrap(),
                rouge_l(&t, &t).unwrap(),
            ];
            text_bad += scores.iter().filter(|&&v| v != 1.0).count();
        }
    }
    outcome(
        lev_bad + fp_bad + text_bad == 0,
        format!("levenshtein mismatches {lev_bad}/200, fingerprint failures {fp_bad}/3000, text score failures {text_bad}"),
    )
}

fn c10_determinism() -> Outcome {
    let graphs: Vec<_> = mols(&random_smiles(10, 12, 5, 25))
        .iter()
        .map(|m| segment(m, &SimpleBrics))
        .collect();
    let items: Vec<TrainItem> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| TrainItem {
            graph: g.clone(),
            text: Some(hiermol::dataprep::text_embed_stub(&format!("text {i}"), 16, 0).unwrap()),
        })
        .collect();
    let cfg = TrainConfig {
        d_gnn: 16,
        layers: 2,
        d_text: 16,
        batch_size: 4,
        epochs: 3,
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let model = train(&items, &cfg, |_, _| {}).unwrap().checkpoint.model;
        let path = dir.path().join(format!("{tag}.ckpt"));
        save_checkpoint(&model, &path).unwrap();
        let proj = ProjectorParams::<f32>::init(cfg.seed, cfg.d_gnn, 24);
        let tokens: Vec<Vec<u8>> = graphs
            .iter()
            .map(|g| {
                let f = project(&encode(g, &model.gnn), &proj).unwrap();
                token_bytes(&reduce(&f, Reduction::Hierarchical).unwrap())
            })
            .collect();
        (std::fs::read(&path).unwrap(), tokens, path)
    };
    let (ck_a, tok_a, path_a) = run("a");
    let (ck_b, tok_b, _) = run("b");
    let same_seed = ck_a == ck_b && tok_a == tok_b;
    let reloaded = load_checkpoint(&path_a).unwrap();
    let re_path = dir.path().join("re.ckpt");
    save_checkpoint(&reloaded, &re_path).unwrap();
    let ckpt_rt = std::fs::read(&re_path).unwrap() == ck_a
        && ParamFile::from_bytes(&ck_a, CHECKPOINT_MAGIC)
            .unwrap()
            .to_bytes()
            == ck_a;
    let tok_rt = tok_a
        .iter()
        .all(|b| token_bytes(&tokens_from_bytes(b).unwrap()) == *b);
    let levels_ok = tok_a.iter().all(|b| {
        tokens_from_bytes(b).unwrap().level_ids == [Level::Atom, Level::Motif, Level::Graph]
    });
    outcome(
        same_seed && ckpt_rt && tok_rt && levels_ok,
        format!("same-seed identical {same_seed}, checkpoint round-trip {ckpt_rt}, token round-trip {tok_rt}"),
    )
}

fn c11_throughput() -> Outcome {
    let smiles = random_smiles(11, 300, 20, 50);
    let params = hiermol::encoder::init_params::<f32>(0, GnnDims::new(300, 5));
    // warm-up
    let _ = encode(
        &segment(&parse_smiles(&smiles[0]).unwrap(), &SimpleBrics),
        &params,
    );
    let t = Instant::now();
    let mut sink = 0.0f32;
    for s in &smiles {
        let hg = segment(&parse_smiles(s).unwrap(), &SimpleBrics);
        sink += encode(&hg, &params).graph_vec[0];
    }
    let elapsed = t.elapsed().max(Duration::from_nanos(1));
    let rate = smiles.len() as f64 / elapsed.as_secs_f64();
    outcome(
        rate >= 100.0 && sink.is_finite(),
        format!(
            "{rate:.0} molecules/s over {} molecules of 20-50 atoms, d=300, L=5, one thread",
            smiles.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 gradient correctness", c1_gradients),
        ("2 pooling algebra", c2_pooling),
        ("3 segmentation laws", c3_segmentation),
        ("4 smooth-L1 branches", c4_smooth_l1),
        ("5 contrastive sanity", c5_contrastive),
        ("6 overfit check", c6_overfit),
        ("7 canonicalization stability", c7_canonical),
        ("8 SELFIES robustness", c8_selfies),
        ("9 metric oracles", c9_metrics),
        ("10 determinism and formats", c10_determinism),
        ("11 throughput", c11_throughput),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "criterion {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
