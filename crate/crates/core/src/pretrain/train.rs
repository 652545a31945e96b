use super::config::TrainConfig;
use super::heads::Model;
use super::objective::{batch_objective, Sample};
use super::{LossReport, PretrainError};
use crate::encoder::{encode, GnnDims};
use crate::hierseg::HierGraph;
use crate::numeric::{Blocks, Real};
use crate::optim::Adam;
use crate::paramfile::{ParamFile, ParamFileError, CHECKPOINT_MAGIC};
use ndarray::{Array1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// A segmented molecule with an optional unit text vector.
#[derive(Clone, Debug)]
pub struct TrainItem {
    pub graph: HierGraph,
    pub text: Option<Vec<f32>>,
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: Model<f32>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub steps: usize,
}

/// Stateless 64-bit mixer for deriving per-step seeds.
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn check_texts(items: &[TrainItem], cfg: &TrainConfig) -> Result<(), PretrainError> {
    if cfg.weights.contrastive == 0.0 {
        return Ok(());
    }
    for (i, item) in items.iter().enumerate() {
        match &item.text {
            None => return Err(PretrainError::MissingText(i)),
            Some(t) if t.len() != cfg.d_text => {
                return Err(PretrainError::TextDim {
                    index: i,
                    got: t.len(),
                    expected: cfg.d_text,
                })
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Trains from a fresh seeded model. `on_step` receives the pre-update loss
/// of every step.
pub fn train(
    items: &[TrainItem],
    cfg: &TrainConfig,
    on_step: impl FnMut(usize, &LossReport),
) -> Result<TrainOutcome, PretrainError> {
    let model = Model::init(cfg.seed, cfg.dims(), cfg.d_text);
    train_from(model, items, cfg, on_step)
}

/// Continues training `model`.
pub fn train_from(
    mut model: Model<f32>,
    items: &[TrainItem],
    cfg: &TrainConfig,
    mut on_step: impl FnMut(usize, &LossReport),
) -> Result<TrainOutcome, PretrainError> {
    if items.is_empty() {
        return Err(PretrainError::EmptyBatch);
    }
    check_texts(items, cfg)?;
    let use_text = cfg.weights.contrastive != 0.0;
    let mut adam = Adam::new(&model, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut step = 0usize;
    'epochs: for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(cfg.seed, epoch as u64)));
        for chunk in order.chunks(cfg.batch_size) {
            if cfg.max_steps > 0 && step >= cfg.max_steps {
                break 'epochs;
            }
            let step_seed = mix(cfg.seed, 0x5eed_0000 + step as u64);
            let batch: Vec<Sample<f32>> = chunk
                .iter()
                .map(|&i| {
                    let text =
                        use_text.then(|| Array1::from(items[i].text.clone().expect("checked")));
                    Sample::new(
                        &items[i].graph,
                        cfg.mask_ratio,
                        mix(step_seed, i as u64),
                        text,
                    )
                })
                .collect();
            let (report, grad) = batch_objective(&model, &batch, &cfg.weights, step_seed, true)
                .map_err(|e| match e {
                    PretrainError::NonFinite => PretrainError::Diverged(step),
                    other => other,
                })?;
            let grad = grad.expect("gradient requested");
            if !grad.all_finite() {
                return Err(PretrainError::Diverged(step));
            }
            adam.step(&mut model, &grad);
            on_step(step, &report);
            step += 1;
        }
    }
    Ok(TrainOutcome {
        checkpoint: Checkpoint { model },
        steps: step,
    })
}

/// Fraction of masked atoms whose element the atom-type head recovers.
pub fn masked_atom_accuracy<T: Real>(
    model: &Model<T>,
    graphs: &[HierGraph],
    mask_ratio: f64,
    seed: u64,
) -> f64 {
    let samples: Vec<Sample<T>> = graphs
        .iter()
        .enumerate()
        .map(|(i, hg)| Sample::new(hg, mask_ratio, mix(seed, i as u64), None))
        .collect();
    sample_atom_accuracy(model, &samples)
}

/// Fraction of masked atoms in `samples` whose element is the arg-max of
/// the atom-type head.
pub fn sample_atom_accuracy<T: Real>(model: &Model<T>, samples: &[Sample<T>]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for s in samples {
        let f = encode(&s.masked.graph, &model.gnn);
        let logits = f.node_mat.dot(&model.heads.at_w) + &model.heads.at_b;
        for &(v, class) in &s.targets.atoms {
            let row = logits.index_axis(Axis(0), v);
            let pred = row
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |best, (k, &x)| {
                    if x > best.1 {
                        (k, x)
                    } else {
                        best
                    }
                })
                .0;
            hit += usize::from(pred == class);
            total += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

pub fn save_checkpoint(model: &Model<f32>, path: &Path) -> Result<(), ParamFileError> {
    checkpoint_file(model).save(path)
}

pub(crate) fn checkpoint_file(model: &Model<f32>) -> ParamFile {
    ParamFile::from_params(
        CHECKPOINT_MAGIC,
        model.gnn.dims.d,
        model.gnn.dims.layers,
        model,
    )
}

/// Reads a checkpoint; `hidden` and `d_text` are taken from block shapes.
pub fn load_checkpoint(path: &Path) -> Result<Model<f32>, ParamFileError> {
    let file = ParamFile::load(path, CHECKPOINT_MAGIC)?;
    model_from_file(&file)
}

pub(crate) fn model_from_file(file: &ParamFile) -> Result<Model<f32>, ParamFileError> {
    let d = file.d_gnn as usize;
    let layers = file.layers as usize;
    let hidden = match file.block("gnn.layer0.w1") {
        Some(b) if b.shape.len() == 2 => b.shape[1],
        Some(_) => return Err(ParamFileError::Mismatch("gnn.layer0.w1".into())),
        None => 2 * d,
    };
    let d_text = match file.block("heads.text_map") {
        Some(b) if b.shape.len() == 2 => b.shape[1],
        _ => return Err(ParamFileError::Mismatch("heads.text_map".into())),
    };
    let mut model = Model::<f32>::init(0, GnnDims { d, layers, hidden }, d_text);
    file.load_into(&mut model)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierseg::{segment, SimpleBrics};
    use crate::molgraph::parse_smiles;

    fn items() -> Vec<TrainItem> {
        [
            "CCc1ccccc1",
            "CC(=O)Oc1ccccc1C(=O)O",
            "CCN(CC)CC",
            "OCC1CCCCC1",
        ]
        .iter()
        .map(|s| TrainItem {
            graph: segment(&parse_smiles(s).unwrap(), &SimpleBrics),
            text: None,
        })
        .collect()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            d_gnn: 8,
            layers: 2,
            batch_size: 2,
            epochs: 2,
            weights: super::super::LossWeights {
                contrastive: 0.0,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn zero_lr_keeps_parameters() {
        let cfg = TrainConfig {
            lr: 0.0,
            ..small_cfg()
        };
        let out = train(&items(), &cfg, |_, _| {}).unwrap();
        assert_eq!(out.steps, 4);
        assert_eq!(
            out.checkpoint.model,
            Model::init(cfg.seed, cfg.dims(), cfg.d_text)
        );
    }

    #[test]
    fn seeded_runs_are_identical() {
        let cfg = small_cfg();
        let mut log_a = Vec::new();
        let a = train(&items(), &cfg, |_, r| log_a.push(*r)).unwrap();
        let mut log_b = Vec::new();
        let b = train(&items(), &cfg, |_, r| log_b.push(*r)).unwrap();
        assert_eq!(a.checkpoint.model, b.checkpoint.model);
        assert_eq!(log_a, log_b);
        assert_eq!(
            checkpoint_file(&a.checkpoint.model).to_bytes(),
            checkpoint_file(&b.checkpoint.model).to_bytes()
        );
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = small_cfg();
        let model = train(&items(), &cfg, |_, _| {}).unwrap().checkpoint.model;
        let file = checkpoint_file(&model);
        let back =
            model_from_file(&ParamFile::from_bytes(&file.to_bytes(), CHECKPOINT_MAGIC).unwrap())
                .unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn missing_text_is_rejected() {
        let cfg = TrainConfig {
            weights: Default::default(),
            ..small_cfg()
        };
        assert_eq!(
            train(&items(), &cfg, |_, _| {}).unwrap_err(),
            PretrainError::MissingText(0)
        );
    }
}
