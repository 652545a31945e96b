//! Hierarchical molecular graphs and the pieces built on them: motif
//! segmentation, a multi-level GNN encoder with self-supervised pretraining,
//! token reduction for language-model fusion, and molecule/text metrics.

pub mod dataprep;
pub mod encoder;
pub mod featfile;
pub mod fnv;
pub mod fusion;
pub mod hierseg;
pub mod metrics;
pub mod molgraph;
pub mod numeric;
pub mod optim;
pub mod paramfile;
pub mod pretrain;
pub mod selfcheck;
