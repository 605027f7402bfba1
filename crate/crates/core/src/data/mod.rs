//! Datasets around the numeric core: feature manifests, seeded train/test
//! splits, and synthetic fixtures standing in for upstream backbones.

mod manifest;
mod split;
mod synth;

pub use manifest::{preprocess_contract, DatasetManifest, Payload, Record, IMAGE_SIZE};
pub use split::{split_dataset, split_indices, SplitSpec};
pub use synth::{synth_features, synth_predictions, SynthSpec};
