//! File formats shared with other tools.
//!
//! * traces: JSON Lines, one labelled trace per line, plus a sibling
//!   `<stem>.manifest.json`;
//! * tensors: `VCFP` binary matrices of little-endian `f32` with a sibling
//!   `u32` label file;
//! * probabilities: CSV with a `row,class_0..` header;
//! * models: versioned JSON documents with parameters as decimal strings.

mod models;
mod probs;
mod tensors;
mod traces;

pub use models::{model_from_document, model_to_document, read_model, write_model, ModelDocument};
pub use probs::{import_probabilities, write_probabilities};
pub use tensors::{
    export_tensors, read_labels, read_tensor_file, write_labels, write_tensor_file, TensorFile,
    TENSOR_HEADER_LEN, TENSOR_MAGIC, TENSOR_VERSION,
};
pub use traces::{
    manifest_path, read_dataset, read_obfuscated, write_dataset, write_obfuscated, DatasetManifest,
    TRACE_FORMAT_VERSION,
};
