//! File formats: the binary container used for checkpoints and tensors,
//! tab-separated tables, `key = value` configs and run manifests.

mod checkpoint;
mod container;
mod kv;
mod manifest;
mod tables;
mod tensor_file;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, CheckpointMeta, ForestLayout, ParamLayout, CHECKPOINT_SCHEMA, NODE_WIDTH};
pub use container::{read_container, write_container, CONTAINER_VERSION, MAGIC};
pub use kv::KvConfig;
pub use manifest::{sha256_hex, FileDigest, RunManifest, StageTiming, MANIFEST_SCHEMA};
pub use tables::{
    read_events, read_patients, table_rows, write_events, write_patients, EVENTS_SCHEMA, EVENT_COLUMNS, PATIENTS_SCHEMA,
    PATIENT_COLUMNS,
};
pub use tensor_file::{decode_tensor, encode_tensor, TensorMeta, TENSOR_SCHEMA};
