//! Encoding of scene ground truth into the `S x S x C` target tensor and
//! decoding of predicted tensors into 6D pose hypotheses.

mod camera;
mod codec;
mod files;
mod tensor;

pub use camera::{CameraModel, Projection};
pub use codec::{
    angles_to_unit, cell_of, decode, decode_cell, encode, unit_angle_scales, unit_to_angles,
    Cell, CellAssignment, DetectionHypothesis, EncodeReport, GroundTruthInstance,
    SceneGroundTruth,
};
pub use files::{
    write_atomic, DetectionRecord, InstanceRecord, PredictionFile, SceneFile, SCHEMA_VERSION,
};
pub(crate) use files::{read_json, write_json};
pub use tensor::{channel, GridTensor};
