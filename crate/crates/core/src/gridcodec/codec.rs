use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::tensor::channel;
use super::{CameraModel, GridTensor};
use crate::error::{Error, Result};
use crate::geometry::{
    euler_to_matrix, matrix_to_euler, EulerAngles, ObjectModel, Pose, RotationMatrix,
    SymmetryClass,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthInstance {
    pub object_id: String,
    pub pose: Pose,
    /// Fraction of the unoccluded silhouette that is visible, in `[0, 1]`.
    pub visibility: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneGroundTruth {
    pub instances: Vec<GroundTruthInstance>,
}

/// Grid cell `(row, column)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn index(&self, size: usize) -> usize {
        self.row * size + self.col
    }
}

/// Where a projected origin lands on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellAssignment {
    Inside {
        cell: Cell,
        /// Fractional offset of the origin within the cell, both in `[0, 1)`.
        offset: (f64, f64),
    },
    OutsideImage,
}

/// Grid cell containing the projection of `origin`.
pub fn cell_of(origin: &nalgebra::Vector3<f64>, camera: &CameraModel, size: usize) -> Result<CellAssignment> {
    let p = camera.project(origin)?;
    let (w, h) = (f64::from(camera.width), f64::from(camera.height));
    if !(p.u >= 0.0 && p.u < w && p.v >= 0.0 && p.v < h) {
        return Ok(CellAssignment::OutsideImage);
    }
    let s = size as f64;
    let gu = p.u / w * s;
    let gv = p.v / h * s;
    let col = (gu.floor() as usize).min(size - 1);
    let row = (gv.floor() as usize).min(size - 1);
    let fx = (gu - col as f64).clamp(0.0, 1.0 - f64::EPSILON);
    let fy = (gv - row as f64).clamp(0.0, 1.0 - f64::EPSILON);
    Ok(CellAssignment::Inside {
        cell: Cell::new(row, col),
        offset: (fx, fy),
    })
}

/// Bounded angles mapped to `[0, 1)`; the third entry is unused for
/// revolution objects.
pub fn angles_to_unit(angles: &EulerAngles, symmetry: SymmetryClass) -> [f64; 3] {
    let a3 = match symmetry {
        SymmetryClass::Revolution => 0.0,
        s => angles.phi3 / s.phi3_range(),
    };
    [angles.phi1 / TAU, angles.phi2 / TAU, a3]
}

/// Inverse of [`angles_to_unit`]. `unit` holds 2 or 3 entries.
pub fn unit_to_angles(unit: &[f64], symmetry: SymmetryClass) -> EulerAngles {
    let phi3 = match symmetry {
        SymmetryClass::Revolution => 0.0,
        s => unit[2] * s.phi3_range(),
    };
    EulerAngles::new(unit[0] * TAU, unit[1] * TAU, phi3)
}

/// Derivative of each Euler angle with respect to its unit channel.
pub fn unit_angle_scales(symmetry: SymmetryClass) -> [f64; 3] {
    [TAU, TAU, symmetry.phi3_range()]
}

/// Instances that could not be written into the tensor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EncodeReport {
    /// `(displaced instance, cell, instance kept in that cell)`.
    pub displaced: Vec<(usize, Cell, usize)>,
    /// Instances whose origin projects outside the image.
    pub outside: Vec<usize>,
    /// Instance assigned to each occupied cell, in cell order.
    pub assigned: Vec<(Cell, usize)>,
}

impl EncodeReport {
    pub fn is_complete(&self) -> bool {
        self.displaced.is_empty() && self.outside.is_empty()
    }
}

/// Writes `scene` into an `S x S x C` target tensor.
///
/// Each occupied cell holds `p = 1`, the visibility, the origin's offset
/// within the cell, its normalized depth and the bounded, unit-scaled
/// angles. When several origins fall into one cell the most visible instance
/// wins (ties go to the lower index); the others are listed in the report.
pub fn encode(
    scene: &SceneGroundTruth,
    camera: &CameraModel,
    size: usize,
    object: &ObjectModel,
) -> Result<(GridTensor, EncodeReport)> {
    if size == 0 {
        return Err(Error::InvalidConfig("grid size must be at least 1".into()));
    }
    let mut tensor = GridTensor::zeros(size, object.channels());
    let mut report = EncodeReport::default();
    let mut owner: Vec<Option<usize>> = vec![None; size * size];
    let mut slots = Vec::with_capacity(scene.instances.len());

    for (index, inst) in scene.instances.iter().enumerate() {
        if inst.object_id != object.id {
            return Err(Error::UnknownObject(inst.object_id.clone()));
        }
        let z = inst.pose.translation.z;
        if z > 0.0 && !(camera.near..=camera.far).contains(&z) {
            return Err(Error::DepthOutOfRange {
                z,
                near: camera.near,
                far: camera.far,
            });
        }
        match cell_of(&inst.pose.translation, camera, size)? {
            CellAssignment::OutsideImage => {
                report.outside.push(index);
                slots.push(None);
            }
            CellAssignment::Inside { cell, offset } => {
                let k = cell.index(size);
                match owner[k] {
                    Some(current)
                        if scene.instances[current].visibility >= inst.visibility =>
                    {
                        report.displaced.push((index, cell, current));
                    }
                    Some(current) => {
                        report.displaced.push((current, cell, index));
                        owner[k] = Some(index);
                    }
                    None => owner[k] = Some(index),
                }
                slots.push(Some(offset));
            }
        }
    }
    // displaced entries recorded before a later takeover must name the final winner
    for entry in report.displaced.iter_mut() {
        let k = entry.1.index(size);
        entry.2 = owner[k].expect("displacement recorded for an occupied cell");
    }
    report.displaced.sort_by_key(|e| e.0);

    for (k, slot) in owner.iter().enumerate() {
        let Some(index) = *slot else { continue };
        let inst = &scene.instances[index];
        let (fx, fy) = slots[index].expect("owner has an in-image origin");
        let angles = matrix_to_euler(&inst.pose.rotation, object.symmetry);
        let unit = angles_to_unit(&angles, object.symmetry);
        let cell = tensor.cell_at_mut(k);
        cell[channel::PROB] = 1.0;
        cell[channel::VIS] = inst.visibility;
        cell[channel::X] = fx;
        cell[channel::Y] = fy;
        cell[channel::Z] = camera.normalize_depth(inst.pose.translation.z);
        let n = object.symmetry.angle_channels();
        cell[channel::A1..channel::A1 + n].copy_from_slice(&unit[..n]);
        report.assigned.push((Cell::new(k / size, k % size), index));
    }
    Ok((tensor, report))
}

/// A pose hypothesis decoded from one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionHypothesis {
    pub pose: Pose,
    pub confidence: f64,
    pub visibility: f64,
    pub cell: Cell,
}

/// Pose encoded in a cell vector.
pub fn decode_cell(
    values: &[f64],
    cell: Cell,
    size: usize,
    camera: &CameraModel,
    symmetry: SymmetryClass,
) -> Pose {
    let s = size as f64;
    let u = (cell.col as f64 + values[channel::X]) * f64::from(camera.width) / s;
    let v = (cell.row as f64 + values[channel::Y]) * f64::from(camera.height) / s;
    let depth = camera.denormalize_depth(values[channel::Z]);
    let origin = camera.unproject(u, v, depth);
    let n = symmetry.angle_channels();
    let angles = unit_to_angles(&values[channel::A1..channel::A1 + n], symmetry);
    let rotation: RotationMatrix = euler_to_matrix(angles);
    Pose::new(rotation, origin)
}

/// Hypotheses for every cell with `p >= p_min` and `v >= v_min`, in cell order.
pub fn decode(
    tensor: &GridTensor,
    camera: &CameraModel,
    object: &ObjectModel,
    p_min: f64,
    v_min: f64,
) -> Result<Vec<DetectionHypothesis>> {
    if tensor.channels() != object.channels() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} channels for `{}`", object.channels(), object.id),
            found: format!("{} channels", tensor.channels()),
        });
    }
    let size = tensor.size();
    let mut out = Vec::new();
    for k in 0..tensor.cell_count() {
        let values = tensor.cell_at(k);
        let (p, v) = (values[channel::PROB], values[channel::VIS]);
        if p >= p_min && v >= v_min {
            let cell = Cell::new(k / size, k % size);
            out.push(DetectionHypothesis {
                pose: decode_cell(values, cell, size, camera, object.symmetry),
                confidence: p,
                visibility: v,
                cell,
            });
        }
    }
    Ok(out)
}
