//! Rotations, Euler conventions, proper symmetry groups, pose representatives
//! and the symmetry-aware pose distance.

mod distance;
mod mesh;
mod object;
mod pose;
mod rotation;
mod symmetry;

pub use distance::{
    accept, origin_distance, pose_distance, representatives, rotation_representatives,
    PoseRepresentative, ACCEPT_FACTOR,
};
pub use mesh::{icosphere, icosphere_max_face_angle, quad, Mesh, Primitive, Triangle};
pub use object::{Catalog, ObjectFile, ObjectModel};
pub use pose::Pose;
pub use rotation::{
    euler_partials, euler_to_matrix, matrix_to_euler, EulerAngles, RotationMatrix,
    GIMBAL_TOLERANCE, ROTATION_TOLERANCE,
};
pub use symmetry::{SymmetryClass, SymmetrySpec};

use rand::Rng;

/// Uniformly distributed random rotation (Shoemake's subgroup algorithm).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    use std::f64::consts::TAU;
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen::<f64>() * TAU;
    let u3: f64 = rng.gen::<f64>() * TAU;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    RotationMatrix::from_quaternion(a * u2.sin(), a * u2.cos(), b * u3.sin(), b * u3.cos())
}
