//! Triangle meshes in the body frame, their binary file format, and a few
//! primitive shapes with known symmetry used as fixtures.
//!
//! Binary layout (little endian): `u32` triangle count, then 9 `f32` per
//! triangle (three vertices, xyz each, meters).

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Triangle = [Vector3<f64>; 3];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub triangles: Vec<Triangle>,
}

impl Mesh {
    pub fn new(triangles: Vec<Triangle>) -> Self {
        Self { triangles }
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.triangles.iter().flat_map(|t| t.iter())
    }

    /// Largest distance of any vertex from the body origin.
    pub fn max_radius(&self) -> f64 {
        self.vertices().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Mesh {
        Mesh::new(
            self.triangles
                .iter()
                .map(|t| [t[0] * factor, t[1] * factor, t[2] * factor])
                .collect(),
        )
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let count = u32::try_from(self.triangles.len())
            .map_err(|_| Error::Format("mesh has more than u32::MAX triangles".into()))?;
        w.write_all(&count.to_le_bytes())?;
        for v in self.vertices() {
            for c in v.iter() {
                w.write_all(&(*c as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Mesh> {
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let count = u32::from_le_bytes(word) as usize;
        let mut triangles = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let mut tri = [Vector3::zeros(); 3];
            for vertex in tri.iter_mut() {
                for c in vertex.iter_mut() {
                    r.read_exact(&mut word).map_err(|e| {
                        Error::Format(format!("truncated mesh ({count} triangles declared): {e}"))
                    })?;
                    *c = f64::from(f32::from_le_bytes(word));
                }
            }
            triangles.push(tri);
        }
        Ok(Mesh::new(triangles))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
        let bytes = std::fs::read(path)?;
        Mesh::read_from(bytes.as_slice())
    }
}

/// Parametric primitive shapes. All are centered on the body origin with
/// their symmetry axis (if any) along body z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// Subdivided icosahedron projected onto a sphere.
    Icosphere { radius: f64, subdivisions: u32 },
    /// Axis-aligned box with the given full extents.
    Box { size: [f64; 3] },
    /// Closed cylinder along z, centered on the origin.
    Cylinder {
        radius: f64,
        height: f64,
        segments: u32,
    },
    /// Closed cone along z; base at `-height/2`, apex at `+height/2`.
    Cone {
        radius: f64,
        height: f64,
        segments: u32,
    },
    /// Regular `sides`-gon prism along z with a pyramid cap on top; cyclic of
    /// order `sides` about z.
    CappedPrism {
        sides: u32,
        radius: f64,
        height: f64,
        cap: f64,
    },
    /// Square plate of side `size` in the body xy plane, facing -z.
    Quad { size: f64 },
}

impl Primitive {
    pub fn mesh(&self) -> Mesh {
        match *self {
            Primitive::Icosphere {
                radius,
                subdivisions,
            } => icosphere(radius, subdivisions),
            Primitive::Box { size } => box_mesh(size),
            Primitive::Cylinder {
                radius,
                height,
                segments,
            } => frustum(radius, radius, height, segments),
            Primitive::Cone {
                radius,
                height,
                segments,
            } => frustum(radius, 0.0, height, segments),
            Primitive::CappedPrism {
                sides,
                radius,
                height,
                cap,
            } => capped_prism(sides, radius, height, cap),
            Primitive::Quad { size } => quad(size),
        }
    }
}

pub fn quad(size: f64) -> Mesh {
    let h = size / 2.0;
    let a = Vector3::new(-h, -h, 0.0);
    let b = Vector3::new(h, -h, 0.0);
    let c = Vector3::new(h, h, 0.0);
    let d = Vector3::new(-h, h, 0.0);
    Mesh::new(vec![[a, b, c], [a, c, d]])
}

pub fn box_mesh(size: [f64; 3]) -> Mesh {
    let [hx, hy, hz] = size.map(|s| s / 2.0);
    let v = |x: f64, y: f64, z: f64| Vector3::new(x * hx, y * hy, z * hz);
    let faces = [
        [v(-1., -1., -1.), v(1., -1., -1.), v(1., 1., -1.), v(-1., 1., -1.)],
        [v(-1., -1., 1.), v(-1., 1., 1.), v(1., 1., 1.), v(1., -1., 1.)],
        [v(-1., -1., -1.), v(-1., -1., 1.), v(1., -1., 1.), v(1., -1., -1.)],
        [v(-1., 1., -1.), v(1., 1., -1.), v(1., 1., 1.), v(-1., 1., 1.)],
        [v(-1., -1., -1.), v(-1., 1., -1.), v(-1., 1., 1.), v(-1., -1., 1.)],
        [v(1., -1., -1.), v(1., -1., 1.), v(1., 1., 1.), v(1., 1., -1.)],
    ];
    let mut triangles = Vec::with_capacity(12);
    for [a, b, c, d] in faces {
        triangles.push([a, b, c]);
        triangles.push([a, c, d]);
    }
    Mesh::new(triangles)
}

/// Closed truncated cone along z; `top_radius = 0` gives a cone.
fn frustum(bottom_radius: f64, top_radius: f64, height: f64, segments: u32) -> Mesh {
    let n = segments.max(3);
    let zb = -height / 2.0;
    let zt = height / 2.0;
    let ring = |r: f64, z: f64, i: u32| {
        let a = TAU * f64::from(i % n) / f64::from(n);
        Vector3::new(r * a.cos(), r * a.sin(), z)
    };
    let bottom_center = Vector3::new(0.0, 0.0, zb);
    let top_center = Vector3::new(0.0, 0.0, zt);
    let mut triangles = Vec::new();
    for i in 0..n {
        let b0 = ring(bottom_radius, zb, i);
        let b1 = ring(bottom_radius, zb, i + 1);
        triangles.push([bottom_center, b1, b0]);
        if top_radius > 0.0 {
            let t0 = ring(top_radius, zt, i);
            let t1 = ring(top_radius, zt, i + 1);
            triangles.push([b0, b1, t1]);
            triangles.push([b0, t1, t0]);
            triangles.push([top_center, t0, t1]);
        } else {
            triangles.push([b0, b1, top_center]);
        }
    }
    Mesh::new(triangles)
}

fn capped_prism(sides: u32, radius: f64, height: f64, cap: f64) -> Mesh {
    let n = sides.max(3);
    let total = height + cap;
    let zb = -total / 2.0;
    let zt = zb + height;
    let apex = Vector3::new(0.0, 0.0, zb + total);
    let bottom_center = Vector3::new(0.0, 0.0, zb);
    let ring = |z: f64, i: u32| {
        let a = TAU * f64::from(i % n) / f64::from(n);
        Vector3::new(radius * a.cos(), radius * a.sin(), z)
    };
    let mut triangles = Vec::new();
    for i in 0..n {
        let b0 = ring(zb, i);
        let b1 = ring(zb, i + 1);
        let t0 = ring(zt, i);
        let t1 = ring(zt, i + 1);
        triangles.push([bottom_center, b1, b0]);
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
        triangles.push([t0, t1, apex]);
    }
    Mesh::new(triangles)
}

pub fn icosphere(radius: f64, subdivisions: u32) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let base = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .map(|[x, y, z]| Vector3::new(x, y, z).normalize());
    const FACES: [[usize; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut tris: Vec<Triangle> = FACES
        .iter()
        .map(|f| [base[f[0]], base[f[1]], base[f[2]]])
        .collect();
    for _ in 0..subdivisions {
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = ((a + b) / 2.0).normalize();
            let bc = ((b + c) / 2.0).normalize();
            let ca = ((c + a) / 2.0).normalize();
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    Mesh::new(
        tris.into_iter()
            .map(|t| t.map(|v| v * radius))
            .collect(),
    )
}

/// Largest angular radius (radians) of any icosphere face as seen from the
/// center; bounds how far the faceted surface sinks below the true sphere.
pub fn icosphere_max_face_angle(subdivisions: u32) -> f64 {
    icosphere(1.0, subdivisions)
        .triangles
        .iter()
        .map(|t| {
            let centroid = ((t[0] + t[1] + t[2]) / 3.0).normalize();
            t.iter()
                .map(|v| centroid.dot(v).clamp(-1.0, 1.0).acos())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
        .min(PI)
}
