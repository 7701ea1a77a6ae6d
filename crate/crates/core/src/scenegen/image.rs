//! Depth images, instance maps and their binary files.
//!
//! Both files share a header: 4-byte magic (`DPTH` or `INST`), then `u32`
//! version, `u32` width, `u32` height, `f32` near, `f32` far, all little
//! endian. Depth pixels follow as row-major `f32` meters with 0 marking
//! missing depth; instance maps store row-major `u16` labels (0 = background,
//! `n` = instance `n - 1`).

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gridcodec::{write_atomic, CameraModel};

pub const IMAGE_FORMAT_VERSION: u32 = 1;
const DEPTH_MAGIC: &[u8; 4] = b"DPTH";
const INSTANCE_MAGIC: &[u8; 4] = b"INST";

/// Marks a pixel without a depth measurement.
pub const MISSING: f64 = 0.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub near: f64,
    pub far: f64,
    pub data: Vec<f64>,
}

impl DepthImage {
    pub fn empty(camera: &CameraModel) -> Self {
        Self::filled(camera, MISSING)
    }

    pub fn filled(camera: &CameraModel, value: f64) -> Self {
        Self {
            width: camera.width as usize,
            height: camera.height as usize,
            near: camera.near,
            far: camera.far,
            data: vec![value; camera.pixel_count()],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn is_missing(&self, index: usize) -> bool {
        self.data[index] == MISSING
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d != MISSING).count()
    }

    /// Depth mapped to `[0, 1]` between the clipping planes; missing pixels stay 0.
    pub fn normalized(&self) -> Vec<f64> {
        let span = self.far - self.near;
        self.data
            .iter()
            .map(|&d| if d == MISSING { 0.0 } else { (d - self.near) / span })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = header(DEPTH_MAGIC, self.width, self.height, self.near, self.far);
        out.reserve(self.data.len() * 4);
        for d in &self.data {
            out.extend_from_slice(&(*d as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (width, height, near, far, mut body) = parse_header(bytes, DEPTH_MAGIC)?;
        let mut data = Vec::with_capacity(width * height);
        let mut word = [0u8; 4];
        for _ in 0..width * height {
            body.read_exact(&mut word)
                .map_err(|_| Error::Format("truncated depth image".into()))?;
            data.push(f64::from(f32::from_le_bytes(word)));
        }
        Ok(Self {
            width,
            height,
            near,
            far,
            data,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u16>,
}

impl InstanceMap {
    pub fn empty(camera: &CameraModel) -> Self {
        Self {
            width: camera.width as usize,
            height: camera.height as usize,
            labels: vec![0; camera.pixel_count()],
        }
    }

    /// Pixels owned by instance `index` (label `index + 1`).
    pub fn count(&self, index: usize) -> usize {
        let label = index + 1;
        self.labels.iter().filter(|&&l| l as usize == label).count()
    }

    pub fn to_bytes(&self, camera: &CameraModel) -> Vec<u8> {
        let mut out = header(INSTANCE_MAGIC, self.width, self.height, camera.near, camera.far);
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (width, height, _, _, mut body) = parse_header(bytes, INSTANCE_MAGIC)?;
        let mut labels = Vec::with_capacity(width * height);
        let mut word = [0u8; 2];
        for _ in 0..width * height {
            body.read_exact(&mut word)
                .map_err(|_| Error::Format("truncated instance map".into()))?;
            labels.push(u16::from_le_bytes(word));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>, camera: &CameraModel) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_bytes(camera))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn header(magic: &[u8; 4], width: usize, height: usize, near: f64, far: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(24);
    out.extend_from_slice(magic);
    out.extend_from_slice(&IMAGE_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out.extend_from_slice(&(near as f32).to_le_bytes());
    out.extend_from_slice(&(far as f32).to_le_bytes());
    out
}

fn parse_header<'a>(bytes: &'a [u8], magic: &[u8; 4]) -> Result<(usize, usize, f64, f64, &'a [u8])> {
    if bytes.len() < 24 {
        return Err(Error::Format("image header is truncated".into()));
    }
    if &bytes[..4] != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(magic)
        )));
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    let version = u32::from_le_bytes(word(4));
    if version != IMAGE_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported image version {version}")));
    }
    let width = u32::from_le_bytes(word(8)) as usize;
    let height = u32::from_le_bytes(word(12)) as usize;
    let near = f64::from(f32::from_le_bytes(word(16)));
    let far = f64::from(f32::from_le_bytes(word(20)));
    Ok((width, height, near, far, &bytes[24..]))
}
