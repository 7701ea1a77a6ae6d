//! Datasets of generated scenes on disk.
//!
//! A dataset directory holds, per scene, a depth image (`.depth`), an
//! instance map (`.inst`) and a ground-truth file (`.json`), plus a
//! `manifest.json` listing the scene files relative to the directory.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{augment, generate_scene, AugmentParams, DepthImage, GeneratedScene, SceneConfig};
use crate::error::{Error, Result};
use crate::geometry::ObjectModel;
use crate::gridcodec::{read_json, write_json, CameraModel, SceneFile, SCHEMA_VERSION};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub depth: String,
    pub instances: String,
    pub ground_truth: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub object_id: String,
    pub scenes: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let manifest: DatasetManifest = read_json(dir.as_ref().join(MANIFEST_FILE))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unsupported manifest schema_version {}",
                manifest.schema_version
            )));
        }
        Ok(manifest)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        write_json(dir.as_ref().join(MANIFEST_FILE), self)
    }
}

/// Independent, reproducible random stream for scene `index`.
pub fn scene_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Generates scene `index` of a dataset, applying augmentations to the depth image.
pub fn dataset_scene(
    config: &SceneConfig,
    augment_params: &AugmentParams,
    object: &ObjectModel,
    camera: &CameraModel,
    seed: u64,
    index: usize,
) -> Result<GeneratedScene> {
    let mut rng = scene_rng(seed, index as u64);
    let mut scene = generate_scene(config, object, camera, &mut rng)?;
    if *augment_params != AugmentParams::default() {
        scene.depth = augment(&scene.depth, augment_params, &mut rng)?;
    }
    Ok(scene)
}

/// Writes `count` scenes into `dir` and returns the manifest.
pub fn write_dataset(
    dir: &Path,
    config: &SceneConfig,
    augment_params: &AugmentParams,
    object: &ObjectModel,
    camera: &CameraModel,
    count: usize,
    seed: u64,
) -> Result<DatasetManifest> {
    config.validate(camera, object)?;
    augment_params.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        object_id: object.id.clone(),
        scenes: Vec::with_capacity(count),
    };
    for index in 0..count {
        let scene = dataset_scene(config, augment_params, object, camera, seed, index)?;
        let name = format!("scene_{index:05}");
        let entry = ManifestEntry {
            depth: format!("{name}.depth"),
            instances: format!("{name}.inst"),
            ground_truth: format!("{name}.json"),
            name,
        };
        scene.depth.save(dir.join(&entry.depth))?;
        scene.instances.save(dir.join(&entry.instances), camera)?;
        SceneFile::new(*camera, &scene.ground_truth).save(dir.join(&entry.ground_truth))?;
        manifest.scenes.push(entry);
    }
    manifest.save(dir)?;
    Ok(manifest)
}

/// A scene loaded back from a dataset directory.
#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub name: String,
    pub depth: DepthImage,
    pub scene: SceneFile,
}

pub fn load_scene(dir: &Path, entry: &ManifestEntry) -> Result<LoadedScene> {
    Ok(LoadedScene {
        name: entry.name.clone(),
        depth: DepthImage::load(dir.join(&entry.depth))?,
        scene: SceneFile::load(dir.join(&entry.ground_truth))?,
    })
}
