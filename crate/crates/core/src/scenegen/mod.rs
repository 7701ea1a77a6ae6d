//! Synthetic depth scenes: pose sampling, z-buffer rendering, visibility
//! annotation, augmentations and missing-depth interpolation.

mod augment;
mod dataset;
mod image;
mod render;
mod sample;

pub use augment::{augment, interpolate_missing, AugmentParams};
pub use dataset::{
    dataset_scene, load_scene, scene_rng, write_dataset, DatasetManifest, LoadedScene,
    ManifestEntry, MANIFEST_FILE,
};
pub use image::{DepthImage, InstanceMap, IMAGE_FORMAT_VERSION, MISSING};
pub use render::{
    fronto_parallel_rect, render, render_with_background, silhouette_pixels, visibilities,
    visibility, SceneInstance,
};
pub use sample::{generate_scene, sample_scene, GeneratedScene, SceneConfig, REJECTION_BUDGET};
