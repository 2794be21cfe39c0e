//! Binary segmentation volumes: in-memory representation, file formats and
//! voxel confusion counts.

mod mask;
pub mod nifti;
pub mod raw;

use std::path::Path;

pub use mask::{confusion, shape_check, ConfusionCounts, ShapeCheck, Spacing, VoxelMask, SPACING_TOLERANCE_MM};
pub use nifti::Datatype;

use crate::error::Result;

/// Default binarization threshold: any value > 0 is foreground.
pub const DEFAULT_THRESHOLD: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeFormat {
    Nifti,
    Raw,
}

impl VolumeFormat {
    pub fn from_path(path: &Path) -> VolumeFormat {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_ascii_lowercase();
        if name.ends_with(".tbm") {
            VolumeFormat::Raw
        } else {
            VolumeFormat::Nifti
        }
    }
}

/// Loads a mask from `.nii`, `.nii.gz`, `.hdr`/`.img` or `.tbm`.
pub fn load_mask(path: &Path, threshold: f64) -> Result<VoxelMask> {
    match VolumeFormat::from_path(path) {
        VolumeFormat::Raw => raw::read(path, threshold),
        VolumeFormat::Nifti => nifti::read(path, threshold),
    }
}

/// Saves a mask; NIfTI outputs are written as uint8.
pub fn save_mask(path: &Path, mask: &VoxelMask) -> Result<()> {
    match VolumeFormat::from_path(path) {
        VolumeFormat::Raw => raw::write(path, mask),
        VolumeFormat::Nifti => nifti::write(path, mask, Datatype::U8),
    }
}

/// Strips the volume extension from a file name: `case_001.nii.gz` -> `case_001`.
pub fn case_stem(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    let lower = name.to_ascii_lowercase();
    for ext in [".nii.gz", ".nii", ".tbm", ".hdr.gz", ".hdr"] {
        if lower.ends_with(ext) {
            return Some(name[..name.len() - ext.len()].to_string());
        }
    }
    None
}
