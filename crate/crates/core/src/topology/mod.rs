//! Voxel-grid topology with 26-connected foreground and 6-connected
//! background: component labeling, largest-component extraction, curve
//! thinning and branch decomposition.

mod components;
pub mod neighborhood;
mod skeleton;
pub mod thinning;

pub use components::{label_components, largest_component, ComponentLabeling};
pub use skeleton::{
    parse_branches, skeletonize, tree_length, Branch, BranchExport, SkeletonExport, SkeletonGraph,
    SkeletonSummary, Terminal,
};
pub use thinning::{thin, thin_mask, Border};

use crate::volume::VoxelMask;

/// Skeletonize and parse in one step using the mask's own spacing.
pub fn centerline(mask: &VoxelMask, min_branch_mm: f64) -> SkeletonGraph {
    parse_branches(&skeletonize(mask), mask.spacing(), min_branch_mm)
}

/// True when some 2x2x2 cube is entirely foreground.
pub fn has_solid_2x2x2(mask: &VoxelMask) -> bool {
    let [nx, ny, nz] = mask.dims();
    if nx < 2 || ny < 2 || nz < 2 {
        return false;
    }
    for z in 0..nz - 1 {
        for y in 0..ny - 1 {
            for x in 0..nx - 1 {
                let all = (0..8).all(|k| mask.get(x + (k & 1), y + (k >> 1 & 1), z + (k >> 2)));
                if all {
                    return true;
                }
            }
        }
    }
    false
}
