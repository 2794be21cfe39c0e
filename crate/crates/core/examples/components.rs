//! Labels 26-connected components and keeps the largest.

use treeval::{label_components, largest_component, Spacing, VoxelMask};

fn main() -> treeval::Result<()> {
    let mut mask = VoxelMask::empty([20, 20, 20], Spacing::unit())?;
    // a diagonal staircase is one component under 26-connectivity
    for i in 0..12 {
        mask.set(i, i, i, true);
    }
    for x in 14..19 {
        for y in 2..5 {
            mask.set(x, y, 2, true);
        }
    }
    mask.set(2, 17, 17, true);

    let labeling = label_components(&mask);
    println!("{} components, sizes {:?}", labeling.count(), labeling.component_sizes);
    let lcc = largest_component(&mask);
    println!("largest keeps {} of {} voxels", lcc.count(), mask.count());
    Ok(())
}
