//! Writes a mask as gzipped NIfTI and as raw `.tbm`, then reads both back.

use treeval::volume::{nifti, Datatype};
use treeval::{load_mask, save_mask, Spacing, VoxelMask};

fn main() -> treeval::Result<()> {
    let mut mask = VoxelMask::empty([32, 24, 16], Spacing::new(0.7, 0.7, 0.5)?)?;
    for z in 4..12 {
        for y in 8..16 {
            for x in 10..22 {
                mask.set(x, y, z, true);
            }
        }
    }

    let dir = std::env::temp_dir().join("treeval_volume_io");
    std::fs::create_dir_all(&dir).map_err(|e| treeval::Error::io(&dir, e))?;
    let gz = dir.join("box.nii.gz");
    let tbm = dir.join("box.tbm");
    save_mask(&gz, &mask)?;
    save_mask(&tbm, &mask)?;

    for path in [&gz, &tbm] {
        let back = load_mask(path, 0.5)?;
        println!(
            "{}: dims {:?}, {} foreground, voxels identical {}, spacing off by {:.1e} (stored as f32)",
            path.display(),
            back.dims(),
            back.count(),
            back.data() == mask.data(),
            back.spacing().max_abs_diff(&mask.spacing())
        );
    }

    // float payloads are binarized by the threshold
    let bytes = nifti::encode(&mask, Datatype::F32);
    let header = nifti::NiftiHeader::parse(&bytes)?;
    println!("f32 header: datatype {:?}, {} bytes uncompressed", header.datatype()?, bytes.len());
    Ok(())
}
