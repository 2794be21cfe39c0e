//! The `.tbm` container: `TBM1`, nx/ny/nz as little-endian u32, dx/dy/dz as
//! little-endian f32, then one {0,1} byte per voxel, x fastest.

use std::fs;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};

use super::mask::{Spacing, VoxelMask};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TBM1";
const HEADER_LEN: usize = 4 + 12 + 12;

pub fn encode(mask: &VoxelMask) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + mask.total_voxels());
    out.extend_from_slice(MAGIC);
    let mut buf = [0u8; 4];
    for d in mask.dims() {
        LittleEndian::write_u32(&mut buf, d as u32);
        out.extend_from_slice(&buf);
    }
    for s in mask.spacing().as_array() {
        LittleEndian::write_f32(&mut buf, s as f32);
        out.extend_from_slice(&buf);
    }
    out.extend(mask.data().iter().map(|&v| v as u8));
    out
}

/// Payload bytes other than 0 and 1 are binarized against `threshold` like any
/// other intensity.
pub fn decode(bytes: &[u8], threshold: f64) -> Result<VoxelMask> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::MalformedHeader("missing TBM1 magic".into()));
    }
    let dims = [
        LittleEndian::read_u32(&bytes[4..]) as usize,
        LittleEndian::read_u32(&bytes[8..]) as usize,
        LittleEndian::read_u32(&bytes[12..]) as usize,
    ];
    let spacing = Spacing::new(
        LittleEndian::read_f32(&bytes[16..]) as f64,
        LittleEndian::read_f32(&bytes[20..]) as f64,
        LittleEndian::read_f32(&bytes[24..]) as f64,
    )?;
    let payload = &bytes[HEADER_LEN..];
    let expected = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or(Error::InvalidDims(dims))?;
    if payload.len() != expected {
        return Err(Error::PayloadMismatch {
            expected,
            actual: payload.len(),
        });
    }
    VoxelMask::from_values(dims, payload, threshold, spacing)
}

pub fn read(path: &Path, threshold: f64) -> Result<VoxelMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, threshold)
}

pub fn write(path: &Path, mask: &VoxelMask) -> Result<()> {
    fs::write(path, encode(mask)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_bit_exact() {
        let m = VoxelMask::from_bools(
            [2, 1, 1],
            vec![false, true],
            Spacing::new(0.5, 0.75, 1.0).unwrap(),
        )
        .unwrap();
        let b = encode(&m);
        assert_eq!(&b[..4], b"TBM1");
        assert_eq!(&b[4..8], &2u32.to_le_bytes());
        assert_eq!(&b[16..20], &0.5f32.to_le_bytes());
        assert_eq!(&b[28..], &[0, 1]);
        assert_eq!(decode(&b, 0.0).unwrap(), m);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let m = VoxelMask::empty([2, 2, 2], Spacing::unit()).unwrap();
        let mut b = encode(&m);
        b.pop();
        assert!(matches!(decode(&b, 0.0), Err(Error::PayloadMismatch { .. })));
        assert!(decode(b"TBM0", 0.0).is_err());
    }
}
