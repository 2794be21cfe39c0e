//! Curve thinning by iterative removal of simple border points, after Lee,
//! Kashyap and Chu (1994).
//!
//! Each iteration sweeps six border directions in the fixed order
//! U (+z), D (-z), N (+y), S (-y), E (+x), W (-x). A sweep first collects every
//! voxel whose neighbor in that direction is background and that passes
//! [`is_deletable`]; the candidates are then re-checked and removed one at a
//! time in scan order, so parallel deletion never breaks topology. End points
//! are never removed. Iteration stops when a full round deletes nothing.

use rayon::prelude::*;

use super::neighborhood::{bit, is_deletable};
use crate::volume::VoxelMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Border {
    Up,
    Down,
    North,
    South,
    East,
    West,
}

impl Border {
    pub const SWEEP: [Border; 6] = [
        Border::Up,
        Border::Down,
        Border::North,
        Border::South,
        Border::East,
        Border::West,
    ];

    fn offset(self) -> [i32; 3] {
        match self {
            Border::Up => [0, 0, 1],
            Border::Down => [0, 0, -1],
            Border::North => [0, 1, 0],
            Border::South => [0, -1, 0],
            Border::East => [1, 0, 0],
            Border::West => [-1, 0, 0],
        }
    }
}

/// Grid with a one-voxel background frame so neighborhood reads never leave
/// the buffer.
struct PaddedGrid {
    data: Vec<u8>,
    dims: [usize; 3],
    offsets: [isize; 27],
}

impl PaddedGrid {
    fn new(mask: &VoxelMask) -> Self {
        let [nx, ny, nz] = mask.dims();
        let dims = [nx + 2, ny + 2, nz + 2];
        let mut data = vec![0u8; dims[0] * dims[1] * dims[2]];
        let src = mask.data();
        for z in 0..nz {
            for y in 0..ny {
                let from = nx * (y + ny * z);
                let to = 1 + dims[0] * ((y + 1) + dims[1] * (z + 1));
                for x in 0..nx {
                    data[to + x] = src[from + x] as u8;
                }
            }
        }
        let sy = dims[0] as isize;
        let sz = (dims[0] * dims[1]) as isize;
        let mut offsets = [0isize; 27];
        for (k, o) in offsets.iter_mut().enumerate() {
            let d = super::neighborhood::offset_of(k as u32);
            *o = d[0] as isize + d[1] as isize * sy + d[2] as isize * sz;
        }
        PaddedGrid {
            data,
            dims,
            offsets,
        }
    }

    #[inline]
    fn neighborhood(&self, p: usize) -> u32 {
        let mut n = 0u32;
        for (k, &o) in self.offsets.iter().enumerate() {
            n |= (self.data[(p as isize + o) as usize] as u32) << k;
        }
        n
    }

    fn to_original(&self, p: usize) -> usize {
        let [px, py, _] = self.dims;
        let x = p % px - 1;
        let y = (p / px) % py - 1;
        let z = p / (px * py) - 1;
        let (nx, ny) = (px - 2, py - 2);
        x + nx * (y + ny * z)
    }
}

const CHUNK: usize = 1 << 14;

/// Thins `mask` to a one-voxel-wide centerline. Returns the surviving voxels
/// as sorted linear indices of the original grid.
pub fn thin(mask: &VoxelMask) -> Vec<usize> {
    let mut grid = PaddedGrid::new(mask);
    // scan order of the padded grid matches the original x-fastest order
    let mut active: Vec<usize> = grid
        .data
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| (v != 0).then_some(i))
        .collect();

    let border_offsets: Vec<isize> = Border::SWEEP
        .iter()
        .map(|b| {
            let o = b.offset();
            grid.offsets[bit(o[0], o[1], o[2]) as usize]
        })
        .collect();

    loop {
        let mut deleted_any = false;
        for &border in &border_offsets {
            let g = &grid;
            let candidates: Vec<usize> = active
                .par_chunks(CHUNK)
                .map(|chunk| {
                    chunk
                        .iter()
                        .copied()
                        .filter(|&p| {
                            g.data[p] != 0
                                && g.data[(p as isize + border) as usize] == 0
                                && is_deletable(g.neighborhood(p))
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
                .concat();

            for p in candidates {
                if is_deletable(grid.neighborhood(p)) {
                    grid.data[p] = 0;
                    deleted_any = true;
                }
            }
        }
        if !deleted_any {
            break;
        }
        active.retain(|&p| grid.data[p] != 0);
    }

    active.iter().map(|&p| grid.to_original(p)).collect()
}

/// Thinning result as a mask on the input grid.
pub fn thin_mask(mask: &VoxelMask) -> VoxelMask {
    let mut out = VoxelMask::empty(mask.dims(), mask.spacing()).expect("valid dims");
    let data = out.data_mut();
    for i in thin(mask) {
        data[i] = true;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Spacing;

    #[test]
    fn single_voxel_survives() {
        let mut m = VoxelMask::empty([3, 3, 3], Spacing::unit()).unwrap();
        m.set(1, 1, 1, true);
        assert_eq!(thin(&m), vec![13]);
    }

    #[test]
    fn thin_curve_is_unchanged() {
        let mut m = VoxelMask::empty([8, 8, 8], Spacing::unit()).unwrap();
        let path = [[1, 1, 1], [2, 2, 1], [3, 2, 2], [4, 3, 3], [4, 4, 4], [5, 5, 4], [6, 5, 5]];
        for p in path {
            m.set(p[0], p[1], p[2], true);
        }
        assert_eq!(thin_mask(&m), m);
    }

    #[test]
    fn solid_cube_shrinks_to_a_short_curve() {
        let mut m = VoxelMask::empty([5, 5, 5], Spacing::unit()).unwrap();
        for z in 1..4 {
            for y in 1..4 {
                for x in 1..4 {
                    m.set(x, y, z, true);
                }
            }
        }
        let s = thin_mask(&m);
        assert!((1..=3).contains(&s.count()), "{:?}", s.foreground_indices().collect::<Vec<_>>());
        assert_eq!(crate::topology::label_components(&s).count(), 1);
        assert!(!crate::topology::has_solid_2x2x2(&s));
    }
}
