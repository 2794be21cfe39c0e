use crate::volume::VoxelMask;

/// 26-connected component labels. Label 0 is background; components are
/// numbered 1.. in the order their first voxel appears in an x-fastest scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub labels: Vec<u32>,
    /// `component_sizes[l - 1]` is the voxel count of label `l`.
    pub component_sizes: Vec<usize>,
}

impl ComponentLabeling {
    /// β₀, the number of components.
    pub fn count(&self) -> usize {
        self.component_sizes.len()
    }

    /// Label with the most voxels; ties go to the lowest label, which is the
    /// component holding the smallest linear index.
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(u32, usize)> = None;
        for (i, &size) in self.component_sizes.iter().enumerate() {
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((i as u32 + 1, size));
            }
        }
        best.map(|(l, _)| l)
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let ra = self.find(a);
        let rb = self.find(b);
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

// the 13 neighbors that precede a voxel in scan order
const BACKWARD: [[i64; 3]; 13] = [
    [-1, -1, -1],
    [0, -1, -1],
    [1, -1, -1],
    [-1, 0, -1],
    [0, 0, -1],
    [1, 0, -1],
    [-1, 1, -1],
    [0, 1, -1],
    [1, 1, -1],
    [-1, -1, 0],
    [0, -1, 0],
    [1, -1, 0],
    [-1, 0, 0],
];

pub fn label_components(mask: &VoxelMask) -> ComponentLabeling {
    let [nx, ny, nz] = mask.dims();
    let data = mask.data();
    let mut labels = vec![0u32; data.len()];
    let mut sets = DisjointSet { parent: vec![0] };

    let sx = 1i64;
    let sy = nx as i64;
    let sz = (nx * ny) as i64;
    for z in 0..nz {
        for y in 0..ny {
            let row = nx * (y + ny * z);
            for x in 0..nx {
                let i = row + x;
                if !data[i] {
                    continue;
                }
                let mut current = 0u32;
                for d in &BACKWARD {
                    let (qx, qy, qz) = (x as i64 + d[0], y as i64 + d[1], z as i64 + d[2]);
                    if qx < 0 || qy < 0 || qz < 0 || qx >= nx as i64 || qy >= ny as i64 {
                        continue;
                    }
                    let j = (i as i64 + d[0] * sx + d[1] * sy + d[2] * sz) as usize;
                    let l = labels[j];
                    if l == 0 {
                        continue;
                    }
                    current = if current == 0 { l } else { sets.union(current, l) };
                }
                labels[i] = if current == 0 { sets.make() } else { current };
            }
        }
    }

    // compact to first-encounter order
    let mut remap = vec![0u32; sets.parent.len()];
    let mut sizes = Vec::new();
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = sets.find(*l) as usize;
        if remap[root] == 0 {
            sizes.push(0);
            remap[root] = sizes.len() as u32;
        }
        let out = remap[root];
        sizes[out as usize - 1] += 1;
        *l = out;
    }

    ComponentLabeling {
        labels,
        component_sizes: sizes,
    }
}

/// Keeps only the largest 26-connected component. Empty input stays empty.
pub fn largest_component(mask: &VoxelMask) -> VoxelMask {
    let labeling = label_components(mask);
    let keep = labeling.largest();
    let data = labeling
        .labels
        .iter()
        .map(|&l| l != 0 && Some(l) == keep)
        .collect();
    VoxelMask::from_bools(mask.dims(), data, mask.spacing()).expect("same shape as input")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Spacing;

    fn mask(dims: [usize; 3], on: &[[usize; 3]]) -> VoxelMask {
        let mut m = VoxelMask::empty(dims, Spacing::unit()).unwrap();
        for p in on {
            m.set(p[0], p[1], p[2], true);
        }
        m
    }

    #[test]
    fn empty_mask_has_no_components() {
        let m = VoxelMask::empty([4, 4, 4], Spacing::unit()).unwrap();
        let l = label_components(&m);
        assert_eq!(l.count(), 0);
        assert_eq!(largest_component(&m).count(), 0);
    }

    #[test]
    fn two_blobs_separated_by_gap() {
        let m = mask([6, 3, 3], &[[0, 0, 0], [1, 0, 0], [4, 2, 2], [5, 2, 2]]);
        let l = label_components(&m);
        assert_eq!(l.count(), 2);
        assert_eq!(l.component_sizes, vec![2, 2]);
    }

    #[test]
    fn diagonal_corner_contact_is_connected() {
        let m = mask([2, 2, 2], &[[0, 0, 0], [1, 1, 1]]);
        assert_eq!(label_components(&m).count(), 1);
    }

    #[test]
    fn u_shape_merges_labels() {
        // two arms meet only at the bottom row, forcing a union
        let m = mask(
            [3, 3, 1],
            &[[0, 2, 0], [2, 2, 0], [0, 1, 0], [2, 1, 0], [0, 0, 0], [1, 0, 0], [2, 0, 0]],
        );
        let l = label_components(&m);
        assert_eq!(l.count(), 1);
        assert_eq!(l.component_sizes, vec![7]);
    }

    #[test]
    fn largest_keeps_bigger_component() {
        let mut on: Vec<[usize; 3]> = (0..5).map(|x| [x, 0, 0]).collect();
        on.extend((0..3).map(|x| [x, 4, 4]));
        let m = mask([6, 6, 6], &on);
        let lcc = largest_component(&m);
        assert_eq!(lcc.count(), 5);
        assert!(lcc.get(0, 0, 0));
        assert!(!lcc.get(0, 4, 4));
    }

    #[test]
    fn tie_goes_to_component_with_origin() {
        let mut on: Vec<[usize; 3]> = (0..4).map(|x| [x, 5, 5]).collect();
        on.extend((0..4).map(|x| [x, 0, 0]));
        let m = mask([6, 6, 6], &on);
        let lcc = largest_component(&m);
        assert!(lcc.get(0, 0, 0));
        assert!(!lcc.get(0, 5, 5));
    }

    #[test]
    fn single_component_is_unchanged() {
        let m = mask([3, 3, 3], &[[0, 0, 0], [1, 1, 0], [2, 2, 1]]);
        assert_eq!(largest_component(&m), m);
    }
}
