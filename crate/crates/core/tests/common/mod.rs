#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeval::volume::{Spacing, VoxelMask};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random mask with dims in `1..=max_side` and a random fill density.
pub fn random_mask(rng: &mut ChaCha8Rng, max_side: usize) -> VoxelMask {
    let dims = [
        rng.gen_range(1..=max_side),
        rng.gen_range(1..=max_side),
        rng.gen_range(1..=max_side),
    ];
    random_mask_with_dims(rng, dims)
}

pub fn random_mask_with_dims(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> VoxelMask {
    let density: f64 = rng.gen_range(0.0..0.7);
    let data = (0..dims[0] * dims[1] * dims[2]).map(|_| rng.gen_bool(density)).collect();
    VoxelMask::from_bools(dims, data, Spacing::unit()).unwrap()
}

/// Random blobby mask: union of random boxes, which gives thick shapes with
/// holes and tunnels more often than independent noise does.
pub fn random_boxes(rng: &mut ChaCha8Rng, max_side: usize) -> VoxelMask {
    let dims = [
        rng.gen_range(3..=max_side),
        rng.gen_range(3..=max_side),
        rng.gen_range(3..=max_side),
    ];
    let mut m = VoxelMask::empty(dims, Spacing::unit()).unwrap();
    for _ in 0..rng.gen_range(1..6) {
        let lo: Vec<usize> = dims.iter().map(|&d| rng.gen_range(0..d)).collect();
        let hi: Vec<usize> = (0..3).map(|a| rng.gen_range(lo[a]..dims[a])).collect();
        let carve = rng.gen_bool(0.25);
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    m.set(x, y, z, !carve);
                }
            }
        }
    }
    m
}

/// Breadth-first 26-connected labeling, labels numbered by first voxel in
/// scan order.
pub fn flood_fill_labels(mask: &VoxelMask) -> (Vec<u32>, Vec<usize>) {
    let [nx, ny, nz] = mask.dims();
    let mut labels = vec![0u32; nx * ny * nz];
    let mut sizes = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = mask.index(x, y, z);
                if !mask.get(x, y, z) || labels[i] != 0 {
                    continue;
                }
                sizes.push(0);
                let label = sizes.len() as u32;
                let mut queue = VecDeque::from([[x, y, z]]);
                labels[i] = label;
                while let Some([cx, cy, cz]) = queue.pop_front() {
                    *sizes.last_mut().unwrap() += 1;
                    for dz in -1i64..=1 {
                        for dy in -1i64..=1 {
                            for dx in -1i64..=1 {
                                let (qx, qy, qz) = (cx as i64 + dx, cy as i64 + dy, cz as i64 + dz);
                                if !mask.get_signed(qx, qy, qz) {
                                    continue;
                                }
                                let j = mask.index(qx as usize, qy as usize, qz as usize);
                                if labels[j] == 0 {
                                    labels[j] = label;
                                    queue.push_back([qx as usize, qy as usize, qz as usize]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (labels, sizes)
}

pub fn component_count(mask: &VoxelMask) -> usize {
    flood_fill_labels(mask).1.len()
}

/// Voxel tally by coordinate walk: (tp, fp, fn, tn).
pub fn brute_confusion(pred: &VoxelMask, gt: &VoxelMask) -> (u64, u64, u64, u64) {
    let [nx, ny, nz] = gt.dims();
    let mut t = (0, 0, 0, 0);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                match (pred.get(x, y, z), gt.get(x, y, z)) {
                    (true, true) => t.0 += 1,
                    (true, false) => t.1 += 1,
                    (false, true) => t.2 += 1,
                    (false, false) => t.3 += 1,
                }
            }
        }
    }
    t
}

/// Topological numbers of the center of a 3x3x3 neighborhood given as a
/// 27-entry occupancy array indexed x + 3y + 9z (center ignored).
/// Returns (T26 of the foreground, T6 of the background).
pub fn topological_numbers(cube: &[bool; 27]) -> (usize, usize) {
    let pos = |k: usize| [(k % 3) as i32 - 1, ((k / 3) % 3) as i32 - 1, (k / 9) as i32 - 1];
    let cheb = |a: [i32; 3], b: [i32; 3]| (0..3).map(|i| (a[i] - b[i]).abs()).max().unwrap();
    let manh = |a: [i32; 3], b: [i32; 3]| (0..3).map(|i| (a[i] - b[i]).abs()).sum::<i32>();
    let count = |members: Vec<usize>, adjacent: &dyn Fn(usize, usize) -> bool| -> Vec<Vec<usize>> {
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut seen = [false; 27];
        for &s in &members {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                let c = comp[i];
                for &m in &members {
                    if !seen[m] && adjacent(c, m) {
                        seen[m] = true;
                        comp.push(m);
                    }
                }
                i += 1;
            }
            comps.push(comp);
        }
        comps
    };
    let fg: Vec<usize> = (0..27).filter(|&k| k != 13 && cube[k]).collect();
    let t26 = count(fg, &|a, b| cheb(pos(a), pos(b)) == 1).len();
    // background inside the 18-neighborhood, 6-adjacent steps
    let n18 = |k: usize| k != 13 && manh(pos(k), [0, 0, 0]) <= 2;
    let bg: Vec<usize> = (0..27).filter(|&k| n18(k) && !cube[k]).collect();
    let t6 = count(bg, &|a, b| manh(pos(a), pos(b)) == 1)
        .into_iter()
        .filter(|c| c.iter().any(|&k| manh(pos(k), [0, 0, 0]) == 1))
        .count();
    (t26, t6)
}

fn sign(a: f64, b: f64) -> i32 {
    if a < b {
        -1
    } else if a > b {
        1
    } else {
        0
    }
}

/// Pairwise Kendall tau-b with concordant and discordant counts.
pub fn kendall_pairs(x: &[f64], y: &[f64]) -> (f64, u64, u64) {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = sign(x[i], x[j]);
            let sy = sign(y[i], y[j]);
            tx += (sx == 0) as u64;
            ty += (sy == 0) as u64;
            match sx * sy {
                1 => c += 1,
                -1 => d += 1,
                _ => {}
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let tau = (c as f64 - d as f64) / ((n0 - tx as f64) * (n0 - ty as f64)).sqrt();
    (tau, c, d)
}

/// Number of pairs ordered differently by two team orderings.
pub fn discordant_pairs(a: &[String], b: &[String]) -> usize {
    let pos: BTreeMap<&str, usize> = b.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut d = 0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if pos[a[i].as_str()] > pos[a[j].as_str()] {
                d += 1;
            }
        }
    }
    d
}

pub struct BoardRow {
    pub rank: usize,
    pub team: String,
    pub score: f64,
}

/// Reads a rank,team,score fixture.
pub fn read_board_fixture(name: &str) -> Vec<BoardRow> {
    let text = std::fs::read_to_string(data_dir().join(name)).unwrap();
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            BoardRow {
                rank: f[0].parse().unwrap(),
                team: f[1].to_string(),
                score: f[2].parse().unwrap(),
            }
        })
        .collect()
}

/// Reads team → [TD, BD, DSC, Precision] means from a team-means fixture.
pub fn read_means_fixture(name: &str) -> BTreeMap<String, [f64; 4]> {
    let text = std::fs::read_to_string(data_dir().join(name)).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |n: &str| header.iter().position(|h| *h == n).unwrap();
    let idx = [col("TD"), col("BD"), col("DSC"), col("Precision")];
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), idx.map(|i| f[i].parse().unwrap()))
        })
        .collect()
}
