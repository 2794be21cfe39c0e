//! Synthetic bifurcating tube trees with exact centerline truth.
//!
//! Every branch is a straight run of lattice steps along an axis or a face
//! diagonal, so its centerline is a chain of voxel centres and its analytic
//! length equals the digital path length. Children leave the parent's end
//! voxel as a symmetric pair whose plane is turned away from the parent's
//! own branching plane.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::neighborhood::{offset_of, CENTER};
use crate::volume::{Spacing, VoxelMask};

/// Geometry of a full binary phantom tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    /// Number of bifurcation generations; 0 is a single tube.
    pub depth: u32,
    pub root_radius_vox: f64,
    /// Per-generation radius factor in (0, 1]. Radii never drop below 1 voxel.
    pub radius_decay: f64,
    /// Centerline voxels per branch for each generation, endpoints included.
    /// Generations past the end of the list reuse its last entry.
    pub segment_length_vox: Vec<u32>,
    /// Preferred angle between sibling branches.
    pub branching_angle_deg: f64,
    /// Relative random change of each branch length, 0 for none.
    pub length_jitter: f64,
    pub dims: [usize; 3],
    pub spacing: Spacing,
    pub rng_seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            depth: 3,
            root_radius_vox: 2.5,
            radius_decay: 0.8,
            segment_length_vox: vec![28, 20, 15, 12, 10],
            branching_angle_deg: 90.0,
            length_jitter: 0.0,
            dims: [64, 64, 64],
            spacing: Spacing::unit(),
            rng_seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn branch_count(&self) -> usize {
        (1usize << (self.depth + 1)) - 1
    }

    pub fn radius(&self, generation: u32) -> f64 {
        (self.root_radius_vox * self.radius_decay.powi(generation as i32)).max(1.0)
    }

    pub fn segment_length(&self, generation: u32) -> u32 {
        let l = &self.segment_length_vox;
        l[(generation as usize).min(l.len() - 1)]
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Phantom(m.to_string()));
        if self.depth > 12 {
            return bad("depth above 12 is not supported");
        }
        if !(self.root_radius_vox.is_finite() && self.root_radius_vox > 0.0) {
            return bad("root radius must be positive");
        }
        if !(self.radius_decay > 0.0 && self.radius_decay <= 1.0) {
            return bad("radius decay must lie in (0, 1]");
        }
        if self.segment_length_vox.is_empty() || self.segment_length_vox.iter().any(|&l| l < 2) {
            return bad("segment lengths must be at least 2 voxels");
        }
        if !(0.0..1.0).contains(&self.length_jitter) {
            return bad("length jitter must lie in [0, 1)");
        }
        if self.dims.contains(&0) {
            return Err(Error::InvalidDims(self.dims));
        }
        Ok(())
    }

    /// Copy of the spec with `dims` set to the smallest grid that holds the
    /// tree plus `margin` voxels on every side.
    pub fn fitted(&self, margin: usize) -> Result<PhantomSpec> {
        self.validate()?;
        let layout = layout(self)?;
        let (lo, hi) = bounds(self, &layout);
        let mut out = self.clone();
        for a in 0..3 {
            out.dims[a] = (hi[a] - lo[a]) as usize + 1 + 2 * margin;
        }
        Ok(out)
    }
}

/// One tube of the phantom tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomBranch {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub generation: u32,
    /// Centerline endpoints in voxel coordinates.
    pub start: [f64; 3],
    pub end: [f64; 3],
    /// Lattice step between consecutive centerline voxels.
    pub direction: [i64; 3],
    pub radius_vox: f64,
    pub length_mm: f64,
    /// Linear indices of the centerline voxels from start to end.
    #[serde(skip)]
    pub centerline: Vec<usize>,
}

/// A generated phantom: mask plus exact branch geometry.
#[derive(Clone, Debug)]
pub struct PhantomTruth {
    pub spec: PhantomSpec,
    pub mask: VoxelMask,
    pub branches: Vec<PhantomBranch>,
    pub total_length_mm: f64,
}

#[derive(Serialize)]
struct TruthFile<'a> {
    dims: [usize; 3],
    spacing: [f64; 3],
    spec: &'a PhantomSpec,
    branch_count: usize,
    total_length_mm: f64,
    foreground_voxels: usize,
    branches: &'a [PhantomBranch],
}

impl PhantomTruth {
    pub fn branch(&self, id: usize) -> Result<&PhantomBranch> {
        self.branches.get(id).ok_or(Error::InvalidBranch(id))
    }

    /// `id` and all of its descendants, in id order.
    pub fn subtree(&self, id: usize) -> Result<Vec<usize>> {
        self.branch(id)?;
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(b) = stack.pop() {
            out.insert(b);
            stack.extend(&self.branches[b].children);
        }
        Ok(out.into_iter().collect())
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.branches.iter().filter(|b| b.children.is_empty()).map(|b| b.id).collect()
    }

    pub fn centerline_mask(&self) -> VoxelMask {
        let mut m = VoxelMask::empty(self.mask.dims(), self.mask.spacing()).expect("valid dims");
        let data = m.data_mut();
        for b in &self.branches {
            for &i in &b.centerline {
                data[i] = true;
            }
        }
        m
    }

    /// Branch that owns voxel `index`: the first branch in id order whose tube
    /// contains it, so overlaps at a bifurcation go to the parent.
    pub fn owner_of(&self, index: usize) -> Option<usize> {
        if !self.mask.data().get(index).copied().unwrap_or(false) {
            return None;
        }
        let p = self.mask.coords(index).map(|c| c as f64);
        self.branches
            .iter()
            .find(|b| segment_distance(p, b.start, b.end) <= b.radius_vox + EPS)
            .map(|b| b.id)
    }

    pub fn truth_json(&self) -> Result<String> {
        let file = TruthFile {
            dims: self.mask.dims(),
            spacing: self.mask.spacing().as_array(),
            spec: &self.spec,
            branch_count: self.branches.len(),
            total_length_mm: self.total_length_mm,
            foreground_voxels: self.mask.count(),
            branches: &self.branches,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn write_truth(&self, path: &Path) -> Result<()> {
        fs::write(path, self.truth_json()? + "\n").map_err(|e| Error::io(path, e))
    }
}

const EPS: f64 = 1e-9;

/// Branch skeleton of the tree before placement in the grid.
struct Layout {
    parent: Vec<Option<usize>>,
    generation: Vec<u32>,
    start: Vec<[i64; 3]>,
    dir: Vec<[i64; 3]>,
    steps: Vec<i64>,
}

impl Layout {
    fn end(&self, b: usize) -> [i64; 3] {
        let (s, d, n) = (self.start[b], self.dir[b], self.steps[b]);
        [s[0] + d[0] * n, s[1] + d[1] * n, s[2] + d[2] * n]
    }
}

fn offsets26() -> impl Iterator<Item = [i64; 3]> {
    (0..27).filter(|&k| k != CENTER).map(|k| offset_of(k).map(i64::from))
}

fn lattice_directions() -> Vec<[i64; 3]> {
    // axis and face-diagonal steps; body diagonals admit no symmetric child pair
    offsets26()
        .filter(|d| d.iter().filter(|&&c| c != 0).count() <= 2)
        .collect()
}

fn dot(a: [i64; 3], b: [i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [i64; 3]) -> f64 {
    (dot(a, a) as f64).sqrt()
}

fn angle_deg(a: [i64; 3], b: [i64; 3]) -> f64 {
    (dot(a, b) as f64 / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Symmetric child pair for a parent heading along `d`: the opening angle
/// closest to `angle`, then the plane turned furthest from `prev_normal`.
type DirPair = ([i64; 3], [i64; 3]);

fn child_pair(d: [i64; 3], prev_normal: Option<[i64; 3]>, angle: f64) -> Option<DirPair> {
    let dirs = lattice_directions();
    let mut best: Option<((i64, i64), DirPair)> = None;
    for (i, &a) in dirs.iter().enumerate() {
        for &b in &dirs[i + 1..] {
            if dot(a, d) <= 0 || dot(a, a) != dot(b, b) {
                continue;
            }
            let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
            let n = cross(a, b);
            if cross(sum, d) != [0, 0, 0] || dot(sum, d) <= 0 || n == [0, 0, 0] {
                continue;
            }
            // |cos| between plane normals, kept exact as a scaled integer ratio
            let turn = match prev_normal {
                Some(p) => {
                    let c = dot(n, p) as f64 / (norm(n) * norm(p));
                    (c.abs() * 1e6).round() as i64
                }
                None => 0,
            };
            let miss = ((angle_deg(a, b) - angle).abs() * 1e6).round() as i64;
            let key = (miss, turn);
            let better = match &best {
                None => true,
                Some((k, _)) => key < *k,
            };
            if better {
                best = Some((key, (a, b)));
            }
        }
    }
    best.map(|(_, pair)| pair)
}

fn layout(spec: &PhantomSpec) -> Result<Layout> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let n = spec.branch_count();
    let mut l = Layout {
        parent: Vec::with_capacity(n),
        generation: Vec::with_capacity(n),
        start: Vec::with_capacity(n),
        dir: Vec::with_capacity(n),
        steps: Vec::with_capacity(n),
    };
    let steps_for = |g: u32, rng: &mut ChaCha8Rng| -> i64 {
        let base = spec.segment_length(g) as f64;
        let len = if spec.length_jitter > 0.0 {
            (base * (1.0 + spec.length_jitter * rng.gen_range(-1.0..=1.0))).round()
        } else {
            base
        };
        len.max(2.0) as i64 - 1
    };
    let mut normals: Vec<Option<[i64; 3]>> = Vec::with_capacity(n);
    l.parent.push(None);
    l.generation.push(0);
    l.start.push([0, 0, 0]);
    l.dir.push([0, 0, 1]);
    l.steps.push(steps_for(0, &mut rng));
    normals.push(None);
    // breadth-first, so ids grow generation by generation
    let mut next = 0;
    while next < l.parent.len() {
        let b = next;
        next += 1;
        let g = l.generation[b];
        if g == spec.depth {
            continue;
        }
        let (c1, c2) = child_pair(l.dir[b], normals[b], spec.branching_angle_deg)
            .ok_or_else(|| Error::Phantom(format!("no child directions for branch {b}")))?;
        let n = cross(c1, c2);
        let end = l.end(b);
        for c in [c1, c2] {
            l.parent.push(Some(b));
            l.generation.push(g + 1);
            l.start.push(end);
            l.dir.push(c);
            l.steps.push(steps_for(g + 1, &mut rng));
            normals.push(Some(n));
        }
    }
    Ok(l)
}

fn bounds(spec: &PhantomSpec, l: &Layout) -> ([i64; 3], [i64; 3]) {
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for b in 0..l.parent.len() {
        let r = spec.radius(l.generation[b]).floor() as i64;
        for p in [l.start[b], l.end(b)] {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a] - r);
                hi[a] = hi[a].max(p[a] + r);
            }
        }
    }
    (lo, hi)
}

fn segment_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1], a[2] + t * ab[2] - p[2]];
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()
}

/// Sets every voxel whose centre lies within `r` of the segment from `a` to `b`.
fn rasterize_capsule(mask: &mut VoxelMask, a: [f64; 3], b: [f64; 3], r: f64) {
    let dims = mask.dims();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for k in 0..3 {
        lo[k] = (a[k].min(b[k]) - r).floor().max(0.0) as usize;
        hi[k] = ((a[k].max(b[k]) + r).ceil() as usize).min(dims[k] - 1);
    }
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                if segment_distance([x as f64, y as f64, z as f64], a, b) <= r + EPS {
                    mask.set(x, y, z, true);
                }
            }
        }
    }
}

fn rasterize(dims: [usize; 3], spacing: Spacing, branches: &[PhantomBranch], skip: &BTreeSet<usize>) -> VoxelMask {
    let mut mask = VoxelMask::empty(dims, spacing).expect("valid dims");
    for b in branches.iter().filter(|b| !skip.contains(&b.id)) {
        rasterize_capsule(&mut mask, b.start, b.end, b.radius_vox);
    }
    mask
}

/// Branch pairs that are not parent/child or siblings must keep their tubes
/// at least one voxel apart.
fn check_collisions(branches: &[PhantomBranch]) -> Result<()> {
    let related = |a: &PhantomBranch, b: &PhantomBranch| {
        a.parent == Some(b.id) || b.parent == Some(a.id) || (a.parent.is_some() && a.parent == b.parent)
    };
    let pts = |b: &PhantomBranch| -> Vec<[f64; 3]> {
        let n = b.centerline.len();
        (0..n)
            .map(|i| {
                let t = i as f64;
                [
                    b.start[0] + t * b.direction[0] as f64,
                    b.start[1] + t * b.direction[1] as f64,
                    b.start[2] + t * b.direction[2] as f64,
                ]
            })
            .collect()
    };
    for (i, a) in branches.iter().enumerate() {
        let pa = pts(a);
        for b in &branches[i + 1..] {
            if related(a, b) {
                continue;
            }
            let min_gap = a.radius_vox + b.radius_vox + 2.0;
            if pa.iter().any(|&p| segment_distance(p, b.start, b.end) < min_gap) {
                return Err(Error::Phantom(format!("branches {} and {} collide", a.id, b.id)));
            }
        }
    }
    Ok(())
}

/// Builds the phantom centered in `spec.dims`.
pub fn generate(spec: &PhantomSpec) -> Result<PhantomTruth> {
    spec.validate()?;
    let l = layout(spec)?;
    let (lo, hi) = bounds(spec, &l);
    let dims = spec.dims;
    let mut offset = [0i64; 3];
    for a in 0..3 {
        let extent = hi[a] - lo[a] + 1;
        offset[a] = (dims[a] as i64 - extent) / 2 - lo[a];
    }
    let mut branches: Vec<PhantomBranch> = Vec::with_capacity(l.parent.len());
    for b in 0..l.parent.len() {
        let s = [0, 1, 2].map(|a| l.start[b][a] + offset[a]);
        let d = l.dir[b];
        let r = spec.radius(l.generation[b]);
        let e = [s[0] + d[0] * l.steps[b], s[1] + d[1] * l.steps[b], s[2] + d[2] * l.steps[b]];
        for a in 0..3 {
            let reach = r.floor() as i64;
            if s[a].min(e[a]) - reach < 1 || s[a].max(e[a]) + reach > dims[a] as i64 - 2 {
                return Err(Error::Phantom(format!(
                    "branch {b} leaves the {dims:?} grid; use PhantomSpec::fitted"
                )));
            }
        }
        let centerline = (0..=l.steps[b])
            .map(|i| {
                let p = [s[0] + d[0] * i, s[1] + d[1] * i, s[2] + d[2] * i];
                p[0] as usize + dims[0] * (p[1] as usize + dims[1] * p[2] as usize)
            })
            .collect();
        branches.push(PhantomBranch {
            id: b,
            parent: l.parent[b],
            children: Vec::new(),
            generation: l.generation[b],
            start: s.map(|c| c as f64),
            end: e.map(|c| c as f64),
            direction: d,
            radius_vox: r,
            length_mm: l.steps[b] as f64 * spec.spacing.step_length(d),
            centerline,
        });
    }
    for b in 0..branches.len() {
        if let Some(p) = branches[b].parent {
            branches[p].children.push(b);
        }
    }
    check_collisions(&branches)?;
    let mask = rasterize(dims, spec.spacing, &branches, &BTreeSet::new());
    let total_length_mm = branches.iter().map(|b| b.length_mm).sum();
    Ok(PhantomTruth {
        spec: spec.clone(),
        mask,
        branches,
        total_length_mm,
    })
}

/// Controlled damage applied to a phantom mask.
#[derive(Clone, Debug, PartialEq)]
pub enum Degradation {
    /// Remove a branch and all of its descendants.
    EraseSubtree { branch: usize },
    /// Clear a slab `gap` lattice steps thick across the middle of a branch.
    BreakBranch { branch: usize, gap: usize },
    /// Grow the mask by one 26-neighborhood step.
    Dilate,
    /// Add a compact component of `size` voxels that touches nothing.
    NoiseBlob { size: usize, seed: u64 },
}

pub fn degrade(truth: &PhantomTruth, mode: &Degradation) -> Result<VoxelMask> {
    match *mode {
        Degradation::EraseSubtree { branch } => {
            let skip: BTreeSet<usize> = truth.subtree(branch)?.into_iter().collect();
            Ok(rasterize(truth.mask.dims(), truth.mask.spacing(), &truth.branches, &skip))
        }
        Degradation::BreakBranch { branch, gap } => break_branch(truth, branch, gap),
        Degradation::Dilate => Ok(dilate(&truth.mask)),
        Degradation::NoiseBlob { size, seed } => add_noise_blob(&truth.mask, size, seed),
    }
}

fn break_branch(truth: &PhantomTruth, id: usize, gap: usize) -> Result<VoxelMask> {
    let b = truth.branch(id)?;
    let steps = (b.centerline.len() - 1) as f64;
    if gap == 0 || gap as f64 > steps - 2.0 {
        return Err(Error::Phantom(format!("gap {gap} does not fit inside branch {id}")));
    }
    let d = b.direction.map(|c| c as f64);
    let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    // parameter along the branch in lattice steps
    let t0 = (steps - gap as f64) / 2.0;
    let t1 = t0 + gap as f64;
    let reach = b.radius_vox + 1.5;
    let mut out = truth.mask.clone();
    let dims = out.dims();
    let (lo_t, hi_t) = (t0 - 0.5, t1 - 0.5);
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let p0 = b.start[a] + lo_t * d[a];
        let p1 = b.start[a] + hi_t * d[a];
        lo[a] = (p0.min(p1) - reach).floor().max(0.0) as usize;
        hi[a] = ((p0.max(p1) + reach).ceil() as usize).min(dims[a] - 1);
    }
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let rel = [x as f64 - b.start[0], y as f64 - b.start[1], z as f64 - b.start[2]];
                let t = (rel[0] * d[0] + rel[1] * d[1] + rel[2] * d[2]) / d2;
                if t < lo_t || t >= hi_t {
                    continue;
                }
                let q = [rel[0] - t * d[0], rel[1] - t * d[1], rel[2] - t * d[2]];
                if (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt() <= reach {
                    out.set(x, y, z, false);
                }
            }
        }
    }
    Ok(out)
}

/// One step of 26-neighborhood dilation, clipped to the grid.
pub fn dilate(mask: &VoxelMask) -> VoxelMask {
    let [nx, ny, nz] = mask.dims();
    let mut out = mask.clone();
    for i in mask.foreground_indices() {
        let [x, y, z] = mask.coords(i);
        for [dx, dy, dz] in offsets26() {
            let (qx, qy, qz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
            if qx >= 0 && qy >= 0 && qz >= 0 && (qx as usize) < nx && (qy as usize) < ny && (qz as usize) < nz {
                out.set(qx as usize, qy as usize, qz as usize, true);
            }
        }
    }
    out
}

fn add_noise_blob(mask: &VoxelMask, size: usize, seed: u64) -> Result<VoxelMask> {
    if size == 0 {
        return Ok(mask.clone());
    }
    let dims = mask.dims();
    let side = (size as f64).cbrt().ceil() as usize;
    if dims.iter().any(|&d| d < side + 2) {
        return Err(Error::Phantom(format!("a {size}-voxel blob does not fit in {dims:?}")));
    }
    let blob: Vec<[usize; 3]> = (0..side * side * side)
        .map(|i| [i % side, (i / side) % side, i / (side * side)])
        .take(size)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let o = [
            rng.gen_range(0..=dims[0] - side),
            rng.gen_range(0..=dims[1] - side),
            rng.gen_range(0..=dims[2] - side),
        ];
        let clear = blob.iter().all(|p| {
            let c = [o[0] + p[0], o[1] + p[1], o[2] + p[2]];
            !mask.get(c[0], c[1], c[2])
                && offsets26().all(|[dx, dy, dz]| !mask.get_signed(c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz))
        });
        if clear {
            let mut out = mask.clone();
            for p in &blob {
                out.set(o[0] + p[0], o[1] + p[1], o[2] + p[2], true);
            }
            return Ok(out);
        }
    }
    Err(Error::Phantom(format!("no free room for a {size}-voxel blob")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::label_components;

    fn tube(len: u32) -> PhantomSpec {
        PhantomSpec {
            depth: 0,
            root_radius_vox: 1.0,
            segment_length_vox: vec![len],
            ..PhantomSpec::default()
        }
        .fitted(2)
        .unwrap()
    }

    #[test]
    fn single_tube_length() {
        let t = generate(&tube(20)).unwrap();
        assert_eq!(t.branches.len(), 1);
        assert_eq!(t.total_length_mm, 19.0);
        assert_eq!(t.branches[0].centerline.len(), 20);
    }

    #[test]
    fn full_tree_branch_counts() {
        for depth in 0..=4 {
            let spec = PhantomSpec {
                depth,
                ..PhantomSpec::default()
            }
            .fitted(2)
            .unwrap();
            let t = generate(&spec).unwrap();
            assert_eq!(t.branches.len(), (1 << (depth + 1)) - 1);
            assert_eq!(label_components(&t.mask).count(), 1);
            let sum: f64 = t.branches.iter().map(|b| b.length_mm).sum();
            assert_eq!(sum, t.total_length_mm);
        }
    }

    #[test]
    fn centerline_is_foreground() {
        let t = generate(&PhantomSpec::default().fitted(2).unwrap()).unwrap();
        for b in &t.branches {
            assert!(b.centerline.iter().all(|&i| t.mask.data()[i]));
        }
    }

    #[test]
    fn children_share_the_parent_end_voxel() {
        let t = generate(&PhantomSpec::default().fitted(2).unwrap()).unwrap();
        for b in &t.branches {
            if let Some(p) = b.parent {
                assert_eq!(b.centerline[0], *t.branches[p].centerline.last().unwrap());
                assert_eq!(t.owner_of(b.centerline[0]), Some(p));
            }
        }
    }

    #[test]
    fn too_small_grid_is_an_error() {
        let spec = PhantomSpec {
            dims: [10, 10, 10],
            ..PhantomSpec::default()
        };
        assert!(matches!(generate(&spec), Err(Error::Phantom(_))));
    }

    #[test]
    fn seeded_generation_is_repeatable() {
        let spec = PhantomSpec {
            length_jitter: 0.2,
            rng_seed: 7,
            ..PhantomSpec::default()
        }
        .fitted(3)
        .unwrap();
        assert_eq!(generate(&spec).unwrap().mask, generate(&spec).unwrap().mask);
    }

    #[test]
    fn degradations() {
        let t = generate(&PhantomSpec::default().fitted(3).unwrap()).unwrap();
        let grown = degrade(&t, &Degradation::Dilate).unwrap();
        assert!(grown.count() > t.mask.count());
        assert!(t.mask.foreground_indices().all(|i| grown.data()[i]));

        let blob = degrade(&t, &Degradation::NoiseBlob { size: 10, seed: 1 }).unwrap();
        assert_eq!(blob.count(), t.mask.count() + 10);
        assert_eq!(label_components(&blob).count(), 2);

        let broken = degrade(&t, &Degradation::BreakBranch { branch: 1, gap: 2 }).unwrap();
        assert_eq!(label_components(&broken).count(), 2);

        let erased = degrade(&t, &Degradation::EraseSubtree { branch: 2 }).unwrap();
        assert!(erased.count() < t.mask.count());
        assert!(matches!(
            degrade(&t, &Degradation::EraseSubtree { branch: 99 }),
            Err(Error::InvalidBranch(99))
        ));
    }
}
