use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::thinning;
use crate::volume::{Spacing, VoxelMask};

/// What a branch ends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Terminal {
    /// A skeleton voxel with exactly one neighbor (its linear index).
    EndPoint(usize),
    /// A merged junction cluster (its index in [`SkeletonGraph::junctions`]).
    Junction(usize),
    /// Closed loop without any junction.
    Cycle,
    /// Lone voxel with no neighbors.
    Isolated,
}

/// One centerline segment between two terminals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// Linear voxel indices from `start` to `end`. When a terminal is a
    /// junction, the path includes the junction voxel it attaches to.
    pub path: Vec<usize>,
    pub start: Terminal,
    pub end: Terminal,
    pub length_mm: f64,
}

impl Branch {
    /// Voxels owned by this branch: the path minus junction anchors.
    pub fn interior(&self) -> &[usize] {
        let lo = matches!(self.start, Terminal::Junction(_)) as usize;
        let hi = self.path.len() - matches!(self.end, Terminal::Junction(_)) as usize;
        if lo >= hi {
            &[]
        } else {
            &self.path[lo..hi]
        }
    }

    /// Consecutive voxel pairs whose steps make up `length_mm`.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let closing = (self.start == Terminal::Cycle && self.path.len() > 2)
            .then(|| (*self.path.last().unwrap(), self.path[0]));
        self.path.windows(2).map(|w| (w[0], w[1])).chain(closing)
    }
}

/// Centerline voxels with their 26-neighbor degrees, end points, junction
/// clusters and (after [`parse_branches`]) the branch decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonGraph {
    pub dims: [usize; 3],
    pub spacing: Spacing,
    /// Sorted linear indices.
    pub voxels: Vec<usize>,
    /// Skeleton-neighbor count, parallel to `voxels`.
    pub degree: Vec<u8>,
    pub end_points: Vec<usize>,
    /// Clusters of 26-adjacent voxels with degree >= 3, each sorted.
    pub junctions: Vec<Vec<usize>>,
    pub branches: Vec<Branch>,
}

impl SkeletonGraph {
    pub fn from_voxels(dims: [usize; 3], spacing: Spacing, mut voxels: Vec<usize>) -> Self {
        voxels.sort_unstable();
        voxels.dedup();
        let adj = adjacency(dims, &voxels);
        let degree: Vec<u8> = adj.iter().map(|a| a.len() as u8).collect();
        let end_points = voxels
            .iter()
            .zip(&degree)
            .filter_map(|(&v, &d)| (d == 1).then_some(v))
            .collect();
        let junctions = cluster_junctions(&voxels, &degree, &adj);
        SkeletonGraph {
            dims,
            spacing,
            voxels,
            degree,
            end_points,
            junctions,
            branches: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.voxels.binary_search(&index).is_ok()
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Number of branch points (junction clusters).
    pub fn branch_point_count(&self) -> usize {
        self.junctions.len()
    }

    /// One representative voxel per junction cluster.
    pub fn branch_points(&self) -> Vec<usize> {
        self.junctions.iter().map(|j| j[0]).collect()
    }

    pub fn step_length(&self, a: usize, b: usize) -> f64 {
        let pa = self.coords(a);
        let pb = self.coords(b);
        self.spacing.step_length([
            pb[0] as i64 - pa[0] as i64,
            pb[1] as i64 - pa[1] as i64,
            pb[2] as i64 - pa[2] as i64,
        ])
    }

    pub fn to_mask(&self) -> VoxelMask {
        let mut m = VoxelMask::empty(self.dims, self.spacing).expect("valid dims");
        let data = m.data_mut();
        for &v in &self.voxels {
            data[v] = true;
        }
        m
    }

    /// Sum of branch lengths in millimetres.
    pub fn tree_length(&self) -> f64 {
        self.branches.iter().map(|b| b.length_mm).sum()
    }

    pub fn export(&self) -> SkeletonExport {
        SkeletonExport {
            summary: SkeletonSummary {
                dims: self.dims,
                spacing: self.spacing,
                voxels: self.voxels.len(),
                end_points: self.end_points.len(),
                branch_points: self.junctions.len(),
                branches: self.branches.len(),
                tree_length_mm: self.tree_length(),
            },
            branches: self
                .branches
                .iter()
                .enumerate()
                .map(|(id, b)| BranchExport {
                    id,
                    voxels: b.path.iter().map(|&v| self.coords(v)).collect(),
                    length_mm: b.length_mm,
                    start: b.start,
                    end: b.end,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSummary {
    pub dims: [usize; 3],
    pub spacing: Spacing,
    pub voxels: usize,
    pub end_points: usize,
    pub branch_points: usize,
    pub branches: usize,
    pub tree_length_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchExport {
    pub id: usize,
    pub voxels: Vec<[usize; 3]>,
    pub length_mm: f64,
    pub start: Terminal,
    pub end: Terminal,
}

/// JSON form of a parsed skeleton.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonExport {
    pub summary: SkeletonSummary,
    pub branches: Vec<BranchExport>,
}

/// Neighbor positions (into `voxels`) of every skeleton voxel.
fn adjacency(dims: [usize; 3], voxels: &[usize]) -> Vec<Vec<u32>> {
    let [nx, ny, nz] = dims;
    let lookup = |i: usize| voxels.binary_search(&i).ok();
    voxels
        .iter()
        .map(|&v| {
            let (x, y, z) = (v % nx, (v / nx) % ny, v / (nx * ny));
            let mut out = Vec::new();
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let (qx, qy, qz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                        if qx < 0 || qy < 0 || qz < 0 {
                            continue;
                        }
                        let (qx, qy, qz) = (qx as usize, qy as usize, qz as usize);
                        if qx >= nx || qy >= ny || qz >= nz {
                            continue;
                        }
                        if let Some(p) = lookup(qx + nx * (qy + ny * qz)) {
                            out.push(p as u32);
                        }
                    }
                }
            }
            out
        })
        .collect()
}

fn cluster_junctions(voxels: &[usize], degree: &[u8], adj: &[Vec<u32>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; voxels.len()];
    let mut clusters = Vec::new();
    for start in 0..voxels.len() {
        if degree[start] < 3 || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut members = vec![voxels[start]];
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &q in &adj[p] {
                let q = q as usize;
                if degree[q] >= 3 && !seen[q] {
                    seen[q] = true;
                    members.push(voxels[q]);
                    queue.push_back(q);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters
}

/// Thins a mask and records degrees, end points and junction clusters.
/// Branches are filled in by [`parse_branches`].
pub fn skeletonize(mask: &VoxelMask) -> SkeletonGraph {
    SkeletonGraph::from_voxels(mask.dims(), mask.spacing(), thinning::thin(mask))
}

/// Decomposes a skeleton into branches between end points and junction
/// clusters, measured under `spacing`. Leaf branches shorter than
/// `min_branch_mm` are folded into their junction; 0 disables pruning.
pub fn parse_branches(skel: &SkeletonGraph, spacing: Spacing, min_branch_mm: f64) -> SkeletonGraph {
    let mut out = SkeletonGraph::from_voxels(skel.dims, spacing, skel.voxels.clone());
    let adj = adjacency(out.dims, &out.voxels);
    out.branches = trace_branches(&out, &adj);
    if min_branch_mm > 0.0 {
        prune_spurs(&mut out, &adj, min_branch_mm);
    }
    out
}

fn trace_branches(g: &SkeletonGraph, adj: &[Vec<u32>]) -> Vec<Branch> {
    let n = g.voxels.len();
    let mut junction_of: Vec<Option<usize>> = vec![None; n];
    for (c, members) in g.junctions.iter().enumerate() {
        for m in members {
            let p = g.voxels.binary_search(m).expect("junction voxel on skeleton");
            junction_of[p] = Some(c);
        }
    }
    let mut owned = vec![false; n];
    let mut branches = Vec::new();

    let walk = |path: &mut Vec<usize>, owned: &mut Vec<bool>, mut prev: usize, mut cur: usize| -> Terminal {
        loop {
            if let Some(c) = junction_of[cur] {
                path.push(cur);
                return Terminal::Junction(c);
            }
            path.push(cur);
            owned[cur] = true;
            if adj[cur].len() == 1 {
                return Terminal::EndPoint(g.voxels[cur]);
            }
            let next = adj[cur]
                .iter()
                .map(|&q| q as usize)
                .find(|&q| q != prev)
                .expect("degree-2 voxel has a second neighbor");
            if owned[next] {
                // ran into an already traced voxel; only reachable on malformed input
                return Terminal::EndPoint(g.voxels[cur]);
            }
            prev = cur;
            cur = next;
        }
    };

    for p in 0..n {
        if adj[p].is_empty() {
            owned[p] = true;
            branches.push((vec![p], Terminal::Isolated, Terminal::Isolated));
        } else if let Some(c) = junction_of[p] {
            for &q in &adj[p] {
                let q = q as usize;
                if junction_of[q] == Some(c) || owned[q] {
                    continue;
                }
                let mut path = vec![p];
                let end = walk(&mut path, &mut owned, p, q);
                branches.push((path, Terminal::Junction(c), end));
            }
        } else if adj[p].len() == 1 && !owned[p] {
            owned[p] = true;
            let mut path = vec![p];
            let end = walk(&mut path, &mut owned, p, adj[p][0] as usize);
            branches.push((path, Terminal::EndPoint(g.voxels[p]), end));
        }
    }

    // junction-free loops
    for p in 0..n {
        if owned[p] || junction_of[p].is_some() {
            continue;
        }
        owned[p] = true;
        let mut path = vec![p];
        let (mut prev, mut cur) = (p, adj[p][0] as usize);
        while cur != p && !owned[cur] {
            owned[cur] = true;
            path.push(cur);
            let next = adj[cur]
                .iter()
                .map(|&q| q as usize)
                .find(|&q| q != prev)
                .unwrap_or(p);
            prev = cur;
            cur = next;
        }
        branches.push((path, Terminal::Cycle, Terminal::Cycle));
    }

    branches
        .into_iter()
        .map(|(positions, start, end)| make_branch(g, positions.iter().map(|&p| g.voxels[p]).collect(), start, end))
        .collect()
}

fn make_branch(g: &SkeletonGraph, path: Vec<usize>, start: Terminal, end: Terminal) -> Branch {
    let mut b = Branch {
        path,
        start,
        end,
        length_mm: 0.0,
    };
    b.length_mm = b.segments().map(|(a, c)| g.step_length(a, c)).sum();
    b
}

fn prune_spurs(g: &mut SkeletonGraph, adj: &[Vec<u32>], min_branch_mm: f64) {
    let is_spur = |b: &Branch| {
        b.length_mm < min_branch_mm
            && matches!(
                (b.start, b.end),
                (Terminal::Junction(_), Terminal::EndPoint(_)) | (Terminal::EndPoint(_), Terminal::Junction(_))
            )
    };
    let mut junctions = g.junctions.clone();
    let mut removed_ends = Vec::new();
    let mut kept = Vec::new();
    for b in std::mem::take(&mut g.branches) {
        if !is_spur(&b) {
            kept.push(b);
            continue;
        }
        let (c, tip) = match (b.start, b.end) {
            (Terminal::Junction(c), Terminal::EndPoint(e)) | (Terminal::EndPoint(e), Terminal::Junction(c)) => (c, e),
            _ => unreachable!(),
        };
        junctions[c].extend_from_slice(b.interior());
        removed_ends.push(tip);
    }
    for j in junctions.iter_mut() {
        j.sort_unstable();
        j.dedup();
    }

    // a junction left with exactly two branch ends is no longer a junction
    let mut incident: HashMap<usize, Vec<(usize, bool)>> = HashMap::new();
    for (i, b) in kept.iter().enumerate() {
        if let Terminal::Junction(c) = b.start {
            incident.entry(c).or_default().push((i, true));
        }
        if let Terminal::Junction(c) = b.end {
            incident.entry(c).or_default().push((i, false));
        }
    }
    let mut dissolved = vec![false; junctions.len()];
    let mut drop_branch = vec![false; kept.len()];
    let mut merged = Vec::new();
    let mut cs: Vec<usize> = incident.keys().copied().collect();
    cs.sort_unstable();
    for c in cs {
        let ends = &incident[&c];
        if ends.len() != 2 || ends[0].0 == ends[1].0 {
            continue;
        }
        let (ia, a_at_start) = ends[0];
        let (ib, b_at_start) = ends[1];
        if drop_branch[ia] || drop_branch[ib] {
            continue;
        }
        let mut a = kept[ia].clone();
        let mut b = kept[ib].clone();
        if a_at_start {
            reverse(&mut a);
        }
        if !b_at_start {
            reverse(&mut b);
        }
        let bridge = cluster_path(g, adj, &junctions[c], *a.path.last().unwrap(), b.path[0]);
        let mut path = a.path.clone();
        path.extend_from_slice(&bridge[1..]);
        path.extend_from_slice(&b.path[1..]);
        merged.push(make_branch(g, path, a.start, b.end));
        drop_branch[ia] = true;
        drop_branch[ib] = true;
        dissolved[c] = true;
    }

    let mut branches: Vec<Branch> = kept
        .into_iter()
        .zip(drop_branch)
        .filter_map(|(b, d)| (!d).then_some(b))
        .collect();
    branches.extend(merged);

    // renumber surviving junctions
    let mut remap = vec![usize::MAX; junctions.len()];
    let mut next = Vec::new();
    for (c, j) in junctions.into_iter().enumerate() {
        if !dissolved[c] {
            remap[c] = next.len();
            next.push(j);
        }
    }
    let fix = |t: Terminal| match t {
        Terminal::Junction(c) => Terminal::Junction(remap[c]),
        other => other,
    };
    for b in branches.iter_mut() {
        b.start = fix(b.start);
        b.end = fix(b.end);
    }
    g.junctions = next;
    g.end_points.retain(|e| !removed_ends.contains(e));
    g.branches = branches;
}

fn reverse(b: &mut Branch) {
    b.path.reverse();
    std::mem::swap(&mut b.start, &mut b.end);
}

/// Shortest 26-path from `from` to `to` through the voxels of one cluster.
fn cluster_path(g: &SkeletonGraph, adj: &[Vec<u32>], cluster: &[usize], from: usize, to: usize) -> Vec<usize> {
    let pos = |v: usize| g.voxels.binary_search(&v).unwrap();
    let (src, dst) = (pos(from), pos(to));
    let mut prev: HashMap<usize, usize> = HashMap::from([(src, src)]);
    let mut queue = VecDeque::from([src]);
    while let Some(p) = queue.pop_front() {
        if p == dst {
            break;
        }
        for &q in &adj[p] {
            let q = q as usize;
            if !prev.contains_key(&q) && cluster.binary_search(&g.voxels[q]).is_ok() {
                prev.insert(q, p);
                queue.push_back(q);
            }
        }
    }
    let mut path = vec![dst];
    let mut cur = dst;
    while cur != src {
        match prev.get(&cur) {
            Some(&p) => cur = p,
            None => return vec![from, to],
        }
        path.push(cur);
    }
    path.reverse();
    path.into_iter().map(|p| g.voxels[p]).collect()
}

/// Total centerline length of a parsed skeleton, in millimetres.
pub fn tree_length(skel: &SkeletonGraph) -> f64 {
    skel.tree_length()
}
