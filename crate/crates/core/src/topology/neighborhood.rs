//! Predicates on the 3x3x3 neighborhood of a voxel, encoded as a 27-bit mask.
//!
//! Bit `k = (dx+1) + 3(dy+1) + 9(dz+1)`; the center is bit 13.

pub const CENTER: u32 = 13;
pub const CENTER_BIT: u32 = 1 << CENTER;
pub const ALL_NEIGHBORS: u32 = ((1 << 27) - 1) & !CENTER_BIT;

#[inline]
pub const fn bit(dx: i32, dy: i32, dz: i32) -> u32 {
    ((dx + 1) + 3 * (dy + 1) + 9 * (dz + 1)) as u32
}

#[inline]
pub const fn offset_of(k: u32) -> [i32; 3] {
    let k = k as i32;
    [k % 3 - 1, (k / 3) % 3 - 1, k / 9 - 1]
}

const fn face_mask() -> u32 {
    (1 << bit(1, 0, 0))
        | (1 << bit(-1, 0, 0))
        | (1 << bit(0, 1, 0))
        | (1 << bit(0, -1, 0))
        | (1 << bit(0, 0, 1))
        | (1 << bit(0, 0, -1))
}

pub const FACE_NEIGHBORS: u32 = face_mask();

/// For each of the 27 positions, the positions 26-adjacent to it inside the
/// cube, center excluded.
pub static ADJ26: [u32; 27] = adjacency(false);

/// 6-adjacency restricted to the 18-neighborhood, center excluded.
pub static ADJ6_N18: [u32; 27] = adjacency(true);

const fn adjacency(six: bool) -> [u32; 27] {
    let mut table = [0u32; 27];
    let mut a = 0;
    while a < 27 {
        let mut b = 0;
        while b < 27 {
            if a != b && a != CENTER as usize && b != CENTER as usize {
                let pa = offset_of(a as u32);
                let pb = offset_of(b as u32);
                let dx = (pa[0] - pb[0]).abs();
                let dy = (pa[1] - pb[1]).abs();
                let dz = (pa[2] - pb[2]).abs();
                let ok = if six {
                    dx + dy + dz == 1 && in_n18(pa) && in_n18(pb)
                } else {
                    dx <= 1 && dy <= 1 && dz <= 1
                };
                if ok {
                    table[a] |= 1 << b;
                }
            }
            b += 1;
        }
        a += 1;
    }
    table
}

const fn in_n18(p: [i32; 3]) -> bool {
    p[0].abs() + p[1].abs() + p[2].abs() <= 2
}

pub const N18: u32 = n18_mask();

const fn n18_mask() -> u32 {
    let mut m = 0;
    let mut k = 0;
    while k < 27 {
        if k != CENTER && in_n18(offset_of(k)) {
            m |= 1 << k;
        }
        k += 1;
    }
    m
}

/// Cells of the center cube's boundary that a neighbor configuration can
/// cover: 8 vertices, 12 edges, 6 faces. Each entry is the set of neighbor
/// positions whose cube contains that cell.
struct BoundaryCells {
    vertices: [u32; 8],
    edges: [u32; 12],
    faces: [u32; 6],
}

static CELLS: BoundaryCells = boundary_cells();

const fn boundary_cells() -> BoundaryCells {
    let mut vertices = [0u32; 8];
    let mut edges = [0u32; 12];
    let mut faces = [0u32; 6];
    let signs = [-1, 1];

    let mut v = 0;
    let mut i = 0;
    while i < 2 {
        let mut j = 0;
        while j < 2 {
            let mut k = 0;
            while k < 2 {
                let (sx, sy, sz) = (signs[i], signs[j], signs[k]);
                let mut m = 0u32;
                let mut a = 0;
                while a < 2 {
                    let mut b = 0;
                    while b < 2 {
                        let mut c = 0;
                        while c < 2 {
                            if a + b + c > 0 {
                                m |= 1 << bit(sx * a, sy * b, sz * c);
                            }
                            c += 1;
                        }
                        b += 1;
                    }
                    a += 1;
                }
                vertices[v] = m;
                v += 1;
                k += 1;
            }
            j += 1;
        }
        i += 1;
    }

    // edges: along axis `ax`, positioned at signs (s, t) on the other two axes
    let mut e = 0;
    let mut ax = 0;
    while ax < 3 {
        let mut i = 0;
        while i < 2 {
            let mut j = 0;
            while j < 2 {
                let (s, t) = (signs[i], signs[j]);
                let (p, q, r) = match ax {
                    0 => ([0, s, 0], [0, 0, t], [0, s, t]),
                    1 => ([s, 0, 0], [0, 0, t], [s, 0, t]),
                    _ => ([s, 0, 0], [0, t, 0], [s, t, 0]),
                };
                edges[e] = (1 << bit(p[0], p[1], p[2]))
                    | (1 << bit(q[0], q[1], q[2]))
                    | (1 << bit(r[0], r[1], r[2]));
                e += 1;
                j += 1;
            }
            i += 1;
        }
        ax += 1;
    }

    let mut f = 0;
    let mut ax = 0;
    while ax < 3 {
        let mut i = 0;
        while i < 2 {
            let mut o = [0, 0, 0];
            o[ax] = signs[i];
            faces[f] = 1 << bit(o[0], o[1], o[2]);
            f += 1;
            i += 1;
        }
        ax += 1;
    }

    BoundaryCells {
        vertices,
        edges,
        faces,
    }
}

/// Euler characteristic of the part of the center cube's boundary shared with
/// foreground neighbors. Removing the center changes the image's Euler
/// characteristic by `1 - shared_boundary_euler(n)`.
#[inline]
pub fn shared_boundary_euler(n: u32) -> i32 {
    let count = |cells: &[u32]| cells.iter().filter(|&&m| n & m != 0).count() as i32;
    count(&CELLS.vertices) - count(&CELLS.edges) + count(&CELLS.faces)
}

#[inline]
pub fn is_euler_invariant(n: u32) -> bool {
    shared_boundary_euler(n) == 1
}

/// Number of components of `set` under the given adjacency table.
#[inline]
fn components(set: u32, adj: &[u32; 27]) -> u32 {
    let mut remaining = set;
    let mut count = 0;
    while remaining != 0 {
        let mut comp = remaining & remaining.wrapping_neg();
        loop {
            let mut grown = comp;
            let mut bits = comp;
            while bits != 0 {
                let b = bits.trailing_zeros();
                grown |= adj[b as usize] & set;
                bits &= bits - 1;
            }
            if grown == comp {
                break;
            }
            comp = grown;
        }
        remaining &= !comp;
        count += 1;
    }
    count
}

/// Number of 26-connected foreground components among the 26 neighbors.
#[inline]
pub fn foreground_components(n: u32) -> u32 {
    components(n & ALL_NEIGHBORS, &ADJ26)
}

#[inline]
pub fn neighbor_count(n: u32) -> u32 {
    (n & ALL_NEIGHBORS).count_ones()
}

#[inline]
pub fn is_endpoint(n: u32) -> bool {
    neighbor_count(n) == 1
}

/// Deletion test used by thinning: the center may be removed when it is not an
/// end point, the Euler characteristic is unchanged and its foreground
/// neighbors stay a single 26-component.
#[inline]
pub fn is_deletable(n: u32) -> bool {
    !is_endpoint(n) && is_euler_invariant(n) && foreground_components(n) == 1
}

/// Topological numbers for (26, 6) connectivity. `T26` counts 26-components of
/// the foreground neighbors; `T6` counts 6-components of the background in the
/// 18-neighborhood that touch a face of the center.
pub fn topological_numbers(n: u32) -> (u32, u32) {
    let t26 = foreground_components(n);
    let bg = !n & N18;
    let mut remaining = bg;
    let mut t6 = 0;
    while remaining != 0 {
        let mut comp = remaining & remaining.wrapping_neg();
        loop {
            let mut grown = comp;
            let mut bits = comp;
            while bits != 0 {
                let b = bits.trailing_zeros();
                grown |= ADJ6_N18[b as usize] & bg;
                bits &= bits - 1;
            }
            if grown == comp {
                break;
            }
            comp = grown;
        }
        if comp & FACE_NEIGHBORS != 0 {
            t6 += 1;
        }
        remaining &= !comp;
    }
    (t26, t6)
}
