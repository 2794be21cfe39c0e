use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical voxel size in millimetres along x, y and z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl Spacing {
    pub fn new(dx: f64, dy: f64, dz: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(dx) && ok(dy) && ok(dz) {
            Ok(Spacing { dx, dy, dz })
        } else {
            Err(Error::InvalidSpacing(dx, dy, dz))
        }
    }

    pub fn isotropic(d: f64) -> Result<Self> {
        Self::new(d, d, d)
    }

    pub fn unit() -> Self {
        Spacing {
            dx: 1.0,
            dy: 1.0,
            dz: 1.0,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    /// Physical length of a step of `delta` voxels.
    pub fn step_length(&self, delta: [i64; 3]) -> f64 {
        let x = delta[0] as f64 * self.dx;
        let y = delta[1] as f64 * self.dy;
        let z = delta[2] as f64 * self.dz;
        (x * x + y * y + z * z).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Spacing) -> f64 {
        (self.dx - other.dx)
            .abs()
            .max((self.dy - other.dy).abs())
            .max((self.dz - other.dz).abs())
    }
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing::unit()
    }
}

/// Binary occupancy grid stored x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelMask {
    dims: [usize; 3],
    data: Vec<bool>,
    spacing: Spacing,
}

impl VoxelMask {
    pub fn empty(dims: [usize; 3], spacing: Spacing) -> Result<Self> {
        let n = checked_len(dims)?;
        Ok(VoxelMask {
            dims,
            data: vec![false; n],
            spacing,
        })
    }

    pub fn from_bools(dims: [usize; 3], data: Vec<bool>, spacing: Spacing) -> Result<Self> {
        let n = checked_len(dims)?;
        if data.len() != n {
            return Err(Error::PayloadMismatch {
                expected: n,
                actual: data.len(),
            });
        }
        Ok(VoxelMask {
            dims,
            data,
            spacing,
        })
    }

    /// Builds a mask from arbitrary intensities; a voxel is foreground when its
    /// value is strictly greater than `threshold`.
    pub fn from_values<T: Copy + Into<f64>>(
        dims: [usize; 3],
        values: &[T],
        threshold: f64,
        spacing: Spacing,
    ) -> Result<Self> {
        let data = values.iter().map(|&v| v.into() > threshold).collect();
        Self::from_bools(dims, data, spacing)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }

    /// |I|, the number of voxels in the grid.
    pub fn total_voxels(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<bool> {
        self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.index(x, y, z)]
    }

    /// Signed lookup; anything outside the grid reads as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64, z: i64) -> bool {
        if x < 0 || y < 0 || z < 0 {
            return false;
        }
        let (x, y, z) = (x as usize, y as usize, z as usize);
        if x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
            return false;
        }
        self.get(x, y, z)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.index(x, y, z);
        self.data[i] = value;
    }

    /// Re-applies binarization. Masks are already binary so this is the identity;
    /// it exists so pipelines can state the step explicitly.
    pub fn binarized(&self) -> VoxelMask {
        self.clone()
    }

    pub fn foreground_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| v.then_some(i))
    }
}

fn checked_len(dims: [usize; 3]) -> Result<usize> {
    if dims.contains(&0) {
        return Err(Error::InvalidDims(dims));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(Error::InvalidDims(dims))
}

/// Voxel confusion counts of a prediction against a reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// |Ŷ|
    pub fn predicted(&self) -> u64 {
        self.tp + self.fp
    }

    /// |Y|
    pub fn reference(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn swapped(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tn,
        }
    }
}

/// Outcome of comparing two grids before evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeCheck {
    /// Set when spacings differ by [`SPACING_TOLERANCE_MM`] or more.
    pub spacing_warning: Option<String>,
}

pub const SPACING_TOLERANCE_MM: f64 = 1e-4;

/// Refuses evaluation when dims differ. A spacing difference is only a warning;
/// callers take spacing from the ground truth.
pub fn shape_check(pred: &VoxelMask, gt: &VoxelMask) -> Result<ShapeCheck> {
    if pred.dims != gt.dims {
        return Err(Error::DimensionMismatch {
            pred: pred.dims,
            gt: gt.dims,
        });
    }
    let diff = pred.spacing.max_abs_diff(&gt.spacing);
    // a difference of exactly the tolerance (e.g. 0.5 vs 0.5001) warns
    let spacing_warning = (diff >= SPACING_TOLERANCE_MM - 1e-12).then(|| {
        let p = pred.spacing;
        let g = gt.spacing;
        format!(
            "spacing mismatch: prediction ({}, {}, {}) vs ground truth ({}, {}, {}); using ground truth",
            p.dx, p.dy, p.dz, g.dx, g.dy, g.dz
        )
    });
    Ok(ShapeCheck { spacing_warning })
}

pub fn confusion(pred: &VoxelMask, gt: &VoxelMask) -> Result<ConfusionCounts> {
    shape_check(pred, gt)?;
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.data.iter().zip(gt.data.iter()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}
