use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::topology::thin;
use crate::volume::VoxelMask;

type Slot = Arc<OnceLock<Arc<Vec<usize>>>>;

/// Thinning results keyed by a hash of the mask content.
///
/// Concurrent requests for the same key block on one computation. With a
/// directory configured, results also persist across runs as JSON files.
#[derive(Default)]
pub struct SkeletonCache {
    slots: Mutex<HashMap<String, Slot>>,
    dir: Option<PathBuf>,
    computed: std::sync::atomic::AtomicUsize,
}

#[derive(Serialize, Deserialize)]
struct DiskEntry {
    dims: [usize; 3],
    voxels: Vec<usize>,
}

impl SkeletonCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        SkeletonCache {
            dir: Some(dir.into()),
            ..Self::default()
        }
    }

    /// Number of thinning runs actually performed (cache misses on disk and memory).
    pub fn computed(&self) -> usize {
        self.computed.load(std::sync::atomic::Ordering::Relaxed)
    }

    pub fn key(mask: &VoxelMask) -> String {
        let mut h = Sha256::new();
        for d in mask.dims() {
            h.update((d as u64).to_le_bytes());
        }
        let bytes: Vec<u8> = mask.data().iter().map(|&b| b as u8).collect();
        h.update(&bytes);
        hex::encode(h.finalize())
    }

    /// Centerline voxels of `mask`, thinning it only on a miss.
    pub fn thinned(&self, mask: &VoxelMask) -> Arc<Vec<usize>> {
        let key = Self::key(mask);
        let slot = {
            let mut slots = self.slots.lock().expect("cache lock poisoned");
            slots.entry(key.clone()).or_default().clone()
        };
        slot.get_or_init(|| {
            if let Some(v) = self.load(&key, mask.dims()) {
                return Arc::new(v);
            }
            self.computed
                .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            let voxels = thin(mask);
            self.store(&key, mask.dims(), &voxels);
            Arc::new(voxels)
        })
        .clone()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    fn load(&self, key: &str, dims: [usize; 3]) -> Option<Vec<usize>> {
        let text = fs::read_to_string(self.path(key)?).ok()?;
        let entry: DiskEntry = serde_json::from_str(&text).ok()?;
        (entry.dims == dims).then_some(entry.voxels)
    }

    fn store(&self, key: &str, dims: [usize; 3], voxels: &[usize]) {
        let Some(path) = self.path(key) else { return };
        let entry = DiskEntry {
            dims,
            voxels: voxels.to_vec(),
        };
        let write = || -> std::io::Result<()> {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            fs::write(&tmp, serde_json::to_vec(&entry)?)?;
            fs::rename(&tmp, &path)
        };
        if let Err(e) = write() {
            log::warn!("could not write skeleton cache {}: {e}", path.display());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Spacing;

    fn bar() -> VoxelMask {
        let mut m = VoxelMask::empty([5, 5, 12], Spacing::unit()).unwrap();
        for z in 1..11 {
            for y in 1..4 {
                for x in 1..4 {
                    m.set(x, y, z, true);
                }
            }
        }
        m
    }

    #[test]
    fn concurrent_requests_compute_once() {
        let cache = SkeletonCache::in_memory();
        let m = bar();
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| cache.thinned(&m));
            }
        });
        assert_eq!(cache.computed(), 1);
    }

    #[test]
    fn disk_cache_survives_new_instance() {
        let dir = tempfile::tempdir().unwrap();
        let m = bar();
        let first = SkeletonCache::with_dir(dir.path()).thinned(&m);
        let second_cache = SkeletonCache::with_dir(dir.path());
        let second = second_cache.thinned(&m);
        assert_eq!(first, second);
        assert_eq!(second_cache.computed(), 0);
    }
}
