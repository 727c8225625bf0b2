use std::num::NonZeroUsize;
use std::sync::Mutex;

use lru::LruCache;

/// Which residual sum a cache entry holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RssSource {
    /// Per-class regression in class `k`.
    Class(usize),
    /// Shared-coefficient regression pooled over the classes where the
    /// response node is not intervened on.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    source: RssSource,
    node: usize,
    parents: Vec<usize>,
}

/// Residual sums of squares keyed by `(source, node, sorted parent set)`.
///
/// Unbounded by default; with a capacity, least-recently-used entries are
/// evicted. Safe to share between threads.
pub struct ScoreCache {
    inner: Mutex<LruCache<CacheKey, f64>>,
}

impl ScoreCache {
    pub fn unbounded() -> Self {
        ScoreCache {
            inner: Mutex::new(LruCache::unbounded()),
        }
    }

    pub fn with_capacity(cap: NonZeroUsize) -> Self {
        ScoreCache {
            inner: Mutex::new(LruCache::new(cap)),
        }
    }

    /// Cached value for the key, computing and storing it on a miss.
    /// `parents` must already be sorted and deduplicated.
    pub fn get_or_insert<E>(
        &self,
        source: RssSource,
        node: usize,
        parents: &[usize],
        compute: impl FnOnce() -> Result<f64, E>,
    ) -> Result<f64, E> {
        let key = CacheKey {
            source,
            node,
            parents: parents.to_vec(),
        };
        if let Some(&v) = self.inner.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let v = compute()?;
        self.inner.lock().expect("cache lock").put(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for ScoreCache {
    fn default() -> Self {
        Self::unbounded()
    }
}

impl std::fmt::Debug for ScoreCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoreCache").field("len", &self.len()).finish()
    }
}
