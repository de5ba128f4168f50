//! Reusable visited-set buffers for graph traversal.
//!
//! A fresh boolean array per query would cost O(n) zeroing on every
//! search; stamped epochs make reset O(1). Buffers are pooled behind a
//! mutex so concurrent read-only searches each grab their own.

use std::sync::Mutex;

#[derive(Debug, Default)]
struct VisitedBuf {
    stamps: Vec<u32>,
    epoch: u32,
}

#[derive(Debug, Default)]
pub(crate) struct VisitedPool {
    bufs: Mutex<Vec<VisitedBuf>>,
}

pub(crate) struct VisitedGuard<'a> {
    pool: &'a VisitedPool,
    buf: VisitedBuf,
}

impl VisitedPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Check out a buffer covering node ids `0..n`.
    pub fn checkout(&self, n: usize) -> VisitedGuard<'_> {
        let mut buf = self.bufs.lock().expect("visited pool poisoned").pop().unwrap_or_default();
        if buf.stamps.len() < n {
            buf.stamps.resize(n, 0);
        }
        if buf.epoch == u32::MAX {
            buf.stamps.fill(0);
            buf.epoch = 0;
        }
        buf.epoch += 1;
        VisitedGuard { pool: self, buf }
    }
}

impl VisitedGuard<'_> {
    /// Mark `id` visited; returns true if it was already visited.
    #[inline]
    pub fn test_and_set(&mut self, id: u32) -> bool {
        let slot = &mut self.buf.stamps[id as usize];
        let seen = *slot == self.buf.epoch;
        *slot = self.buf.epoch;
        seen
    }
}

impl Drop for VisitedGuard<'_> {
    fn drop(&mut self) {
        let buf = std::mem::take(&mut self.buf);
        self.pool.bufs.lock().expect("visited pool poisoned").push(buf);
    }
}
