//! Sliding-window accumulators with constant work per symbol.

use std::collections::{HashMap, VecDeque};

/// `n log2 n`, with `0 log 0 = 0`.
#[inline]
pub(crate) fn n_log2_n(n: u64) -> f64 {
    if n <= 1 {
        0.0
    } else {
        let x = n as f64;
        x * x.log2()
    }
}

/// Windowed plug-in Shannon entropy.
///
/// Keeps `S = Σ N(s) log2 N(s)` so that `H = log2 N - S / N`. Each push
/// touches at most two counts (the incoming and the evicted symbol), so the
/// update is O(1). `S` is rebuilt from the integer counts every
/// `refresh_every` pushes to stop rounding drift from accumulating.
#[derive(Debug, Clone)]
pub struct WindowedShannon {
    capacity: usize,
    buf: VecDeque<u32>,
    counts: HashMap<u32, u64>,
    sum_nlogn: f64,
    since_refresh: usize,
    refresh_every: usize,
}

impl WindowedShannon {
    pub const DEFAULT_REFRESH: usize = 10_000;

    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        WindowedShannon {
            capacity,
            buf: VecDeque::with_capacity(capacity.min(1 << 20)),
            counts: HashMap::new(),
            sum_nlogn: 0.0,
            since_refresh: 0,
            refresh_every: Self::DEFAULT_REFRESH,
        }
    }

    pub fn with_refresh(mut self, every: usize) -> Self {
        self.refresh_every = every.max(1);
        self
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn bump(&mut self, sym: u32, up: bool) {
        let c = self.counts.entry(sym).or_insert(0);
        let old = *c;
        let new = if up { old + 1 } else { old - 1 };
        self.sum_nlogn += n_log2_n(new) - n_log2_n(old);
        if new == 0 {
            self.counts.remove(&sym);
        } else {
            *c = new;
        }
    }

    /// Adds a symbol, evicting the oldest one once full, and returns the
    /// entropy of the current window in bits.
    pub fn push(&mut self, sym: u32) -> f64 {
        if self.buf.len() == self.capacity {
            let old = self.buf.pop_front().expect("full window");
            if old != sym {
                self.bump(old, false);
                self.bump(sym, true);
            }
        } else {
            self.bump(sym, true);
        }
        self.buf.push_back(sym);
        self.since_refresh += 1;
        if self.since_refresh >= self.refresh_every {
            self.refresh();
        }
        self.entropy()
    }

    /// Recomputes the running sum from the counts.
    pub fn refresh(&mut self) {
        let mut counts: Vec<u64> = self.counts.values().copied().collect();
        counts.sort_unstable();
        self.sum_nlogn = counts.into_iter().map(n_log2_n).sum();
        self.since_refresh = 0;
    }

    pub fn entropy(&self) -> f64 {
        let n = self.buf.len();
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        (nf.log2() - self.sum_nlogn / nf).max(0.0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

/// Windowed Hartley entropy: log2 of the distinct symbols in the window.
#[derive(Debug, Clone)]
pub struct WindowedHartley {
    capacity: usize,
    buf: VecDeque<u32>,
    counts: HashMap<u32, u64>,
}

impl WindowedHartley {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        WindowedHartley {
            capacity,
            buf: VecDeque::with_capacity(capacity.min(1 << 20)),
            counts: HashMap::new(),
        }
    }

    pub fn push(&mut self, sym: u32) -> f64 {
        if self.buf.len() == self.capacity {
            let old = self.buf.pop_front().expect("full window");
            if let Some(c) = self.counts.get_mut(&old) {
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(&old);
                }
            }
        }
        *self.counts.entry(sym).or_insert(0) += 1;
        self.buf.push_back(sym);
        (self.counts.len() as f64).log2()
    }
}
