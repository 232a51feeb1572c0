//! Inner-product accounting.
//!
//! The cost of a selection step is measured in m-dimensional inner products,
//! split into the three terms of the screened-selection cost model:
//!
//! * `tau`: correlations with the probe set that define the threshold,
//! * `test`: one correlation per region test,
//! * `reduced_scan`: correlations with the surviving atoms.
//!
//! An exhaustive selection is booked as a reduced scan over every atom.
//! One-time membership precomputation goes to `setup` and is excluded from
//! [`CostSnapshot::total`].

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::dictionary::Signal;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostCategory {
    Tau,
    Test,
    ReducedScan,
    Setup,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostSnapshot {
    pub tau: u64,
    pub test: u64,
    pub reduced_scan: u64,
    pub setup: u64,
}

impl CostSnapshot {
    /// Selection cost; setup is reported separately.
    pub fn total(&self) -> u64 {
        self.tau + self.test + self.reduced_scan
    }

    /// Component-wise difference `self - earlier`.
    pub fn since(&self, earlier: &CostSnapshot) -> CostSnapshot {
        CostSnapshot {
            tau: self.tau - earlier.tau,
            test: self.test - earlier.test,
            reduced_scan: self.reduced_scan - earlier.reduced_scan,
            setup: self.setup - earlier.setup,
        }
    }
}

/// Thread-safe inner-product counter.
#[derive(Debug, Default)]
pub struct CostCounter {
    tau: AtomicU64,
    test: AtomicU64,
    reduced_scan: AtomicU64,
    setup: AtomicU64,
    iterations: Mutex<Vec<CostSnapshot>>,
}

impl CostCounter {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&self, category: CostCategory) -> &AtomicU64 {
        match category {
            CostCategory::Tau => &self.tau,
            CostCategory::Test => &self.test,
            CostCategory::ReducedScan => &self.reduced_scan,
            CostCategory::Setup => &self.setup,
        }
    }

    pub fn add(&self, category: CostCategory, count: u64) {
        self.slot(category).fetch_add(count, Ordering::Relaxed);
    }

    /// Inner product of `u` and `v`, booked as one unit under `category`.
    pub fn inner_product(&self, u: &Signal, v: &Signal, category: CostCategory) -> Result<f64> {
        let value = u.inner_product(v)?;
        self.add(category, 1);
        Ok(value)
    }

    pub fn snapshot(&self) -> CostSnapshot {
        CostSnapshot {
            tau: self.tau.load(Ordering::Relaxed),
            test: self.test.load(Ordering::Relaxed),
            reduced_scan: self.reduced_scan.load(Ordering::Relaxed),
            setup: self.setup.load(Ordering::Relaxed),
        }
    }

    /// Records the current totals as the end of one solver iteration.
    /// Only call at quiescent points.
    pub fn mark_iteration(&self) -> CostSnapshot {
        let snap = self.snapshot();
        self.iterations.lock().expect("counter mutex").push(snap);
        snap
    }

    /// Cumulative snapshots, one per [`mark_iteration`](Self::mark_iteration) call.
    pub fn iterations(&self) -> Vec<CostSnapshot> {
        self.iterations.lock().expect("counter mutex").clone()
    }
}
