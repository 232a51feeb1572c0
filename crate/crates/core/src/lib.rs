//! Region-based screening for the atom-selection step of greedy sparse
//! approximation.
//!
//! Greedy solvers such as matching pursuit and OMP repeatedly pick the atom
//! maximizing `|<r, a>|`. This crate shrinks that search: a threshold `tau`
//! is computed on a few probe atoms, and whole sphere or dome regions whose
//! closed-form correlation bound stays below `tau` are discarded without
//! touching their atoms. The surviving argmax is provably the global one.
//!
//! Discrete dictionaries (e.g. DOA steering vectors) and continuous,
//! parameter-indexed dictionaries (e.g. Gaussian atoms) are both supported.
//! All data-parallel loops go through [`exec::Exec`]; disable the default
//! `parallel` feature for a purely sequential build.

pub mod dictionary;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod instrumentation;
pub mod regions;
pub mod screening;
pub mod selection;
pub mod solvers;

pub use dictionary::{
    build_doa_dictionary, build_gaussian_dictionary, AtomId, DiscreteDictionary, GaussianDictionary,
    ParametricDictionary, Residual, Signal,
};
pub use error::{Error, Result};
pub use exec::Exec;
pub use instrumentation::{CostCategory, CostCounter, CostSnapshot};
pub use regions::{DomeRegion, Geometry, Interval, Region, RegionSet, SphereRegion};
pub use screening::{ContinuousScreener, DiscreteScreener, ProbeSet, ScreeningReport};
pub use selection::{Selection, Selector};
pub use solvers::{SolverConfig, SolverKind, SparseSolution};
