//! Hybrid fast/slow models built from trimmed samples.

mod model;
mod region;
mod segment;

pub use model::{
    fit_hybrid, simulate_hybrid, HybridFit, HybridModel, HybridOptions, HybridSimulation,
    ModelLabel, Partition, Region,
};
pub use region::{build_fast_regions, default_margin, merge_fast_regions, FastRegion, RegionSet};
pub use segment::{segment_mask, segment_trajectory, Scale, Segment};
