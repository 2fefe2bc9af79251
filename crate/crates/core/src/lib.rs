pub mod analysis;
pub mod dataset;
pub mod dtree;
pub mod features;
pub mod synth;
pub mod trace;
