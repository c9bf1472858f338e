pub mod evo;
pub mod export;
pub mod map;
pub mod metrics;
pub mod pathfind;
pub mod pipeline;
pub mod scaling;
pub mod submap;
