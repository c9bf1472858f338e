pub mod baseline;
pub mod coherence;
pub mod evaluate;
pub mod generate;
pub mod render;
pub mod scale;
