pub mod average;
pub mod curve;
pub mod data;
pub mod evaluate;
pub mod simulate;
pub mod train;
