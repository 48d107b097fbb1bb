pub mod error;
pub mod matrix;
pub mod par;
pub mod schedule;
pub mod filtration;
pub mod reduce;
pub mod vineyard;
pub mod moves;
pub mod engine;
pub mod apps;
