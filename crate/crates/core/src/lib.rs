//! Random linear network coding of correlated discrete sources: field
//! arithmetic, source models, encoding and preprocessing, MAP error bounds,
//! and a correlation-aware belief-propagation decoder.

pub mod gf;
pub mod model;
pub mod coding;
pub mod bounds;
pub mod decode;
