//! Factored interactive trajectory prediction for pairs and small groups of
//! interacting agents over synthetic driving scenarios.

pub mod error;
pub mod experiment;
pub mod geom;
pub mod metrics;
pub mod pipeline;
pub mod predict;
pub mod relation;
pub mod scengen;
pub mod scenario;
pub mod trajectory;

pub use error::{Error, Result};

/// Order-preserving map, spread over the rayon pool when the `parallel` feature is on.
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
