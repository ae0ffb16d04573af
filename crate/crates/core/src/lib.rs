//! A dynamic knowledge-graph engine: a curated triple base fused with a
//! stream of extracted triples, confidence scoring, streaming pattern
//! mining and topic-coherent path queries.

pub mod bpr;
pub mod config;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod kg;
pub mod linker;
pub mod mine;
pub mod predmap;
pub mod topics;
pub mod views;

pub use config::EngineConfig;
pub use engine::{Engine, PathRequest, View};
pub use error::{Error, Result};
