//! Grasp synthesis and benchmarking over synthetic top-down depth scenes.

pub mod bench;
pub mod config;
pub mod domain;
pub mod external;
pub mod io;
pub mod maskgrasp;
pub mod par;
pub mod preprocess;
pub mod scene;
pub mod stability;
pub mod topsurface;

pub use domain::*;
