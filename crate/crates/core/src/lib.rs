pub mod audit;
pub mod bench;
pub mod config;
pub mod conflict_tree;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod model;
pub mod reeds_shepp;
pub mod render;
pub mod scenario;
pub mod search_coop;
pub mod search_single;
pub mod trajectory;
pub mod world;
