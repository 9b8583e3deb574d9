//! Traversability-aware navigation for skid-steer robots: traction
//! estimation, self-supervised labels and a sampling MPC.

pub mod camera;
pub mod control;
pub mod estimation;
pub mod harness;
pub mod kinodynamics;
pub mod labeling;
pub mod world;
