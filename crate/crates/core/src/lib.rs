//! Cantilever-beam FEA pipeline and boundary-oriented graph embedding.
//!
//! Stages: [`beamgen`] designs → [`mesher`] triangulation → [`fea`] plane
//! elasticity → [`simp`] topology optimization → [`boge`] graph samples, with
//! [`dataset`] orchestrating whole datasets and [`cli`] exposing each stage.

pub mod beamgen;
pub mod boge;
pub mod cli;
pub mod dataset;
pub mod fea;
pub mod geometry;
pub mod linalg;
pub mod mesher;
pub mod metrics;
pub mod render;
pub mod simp;
