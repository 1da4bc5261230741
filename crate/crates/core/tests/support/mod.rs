//! Reference implementations and fixtures shared by integration tests.
#![allow(dead_code)]

pub mod bfs;
pub mod fixtures;
pub mod naive_mtl;
pub mod paths;
