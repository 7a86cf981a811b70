pub mod analysis;
pub mod cli;
pub mod dpp;
pub mod error;
pub mod game;
pub mod geometry;
pub mod grid;
pub mod output;
pub mod quadrature;
