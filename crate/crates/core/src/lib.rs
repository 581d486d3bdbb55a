//! Decoupled finite-element solver for the Cahn-Hilliard-Stokes-Darcy
//! system on a two-subdomain (conduit / porous matrix) rectangle.

pub mod analysis;
pub mod ch_step;
pub mod cli;
pub mod config;
pub mod discretization;
pub mod fem;
pub mod io;
pub mod forcing;
pub mod mesh;
pub mod params;
pub mod scheme;
pub mod stokes_darcy;
