//! Finite-element machinery: quadrature, Lagrange spaces, sparse assembly
//! and the direct solver.

pub mod assembly;
pub mod field;
pub mod quadrature;
pub mod space;
pub mod sparse;

pub use assembly::{
    assemble_bilinear, assemble_bilinear_with_degree, assemble_linear, assemble_linear_with_degree, AssemblyError,
    Coefficient, Kernel, Source, integrate, integrate_interface,
};
pub use field::QuadPoint;
pub use quadrature::{quadrature, QuadratureRule, UnsupportedDegree};
pub use space::{CellGeometry, Family, FeSpace, Support};
pub use sparse::{solve_sparse, LuFactor, SolveError, SolveReport, SparseMatrix, TripletBuilder};
