//! Explicitly correlated two-electron basis for the Sigma states of H2.
//!
//! Functions have the form
//! `exp(-alpha xi1 - alphabar xi2) cosh(beta eta1 + betabar eta2) xi1^r eta1^s xi2^rbar eta2^sbar (2 r12 / R)^mu`,
//! symmetrized over electron exchange. Matrix elements are computed by
//! quadrature in prolate spheroidal coordinates and then orthonormalized.

pub mod basis;
pub mod geometry;
pub mod integrals;
pub mod orthonormalize;
pub mod quadrature;

pub use basis::{basis_gradient, basis_value, BasisSet, BasisTerm, Spin};
pub use geometry::{prolate_to_cartesian, r12, Cartesian, Coordinates, GeometryConfig};
pub use integrals::{compute_integrals, hamiltonian_matrix, overlap_matrix, Integrals};
pub use orthonormalize::{gram_schmidt_orthonormalize, Orthonormalized};
pub use quadrature::{GridLevel, QuadratureGrid, DEFAULT_LEVEL, REFINED_LEVEL};
