//! Numerical engine for the polynomial algebras `sl_pd(2)` of multiphoton
//! two-mode models.
//!
//! * [`algebra`] builds sectors and their matrix representations from the
//!   structure polynomial alone.
//! * [`fock`] is the independent brute-force ladder-operator oracle, plus the
//!   single-mode cluster analysis.
//! * [`spectra`] diagonalizes sector blocks and propagates states.
//! * [`quasiclassical`] holds the Holstein-Primakoff map, coherent states,
//!   energy functionals and Bloch dynamics.
//! * [`verify`] runs the identity ledger used by `polylie verify`.

pub mod algebra;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod quasiclassical;
pub mod spectra;
pub mod tridiag;
pub mod verify;

pub use algebra::{
    build_sector_ops, casimir_residual, enumerate_sectors, falling_factorial, psi_big, psi_small,
    sector_of_fock, Dimension, ModelParams, Sector, SectorOperators, StructurePolynomial,
};
pub use error::{Error, Result};
