//! Numerical construction of algebro-geometric solutions of rank-two
//! Schlesinger systems from elliptic and hyperelliptic curve data, with the
//! associated Painlevé VI pipelines, tau functions and confocal billiards.
//!
//! The crate is organised around [`curve::CurveFrame`]: a hyperelliptic curve
//! v^2 = prod (u - u_j) with a deterministic canonical homology basis and all
//! period integrals computed by contour quadrature.  On top of it sit the
//! Jacobi inversion ([`inversion`]), the third-kind differential and its
//! zeros ([`omega`]), the Painlevé VI and Okamoto machinery ([`painleve`]),
//! the Schlesinger residue matrices ([`schlesinger`]), the elliptic tau
//! function ([`tau`]) and the billiard ordered games ([`billiards`]).

pub mod billiards;
pub mod config;
pub mod curve;
pub mod error;
pub mod inversion;
pub mod omega;
pub mod painleve;
pub mod poly;
pub mod quad;
pub mod schlesinger;
pub mod tau;

pub use curve::{
    BranchConfiguration, CurveFrame, CycleBasis, QuadratureSpec, SurfacePoint, SymplecticBlocks,
};
pub use error::{Error, Result};
pub use inversion::{Divisor, LatticeCoordinates};
pub use omega::OmegaDifferential;
pub use schlesinger::{BetaSet, Mat2, ResidueMatrixSet};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
