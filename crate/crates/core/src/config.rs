//! JSON-facing descriptions of curves and lattice coordinates.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::curve::{BranchConfiguration, CurveFrame, CycleBasis, QuadratureSpec};
use crate::error::Result;
use crate::inversion::LatticeCoordinates;

/// Curve description as read from JSON:
/// `{"branch_points": [[re, im], ...], "quadrature": {"nodes": n, "tol": t}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveInput {
    pub branch_points: Vec<[f64; 2]>,
    #[serde(default)]
    pub quadrature: QuadratureInput,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadratureInput {
    pub nodes: usize,
    pub tol: f64,
    #[serde(default = "default_refinements")]
    pub max_refinements: usize,
}

fn default_refinements() -> usize {
    9
}

impl Default for QuadratureInput {
    fn default() -> Self {
        QuadratureInput { nodes: 24, tol: 1e-11, max_refinements: 9 }
    }
}

impl CurveInput {
    pub fn quadrature_spec(&self) -> Result<QuadratureSpec> {
        QuadratureSpec::new(
            self.quadrature.nodes,
            self.quadrature.tol,
            self.quadrature.max_refinements,
        )
    }

    pub fn branch_configuration(&self) -> Result<BranchConfiguration> {
        BranchConfiguration::new(
            self.branch_points
                .iter()
                .map(|p| C::new(p[0], p[1]))
                .collect(),
        )
    }

    pub fn build_frame(&self) -> Result<CurveFrame> {
        let config = self.branch_configuration()?;
        let cycles = CycleBasis::canonical(&config)?;
        CurveFrame::build(config, cycles, self.quadrature_spec()?)
    }
}

/// Lattice coordinates as read from JSON: `{"c1": [[re, im], ...], "c2": ...}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeCoordsInput {
    pub c1: Vec<[f64; 2]>,
    pub c2: Vec<[f64; 2]>,
}

impl LatticeCoordsInput {
    pub fn coords(&self) -> Result<LatticeCoordinates> {
        LatticeCoordinates::new(
            self.c1.iter().map(|p| C::new(p[0], p[1])).collect(),
            self.c2.iter().map(|p| C::new(p[0], p[1])).collect(),
        )
    }
}
