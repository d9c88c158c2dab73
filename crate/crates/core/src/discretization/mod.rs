//! Meshes, discrete fields and quadrature.
//!
//! Two discretizations share one interface: [`AnnularMesh2D`] (full planar
//! annulus, `d = 2`) and [`RadialGrid`] (radially symmetric problems in any
//! `d`, integrals carry the weight `ω_d r^{d-1}`). Both expose their
//! quadrature as a flat list of [`QuadSample`]s with shape values and
//! Cartesian shape gradients, which is all the energy solver and the
//! verification integrals need.

mod field;
mod mesh;
mod radial;

use std::io::Write;

use rayon::prelude::*;

pub use field::{sample_on_annuli, AnnulusSamples, FieldSource, PointSource, ScalarField};
pub use mesh::AnnularMesh2D;
pub use radial::RadialGrid;

use crate::{Error, Result};

/// Default radial grading (ratio between consecutive radial spacings).
pub const DEFAULT_GRADING: f64 = 1.15;
/// Default Gauss points per direction and cell.
pub const DEFAULT_QUAD_ORDER: usize = 2;
/// Relative reduction tolerance documented for [`Reduction::Parallel`].
pub const PARALLEL_REDUCTION_TOL: f64 = 1e-13;

/// Summation mode for global reductions.
///
/// `Deterministic` sums samples left to right. `Parallel` uses a rayon tree
/// reduction whose result may differ from the sequential one by up to
/// [`PARALLEL_REDUCTION_TOL`] relative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Deterministic,
    Parallel,
}

impl Reduction {
    /// `PHARM_DETERMINISTIC=1` selects the deterministic mode; anything else
    /// allows parallel reductions.
    pub fn from_env() -> Self {
        match std::env::var("PHARM_DETERMINISTIC") {
            Ok(v) if v.trim() == "1" => Reduction::Deterministic,
            _ => Reduction::Parallel,
        }
    }
}

/// One quadrature point with everything needed to evaluate a nodal field.
///
/// `shape[k]` and `grad[k]` belong to the `k`-th node of `cell`; radial
/// cells use the first two entries and only the first gradient component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSample {
    pub cell: usize,
    pub weight: f64,
    pub radius: f64,
    pub position: [f64; 2],
    pub shape: [f64; 4],
    pub grad: [[f64; 2]; 4],
}

impl QuadSample {
    pub fn value(&self, nodes: &[usize], u: &[f64]) -> f64 {
        nodes.iter().enumerate().map(|(k, &n)| self.shape[k] * u[n]).sum()
    }

    pub fn gradient(&self, nodes: &[usize], u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (k, &n) in nodes.iter().enumerate() {
            g[0] += self.grad[k][0] * u[n];
            g[1] += self.grad[k][1] * u[n];
        }
        g
    }
}

/// Inner (hole) or outer (truncation) circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Circle {
    Inner,
    Outer,
}

impl Circle {
    /// Selects the boundary circle at radius `r`; any other radius is an error.
    pub fn at_radius<M: Discretization + ?Sized>(mesh: &M, r: f64) -> Result<Self> {
        let tol = 1e-12 * mesh.outer_radius();
        if (r - mesh.inner_radius()).abs() <= tol {
            Ok(Circle::Inner)
        } else if (r - mesh.outer_radius()).abs() <= tol {
            Ok(Circle::Outer)
        } else {
            Err(Error::Precondition(format!(
                "radius {r} is neither the inner ({}) nor the outer ({}) circle",
                mesh.inner_radius(),
                mesh.outer_radius()
            )))
        }
    }
}

/// Boundary node with its trapezoidal weight (arc length or sphere area).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub node: usize,
    pub weight: f64,
    pub theta: f64,
}

pub trait Discretization: Send + Sync {
    /// Spatial dimension `d` of the problem the discretization represents.
    fn spatial_dim(&self) -> u32;
    fn node_count(&self) -> usize;
    fn cell_count(&self) -> usize;
    fn cell_nodes(&self, cell: usize) -> &[usize];
    /// Planar position of a node; radial grids report `(r, 0)`.
    fn node_position(&self, node: usize) -> [f64; 2];
    fn node_polar(&self, node: usize) -> (f64, f64);
    fn inner_radius(&self) -> f64;
    fn outer_radius(&self) -> f64;
    /// Quadrature samples of every cell, grouped by cell in cell order.
    fn quadrature(&self) -> &[QuadSample];
    /// Samples covering `{r_lo <= |x| <= r_hi}` exactly: cells crossing the
    /// band edges are clipped in the radial reference coordinate.
    fn band_samples(&self, r_lo: f64, r_hi: f64, order: usize) -> Vec<QuadSample>;
    /// One sample per cell at its reference centre; `weight` is the cell measure.
    fn cell_centers(&self) -> Vec<QuadSample>;
    fn boundary_nodes(&self, circle: Circle) -> Vec<BoundaryNode>;
    /// Interpolated value of a nodal field at polar coordinates `(r, θ)`.
    fn interpolate(&self, values: &[f64], r: f64, theta: f64) -> Result<f64>;
    /// CSV dump, one row per node, 17 significant digits.
    fn write_csv(&self, values: &[f64], out: &mut dyn Write) -> std::io::Result<()>;
}

/// Tensor-Gauss quadrature of `integrand` over the whole mesh, summed left
/// to right.
pub fn integrate<M, F>(mesh: &M, integrand: F) -> f64
where
    M: Discretization + ?Sized,
    F: Fn(&QuadSample) -> f64 + Sync,
{
    integrate_with(mesh, integrand, Reduction::Deterministic)
}

pub fn integrate_with<M, F>(mesh: &M, integrand: F, mode: Reduction) -> f64
where
    M: Discretization + ?Sized,
    F: Fn(&QuadSample) -> f64 + Sync,
{
    sum_samples(mesh.quadrature(), integrand, mode)
}

pub(crate) fn sum_samples<F>(samples: &[QuadSample], integrand: F, mode: Reduction) -> f64
where
    F: Fn(&QuadSample) -> f64 + Sync,
{
    match mode {
        Reduction::Deterministic => samples.iter().map(|s| s.weight * integrand(s)).sum(),
        Reduction::Parallel => samples.par_iter().map(|s| s.weight * integrand(s)).sum(),
    }
}

/// Trapezoidal rule over the nodes of one boundary circle. The integrand
/// receives the node index, its position and its angle.
pub fn integrate_boundary<M, F>(mesh: &M, circle: Circle, integrand: F) -> f64
where
    M: Discretization + ?Sized,
    F: Fn(usize, [f64; 2], f64) -> f64,
{
    mesh.boundary_nodes(circle)
        .iter()
        .map(|b| b.weight * integrand(b.node, mesh.node_position(b.node), b.theta))
        .sum()
}

/// Per-cell gradient of a nodal field evaluated at the cell centre.
pub fn gradient<M: Discretization + ?Sized>(mesh: &M, values: &[f64]) -> Vec<[f64; 2]> {
    mesh.cell_centers()
        .iter()
        .map(|s| s.gradient(mesh.cell_nodes(s.cell), values))
        .collect()
}

/// `{:.16e}` gives 17 significant digits.
pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn boundary_selector() {
        let m = AnnularMesh2D::new(1.0, 2.0, 3, 8, 1.0).unwrap();
        assert_eq!(Circle::at_radius(&m, 1.0).unwrap(), Circle::Inner);
        assert_eq!(Circle::at_radius(&m, 2.0).unwrap(), Circle::Outer);
        assert!(Circle::at_radius(&m, 1.5).is_err());
    }

    #[test]
    fn boundary_integrals() {
        let m = AnnularMesh2D::new(1.0, 3.0, 3, 16, 1.0).unwrap();
        assert!((integrate_boundary(&m, Circle::Inner, |_, _, _| 1.0) - 2.0 * PI).abs() < 1e-10);
        let m = AnnularMesh2D::new(2.0, 3.0, 3, 16, 1.0).unwrap();
        assert!((integrate_boundary(&m, Circle::Inner, |_, _, _| 3.0) - 12.0 * PI).abs() < 1e-10);
        let m = AnnularMesh2D::new(1.0, 3.0, 3, 16, 1.0).unwrap();
        let h = |v: f64| v.abs() * v;
        let val = integrate_boundary(&m, Circle::Inner, |_, _, _| h(2.0) * 2.0);
        assert!((val - 16.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn parallel_reduction_within_tolerance() {
        let m = AnnularMesh2D::new(1.0, 5.0, 40, 64, 1.05).unwrap();
        let f = |s: &QuadSample| (s.position[0] * 3.0).sin() + s.radius;
        let a = integrate_with(&m, f, Reduction::Deterministic);
        let b = integrate_with(&m, f, Reduction::Parallel);
        assert!((a - b).abs() <= PARALLEL_REDUCTION_TOL * a.abs());
    }
}
