use std::io::Write;

use super::mesh::{geometric_radii, locate};
use super::{fmt_num, BoundaryNode, Circle, Discretization, QuadSample, DEFAULT_QUAD_ORDER};
use crate::analytic::omega_d;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Strictly increasing radii `r_0 < ... < r_N` for radially symmetric fields
/// in `R^d`. Integrals carry the sphere weight `ω_d r^{d-1}`; cells are the
/// intervals between consecutive radii with linear elements.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    d: u32,
    radii: Vec<f64>,
    cells: Vec<[usize; 2]>,
    samples: Vec<QuadSample>,
    omega: f64,
}

impl RadialGrid {
    pub fn new(d: u32, radii: Vec<f64>) -> Result<Self> {
        Self::with_quadrature(d, radii, DEFAULT_QUAD_ORDER + 1)
    }

    pub fn with_quadrature(d: u32, radii: Vec<f64>, order: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Config(format!("dimension must be at least 2, got {d}")));
        }
        if radii.len() < 3 {
            return Err(Error::Config(format!(
                "radial grid needs at least 3 radii (N >= 2), got {}",
                radii.len()
            )));
        }
        if !(radii[0] > 0.0) || radii.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("radii must be positive and finite".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("radii must be strictly increasing".into()));
        }
        if order == 0 || order > 16 {
            return Err(Error::Config(format!(
                "quadrature order must be in 1..=16, got {order}"
            )));
        }
        let cells = (0..radii.len() - 1).map(|k| [k, k + 1]).collect();
        let mut grid = Self {
            d,
            radii,
            cells,
            samples: Vec::new(),
            omega: omega_d(d),
        };
        let (x, w) = gauss_legendre(order);
        let mut samples = Vec::with_capacity(grid.cells.len() * order);
        for c in 0..grid.cells.len() {
            for (xi, wi) in x.iter().zip(&w) {
                samples.push(grid.sample(c, *xi, *wi));
            }
        }
        grid.samples = samples;
        Ok(grid)
    }

    /// `n` radii from `r_in` to `r_max` with spacings growing by `grading`.
    pub fn geometric(d: u32, r_in: f64, r_max: f64, n: usize, grading: f64) -> Result<Self> {
        if !(r_in > 0.0 && r_max > r_in && r_max.is_finite()) {
            return Err(Error::Config(format!(
                "radial grid needs 0 < r_in < R, got r_in = {r_in}, R = {r_max}"
            )));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::Config(format!("grading must be >= 1, got {grading}")));
        }
        if n < 3 {
            return Err(Error::Config(format!("radial grid needs at least 3 radii, got {n}")));
        }
        Self::new(d, geometric_radii(r_in, r_max, n, grading))
    }

    pub fn dimension(&self) -> u32 {
        self.d
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    fn sample(&self, c: usize, xi: f64, ref_weight: f64) -> QuadSample {
        let (r0, r1) = (self.radii[c], self.radii[c + 1]);
        let h = r1 - r0;
        let r = r0 + 0.5 * (1.0 + xi) * h;
        let mut grad = [[0.0; 2]; 4];
        grad[0][0] = -1.0 / h;
        grad[1][0] = 1.0 / h;
        QuadSample {
            cell: c,
            weight: ref_weight * 0.5 * h * self.omega * r.powi(self.d as i32 - 1),
            radius: r,
            position: [r, 0.0],
            shape: [0.5 * (1.0 - xi), 0.5 * (1.0 + xi), 0.0, 0.0],
            grad,
        }
    }
}

impl Discretization for RadialGrid {
    fn spatial_dim(&self) -> u32 {
        self.d
    }

    fn node_count(&self) -> usize {
        self.radii.len()
    }

    fn cell_count(&self) -> usize {
        self.cells.len()
    }

    fn cell_nodes(&self, cell: usize) -> &[usize] {
        &self.cells[cell]
    }

    fn node_position(&self, node: usize) -> [f64; 2] {
        [self.radii[node], 0.0]
    }

    fn node_polar(&self, node: usize) -> (f64, f64) {
        (self.radii[node], 0.0)
    }

    fn inner_radius(&self) -> f64 {
        self.radii[0]
    }

    fn outer_radius(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    fn quadrature(&self) -> &[QuadSample] {
        &self.samples
    }

    fn band_samples(&self, r_lo: f64, r_hi: f64, order: usize) -> Vec<QuadSample> {
        let (x, w) = gauss_legendre(order);
        let mut out = Vec::new();
        for c in 0..self.cells.len() {
            let (r0, r1) = (self.radii[c], self.radii[c + 1]);
            let a = r_lo.max(r0);
            let b = r_hi.min(r1);
            if b <= a {
                continue;
            }
            let xa = 2.0 * (a - r0) / (r1 - r0) - 1.0;
            let xb = 2.0 * (b - r0) / (r1 - r0) - 1.0;
            let half = 0.5 * (xb - xa);
            for (t, wt) in x.iter().zip(&w) {
                out.push(self.sample(c, xa + (1.0 + t) * half, wt * half));
            }
        }
        out
    }

    fn cell_centers(&self) -> Vec<QuadSample> {
        (0..self.cells.len()).map(|c| self.sample(c, 0.0, 2.0)).collect()
    }

    fn boundary_nodes(&self, circle: Circle) -> Vec<BoundaryNode> {
        let node = match circle {
            Circle::Inner => 0,
            Circle::Outer => self.radii.len() - 1,
        };
        vec![BoundaryNode {
            node,
            weight: self.omega * self.radii[node].powi(self.d as i32 - 1),
            theta: 0.0,
        }]
    }

    fn interpolate(&self, values: &[f64], r: f64, _theta: f64) -> Result<f64> {
        let (k, xi) = locate(&self.radii, r)?;
        Ok(0.5 * (1.0 - xi) * values[k] + 0.5 * (1.0 + xi) * values[k + 1])
    }

    fn write_csv(&self, values: &[f64], out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "r,value")?;
        for (r, v) in self.radii.iter().zip(values) {
            writeln!(out, "{},{}", fmt_num(*r), fmt_num(*v))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::integrate;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn validation() {
        assert!(RadialGrid::new(3, vec![1.0, 2.0]).is_err());
        assert!(RadialGrid::new(3, vec![1.0, 1.0, 2.0]).is_err());
        assert!(RadialGrid::new(1, vec![1.0, 1.5, 2.0]).is_err());
        assert!(RadialGrid::new(3, vec![0.0, 1.5, 2.0]).is_err());
    }

    #[test]
    fn shell_volume() {
        let g = RadialGrid::geometric(3, 1.0, 2.0, 9, 1.1).unwrap();
        let v = integrate(&g, |_| 1.0);
        assert!((v - 4.0 * PI / 3.0 * 7.0).abs() < 1e-12);
        let g = RadialGrid::geometric(2, 1.0, 2.0, 9, 1.0).unwrap();
        assert!((integrate(&g, |_| 1.0) - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn linear_gradient() {
        let g = RadialGrid::geometric(3, 1.0, 5.0, 7, 1.2).unwrap();
        let u: Vec<f64> = g.radii().iter().map(|r| 2.0 * r - 1.0).collect();
        for s in g.quadrature() {
            let gr = s.gradient(g.cell_nodes(s.cell), &u);
            assert!((gr[0] - 2.0).abs() < 1e-12 && gr[1] == 0.0);
            assert!((s.value(g.cell_nodes(s.cell), &u) - (2.0 * s.radius - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_weight_is_sphere_area() {
        let g = RadialGrid::geometric(3, 2.0, 5.0, 4, 1.0).unwrap();
        let b = g.boundary_nodes(Circle::Inner);
        assert_eq!(b.len(), 1);
        assert!((b[0].weight - 16.0 * PI).abs() < 1e-12);
    }
}
