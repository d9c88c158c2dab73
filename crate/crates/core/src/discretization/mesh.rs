use std::f64::consts::PI;
use std::io::Write;

use super::{fmt_num, BoundaryNode, Circle, Discretization, QuadSample, DEFAULT_QUAD_ORDER};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Structured mesh of the planar annulus `r_in <= |x| <= R`.
///
/// Nodes sit at `(r_i, θ_j)` with geometric radial spacing and uniform,
/// periodic angular spacing; node `(i, j)` has index `i * n_theta + j`.
/// Cells are exact polar sectors: quadrature weights use the polar Jacobian
/// `r dr dθ`, so areas and boundary arc lengths are exact. Field gradients
/// use the bilinear map through the four corner nodes, which reproduces
/// affine fields exactly.
#[derive(Debug, Clone)]
pub struct AnnularMesh2D {
    r_in: f64,
    r_out: f64,
    n_theta: usize,
    grading: f64,
    quad_order: usize,
    radii: Vec<f64>,
    cells: Vec<[usize; 4]>,
    samples: Vec<QuadSample>,
}

impl AnnularMesh2D {
    pub fn new(r_in: f64, r_out: f64, n_r: usize, n_theta: usize, grading: f64) -> Result<Self> {
        Self::with_quadrature(r_in, r_out, n_r, n_theta, grading, DEFAULT_QUAD_ORDER)
    }

    pub fn with_quadrature(
        r_in: f64,
        r_out: f64,
        n_r: usize,
        n_theta: usize,
        grading: f64,
        quad_order: usize,
    ) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in && r_out.is_finite()) {
            return Err(Error::Config(format!(
                "annulus needs 0 < r_in < R, got r_in = {r_in}, R = {r_out}"
            )));
        }
        if n_r < 2 {
            return Err(Error::Config(format!("need at least 2 radial nodes, got {n_r}")));
        }
        if n_theta < 8 {
            return Err(Error::Config(format!("need at least 8 angular nodes, got {n_theta}")));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::Config(format!("grading must be >= 1, got {grading}")));
        }
        if quad_order == 0 || quad_order > 16 {
            return Err(Error::Config(format!(
                "quadrature order must be in 1..=16, got {quad_order}"
            )));
        }
        let radii = geometric_radii(r_in, r_out, n_r, grading);
        let mut cells = Vec::with_capacity((n_r - 1) * n_theta);
        for i in 0..n_r - 1 {
            for j in 0..n_theta {
                let jn = (j + 1) % n_theta;
                cells.push([
                    i * n_theta + j,
                    (i + 1) * n_theta + j,
                    (i + 1) * n_theta + jn,
                    i * n_theta + jn,
                ]);
            }
        }
        let mut mesh = Self {
            r_in,
            r_out,
            n_theta,
            grading,
            quad_order,
            radii,
            cells,
            samples: Vec::new(),
        };
        let (x, w) = gauss_legendre(quad_order);
        let mut samples = Vec::with_capacity(mesh.cells.len() * quad_order * quad_order);
        for c in 0..mesh.cells.len() {
            for (xi, wi) in x.iter().zip(&w) {
                for (eta, wj) in x.iter().zip(&w) {
                    samples.push(mesh.sample(c, *xi, *eta, wi * wj));
                }
            }
        }
        mesh.samples = samples;
        Ok(mesh)
    }

    pub fn n_r(&self) -> usize {
        self.radii.len()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + (j % self.n_theta)
    }

    /// Exact area of polar cell `c`.
    pub fn cell_area(&self, c: usize) -> f64 {
        let i = c / self.n_theta;
        0.5 * (self.radii[i + 1].powi(2) - self.radii[i].powi(2)) * self.dtheta()
    }

    fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c / self.n_theta, c % self.n_theta)
    }

    /// Sample at reference point `(xi, eta)` in `[-1, 1]^2` of cell `c`;
    /// `ref_weight` is the reference-cell quadrature weight.
    fn sample(&self, c: usize, xi: f64, eta: f64, ref_weight: f64) -> QuadSample {
        let (i, j) = self.cell_ij(c);
        let (r0, r1) = (self.radii[i], self.radii[i + 1]);
        let dth = self.dtheta();
        let th0 = self.theta(j);
        let r = r0 + 0.5 * (1.0 + xi) * (r1 - r0);
        let th = th0 + 0.5 * (1.0 + eta) * dth;
        let weight = ref_weight * r * 0.25 * (r1 - r0) * dth;

        let shape = [
            0.25 * (1.0 - xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 + eta),
            0.25 * (1.0 - xi) * (1.0 + eta),
        ];
        let dxi = [
            -0.25 * (1.0 - eta),
            0.25 * (1.0 - eta),
            0.25 * (1.0 + eta),
            -0.25 * (1.0 + eta),
        ];
        let deta = [
            -0.25 * (1.0 - xi),
            -0.25 * (1.0 + xi),
            0.25 * (1.0 + xi),
            0.25 * (1.0 - xi),
        ];
        let th1 = th0 + dth;
        let corners = [
            [r0 * th0.cos(), r0 * th0.sin()],
            [r1 * th0.cos(), r1 * th0.sin()],
            [r1 * th1.cos(), r1 * th1.sin()],
            [r0 * th1.cos(), r0 * th1.sin()],
        ];
        // Jacobian of the straight-sided bilinear map
        let mut jac = [[0.0; 2]; 2];
        for k in 0..4 {
            jac[0][0] += dxi[k] * corners[k][0];
            jac[0][1] += deta[k] * corners[k][0];
            jac[1][0] += dxi[k] * corners[k][1];
            jac[1][1] += deta[k] * corners[k][1];
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let mut grad = [[0.0; 2]; 4];
        for k in 0..4 {
            // J^{-T} (dN/dxi, dN/deta)
            grad[k][0] = (jac[1][1] * dxi[k] - jac[1][0] * deta[k]) / det;
            grad[k][1] = (-jac[0][1] * dxi[k] + jac[0][0] * deta[k]) / det;
        }
        QuadSample {
            cell: c,
            weight,
            radius: r,
            position: [r * th.cos(), r * th.sin()],
            shape,
            grad,
        }
    }

    fn locate_radius(&self, r: f64) -> Result<(usize, f64)> {
        locate(&self.radii, r)
    }
}

/// `n` radii from `a` to `b` whose consecutive spacings grow by `grading`.
pub(super) fn geometric_radii(a: f64, b: f64, n: usize, grading: f64) -> Vec<f64> {
    let intervals = n - 1;
    let total: f64 = (0..intervals).map(|k| grading.powi(k as i32)).sum();
    let h0 = (b - a) / total;
    let mut radii = Vec::with_capacity(n);
    let mut r = a;
    radii.push(a);
    for k in 0..intervals {
        r += h0 * grading.powi(k as i32);
        radii.push(r);
    }
    radii[intervals] = b;
    radii
}

/// Interval index and reference coordinate in `[-1, 1]` of `r` in `radii`.
pub(super) fn locate(radii: &[f64], r: f64) -> Result<(usize, f64)> {
    let (lo, hi) = (radii[0], radii[radii.len() - 1]);
    let tol = 1e-12 * hi;
    if !(r >= lo - tol && r <= hi + tol) {
        return Err(Error::Precondition(format!("radius {r} outside the mesh [{lo}, {hi}]")));
    }
    let r = r.clamp(lo, hi);
    let k = match radii.binary_search_by(|x| x.partial_cmp(&r).expect("finite radii")) {
        Ok(k) => k.min(radii.len() - 2),
        Err(k) => k - 1,
    };
    let xi = 2.0 * (r - radii[k]) / (radii[k + 1] - radii[k]) - 1.0;
    Ok((k, xi))
}

impl Discretization for AnnularMesh2D {
    fn spatial_dim(&self) -> u32 {
        2
    }

    fn node_count(&self) -> usize {
        self.radii.len() * self.n_theta
    }

    fn cell_count(&self) -> usize {
        self.cells.len()
    }

    fn cell_nodes(&self, cell: usize) -> &[usize] {
        &self.cells[cell]
    }

    fn node_position(&self, node: usize) -> [f64; 2] {
        let (r, th) = self.node_polar(node);
        [r * th.cos(), r * th.sin()]
    }

    fn node_polar(&self, node: usize) -> (f64, f64) {
        (self.radii[node / self.n_theta], self.theta(node % self.n_theta))
    }

    fn inner_radius(&self) -> f64 {
        self.r_in
    }

    fn outer_radius(&self) -> f64 {
        self.r_out
    }

    fn quadrature(&self) -> &[QuadSample] {
        &self.samples
    }

    fn band_samples(&self, r_lo: f64, r_hi: f64, order: usize) -> Vec<QuadSample> {
        let (x, w) = gauss_legendre(order);
        let mut out = Vec::new();
        for c in 0..self.cells.len() {
            let (i, _) = self.cell_ij(c);
            let (r0, r1) = (self.radii[i], self.radii[i + 1]);
            let a = r_lo.max(r0);
            let b = r_hi.min(r1);
            if b <= a {
                continue;
            }
            let xa = 2.0 * (a - r0) / (r1 - r0) - 1.0;
            let xb = 2.0 * (b - r0) / (r1 - r0) - 1.0;
            let half = 0.5 * (xb - xa);
            for (t, wt) in x.iter().zip(&w) {
                let xi = xa + (1.0 + t) * half;
                for (eta, we) in x.iter().zip(&w) {
                    out.push(self.sample(c, xi, *eta, wt * we * half));
                }
            }
        }
        out
    }

    fn cell_centers(&self) -> Vec<QuadSample> {
        (0..self.cells.len()).map(|c| self.sample(c, 0.0, 0.0, 4.0)).collect()
    }

    fn boundary_nodes(&self, circle: Circle) -> Vec<BoundaryNode> {
        let (i, r) = match circle {
            Circle::Inner => (0, self.r_in),
            Circle::Outer => (self.radii.len() - 1, self.r_out),
        };
        let w = r * self.dtheta();
        (0..self.n_theta)
            .map(|j| BoundaryNode {
                node: self.node_index(i, j),
                weight: w,
                theta: self.theta(j),
            })
            .collect()
    }

    fn interpolate(&self, values: &[f64], r: f64, theta: f64) -> Result<f64> {
        let (i, xi) = self.locate_radius(r)?;
        let t = theta.rem_euclid(2.0 * PI) / self.dtheta();
        let j = (t.floor() as usize).min(self.n_theta - 1);
        let eta = 2.0 * (t - j as f64) - 1.0;
        let c = i * self.n_theta + j;
        let nodes = &self.cells[c];
        let shape = [
            0.25 * (1.0 - xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 + eta),
            0.25 * (1.0 - xi) * (1.0 + eta),
        ];
        Ok(nodes.iter().zip(shape).map(|(&n, s)| s * values[n]).sum())
    }

    fn write_csv(&self, values: &[f64], out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "r,theta,value")?;
        for (n, v) in values.iter().enumerate() {
            let (r, th) = self.node_polar(n);
            writeln!(out, "{},{},{}", fmt_num(r), fmt_num(th), fmt_num(*v))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{gradient, integrate};
    use super::*;

    #[test]
    fn validation() {
        assert!(AnnularMesh2D::new(0.0, 2.0, 4, 8, 1.0).is_err());
        assert!(AnnularMesh2D::new(2.0, 1.0, 4, 8, 1.0).is_err());
        assert!(AnnularMesh2D::new(1.0, 2.0, 1, 8, 1.0).is_err());
        assert!(AnnularMesh2D::new(1.0, 2.0, 4, 7, 1.0).is_err());
        assert!(AnnularMesh2D::new(1.0, 2.0, 4, 8, 0.9).is_err());
    }

    #[test]
    fn smallest_mesh_area() {
        let m = AnnularMesh2D::new(1.0, 2.0, 2, 8, 1.0).unwrap();
        // one ring of 8 sectors: n_r counts radial nodes
        assert_eq!(m.cell_count(), 8);
        let total: f64 = (0..m.cell_count()).map(|c| m.cell_area(c)).sum();
        assert!((total - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn geometric_spacing() {
        let m = AnnularMesh2D::new(1.0, 16.0, 5, 8, 2.0).unwrap();
        let h: Vec<f64> = m.radii().windows(2).map(|w| w[1] - w[0]).collect();
        for w in h.windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 1e-12);
        }
        assert_eq!(m.radii(), &[1.0, 2.0, 4.0, 8.0, 16.0]);
    }

    #[test]
    fn area_sum_is_exact() {
        let m = AnnularMesh2D::new(1.0, 4.0, 32, 64, 1.2).unwrap();
        let total: f64 = (0..m.cell_count()).map(|c| m.cell_area(c)).sum();
        assert!((total - 15.0 * PI).abs() < 1e-10 * 15.0 * PI);
        assert!((0..m.cell_count()).all(|c| m.cell_area(c) > 0.0));
        let q = integrate(&m, |_| 1.0);
        assert!((q - 15.0 * PI).abs() < 1e-10 * 15.0 * PI);
    }

    #[test]
    fn affine_gradients_are_exact() {
        let m = AnnularMesh2D::new(1.0, 3.0, 6, 12, 1.1).unwrap();
        let u: Vec<f64> = (0..m.node_count())
            .map(|n| {
                let x = m.node_position(n);
                x[0]
            })
            .collect();
        for g in gradient(&m, &u) {
            assert!((g[0] - 1.0).abs() < 1e-10 && g[1].abs() < 1e-10);
        }
        let c: Vec<f64> = vec![2.5; m.node_count()];
        assert!(gradient(&m, &c)
            .iter()
            .all(|g| g[0].abs() < 1e-12 && g[1].abs() < 1e-12));
        let u: Vec<f64> = (0..m.node_count())
            .map(|n| {
                let x = m.node_position(n);
                3.0 - 2.0 * x[0] + 0.5 * x[1]
            })
            .collect();
        for s in m.quadrature() {
            let g = s.gradient(m.cell_nodes(s.cell), &u);
            assert!((g[0] + 2.0).abs() < 1e-10 && (g[1] - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn band_clips_exactly() {
        let m = AnnularMesh2D::new(1.0, 5.0, 7, 16, 1.3).unwrap();
        for (a, b) in [(1.0, 5.0), (2.0, 4.0), (1.3, 1.7), (2.5, 5.0)] {
            let s = m.band_samples(a, b, 3);
            let area: f64 = s.iter().map(|q| q.weight).sum();
            assert!((area - PI * (b * b - a * a)).abs() < 1e-12 * area, "({a},{b})");
            assert!(s.iter().all(|q| q.radius >= a - 1e-14 && q.radius <= b + 1e-14));
        }
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let m = AnnularMesh2D::new(1.0, 2.0, 4, 8, 1.0).unwrap();
        let u: Vec<f64> = (0..m.node_count()).map(|n| n as f64 * 0.5).collect();
        for n in 0..m.node_count() {
            let (r, th) = m.node_polar(n);
            assert!((m.interpolate(&u, r, th).unwrap() - u[n]).abs() < 1e-12);
        }
        assert!(m.interpolate(&u, 0.5, 0.0).is_err());
        assert!(m.interpolate(&u, 2.5, 0.0).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let m = AnnularMesh2D::new(1.0, 2.0, 2, 8, 1.0).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&vec![1.0; m.node_count()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("r,theta,value"));
        let row = lines.next().unwrap();
        assert_eq!(row, "1.0000000000000000e0,0.0000000000000000e0,1.0000000000000000e0");
        assert_eq!(text.lines().count(), 1 + 16);
    }
}
