use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use super::{fmt_num, Discretization, QuadSample};
use crate::analytic::{PExponents, RadialProfile};
use crate::{Error, Result};

/// Nodal values on a discretization.
#[derive(Debug, Clone)]
pub struct ScalarField<M> {
    mesh: Arc<M>,
    values: Vec<f64>,
}

impl<M: Discretization> ScalarField<M> {
    pub fn new(mesh: Arc<M>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::Precondition(format!(
                "field has {} values but the mesh has {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("non-finite field value at node {k}")));
        }
        Ok(Self { mesh, values })
    }

    pub fn constant(mesh: Arc<M>, value: f64) -> Result<Self> {
        let n = mesh.node_count();
        Self::new(mesh, vec![value; n])
    }

    /// Samples `f(position)` at every node.
    pub fn from_fn<F: Fn([f64; 2]) -> f64>(mesh: Arc<M>, f: F) -> Result<Self> {
        let values = (0..mesh.node_count()).map(|n| f(mesh.node_position(n))).collect();
        Self::new(mesh, values)
    }

    /// Samples a radial profile at every node.
    pub fn from_profile(mesh: Arc<M>, profile: &RadialProfile) -> Result<Self> {
        let values = (0..mesh.node_count())
            .map(|n| profile.eval(mesh.node_polar(n).0))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<M> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        self.mesh.write_csv(&self.values, out)
    }
}

/// Anything that can be evaluated (value and Cartesian gradient) at a
/// quadrature sample of a mesh.
pub trait FieldSource {
    fn value_and_gradient(&self, sample: &QuadSample) -> (f64, [f64; 2]);
}

impl<M: Discretization> FieldSource for ScalarField<M> {
    fn value_and_gradient(&self, s: &QuadSample) -> (f64, [f64; 2]) {
        let nodes = self.mesh.cell_nodes(s.cell);
        (s.value(nodes, &self.values), s.gradient(nodes, &self.values))
    }
}

impl FieldSource for RadialProfile {
    fn value_and_gradient(&self, s: &QuadSample) -> (f64, [f64; 2]) {
        let r = s.radius;
        let v = self.offset + self.coefficient * self.exps.mu_unchecked(r);
        let dv = self.coefficient * self.exps.mu_prime_unchecked(r);
        let rp = (s.position[0].powi(2) + s.position[1].powi(2)).sqrt();
        (v, [dv * s.position[0] / rp, dv * s.position[1] / rp])
    }
}

/// Pointwise evaluation in polar coordinates.
pub trait PointSource {
    fn value_at(&self, r: f64, theta: f64) -> Result<f64>;
}

impl<M: Discretization> PointSource for ScalarField<M> {
    fn value_at(&self, r: f64, theta: f64) -> Result<f64> {
        self.mesh.interpolate(&self.values, r, theta)
    }
}

impl PointSource for RadialProfile {
    fn value_at(&self, r: f64, _theta: f64) -> Result<f64> {
        self.eval(r)
    }
}

/// Circle statistics of a field: mean of `v` and max of `|v|` per radius.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusSamples {
    pub radii: Vec<f64>,
    pub means: Vec<f64>,
    pub maxes: Vec<f64>,
}

impl AnnulusSamples {
    pub fn new(radii: Vec<f64>, means: Vec<f64>, maxes: Vec<f64>) -> Result<Self> {
        if radii.len() != means.len() || radii.len() != maxes.len() {
            return Err(Error::Precondition("sample columns differ in length".into()));
        }
        Ok(Self { radii, means, maxes })
    }

    /// Samples where every circle is represented by a single value.
    pub fn from_values(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let maxes = values.iter().map(|v| v.abs()).collect();
        Self::new(radii, values, maxes)
    }

    /// CSV with header `r,mean,max,mu`.
    pub fn write_csv(&self, exps: &PExponents, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "r,mean,max,mu")?;
        for k in 0..self.radii.len() {
            let r = self.radii[k];
            writeln!(
                out,
                "{},{},{},{}",
                fmt_num(r),
                fmt_num(self.means[k]),
                fmt_num(self.maxes[k]),
                fmt_num(exps.mu_unchecked(r))
            )?;
        }
        Ok(())
    }
}

/// Evaluates `source` at `per_circle` equally spaced angles on each circle.
pub fn sample_on_annuli<S: PointSource + ?Sized>(
    source: &S,
    radii: &[f64],
    per_circle: usize,
) -> Result<AnnulusSamples> {
    if per_circle == 0 {
        return Err(Error::Precondition("need at least one sample per circle".into()));
    }
    let mut means = Vec::with_capacity(radii.len());
    let mut maxes = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut sum = 0.0;
        let mut max: f64 = 0.0;
        for k in 0..per_circle {
            let v = source.value_at(r, 2.0 * PI * k as f64 / per_circle as f64)?;
            sum += v;
            max = max.max(v.abs());
        }
        means.push(sum / per_circle as f64);
        maxes.push(max);
    }
    AnnulusSamples::new(radii.to_vec(), means, maxes)
}

#[cfg(test)]
mod tests {
    use super::super::{AnnularMesh2D, RadialGrid};
    use super::*;

    #[test]
    fn field_validation() {
        let m = Arc::new(AnnularMesh2D::new(1.0, 2.0, 3, 8, 1.0).unwrap());
        assert!(ScalarField::new(m.clone(), vec![0.0; 5]).is_err());
        let mut v = vec![0.0; m.node_count()];
        v[3] = f64::NAN;
        assert!(ScalarField::new(m.clone(), v).is_err());
    }

    #[test]
    fn constant_samples() {
        let m = Arc::new(AnnularMesh2D::new(1.0, 4.0, 5, 16, 1.0).unwrap());
        let f = ScalarField::constant(m, -2.5).unwrap();
        let s = sample_on_annuli(&f, &[1.0, 1.7, 3.9], 13).unwrap();
        assert!(s.means.iter().all(|m| (m + 2.5).abs() < 1e-14));
        assert!(s.maxes.iter().all(|m| (m - 2.5).abs() < 1e-14));
        assert!(sample_on_annuli(&f, &[4.5], 4).is_err());
    }

    #[test]
    fn profile_samples() {
        let e = PExponents::new(2.0, 3).unwrap();
        let mu = RadialProfile::new(0.0, 1.0, e);
        let s = sample_on_annuli(&mu, &[2.0, 4.0, 8.0], 8).unwrap();
        assert_eq!(s.means, vec![0.5, 0.25, 0.125]);
        let g = Arc::new(RadialGrid::geometric(3, 1.0, 16.0, 5, 2.0).unwrap());
        let f = ScalarField::from_profile(g, &mu).unwrap();
        let s = sample_on_annuli(&f, &[2.0, 4.0, 8.0], 1).unwrap();
        for (m, e) in s.means.iter().zip([0.5, 0.25, 0.125]) {
            assert!((m - e).abs() < 1e-15);
        }
    }

    #[test]
    fn decay_csv_columns() {
        let e = PExponents::new(2.0, 3).unwrap();
        let s = AnnulusSamples::from_values(vec![2.0], vec![-1.0]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&e, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "r,mean,max,mu\n2.0000000000000000e0,-1.0000000000000000e0,1.0000000000000000e0,5.0000000000000000e-1"
        ));
    }
}
