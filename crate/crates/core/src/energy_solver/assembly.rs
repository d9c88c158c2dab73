//! Energy, gradient and Hessian assembly on full nodal vectors.

use rayon::prelude::*;

use super::problem::{NodeRole, ProblemSpec};
use super::skyline::Skyline;
use crate::discretization::{sum_samples, Discretization, QuadSample};
use crate::radial_bvp::BoundaryLaw;

/// `(ε² + |g|²)^{(p-2)/2}`, with the unregularized `ε = 0` flux taken as zero
/// at `g = 0`.
fn flux_coefficient(g: [f64; 2], p: f64, eps: f64) -> f64 {
    let s = eps * eps + g[0] * g[0] + g[1] * g[1];
    if s == 0.0 {
        0.0
    } else {
        s.powf(0.5 * (p - 2.0))
    }
}

fn density(g: [f64; 2], p: f64, eps: f64) -> f64 {
    let s = eps * eps + g[0] * g[0] + g[1] * g[1];
    s.powf(0.5 * p) / p
}

pub(crate) fn energy_value<M: Discretization>(spec: &ProblemSpec<M>, u: &[f64], p: f64, eps: f64) -> f64 {
    let mesh = spec.mesh();
    let interior = sum_samples(
        mesh.quadrature(),
        |s| density(s.gradient(mesh.cell_nodes(s.cell), u), p, eps),
        spec.reduction(),
    );
    interior + boundary_energy(spec, u, p, eps)
}

/// `H`, `h` and `h'` of the hole law as seen by the solver. For `p < 2` the
/// power law is singular at `v = 0`; it is regularized like the interior
/// density, `h_ε(v) = α (v² + ε²)^{(p-2)/2} v`, when `eps > 0`.
fn law_terms(law: &BoundaryLaw, v: f64, p: f64, eps: f64) -> (f64, f64, f64) {
    match law {
        BoundaryLaw::RobinPower { alpha } if p < 2.0 && eps > 0.0 => {
            let q = v * v + eps * eps;
            let a = q.powf(0.5 * (p - 2.0));
            (
                alpha * (q.powf(0.5 * p) - eps.powf(p)) / p,
                alpha * a * v,
                alpha * a * (1.0 + (p - 2.0) * v * v / q),
            )
        }
        _ => (law.primitive(v, p), law.h(v, p), law.h_prime(v, p, eps)),
    }
}

fn boundary_energy<M: Discretization>(spec: &ProblemSpec<M>, u: &[f64], p: f64, eps: f64) -> f64 {
    spec.roles()
        .iter()
        .enumerate()
        .filter_map(|(node, role)| match role {
            NodeRole::Law(k) => Some(spec.boundary_weight(node) * law_terms(&spec.inner()[*k].law, u[node], p, eps).0),
            _ => None,
        })
        .sum()
}

/// Per-sample contributions `w a ∇u·∇φ_k` for the nodes of the sample's cell.
fn local_fluxes<M: Discretization>(mesh: &M, u: &[f64], p: f64, eps: f64) -> Vec<[f64; 4]> {
    mesh.quadrature()
        .par_iter()
        .map(|s: &QuadSample| {
            let nodes = mesh.cell_nodes(s.cell);
            let g = s.gradient(nodes, u);
            let a = s.weight * flux_coefficient(g, p, eps);
            let mut out = [0.0; 4];
            for (o, d) in out.iter_mut().zip(&s.grad).take(nodes.len()) {
                *o = a * (g[0] * d[0] + g[1] * d[1]);
            }
            out
        })
        .collect()
}

/// Nodal first variation of the (regularized) energy, zero on constrained
/// nodes. With `eps = 0` this is the weak-form residual against nodal hat
/// functions.
pub(crate) fn gradient_full<M: Discretization>(spec: &ProblemSpec<M>, u: &[f64], p: f64, eps: f64) -> Vec<f64> {
    let mesh = spec.mesh();
    let local = local_fluxes(mesh.as_ref(), u, p, eps);
    let mut g = vec![0.0; u.len()];
    for (s, contrib) in mesh.quadrature().iter().zip(&local) {
        for (k, &n) in mesh.cell_nodes(s.cell).iter().enumerate() {
            g[n] += contrib[k];
        }
    }
    for (node, role) in spec.roles().iter().enumerate() {
        match role {
            NodeRole::Dirichlet(_) => g[node] = 0.0,
            NodeRole::Law(k) => {
                g[node] += spec.boundary_weight(node) * law_terms(&spec.inner()[*k].law, u[node], p, eps).1
            }
            NodeRole::Interior => {}
        }
    }
    g
}

/// Leftmost coupled free index for every free row.
pub(crate) fn envelope<M: Discretization>(spec: &ProblemSpec<M>) -> Vec<usize> {
    let mesh = spec.mesh();
    let mut first: Vec<usize> = (0..spec.free_nodes().len()).collect();
    for c in 0..mesh.cell_count() {
        let idx: Vec<usize> = mesh.cell_nodes(c).iter().filter_map(|&n| spec.free_index(n)).collect();
        if let Some(&lo) = idx.iter().min() {
            for &i in &idx {
                first[i] = first[i].min(lo);
            }
        }
    }
    first
}

/// Hessian of the regularized energy restricted to free nodes.
#[allow(clippy::needless_range_loop)]
pub(crate) fn hessian<M: Discretization>(spec: &ProblemSpec<M>, u: &[f64], p: f64, eps: f64, out: &mut Skyline) {
    let mesh = spec.mesh();
    out.clear();
    let local: Vec<[[f64; 4]; 4]> = mesh
        .quadrature()
        .par_iter()
        .map(|s| {
            let nodes = mesh.cell_nodes(s.cell);
            let g = s.gradient(nodes, u);
            let q = eps * eps + g[0] * g[0] + g[1] * g[1];
            let a = q.powf(0.5 * (p - 2.0));
            let b = if p == 2.0 {
                0.0
            } else {
                (p - 2.0) * q.powf(0.5 * (p - 4.0))
            };
            let mut h = [[0.0; 4]; 4];
            let n = nodes.len();
            for k in 0..n {
                let gk = g[0] * s.grad[k][0] + g[1] * s.grad[k][1];
                for l in 0..=k {
                    let gl = g[0] * s.grad[l][0] + g[1] * s.grad[l][1];
                    let dot = s.grad[k][0] * s.grad[l][0] + s.grad[k][1] * s.grad[l][1];
                    h[k][l] = s.weight * (a * dot + b * gk * gl);
                }
            }
            h
        })
        .collect();
    for (s, h) in mesh.quadrature().iter().zip(&local) {
        let nodes = mesh.cell_nodes(s.cell);
        for (k, &nk) in nodes.iter().enumerate() {
            let Some(ik) = spec.free_index(nk) else { continue };
            for (l, &nl) in nodes.iter().enumerate().take(k + 1) {
                if let Some(il) = spec.free_index(nl) {
                    out.add(ik, il, h[k][l]);
                }
            }
        }
    }
    for (node, role) in spec.roles().iter().enumerate() {
        if let NodeRole::Law(k) = role {
            let i = spec.free_index(node).expect("law nodes are free");
            let hp = law_terms(&spec.inner()[*k].law, u[node], p, eps).2;
            out.add(i, i, spec.boundary_weight(node) * hp);
        }
    }
}
