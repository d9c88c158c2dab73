use std::f64::consts::TAU;
use std::sync::Arc;

use crate::analytic::{PExponents, RadialProfile};
use crate::discretization::{Circle, Discretization, Reduction};
use crate::radial_bvp::BoundaryLaw;
use crate::{Error, Result};

/// Default ε continuation schedule.
pub const DEFAULT_SCHEDULE: [f64; 3] = [1e-1, 1e-3, 1e-6];
/// Angular slack when deciding whether a node lies on an arc.
const ARC_TOL: f64 = 1e-12;

/// Part of the hole boundary, as an angular range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerArc {
    Full,
    /// Counter-clockwise from `start` to `end` (radians). Endpoints belong to
    /// the arc.
    Span {
        start: f64,
        end: f64,
    },
}

impl InnerArc {
    pub fn length(&self) -> f64 {
        match *self {
            InnerArc::Full => TAU,
            InnerArc::Span { start, end } => {
                let l = (end - start).rem_euclid(TAU);
                if l == 0.0 {
                    TAU
                } else {
                    l
                }
            }
        }
    }

    fn start(&self) -> f64 {
        match *self {
            InnerArc::Full => 0.0,
            InnerArc::Span { start, .. } => start.rem_euclid(TAU),
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        match self {
            InnerArc::Full => true,
            InnerArc::Span { .. } => {
                let off = (theta - self.start()).rem_euclid(TAU);
                off <= self.length() + ARC_TOL || off >= TAU - ARC_TOL
            }
        }
    }

    /// Length of the intersection of two arcs.
    pub fn overlap(&self, other: &InnerArc) -> f64 {
        let (la, lb) = (self.length(), other.length());
        if la >= TAU {
            return lb;
        }
        if lb >= TAU {
            return la;
        }
        let s = (other.start() - self.start()).rem_euclid(TAU);
        let seg = |lo: f64, hi: f64| (hi.min(la) - lo.max(0.0)).max(0.0);
        seg(s, s + lb) + seg(s - TAU, s - TAU + lb)
    }
}

/// A boundary law on an arc of the hole boundary.
#[derive(Debug, Clone)]
pub struct BoundaryPiece {
    pub arc: InnerArc,
    pub law: BoundaryLaw,
}

impl BoundaryPiece {
    pub fn full(law: BoundaryLaw) -> Self {
        Self {
            arc: InnerArc::Full,
            law,
        }
    }
}

/// Dirichlet data on the truncation circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterTrace {
    /// The far-field limit `b`.
    Value(f64),
    /// The value of a radial profile at the truncation radius, e.g. `c μ_p(R)`.
    Matched(RadialProfile),
}

impl OuterTrace {
    pub fn value_at(&self, r: f64) -> Result<f64> {
        match self {
            OuterTrace::Value(v) => Ok(*v),
            OuterTrace::Matched(profile) => profile.eval(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Stop when the ℓ² norm of the free-node energy gradient drops below this.
    pub grad: f64,
    /// Steps whose max-norm stays below this count as stagnation.
    pub step: f64,
    /// Iteration cap across all continuation stages.
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grad: 1e-10,
            step: 1e-15,
            max_iter: 500,
        }
    }
}

/// How each node enters the discrete problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeRole {
    Interior,
    Dirichlet(f64),
    /// Free node on the hole boundary carrying the law of piece `k`.
    Law(usize),
}

/// Truncated exterior problem on a discretization.
#[derive(Debug, Clone)]
pub struct ProblemSpec<M> {
    mesh: Arc<M>,
    exps: PExponents,
    inner: Vec<BoundaryPiece>,
    outer: OuterTrace,
    epsilon: f64,
    schedule: Vec<f64>,
    tol: Tolerances,
    reduction: Reduction,
    roles: Vec<NodeRole>,
    boundary_weight: Vec<f64>,
    free: Vec<Option<usize>>,
    free_nodes: Vec<usize>,
}

impl<M: Discretization> ProblemSpec<M> {
    pub fn new(mesh: Arc<M>, exps: PExponents, inner: Vec<BoundaryPiece>, outer: OuterTrace) -> Result<Self> {
        if mesh.spatial_dim() != exps.d() {
            return Err(Error::Config(format!(
                "mesh dimension {} differs from d = {}",
                mesh.spatial_dim(),
                exps.d()
            )));
        }
        if inner.is_empty() {
            return Err(Error::Config("the hole boundary needs at least one piece".into()));
        }
        for piece in &inner {
            piece.law.validate(exps.p())?;
        }
        for (i, a) in inner.iter().enumerate() {
            for b in &inner[i + 1..] {
                let ov = a.arc.overlap(&b.arc);
                if ov > 1e-9 {
                    return Err(Error::Config(format!(
                        "boundary pieces overlap on an arc of length {ov:.3e}"
                    )));
                }
            }
        }
        let covered: f64 = inner.iter().map(|p| p.arc.length()).sum();
        if covered < TAU - 1e-9 {
            return Err(Error::Config(format!(
                "boundary pieces cover {covered:.6} of the 2π hole boundary"
            )));
        }
        let r_out = mesh.outer_radius();
        let outer_value = outer.value_at(r_out)?;
        if !outer_value.is_finite() {
            return Err(Error::Config("outer trace is not finite".into()));
        }

        let n = mesh.node_count();
        let mut roles = vec![NodeRole::Interior; n];
        let mut boundary_weight = vec![0.0; n];
        for b in mesh.boundary_nodes(Circle::Inner) {
            boundary_weight[b.node] = b.weight;
            let dirichlet = inner.iter().find_map(|p| match p.law {
                BoundaryLaw::DirichletValue(g) if p.arc.contains(b.theta) => Some(g),
                _ => None,
            });
            roles[b.node] = match dirichlet {
                Some(g) => NodeRole::Dirichlet(g),
                None => match inner.iter().position(|p| p.arc.contains(b.theta)) {
                    Some(k) => NodeRole::Law(k),
                    None => {
                        return Err(Error::Config(format!(
                            "hole boundary node at angle {} is not covered",
                            b.theta
                        )))
                    }
                },
            };
        }
        for b in mesh.boundary_nodes(Circle::Outer) {
            roles[b.node] = NodeRole::Dirichlet(outer_value);
        }
        let mut free = vec![None; n];
        let mut free_nodes = Vec::new();
        for (node, role) in roles.iter().enumerate() {
            if !matches!(role, NodeRole::Dirichlet(_)) {
                free[node] = Some(free_nodes.len());
                free_nodes.push(node);
            }
        }
        Ok(Self {
            mesh,
            exps,
            inner,
            outer,
            epsilon: *DEFAULT_SCHEDULE.last().unwrap(),
            schedule: DEFAULT_SCHEDULE.to_vec(),
            tol: Tolerances::default(),
            reduction: Reduction::Deterministic,
            roles,
            boundary_weight,
            free,
            free_nodes,
        })
    }

    /// Sets the final regularization; the default schedule is truncated to
    /// values above it and ends at it.
    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        let mut schedule: Vec<f64> = DEFAULT_SCHEDULE.iter().copied().filter(|&e| e > epsilon).collect();
        schedule.push(epsilon);
        self.epsilon = epsilon;
        self.schedule = schedule;
        Ok(self)
    }

    /// Explicit continuation schedule; must be positive and non-increasing.
    /// The last entry becomes the final ε.
    pub fn with_schedule(mut self, schedule: Vec<f64>) -> Result<Self> {
        if schedule.is_empty() || schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config("epsilon schedule must be non-empty and positive".into()));
        }
        if schedule.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Config("epsilon schedule must be non-increasing".into()));
        }
        self.epsilon = *schedule.last().unwrap();
        self.schedule = schedule;
        Ok(self)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Result<Self> {
        if !(tol.grad > 0.0) || !(tol.step >= 0.0) || tol.max_iter == 0 {
            return Err(Error::Config(format!("invalid solver tolerances {tol:?}")));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn mesh(&self) -> &Arc<M> {
        &self.mesh
    }

    pub fn exps(&self) -> PExponents {
        self.exps
    }

    pub fn inner(&self) -> &[BoundaryPiece] {
        &self.inner
    }

    pub fn outer(&self) -> OuterTrace {
        self.outer
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn schedule(&self) -> &[f64] {
        &self.schedule
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn reduction(&self) -> Reduction {
        self.reduction
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    pub(crate) fn free_index(&self, node: usize) -> Option<usize> {
        self.free[node]
    }

    pub(crate) fn boundary_weight(&self, node: usize) -> f64 {
        self.boundary_weight[node]
    }

    /// True when every hole node carries zero Neumann data.
    pub fn is_pure_neumann(&self) -> bool {
        self.inner.iter().all(|p| matches!(p.law, BoundaryLaw::NeumannZero))
    }

    /// Nodal vector that satisfies the constraints: Dirichlet values on
    /// constrained nodes, `fill` elsewhere.
    pub fn constrained_vector(&self, fill: f64) -> Vec<f64> {
        self.roles
            .iter()
            .map(|r| match r {
                NodeRole::Dirichlet(g) => *g,
                _ => fill,
            })
            .collect()
    }

    pub(crate) fn check_constraints(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.roles.len() {
            return Err(Error::Precondition(format!(
                "field has {} values, problem has {} nodes",
                u.len(),
                self.roles.len()
            )));
        }
        for (node, role) in self.roles.iter().enumerate() {
            if let NodeRole::Dirichlet(g) = role {
                if (u[node] - g).abs() > 1e-12 * (1.0 + g.abs()) {
                    return Err(Error::Precondition(format!(
                        "node {node} violates its Dirichlet value {g} (found {})",
                        u[node]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::AnnularMesh2D;
    use std::f64::consts::PI;

    #[test]
    fn arc_geometry() {
        let a = InnerArc::Span { start: 0.0, end: PI };
        let b = InnerArc::Span { start: PI, end: 0.0 };
        assert!((a.length() - PI).abs() < 1e-15);
        assert!((b.length() - PI).abs() < 1e-15);
        assert!(a.overlap(&b) < 1e-12);
        assert!(a.contains(0.0) && a.contains(PI) && b.contains(0.0) && b.contains(PI));
        assert!(!a.contains(1.5 * PI));
        let c = InnerArc::Span { start: -0.5, end: 0.5 };
        assert!((a.overlap(&c) - 0.5).abs() < 1e-12);
        assert!((c.overlap(&a) - 0.5).abs() < 1e-12);
        assert_eq!(InnerArc::Full.overlap(&c), c.length());
    }

    fn mesh() -> Arc<AnnularMesh2D> {
        Arc::new(AnnularMesh2D::new(1.0, 3.0, 4, 16, 1.0).unwrap())
    }

    #[test]
    fn roles_and_shared_nodes() {
        let e = PExponents::new(2.0, 2).unwrap();
        let pieces = vec![
            BoundaryPiece {
                arc: InnerArc::Span { start: 0.0, end: PI },
                law: BoundaryLaw::DirichletValue(2.0),
            },
            BoundaryPiece {
                arc: InnerArc::Span { start: PI, end: TAU },
                law: BoundaryLaw::RobinPower { alpha: 1.0 },
            },
        ];
        let spec = ProblemSpec::new(mesh(), e, pieces, OuterTrace::Value(0.0)).unwrap();
        let m = spec.mesh().clone();
        // nodes at θ = 0 and θ = π are shared and become Dirichlet
        assert_eq!(spec.roles()[m.node_index(0, 0)], NodeRole::Dirichlet(2.0));
        assert_eq!(spec.roles()[m.node_index(0, 8)], NodeRole::Dirichlet(2.0));
        assert_eq!(spec.roles()[m.node_index(0, 9)], NodeRole::Law(1));
        assert_eq!(spec.roles()[m.node_index(3, 5)], NodeRole::Dirichlet(0.0));
        assert_eq!(spec.roles()[m.node_index(1, 5)], NodeRole::Interior);
        assert_eq!(spec.free_nodes().len(), 7 + 2 * 16);
    }

    #[test]
    fn rejects_gaps_overlaps_and_bad_laws() {
        let e = PExponents::new(2.0, 2).unwrap();
        let half = |s: f64, law| BoundaryPiece {
            arc: InnerArc::Span { start: s, end: s + PI },
            law,
        };
        let gap = vec![half(0.0, BoundaryLaw::NeumannZero)];
        assert!(ProblemSpec::new(mesh(), e, gap, OuterTrace::Value(0.0)).is_err());
        let overlap = vec![
            half(0.0, BoundaryLaw::NeumannZero),
            half(1.0, BoundaryLaw::NeumannZero),
            half(PI, BoundaryLaw::NeumannZero),
        ];
        assert!(ProblemSpec::new(mesh(), e, overlap, OuterTrace::Value(0.0)).is_err());
        let bad = vec![BoundaryPiece::full(BoundaryLaw::RobinPower { alpha: -1.0 })];
        assert!(ProblemSpec::new(mesh(), e, bad, OuterTrace::Value(0.0)).is_err());
        let e3 = PExponents::new(2.0, 3).unwrap();
        let ok = vec![BoundaryPiece::full(BoundaryLaw::NeumannZero)];
        assert!(ProblemSpec::new(mesh(), e3, ok, OuterTrace::Value(0.0)).is_err());
    }

    #[test]
    fn epsilon_schedule() {
        let e = PExponents::new(3.0, 2).unwrap();
        let spec = ProblemSpec::new(
            mesh(),
            e,
            vec![BoundaryPiece::full(BoundaryLaw::NeumannZero)],
            OuterTrace::Value(1.0),
        )
        .unwrap();
        assert_eq!(spec.schedule(), &DEFAULT_SCHEDULE);
        let s = spec.clone().with_epsilon(1e-4).unwrap();
        assert_eq!(s.schedule(), &[1e-1, 1e-3, 1e-4]);
        assert!(spec.clone().with_epsilon(0.0).is_err());
        assert!(spec.with_schedule(vec![1e-3, 1e-2]).is_err());
    }
}
