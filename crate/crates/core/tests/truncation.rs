use std::sync::Arc;

use pharm::analytic::{PExponents, RadialProfile};
use pharm::discretization::{Discretization, RadialGrid};
use pharm::energy_solver::{solve, BoundaryPiece, OuterTrace, ProblemSpec};
use pharm::radial_bvp::BoundaryLaw;

/// Max difference on `[1, 4]` between the truncated solution and the exterior
/// solution `1 - 1/r`, with the far-field value imposed at `R`.
fn truncation_error(r_out: f64) -> f64 {
    let e = PExponents::new(2.0, 3).unwrap();
    let per_octave = 24;
    let octaves = r_out.log2().round() as usize;
    let radii: Vec<f64> = (0..=octaves * per_octave)
        .map(|j| 2f64.powf(j as f64 / per_octave as f64))
        .collect();
    let grid = Arc::new(RadialGrid::new(3, radii).unwrap());
    let spec = ProblemSpec::new(
        grid.clone(),
        e,
        vec![BoundaryPiece::full(BoundaryLaw::DirichletValue(0.0))],
        OuterTrace::Value(1.0),
    )
    .unwrap();
    let rep = solve(&spec, None).unwrap();
    let exact = RadialProfile::new(1.0, -1.0, e);
    (0..grid.node_count())
        .map(|n| (grid.node_polar(n).0, rep.solution.values()[n]))
        .filter(|(r, _)| *r <= 4.0)
        .map(|(r, v)| (v - exact.eval(r).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn truncation_error_shrinks_with_the_outer_radius() {
    let errors: Vec<f64> = [8.0, 16.0, 32.0].iter().map(|&r| truncation_error(r)).collect();
    for w in errors.windows(2) {
        assert!(w[0] / w[1] >= 2.0, "{errors:?}");
    }
}
