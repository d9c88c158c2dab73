//! Config-driven experiment runner.
//!
//! A run is parsed and validated in full, computed in memory, and only then
//! written to a fresh timestamped directory.

mod config;
mod run;

pub use config::{
    parse_config, BChoice, ConfigErrors, DirichletArc, Expectation, ExperimentKind, FieldChoice, Geometry, InnerLaw,
    MeshKind, RunConfig, SolverConfig, Truncation, VerifyConfig,
};
pub use run::{
    compare_with_oracle, execute, exit_code, run, write_artifact, OracleComparison, RunArtifact, EXIT_CONFIG, EXIT_IO,
    EXIT_OK, EXIT_SOLVER, EXIT_VERIFICATION,
};
