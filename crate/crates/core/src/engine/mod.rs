//! Monte Carlo wave-function engine and the dense master-equation oracle.

mod ensemble;
mod envelope;
mod lindblad;
mod model;
pub(crate) mod sparse;
mod trajectory;

pub use ensemble::{
    estimate_rate, observable_series, run_ensemble, run_ensemble_with, run_records, EnsembleConfig, EnsembleResult,
    ObservableSeries, RateStatistic, MIN_HERALDS,
};
pub(crate) use ensemble::{failure_check, trajectory_seed, with_pool};
pub use envelope::DriveEnvelope;
pub use lindblad::{lindblad_oracle, validate_density_matrix, OracleTrajectory, MAX_ORACLE_DIMENSION};
pub use model::{CollapseChannel, EffectiveModel, HermitianTerm, Kick};
pub use trajectory::{run_trajectory, JumpEvent, Simulator, StopRules, TrajectoryRecord};
