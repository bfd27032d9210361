//! Coherent protocols: channel construction with ancilla qubits, feedback
//! decoupling, and splitting-subspace stabilization.

pub mod feedback;
pub mod coherent;
pub mod splitting;

pub use feedback::{fbdd_check, fbdd_run, FbddCheck, FbddConfig, FbddOutcome};
pub use coherent::{
    lv_nested, lv_nested_rank3, lv_noisy_ancilla, lv_polar_extract, lv_simulate, AveragingSchedule, LvOutcome,
    NestedOutcome, NestedSchedules, NoisyOutcome, RankTwoTarget,
};
pub use splitting::{split_build, split_closed_form, split_measurement_feedback, split_run, SplitConfig};
