//! Scene-level studies built on the loss: predictability ceilings, waveform
//! descent, single-axis ablations, and a finite-difference gradient audit.

mod ablate;
mod gradcheck;
mod optimize;
mod oracle;

pub use ablate::{run_ablation, AblationAxis, AblationConfig, AblationReport, AblationRow};
pub use gradcheck::{
    run_grad_check, GradCheckCase, GradCheckReport, FD_STEP, FD_TOLERANCE,
};
pub use optimize::{
    make_init, optimize_ras, write_trace_csv, InitKind, OptimizationTrace, OptimizeConfig,
    TraceRow, LEAK_FRACTION,
};
pub use oracle::{run_oracle, InputKind, OracleReport, OracleRow};
