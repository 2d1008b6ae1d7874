//! Integrators for the forced flow and its rescaled version, trajectories,
//! graphical scale and the evolution residual of `phi`.

mod forcing;
mod graphical;
mod residual;
mod stepper;
mod trajectory;

pub use forcing::{ForcingKind, ForcingSelfTest, ForcingSpec};
pub use graphical::{graphical_scale, GraphicalFlag, GraphicalScale};
pub use residual::{evolution_residual_phi, PhiResidual};
pub use stepper::{
    redistribute, step, step_bound, step_mcff, step_rmcff, FieldView, GConvention, Picture,
    StepOptions,
};
pub use trajectory::{
    calibrate_dilation, central_radius, record, rescale_state, rescale_time, rescale_trajectory,
    run_trajectory, series, Calibration, FlowTrajectory, MapDirection, Recorders, Truncation,
};
