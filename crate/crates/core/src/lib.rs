//! Grover-style quantum search with generalized phases in the SU(2)
//! two-level reduction.

pub mod error;
pub mod kernel;
pub mod matching;
pub mod ndim;
pub mod pipeline;
pub mod planner;
pub mod su2;
pub mod verify;

pub use error::{Error, Result};
pub use kernel::{kernel_angle_w, KernelSpectrum};
pub use matching::{CurvePoint, CurveSample, MatchingInputs};
pub use ndim::{Comparison2D, NState, NUnitary, ReductionData};
pub use pipeline::{CurveStats, PlanReport, SimulateMode, SimulateReport};
pub use planner::{OptimalDiagnostics, SearchPlan, Strategy};
pub use su2::{InitialStateParams, Mat2, PhasePair, SearchGeometry, Vec2};
pub use verify::{CheckOutcome, Suite};
