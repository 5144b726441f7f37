//! Operator-valued free probability at finite truncation order.

pub mod algebra;
pub mod error;
pub mod fock;
pub mod harness;
pub mod series;
pub mod transforms;

pub use algebra::{Algebra, AlgebraSpec, Element};
pub use error::{Error, Result};
pub use fock::{DepthMode, FockConfig, FockVector, ModelFlavor, Operator, RvModel};
pub use harness::{run_scenario, run_selftest, Report, ScenarioConfig, ScenarioKind};
pub use series::{jet_equal, Jet, JetComparison, MultilinearMap, Side};
pub use transforms::{
    dependence_check, locality_check, r_transform, s_transform, twisted_rhs, Diagnostics, MomentData, TransformKind,
    TransformResult,
};
