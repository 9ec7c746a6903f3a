//! Matrix-free Rosenbrock-Krylov (ROK) time integration.
//!
//! A ROK method is a linearly-implicit Rosenbrock scheme whose Jacobian is
//! replaced by its restriction to a small Krylov subspace built once per
//! step. Only Jacobian-vector products and one small dense factorization
//! are needed per step, so the methods scale to large semi-discrete PDEs.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`)
//! through [`Scalar`]; the `*64` aliases at the crate root fix the common
//! double-precision case.

pub mod conditions;
pub mod control;
pub mod error;
pub mod krylov;
pub mod linalg;
pub mod ode;
pub mod problems;
pub mod scalar;
pub mod stepper;
pub mod tableau;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use conditions::{ConditionFamily, ConditionResidual, Weights};
pub use control::{ControllerConfig, IntegrationStats, StepProposal};
pub use krylov::{ArnoldiOptions, KrylovBasis};
pub use linalg::{LuFactors, Matrix, Vector};
pub use ode::{DeltaPolicy, JvpMode, OdeSystem};
pub use problems::ProblemSpec;
pub use stepper::{BasisVariant, JacobianChoice, RokConfig, StepResult, WorkCounters};
pub use tableau::MethodTableau;

pub type Vector64 = Vector<f64>;
pub type Matrix64 = Matrix<f64>;
pub type LuFactors64 = LuFactors<f64>;
pub type JvpMode64 = JvpMode<f64>;
pub type ArnoldiOptions64 = ArnoldiOptions<f64>;
pub type KrylovBasis64 = KrylovBasis<f64>;
pub type Tableau64 = MethodTableau<f64>;
pub type RokConfig64 = RokConfig<f64>;
pub type StepResult64 = StepResult<f64>;
pub type ControllerConfig64 = ControllerConfig<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type ConditionResidual64 = ConditionResidual<f64>;

pub type Vector32 = Vector<f32>;
pub type Matrix32 = Matrix<f32>;
pub type Tableau32 = MethodTableau<f32>;
