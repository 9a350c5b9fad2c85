//! Entropy and Fisher-information functionals, log-Sobolev bound checks, optimizer-manifold
//! distances, counterexample families and OU/heat flows.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]
pub mod error;
pub mod flows;
pub mod functionals;
pub mod ineq;
pub mod manifold;
pub mod probes;
pub mod quad;

pub use error::{Error, Result};
pub use flows::{FlowState, FlowTrace, GaussianMixture, HermiteSeries};
pub use functionals::{Estimate, FunctionalReport, ReportOptions};
pub use ineq::{BoundCheck, BoundParams, Relation, Slack, Status};
pub use manifold::{ManifoldFit, ManifoldPoint};
pub use probes::{Mode, ProbeFunction, ProbeSpec};
pub use quad::{IntegralResult, QuadratureRule};
