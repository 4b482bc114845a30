//! Prescribed mean curvature flow for spacelike graph hypersurfaces.
//!
//! A hypersurface is written as a graph `x^0 = u(x)` over a flat spatial
//! torus inside an ambient Lorentzian product
//! `ds^2 = e^{2 psi} ( -(dx^0)^2 + sigma_ij dx^i dx^j )`. The crate computes
//! the induced geometry of such graphs, evolves them by
//! `du/dt = -e^{-psi} v (H - f)` toward a surface of prescribed mean
//! curvature `f`, and audits finished runs against the structural guarantees
//! of the continuum flow: sign preservation of `H - f`, barrier confinement,
//! bounded tilt and bounded principal curvatures.
//!
//! Everything is generic over the floating point scalar through
//! [`scalar::Real`]; the `*64` aliases below fix `f64`, which is what the
//! shipped tolerances are calibrated for.

pub mod ambient;
pub mod analysis;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod scalar;

pub use scalar::Real;

pub type SpacetimeModel64 = ambient::SpacetimeModel<f64>;
pub type ScaleFactor64 = ambient::ScaleFactor<f64>;
pub type BackgroundData64 = ambient::BackgroundData<f64>;
pub type GridSpec64 = grid::GridSpec<f64>;
pub type GraphState64 = geometry::GraphState<f64>;
pub type GeometryFields64 = geometry::GeometryFields<f64>;
pub type PrescribedCurvature64 = flow::PrescribedCurvature<f64>;
pub type FlowConfig64 = flow::FlowConfig<f64>;
pub type FlowTrace64 = flow::FlowTrace<f64>;
pub type MonitorRecord64 = analysis::MonitorRecord<f64>;
pub type AuditParams64 = analysis::AuditParams<f64>;
pub type AuditReport64 = analysis::AuditReport<f64>;
