//! Explicit time integration of the height flow `du/dt = -e^{-psi} v (H - f)`.
//!
//! The right hand side is evaluated at fixed spatial coordinates, so a step
//! is a node-local update once the geometry fields are built. Step sizes
//! obey the parabolic stability bound of the principal part; a run stops on
//! residual convergence, on leaving the configured barrier window, on the
//! step or flow-time budget, or when the graph stops being spacelike.

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{monitor_with, MonitorRecord};
use crate::geometry::{
    gradient_quantities, GeometryError, GeometryFields, GraphState, DEFAULT_SPACELIKE_MARGIN,
};
use crate::ambient::SpacetimeModel;
use crate::grid::{GridSpec, MAX_DIM};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("sampled curvature table grid does not match the flow grid ({table} vs {state} nodes)")]
    GridMismatch { table: usize, state: usize },
    #[error("sampled curvature table has {got} values but its grid has {expected} nodes")]
    TableSize { expected: usize, got: usize },
    #[error("flow.{field} = {value} is outside its allowed range")]
    BadConfig { field: &'static str, value: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Target mean curvature `f`, evaluated at the current graph height.
#[derive(Debug, Clone, PartialEq)]
pub enum PrescribedCurvature<S> {
    Constant {
        value: S,
    },
    /// f = offset + slope * x0
    AffineTime {
        offset: S,
        slope: S,
    },
    /// f = mean + amplitude * prod_k cos(2 pi waves_k x_k / L_k)
    CosineSpatial {
        mean: S,
        amplitude: S,
        waves: [u32; MAX_DIM],
    },
    /// x-only table on the flow grid: f(x0, x) = values[node]
    SampledGrid {
        grid: GridSpec<S>,
        values: Vec<S>,
    },
}

impl<S: Real> PrescribedCurvature<S> {
    pub fn validate(&self) -> Result<(), FlowError> {
        if let PrescribedCurvature::SampledGrid { grid, values } = self {
            if values.len() != grid.node_count() {
                return Err(FlowError::TableSize {
                    expected: grid.node_count(),
                    got: values.len(),
                });
            }
        }
        Ok(())
    }
}

/// Value of `f` at the ambient point `(x0, x)` where `x` is the coordinate
/// of `node` on `grid`. Sampled tables must live on that same grid.
pub fn eval_f<S: Real>(
    f: &PrescribedCurvature<S>,
    x0: S,
    grid: &GridSpec<S>,
    node: usize,
) -> Result<S, FlowError> {
    match f {
        PrescribedCurvature::Constant { value } => Ok(*value),
        PrescribedCurvature::AffineTime { offset, slope } => Ok(*offset + *slope * x0),
        PrescribedCurvature::CosineSpatial {
            mean,
            amplitude,
            waves,
        } => {
            let x = grid.coords(node);
            let mut wave = *amplitude;
            for axis in 0..grid.dim() {
                let phase =
                    S::lit(2.0) * S::PI() * S::lit(waves[axis] as f64) * x[axis] / grid.length(axis);
                wave = wave * phase.cos();
            }
            Ok(*mean + wave)
        }
        PrescribedCurvature::SampledGrid {
            grid: table_grid,
            values,
        } => {
            if table_grid != grid {
                return Err(FlowError::GridMismatch {
                    table: table_grid.node_count(),
                    state: grid.node_count(),
                });
            }
            Ok(values[node])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Integrator {
    Euler,
    Rk2,
}

#[derive(Debug, Clone)]
pub struct FlowConfig<S> {
    /// fraction of the parabolic stability bound, in (0, 1]
    pub cfl_safety: S,
    pub tol_residual: S,
    pub max_steps: usize,
    pub max_flow_time: S,
    pub spacelike_margin: S,
    pub integrator: Integrator,
    pub u_floor: Option<S>,
    pub u_ceiling: Option<S>,
    /// monitor cadence in steps; the first and last states are always kept
    pub record_every: usize,
}

impl<S: Real> Default for FlowConfig<S> {
    fn default() -> Self {
        FlowConfig {
            cfl_safety: S::lit(0.2),
            tol_residual: S::lit(1e-8),
            max_steps: 1_000_000,
            max_flow_time: S::infinity(),
            spacelike_margin: S::lit(DEFAULT_SPACELIKE_MARGIN),
            integrator: Integrator::Rk2,
            u_floor: None,
            u_ceiling: None,
            record_every: 100,
        }
    }
}

impl<S: Real> FlowConfig<S> {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.cfl_safety > S::zero() && self.cfl_safety <= S::one()) {
            return Err(FlowError::BadConfig {
                field: "cfl_safety",
                value: self.cfl_safety.as_f64(),
            });
        }
        if !(self.tol_residual > S::zero()) {
            return Err(FlowError::BadConfig {
                field: "tol_residual",
                value: self.tol_residual.as_f64(),
            });
        }
        if !(self.spacelike_margin > S::zero() && self.spacelike_margin < S::one()) {
            return Err(FlowError::BadConfig {
                field: "spacelike_margin",
                value: self.spacelike_margin.as_f64(),
            });
        }
        if !(self.max_flow_time > S::zero()) {
            return Err(FlowError::BadConfig {
                field: "max_flow_time",
                value: self.max_flow_time.as_f64(),
            });
        }
        if self.record_every == 0 {
            return Err(FlowError::BadConfig {
                field: "record_every",
                value: 0.0,
            });
        }
        if let (Some(floor), Some(ceiling)) = (self.u_floor, self.u_ceiling) {
            if !(floor < ceiling) {
                return Err(FlowError::BadConfig {
                    field: "u_floor",
                    value: floor.as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Node-wise residual H - f and its extremes.
#[derive(Debug, Clone)]
pub struct ResidualReport<S> {
    pub field: Vec<S>,
    pub sup_abs: S,
    pub min_signed: S,
}

pub fn residual<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    f: &PrescribedCurvature<S>,
    margin: S,
) -> Result<ResidualReport<S>, FlowError> {
    let fields = GeometryFields::compute(model, state, margin)?;
    let mut values = Vec::with_capacity(state.u.len());
    let mut sup_abs = S::zero();
    let mut min_signed = S::infinity();
    for node in 0..state.u.len() {
        let r = fields.mean_curvature[node] - eval_f(f, state.u[node], &state.grid, node)?;
        sup_abs = sup_abs.max(r.abs());
        min_signed = min_signed.min(r);
        values.push(r);
    }
    Ok(ResidualReport {
        field: values,
        sup_abs,
        min_signed,
    })
}

/// Result of the upper-barrier precheck: H >= f on the initial graph.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BarrierReport<S> {
    pub ok: bool,
    pub min_signed: S,
    pub worst_node: usize,
}

pub fn check_upper_barrier<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    f: &PrescribedCurvature<S>,
    tol: S,
    margin: S,
) -> Result<BarrierReport<S>, FlowError> {
    let report = residual(model, state, f, margin)?;
    let worst_node = report
        .field
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("residual is not NaN"))
        .map(|(node, _)| node)
        .unwrap_or(0);
    Ok(BarrierReport {
        ok: report.min_signed >= -tol,
        min_signed: report.min_signed,
        worst_node,
    })
}

/// Largest eigenvalue over all nodes of the effective diffusion matrix
/// v^2 sigma^{ij} + u^i u^j (the principal symbol in coordinate units).
fn diffusion_bound<S: Real>(fields: &GeometryFields<S>, dim: usize) -> S {
    let mut bound = S::zero();
    for node in 0..fields.v.len() {
        let v2 = fields.v[node] * fields.v[node];
        let sigma_inv = &fields.background[node].sigma_inv;
        let up = &fields.du_up[node];
        let top = if dim == 1 {
            v2 * sigma_inv[0][0] + up[0] * up[0]
        } else {
            let m00 = v2 * sigma_inv[0][0] + up[0] * up[0];
            let m01 = v2 * sigma_inv[0][1] + up[0] * up[1];
            let m11 = v2 * sigma_inv[1][1] + up[1] * up[1];
            let mean = (m00 + m11) / S::lit(2.0);
            let shift = ((m00 - m11) / S::lit(2.0)).hypot(m01);
            mean + shift
        };
        bound = bound.max(top);
    }
    bound
}

fn stable_dt_with<S: Real>(
    fields: &GeometryFields<S>,
    state: &GraphState<S>,
    config: &FlowConfig<S>,
) -> S {
    let dim = state.grid.dim();
    let mut min_h2 = S::infinity();
    for axis in 0..dim {
        let h = state.grid.spacing(axis);
        min_h2 = min_h2.min(h * h);
    }
    let bound = diffusion_bound(fields, dim);
    let mut dt =
        config.cfl_safety * min_h2 / (S::lit(2.0) * S::from_count(dim) * bound);
    if state.time + dt > config.max_flow_time {
        dt = (config.max_flow_time - state.time).max(S::zero());
    }
    // a step too small to advance the clock counts as no step at all
    if state.time + dt == state.time {
        dt = S::zero();
    }
    dt
}

/// Parabolic step bound `cfl * min h_k^2 / (2 n Lambda)`, clamped to the
/// remaining flow-time budget.
pub fn stable_dt<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    config: &FlowConfig<S>,
) -> Result<S, FlowError> {
    let fields = GeometryFields::compute(model, state, config.spacelike_margin)?;
    Ok(stable_dt_with(&fields, state, config))
}

/// `-e^{-psi} v (H - f)` per node, the fixed-coordinate form of the flow.
fn flow_speed<S: Real>(
    fields: &GeometryFields<S>,
    state: &GraphState<S>,
    f: &PrescribedCurvature<S>,
) -> Result<Vec<S>, FlowError> {
    (0..state.u.len())
        .map(|node| {
            let target = eval_f(f, state.u[node], &state.grid, node)?;
            Ok(-fields.background[node].exp_psi.recip()
                * fields.v[node]
                * (fields.mean_curvature[node] - target))
        })
        .collect()
}

fn advance<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    fields: &GeometryFields<S>,
    f: &PrescribedCurvature<S>,
    dt: S,
    config: &FlowConfig<S>,
) -> Result<GraphState<S>, FlowError> {
    let speed = flow_speed(fields, state, f)?;
    let u = match config.integrator {
        Integrator::Euler => state
            .u
            .iter()
            .zip(&speed)
            .map(|(&u, &s)| u + dt * s)
            .collect(),
        Integrator::Rk2 => {
            // midpoint rule: half step, then a full step at the midpoint slope
            let half = dt / S::lit(2.0);
            let u_mid: Vec<S> = state
                .u
                .iter()
                .zip(&speed)
                .map(|(&u, &s)| u + half * s)
                .collect();
            let mid = GraphState {
                grid: state.grid,
                u: u_mid,
                time: state.time + half,
            };
            let fields_mid = GeometryFields::compute(model, &mid, config.spacelike_margin)?;
            let speed_mid = flow_speed(&fields_mid, &mid, f)?;
            state
                .u
                .iter()
                .zip(&speed_mid)
                .map(|(&u, &s)| u + dt * s)
                .collect()
        }
    };
    Ok(GraphState {
        grid: state.grid,
        u,
        time: state.time + dt,
    })
}

/// One explicit step of size `dt`. The updated graph must still clear the
/// spacelikeness margin.
pub fn step<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    f: &PrescribedCurvature<S>,
    dt: S,
    config: &FlowConfig<S>,
) -> Result<GraphState<S>, FlowError> {
    let fields = GeometryFields::compute(model, state, config.spacelike_margin)?;
    let next = advance(model, state, &fields, f, dt, config)?;
    gradient_quantities(model, &next, config.spacelike_margin)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowStatus {
    Converged,
    MaxStepsReached,
    Diverged,
    SpacelikenessLost,
}

/// Height field kept alongside each monitor record, for node-wise audits.
#[derive(Debug, Clone)]
pub struct TraceSample<S> {
    pub step: usize,
    pub time: S,
    pub u: Vec<S>,
}

/// Everything a finished run leaves behind. `records` and `samples` are
/// parallel: one height snapshot per monitor record.
#[derive(Debug, Clone)]
pub struct FlowTrace<S> {
    pub records: Vec<MonitorRecord<S>>,
    pub samples: Vec<TraceSample<S>>,
    pub status: FlowStatus,
    pub final_state: GraphState<S>,
    /// upper-barrier precheck of the initial graph; None when the initial
    /// graph was not even spacelike
    pub initial_barrier: Option<BarrierReport<S>>,
}

/// Runs the flow until a stopping rule fires. Loop order per step: geometry,
/// monitor, stop tests, step size, update. The first and last states are
/// always recorded; in between the cadence is `record_every`.
///
/// A failed barrier precheck does not abort: the sign condition is only
/// needed at the start for the preservation argument, and exploring
/// non-barrier starts is legitimate. The audit then reports violations.
pub fn evolve<S: Real>(
    model: &SpacetimeModel<S>,
    initial: GraphState<S>,
    f: &PrescribedCurvature<S>,
    config: &FlowConfig<S>,
) -> Result<FlowTrace<S>, FlowError> {
    config.validate()?;
    f.validate()?;
    model.validate().map_err(GeometryError::from)?;

    let margin = config.spacelike_margin;
    let initial_barrier =
        match check_upper_barrier(model, &initial, f, config.tol_residual, margin) {
            Ok(report) => Some(report),
            Err(FlowError::Geometry(GeometryError::SpacelikenessLost { .. })) => None,
            Err(err) => return Err(err),
        };

    let mut state = initial;
    let mut records: Vec<MonitorRecord<S>> = Vec::new();
    let mut samples: Vec<TraceSample<S>> = Vec::new();
    let mut step_index = 0usize;

    let status = loop {
        let fields = match GeometryFields::compute(model, &state, margin) {
            Ok(fields) => fields,
            Err(GeometryError::SpacelikenessLost { .. }) => break FlowStatus::SpacelikenessLost,
            Err(err) => return Err(err.into()),
        };
        let mut record = monitor_with(&fields, &state, f, S::zero())?;

        let stop = if record.sup_abs_residual <= config.tol_residual {
            Some(FlowStatus::Converged)
        } else if config.u_floor.is_some_and(|floor| record.u_min < floor)
            || config.u_ceiling.is_some_and(|ceiling| record.u_max > ceiling)
        {
            Some(FlowStatus::Diverged)
        } else if step_index >= config.max_steps {
            Some(FlowStatus::MaxStepsReached)
        } else {
            None
        };
        if let Some(status) = stop {
            records.push(record);
            samples.push(TraceSample {
                step: step_index,
                time: state.time,
                u: state.u.clone(),
            });
            break status;
        }

        let dt = stable_dt_with(&fields, &state, config);
        if dt <= S::zero() {
            // flow-time budget exhausted
            records.push(record);
            samples.push(TraceSample {
                step: step_index,
                time: state.time,
                u: state.u.clone(),
            });
            break FlowStatus::MaxStepsReached;
        }
        if step_index % config.record_every == 0 {
            record.dt = dt;
            records.push(record);
            samples.push(TraceSample {
                step: step_index,
                time: state.time,
                u: state.u.clone(),
            });
        }

        state = match advance(model, &state, &fields, f, dt, config) {
            Ok(next) => next,
            Err(FlowError::Geometry(GeometryError::SpacelikenessLost { .. })) => {
                break FlowStatus::SpacelikenessLost
            }
            Err(err) => return Err(err),
        };
        step_index += 1;
    };

    Ok(FlowTrace {
        records,
        samples,
        status,
        final_state: state,
        initial_barrier,
    })
}
