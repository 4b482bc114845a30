//! Run monitoring and after-the-fact verification.
//!
//! A flow run leaves a trace of monitor records and height snapshots; the
//! audit replays the qualitative facts the continuous flow guarantees
//! (residual sign, node-wise descent, barrier confinement, bounded tilt and
//! curvature) against that trace. Independent of any run, the dual-path
//! check compares the two discrete routes to the second fundamental form,
//! the identity report checks pointwise algebra, and refinement studies
//! measure convergence order against closed-form references.

use serde::Serialize;
use thiserror::Error;

use crate::ambient::{AmbientError, ScaleFactor, SpacetimeModel, SpatialMatrix};
use crate::flow::{
    eval_f, evolve, FlowConfig, FlowError, FlowStatus, FlowTrace, PrescribedCurvature,
};
use crate::geometry::{embedding_oracle, GeometryError, GeometryFields, GraphState};
use crate::grid::{GridError, GridSpec, MAX_DIM};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("audit needs at least two monitor records, the trace has {records}")]
    InsufficientTrace { records: usize },
    #[error("scenario has no closed-form reference: {scenario}")]
    NoReference { scenario: &'static str },
    #[error("scan needs an ordered range and at least two samples")]
    BadScanRange,
    #[error("refinement study needs at least one level")]
    EmptyStudy,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Ambient(#[from] AmbientError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// One row of the evolution monitor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonitorRecord<S> {
    pub time: S,
    /// step size taken from this state; zero on the final record
    pub dt: S,
    pub sup_abs_residual: S,
    pub min_signed_residual: S,
    pub max_vtilde: S,
    pub max_abs_kappa: S,
    pub max_abs_h: S,
    pub u_min: S,
    pub u_max: S,
    pub max_du_norm: S,
}

pub(crate) fn monitor_with<S: Real>(
    fields: &GeometryFields<S>,
    state: &GraphState<S>,
    f: &PrescribedCurvature<S>,
    dt: S,
) -> Result<MonitorRecord<S>, FlowError> {
    let dim = state.grid.dim();
    let mut sup_abs_residual = S::zero();
    let mut min_signed_residual = S::infinity();
    let mut max_vtilde = S::zero();
    let mut max_abs_kappa = S::zero();
    let mut max_abs_h = S::zero();
    let mut u_min = S::infinity();
    let mut u_max = S::neg_infinity();
    let mut max_du_norm2 = S::zero();
    for node in 0..state.u.len() {
        let r = fields.mean_curvature[node] - eval_f(f, state.u[node], &state.grid, node)?;
        sup_abs_residual = sup_abs_residual.max(r.abs());
        min_signed_residual = min_signed_residual.min(r);
        max_vtilde = max_vtilde.max(fields.vtilde[node]);
        for axis in 0..dim {
            max_abs_kappa = max_abs_kappa.max(fields.kappa[node][axis].abs());
        }
        max_abs_h = max_abs_h.max(fields.mean_curvature[node].abs());
        u_min = u_min.min(state.u[node]);
        u_max = u_max.max(state.u[node]);
        max_du_norm2 = max_du_norm2.max(fields.du_norm2[node]);
    }
    Ok(MonitorRecord {
        time: state.time,
        dt,
        sup_abs_residual,
        min_signed_residual,
        max_vtilde,
        max_abs_kappa,
        max_abs_h,
        u_min,
        u_max,
        max_du_norm: max_du_norm2.sqrt(),
    })
}

/// Monitor row for a single state; `dt` is carried through verbatim.
pub fn monitor<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    f: &PrescribedCurvature<S>,
    dt: S,
    margin: S,
) -> Result<MonitorRecord<S>, FlowError> {
    let fields = GeometryFields::compute(model, state, margin)?;
    monitor_with(&fields, state, f, dt)
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditParams<S> {
    pub tol_residual: S,
    /// slack for the residual sign audit
    pub sign_tol: S,
    /// slack for node-wise descent and for the initial-ceiling check
    pub descent_tol: S,
    pub vtilde_bound: S,
    /// final max |kappa| may exceed the trace median by this factor
    pub kappa_growth_factor: S,
    pub du_norm_bound: S,
    pub u_floor: Option<S>,
}

impl<S: Real> Default for AuditParams<S> {
    fn default() -> Self {
        AuditParams {
            tol_residual: S::lit(1e-8),
            sign_tol: S::lit(1e-6),
            descent_tol: S::lit(1e-12),
            vtilde_bound: S::lit(10.0),
            kappa_growth_factor: S::lit(1.1),
            du_norm_bound: S::lit(0.999),
            u_floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Verdict<S> {
    pub name: &'static str,
    pub passed: bool,
    pub worst_value: S,
    pub worst_time: S,
}

/// Per-invariant verdicts over a full trace. The sign and descent checks
/// only apply when the run started above the barrier (initial residual
/// nowhere negative); `sign_hypothesis` records whether they were live.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport<S> {
    pub verdicts: Vec<Verdict<S>>,
    pub all_passed: bool,
    pub sign_hypothesis: bool,
}

pub fn audit<S: Real>(
    trace: &FlowTrace<S>,
    params: &AuditParams<S>,
) -> Result<AuditReport<S>, AnalysisError> {
    let records = &trace.records;
    if records.len() < 2 {
        return Err(AnalysisError::InsufficientTrace {
            records: records.len(),
        });
    }
    let sign_hypothesis = records[0].min_signed_residual >= S::zero();
    let mut verdicts = Vec::with_capacity(7);

    // H - f never crosses below zero once it starts nonnegative
    {
        let mut worst = S::infinity();
        let mut at = records[0].time;
        for record in records {
            if record.min_signed_residual < worst {
                worst = record.min_signed_residual;
                at = record.time;
            }
        }
        verdicts.push(Verdict {
            name: "sign_preservation",
            passed: !sign_hypothesis || worst >= -params.sign_tol,
            worst_value: worst,
            worst_time: at,
        });
    }

    // heights descend node by node between stored snapshots
    {
        let mut worst = S::neg_infinity();
        let mut at = records[0].time;
        for pair in trace.samples.windows(2) {
            for (next, prev) in pair[1].u.iter().zip(&pair[0].u) {
                let rise = *next - *prev;
                if rise > worst {
                    worst = rise;
                    at = pair[1].time;
                }
            }
        }
        verdicts.push(Verdict {
            name: "monotone_descent",
            passed: !sign_hypothesis || worst <= params.descent_tol,
            worst_value: worst,
            worst_time: at,
        });
    }

    // confinement: never below the floor, never above the initial maximum
    {
        let ceiling = records[0].u_max;
        let mut worst = S::neg_infinity();
        let mut at = records[0].time;
        let mut passed = true;
        for record in records {
            if let Some(floor) = params.u_floor {
                let violation = floor - record.u_min;
                if violation > worst {
                    worst = violation;
                    at = record.time;
                }
                passed = passed && violation <= S::zero();
            }
            let violation = record.u_max - ceiling;
            if violation > worst {
                worst = violation;
                at = record.time;
            }
            passed = passed && violation <= params.descent_tol;
        }
        verdicts.push(Verdict {
            name: "confinement",
            passed,
            worst_value: worst,
            worst_time: at,
        });
    }

    // tilt stays bounded: below the configured cap and below twice the
    // initial maximum
    {
        let initial = records[0].max_vtilde;
        let mut worst = S::zero();
        let mut at = records[0].time;
        for record in records {
            if record.max_vtilde > worst {
                worst = record.max_vtilde;
                at = record.time;
            }
        }
        verdicts.push(Verdict {
            name: "vtilde_bound",
            passed: worst <= params.vtilde_bound && worst <= S::lit(2.0) * initial,
            worst_value: worst,
            worst_time: at,
        });
    }

    // principal curvatures do not blow up: final against the trace median
    {
        let mut sorted: Vec<S> = records.iter().map(|r| r.max_abs_kappa).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("kappa is not NaN"));
        let median = sorted[sorted.len() / 2];
        let last = records.last().expect("at least two records");
        verdicts.push(Verdict {
            name: "kappa_no_growth",
            passed: last.max_abs_kappa <= params.kappa_growth_factor * median,
            worst_value: last.max_abs_kappa,
            worst_time: last.time,
        });
    }

    // the gradient never approaches the light cone
    {
        let mut worst = S::zero();
        let mut at = records[0].time;
        for record in records {
            if record.max_du_norm > worst {
                worst = record.max_du_norm;
                at = record.time;
            }
        }
        verdicts.push(Verdict {
            name: "spacelike_gradient",
            passed: worst <= params.du_norm_bound,
            worst_value: worst,
            worst_time: at,
        });
    }

    {
        let last = records.last().expect("at least two records");
        verdicts.push(Verdict {
            name: "final_residual",
            passed: last.sup_abs_residual <= params.tol_residual,
            worst_value: last.sup_abs_residual,
            worst_time: last.time,
        });
    }

    let all_passed = verdicts.iter().all(|v| v.passed);
    Ok(AuditReport {
        verdicts,
        all_passed,
        sign_hypothesis,
    })
}

/// Gap between the graph-formula curvature and the embedding oracle.
#[derive(Debug, Clone)]
pub struct DualPathReport<S> {
    pub max_discrepancy: S,
    /// signed per-node difference, graph route minus oracle
    pub field: Vec<SpatialMatrix<S>>,
}

pub fn dual_path_check<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    margin: S,
) -> Result<DualPathReport<S>, GeometryError> {
    let fields = GeometryFields::compute(model, state, margin)?;
    let oracle = embedding_oracle(model, state, margin)?;
    let dim = state.grid.dim();
    let mut field = Vec::with_capacity(state.u.len());
    let mut max_discrepancy = S::zero();
    for node in 0..state.u.len() {
        let mut diff = [[S::zero(); MAX_DIM]; MAX_DIM];
        for i in 0..dim {
            for j in 0..dim {
                diff[i][j] = fields.h[node][i][j] - oracle[node][i][j];
                max_discrepancy = max_discrepancy.max(diff[i][j].abs());
            }
        }
        field.push(diff);
    }
    Ok(DualPathReport {
        max_discrepancy,
        field,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityCheck<S> {
    pub name: &'static str,
    pub max_violation: S,
    pub tolerance: S,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport<S> {
    pub checks: Vec<IdentityCheck<S>>,
    pub all_passed: bool,
}

/// Pointwise algebraic identities every computed state must satisfy,
/// whatever the model or resolution.
pub fn identity_report<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    margin: S,
) -> Result<IdentityReport<S>, GeometryError> {
    let fields = GeometryFields::compute(model, state, margin)?;
    let dim = state.grid.dim();
    let nodes = state.u.len();

    let mut gradient_split = S::zero();
    let mut vtilde_reciprocal = S::zero();
    let mut metric_inverse = S::zero();
    let mut shape_symmetry = S::zero();
    let mut curvature_trace = S::zero();
    let mut shape_norm = S::zero();
    let mut normal_unit = S::zero();
    let mut normal_tangency = S::zero();

    for node in 0..nodes {
        let v = fields.v[node];
        gradient_split = gradient_split.max((v * v + fields.du_norm2[node] - S::one()).abs());
        vtilde_reciprocal = vtilde_reciprocal.max((v * fields.vtilde[node] - S::one()).abs());

        for i in 0..dim {
            for j in 0..dim {
                let mut entry = S::zero();
                for k in 0..dim {
                    entry = entry + fields.g_inv[node][i][k] * fields.g[node][k][j];
                }
                let target = if i == j { S::one() } else { S::zero() };
                metric_inverse = metric_inverse.max((entry - target).abs());
                shape_symmetry =
                    shape_symmetry.max((fields.h[node][i][j] - fields.h[node][j][i]).abs());
            }
        }

        let mut kappa_sum = S::zero();
        let mut kappa_sq = S::zero();
        for axis in 0..dim {
            kappa_sum = kappa_sum + fields.kappa[node][axis];
            kappa_sq = kappa_sq + fields.kappa[node][axis] * fields.kappa[node][axis];
        }
        curvature_trace = curvature_trace.max((fields.mean_curvature[node] - kappa_sum).abs());
        shape_norm = shape_norm.max((fields.a_norm2[node] - kappa_sq).abs());

        // ambient inner products of the past normal with itself and with
        // the graph tangents
        let bg = &fields.background[node];
        let conformal = bg.exp_psi * bg.exp_psi;
        let nu = &fields.nu[node];
        let mut spatial = S::zero();
        for k in 0..dim {
            for l in 0..dim {
                spatial = spatial + bg.sigma[k][l] * nu[1 + k] * nu[1 + l];
            }
        }
        normal_unit =
            normal_unit.max((conformal * (spatial - nu[0] * nu[0]) + S::one()).abs());
        for i in 0..dim {
            let mut pairing = -nu[0] * fields.du[node][i];
            for l in 0..dim {
                pairing = pairing + bg.sigma[i][l] * nu[1 + l];
            }
            normal_tangency = normal_tangency.max((conformal * pairing).abs());
        }
    }

    let entries = [
        ("unit_gradient_split", gradient_split, S::lit(1e-15)),
        ("vtilde_reciprocal", vtilde_reciprocal, S::lit(1e-14)),
        ("metric_inverse", metric_inverse, S::lit(1e-12)),
        ("shape_symmetry", shape_symmetry, S::lit(1e-14)),
        ("curvature_trace", curvature_trace, S::lit(1e-12)),
        ("shape_norm", shape_norm, S::lit(1e-12)),
        ("normal_unit", normal_unit, S::lit(1e-12)),
        ("normal_tangency", normal_tangency, S::lit(1e-10)),
    ];
    let checks: Vec<IdentityCheck<S>> = entries
        .iter()
        .map(|&(name, max_violation, tolerance)| IdentityCheck {
            name,
            max_violation,
            tolerance,
            passed: max_violation <= tolerance,
        })
        .collect();
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(IdentityReport { checks, all_passed })
}

/// Convergence scenarios with a known reference answer.
#[derive(Debug, Clone)]
pub enum RefinementScenario<S> {
    /// discrete H of `amplitude sin(2 pi x)` on the flat model against the
    /// closed-form graph curvature
    CosineCurvature { amplitude: S },
    /// constant graphs reproduce the slice curvature exactly
    ConstantSlice { model: SpacetimeModel<S>, height: S },
    /// evolve a homogeneous start and compare to the stationary height
    FlowToSlice {
        model: SpacetimeModel<S>,
        f_value: S,
        initial_height: S,
        config: FlowConfig<S>,
    },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RefinementRow<S> {
    pub points: usize,
    pub error: S,
    /// log2-style order against the previous row; None on the first row
    pub observed_order: Option<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RefinementVerdict {
    /// every level sits below the exactness threshold
    Exact,
    /// observed orders lie in [1.8, 2.2]
    SecondOrder,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementStudy<S> {
    pub rows: Vec<RefinementRow<S>>,
    pub verdict: RefinementVerdict,
    pub exact_threshold: S,
}

fn study_error<S: Real>(
    scenario: &RefinementScenario<S>,
    points: usize,
) -> Result<S, AnalysisError> {
    let margin = S::lit(1e-3);
    match scenario {
        RefinementScenario::CosineCurvature { amplitude } => {
            let grid = GridSpec::new(&[points], &[S::one()])?;
            let model = SpacetimeModel::MinkowskiTorus { dim: 1 };
            let tau = S::lit(2.0) * S::PI();
            let u: Vec<S> = (0..points)
                .map(|k| *amplitude * (tau * S::from_count(k) / S::from_count(points)).sin())
                .collect();
            let state = GraphState::new(grid, u, S::zero())?;
            let fields = GeometryFields::compute(&model, &state, margin)?;
            let mut worst = S::zero();
            for node in 0..points {
                let x = grid.coords(node)[0];
                let slope = *amplitude * tau * (tau * x).cos();
                let bend = -*amplitude * tau * tau * (tau * x).sin();
                let reference = -bend / (S::one() - slope * slope).powf(S::lit(1.5));
                worst = worst.max((fields.mean_curvature[node] - reference).abs());
            }
            Ok(worst)
        }
        RefinementScenario::ConstantSlice { model, height } => {
            let dims = vec![points; model.dim()];
            let lengths = vec![S::one(); model.dim()];
            let grid = GridSpec::new(&dims, &lengths)?;
            let state = GraphState::constant(grid, *height);
            let fields = GeometryFields::compute(model, &state, margin)?;
            let reference = model.slice_mean_curvature(*height)?;
            let mut worst = S::zero();
            for node in 0..state.u.len() {
                worst = worst.max((fields.mean_curvature[node] - reference).abs());
            }
            Ok(worst)
        }
        RefinementScenario::FlowToSlice {
            model,
            f_value,
            initial_height,
            config,
        } => {
            let target = match model {
                SpacetimeModel::FlrwTorus {
                    dim,
                    scale: ScaleFactor::Gaussian,
                } => *f_value / S::from_count(*dim),
                _ => {
                    return Err(AnalysisError::NoReference {
                        scenario: "flow_to_slice",
                    })
                }
            };
            let dims = vec![points; model.dim()];
            let lengths = vec![S::one(); model.dim()];
            let grid = GridSpec::new(&dims, &lengths)?;
            let initial = GraphState::constant(grid, *initial_height);
            let f = PrescribedCurvature::Constant { value: *f_value };
            let trace = evolve(model, initial, &f, config)?;
            let mut worst = S::zero();
            for &u in &trace.final_state.u {
                worst = worst.max((u - target).abs());
            }
            if trace.status != FlowStatus::Converged {
                // no stationary state reached; report the raw gap and let
                // the verdict fail on it
                worst = worst.max(S::infinity());
            }
            Ok(worst)
        }
    }
}

pub fn refinement_study<S: Real>(
    scenario: &RefinementScenario<S>,
    levels: &[usize],
) -> Result<RefinementStudy<S>, AnalysisError> {
    if levels.is_empty() {
        return Err(AnalysisError::EmptyStudy);
    }
    let exact_threshold = match scenario {
        RefinementScenario::FlowToSlice { config, .. } => {
            (config.tol_residual * S::lit(10.0)).max(S::lit(1e-6))
        }
        _ => S::lit(1e-10),
    };

    let mut rows: Vec<RefinementRow<S>> = Vec::with_capacity(levels.len());
    for &points in levels {
        let error = study_error(scenario, points)?;
        let observed_order = rows.last().map(|prev| {
            (prev.error / error).ln()
                / (S::from_count(points) / S::from_count(prev.points)).ln()
        });
        rows.push(RefinementRow {
            points,
            error,
            observed_order,
        });
    }

    let exact = rows.iter().all(|row| row.error <= exact_threshold);
    let second_order = rows.len() >= 2
        && rows.iter().skip(1).all(|row| {
            row.observed_order
                .map(|order| order >= S::lit(1.8) && order <= S::lit(2.2))
                .unwrap_or(false)
        });
    let verdict = if exact {
        RefinementVerdict::Exact
    } else if second_order {
        RefinementVerdict::SecondOrder
    } else {
        RefinementVerdict::Failed
    };
    Ok(RefinementStudy {
        rows,
        verdict,
        exact_threshold,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SliceSample<S> {
    pub x0: S,
    pub h_slice: S,
}

/// Mean curvature of the constant slices of a homogeneous model, tabulated
/// on a uniform inclusive sample of `[t_min, t_max]`.
pub fn slice_scan<S: Real>(
    model: &SpacetimeModel<S>,
    t_min: S,
    t_max: S,
    steps: usize,
) -> Result<Vec<SliceSample<S>>, AnalysisError> {
    if steps < 2 || !(t_min <= t_max) {
        return Err(AnalysisError::BadScanRange);
    }
    let span = t_max - t_min;
    let mut samples = Vec::with_capacity(steps);
    for k in 0..steps {
        let x0 = t_min + span * S::from_count(k) / S::from_count(steps - 1);
        let h_slice = model.slice_mean_curvature(x0)?;
        samples.push(SliceSample { x0, h_slice });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::TraceSample;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn minkowski() -> SpacetimeModel<f64> {
        SpacetimeModel::MinkowskiTorus { dim: 1 }
    }

    fn gaussian_flrw() -> SpacetimeModel<f64> {
        SpacetimeModel::FlrwTorus {
            dim: 1,
            scale: ScaleFactor::Gaussian,
        }
    }

    fn bump() -> SpacetimeModel<f64> {
        SpacetimeModel::ConformalBump {
            dim: 1,
            amplitude: 0.3,
            waves: [1, 0],
            lengths: [1.0, 1.0],
        }
    }

    fn grid1(n: usize) -> GridSpec<f64> {
        GridSpec::new(&[n], &[1.0]).unwrap()
    }

    fn constant_f(value: f64) -> PrescribedCurvature<f64> {
        PrescribedCurvature::Constant { value }
    }

    fn sine_graph(n: usize, amplitude: f64) -> GraphState<f64> {
        let u = (0..n)
            .map(|k| amplitude * (TAU * k as f64 / n as f64).sin())
            .collect();
        GraphState::new(grid1(n), u, 0.0).unwrap()
    }

    #[test]
    fn monitor_freezes_the_homogeneous_and_sine_rows() {
        let margin = 1e-3;

        let flat = GraphState::constant(grid1(16), 0.0);
        let row = monitor(&minkowski(), &flat, &constant_f(0.0), 0.0, margin).unwrap();
        assert_eq!(row.sup_abs_residual, 0.0);
        assert_eq!(row.max_vtilde, 1.0);
        assert_eq!(row.max_du_norm, 0.0);
        assert_eq!((row.u_min, row.u_max), (0.0, 0.0));

        let above = GraphState::constant(grid1(16), 0.5);
        let row = monitor(&gaussian_flrw(), &above, &constant_f(-0.3), 0.25, margin).unwrap();
        assert_eq!(row.dt, 0.25);
        assert!((row.sup_abs_residual - 0.8).abs() < 1e-12);
        assert!((row.min_signed_residual - 0.8).abs() < 1e-12);
        assert!((row.max_abs_h - 0.5).abs() < 1e-12);
        assert_eq!(row.max_vtilde, 1.0);

        // tilted graph: the tilt peaks at the steepest node, but |H| peaks
        // between crest and inflection where the lapse factor bites
        let row = monitor(&minkowski(), &sine_graph(64, 0.1), &constant_f(0.0), 0.0, margin)
            .unwrap();
        assert!((row.max_du_norm - 0.6273096981091879).abs() < 1e-12);
        assert!((row.max_vtilde - 1.2854194372223492).abs() < 5e-3);
        assert!((row.max_abs_h - 3.9959284879610326).abs() < 1e-2);
        assert!((row.u_max - 0.1).abs() < 1e-12);
    }

    fn row(
        time: f64,
        sup: f64,
        min_signed: f64,
        vtilde: f64,
        kappa: f64,
        u_min: f64,
        u_max: f64,
    ) -> MonitorRecord<f64> {
        MonitorRecord {
            time,
            dt: 1e-3,
            sup_abs_residual: sup,
            min_signed_residual: min_signed,
            max_vtilde: vtilde,
            max_abs_kappa: kappa,
            max_abs_h: kappa,
            u_min,
            u_max,
            max_du_norm: 0.1,
        }
    }

    fn trace_of(records: Vec<MonitorRecord<f64>>, heights: Vec<f64>) -> FlowTrace<f64> {
        let samples = records
            .iter()
            .zip(&heights)
            .enumerate()
            .map(|(k, (record, &height))| TraceSample {
                step: 10 * k,
                time: record.time,
                u: vec![height; 8],
            })
            .collect();
        FlowTrace {
            records,
            samples,
            status: FlowStatus::Converged,
            final_state: GraphState::constant(grid1(8), 0.0),
            initial_barrier: None,
        }
    }

    fn descending_trace() -> FlowTrace<f64> {
        trace_of(
            vec![
                row(0.0, 0.8, 0.8, 1.0, 0.8, 0.5, 0.5),
                row(1.0, 0.3, 0.3, 1.0, 0.3, 0.2, 0.2),
                row(2.0, 1e-9, 1e-9, 1.0, 1e-9, -0.3, -0.3),
            ],
            vec![0.5, 0.2, -0.3],
        )
    }

    fn verdict<'a>(report: &'a AuditReport<f64>, name: &str) -> &'a Verdict<f64> {
        report
            .verdicts
            .iter()
            .find(|v| v.name == name)
            .expect("verdict exists")
    }

    #[test]
    fn audit_accepts_a_descending_trace_and_is_deterministic() {
        let params = AuditParams::default();
        let trace = descending_trace();
        let report = audit(&trace, &params).unwrap();
        assert!(report.all_passed);
        assert!(report.sign_hypothesis);
        assert_eq!(report.verdicts.len(), 7);

        let again = audit(&trace, &params).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn audit_flags_each_engineered_violation() {
        let params = AuditParams::default();

        let mut trace = descending_trace();
        trace.records[1].min_signed_residual = -1e-3;
        let report = audit(&trace, &params).unwrap();
        assert!(!verdict(&report, "sign_preservation").passed);
        assert!(!report.all_passed);
        assert!((verdict(&report, "sign_preservation").worst_value + 1e-3).abs() < 1e-18);

        // a negative start suspends the sign and descent audits
        let mut trace = descending_trace();
        trace.records[0].min_signed_residual = -0.1;
        trace.samples[1].u = vec![0.7; 8];
        let report = audit(&trace, &params).unwrap();
        assert!(!report.sign_hypothesis);
        assert!(verdict(&report, "sign_preservation").passed);
        assert!(verdict(&report, "monotone_descent").passed);
        // the ceiling check still sees the samples' record, not the heights
        assert!(verdict(&report, "confinement").passed);

        let mut trace = descending_trace();
        trace.samples[1].u = vec![0.5 + 1e-6; 8];
        let report = audit(&trace, &params).unwrap();
        assert!(!verdict(&report, "monotone_descent").passed);

        let mut trace = descending_trace();
        trace.records[1].max_vtilde = 2.5;
        let report = audit(&trace, &params).unwrap();
        assert!(!verdict(&report, "vtilde_bound").passed);

        let mut trace = descending_trace();
        trace.records[2].max_abs_kappa = 0.9;
        let report = audit(&trace, &params).unwrap();
        assert!(!verdict(&report, "kappa_no_growth").passed);

        let mut params_with_floor = AuditParams::default();
        params_with_floor.u_floor = Some(-0.2);
        let trace = descending_trace();
        let report = audit(&trace, &params_with_floor).unwrap();
        assert!(!verdict(&report, "confinement").passed);

        let mut trace = descending_trace();
        trace.records[1].u_max = 0.6;
        let report = audit(&trace, &params).unwrap();
        assert!(!verdict(&report, "confinement").passed);

        let mut trace = descending_trace();
        trace.records[2].sup_abs_residual = 1e-3;
        let report = audit(&trace, &params).unwrap();
        assert!(!verdict(&report, "final_residual").passed);

        let mut trace = descending_trace();
        trace.records.truncate(1);
        trace.samples.truncate(1);
        assert!(matches!(
            audit(&trace, &params),
            Err(AnalysisError::InsufficientTrace { records: 1 })
        ));
    }

    #[test]
    fn audit_passes_on_a_real_convergent_run() {
        let mut config = FlowConfig::<f64>::default();
        config.tol_residual = 1e-6;
        config.record_every = 500;
        let initial = GraphState::constant(grid1(16), 0.5);
        let trace = evolve(&gaussian_flrw(), initial, &constant_f(-0.3), &config).unwrap();
        assert_eq!(trace.status, FlowStatus::Converged);

        let mut params = AuditParams::<f64>::default();
        params.tol_residual = 1e-6;
        let report = audit(&trace, &params).unwrap();
        assert!(report.all_passed, "{:?}", report);
        assert!(report.sign_hypothesis);
    }

    // low-frequency wave profile with slopes well inside the light cone,
    // samplable at any resolution
    struct WaveProfile {
        base: f64,
        a: f64,
        b: f64,
        c: f64,
    }

    impl WaveProfile {
        fn random(rng: &mut ChaCha8Rng) -> Self {
            let sign = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            WaveProfile {
                base: rng.gen_range(-0.2..0.2),
                a: rng.gen_range(0.01..0.04) * sign(rng),
                b: rng.gen_range(0.01..0.04) * sign(rng),
                c: rng.gen_range(0.005..0.01) * sign(rng),
            }
        }

        fn graph(&self, n: usize) -> GraphState<f64> {
            let u = (0..n)
                .map(|k| {
                    let x = k as f64 / n as f64;
                    self.base
                        + self.a * (TAU * x).cos()
                        + self.b * (TAU * x).sin()
                        + self.c * (2.0 * TAU * x).cos()
                })
                .collect();
            GraphState::new(grid1(n), u, 0.0).unwrap()
        }
    }

    #[test]
    fn dual_path_gap_vanishes_on_slices_and_refines_at_second_order() {
        let margin = 1e-3;
        for model in [minkowski(), gaussian_flrw(), bump()] {
            let state = GraphState::constant(grid1(16), 0.4);
            let report = dual_path_check(&model, &state, margin).unwrap();
            assert!(
                report.max_discrepancy <= 1e-10,
                "{}: {}",
                model.name(),
                report.max_discrepancy
            );
        }

        let mut rng = ChaCha8Rng::seed_from_u64(2026);
        for model in [minkowski(), gaussian_flrw(), bump()] {
            for _ in 0..20 {
                let profile = WaveProfile::random(&mut rng);
                let gap_coarse = dual_path_check(&model, &profile.graph(32), margin)
                    .unwrap()
                    .max_discrepancy;
                let gap_fine = dual_path_check(&model, &profile.graph(64), margin)
                    .unwrap()
                    .max_discrepancy;
                let ratio = gap_coarse / gap_fine;
                assert!(
                    (3.0..=5.0).contains(&ratio),
                    "{}: ratio {} ({} vs {})",
                    model.name(),
                    ratio,
                    gap_coarse,
                    gap_fine
                );
            }
        }
    }

    #[test]
    fn identity_report_holds_on_random_graphs() {
        let margin = 1e-3;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for model in [minkowski(), gaussian_flrw(), bump()] {
            for _ in 0..5 {
                let state = WaveProfile::random(&mut rng).graph(32);
                let report = identity_report(&model, &state, margin).unwrap();
                assert_eq!(report.checks.len(), 8);
                for check in &report.checks {
                    assert!(
                        check.passed,
                        "{}: {} = {}",
                        model.name(),
                        check.name,
                        check.max_violation
                    );
                }
                assert!(report.all_passed);
            }
        }
    }

    #[test]
    fn refinement_studies_reach_their_verdicts() {
        let study = refinement_study(
            &RefinementScenario::CosineCurvature { amplitude: 0.1 },
            &[32, 64, 128],
        )
        .unwrap();
        assert_eq!(study.verdict, RefinementVerdict::SecondOrder);
        for row in study.rows.iter().skip(1) {
            let order = row.observed_order.unwrap();
            assert!((1.8..=2.2).contains(&order), "order {}", order);
        }

        let study = refinement_study(
            &RefinementScenario::ConstantSlice {
                model: gaussian_flrw(),
                height: 0.7,
            },
            &[16, 32],
        )
        .unwrap();
        assert_eq!(study.verdict, RefinementVerdict::Exact);

        let mut config = FlowConfig::<f64>::default();
        config.tol_residual = 1e-4;
        config.record_every = 2000;
        let study = refinement_study(
            &RefinementScenario::FlowToSlice {
                model: gaussian_flrw(),
                f_value: -0.3,
                initial_height: 0.5,
                config,
            },
            &[16, 32],
        )
        .unwrap();
        assert_eq!(study.verdict, RefinementVerdict::Exact);
        assert!((study.exact_threshold - 1e-3).abs() < 1e-18);

        let bad = refinement_study(
            &RefinementScenario::FlowToSlice {
                model: SpacetimeModel::FlrwTorus {
                    dim: 1,
                    scale: ScaleFactor::Cosh,
                },
                f_value: -0.5,
                initial_height: 0.7,
                config: FlowConfig::default(),
            },
            &[16],
        );
        assert!(matches!(bad, Err(AnalysisError::NoReference { .. })));

        assert!(matches!(
            refinement_study(&RefinementScenario::CosineCurvature { amplitude: 0.1 }, &[]),
            Err(AnalysisError::EmptyStudy)
        ));
    }

    #[test]
    fn slice_scan_tabulates_homogeneous_curvature() {
        let samples = slice_scan(&gaussian_flrw(), -1.0, 1.0, 5).unwrap();
        let expected = [-1.0, -0.5, 0.0, 0.5, 1.0];
        assert_eq!(samples.len(), 5);
        for (sample, &t) in samples.iter().zip(&expected) {
            assert_eq!(sample.x0, t);
            // gaussian scale: slice curvature is n t
            assert!((sample.h_slice - t).abs() < 1e-14);
        }

        // tabulated values agree with the geometry of constant graphs
        let margin = 1e-3;
        for sample in &samples {
            let state = GraphState::constant(grid1(16), sample.x0);
            let fields = GeometryFields::compute(&gaussian_flrw(), &state, margin).unwrap();
            for node in 0..16 {
                assert!((fields.mean_curvature[node] - sample.h_slice).abs() <= 1e-10);
            }
        }

        let flat = slice_scan(&minkowski(), 0.0, 2.0, 3).unwrap();
        assert!(flat.iter().all(|s| s.h_slice == 0.0));

        assert!(matches!(
            slice_scan(&bump(), -1.0, 1.0, 5),
            Err(AnalysisError::Ambient(AmbientError::UnsupportedModel { .. }))
        ));
        assert!(matches!(
            slice_scan(&gaussian_flrw(), -1.0, 1.0, 1),
            Err(AnalysisError::BadScanRange)
        ));
        assert!(matches!(
            slice_scan(&gaussian_flrw(), 1.0, -1.0, 5),
            Err(AnalysisError::BadScanRange)
        ));
    }
}
