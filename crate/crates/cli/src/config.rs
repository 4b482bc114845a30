//! Run configuration: one TOML document per invocation, checked in a single
//! validation pass that reports every problem at once instead of stopping at
//! the first.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use pmcflow::ambient::{ScaleFactor, SpacetimeModel};
use pmcflow::flow::{FlowConfig, Integrator, PrescribedCurvature};
use pmcflow::geometry::GraphState;
use pmcflow::grid::{GridSpec, MAX_DIM};

use crate::error::{io_error, CliError};

type Issues = Vec<(String, String)>;

/// Initial height profile, kept symbolic so verification and refinement can
/// resample it on finer grids.
#[derive(Debug, Clone)]
pub enum InitialProfile {
    Constant {
        height: f64,
    },
    /// u0 = mean + amplitude * prod_k cos(2 pi waves_k x_k / L_k)
    Cosine {
        mean: f64,
        amplitude: f64,
        waves: [u32; MAX_DIM],
    },
    Sampled {
        values: Vec<f64>,
    },
}

impl InitialProfile {
    /// Height field on `grid`. A table only fits the grid it was loaded for,
    /// so resampling one returns None.
    pub fn sample(&self, grid: &GridSpec<f64>) -> Option<Vec<f64>> {
        match self {
            InitialProfile::Constant { height } => Some(vec![*height; grid.node_count()]),
            InitialProfile::Cosine {
                mean,
                amplitude,
                waves,
            } => {
                let tau = std::f64::consts::TAU;
                Some(
                    (0..grid.node_count())
                        .map(|node| {
                            let x = grid.coords(node);
                            let mut wave = *amplitude;
                            for axis in 0..grid.dim() {
                                wave *= (tau * f64::from(waves[axis]) * x[axis]
                                    / grid.length(axis))
                                .cos();
                            }
                            mean + wave
                        })
                        .collect(),
                )
            }
            InitialProfile::Sampled { values } => {
                (values.len() == grid.node_count()).then(|| values.clone())
            }
        }
    }
}

/// Fully validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: SpacetimeModel<f64>,
    pub grid: GridSpec<f64>,
    pub f: PrescribedCurvature<f64>,
    pub profile: InitialProfile,
    pub flow: FlowConfig<f64>,
    pub directory: PathBuf,
    pub snapshot_every: Option<usize>,
}

impl RunConfig {
    pub fn initial_state(&self) -> GraphState<f64> {
        let u = self
            .profile
            .sample(&self.grid)
            .expect("profile was validated against this grid");
        GraphState::new(self.grid, u, 0.0).expect("sample length matches the grid")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    spacetime: Option<RawSpacetime>,
    grid: Option<RawGrid>,
    f: Option<RawCurvature>,
    initial: Option<RawInitial>,
    #[serde(default)]
    flow: RawFlow,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpacetime {
    #[serde(rename = "type")]
    kind: Option<String>,
    dim: Option<usize>,
    scale: Option<String>,
    exponent: Option<f64>,
    rate: Option<f64>,
    amplitude: Option<f64>,
    waves: Option<Vec<u32>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dim: Option<usize>,
    points: Option<Vec<usize>>,
    lengths: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurvature {
    #[serde(rename = "type")]
    kind: Option<String>,
    value: Option<f64>,
    offset: Option<f64>,
    slope: Option<f64>,
    mean: Option<f64>,
    amplitude: Option<f64>,
    waves: Option<Vec<u32>>,
    path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(rename = "type")]
    kind: Option<String>,
    height: Option<f64>,
    mean: Option<f64>,
    amplitude: Option<f64>,
    waves: Option<Vec<u32>>,
    path: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    cfl_safety: Option<f64>,
    tol_residual: Option<f64>,
    max_steps: Option<usize>,
    max_flow_time: Option<f64>,
    spacelike_margin: Option<f64>,
    integrator: Option<String>,
    u_floor: Option<f64>,
    u_ceiling: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    record_every: Option<usize>,
    snapshot_every: Option<usize>,
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|err| io_error(path, "reading", err))?;
    let raw: RawConfig = toml::from_str(&text).map_err(|err| CliError::Config {
        issues: vec![("<document>".into(), err.to_string())],
    })?;
    let config_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let mut issues: Issues = Vec::new();

    let grid = match &raw.grid {
        Some(section) => build_grid(section, &mut issues),
        None => {
            push(&mut issues, "grid", "section is missing");
            None
        }
    };
    // even with a rejected grid the intended dimension is usually clear from
    // the point counts, letting model and domain checks still run
    let dim_hint = grid.map(|grid| grid.dim()).or_else(|| {
        raw.grid
            .as_ref()
            .and_then(|section| section.points.as_ref())
            .map(|points| points.len())
            .filter(|len| (1..=MAX_DIM).contains(len))
    });
    let model = match &raw.spacetime {
        Some(section) => build_model(section, grid.as_ref(), dim_hint, &mut issues),
        None => {
            push(&mut issues, "spacetime", "section is missing");
            None
        }
    };
    let f = match (&raw.f, &grid) {
        (Some(section), Some(grid)) => build_f(section, grid, &config_dir, &mut issues),
        (Some(_), None) => None,
        (None, _) => {
            push(&mut issues, "f", "section is missing");
            None
        }
    };
    let profile = match &raw.initial {
        Some(section) => build_profile(section, grid.as_ref(), &config_dir, &mut issues),
        None => {
            push(&mut issues, "initial", "section is missing");
            None
        }
    };

    if let (Some(model), Some(profile)) = (&model, &profile) {
        check_temporal_domain(model, grid.as_ref(), profile, &mut issues);
    }

    let mut flow = build_flow(&raw.flow, &mut issues);

    let (directory, snapshot_every) = match &raw.output {
        Some(section) => build_output(section, &mut flow, &mut issues),
        None => {
            push(&mut issues, "output", "section is missing");
            (None, None)
        }
    };

    if !issues.is_empty() {
        return Err(CliError::Config { issues });
    }

    // every builder records an issue whenever it returns None, so the
    // unwraps cannot fire on this path
    Ok(RunConfig {
        model: model.unwrap(),
        grid: grid.unwrap(),
        f: f.unwrap(),
        profile: profile.unwrap(),
        flow,
        directory: directory.unwrap(),
        snapshot_every,
    })
}

fn push(issues: &mut Issues, path: &str, message: impl Into<String>) {
    issues.push((path.to_string(), message.into()));
}

fn forbid(issues: &mut Issues, section: &str, kind: &str, extras: &[(&str, bool)]) {
    for (name, present) in extras {
        if *present {
            push(
                issues,
                &format!("{section}.{name}"),
                format!("not a parameter of {kind}"),
            );
        }
    }
}

fn build_grid(raw: &RawGrid, issues: &mut Issues) -> Option<GridSpec<f64>> {
    let before = issues.len();
    let points = match &raw.points {
        Some(points) => points.clone(),
        None => {
            push(issues, "grid.points", "field is required");
            return None;
        }
    };
    let lengths = match &raw.lengths {
        Some(lengths) => lengths.clone(),
        None => {
            push(issues, "grid.lengths", "field is required");
            return None;
        }
    };

    if points.is_empty() || points.len() > MAX_DIM {
        push(
            issues,
            "grid.points",
            format!("need 1 or {MAX_DIM} axes, got {}", points.len()),
        );
    }
    if let Some(dim) = raw.dim {
        if dim != points.len() {
            push(
                issues,
                "grid.dim",
                format!(
                    "declared dimension {dim} does not match the {} point counts",
                    points.len()
                ),
            );
        }
    }
    if lengths.len() != points.len() {
        push(
            issues,
            "grid.lengths",
            format!(
                "{} lengths for {} point counts",
                lengths.len(),
                points.len()
            ),
        );
    }
    for (axis, &count) in points.iter().enumerate() {
        if count < 8 || count % 2 != 0 {
            push(
                issues,
                "grid.points",
                format!("axis {axis} has {count} points; counts must be even and at least 8"),
            );
        }
    }
    for (axis, &length) in lengths.iter().enumerate() {
        if !(length.is_finite() && length > 0.0) {
            push(
                issues,
                "grid.lengths",
                format!("axis {axis} has length {length}; lengths must be finite and positive"),
            );
        }
    }
    if issues.len() > before {
        return None;
    }
    match GridSpec::new(&points, &lengths) {
        Ok(grid) => Some(grid),
        Err(err) => {
            push(issues, "grid", err.to_string());
            None
        }
    }
}

fn build_model(
    raw: &RawSpacetime,
    grid: Option<&GridSpec<f64>>,
    dim_hint: Option<usize>,
    issues: &mut Issues,
) -> Option<SpacetimeModel<f64>> {
    let kind = match &raw.kind {
        Some(kind) => kind.as_str(),
        None => {
            push(issues, "spacetime.type", "field is required");
            return None;
        }
    };
    if let (Some(dim), Some(grid)) = (raw.dim, grid) {
        if dim != grid.dim() {
            push(
                issues,
                "spacetime.dim",
                format!("declared dimension {dim} does not match the grid ({})", grid.dim()),
            );
        }
    }
    let dim = dim_hint.or(raw.dim)?;

    let before = issues.len();
    let model = match kind {
        "minkowski_torus" => {
            forbid(
                issues,
                "spacetime",
                kind,
                &[
                    ("scale", raw.scale.is_some()),
                    ("exponent", raw.exponent.is_some()),
                    ("rate", raw.rate.is_some()),
                    ("amplitude", raw.amplitude.is_some()),
                    ("waves", raw.waves.is_some()),
                ],
            );
            Some(SpacetimeModel::MinkowskiTorus { dim })
        }
        "flrw_torus" => {
            forbid(
                issues,
                "spacetime",
                kind,
                &[
                    ("amplitude", raw.amplitude.is_some()),
                    ("waves", raw.waves.is_some()),
                ],
            );
            let scale = match raw.scale.as_deref() {
                None => {
                    push(issues, "spacetime.scale", "field is required for flrw_torus");
                    None
                }
                Some("gaussian") => {
                    forbid(
                        issues,
                        "spacetime",
                        "the gaussian scale",
                        &[
                            ("exponent", raw.exponent.is_some()),
                            ("rate", raw.rate.is_some()),
                        ],
                    );
                    Some(ScaleFactor::Gaussian)
                }
                Some("cosh") => {
                    forbid(
                        issues,
                        "spacetime",
                        "the cosh scale",
                        &[
                            ("exponent", raw.exponent.is_some()),
                            ("rate", raw.rate.is_some()),
                        ],
                    );
                    Some(ScaleFactor::Cosh)
                }
                Some("power") => {
                    forbid(issues, "spacetime", "the power scale", &[("rate", raw.rate.is_some())]);
                    match raw.exponent {
                        Some(exponent) if exponent.is_finite() && exponent > 0.0 => {
                            Some(ScaleFactor::Power { exponent })
                        }
                        Some(exponent) => {
                            push(
                                issues,
                                "spacetime.exponent",
                                format!("power exponent must be finite and positive, got {exponent}"),
                            );
                            None
                        }
                        None => {
                            push(issues, "spacetime.exponent", "field is required for the power scale");
                            None
                        }
                    }
                }
                Some("exponential") => {
                    forbid(
                        issues,
                        "spacetime",
                        "the exponential scale",
                        &[("exponent", raw.exponent.is_some())],
                    );
                    match raw.rate {
                        Some(rate) if rate.is_finite() => Some(ScaleFactor::Exponential { rate }),
                        Some(rate) => {
                            push(
                                issues,
                                "spacetime.rate",
                                format!("expansion rate must be finite, got {rate}"),
                            );
                            None
                        }
                        None => {
                            push(issues, "spacetime.rate", "field is required for the exponential scale");
                            None
                        }
                    }
                }
                Some(other) => {
                    push(
                        issues,
                        "spacetime.scale",
                        format!("unknown scale `{other}` (gaussian, power, exponential, cosh)"),
                    );
                    None
                }
            };
            scale.map(|scale| SpacetimeModel::FlrwTorus { dim, scale })
        }
        "conformal_bump" => {
            forbid(
                issues,
                "spacetime",
                kind,
                &[
                    ("scale", raw.scale.is_some()),
                    ("exponent", raw.exponent.is_some()),
                    ("rate", raw.rate.is_some()),
                ],
            );
            let amplitude = match raw.amplitude {
                Some(amplitude) => Some(amplitude),
                None => {
                    push(issues, "spacetime.amplitude", "field is required for conformal_bump");
                    None
                }
            };
            let waves = match &raw.waves {
                Some(waves) if waves.len() == dim => Some(pad_waves(waves)),
                Some(waves) => {
                    push(
                        issues,
                        "spacetime.waves",
                        format!("{} wave numbers for dimension {dim}", waves.len()),
                    );
                    None
                }
                None => {
                    push(issues, "spacetime.waves", "field is required for conformal_bump");
                    None
                }
            };
            match (amplitude, waves, grid) {
                (Some(amplitude), Some(waves), Some(grid)) => {
                    let mut lengths = [1.0f64; MAX_DIM];
                    for axis in 0..dim {
                        lengths[axis] = grid.length(axis);
                    }
                    Some(SpacetimeModel::ConformalBump {
                        dim,
                        amplitude,
                        waves,
                        lengths,
                    })
                }
                _ => None,
            }
        }
        other => {
            push(
                issues,
                "spacetime.type",
                format!("unknown model `{other}` (minkowski_torus, flrw_torus, conformal_bump)"),
            );
            None
        }
    };
    let model = model?;
    if let Err(err) = model.validate() {
        push(issues, "spacetime", err.to_string());
        return None;
    }
    if issues.len() > before {
        return None;
    }
    Some(model)
}

fn build_f(
    raw: &RawCurvature,
    grid: &GridSpec<f64>,
    config_dir: &Path,
    issues: &mut Issues,
) -> Option<PrescribedCurvature<f64>> {
    let kind = match &raw.kind {
        Some(kind) => kind.as_str(),
        None => {
            push(issues, "f.type", "field is required");
            return None;
        }
    };
    let before = issues.len();
    let built = match kind {
        "constant" => {
            forbid(
                issues,
                "f",
                kind,
                &[
                    ("offset", raw.offset.is_some()),
                    ("slope", raw.slope.is_some()),
                    ("mean", raw.mean.is_some()),
                    ("amplitude", raw.amplitude.is_some()),
                    ("waves", raw.waves.is_some()),
                    ("path", raw.path.is_some()),
                ],
            );
            require_finite(issues, "f.value", raw.value)
                .map(|value| PrescribedCurvature::Constant { value })
        }
        "affine_time" => {
            forbid(
                issues,
                "f",
                kind,
                &[
                    ("value", raw.value.is_some()),
                    ("mean", raw.mean.is_some()),
                    ("amplitude", raw.amplitude.is_some()),
                    ("waves", raw.waves.is_some()),
                    ("path", raw.path.is_some()),
                ],
            );
            let offset = require_finite(issues, "f.offset", raw.offset);
            let slope = require_finite(issues, "f.slope", raw.slope);
            match (offset, slope) {
                (Some(offset), Some(slope)) => {
                    Some(PrescribedCurvature::AffineTime { offset, slope })
                }
                _ => None,
            }
        }
        "cosine_spatial" => {
            forbid(
                issues,
                "f",
                kind,
                &[
                    ("value", raw.value.is_some()),
                    ("offset", raw.offset.is_some()),
                    ("slope", raw.slope.is_some()),
                    ("path", raw.path.is_some()),
                ],
            );
            let mean = require_finite(issues, "f.mean", raw.mean);
            let amplitude = require_finite(issues, "f.amplitude", raw.amplitude);
            let waves = require_waves(issues, "f.waves", &raw.waves, grid.dim());
            match (mean, amplitude, waves) {
                (Some(mean), Some(amplitude), Some(waves)) => {
                    Some(PrescribedCurvature::CosineSpatial {
                        mean,
                        amplitude,
                        waves,
                    })
                }
                _ => None,
            }
        }
        "sampled_grid" => {
            forbid(
                issues,
                "f",
                kind,
                &[
                    ("value", raw.value.is_some()),
                    ("offset", raw.offset.is_some()),
                    ("slope", raw.slope.is_some()),
                    ("mean", raw.mean.is_some()),
                    ("amplitude", raw.amplitude.is_some()),
                    ("waves", raw.waves.is_some()),
                ],
            );
            load_node_table(issues, "f.path", &raw.path, config_dir, grid)
                .map(|values| PrescribedCurvature::SampledGrid { grid: *grid, values })
        }
        other => {
            push(
                issues,
                "f.type",
                format!(
                    "unknown prescription `{other}` (constant, affine_time, cosine_spatial, sampled_grid)"
                ),
            );
            None
        }
    };
    if issues.len() > before {
        return None;
    }
    built
}

fn build_profile(
    raw: &RawInitial,
    grid: Option<&GridSpec<f64>>,
    config_dir: &Path,
    issues: &mut Issues,
) -> Option<InitialProfile> {
    let kind = match &raw.kind {
        Some(kind) => kind.as_str(),
        None => {
            push(issues, "initial.type", "field is required");
            return None;
        }
    };
    let before = issues.len();
    let built = match kind {
        "constant" => {
            forbid(
                issues,
                "initial",
                kind,
                &[
                    ("mean", raw.mean.is_some()),
                    ("amplitude", raw.amplitude.is_some()),
                    ("waves", raw.waves.is_some()),
                    ("path", raw.path.is_some()),
                ],
            );
            require_finite(issues, "initial.height", raw.height)
                .map(|height| InitialProfile::Constant { height })
        }
        "cosine" => {
            forbid(
                issues,
                "initial",
                kind,
                &[
                    ("height", raw.height.is_some()),
                    ("path", raw.path.is_some()),
                ],
            );
            let mean = require_finite(issues, "initial.mean", raw.mean);
            let amplitude = require_finite(issues, "initial.amplitude", raw.amplitude);
            let waves = match grid {
                Some(grid) => require_waves(issues, "initial.waves", &raw.waves, grid.dim()),
                None => None,
            };
            match (mean, amplitude, waves) {
                (Some(mean), Some(amplitude), Some(waves)) => Some(InitialProfile::Cosine {
                    mean,
                    amplitude,
                    waves,
                }),
                _ => None,
            }
        }
        "sampled" => {
            forbid(
                issues,
                "initial",
                kind,
                &[
                    ("height", raw.height.is_some()),
                    ("mean", raw.mean.is_some()),
                    ("amplitude", raw.amplitude.is_some()),
                    ("waves", raw.waves.is_some()),
                ],
            );
            match grid {
                Some(grid) => load_node_table(issues, "initial.path", &raw.path, config_dir, grid)
                    .map(|values| InitialProfile::Sampled { values }),
                None => None,
            }
        }
        other => {
            push(
                issues,
                "initial.type",
                format!("unknown profile `{other}` (constant, cosine, sampled)"),
            );
            None
        }
    };
    if issues.len() > before {
        return None;
    }
    built
}

/// The power-law scale only exists for positive times; configuration keeps a
/// safety band of 5 percent of the exponent above zero.
fn check_temporal_domain(
    model: &SpacetimeModel<f64>,
    grid: Option<&GridSpec<f64>>,
    profile: &InitialProfile,
    issues: &mut Issues,
) {
    let exponent = match model {
        SpacetimeModel::FlrwTorus {
            scale: ScaleFactor::Power { exponent },
            ..
        } => *exponent,
        _ => return,
    };
    let floor = 0.05 * exponent;
    // a constant profile needs no grid to find its lowest point
    let lowest = match profile {
        InitialProfile::Constant { height } => Some(*height),
        _ => grid
            .and_then(|grid| profile.sample(grid))
            .map(|heights| heights.iter().copied().fold(f64::INFINITY, f64::min)),
    };
    let Some(lowest) = lowest else {
        return;
    };
    if lowest < floor {
        let path = match profile {
            InitialProfile::Constant { .. } => "initial.height",
            _ => "initial",
        };
        push(
            issues,
            path,
            format!(
                "initial height reaches {lowest}, below the temporal domain floor {floor} of the power-law scale (x0 >= 0.05 p)"
            ),
        );
    }
}

fn build_flow(raw: &RawFlow, issues: &mut Issues) -> FlowConfig<f64> {
    let mut config = FlowConfig::default();
    if let Some(cfl) = raw.cfl_safety {
        if cfl > 0.0 && cfl <= 1.0 {
            config.cfl_safety = cfl;
        } else {
            push(
                issues,
                "flow.cfl_safety",
                format!("must lie in (0, 1], got {cfl}"),
            );
        }
    }
    if let Some(tol) = raw.tol_residual {
        if tol.is_finite() && tol > 0.0 {
            config.tol_residual = tol;
        } else {
            push(
                issues,
                "flow.tol_residual",
                format!("must be finite and positive, got {tol}"),
            );
        }
    }
    if let Some(steps) = raw.max_steps {
        config.max_steps = steps;
    }
    if let Some(horizon) = raw.max_flow_time {
        if horizon > 0.0 {
            config.max_flow_time = horizon;
        } else {
            push(
                issues,
                "flow.max_flow_time",
                format!("must be positive, got {horizon}"),
            );
        }
    }
    if let Some(margin) = raw.spacelike_margin {
        if margin > 0.0 && margin < 1.0 {
            config.spacelike_margin = margin;
        } else {
            push(
                issues,
                "flow.spacelike_margin",
                format!("must lie in (0, 1), got {margin}"),
            );
        }
    }
    match raw.integrator.as_deref() {
        None => {}
        Some("euler") => config.integrator = Integrator::Euler,
        Some("rk2") => config.integrator = Integrator::Rk2,
        Some(other) => push(
            issues,
            "flow.integrator",
            format!("unknown integrator `{other}` (euler, rk2)"),
        ),
    }
    if let Some(floor) = raw.u_floor {
        if floor.is_nan() {
            push(issues, "flow.u_floor", "must not be NaN");
        } else {
            config.u_floor = Some(floor);
        }
    }
    if let Some(ceiling) = raw.u_ceiling {
        if ceiling.is_nan() {
            push(issues, "flow.u_ceiling", "must not be NaN");
        } else {
            config.u_ceiling = Some(ceiling);
        }
    }
    if let (Some(floor), Some(ceiling)) = (config.u_floor, config.u_ceiling) {
        if floor >= ceiling {
            push(
                issues,
                "flow.u_floor",
                format!("floor {floor} must sit below ceiling {ceiling}"),
            );
        }
    }
    config
}

fn build_output(
    raw: &RawOutput,
    flow: &mut FlowConfig<f64>,
    issues: &mut Issues,
) -> (Option<PathBuf>, Option<usize>) {
    let directory = match &raw.directory {
        Some(directory) => Some(directory.clone()),
        None => {
            push(issues, "output.directory", "field is required");
            None
        }
    };
    match raw.record_every {
        None => {}
        Some(0) => push(issues, "output.record_every", "must be at least 1"),
        Some(every) => flow.record_every = every,
    }
    let snapshot_every = match raw.snapshot_every {
        None => None,
        Some(0) => {
            push(issues, "output.snapshot_every", "must be at least 1");
            None
        }
        Some(every) => Some(every),
    };
    (directory, snapshot_every)
}

fn require_finite(issues: &mut Issues, path: &str, value: Option<f64>) -> Option<f64> {
    match value {
        Some(value) if value.is_finite() => Some(value),
        Some(value) => {
            push(issues, path, format!("must be finite, got {value}"));
            None
        }
        None => {
            push(issues, path, "field is required");
            None
        }
    }
}

fn require_waves(
    issues: &mut Issues,
    path: &str,
    waves: &Option<Vec<u32>>,
    dim: usize,
) -> Option<[u32; MAX_DIM]> {
    match waves {
        Some(waves) if waves.len() == dim => Some(pad_waves(waves)),
        Some(waves) => {
            push(
                issues,
                path,
                format!("{} wave numbers for dimension {dim}", waves.len()),
            );
            None
        }
        None => {
            push(issues, path, "field is required");
            None
        }
    }
}

fn pad_waves(waves: &[u32]) -> [u32; MAX_DIM] {
    let mut out = [0u32; MAX_DIM];
    out[..waves.len()].copy_from_slice(waves);
    out
}

/// One finite value per line; blank lines and `#` comments are skipped.
fn load_node_table(
    issues: &mut Issues,
    field: &str,
    path: &Option<PathBuf>,
    config_dir: &Path,
    grid: &GridSpec<f64>,
) -> Option<Vec<f64>> {
    let path = match path {
        Some(path) => config_dir.join(path),
        None => {
            push(issues, field, "field is required");
            return None;
        }
    };
    let text = match fs::read_to_string(&path) {
        Ok(text) => text,
        Err(err) => {
            push(issues, field, format!("cannot read {}: {err}", path.display()));
            return None;
        }
    };
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        match body.parse::<f64>() {
            Ok(value) if value.is_finite() => values.push(value),
            _ => {
                push(
                    issues,
                    field,
                    format!(
                        "{} line {}: `{body}` is not a finite number",
                        path.display(),
                        lineno + 1
                    ),
                );
                return None;
            }
        }
    }
    if values.len() != grid.node_count() {
        push(
            issues,
            field,
            format!(
                "{} holds {} values but the grid has {} nodes",
                path.display(),
                values.len(),
                grid.node_count()
            ),
        );
        return None;
    }
    Some(values)
}
