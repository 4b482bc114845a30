//! Discrete differential geometry of spacelike graph hypersurfaces.
//!
//! A graph `u` over the spatial torus is spacelike exactly when `|Du| < 1`
//! in the slice metric. Everything here is built from the second order
//! stencils in [`crate::grid`]: the gradient function, the induced metric,
//! its Christoffel symbols (differenced from the discrete metric field, not
//! taken from a closed form), the covariant Hessian, and the second
//! fundamental form. The form is computed twice, by the rearranged graph
//! formula and through the Gauss formula of the embedding; the second route
//! is the independent cross-check for the first.

use thiserror::Error;

use crate::ambient::{
    AmbientChristoffels, AmbientError, BackgroundData, SpacetimeModel, SpatialMatrix, AMBIENT_DIM,
};
use crate::grid::{GridSpec, MAX_DIM};
use crate::scalar::Real;

/// Default gap kept between `|Du|^2` and the causality limit 1.
pub const DEFAULT_SPACELIKE_MARGIN: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error(
        "graph leaves the spacelike cone at node {node}: |Du|^2 = {du_norm2} >= 1 - {margin}"
    )]
    SpacelikenessLost {
        node: usize,
        du_norm2: f64,
        margin: f64,
    },
    #[error("field carries {got} values but the grid has {expected} nodes")]
    FieldSize { expected: usize, got: usize },
    #[error("model dimension {model} does not match grid dimension {grid}")]
    DimensionMismatch { model: usize, grid: usize },
    #[error(transparent)]
    Ambient(#[from] AmbientError),
}

/// Height field of the hypersurface `graph u` at one flow time.
#[derive(Debug, Clone)]
pub struct GraphState<S> {
    pub grid: GridSpec<S>,
    pub u: Vec<S>,
    pub time: S,
}

impl<S: Real> GraphState<S> {
    pub fn new(grid: GridSpec<S>, u: Vec<S>, time: S) -> Result<Self, GeometryError> {
        if u.len() != grid.node_count() {
            return Err(GeometryError::FieldSize {
                expected: grid.node_count(),
                got: u.len(),
            });
        }
        Ok(GraphState { grid, u, time })
    }

    /// Coordinate slice `u = height` at flow time zero.
    pub fn constant(grid: GridSpec<S>, height: S) -> Self {
        GraphState {
            grid,
            u: vec![height; grid.node_count()],
            time: S::zero(),
        }
    }
}

/// First order data of the graph plus the ambient background evaluated at
/// `(u(xi), xi)` for every node.
#[derive(Debug, Clone)]
pub struct GradientQuantities<S> {
    /// lower index gradient u_i
    pub du: Vec<[S; MAX_DIM]>,
    /// index raised with the slice metric: u^i = sigma^{ij} u_j
    pub du_up: Vec<[S; MAX_DIM]>,
    /// |Du|^2 = sigma^{ij} u_i u_j
    pub du_norm2: Vec<S>,
    /// v = sqrt(1 - |Du|^2)
    pub v: Vec<S>,
    /// vtilde = 1/v, the gradient function
    pub vtilde: Vec<S>,
    pub background: Vec<BackgroundData<S>>,
}

pub fn gradient_quantities<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    margin: S,
) -> Result<GradientQuantities<S>, GeometryError> {
    let grid = &state.grid;
    let dim = grid.dim();
    if model.dim() != dim {
        return Err(GeometryError::DimensionMismatch {
            model: model.dim(),
            grid: dim,
        });
    }
    let nodes = grid.node_count();
    if state.u.len() != nodes {
        return Err(GeometryError::FieldSize {
            expected: nodes,
            got: state.u.len(),
        });
    }

    let mut du = vec![[S::zero(); MAX_DIM]; nodes];
    for axis in 0..dim {
        let d = grid.partial_first(&state.u, axis);
        for (node, value) in d.into_iter().enumerate() {
            du[node][axis] = value;
        }
    }

    let mut background = Vec::with_capacity(nodes);
    let mut du_up = vec![[S::zero(); MAX_DIM]; nodes];
    let mut du_norm2 = vec![S::zero(); nodes];
    let mut worst_node = 0usize;
    let mut worst_norm2 = S::neg_infinity();
    for node in 0..nodes {
        let x = grid.coords(node);
        let bg = model.eval_background(state.u[node], &x)?;
        let mut norm2 = S::zero();
        for i in 0..dim {
            let mut up = S::zero();
            for j in 0..dim {
                up += bg.sigma_inv[i][j] * du[node][j];
            }
            du_up[node][i] = up;
            norm2 += up * du[node][i];
        }
        du_norm2[node] = norm2;
        if norm2 > worst_norm2 {
            worst_norm2 = norm2;
            worst_node = node;
        }
        background.push(bg);
    }
    if worst_norm2 >= S::one() - margin {
        return Err(GeometryError::SpacelikenessLost {
            node: worst_node,
            du_norm2: worst_norm2.as_f64(),
            margin: margin.as_f64(),
        });
    }

    let v: Vec<S> = du_norm2.iter().map(|&n2| (S::one() - n2).sqrt()).collect();
    let vtilde: Vec<S> = v.iter().map(|&value| value.recip()).collect();
    Ok(GradientQuantities {
        du,
        du_up,
        du_norm2,
        v,
        vtilde,
        background,
    })
}

/// Induced metric and its inverse at every node.
#[derive(Debug, Clone)]
pub struct MetricFields<S> {
    pub g: Vec<SpatialMatrix<S>>,
    pub g_inv: Vec<SpatialMatrix<S>>,
}

/// g_ij = e^{2 psi} (sigma_ij - u_i u_j),
/// g^ij = e^{-2 psi} (sigma^{ij} + u^i u^j / v^2).
pub fn induced_metric<S: Real>(
    state: &GraphState<S>,
    grad: &GradientQuantities<S>,
) -> MetricFields<S> {
    let dim = state.grid.dim();
    let nodes = grad.v.len();
    let mut g = vec![[[S::zero(); MAX_DIM]; MAX_DIM]; nodes];
    let mut g_inv = vec![[[S::zero(); MAX_DIM]; MAX_DIM]; nodes];
    for node in 0..nodes {
        let bg = &grad.background[node];
        let conformal = bg.exp_psi * bg.exp_psi;
        let inv_conformal = conformal.recip();
        let v2 = grad.v[node] * grad.v[node];
        for i in 0..dim {
            // mirrored so both triangles are bitwise identical
            for j in i..dim {
                let lower = conformal * (bg.sigma[i][j] - grad.du[node][i] * grad.du[node][j]);
                let upper = inv_conformal
                    * (bg.sigma_inv[i][j] + grad.du_up[node][i] * grad.du_up[node][j] / v2);
                g[node][i][j] = lower;
                g[node][j][i] = lower;
                g_inv[node][i][j] = upper;
                g_inv[node][j][i] = upper;
            }
        }
    }
    MetricFields { g, g_inv }
}

/// Christoffel symbols per node, indexed `[k][i][j]`, symmetric in `(i, j)`.
pub type ChristoffelField<S> = Vec<[[[S; MAX_DIM]; MAX_DIM]; MAX_DIM]>;

/// Christoffels of the discrete induced metric. Each metric component is
/// differenced as a grid field, so the covariant Hessian sees exactly the
/// metric the solver carries rather than an analytic stand-in.
pub fn induced_christoffels<S: Real>(
    grid: &GridSpec<S>,
    metric: &MetricFields<S>,
) -> ChristoffelField<S> {
    let dim = grid.dim();
    let nodes = grid.node_count();

    // dg[node][k][i][j] = partial_k g_ij
    let mut dg = vec![[[[S::zero(); MAX_DIM]; MAX_DIM]; MAX_DIM]; nodes];
    for i in 0..dim {
        for j in i..dim {
            let component: Vec<S> = metric.g.iter().map(|m| m[i][j]).collect();
            for k in 0..dim {
                let d = grid.partial_first(&component, k);
                for (node, value) in d.into_iter().enumerate() {
                    dg[node][k][i][j] = value;
                    dg[node][k][j][i] = value;
                }
            }
        }
    }

    let half = S::lit(0.5);
    let mut gamma = vec![[[[S::zero(); MAX_DIM]; MAX_DIM]; MAX_DIM]; nodes];
    for node in 0..nodes {
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    let mut sum = S::zero();
                    for l in 0..dim {
                        sum += metric.g_inv[node][k][l]
                            * (dg[node][i][l][j] + dg[node][j][l][i] - dg[node][l][i][j]);
                    }
                    gamma[node][k][i][j] = half * sum;
                }
            }
        }
    }
    gamma
}

/// Past directed unit normal `nu = -v^{-1} e^{-psi} (1, u^i)`.
pub fn normal<S: Real>(
    state: &GraphState<S>,
    grad: &GradientQuantities<S>,
) -> Vec<[S; AMBIENT_DIM]> {
    let dim = state.grid.dim();
    (0..grad.v.len())
        .map(|node| {
            let scale = -grad.vtilde[node] * grad.background[node].exp_psi.recip();
            let mut nu = [S::zero(); AMBIENT_DIM];
            nu[0] = scale;
            for i in 0..dim {
                nu[i + 1] = scale * grad.du_up[node][i];
            }
            nu
        })
        .collect()
}

/// Curvature data of the graph: covariant Hessian, second fundamental form,
/// mean and principal curvatures, squared norm of the shape operator.
#[derive(Debug, Clone)]
pub struct CurvatureFields<S> {
    pub hess: Vec<SpatialMatrix<S>>,
    pub h: Vec<SpatialMatrix<S>>,
    pub mean: Vec<S>,
    pub kappa: Vec<[S; MAX_DIM]>,
    pub a_norm2: Vec<S>,
}

fn second_differences<S: Real>(grid: &GridSpec<S>, field: &[S]) -> Vec<SpatialMatrix<S>> {
    let dim = grid.dim();
    let nodes = grid.node_count();
    let mut d2 = vec![[[S::zero(); MAX_DIM]; MAX_DIM]; nodes];
    for i in 0..dim {
        for j in i..dim {
            let d = grid.partial_second(field, i, j);
            for (node, value) in d.into_iter().enumerate() {
                d2[node][i][j] = value;
                d2[node][j][i] = value;
            }
        }
    }
    d2
}

/// Second fundamental form by the graph formula:
/// u_ij = d^2 u - Gamma(g)^k_ij u_k, then
/// h_ij = e^psi v (-u_ij - G^0_00 u_i u_j - G^0_0j u_i - G^0_0i u_j - G^0_ij).
pub fn second_fundamental<S: Real>(
    state: &GraphState<S>,
    grad: &GradientQuantities<S>,
    metric: &MetricFields<S>,
    gamma: &ChristoffelField<S>,
) -> CurvatureFields<S> {
    let grid = &state.grid;
    let dim = grid.dim();
    let nodes = grid.node_count();
    let d2u = second_differences(grid, &state.u);

    let two = S::lit(2.0);
    let mut hess = vec![[[S::zero(); MAX_DIM]; MAX_DIM]; nodes];
    let mut h = vec![[[S::zero(); MAX_DIM]; MAX_DIM]; nodes];
    let mut mean = vec![S::zero(); nodes];
    let mut kappa = vec![[S::zero(); MAX_DIM]; nodes];
    let mut a_norm2 = vec![S::zero(); nodes];
    for node in 0..nodes {
        let bg = &grad.background[node];
        let du = &grad.du[node];
        let factor = bg.exp_psi * grad.v[node];
        for i in 0..dim {
            for j in i..dim {
                let mut uij = d2u[node][i][j];
                for k in 0..dim {
                    uij -= gamma[node][k][i][j] * du[k];
                }
                hess[node][i][j] = uij;
                hess[node][j][i] = uij;
                let connection = bg.gamma0_00 * du[i] * du[j]
                    + bg.gamma0_0i[j] * du[i]
                    + bg.gamma0_0i[i] * du[j]
                    + bg.gamma0_ij[i][j];
                let hij = factor * (-uij - connection);
                h[node][i][j] = hij;
                h[node][j][i] = hij;
            }
        }

        // the shape operator g^{-1} h carries all scalar invariants
        let mut shape = [[S::zero(); MAX_DIM]; MAX_DIM];
        for i in 0..dim {
            for j in 0..dim {
                let mut sum = S::zero();
                for k in 0..dim {
                    sum += metric.g_inv[node][i][k] * h[node][k][j];
                }
                shape[i][j] = sum;
            }
        }
        if dim == 1 {
            mean[node] = shape[0][0];
            kappa[node][0] = shape[0][0];
            a_norm2[node] = shape[0][0] * shape[0][0];
        } else {
            let trace = shape[0][0] + shape[1][1];
            let det = shape[0][0] * shape[1][1] - shape[0][1] * shape[1][0];
            // real spectrum: g^{-1} h is similar to a symmetric matrix, so
            // the discriminant only dips below zero by rounding
            let disc = (trace * trace - S::lit(4.0) * det).max(S::zero());
            let root = disc.sqrt();
            mean[node] = trace;
            kappa[node][0] = (trace - root) / two;
            kappa[node][1] = (trace + root) / two;
            a_norm2[node] = shape[0][0] * shape[0][0]
                + shape[1][1] * shape[1][1]
                + two * (shape[0][1] * shape[1][0]);
        }
    }
    CurvatureFields {
        hess,
        h,
        mean,
        kappa,
        a_norm2,
    }
}

/// Every derived field of one graph at one flow time.
#[derive(Debug, Clone)]
pub struct GeometryFields<S> {
    pub du: Vec<[S; MAX_DIM]>,
    pub du_up: Vec<[S; MAX_DIM]>,
    pub du_norm2: Vec<S>,
    pub v: Vec<S>,
    pub vtilde: Vec<S>,
    pub g: Vec<SpatialMatrix<S>>,
    pub g_inv: Vec<SpatialMatrix<S>>,
    pub hess: Vec<SpatialMatrix<S>>,
    pub h: Vec<SpatialMatrix<S>>,
    pub mean_curvature: Vec<S>,
    pub kappa: Vec<[S; MAX_DIM]>,
    pub a_norm2: Vec<S>,
    pub nu: Vec<[S; AMBIENT_DIM]>,
    pub background: Vec<BackgroundData<S>>,
}

impl<S: Real> GeometryFields<S> {
    /// Full pipeline: gradient data, induced metric, differenced
    /// Christoffels, covariant Hessian, curvatures, normal.
    pub fn compute(
        model: &SpacetimeModel<S>,
        state: &GraphState<S>,
        margin: S,
    ) -> Result<Self, GeometryError> {
        let grad = gradient_quantities(model, state, margin)?;
        let metric = induced_metric(state, &grad);
        let gamma = induced_christoffels(&state.grid, &metric);
        let nu = normal(state, &grad);
        let curvature = second_fundamental(state, &grad, &metric, &gamma);
        Ok(GeometryFields {
            du: grad.du,
            du_up: grad.du_up,
            du_norm2: grad.du_norm2,
            v: grad.v,
            vtilde: grad.vtilde,
            g: metric.g,
            g_inv: metric.g_inv,
            hess: curvature.hess,
            h: curvature.h,
            mean_curvature: curvature.mean,
            kappa: curvature.kappa,
            a_norm2: curvature.a_norm2,
            nu,
            background: grad.background,
        })
    }
}

/// Second fundamental form through the Gauss formula of the embedding
/// `x(xi) = (u(xi), xi)`: builds x^alpha_ij = d^2 x - Gamma(g)^k_ij x_k
/// + Gammabar^alpha_bc x^b_i x^c_j and contracts with the normal,
/// h_ij = -gbar(x_ij, nu). The ambient connection enters through a full
/// tensor contraction instead of the rearranged scalar equation, which is
/// what makes this an independent route.
pub fn embedding_oracle<S: Real>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    margin: S,
) -> Result<Vec<SpatialMatrix<S>>, GeometryError> {
    embedding_oracle_with(model, state, margin, |x0, x| model.christoffels_full(x0, x))
}

/// Oracle with a caller supplied ambient Christoffel source, so tests can
/// swap in the finite difference route or a deliberately corrupted one.
pub fn embedding_oracle_with<S, F>(
    model: &SpacetimeModel<S>,
    state: &GraphState<S>,
    margin: S,
    christoffels: F,
) -> Result<Vec<SpatialMatrix<S>>, GeometryError>
where
    S: Real,
    F: Fn(S, &[S; MAX_DIM]) -> Result<AmbientChristoffels<S>, AmbientError>,
{
    let grid = &state.grid;
    let dim = grid.dim();
    let grad = gradient_quantities(model, state, margin)?;
    let metric = induced_metric(state, &grad);
    let gamma_g = induced_christoffels(grid, &metric);
    let nu = normal(state, &grad);
    let d2u = second_differences(grid, &state.u);

    let nodes = grid.node_count();
    let mut result = vec![[[S::zero(); MAX_DIM]; MAX_DIM]; nodes];
    for node in 0..nodes {
        let x = grid.coords(node);
        let gamma_bar = christoffels(state.u[node], &x)?;
        let bg = &grad.background[node];
        let conformal = bg.exp_psi * bg.exp_psi;

        // tangent[i][alpha]: x^alpha_i of the embedding
        let mut tangent = [[S::zero(); AMBIENT_DIM]; MAX_DIM];
        for i in 0..dim {
            tangent[i][0] = grad.du[node][i];
            tangent[i][i + 1] = S::one();
        }

        for i in 0..dim {
            for j in 0..dim {
                let mut xij = [S::zero(); AMBIENT_DIM];
                // spatial embedding components are the coordinates
                // themselves, so their raw second derivatives vanish
                xij[0] = d2u[node][i][j];
                for k in 0..dim {
                    xij[0] -= gamma_g[node][k][i][j] * grad.du[node][k];
                    xij[k + 1] = -gamma_g[node][k][i][j];
                }
                for (alpha, slot) in xij.iter_mut().enumerate().take(dim + 1) {
                    let mut curved = S::zero();
                    for b in 0..=dim {
                        for c in 0..=dim {
                            curved += gamma_bar[alpha][b][c] * tangent[i][b] * tangent[j][c];
                        }
                    }
                    *slot += curved;
                }

                let mut inner = -conformal * xij[0] * nu[node][0];
                for k in 0..dim {
                    for l in 0..dim {
                        inner += conformal * bg.sigma[k][l] * xij[k + 1] * nu[node][l + 1];
                    }
                }
                result[node][i][j] = -inner;
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{christoffels_fd, ScaleFactor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    const MARGIN: f64 = DEFAULT_SPACELIKE_MARGIN;

    fn minkowski(dim: usize) -> SpacetimeModel<f64> {
        SpacetimeModel::MinkowskiTorus { dim }
    }

    fn gaussian_flrw() -> SpacetimeModel<f64> {
        SpacetimeModel::FlrwTorus {
            dim: 1,
            scale: ScaleFactor::Gaussian,
        }
    }

    fn bump_1d(amplitude: f64) -> SpacetimeModel<f64> {
        SpacetimeModel::ConformalBump {
            dim: 1,
            amplitude,
            waves: [1, 0],
            lengths: [1.0, 1.0],
        }
    }

    fn sine_graph(n: usize, amplitude: f64) -> GraphState<f64> {
        let grid = GridSpec::new(&[n], &[1.0]).unwrap();
        let u = (0..n)
            .map(|k| amplitude * (TAU * k as f64 / n as f64).sin())
            .collect();
        GraphState::new(grid, u, 0.0).unwrap()
    }

    #[test]
    fn constant_graphs_reproduce_the_slice_data() {
        let models: Vec<(SpacetimeModel<f64>, Vec<f64>)> = vec![
            (minkowski(1), vec![-1.3, 0.0, 0.7]),
            (minkowski(2), vec![0.5]),
            (gaussian_flrw(), vec![-1.0, 0.7, 2.0]),
            (
                SpacetimeModel::FlrwTorus {
                    dim: 2,
                    scale: ScaleFactor::Cosh,
                },
                vec![-0.4, 1.1],
            ),
            (
                SpacetimeModel::FlrwTorus {
                    dim: 1,
                    scale: ScaleFactor::Power { exponent: 0.5 },
                },
                vec![0.3, 2.0],
            ),
            (
                SpacetimeModel::FlrwTorus {
                    dim: 1,
                    scale: ScaleFactor::Exponential { rate: 0.7 },
                },
                vec![-0.5, 0.9],
            ),
        ];
        for (model, heights) in models {
            let dim = model.dim();
            let grid = if dim == 1 {
                GridSpec::new(&[16], &[1.0]).unwrap()
            } else {
                GridSpec::new(&[8, 8], &[1.0, 1.0]).unwrap()
            };
            for &height in &heights {
                let state = GraphState::constant(grid, height);
                let fields = GeometryFields::compute(&model, &state, MARGIN).unwrap();
                let slice_h = model.slice_mean_curvature(height).unwrap();
                for node in 0..grid.node_count() {
                    assert_eq!(fields.v[node], 1.0);
                    assert_eq!(fields.du[node][0], 0.0);
                    for i in 0..dim {
                        for j in 0..dim {
                            let gap =
                                (fields.h[node][i][j] - fields.background[node].hbar[i][j]).abs();
                            assert!(gap < 1e-13, "{} h vs hbar gap {gap}", model.name());
                        }
                    }
                    let gap = (fields.mean_curvature[node] - slice_h).abs();
                    assert!(
                        gap < 1e-10,
                        "{} at height {height}: H gap {gap}",
                        model.name()
                    );
                }
            }
        }
        // the bump is static: every constant graph is totally geodesic
        let grid = GridSpec::new(&[16], &[1.0]).unwrap();
        let state = GraphState::constant(grid, 0.3);
        let fields = GeometryFields::compute(&bump_1d(0.1), &state, MARGIN).unwrap();
        for node in 0..grid.node_count() {
            assert!(fields.h[node][0][0].abs() < 1e-13);
            assert!(fields.mean_curvature[node].abs() < 1e-13);
        }
    }

    #[test]
    fn constant_gaussian_graph_frozen_values() {
        // a = exp(-x0^2/2) at x0 = 0.7: g_11 = exp(-0.49), h_11 = 0.7 exp(-0.49),
        // H = 0.7, normal = (-1, 0).
        let grid = GridSpec::new(&[64], &[1.0]).unwrap();
        let state = GraphState::constant(grid, 0.7);
        let fields = GeometryFields::compute(&gaussian_flrw(), &state, MARGIN).unwrap();
        for node in 0..grid.node_count() {
            assert!((fields.g[node][0][0] - 0.6126263941844161).abs() < 1e-15);
            assert!((fields.h[node][0][0] - 0.4288384759290912).abs() < 1e-15);
            assert!((fields.mean_curvature[node] - 0.7).abs() < 1e-12);
            assert_eq!(fields.vtilde[node], 1.0);
            assert_eq!(fields.nu[node][0], -1.0);
            assert_eq!(fields.nu[node][1], 0.0);
        }
    }

    #[test]
    fn sine_graph_matches_the_analytic_reduction() {
        // u = 0.1 sin(2 pi x) in the flat model; at x = 0 the slope is
        // extremal, at the crest x = 1/4 it vanishes and H = -u''.
        let n = 64;
        let state = sine_graph(n, 0.1);
        let model = minkowski(1);
        let fields = GeometryFields::compute(&model, &state, MARGIN).unwrap();
        let h = 1.0 / n as f64;
        let tol = 20.0 * h * h;
        assert!((fields.du_norm2[0] - 0.3947841760435743).abs() < tol);
        assert!((fields.v[0] - 0.7779561838281290).abs() < tol);
        assert!((fields.vtilde[0] - 1.2854194372223492).abs() < tol);
        assert!((fields.g[0][0][0] - 0.6052158239564257).abs() < tol);
        assert!((fields.g_inv[0][0][0] - 1.6523031295890208).abs() < tol);
        assert!((fields.nu[0][0] - (-1.2854194372223492)).abs() < tol);
        assert!((fields.nu[0][1] - (-0.8076528521518517)).abs() < tol);

        let crest = n / 4;
        assert!((fields.mean_curvature[crest] - 3.947841760435743).abs() < tol);
        // with zero slope at the crest the discrete H collapses to minus the
        // bare second difference, the frozen stencil number
        assert!((fields.mean_curvature[crest] - 3.944671910136311).abs() < 1e-9);

        // Gamma(g)^1_11 ~ -u'u''/(1-u'^2) vanishes at the crest
        let grad = gradient_quantities(&model, &state, MARGIN).unwrap();
        let metric = induced_metric(&state, &grad);
        let gamma = induced_christoffels(&state.grid, &metric);
        assert!(gamma[crest][0][0][0].abs() < 1e-12);
    }

    #[test]
    fn curvature_error_shrinks_at_second_order() {
        // max |H_num - H_closed| over the grid, refined 32 -> 64 -> 128
        let mut errors = Vec::new();
        for n in [32usize, 64, 128] {
            let state = sine_graph(n, 0.1);
            let fields = GeometryFields::compute(&minkowski(1), &state, MARGIN).unwrap();
            let max_err = (0..n)
                .map(|k| {
                    let x = k as f64 / n as f64;
                    let slope = 0.1 * TAU * (TAU * x).cos();
                    let curv = -0.1 * TAU * TAU * (TAU * x).sin();
                    let exact = -curv / (1.0 - slope * slope).powf(1.5);
                    (fields.mean_curvature[k] - exact).abs()
                })
                .fold(0.0, f64::max);
            errors.push(max_err);
        }
        for pair in errors.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn embedding_oracle_agrees_with_the_graph_formula() {
        // same graph, three ambient models; the inter-route gap is O(h^2)
        for model in [minkowski(1), gaussian_flrw(), bump_1d(0.1)] {
            let mut gaps = Vec::new();
            for n in [64usize, 128] {
                let state = sine_graph(n, 0.1);
                let fields = GeometryFields::compute(&model, &state, MARGIN).unwrap();
                let oracle = embedding_oracle(&model, &state, MARGIN).unwrap();
                let gap = (0..n)
                    .map(|node| (fields.h[node][0][0] - oracle[node][0][0]).abs())
                    .fold(0.0, f64::max);
                gaps.push(gap);
            }
            let ratio = gaps[0] / gaps[1];
            assert!(
                (3.0..5.0).contains(&ratio),
                "{}: gaps {gaps:?}",
                model.name()
            );
        }
    }

    #[test]
    fn oracle_detects_a_corrupted_ambient_connection() {
        let model = gaussian_flrw();
        let grid = GridSpec::new(&[32], &[1.0]).unwrap();
        let state = GraphState::constant(grid, 0.7);
        let fields = GeometryFields::compute(&model, &state, MARGIN).unwrap();

        let clean = embedding_oracle(&model, &state, MARGIN).unwrap();
        for node in 0..grid.node_count() {
            assert!((clean[node][0][0] - fields.h[node][0][0]).abs() < 1e-12);
        }

        // the finite difference connection keeps the agreement
        let fd = embedding_oracle_with(&model, &state, MARGIN, |x0, x| {
            christoffels_fd(&model, x0, x, 1e-5)
        })
        .unwrap();
        for node in 0..grid.node_count() {
            assert!((fd[node][0][0] - fields.h[node][0][0]).abs() < 1e-7);
        }

        // a 1 percent error in Gammabar^0_11 must be visible
        let corrupted = embedding_oracle_with(&model, &state, MARGIN, |x0, x| {
            let mut gamma = model.christoffels_full(x0, x)?;
            gamma[0][1][1] = gamma[0][1][1] * 1.01;
            Ok(gamma)
        })
        .unwrap();
        let gap = (corrupted[0][0][0] - fields.h[0][0][0]).abs();
        assert!(gap > 1e-4, "corruption went unnoticed, gap {gap}");
    }

    #[test]
    fn steep_graphs_lose_spacelikeness() {
        // max slope 1.2 > 1: the guard must trip and report the worst node
        let state = sine_graph(64, 1.2 / TAU);
        match GeometryFields::compute(&minkowski(1), &state, MARGIN) {
            Err(GeometryError::SpacelikenessLost {
                node,
                du_norm2,
                margin,
            }) => {
                assert!(node == 0 || node == 32);
                assert!(du_norm2 > 0.999);
                assert_eq!(margin, MARGIN);
            }
            other => panic!("expected SpacelikenessLost, got {other:?}"),
        }
    }

    #[test]
    fn dimension_and_length_guards() {
        let grid = GridSpec::<f64>::new(&[16], &[1.0]).unwrap();
        assert!(matches!(
            GraphState::new(grid, vec![0.0; 15], 0.0),
            Err(GeometryError::FieldSize {
                expected: 16,
                got: 15
            })
        ));
        let state = GraphState::constant(grid, 0.0);
        assert!(matches!(
            GeometryFields::compute(&minkowski(2), &state, MARGIN),
            Err(GeometryError::DimensionMismatch { model: 2, grid: 1 })
        ));
    }

    #[test]
    fn algebraic_identities_hold_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let grid = GridSpec::new(&[16, 16], &[1.0, 1.0]).unwrap();
        let models: Vec<SpacetimeModel<f64>> = vec![
            minkowski(2),
            SpacetimeModel::FlrwTorus {
                dim: 2,
                scale: ScaleFactor::Cosh,
            },
            SpacetimeModel::ConformalBump {
                dim: 2,
                amplitude: 0.2,
                waves: [1, 1],
                lengths: [1.0, 1.0],
            },
        ];
        for model in &models {
            for _ in 0..5 {
                let base = rng.gen_range(-0.3..0.3);
                let amp_x = rng.gen_range(-0.05..0.05);
                let amp_y = rng.gen_range(-0.05..0.05);
                let amp_xy = rng.gen_range(-0.03..0.03);
                let u: Vec<f64> = (0..grid.node_count())
                    .map(|node| {
                        let x = grid.coords(node);
                        base + amp_x * (TAU * x[0]).cos()
                            + amp_y * (TAU * x[1]).sin()
                            + amp_xy * (TAU * x[0]).cos() * (TAU * x[1]).cos()
                    })
                    .collect();
                let state = GraphState::new(grid, u, 0.0).unwrap();
                let fields = GeometryFields::compute(model, &state, MARGIN).unwrap();
                for node in 0..grid.node_count() {
                    let v2 = fields.v[node] * fields.v[node];
                    assert!((v2 + fields.du_norm2[node] - 1.0).abs() < 1e-14);
                    assert!((fields.v[node] * fields.vtilde[node] - 1.0).abs() < 1e-14);

                    for i in 0..2 {
                        for j in 0..2 {
                            let mut prod = 0.0;
                            for k in 0..2 {
                                prod += fields.g_inv[node][i][k] * fields.g[node][k][j];
                            }
                            let expected = if i == j { 1.0 } else { 0.0 };
                            assert!((prod - expected).abs() < 1e-12);
                        }
                    }

                    assert_eq!(fields.h[node][0][1], fields.h[node][1][0]);
                    assert_eq!(fields.hess[node][0][1], fields.hess[node][1][0]);

                    let kappa_sum = fields.kappa[node][0] + fields.kappa[node][1];
                    assert!((fields.mean_curvature[node] - kappa_sum).abs() < 1e-12);
                    let kappa_sq = fields.kappa[node][0] * fields.kappa[node][0]
                        + fields.kappa[node][1] * fields.kappa[node][1];
                    assert!((fields.a_norm2[node] - kappa_sq).abs() < 1e-12);

                    // ambient norm and tangency of the normal
                    let bg = &fields.background[node];
                    let conformal = bg.exp_psi * bg.exp_psi;
                    let nu = &fields.nu[node];
                    let mut norm = -conformal * nu[0] * nu[0];
                    for k in 0..2 {
                        for l in 0..2 {
                            norm += conformal * bg.sigma[k][l] * nu[k + 1] * nu[l + 1];
                        }
                    }
                    assert!((norm + 1.0).abs() < 1e-12, "{}: <nu,nu> = {norm}", model.name());
                    for i in 0..2 {
                        let mut tangency = -conformal * nu[0] * fields.du[node][i];
                        for k in 0..2 {
                            tangency += conformal * bg.sigma[k][i] * nu[k + 1];
                        }
                        assert!(tangency.abs() < 1e-10);
                    }
                }
            }
        }
    }
}
