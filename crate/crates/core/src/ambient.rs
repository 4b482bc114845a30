//! Ambient spacetimes: conformally flat Lorentzian products over a flat
//! spatial torus.
//!
//! Every supported metric has the form
//!
//! ```text
//! ds^2 = e^{2 psi(x0, x)} ( -(dx^0)^2 + sigma_ij(x0, x) dx^i dx^j )
//! ```
//!
//! with `sigma` flat on each slice. The registry is closed: Minkowski on the
//! torus, FLRW-style warped products `sigma = a(x0)^2 delta`, and a static
//! conformal cosine bump. All background quantities below are hand derived
//! closed forms; `christoffels_fd` differences the metric components and is
//! the independent cross-check.

use thiserror::Error;

use crate::grid::MAX_DIM;
use crate::scalar::Real;

/// Spacetime index count: one time direction plus up to `MAX_DIM` spatial.
pub const AMBIENT_DIM: usize = MAX_DIM + 1;

pub type SpatialMatrix<S> = [[S; MAX_DIM]; MAX_DIM];
pub type AmbientMatrix<S> = [[S; AMBIENT_DIM]; AMBIENT_DIM];
/// Christoffel symbols indexed `[alpha][beta][gamma]`, symmetric in the last
/// two slots.
pub type AmbientChristoffels<S> = [[[S; AMBIENT_DIM]; AMBIENT_DIM]; AMBIENT_DIM];

#[derive(Debug, Error)]
pub enum AmbientError {
    #[error("{model}: x0 = {x0} is outside the temporal domain")]
    Domain { model: &'static str, x0: f64 },
    #[error("{model}: {operation} is not defined for this model")]
    UnsupportedModel {
        model: &'static str,
        operation: &'static str,
    },
    #[error("conformal bump amplitude {amplitude} exceeds the allowed |A| <= 0.5")]
    BadAmplitude { amplitude: f64 },
    #[error("spatial dimension {dim} is not 1 or 2")]
    BadDimension { dim: usize },
}

/// Scale factor `a(x0)` of the warped product models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleFactor<S> {
    /// a = exp(-x0^2 / 2), contracting from an expansion maximum at x0 = 0.
    Gaussian,
    /// a = x0^p on x0 > 0.
    Power { exponent: S },
    /// a = exp(rate * x0).
    Exponential { rate: S },
    /// a = cosh(x0); the slice curvature crosses every value in (-n, n) once.
    Cosh,
}

impl<S: Real> ScaleFactor<S> {
    /// `(a, a')` at `x0`. The power law is the only member with a restricted
    /// domain; callers check it through `SpacetimeModel::check_domain`.
    fn eval(&self, x0: S) -> (S, S) {
        match *self {
            ScaleFactor::Gaussian => {
                let a = (-x0 * x0 / S::lit(2.0)).exp();
                (a, -x0 * a)
            }
            ScaleFactor::Power { exponent } => {
                let a = x0.powf(exponent);
                (a, exponent * x0.powf(exponent - S::one()))
            }
            ScaleFactor::Exponential { rate } => {
                let a = (rate * x0).exp();
                (a, rate * a)
            }
            ScaleFactor::Cosh => (x0.cosh(), x0.sinh()),
        }
    }

    /// `a'/a`, the logarithmic expansion rate.
    fn hubble(&self, x0: S) -> S {
        match *self {
            ScaleFactor::Gaussian => -x0,
            ScaleFactor::Power { exponent } => exponent / x0,
            ScaleFactor::Exponential { rate } => rate,
            ScaleFactor::Cosh => x0.tanh(),
        }
    }
}

/// One of the supported ambient spacetimes.
#[derive(Debug, Clone, PartialEq)]
pub enum SpacetimeModel<S> {
    MinkowskiTorus {
        dim: usize,
    },
    FlrwTorus {
        dim: usize,
        scale: ScaleFactor<S>,
    },
    /// psi(x) = amplitude * prod_k cos(2 pi waves_k x_k / lengths_k),
    /// sigma = delta. Static, so every slice is totally geodesic.
    ConformalBump {
        dim: usize,
        amplitude: S,
        waves: [u32; MAX_DIM],
        lengths: [S; MAX_DIM],
    },
}

/// Background slice quantities at one ambient point, everything a graph
/// needs to know about the spacetime it sits in.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundData<S> {
    pub psi: S,
    pub psi_dot: S,
    pub psi_grad: [S; MAX_DIM],
    pub exp_psi: S,
    pub sigma: SpatialMatrix<S>,
    pub sigma_dot: SpatialMatrix<S>,
    pub sigma_inv: SpatialMatrix<S>,
    /// Christoffel components with upper index 0, split by lower indices.
    pub gamma0_00: S,
    pub gamma0_0i: [S; MAX_DIM],
    pub gamma0_ij: SpatialMatrix<S>,
    /// Second fundamental form of the coordinate slice through the point.
    pub hbar: SpatialMatrix<S>,
}

fn zero_matrix<S: Real>() -> SpatialMatrix<S> {
    [[S::zero(); MAX_DIM]; MAX_DIM]
}

fn identity_matrix<S: Real>(dim: usize) -> SpatialMatrix<S> {
    let mut m = zero_matrix();
    for k in 0..dim {
        m[k][k] = S::one();
    }
    m
}

impl<S: Real> SpacetimeModel<S> {
    pub fn dim(&self) -> usize {
        match *self {
            SpacetimeModel::MinkowskiTorus { dim } => dim,
            SpacetimeModel::FlrwTorus { dim, .. } => dim,
            SpacetimeModel::ConformalBump { dim, .. } => dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpacetimeModel::MinkowskiTorus { .. } => "minkowski_torus",
            SpacetimeModel::FlrwTorus { .. } => "flrw_torus",
            SpacetimeModel::ConformalBump { .. } => "conformal_bump",
        }
    }

    /// Parameter sanity, checked once when a model enters the system.
    pub fn validate(&self) -> Result<(), AmbientError> {
        let dim = self.dim();
        if dim == 0 || dim > MAX_DIM {
            return Err(AmbientError::BadDimension { dim });
        }
        if let SpacetimeModel::ConformalBump { amplitude, .. } = self {
            if amplitude.abs() > S::lit(0.5) {
                return Err(AmbientError::BadAmplitude {
                    amplitude: amplitude.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Hard temporal domain of the model. The power law scale factor needs
    /// x0 > 0; every other model is entire.
    pub fn check_domain(&self, x0: S) -> Result<(), AmbientError> {
        if let SpacetimeModel::FlrwTorus {
            scale: ScaleFactor::Power { .. },
            ..
        } = self
        {
            if x0 <= S::zero() {
                return Err(AmbientError::Domain {
                    model: self.name(),
                    x0: x0.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Slice data at the ambient point `(x0, x)`.
    pub fn eval_background(&self, x0: S, x: &[S; MAX_DIM]) -> Result<BackgroundData<S>, AmbientError> {
        self.check_domain(x0)?;
        let dim = self.dim();
        let (psi, psi_dot, psi_grad, sigma, sigma_dot, sigma_inv) = match *self {
            SpacetimeModel::MinkowskiTorus { .. } => (
                S::zero(),
                S::zero(),
                [S::zero(); MAX_DIM],
                identity_matrix(dim),
                zero_matrix(),
                identity_matrix(dim),
            ),
            SpacetimeModel::FlrwTorus { scale, .. } => {
                let (a, da) = scale.eval(x0);
                let mut sigma = zero_matrix();
                let mut sigma_dot = zero_matrix();
                let mut sigma_inv = zero_matrix();
                for k in 0..dim {
                    sigma[k][k] = a * a;
                    sigma_dot[k][k] = S::lit(2.0) * a * da;
                    sigma_inv[k][k] = (a * a).recip();
                }
                (S::zero(), S::zero(), [S::zero(); MAX_DIM], sigma, sigma_dot, sigma_inv)
            }
            SpacetimeModel::ConformalBump {
                amplitude,
                waves,
                lengths,
                ..
            } => {
                let mut phases = [S::zero(); MAX_DIM];
                for k in 0..dim {
                    phases[k] = S::lit(2.0) * S::PI() * S::lit(waves[k] as f64) * x[k] / lengths[k];
                }
                let mut psi = amplitude;
                for k in 0..dim {
                    psi = psi * phases[k].cos();
                }
                let mut grad = [S::zero(); MAX_DIM];
                for k in 0..dim {
                    let mut partial = amplitude;
                    for j in 0..dim {
                        partial = partial
                            * if j == k {
                                -(S::lit(2.0) * S::PI() * S::lit(waves[j] as f64) / lengths[j])
                                    * phases[j].sin()
                            } else {
                                phases[j].cos()
                            };
                    }
                    grad[k] = partial;
                }
                (
                    psi,
                    S::zero(),
                    grad,
                    identity_matrix(dim),
                    zero_matrix(),
                    identity_matrix(dim),
                )
            }
        };

        // Upper-zero Christoffels and the slice second fundamental form
        // follow the same closed forms for every registry member.
        let exp_psi = psi.exp();
        let half = S::lit(0.5);
        let mut gamma0_ij = zero_matrix();
        let mut hbar = zero_matrix();
        for i in 0..dim {
            for j in 0..dim {
                gamma0_ij[i][j] = psi_dot * sigma[i][j] + half * sigma_dot[i][j];
                hbar[i][j] = exp_psi * (-half * sigma_dot[i][j] - psi_dot * sigma[i][j]);
            }
        }
        Ok(BackgroundData {
            psi,
            psi_dot,
            psi_grad,
            exp_psi,
            sigma,
            sigma_dot,
            sigma_inv,
            gamma0_00: psi_dot,
            gamma0_0i: psi_grad,
            gamma0_ij,
            hbar,
        })
    }

    /// Ambient metric components at `(x0, x)`, time index first.
    pub fn metric(&self, x0: S, x: &[S; MAX_DIM]) -> Result<AmbientMatrix<S>, AmbientError> {
        let bg = self.eval_background(x0, x)?;
        let conformal = bg.exp_psi * bg.exp_psi;
        let mut g = [[S::zero(); AMBIENT_DIM]; AMBIENT_DIM];
        g[0][0] = -conformal;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                g[i + 1][j + 1] = conformal * bg.sigma[i][j];
            }
        }
        Ok(g)
    }

    /// Full set of ambient Christoffel symbols at `(x0, x)`.
    ///
    /// The spatial metrics in the registry are constant across each slice,
    /// so the flat-sigma Christoffels vanish and only the conformal and
    /// scale-factor terms survive:
    ///
    /// ```text
    /// G^0_00 = psi_dot            G^0_0i = psi_i
    /// G^0_ij = psi_dot sigma_ij + sigma_dot_ij / 2
    /// G^k_00 = sigma^{kl} psi_l
    /// G^k_0i = psi_dot d^k_i + sigma^{kl} sigma_dot_li / 2
    /// G^k_ij = psi_i d^k_j + psi_j d^k_i - sigma^{kl} psi_l sigma_ij
    /// ```
    pub fn christoffels_full(
        &self,
        x0: S,
        x: &[S; MAX_DIM],
    ) -> Result<AmbientChristoffels<S>, AmbientError> {
        let bg = self.eval_background(x0, x)?;
        let dim = self.dim();
        let half = S::lit(0.5);
        let mut gamma = [[[S::zero(); AMBIENT_DIM]; AMBIENT_DIM]; AMBIENT_DIM];

        gamma[0][0][0] = bg.gamma0_00;
        for i in 0..dim {
            gamma[0][0][i + 1] = bg.gamma0_0i[i];
            gamma[0][i + 1][0] = bg.gamma0_0i[i];
            for j in 0..dim {
                gamma[0][i + 1][j + 1] = bg.gamma0_ij[i][j];
            }
        }

        // psi with the index raised by sigma
        let mut psi_up = [S::zero(); MAX_DIM];
        for k in 0..dim {
            for l in 0..dim {
                psi_up[k] += bg.sigma_inv[k][l] * bg.psi_grad[l];
            }
        }
        for k in 0..dim {
            gamma[k + 1][0][0] = psi_up[k];
            for i in 0..dim {
                let mut mixed = if k == i { bg.psi_dot } else { S::zero() };
                for l in 0..dim {
                    mixed += half * bg.sigma_inv[k][l] * bg.sigma_dot[l][i];
                }
                gamma[k + 1][0][i + 1] = mixed;
                gamma[k + 1][i + 1][0] = mixed;
                for j in 0..dim {
                    let mut spatial = -psi_up[k] * bg.sigma[i][j];
                    if k == j {
                        spatial += bg.psi_grad[i];
                    }
                    if k == i {
                        spatial += bg.psi_grad[j];
                    }
                    gamma[k + 1][i + 1][j + 1] = spatial;
                }
            }
        }
        Ok(gamma)
    }

    /// Mean curvature of the coordinate slice `{x0 = const}` with respect to
    /// the past directed normal. Only defined for the spatially homogeneous
    /// models; for the warped products it reduces to `-n a'/a`.
    pub fn slice_mean_curvature(&self, x0: S) -> Result<S, AmbientError> {
        match self {
            SpacetimeModel::MinkowskiTorus { .. } => Ok(S::zero()),
            SpacetimeModel::FlrwTorus { dim, scale } => {
                self.check_domain(x0)?;
                Ok(-S::from_count(*dim) * scale.hubble(x0))
            }
            SpacetimeModel::ConformalBump { .. } => Err(AmbientError::UnsupportedModel {
                model: self.name(),
                operation: "slice mean curvature",
            }),
        }
    }
}

/// Christoffel symbols from centered differences of the metric components,
/// with the exact inverse metric at the point. This route never touches the
/// closed forms in `christoffels_full`, which is what makes it a usable
/// cross-check for them.
pub fn christoffels_fd<S: Real>(
    model: &SpacetimeModel<S>,
    x0: S,
    x: &[S; MAX_DIM],
    step: S,
) -> Result<AmbientChristoffels<S>, AmbientError> {
    let dim = model.dim();
    let coords = dim + 1;
    let metric_at = |y: &[S; AMBIENT_DIM]| -> Result<AmbientMatrix<S>, AmbientError> {
        let mut spatial = [S::zero(); MAX_DIM];
        spatial.copy_from_slice(&y[1..]);
        model.metric(y[0], &spatial)
    };

    let mut point = [S::zero(); AMBIENT_DIM];
    point[0] = x0;
    point[1..].copy_from_slice(x);

    // dg[mu][a][b] = d g_ab / d x^mu
    let mut dg = [[[S::zero(); AMBIENT_DIM]; AMBIENT_DIM]; AMBIENT_DIM];
    for mu in 0..coords {
        let mut fwd = point;
        fwd[mu] += step;
        let mut bwd = point;
        bwd[mu] -= step;
        let g_fwd = metric_at(&fwd)?;
        let g_bwd = metric_at(&bwd)?;
        for a in 0..coords {
            for b in 0..coords {
                dg[mu][a][b] = (g_fwd[a][b] - g_bwd[a][b]) / (step + step);
            }
        }
    }

    // exact inverse: the metric is block diagonal conformal flat
    let bg = model.eval_background(x0, x)?;
    let inv_conformal = (bg.exp_psi * bg.exp_psi).recip();
    let mut g_inv = [[S::zero(); AMBIENT_DIM]; AMBIENT_DIM];
    g_inv[0][0] = -inv_conformal;
    for i in 0..dim {
        for j in 0..dim {
            g_inv[i + 1][j + 1] = inv_conformal * bg.sigma_inv[i][j];
        }
    }

    let half = S::lit(0.5);
    let mut gamma = [[[S::zero(); AMBIENT_DIM]; AMBIENT_DIM]; AMBIENT_DIM];
    for alpha in 0..coords {
        for beta in 0..coords {
            for nu in 0..coords {
                let mut sum = S::zero();
                for delta in 0..coords {
                    sum += g_inv[alpha][delta]
                        * (dg[beta][delta][nu] + dg[nu][delta][beta] - dg[delta][beta][nu]);
                }
                gamma[alpha][beta][nu] = half * sum;
            }
        }
    }
    Ok(gamma)
}
