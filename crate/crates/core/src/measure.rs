//! Measures attached to a body: the cone measure h det(D^2 h) dtheta, the
//! gauge measure phi^{-n} dphi, the 1-D conditional radial laws of the
//! homogeneous potentials, and the push-forward / change-of-variables
//! residuals between the two sides of the sphere.

use thiserror::Error;

use crate::body::{self, ConvexBody};
use crate::quad::{self, gamma};
use crate::sphere::{Field, SphereGrid, SphereOperator};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("negative cone density {0:.3e} at node {1}: body not convex there or discretization failed")]
    NegativeDensity(f64, usize),
    #[error("radial moment exponent must be positive (got {0})")]
    DomainError(f64),
    #[error("1-D quadrature produced a non-finite value")]
    QuadratureFailure,
    #[error(transparent)]
    Body(#[from] body::BodyError),
    #[error(transparent)]
    Sphere(#[from] crate::sphere::SphereError),
}

/// Probability weights on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub weights: Vec<f64>,
    /// The mass before normalization.
    pub normalizer: f64,
}

impl DiscreteMeasure {
    pub fn from_density(grid: &SphereGrid, density: &[f64]) -> Result<Self, MeasureError> {
        let mut weights: Vec<f64> = grid
            .weights
            .iter()
            .zip(density)
            .map(|(&w, &d)| w * d)
            .collect();
        if let Some((k, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| w < 0.0 || !w.is_finite())
        {
            return Err(MeasureError::NegativeDensity(w, k));
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(DiscreteMeasure {
            weights,
            normalizer: total,
        })
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(&w, &v)| w * v).sum()
    }

    pub fn variance(&self, values: &[f64]) -> f64 {
        let mean = self.integrate(values);
        self.weights
            .iter()
            .zip(values)
            .map(|(&w, &v)| w * (v - mean) * (v - mean))
            .sum()
    }
}

/// Cone measure of the body: density proportional to h * det(D^2 h) with the
/// determinant taken in the tangent frame.
pub fn cone_measure(body: &ConvexBody, grid: &SphereGrid) -> Result<DiscreteMeasure, MeasureError> {
    let fields = body::support_fields(body, grid);
    let density: Vec<f64> = fields
        .h
        .iter()
        .zip(&fields.frame_d2)
        .map(|(&h, m)| h * m.determinant())
        .collect();
    DiscreteMeasure::from_density(grid, &density)
}

/// Gauge measure: density proportional to phi^{-n}.
pub fn gauge_measure(
    body: &ConvexBody,
    grid: &SphereGrid,
) -> Result<DiscreteMeasure, MeasureError> {
    let n = body.dim() as f64;
    let density: Vec<f64> = grid.nodes.iter().map(|x| body.phi(x).powf(-n)).collect();
    DiscreteMeasure::from_density(grid, &density)
}

/// |int g(T(theta)) dnu*  -  int g dnu| for a smooth test field g.  The
/// composed values use the spectral/Galerkin interpolant of g.
pub fn pushforward_residual(
    body: &ConvexBody,
    grid: &SphereGrid,
    g: &Field,
) -> Result<f64, MeasureError> {
    grid.check_field(g)?;
    let nu_star = cone_measure(body, grid)?;
    let nu = gauge_measure(body, grid)?;
    let interp = SphereOperator::new(grid).interpolant(g);
    let maps = body::sphere_maps(body)?;
    let composed: Vec<f64> = grid
        .nodes
        .iter()
        .map(|theta| interp.eval(&maps.t(theta)))
        .collect();
    Ok((nu_star.integrate(&composed) - nu.integrate(&g.values)).abs())
}

/// Sup-norm residual of the change-of-variables identity
///   e^{-v}/int e^{-v}  =  (e^{-w(S)}/int e^{-w}) phi det(D^2 phi)
///                          / (phi^2 + |grad_S phi|^2)^{n/2},
/// where S is the gauge-side sphere map and v, w are node potentials of the
/// source and target densities.
pub fn change_of_variables_residual(
    body: &ConvexBody,
    grid: &SphereGrid,
    w: &Field,
    v: &Field,
) -> Result<f64, MeasureError> {
    grid.check_field(w)?;
    grid.check_field(v)?;
    let interp_w = SphereOperator::new(grid).interpolant(w);
    let maps = body::sphere_maps(body)?;
    let gauge = body::gauge_fields(body, grid);
    let n = body.dim() as f64;

    let ev: Vec<f64> = v.values.iter().map(|&x| (-x).exp()).collect();
    let ew: Vec<f64> = w.values.iter().map(|&x| (-x).exp()).collect();
    let zv: f64 = grid.weights.iter().zip(&ev).map(|(&a, &b)| a * b).sum();
    let zw: f64 = grid.weights.iter().zip(&ew).map(|(&a, &b)| a * b).sum();

    let mut worst: f64 = 0.0;
    for (k, node) in grid.nodes.iter().enumerate() {
        let lhs = ev[k] / zv;
        let mapped = maps.s(node);
        let w_at = interp_w.eval(&mapped);
        let phi = gauge.phi[k];
        let det = gauge.frame_d2[k].determinant();
        let gs = body::tangential_part(&gauge.grad[k], node);
        let jac = phi * det / (phi * phi + gs.norm_squared()).powf(0.5 * n);
        let rhs = (-w_at).exp() / zw * jac;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// A normalized radial law with density t^{m-1} e^{-t^alpha / alpha} on
/// (0, infinity).
#[derive(Debug, Clone, Copy)]
pub struct RadialLaw {
    pub alpha: f64,
    pub m: f64,
}

impl RadialLaw {
    pub fn new(m: f64, alpha: f64) -> Result<Self, MeasureError> {
        if m <= 0.0 {
            return Err(MeasureError::DomainError(m));
        }
        if alpha <= 1.0 {
            return Err(MeasureError::DomainError(alpha));
        }
        Ok(RadialLaw { alpha, m })
    }

    /// int_0^inf t^{m-1} e^{-t^alpha/alpha} dt = alpha^{m/alpha - 1} Gamma(m/alpha).
    pub fn mass(&self) -> f64 {
        radial_moment_unchecked(self.m, self.alpha)
    }

    /// Quadrature rule against the (unnormalized) density, truncated where
    /// the tail is negligible.
    pub fn rule(&self) -> quad::Rule1d {
        let upper = radial_cutoff(self.alpha);
        let base = quad::graded_rule(upper, 40, 24);
        let mut nodes = Vec::with_capacity(base.len());
        let mut weights = Vec::with_capacity(base.len());
        for (&t, &w) in base.nodes.iter().zip(&base.weights) {
            if t <= 0.0 {
                continue;
            }
            nodes.push(t);
            weights.push(w * t.powf(self.m - 1.0) * (-t.powf(self.alpha) / self.alpha).exp());
        }
        quad::Rule1d { nodes, weights }
    }
}

/// Radius beyond which e^{-t^alpha/alpha} < 1e-20.
pub fn radial_cutoff(alpha: f64) -> f64 {
    (20.0 * std::f64::consts::LN_10 * alpha).powf(1.0 / alpha) + 1.0
}

/// alpha^{m/alpha - 1} Gamma(m/alpha): the closed form of
/// int_0^inf t^{m-1} e^{-t^alpha/alpha} dt.
pub fn radial_moment(m: f64, alpha: f64) -> Result<f64, MeasureError> {
    if m <= 0.0 {
        return Err(MeasureError::DomainError(m));
    }
    Ok(radial_moment_unchecked(m, alpha))
}

fn radial_moment_unchecked(m: f64, alpha: f64) -> f64 {
    alpha.powf(m / alpha - 1.0) * gamma(m / alpha)
}

/// radial_moment(m + alpha) / radial_moment(m); equals m by integration by
/// parts.
pub fn moment_ratio(m: f64, alpha: f64) -> Result<f64, MeasureError> {
    Ok(radial_moment(m + alpha, alpha)? / radial_moment(m, alpha)?)
}

/// A radial test function with its derivative.
pub struct RadialTestFn<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    pub df: &'a dyn Fn(f64) -> f64,
}

/// Margin RHS - LHS of the 1-D weighted spectral inequality
///   Var_{gamma^phi}(f) <= (1 / (alpha phi^alpha)) int f'(r)^2 / r^{alpha-2} dgamma^phi,
/// where gamma^phi(dr) is proportional to r^{n-1} e^{-phi^alpha r^alpha / alpha} dr.
/// Nonnegative margins confirm the inequality for this test function.
pub fn cordero_rotem_margin(
    alpha: f64,
    n: usize,
    phi_value: f64,
    f: &RadialTestFn,
) -> Result<f64, MeasureError> {
    if alpha <= 1.0 || phi_value <= 0.0 {
        return Err(MeasureError::DomainError(alpha.min(phi_value)));
    }
    // substitute t = phi r: gamma^phi becomes the standard law in t
    let law = RadialLaw::new(n as f64, alpha)?;
    let rule = law.rule();
    let mass: f64 = rule.weights.iter().sum();
    let fr = |t: f64| (f.f)(t / phi_value);
    let dfr = |t: f64| (f.df)(t / phi_value);

    let mean = rule.integrate(fr) / mass;
    let var = rule.integrate(|t| {
        let d = fr(t) - mean;
        d * d
    }) / mass;
    let energy = rule.integrate(|t| {
        let r = t / phi_value;
        dfr(t) * dfr(t) * r.powf(2.0 - alpha)
    }) / mass
        / (alpha * phi_value.powf(alpha));
    let margin = energy - var;
    if !margin.is_finite() {
        return Err(MeasureError::QuadratureFailure);
    }
    Ok(margin)
}
