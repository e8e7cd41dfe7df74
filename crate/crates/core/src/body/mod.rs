//! Symmetric convex bodies and their pointwise geometric fields: gauge phi,
//! support function h, Euclidean gradients and Hessians of both, the
//! homogeneous potentials (1/alpha) phi^alpha and (1/beta) h^beta, and the
//! reciprocal sphere maps built from the normalized gradients.

pub mod gauges;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sphere::SphereGrid;
use gauges::{
    BallGauge, CustomGauge, GaugeClosure, GaugeFn, GradClosure, HessClosure, LqGauge,
    LqRegularizedGauge, QuadraticGauge,
};

#[derive(Debug, Error)]
pub enum BodyError {
    #[error("sampled Hessian of phi^2 has a negative eigenvalue ({0:.3e}) beyond tolerance")]
    NonConvex(f64),
    #[error("gauge is not even: |phi(-x) - phi(x)| = {0:.3e} at a sampled point")]
    NotEven(f64),
    #[error("ellipsoid matrix is not symmetric positive definite")]
    DegenerateMatrix,
    #[error("homogeneity degree alpha must be > 1 (got {0})")]
    InvalidAlpha(f64),
    #[error("l^q exponent must be > 1 (got {0})")]
    InvalidExponent(f64),
    #[error("support optimizer stalled: projected gradient norm {0:.3e} after {1} iterations")]
    OptimizerStall(f64, usize),
    #[error("gauge Hessian is near singular; a regularization eps > 0 is required")]
    NearSingularHessian,
    #[error("ambient dimension must be >= 2 (got {0})")]
    BadDimension(usize),
}

/// What shape the gauge comes from.
#[derive(Clone)]
pub enum Shape {
    Ball,
    /// phi(x) = sqrt(x^T Q x); Q symmetric positive definite.
    Ellipsoid { matrix: DMatrix<f64> },
    /// l^q unit ball; `eps > 0` switches to the smoothed gauge.
    LqBall { q: f64, eps: f64 },
    Custom {
        gauge: GaugeClosure,
        gradient: Option<GradClosure>,
        hessian: Option<HessClosure>,
    },
}

impl std::fmt::Debug for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Ball => write!(f, "Ball"),
            Shape::Ellipsoid { matrix } => write!(f, "Ellipsoid({matrix:?})"),
            Shape::LqBall { q, eps } => write!(f, "LqBall(q={q}, eps={eps})"),
            Shape::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Declarative description of a body; `make_body` turns it into evaluators.
#[derive(Debug, Clone)]
pub struct BodySpec {
    pub dim: usize,
    pub shape: Shape,
    /// Homogeneity degree of the potential (1/alpha) phi^alpha.
    pub alpha: f64,
}

impl BodySpec {
    pub fn ball(dim: usize) -> Self {
        BodySpec {
            dim,
            shape: Shape::Ball,
            alpha: 2.0,
        }
    }

    /// Ellipsoid with the given semi-axes: phi = sqrt(sum x_i^2 / a_i^2).
    pub fn ellipsoid_axes(axes: &[f64]) -> Self {
        let n = axes.len();
        let mut q = DMatrix::zeros(n, n);
        for (i, &a) in axes.iter().enumerate() {
            q[(i, i)] = 1.0 / (a * a);
        }
        BodySpec {
            dim: n,
            shape: Shape::Ellipsoid { matrix: q },
            alpha: 2.0,
        }
    }

    pub fn ellipsoid_matrix(matrix: DMatrix<f64>) -> Self {
        BodySpec {
            dim: matrix.nrows(),
            shape: Shape::Ellipsoid { matrix },
            alpha: 2.0,
        }
    }

    pub fn lq_ball(dim: usize, q: f64) -> Self {
        BodySpec {
            dim,
            shape: Shape::LqBall { q, eps: 0.0 },
            alpha: 2.0,
        }
    }

    pub fn lq_ball_regularized(dim: usize, q: f64, eps: f64) -> Self {
        BodySpec {
            dim,
            shape: Shape::LqBall { q, eps },
            alpha: 2.0,
        }
    }

    pub fn custom(dim: usize, gauge: GaugeClosure) -> Self {
        BodySpec {
            dim,
            shape: Shape::Custom {
                gauge,
                gradient: None,
                hessian: None,
            },
            alpha: 2.0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

enum SupportKind {
    /// h has its own closed-form gauge.
    ClosedForm(Box<dyn GaugeFn>),
    /// h computed from phi through the Legendre transform of phi^2/2.
    LegendreDual,
}

/// A symmetric convex body with evaluators for the gauge, the support
/// function and their derivatives.  Immutable and safe to share across
/// threads.
pub struct ConvexBody {
    pub spec: BodySpec,
    pub alpha: f64,
    pub beta: f64,
    gauge: Box<dyn GaugeFn>,
    support: SupportKind,
}

/// Build a body from its spec, validating evenness, positivity and sampled
/// convexity of phi^2.
pub fn make_body(spec: BodySpec) -> Result<ConvexBody, BodyError> {
    if spec.dim < 2 && !matches!(spec.shape, Shape::Custom { .. }) {
        // 1-D potentials are handled by the Euclidean side directly.
        return Err(BodyError::BadDimension(spec.dim));
    }
    if spec.alpha <= 1.0 {
        return Err(BodyError::InvalidAlpha(spec.alpha));
    }
    let gauge: Box<dyn GaugeFn> = match &spec.shape {
        Shape::Ball => Box::new(BallGauge),
        Shape::Ellipsoid { matrix } => {
            if matrix.nrows() != spec.dim
                || matrix.ncols() != spec.dim
                || (matrix - matrix.transpose()).norm() > 1e-12 * matrix.norm()
                || matrix.clone().cholesky().is_none()
            {
                return Err(BodyError::DegenerateMatrix);
            }
            Box::new(QuadraticGauge { q: matrix.clone() })
        }
        Shape::LqBall { q, eps } => {
            if *q <= 1.0 {
                return Err(BodyError::InvalidExponent(*q));
            }
            if *eps > 0.0 {
                Box::new(LqRegularizedGauge { q: *q, eps: *eps })
            } else {
                Box::new(LqGauge { q: *q })
            }
        }
        Shape::Custom {
            gauge,
            gradient,
            hessian,
        } => Box::new(CustomGauge {
            f: gauge.clone(),
            grad: gradient.clone(),
            hess: hessian.clone(),
        }),
    };

    let support: SupportKind = match &spec.shape {
        Shape::Ball => SupportKind::ClosedForm(Box::new(BallGauge)),
        Shape::Ellipsoid { matrix } => {
            let inv = matrix
                .clone()
                .try_inverse()
                .ok_or(BodyError::DegenerateMatrix)?;
            SupportKind::ClosedForm(Box::new(QuadraticGauge { q: inv }))
        }
        Shape::LqBall { q, eps } => {
            if *eps > 0.0 {
                SupportKind::LegendreDual
            } else {
                SupportKind::ClosedForm(Box::new(LqGauge { q: q / (q - 1.0) }))
            }
        }
        Shape::Custom { .. } => SupportKind::LegendreDual,
    };

    let body = ConvexBody {
        alpha: spec.alpha,
        beta: spec.alpha / (spec.alpha - 1.0),
        spec,
        gauge,
        support,
    };
    body.validate()?;
    Ok(body)
}

impl ConvexBody {
    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    fn validate(&self) -> Result<(), BodyError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        let n = self.dim();
        for _ in 0..40 {
            let x = random_direction(&mut rng, n);
            let p = self.phi(&x);
            let m = self.phi(&(-&x));
            if !(p > 0.0) {
                return Err(BodyError::NonConvex(p));
            }
            if (p - m).abs() > 1e-10 * p.abs() {
                return Err(BodyError::NotEven((p - m).abs()));
            }
            // phi^2 / 2 must have a PSD Hessian
            let h2 = self.gauge.hess(&x) * p + self.grad_phi(&x) * self.grad_phi(&x).transpose();
            if let Some(eig) = h2.symmetric_eigenvalues().iter().cloned().reduce(f64::min) {
                if eig < -1e-8 * p {
                    return Err(BodyError::NonConvex(eig));
                }
            }
        }
        Ok(())
    }

    pub fn phi(&self, x: &DVector<f64>) -> f64 {
        self.gauge.eval(x)
    }

    pub fn grad_phi(&self, x: &DVector<f64>) -> DVector<f64> {
        self.gauge.grad(x)
    }

    pub fn hess_phi(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.gauge.hess(x)
    }

    pub fn h(&self, y: &DVector<f64>) -> f64 {
        match &self.support {
            SupportKind::ClosedForm(g) => g.eval(y),
            SupportKind::LegendreDual => self.dual_fields(y).0,
        }
    }

    pub fn grad_h(&self, y: &DVector<f64>) -> DVector<f64> {
        match &self.support {
            SupportKind::ClosedForm(g) => g.grad(y),
            SupportKind::LegendreDual => self.dual_fields(y).1,
        }
    }

    pub fn hess_h(&self, y: &DVector<f64>) -> DMatrix<f64> {
        match &self.support {
            SupportKind::ClosedForm(g) => g.hess(y),
            SupportKind::LegendreDual => self.dual_fields(y).2,
        }
    }

    /// (h, grad h, hess h) at y != 0 via the Legendre transform of
    /// H = h^2/2 = (phi^2/2)^*: solve grad(phi^2/2)(x) = y, then
    /// h = sqrt(2 (<x,y> - phi^2/2)), grad h = x / h,
    /// hess h = ((D^2 (phi^2/2))^{-1} - grad h grad h^T) / h.
    fn dual_fields(&self, y: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let r = y.norm();
        let yu = y / r;
        let x = self
            .legendre_point(&yu)
            .expect("Legendre dual Newton solve failed on a validated body");
        let phi = self.phi(&x);
        let hh = (x.dot(&yu) - 0.5 * phi * phi).max(0.0);
        let h = (2.0 * hh).sqrt();
        let grad = &x / h;
        let d2p = self.hess_phi(&x) * phi + self.grad_phi(&x) * self.grad_phi(&x).transpose();
        let d2h_big = d2p
            .try_inverse()
            .expect("Hessian of phi^2/2 is invertible on a validated body");
        let hess = (d2h_big - &grad * grad.transpose()) / h;
        // scale back from the unit vector: h is 1-homogeneous
        (r * h, grad, hess / r)
    }

    /// Newton solve of grad(phi^2/2)(x) = y for unit y.  Accepts stagnation
    /// above machine precision (finite-difference gauges cannot drive the
    /// residual all the way down); the Legendre value is first-order
    /// stationary, so a residual r costs only O(r^2) in h.
    fn legendre_point(&self, y: &DVector<f64>) -> Result<DVector<f64>, BodyError> {
        let mut x = y / self.phi(y);
        let mut best = x.clone();
        let mut best_residual = f64::INFINITY;
        for _ in 0..80 {
            let phi = self.phi(&x);
            let g = self.grad_phi(&x);
            let f = &g * phi - y;
            let residual = f.norm();
            if residual < best_residual {
                best_residual = residual;
                best = x.clone();
            }
            if residual < 1e-13 {
                return Ok(x);
            }
            let hess = self.hess_phi(&x) * phi + &g * g.transpose();
            let delta = hess
                .lu()
                .solve(&(-&f))
                .ok_or(BodyError::NearSingularHessian)?;
            if delta.norm() < 1e-15 {
                break;
            }
            let mut tau = 1.0;
            loop {
                let xt = &x + &delta * tau;
                let pt = self.phi(&xt);
                if pt > 0.0 {
                    let ft = (self.grad_phi(&xt) * pt - y).norm();
                    if ft < residual || tau < 1e-6 {
                        x = xt;
                        break;
                    }
                }
                tau *= 0.5;
            }
        }
        if best_residual < 1e-8 {
            Ok(best)
        } else {
            Err(BodyError::OptimizerStall(best_residual, 80))
        }
    }

    /// Potential Phi = (1/alpha) phi^alpha and derivatives.
    pub fn potential(&self, x: &DVector<f64>) -> f64 {
        self.phi(x).powf(self.alpha) / self.alpha
    }

    pub fn potential_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        self.grad_phi(x) * self.phi(x).powf(self.alpha - 1.0)
    }

    pub fn potential_hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let p = self.phi(x);
        let g = self.grad_phi(x);
        self.hess_phi(x) * p.powf(self.alpha - 1.0)
            + &g * g.transpose() * ((self.alpha - 1.0) * p.powf(self.alpha - 2.0))
    }

    /// Dual potential Phi^* = (1/beta) h^beta and derivatives.
    pub fn dual_potential(&self, y: &DVector<f64>) -> f64 {
        self.h(y).powf(self.beta) / self.beta
    }

    pub fn dual_potential_grad(&self, y: &DVector<f64>) -> DVector<f64> {
        self.grad_h(y) * self.h(y).powf(self.beta - 1.0)
    }

    pub fn dual_potential_hess(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let h = self.h(y);
        let g = self.grad_h(y);
        self.hess_h(y) * h.powf(self.beta - 1.0)
            + &g * g.transpose() * ((self.beta - 1.0) * h.powf(self.beta - 2.0))
    }

    /// The map T(theta) = grad h / |grad h| (support side to gauge side).
    pub fn map_t(&self, theta: &DVector<f64>) -> DVector<f64> {
        let g = self.grad_h(theta);
        &g / g.norm()
    }

    /// The map S(x) = grad phi / |grad phi| (gauge side to support side).
    pub fn map_s(&self, x: &DVector<f64>) -> DVector<f64> {
        let g = self.grad_phi(x);
        &g / g.norm()
    }
}

impl std::fmt::Debug for ConvexBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexBody")
            .field("spec", &self.spec)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .finish()
    }
}

/// The reciprocal pair of sphere maps of a body.
pub struct SphereMapPair<'b> {
    body: &'b ConvexBody,
}

impl<'b> SphereMapPair<'b> {
    pub fn t(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.body.map_t(theta)
    }

    pub fn s(&self, x: &DVector<f64>) -> DVector<f64> {
        self.body.map_s(x)
    }
}

/// Both sphere maps of a body.  Fails when the gauge cannot provide the
/// required derivatives (exact l^q with q < 2 and no regularization).
pub fn sphere_maps(body: &ConvexBody) -> Result<SphereMapPair<'_>, BodyError> {
    if let Shape::LqBall { q, eps } = body.spec.shape {
        if eps == 0.0 && q < 2.0 {
            return Err(BodyError::NearSingularHessian);
        }
    }
    Ok(SphereMapPair { body })
}

/// Support value sup_x <theta, x> / phi(x), computed by projected gradient
/// ascent over the unit sphere from deterministic axis and diagonal starts,
/// then polished by the Newton solve of the Legendre point.
pub fn support_from_gauge(body: &ConvexBody, theta: &DVector<f64>) -> Result<f64, BodyError> {
    let n = body.dim();
    let mut starts: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        starts.push(e.clone());
        starts.push(-e);
    }
    for mask in 0..(1usize << n) {
        let v = DVector::from_iterator(
            n,
            (0..n).map(|i| if mask & (1 << i) != 0 { -1.0 } else { 1.0 }),
        );
        starts.push(v / (n as f64).sqrt());
    }

    let mut best_u = starts[0].clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_gnorm = f64::INFINITY;
    for s in &starts {
        let (u, val, gnorm) = projected_ascent(body, theta, s.clone());
        if val > best_val {
            best_val = val;
            best_u = u;
            best_gnorm = gnorm;
        }
    }

    // Newton polish: the maximizer direction is the Legendre point of theta.
    let seed = {
        let g = body.grad_phi(&best_u);
        &best_u / (body.phi(&best_u) * g.norm()).max(1e-300)
    };
    if let Ok(x) = polish_legendre(body, theta, seed) {
        let phi = body.phi(&x);
        let hh = (x.dot(theta) - 0.5 * phi * phi).max(0.0);
        let h = (2.0 * hh).sqrt();
        if h >= best_val - 1e-9 {
            return Ok(h);
        }
    }
    if best_gnorm > 1e-7 {
        return Err(BodyError::OptimizerStall(best_gnorm, 400));
    }
    Ok(best_val)
}

fn projected_ascent(
    body: &ConvexBody,
    theta: &DVector<f64>,
    start: DVector<f64>,
) -> (DVector<f64>, f64, f64) {
    let mut u = start;
    let objective = |u: &DVector<f64>| theta.dot(u) / body.phi(u);
    let mut val = objective(&u);
    let mut gnorm = f64::INFINITY;
    for _ in 0..400 {
        let phi = body.phi(&u);
        let grad = theta / phi - body.grad_phi(&u) * (theta.dot(&u) / (phi * phi));
        let tangential = &grad - &u * grad.dot(&u);
        gnorm = tangential.norm();
        if gnorm < 1e-12 {
            break;
        }
        let mut tau = 1.0;
        let mut advanced = false;
        while tau > 1e-12 {
            let cand = (&u + &tangential * tau).normalize();
            let cv = objective(&cand);
            if cv > val {
                u = cand;
                val = cv;
                advanced = true;
                break;
            }
            tau *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    (u, val, gnorm)
}

fn polish_legendre(
    body: &ConvexBody,
    y: &DVector<f64>,
    seed: DVector<f64>,
) -> Result<DVector<f64>, BodyError> {
    let mut x = seed;
    let mut residual = f64::INFINITY;
    for _ in 0..60 {
        let phi = body.phi(&x);
        let g = body.grad_phi(&x);
        let f = &g * phi - y;
        residual = f.norm();
        if residual < 1e-12 * y.norm().max(1.0) {
            return Ok(x);
        }
        let hess = body.hess_phi(&x) * phi + &g * g.transpose();
        let delta = match hess.lu().solve(&(-&f)) {
            Some(d) => d,
            None => return Err(BodyError::NearSingularHessian),
        };
        let mut tau = 1.0;
        loop {
            let xt = &x + &delta * tau;
            let pt = body.phi(&xt);
            if pt > 0.0 {
                let ft = (body.grad_phi(&xt) * pt - y).norm();
                if ft < residual || tau < 1e-6 {
                    x = xt;
                    break;
                }
            }
            tau *= 0.5;
        }
    }
    Err(BodyError::OptimizerStall(residual, 60))
}

/// Max-norm residual of the reciprocity identity
/// h(theta) * sqrt(phi^2 + |grad_S phi|^2)(T(theta)) = 1 over the grid.
pub fn verify_phih(body: &ConvexBody, grid: &SphereGrid) -> Result<f64, BodyError> {
    let maps = sphere_maps(body)?;
    let mut worst: f64 = 0.0;
    for theta in &grid.nodes {
        let h = body.h(theta);
        let x = maps.t(theta);
        let phi = body.phi(&x);
        let grad = body.grad_phi(&x);
        let radial = grad.dot(&x);
        let tang2 = (grad.norm_squared() - radial * radial).max(0.0);
        let value = h * (phi * phi + tang2).sqrt();
        worst = worst.max((value - 1.0).abs());
    }
    Ok(worst)
}

/// Per-node support-side fields on a grid: h, Euclidean grad h, and the
/// (n-1) x (n-1) matrix of D^2 h = h I + Hess_S h in the tangent frame.
pub struct SupportFields {
    pub h: Vec<f64>,
    pub grad: Vec<DVector<f64>>,
    pub frame_d2: Vec<DMatrix<f64>>,
}

pub fn support_fields(body: &ConvexBody, grid: &SphereGrid) -> SupportFields {
    let mut h = Vec::with_capacity(grid.len());
    let mut grad = Vec::with_capacity(grid.len());
    let mut frame_d2 = Vec::with_capacity(grid.len());
    for (node, frame) in grid.nodes.iter().zip(&grid.frames) {
        h.push(body.h(node));
        grad.push(body.grad_h(node));
        frame_d2.push(frame_restrict(&body.hess_h(node), frame));
    }
    SupportFields { h, grad, frame_d2 }
}

/// Same for the gauge side: phi, grad phi, frame matrix of D^2 phi.
pub struct GaugeFields {
    pub phi: Vec<f64>,
    pub grad: Vec<DVector<f64>>,
    pub frame_d2: Vec<DMatrix<f64>>,
}

pub fn gauge_fields(body: &ConvexBody, grid: &SphereGrid) -> GaugeFields {
    let mut phi = Vec::with_capacity(grid.len());
    let mut grad = Vec::with_capacity(grid.len());
    let mut frame_d2 = Vec::with_capacity(grid.len());
    for (node, frame) in grid.nodes.iter().zip(&grid.frames) {
        phi.push(body.phi(node));
        grad.push(body.grad_phi(node));
        frame_d2.push(frame_restrict(&body.hess_phi(node), frame));
    }
    GaugeFields {
        phi,
        grad,
        frame_d2,
    }
}

/// Restrict an n x n symmetric matrix to the span of the tangent frame.
pub fn frame_restrict(m: &DMatrix<f64>, frame: &[DVector<f64>]) -> DMatrix<f64> {
    let k = frame.len();
    DMatrix::from_fn(k, k, |a, b| (m * &frame[b]).dot(&frame[a]))
}

/// Tangential part of a Euclidean vector at the unit node.
pub fn tangential_part(v: &DVector<f64>, node: &DVector<f64>) -> DVector<f64> {
    v - node * v.dot(node)
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_iterator(n, (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::build_grid;
    use std::sync::Arc;

    #[test]
    fn ball_is_self_dual() {
        let body = make_body(BodySpec::ball(2)).unwrap();
        let x = DVector::from_vec(vec![0.6, -0.8]);
        assert!((body.phi(&x) - 1.0).abs() < 1e-14);
        assert!((body.h(&x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ellipsoid_support_is_dual_quadratic() {
        // gauge sqrt(x1^2/4 + x2^2)  =>  h(theta) = sqrt(4 t1^2 + t2^2)
        let body = make_body(BodySpec::ellipsoid_axes(&[2.0, 1.0])).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert!((body.h(&e1) - 2.0).abs() < 1e-13);
        let t = DVector::from_vec(vec![0.6, 0.8]);
        let want = (4.0 * 0.36 + 0.64f64).sqrt();
        assert!((body.h(&t) - want).abs() < 1e-13);
    }

    #[test]
    fn lq_support_is_dual_norm() {
        let body = make_body(BodySpec::lq_ball(3, 3.0)).unwrap();
        let dual = LqGauge { q: 1.5 };
        let y = DVector::from_vec(vec![0.3, -0.9, 0.4]);
        assert!((body.h(&y) - dual.eval(&y)).abs() < 1e-13);
    }

    #[test]
    fn duality_holds_at_random_points() {
        // phi(x) = sup_y <x,y>/h(y) checked through the support optimizer
        let body = make_body(BodySpec::lq_ball(3, 3.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = random_direction(&mut rng, 3);
            let h = support_from_gauge(&body, &x).unwrap();
            let dual = LqGauge { q: 1.5 };
            assert!(
                (h - dual.eval(&x)).abs() < 1e-9,
                "support mismatch: {h} vs {}",
                dual.eval(&x)
            );
        }
    }

    #[test]
    fn support_optimizer_on_axes() {
        let body = make_body(BodySpec::ellipsoid_axes(&[2.0, 1.0])).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let h = support_from_gauge(&body, &e1).unwrap();
        assert!((h - 2.0).abs() < 1e-10);
        let diag = DVector::from_vec(vec![1.0, 1.0]).normalize();
        let got = support_from_gauge(&body, &diag).unwrap();
        let want = body.h(&diag);
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn regularized_dual_fields_match_finite_differences() {
        let body = make_body(BodySpec::lq_ball_regularized(2, 3.0, 1e-2)).unwrap();
        let y = DVector::from_vec(vec![0.8, 0.6]);
        let h0 = body.h(&y);
        let eps = 1e-6;
        let g = body.grad_h(&y);
        for i in 0..2 {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[i] += eps;
            ym[i] -= eps;
            let fd = (body.h(&yp) - body.h(&ym)) / (2.0 * eps);
            assert!((g[i] - fd).abs() < 1e-7, "grad_h[{i}]: {} vs {fd}", g[i]);
        }
        let hess = body.hess_h(&y);
        for i in 0..2 {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[i] += eps;
            ym[i] -= eps;
            let fd = (body.grad_h(&yp) - body.grad_h(&ym)) / (2.0 * eps);
            for j in 0..2 {
                assert!(
                    (hess[(j, i)] - fd[j]).abs() < 1e-6,
                    "hess_h[{j},{i}]: {} vs {}",
                    hess[(j, i)],
                    fd[j]
                );
            }
        }
        // Euler identity for h
        assert!((body.grad_h(&y).dot(&y) - h0).abs() < 1e-10);
    }

    #[test]
    fn sphere_maps_are_reciprocal() {
        let body = make_body(BodySpec::ellipsoid_axes(&[2.0, 1.0])).unwrap();
        let maps = sphere_maps(&body).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert!((maps.t(&e1) - &e1).norm() < 1e-12);
        let theta = DVector::from_vec(vec![1.0, 1.0]).normalize();
        let x = maps.t(&theta);
        let back = maps.s(&x);
        assert!((back - &theta).norm() < 1e-10, "S(T(theta)) != theta");
        // both maps commute with the antipodal map
        let anti = maps.t(&(-&theta));
        assert!((anti + maps.t(&theta)).norm() < 1e-12);
    }

    #[test]
    fn phih_identity_for_analytic_bodies() {
        let grid = build_grid(2, 256).unwrap();
        let ball = make_body(BodySpec::ball(2)).unwrap();
        assert!(verify_phih(&ball, &grid).unwrap() < 1e-12);
        let ellipse = make_body(BodySpec::ellipsoid_axes(&[2.0, 1.0])).unwrap();
        assert!(verify_phih(&ellipse, &grid).unwrap() < 1e-8);
        let lq = make_body(BodySpec::lq_ball_regularized(2, 3.0, 1e-3)).unwrap();
        assert!(verify_phih(&lq, &grid).unwrap() < 1e-6);
    }

    #[test]
    fn homogeneity_and_euler_identities() {
        let bodies = vec![
            make_body(BodySpec::ball(3)).unwrap(),
            make_body(BodySpec::ellipsoid_axes(&[1.5, 0.7, 1.0])).unwrap(),
            make_body(BodySpec::lq_ball(2, 3.0)).unwrap(),
            make_body(BodySpec::lq_ball_regularized(2, 1.5, 1e-2)).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for body in &bodies {
            for _ in 0..100 {
                let x = random_direction(&mut rng, body.dim());
                let t = 0.1 + 3.0 * rng.random::<f64>();
                let scale = body.phi(&x).abs().max(1.0);
                assert!((body.phi(&(&x * t)) - t * body.phi(&x)).abs() <= 1e-12 * t * scale);
                assert!((body.h(&(&x * t)) - t * body.h(&x)).abs() <= 1e-10 * t * scale);
                // Euler: <grad phi, x> = phi
                assert!((body.grad_phi(&x).dot(&x) - body.phi(&x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn legendre_consistency_of_potentials() {
        // Phi^*(grad Phi(x)) + Phi(x) = <x, grad Phi(x)>
        let body = make_body(BodySpec::lq_ball(2, 3.0).with_alpha(3.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_direction(&mut rng, 2);
            let g = body.potential_grad(&x);
            let lhs = body.dual_potential(&g) + body.potential(&x);
            let rhs = x.dot(&g);
            assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn hessian_block_representation_in_polar_frame() {
        // Full Euclidean D^2 Phi at r * node matches the block form
        //   r^{a-2} phi^{a-1} [ (a-1) phi        (a-1) (grad_S phi)^T ]
        //                     [ (a-1) grad_S phi  D^2 phi + (a-1) grad_S phi grad_S phi^T / phi ]
        // in the frame (node, e_1, ..., e_{n-1}).
        let alpha = 3.0;
        let body = make_body(BodySpec::ellipsoid_axes(&[2.0, 1.0]).with_alpha(alpha)).unwrap();
        let grid = build_grid(2, 32).unwrap();
        let r = 1.7;
        for (node, frame) in grid.nodes.iter().zip(&grid.frames) {
            let x = node * r;
            let full = body.potential_hess(&x);
            let phi = body.phi(node);
            let gphi = body.grad_phi(node);
            let gs = tangential_part(&gphi, node);
            let d2_frame = frame_restrict(&body.hess_phi(node), frame);
            let scale = r.powf(alpha - 2.0) * phi.powf(alpha - 1.0);
            // radial-radial
            let rr = (&full * node).dot(node);
            assert!((rr - scale * (alpha - 1.0) * phi).abs() < 1e-6 * scale.max(1.0));
            for (a, ea) in frame.iter().enumerate() {
                // radial-tangent
                let rt = (&full * ea).dot(node);
                let want = scale * (alpha - 1.0) * gs.dot(ea);
                assert!((rt - want).abs() < 1e-6 * scale.max(1.0));
                for (b, eb) in frame.iter().enumerate() {
                    let tt = (&full * eb).dot(ea);
                    // frame_restrict already yields the operator phi I + Hess_S phi
                    let want =
                        scale * (d2_frame[(a, b)] + (alpha - 1.0) * gs.dot(ea) * gs.dot(eb) / phi);
                    assert!(
                        (tt - want).abs() < 1e-6 * scale.max(1.0),
                        "tangent block ({a},{b}): {tt} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            make_body(BodySpec::ball(2).with_alpha(1.0)),
            Err(BodyError::InvalidAlpha(_))
        ));
        let asym = DMatrix::from_vec(2, 2, vec![1.0, 0.5, -0.5, 1.0]);
        assert!(matches!(
            make_body(BodySpec::ellipsoid_matrix(asym)),
            Err(BodyError::DegenerateMatrix)
        ));
        let indef = DMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            make_body(BodySpec::ellipsoid_matrix(indef)),
            Err(BodyError::DegenerateMatrix)
        ));
        let odd = BodySpec::custom(2, Arc::new(|x: &DVector<f64>| (x[0] + 2.0 * x[1]).abs() + x[0].hypot(x[1]) + 0.3 * x[0]));
        assert!(matches!(make_body(odd), Err(BodyError::NotEven(_))));
    }

    #[test]
    fn custom_body_with_finite_differences() {
        let body = make_body(BodySpec::custom(
            2,
            Arc::new(|x: &DVector<f64>| (x[0] * x[0] / 4.0 + x[1] * x[1]).sqrt()),
        ))
        .unwrap();
        let reference = make_body(BodySpec::ellipsoid_axes(&[2.0, 1.0])).unwrap();
        let y = DVector::from_vec(vec![0.6, 0.8]);
        assert!((body.h(&y) - reference.h(&y)).abs() < 1e-6);
    }

    #[test]
    fn frame_d2h_is_positive_definite_for_smooth_bodies() {
        let grid = build_grid(2, 64).unwrap();
        for spec in [
            BodySpec::ball(2),
            BodySpec::ellipsoid_axes(&[2.0, 1.0]),
            BodySpec::lq_ball_regularized(2, 3.0, 1e-3),
        ] {
            let body = make_body(spec).unwrap();
            let fields = support_fields(&body, &grid);
            for m in &fields.frame_d2 {
                assert!(m[(0, 0)] > 0.0);
            }
        }
    }
}
