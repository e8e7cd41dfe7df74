//! Pointwise gauge evaluators: value, Euclidean gradient and Hessian of a
//! positively 1-homogeneous even function on R^n \ {0}.

use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// A 1-homogeneous gauge with analytic (or finite-difference) derivatives.
pub trait GaugeFn: Send + Sync {
    fn eval(&self, x: &DVector<f64>) -> f64;
    fn grad(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// Euclidean norm.
pub struct BallGauge;

impl GaugeFn for BallGauge {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        x.norm()
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        x / x.norm()
    }

    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let r = x.norm();
        let u = x / r;
        (DMatrix::identity(x.len(), x.len()) - &u * u.transpose()) / r
    }
}

/// sqrt(x^T Q x) for a symmetric positive definite Q.
pub struct QuadraticGauge {
    pub q: DMatrix<f64>,
}

impl GaugeFn for QuadraticGauge {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        (&self.q * x).dot(x).sqrt()
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x / self.eval(x)
    }

    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let phi = self.eval(x);
        let qx = &self.q * x;
        &self.q / phi - &qx * qx.transpose() / phi.powi(3)
    }
}

/// Exact l^q gauge, q > 1.  Second derivatives degenerate on the coordinate
/// hyperplanes when q != 2; evaluate away from them (or use the regularized
/// variant).
pub struct LqGauge {
    pub q: f64,
}

impl GaugeFn for LqGauge {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        x.iter().map(|v| v.abs().powf(self.q)).sum::<f64>().powf(1.0 / self.q)
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let phi = self.eval(x);
        DVector::from_iterator(
            x.len(),
            x.iter()
                .map(|&v| phi.powf(1.0 - self.q) * v.abs().powf(self.q - 1.0) * v.signum()),
        )
    }

    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let q = self.q;
        let phi = self.eval(x);
        let n = x.len();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut v = (1.0 - q)
                    * phi.powf(1.0 - 2.0 * q)
                    * x[i].abs().powf(q - 1.0)
                    * x[j].abs().powf(q - 1.0)
                    * x[i].signum()
                    * x[j].signum();
                if i == j {
                    v += (q - 1.0) * phi.powf(1.0 - q) * x[i].abs().powf(q - 2.0);
                }
                h[(i, j)] = v;
            }
        }
        h
    }
}

/// Smoothed l^q gauge.  On the unit sphere it agrees with
/// (sum (x_i^2 + eps^2)^{q/2})^{1/q}; the 1-homogeneous extension replaces
/// eps^2 by eps^2 |x|^2 so that homogeneity is exact:
///
///   phi(x) = ( sum_i (x_i^2 + eps^2 |x|^2)^{q/2} )^{1/q}.
///
/// Each term is the Euclidean norm of a linear image of x, so the gauge is
/// convex for q >= 1, and uniformly convex on the sphere for eps > 0.
pub struct LqRegularizedGauge {
    pub q: f64,
    pub eps: f64,
}

impl LqRegularizedGauge {
    fn parts(&self, x: &DVector<f64>) -> (Vec<f64>, f64) {
        let r2 = x.norm_squared();
        let u: Vec<f64> = x.iter().map(|&v| v * v + self.eps * self.eps * r2).collect();
        (u, r2)
    }
}

impl GaugeFn for LqRegularizedGauge {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        let (u, _) = self.parts(x);
        u.iter()
            .map(|&ui| ui.powf(0.5 * self.q))
            .sum::<f64>()
            .powf(1.0 / self.q)
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let q = self.q;
        let e2 = self.eps * self.eps;
        let (u, _) = self.parts(x);
        let s: f64 = u.iter().map(|&ui| ui.powf(0.5 * q)).sum();
        let p: f64 = u.iter().map(|&ui| ui.powf(0.5 * q - 1.0)).sum();
        let n = x.len();
        DVector::from_iterator(
            n,
            (0..n).map(|j| {
                let sj = q * x[j] * (u[j].powf(0.5 * q - 1.0) + e2 * p);
                s.powf(1.0 / q - 1.0) * sj / q
            }),
        )
    }

    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let q = self.q;
        let e2 = self.eps * self.eps;
        let (u, _) = self.parts(x);
        let s: f64 = u.iter().map(|&ui| ui.powf(0.5 * q)).sum();
        let p: f64 = u.iter().map(|&ui| ui.powf(0.5 * q - 1.0)).sum();
        let r: f64 = u.iter().map(|&ui| ui.powf(0.5 * q - 2.0)).sum();
        let n = x.len();
        let s_grad: Vec<f64> = (0..n)
            .map(|j| q * x[j] * (u[j].powf(0.5 * q - 1.0) + e2 * p))
            .collect();
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                // d/dx_k of S_j
                let pk = (q - 2.0) * x[k] * (u[k].powf(0.5 * q - 2.0) + e2 * r);
                let mut sjk = q * x[j]
                    * ((q - 2.0) * u[j].powf(0.5 * q - 2.0) * (x[j] * delta(j, k) + e2 * x[k])
                        + e2 * pk);
                if j == k {
                    sjk += q * (u[j].powf(0.5 * q - 1.0) + e2 * p);
                }
                let term = (1.0 / q)
                    * ((1.0 / q - 1.0) * s.powf(1.0 / q - 2.0) * s_grad[j] * s_grad[k]
                        + s.powf(1.0 / q - 1.0) * sjk);
                h[(j, k)] = term;
            }
        }
        h
    }
}

#[inline]
fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

pub type GaugeClosure = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type GradClosure = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type HessClosure = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// User-supplied gauge.  Missing derivatives are replaced by central finite
/// differences with step cbrt(machine epsilon) * (1 + |x|).
pub struct CustomGauge {
    pub f: GaugeClosure,
    pub grad: Option<GradClosure>,
    pub hess: Option<HessClosure>,
}

impl CustomGauge {
    fn fd_step(x: &DVector<f64>) -> f64 {
        f64::EPSILON.cbrt() * (1.0 + x.norm())
    }
}

impl GaugeFn for CustomGauge {
    fn eval(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        if let Some(g) = &self.grad {
            return g(x);
        }
        let h = Self::fd_step(x);
        let n = x.len();
        DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                ((self.f)(&xp) - (self.f)(&xm)) / (2.0 * h)
            }),
        )
    }

    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        if let Some(hm) = &self.hess {
            return hm(x);
        }
        let h = Self::fd_step(x);
        let n = x.len();
        let f0 = (self.f)(x);
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    ((self.f)(&xp) - 2.0 * f0 + (self.f)(&xm)) / (h * h)
                } else {
                    let mut xpp = x.clone();
                    let mut xpm = x.clone();
                    let mut xmp = x.clone();
                    let mut xmm = x.clone();
                    xpp[i] += h;
                    xpp[j] += h;
                    xpm[i] += h;
                    xpm[j] -= h;
                    xmp[i] -= h;
                    xmp[j] += h;
                    xmm[i] -= h;
                    xmm[j] -= h;
                    ((self.f)(&xpp) - (self.f)(&xpm) - (self.f)(&xmp) + (self.f)(&xmm))
                        / (4.0 * h * h)
                };
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}
