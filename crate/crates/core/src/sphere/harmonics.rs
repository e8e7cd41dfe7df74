//! Real spherical harmonics on S^2 with analytic first and second
//! colatitude derivatives, fully normalized so that the basis is
//! orthonormal with respect to the surface measure (total area 4*pi).

/// Packed index for (l, m) with 0 <= m <= l.
#[inline]
pub fn lm_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Normalized associated Legendre values Pbar_l^m(cos(theta)) together with
/// d/dtheta and d^2/dtheta^2, for all 0 <= m <= l <= lmax, at a single
/// colatitude.  `z = cos(theta)` must satisfy |z| < 1 (interior nodes only).
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub lmax: usize,
    pub val: Vec<f64>,
    pub dtheta: Vec<f64>,
    pub d2theta: Vec<f64>,
}

pub fn legendre_table(lmax: usize, z: f64) -> LegendreTable {
    assert!(z.abs() < 1.0, "colatitude nodes must be interior");
    let s = (1.0 - z * z).sqrt(); // sin(theta) > 0
    let cot = z / s;
    let count = lm_index(lmax, lmax) + 1;
    let mut val = vec![0.0; count];
    let mut dtheta = vec![0.0; count];
    let mut d2theta = vec![0.0; count];

    // Diagonal recurrence for Pbar_m^m, then upward in l.
    let mut pmm = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    val[lm_index(0, 0)] = pmm;
    for m in 1..=lmax {
        pmm *= s * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        val[lm_index(m, m)] = pmm;
    }
    for m in 0..lmax {
        let blm = ((2 * m + 3) as f64).sqrt();
        val[lm_index(m + 1, m)] = blm * z * val[lm_index(m, m)];
        for l in (m + 2)..=lmax {
            let a = alpha(l, m);
            val[lm_index(l, m)] = a * (z * val[lm_index(l - 1, m)] - val[lm_index(l - 2, m)] / alpha(l - 1, m));
        }
    }

    // First derivative: dP/dtheta = (1/sin) [ l z Pbar_l^m - c_{lm} Pbar_{l-1}^m ],
    // with c_{lm} = sqrt((l^2 - m^2)(2l+1)/(2l-1)), from
    // (1-x^2) dP_l^m/dx = (l+m) P_{l-1}^m - l x P_l^m.
    for l in 0..=lmax {
        for m in 0..=l {
            let idx = lm_index(l, m);
            let lower = if l > 0 && m <= l - 1 {
                let c = (((l * l - m * m) as f64) * (2 * l + 1) as f64 / (2 * l - 1) as f64).sqrt();
                c * val[lm_index(l - 1, m)]
            } else {
                0.0
            };
            dtheta[idx] = (l as f64 * z * val[idx] - lower) / s;
            // Legendre ODE: P'' = -cot(theta) P' - [l(l+1) - m^2/sin^2] P.
            let ll = (l * (l + 1)) as f64;
            let mm = (m * m) as f64;
            d2theta[idx] = -cot * dtheta[idx] - (ll - mm / (s * s)) * val[idx];
        }
    }

    LegendreTable {
        lmax,
        val,
        dtheta,
        d2theta,
    }
}

fn alpha(l: usize, m: usize) -> f64 {
    (((4 * l * l - 1) as f64) / ((l * l - m * m) as f64)).sqrt()
}

/// One real spherical harmonic. `Cos` covers m = 0 (constant azimuthal factor).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Harmonic {
    pub l: usize,
    pub m: usize,
    pub kind: AzimuthKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AzimuthKind {
    Cos,
    Sin,
}

impl Harmonic {
    /// sqrt(2) factor for m > 0 real harmonics.
    #[inline]
    fn scale(&self) -> f64 {
        if self.m == 0 {
            1.0
        } else {
            std::f64::consts::SQRT_2
        }
    }

    /// Azimuthal factor and its first two derivatives with respect to
    /// the azimuth angle.
    #[inline]
    pub fn azimuth(&self, phi: f64) -> (f64, f64, f64) {
        let mf = self.m as f64;
        let arg = mf * phi;
        match self.kind {
            AzimuthKind::Cos => (arg.cos(), -mf * arg.sin(), -mf * mf * arg.cos()),
            AzimuthKind::Sin => (arg.sin(), mf * arg.cos(), -mf * mf * arg.sin()),
        }
    }

    pub fn eval(&self, table: &LegendreTable, phi: f64) -> f64 {
        let (t, _, _) = self.azimuth(phi);
        self.scale() * table.val[lm_index(self.l, self.m)] * t
    }

    /// Surface gradient components in the orthonormal frame (e_theta, e_phi).
    pub fn grad(&self, table: &LegendreTable, phi: f64, sin_theta: f64) -> [f64; 2] {
        let (t, dt, _) = self.azimuth(phi);
        let idx = lm_index(self.l, self.m);
        let c = self.scale();
        [
            c * table.dtheta[idx] * t,
            c * table.val[idx] * dt / sin_theta,
        ]
    }

    /// Surface Hessian components [H_tt, H_tp, H_pp] in the orthonormal
    /// frame (e_theta, e_phi).
    pub fn hess(&self, table: &LegendreTable, phi: f64, z: f64, sin_theta: f64) -> [f64; 3] {
        let (t, dt, ddt) = self.azimuth(phi);
        let idx = lm_index(self.l, self.m);
        let c = self.scale();
        let cot = z / sin_theta;
        let p = table.val[idx];
        let dp = table.dtheta[idx];
        let ddp = table.d2theta[idx];
        let h_tt = c * ddp * t;
        let h_tp = c * dt * (dp - cot * p) / sin_theta;
        let h_pp = c * (p * ddt / (sin_theta * sin_theta) + cot * dp * t);
        [h_tt, h_tp, h_pp]
    }
}

/// Enumerate the real basis for the given degrees.
pub fn enumerate_basis(degrees: impl IntoIterator<Item = usize>) -> Vec<Harmonic> {
    let mut out = Vec::new();
    for l in degrees {
        out.push(Harmonic {
            l,
            m: 0,
            kind: AzimuthKind::Cos,
        });
        for m in 1..=l {
            out.push(Harmonic {
                l,
                m,
                kind: AzimuthKind::Cos,
            });
            out.push(Harmonic {
                l,
                m,
                kind: AzimuthKind::Sin,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;

    fn product_grid(nz: usize, na: usize) -> Vec<(f64, f64, f64)> {
        // (z, phi, weight)
        let gl = gauss_legendre(nz);
        let mut pts = Vec::new();
        for (&z, &wz) in gl.nodes.iter().zip(&gl.weights) {
            for a in 0..na {
                let phi = 2.0 * std::f64::consts::PI * a as f64 / na as f64;
                pts.push((z, phi, wz * 2.0 * std::f64::consts::PI / na as f64));
            }
        }
        pts
    }

    #[test]
    fn basis_is_orthonormal() {
        let basis = enumerate_basis(0..=6);
        let pts = product_grid(16, 24);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let mut dot = 0.0;
                for &(z, phi, w) in &pts {
                    let table = legendre_table(6, z);
                    dot += w * a.eval(&table, phi) * b.eval(&table, phi);
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (dot - want).abs() < 1e-11,
                    "({},{},{:?}) vs ({},{},{:?}): {dot}",
                    a.l,
                    a.m,
                    a.kind,
                    b.l,
                    b.m,
                    b.kind
                );
            }
        }
    }

    #[test]
    fn laplacian_eigenvalue_from_hessian_trace() {
        // trace of the surface Hessian is the Laplace-Beltrami operator,
        // so trace(Hess Y_lm) = -l(l+1) Y_lm.
        let basis = enumerate_basis([3usize, 5]);
        let table_z = 0.31;
        let table = legendre_table(5, table_z);
        let s = (1.0f64 - table_z * table_z).sqrt();
        for h in &basis {
            for phi in [0.3, 1.1, 2.9] {
                let y = h.eval(&table, phi);
                let hess = h.hess(&table, phi, table_z, s);
                let lap = hess[0] + hess[2];
                let want = -((h.l * (h.l + 1)) as f64) * y;
                assert!((lap - want).abs() < 1e-9, "l={} m={}: {lap} vs {want}", h.l, h.m);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for (l, m, kind) in [
            (1usize, 0usize, AzimuthKind::Cos),
            (4, 2, AzimuthKind::Sin),
            (5, 5, AzimuthKind::Cos),
            (6, 3, AzimuthKind::Sin),
        ] {
            let h = Harmonic { l, m, kind };
            let theta = 1.1f64;
            let phi = 0.7;
            let eps = 1e-5;
            let f = |th: f64, ph: f64| h.eval(&legendre_table(l, th.cos()), ph);
            let d_theta = (f(theta + eps, phi) - f(theta - eps, phi)) / (2.0 * eps);
            let d_phi = (f(theta, phi + eps) - f(theta, phi - eps)) / (2.0 * eps);
            let table = legendre_table(l, theta.cos());
            let g = h.grad(&table, phi, theta.sin());
            assert!((g[0] - d_theta).abs() < 1e-6, "l={l} m={m}: dtheta {} vs {d_theta}", g[0]);
            assert!((g[1] - d_phi / theta.sin()).abs() < 1e-6);

            // second derivatives in (theta, phi) coordinates
            let dd_theta =
                (f(theta + eps, phi) - 2.0 * f(theta, phi) + f(theta - eps, phi)) / (eps * eps);
            let dd_mixed = (f(theta + eps, phi + eps) - f(theta + eps, phi - eps)
                - f(theta - eps, phi + eps)
                + f(theta - eps, phi - eps))
                / (4.0 * eps * eps);
            let hess = h.hess(&table, phi, theta.cos(), theta.sin());
            assert!((hess[0] - dd_theta).abs() < 1e-4, "H_tt: {} vs {dd_theta}", hess[0]);
            // H_tp = (u_theta_phi - cot u_phi) / sin
            let u_phi = d_phi;
            let want_tp = (dd_mixed - theta.cos() / theta.sin() * u_phi) / theta.sin();
            assert!((hess[1] - want_tp).abs() < 1e-4, "H_tp: {} vs {want_tp}", hess[1]);
        }
    }
}
