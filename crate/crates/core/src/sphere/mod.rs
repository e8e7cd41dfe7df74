//! Discretizations of the unit sphere: a periodic spectral grid on the
//! circle (n = 2) and a Gauss-Legendre x uniform-azimuth product grid with a
//! spherical-harmonic Galerkin layer (n = 3).  Both grids are closed under
//! the full coordinate sign-flip group and the antipodal map, so parity
//! decompositions are exact index permutations.

pub mod harmonics;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::quad::{gauss_legendre, Rule1d};
use harmonics::{enumerate_basis, legendre_table, Harmonic, LegendreTable};

#[derive(Debug, Error)]
pub enum SphereError {
    #[error("unsupported ambient dimension {0} (only n = 2 and n = 3 grids exist)")]
    UnsupportedDim(usize),
    #[error("resolution {0} below the supported minimum {1}")]
    ResolutionTooSmall(usize, usize),
    #[error("grid node set is not closed under coordinate reflections")]
    GridNotReflectionClosed,
    #[error("field length {0} does not match grid size {1}")]
    FieldSizeMismatch(usize, usize),
}

/// Scalar samples on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn from_fn(grid: &SphereGrid, mut f: impl FnMut(&DVector<f64>) -> f64) -> Self {
        Field {
            values: grid.nodes.iter().map(|x| f(x)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
enum GridKind {
    /// Uniform angles theta_k = 2 pi k / n on the circle.
    Circle,
    /// Product of Gauss-Legendre colatitudes and uniform azimuths.
    Sphere3 {
        max_degree: usize,
        n_polar: usize,
        n_azimuth: usize,
        /// z-nodes and weights of the polar rule.
        polar: Rule1d,
        /// Cached normalized Legendre tables, one per polar node.
        tables: Vec<LegendreTable>,
    },
}

/// Quadrature grid on S^{n-1} with tangent frames and symmetry index maps.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub dim: usize,
    pub nodes: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub antipode: Vec<usize>,
    /// Per-node orthonormal tangent frame, n-1 vectors each.
    pub frames: Vec<Vec<DVector<f64>>>,
    /// Index maps of the coordinate reflections x_i -> -x_i.
    pub reflections: Vec<Vec<usize>>,
    /// Largest polynomial degree the quadrature integrates exactly.
    pub exactness_degree: usize,
    kind: GridKind,
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        match self.dim {
            2 => 2.0 * std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI,
        }
    }

    /// Angle of node k (circle grids only).
    pub fn angle(&self, k: usize) -> f64 {
        debug_assert_eq!(self.dim, 2);
        2.0 * std::f64::consts::PI * k as f64 / self.len() as f64
    }

    pub fn check_field(&self, field: &Field) -> Result<(), SphereError> {
        if field.len() != self.len() {
            return Err(SphereError::FieldSizeMismatch(field.len(), self.len()));
        }
        Ok(())
    }

    /// Harmonic degree cutoff carried by an n = 3 grid.
    pub fn max_degree(&self) -> usize {
        match &self.kind {
            GridKind::Circle => self.len() / 2,
            GridKind::Sphere3 { max_degree, .. } => *max_degree,
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.kind, GridKind::Circle)
    }

    /// Polar/azimuth decomposition of a node index (n = 3 grids).
    fn split3(&self, k: usize) -> (usize, usize) {
        match &self.kind {
            GridKind::Sphere3 { n_azimuth, .. } => (k / n_azimuth, k % n_azimuth),
            GridKind::Circle => unreachable!("split3 on a circle grid"),
        }
    }
}

/// Build a grid on S^{n-1}.  For n = 2 `resolution` is the node count, for
/// n = 3 it is the harmonic degree cutoff of the Galerkin layer.
pub fn build_grid(dim: usize, resolution: usize) -> Result<SphereGrid, SphereError> {
    match dim {
        2 => build_circle(resolution),
        3 => build_sphere3(resolution),
        other => Err(SphereError::UnsupportedDim(other)),
    }
}

fn build_circle(n: usize) -> Result<SphereGrid, SphereError> {
    if n < 16 {
        return Err(SphereError::ResolutionTooSmall(n, 16));
    }
    // Even node counts are required for the antipodal map; multiples of 4
    // keep the quadrant reflections exact as well.
    let n = n.next_multiple_of(4);
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let nodes: Vec<DVector<f64>> = (0..n)
        .map(|k| {
            let t = h * k as f64;
            DVector::from_vec(vec![t.cos(), t.sin()])
        })
        .collect();
    let frames: Vec<Vec<DVector<f64>>> = (0..n)
        .map(|k| {
            let t = h * k as f64;
            vec![DVector::from_vec(vec![-t.sin(), t.cos()])]
        })
        .collect();
    let antipode: Vec<usize> = (0..n).map(|k| (k + n / 2) % n).collect();
    let refl_x: Vec<usize> = (0..n).map(|k| (n + n / 2 - k) % n).collect();
    let refl_y: Vec<usize> = (0..n).map(|k| (n - k) % n).collect();
    Ok(SphereGrid {
        dim: 2,
        nodes,
        weights: vec![h; n],
        antipode,
        frames,
        reflections: vec![refl_x, refl_y],
        exactness_degree: n - 1,
        kind: GridKind::Circle,
    })
}

fn build_sphere3(max_degree: usize) -> Result<SphereGrid, SphereError> {
    if max_degree < 4 {
        return Err(SphereError::ResolutionTooSmall(max_degree, 4));
    }
    let n_polar = 2 * max_degree + 10;
    let n_azimuth = (4 * max_degree + 16).next_multiple_of(4);
    let polar = gauss_legendre(n_polar);
    let tables: Vec<LegendreTable> = polar
        .nodes
        .iter()
        .map(|&z| legendre_table(max_degree, z))
        .collect();

    let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
    let mut weights = Vec::with_capacity(n_polar * n_azimuth);
    let mut frames = Vec::with_capacity(n_polar * n_azimuth);
    let dphi = 2.0 * std::f64::consts::PI / n_azimuth as f64;
    for iz in 0..n_polar {
        let z = polar.nodes[iz];
        let s = (1.0 - z * z).sqrt();
        for ia in 0..n_azimuth {
            let phi = dphi * ia as f64;
            let (cp, sp) = (phi.cos(), phi.sin());
            nodes.push(DVector::from_vec(vec![s * cp, s * sp, z]));
            weights.push(polar.weights[iz] * dphi);
            // (e_theta, e_phi)
            frames.push(vec![
                DVector::from_vec(vec![z * cp, z * sp, -s]),
                DVector::from_vec(vec![-sp, cp, 0.0]),
            ]);
        }
    }

    let idx = |iz: usize, ia: usize| iz * n_azimuth + ia;
    let mut antipode = vec![0usize; n_polar * n_azimuth];
    let mut refl_x = vec![0usize; n_polar * n_azimuth];
    let mut refl_y = vec![0usize; n_polar * n_azimuth];
    let mut refl_z = vec![0usize; n_polar * n_azimuth];
    for iz in 0..n_polar {
        let jz = n_polar - 1 - iz;
        for ia in 0..n_azimuth {
            let k = idx(iz, ia);
            antipode[k] = idx(jz, (ia + n_azimuth / 2) % n_azimuth);
            refl_x[k] = idx(iz, (n_azimuth + n_azimuth / 2 - ia) % n_azimuth);
            refl_y[k] = idx(iz, (n_azimuth - ia) % n_azimuth);
            refl_z[k] = idx(jz, ia);
        }
    }

    Ok(SphereGrid {
        dim: 3,
        nodes,
        weights,
        antipode,
        frames,
        reflections: vec![refl_x, refl_y, refl_z],
        exactness_degree: (2 * n_polar - 1).min(n_azimuth - 1),
        kind: GridKind::Sphere3 {
            max_degree,
            n_polar,
            n_azimuth,
            polar,
            tables,
        },
    })
}

/// Discrete surface differential operators of a grid.
pub struct SphereOperator<'g> {
    grid: &'g SphereGrid,
    /// First and second periodic spectral differentiation matrices (n = 2).
    circle_d1: Option<DMatrix<f64>>,
    circle_d2: Option<DMatrix<f64>>,
}

/// Per-node surface derivative data of a field, expressed in the grid's
/// tangent frames.
pub struct FieldDerivatives {
    /// Gradient coefficients, one (n-1)-vector per node.
    pub gradient: Vec<DVector<f64>>,
    /// Surface Hessian, one symmetric (n-1)x(n-1) matrix per node.
    pub hessian: Vec<DMatrix<f64>>,
}

impl FieldDerivatives {
    /// D^2 f = f I + Hess_S f, the Hessian of the 1-homogeneous extension
    /// restricted to the tangent space.
    pub fn d2(&self, field: &Field) -> Vec<DMatrix<f64>> {
        self.hessian
            .iter()
            .zip(&field.values)
            .map(|(h, &v)| {
                let k = h.nrows();
                h + DMatrix::identity(k, k) * v
            })
            .collect()
    }
}

impl<'g> SphereOperator<'g> {
    pub fn new(grid: &'g SphereGrid) -> Self {
        let (d1, d2) = if grid.is_circle() {
            let n = grid.len();
            (Some(circle_diff_matrix(n)), Some(circle_diff2_matrix(n)))
        } else {
            (None, None)
        };
        SphereOperator {
            grid,
            circle_d1: d1,
            circle_d2: d2,
        }
    }

    pub fn grid(&self) -> &SphereGrid {
        self.grid
    }

    /// Surface gradient and Hessian of a nodal field.
    pub fn spherical_derivatives(&self, field: &Field) -> Result<FieldDerivatives, SphereError> {
        self.grid.check_field(field)?;
        match &self.grid.kind {
            GridKind::Circle => {
                let u = DVector::from_column_slice(&field.values);
                let du = self.circle_d1.as_ref().unwrap() * &u;
                let ddu = self.circle_d2.as_ref().unwrap() * &u;
                Ok(FieldDerivatives {
                    gradient: du.iter().map(|&g| DVector::from_vec(vec![g])).collect(),
                    hessian: ddu
                        .iter()
                        .map(|&h| DMatrix::from_vec(1, 1, vec![h]))
                        .collect(),
                })
            }
            GridKind::Sphere3 {
                n_azimuth,
                polar,
                tables,
                max_degree,
                ..
            } => {
                let basis = enumerate_basis(0..=*max_degree);
                let coeffs = analysis(self.grid, field, &basis);
                let n = self.grid.len();
                let mut gradient = Vec::with_capacity(n);
                let mut hessian = Vec::with_capacity(n);
                let dphi = 2.0 * std::f64::consts::PI / *n_azimuth as f64;
                for k in 0..n {
                    let (iz, ia) = self.grid.split3(k);
                    let z = polar.nodes[iz];
                    let s = (1.0 - z * z).sqrt();
                    let phi = dphi * ia as f64;
                    let mut g = [0.0f64; 2];
                    let mut hm = [0.0f64; 3];
                    for (h, &c) in basis.iter().zip(coeffs.iter()) {
                        if c == 0.0 {
                            continue;
                        }
                        let gv = h.grad(&tables[iz], phi, s);
                        let hv = h.hess(&tables[iz], phi, z, s);
                        g[0] += c * gv[0];
                        g[1] += c * gv[1];
                        hm[0] += c * hv[0];
                        hm[1] += c * hv[1];
                        hm[2] += c * hv[2];
                    }
                    gradient.push(DVector::from_vec(vec![g[0], g[1]]));
                    hessian.push(DMatrix::from_vec(2, 2, vec![hm[0], hm[1], hm[1], hm[2]]));
                }
                Ok(FieldDerivatives { gradient, hessian })
            }
        }
    }

    /// Precompute the spectral/Galerkin representation of `field` so it can
    /// be evaluated at arbitrary unit vectors.  Exact for band-limited
    /// fields.
    pub fn interpolant(&self, field: &Field) -> FieldInterpolant {
        match &self.grid.kind {
            GridKind::Circle => FieldInterpolant::Circle {
                coeffs: circle_fourier_coeffs(&field.values),
                n: field.values.len(),
            },
            GridKind::Sphere3 { max_degree, .. } => {
                let basis = enumerate_basis(0..=*max_degree);
                let coeffs = analysis(self.grid, field, &basis);
                FieldInterpolant::Sphere3 {
                    basis,
                    coeffs,
                    max_degree: *max_degree,
                }
            }
        }
    }

    /// One-off interpolation; build an interpolant when evaluating at many
    /// points.
    pub fn interpolate(&self, field: &Field, point: &DVector<f64>) -> f64 {
        self.interpolant(field).eval(point)
    }
}

/// Evaluable spectral representation of a nodal field.
pub enum FieldInterpolant {
    Circle {
        coeffs: (Vec<f64>, Vec<f64>),
        n: usize,
    },
    Sphere3 {
        basis: Vec<Harmonic>,
        coeffs: Vec<f64>,
        max_degree: usize,
    },
}

impl FieldInterpolant {
    pub fn eval(&self, point: &DVector<f64>) -> f64 {
        match self {
            FieldInterpolant::Circle { coeffs, n } => {
                let theta = point[1].atan2(point[0]);
                circle_fourier_eval(coeffs, theta, *n)
            }
            FieldInterpolant::Sphere3 {
                basis,
                coeffs,
                max_degree,
            } => {
                let z = point[2].clamp(-0.999_999_999, 0.999_999_999);
                let phi = point[1].atan2(point[0]);
                let table = legendre_table(*max_degree, z);
                basis
                    .iter()
                    .zip(coeffs.iter())
                    .map(|(h, &c)| c * h.eval(&table, phi))
                    .sum()
            }
        }
    }
}

/// Harmonic analysis of a nodal field: coefficients against an orthonormal
/// basis via the grid quadrature.
pub fn analysis(grid: &SphereGrid, field: &Field, basis: &[Harmonic]) -> Vec<f64> {
    let values = harmonic_values(grid, basis);
    let mut coeffs = vec![0.0; basis.len()];
    for (j, col) in values.iter().enumerate() {
        let mut acc = 0.0;
        for k in 0..grid.len() {
            acc += grid.weights[k] * field.values[k] * col[k];
        }
        coeffs[j] = acc;
    }
    coeffs
}

/// Node values of each harmonic, column per basis element.
pub fn harmonic_values(grid: &SphereGrid, basis: &[Harmonic]) -> Vec<Vec<f64>> {
    match &grid.kind {
        GridKind::Sphere3 {
            n_azimuth,
            polar,
            tables,
            ..
        } => {
            let dphi = 2.0 * std::f64::consts::PI / *n_azimuth as f64;
            basis
                .iter()
                .map(|h| {
                    (0..grid.len())
                        .map(|k| {
                            let (iz, ia) = grid.split3(k);
                            let _ = polar;
                            h.eval(&tables[iz], dphi * ia as f64)
                        })
                        .collect()
                })
                .collect()
        }
        GridKind::Circle => panic!("harmonic_values is for n = 3 grids"),
    }
}

/// Node gradients (frame components) of each harmonic.
pub fn harmonic_gradients(grid: &SphereGrid, basis: &[Harmonic]) -> Vec<Vec<[f64; 2]>> {
    match &grid.kind {
        GridKind::Sphere3 {
            n_azimuth,
            polar,
            tables,
            ..
        } => {
            let dphi = 2.0 * std::f64::consts::PI / *n_azimuth as f64;
            basis
                .iter()
                .map(|h| {
                    (0..grid.len())
                        .map(|k| {
                            let (iz, ia) = grid.split3(k);
                            let z = polar.nodes[iz];
                            let s = (1.0 - z * z).sqrt();
                            h.grad(&tables[iz], dphi * ia as f64, s)
                        })
                        .collect()
                })
                .collect()
        }
        GridKind::Circle => panic!("harmonic_gradients is for n = 3 grids"),
    }
}

/// Antipodal average: the even part of a field.  Idempotent.
pub fn even_project(grid: &SphereGrid, field: &Field) -> Result<Field, SphereError> {
    grid.check_field(field)?;
    let values = (0..grid.len())
        .map(|k| 0.5 * (field.values[k] + field.values[grid.antipode[k]]))
        .collect();
    Ok(Field::new(values))
}

/// Split a field into its 2^n coordinate-parity components.  Component `a`
/// (bitmask, bit i set = odd in x_i) is obtained by signed reflection
/// averaging; the components sum to the input.
pub fn parity_decompose(grid: &SphereGrid, field: &Field) -> Result<Vec<Field>, SphereError> {
    grid.check_field(field)?;
    for (axis, map) in grid.reflections.iter().enumerate() {
        for (k, &j) in map.iter().enumerate() {
            let x = &grid.nodes[k];
            let y = &grid.nodes[j];
            // the reflected node must itself be a grid node, up to roundoff
            let mut diff: f64 = 0.0;
            for i in 0..grid.dim {
                let want = if i == axis { -x[i] } else { x[i] };
                diff += (y[i] - want).abs();
            }
            if diff > 1e-9 {
                return Err(SphereError::GridNotReflectionClosed);
            }
        }
    }

    let n_comp = 1usize << grid.dim;
    let mut components = Vec::with_capacity(n_comp);
    for a in 0..n_comp {
        let mut current = field.values.clone();
        for i in 0..grid.dim {
            let map = &grid.reflections[i];
            let sign = if a & (1 << i) != 0 { -1.0 } else { 1.0 };
            let next: Vec<f64> = (0..grid.len())
                .map(|k| 0.5 * (current[k] + sign * current[map[k]]))
                .collect();
            current = next;
        }
        components.push(Field::new(current));
    }
    Ok(components)
}

/// Periodic spectral differentiation matrix on n uniform angles (n even).
pub fn circle_diff_matrix(n: usize) -> DMatrix<f64> {
    assert!(n % 2 == 0);
    let h = 2.0 * std::f64::consts::PI / n as f64;
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            0.0
        } else {
            let d = j as isize - k as isize;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            0.5 * sign / (0.5 * h * d as f64).tan()
        }
    })
}

/// Second-derivative periodic spectral matrix on n uniform angles (n even).
pub fn circle_diff2_matrix(n: usize) -> DMatrix<f64> {
    assert!(n % 2 == 0);
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let nf = n as f64;
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            -nf * nf / 12.0 - 1.0 / 6.0
        } else {
            let d = j as isize - k as isize;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let s = (0.5 * h * d as f64).sin();
            -sign / (2.0 * s * s)
        }
    })
}

/// Real Fourier coefficients (a_0, a_m, b_m) of nodal values on the uniform
/// circle grid.
pub fn circle_fourier_coeffs(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let half = n / 2;
    let mut a = vec![0.0; half + 1];
    let mut b = vec![0.0; half + 1];
    for m in 0..=half {
        let mut ca = 0.0;
        let mut cb = 0.0;
        for (k, &v) in values.iter().enumerate() {
            let t = 2.0 * std::f64::consts::PI * (m * k) as f64 / n as f64;
            ca += v * t.cos();
            cb += v * t.sin();
        }
        a[m] = 2.0 * ca / n as f64;
        b[m] = 2.0 * cb / n as f64;
    }
    (a, b)
}

/// Evaluate the trigonometric interpolant with coefficients from
/// `circle_fourier_coeffs` at angle `theta`.
pub fn circle_fourier_eval(coeffs: &(Vec<f64>, Vec<f64>), theta: f64, n: usize) -> f64 {
    let (a, b) = coeffs;
    let half = n / 2;
    let mut sum = 0.5 * a[0];
    for m in 1..half {
        sum += a[m] * (m as f64 * theta).cos() + b[m] * (m as f64 * theta).sin();
    }
    // Nyquist mode carries half weight on an even grid.
    sum += 0.5 * a[half] * (half as f64 * theta).cos();
    sum
}
