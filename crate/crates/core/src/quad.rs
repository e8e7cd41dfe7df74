//! One-dimensional quadrature building blocks shared by the sphere grids,
//! the radial laws and the Euclidean box integrators.

/// A one-dimensional quadrature rule: nodes and positive weights.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Integrate `f` against the rule.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], found by Newton iteration on
/// the Legendre recurrence.  Nodes are symmetrized so that
/// `x[i] == -x[n-1-i]` holds exactly.
pub fn gauss_legendre(n: usize) -> Rule1d {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess, then Newton.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule1d { nodes, weights }
}

/// Legendre polynomial P_n and its derivative at x, by the three-term
/// recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P_n' from the standard identity (1-x^2) P_n' = n (P_{n-1} - x P_n).
    let dp = n as f64 * (p0 - x * p1) / (1.0 - x * x);
    (p1, dp)
}

/// Map a [-1,1] rule to [a, b].
pub fn scaled_to(rule: &Rule1d, a: f64, b: f64) -> Rule1d {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    Rule1d {
        nodes: rule.nodes.iter().map(|&x| mid + half * x).collect(),
        weights: rule.weights.iter().map(|&w| w * half).collect(),
    }
}

/// Composite Gauss rule over the panels defined by `breaks` (ascending).
pub fn composite(points_per_panel: usize, breaks: &[f64]) -> Rule1d {
    assert!(breaks.len() >= 2);
    let base = gauss_legendre(points_per_panel);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        let panel = scaled_to(&base, w[0], w[1]);
        nodes.extend(panel.nodes);
        weights.extend(panel.weights);
    }
    Rule1d { nodes, weights }
}

/// Panels on [0, upper] graded geometrically towards 0, so integrands with an
/// algebraic kink at the origin are still resolved.
pub fn graded_breaks(upper: f64, levels: usize) -> Vec<f64> {
    assert!(upper > 0.0);
    let mut breaks = Vec::with_capacity(levels + 2);
    breaks.push(0.0);
    for k in (0..=levels).rev() {
        breaks.push(upper * 0.5_f64.powi(k as i32));
    }
    breaks
}

/// Composite rule for `\int_0^upper f`, graded towards the origin.
pub fn graded_rule(upper: f64, levels: usize, points_per_panel: usize) -> Rule1d {
    composite(points_per_panel, &graded_breaks(upper, levels))
}

/// Rule for `\int_0^upper y^gamma f(y) dy` with `f` smooth and
/// `gamma > -1`.  The power-law factor is absorbed into the weights through
/// the substitution `y = u^m`, which removes the endpoint singularity.
pub fn power_weighted_rule(upper: f64, gamma: f64, points: usize) -> Rule1d {
    assert!(gamma > -1.0, "integrable singularity required");
    // Choose m so u^{m(gamma+1)-1} is at least linear at u = 0.
    let m = (2.0 / (gamma + 1.0)).ceil().max(1.0);
    let base = composite(16, &uniform_breaks(0.0, upper.powf(1.0 / m), points.div_ceil(16)));
    let mut nodes = Vec::with_capacity(base.len());
    let mut weights = Vec::with_capacity(base.len());
    for (&u, &w) in base.nodes.iter().zip(&base.weights) {
        if u <= 0.0 {
            continue;
        }
        let y = u.powf(m);
        nodes.push(y);
        weights.push(w * m * u.powf(m - 1.0) * y.powf(gamma));
    }
    Rule1d { nodes, weights }
}

pub fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let panels = panels.max(1);
    (0..=panels)
        .map(|k| a + (b - a) * k as f64 / panels as f64)
        .collect()
}

/// Gamma function. Thin wrapper so callers do not depend on statrs directly.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Richardson extrapolation of `f(eps)` to `eps -> 0`, assuming an O(eps^2)
/// leading error term.
pub fn richardson_eps(f: impl Fn(f64) -> f64, eps: f64) -> f64 {
    (4.0 * f(0.5 * eps) - f(eps)) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(12);
        // exact for degree <= 23
        for deg in 0..=23usize {
            let got = rule.integrate(|x| x.powi(deg as i32));
            let want = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            assert!(
                (got - want).abs() < 1e-13,
                "degree {deg}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn nodes_are_symmetric() {
        for n in [4usize, 9, 16, 33] {
            let rule = gauss_legendre(n);
            for i in 0..n {
                assert_eq!(rule.nodes[i], -rule.nodes[n - 1 - i]);
            }
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn graded_rule_resolves_sqrt_kink() {
        let rule = graded_rule(1.0, 40, 16);
        let got = rule.integrate(|x| x.sqrt());
        assert!((got - 2.0 / 3.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn power_weighted_rule_handles_inverse_sqrt() {
        // \int_0^1 y^{-1/2} e^{-y} dy = sqrt(pi) erf(1)
        let rule = power_weighted_rule(1.0, -0.5, 400);
        let got = rule.integrate(|y| (-y).exp());
        let want = std::f64::consts::PI.sqrt() * erf_ref(1.0);
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }

    // Series reference for erf, good to ~1e-15 on [0, 1].
    fn erf_ref(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..60 {
            let nf = n as f64;
            term *= -x * x / nf;
            sum += term / (2.0 * nf + 1.0);
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn gamma_matches_quadrature_oracle() {
        // \int_0^\infty t^{m-1} e^{-t} dt: power-weighted rule on [0,1]
        // absorbs the t^{m-1} factor, plain panels handle the tail.
        for &m in &[0.5, 1.0, 1.7, 3.0, 4.25] {
            let head = power_weighted_rule(1.0, m - 1.0, 600);
            let tail = composite(
                24,
                &(0..=120).map(|k| 1.0 + 0.5 * k as f64).collect::<Vec<_>>(),
            );
            let got = head.integrate(|t| (-t).exp())
                + tail.integrate(|t| t.powf(m - 1.0) * (-t).exp());
            let want = gamma(m);
            assert!(
                ((got - want) / want).abs() < 1e-12,
                "m={m}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn richardson_removes_quadratic_error() {
        let f = |eps: f64| 3.0 + 2.0 * eps * eps + eps * eps * eps * eps;
        let got = richardson_eps(f, 0.1);
        assert!((got - 3.0).abs() < 1e-4);
    }
}
