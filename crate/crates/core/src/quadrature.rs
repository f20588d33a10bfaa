//! Gauss-Legendre rules.

use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `n`-point Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Newton from the Tricomi initial guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        QuadratureRule { nodes, weights }
    }

    /// Gauss-Legendre rule mapped onto `[a, b]`.
    pub fn on_interval(n: usize, a: f64, b: f64) -> Self {
        Self::gauss_legendre(n).mapped(a, b)
    }

    /// Affine image of a rule on `[-1, 1]`.
    pub fn mapped(&self, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        QuadratureRule {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| half * w).collect(),
        }
    }

    /// `panels` equal panels on `[a, b]`, `order` nodes each.
    pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let base = Self::gauss_legendre(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            let panel = base.mapped(lo, lo + width);
            nodes.extend(panel.nodes);
            weights.extend(panel.weights);
        }
        QuadratureRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let rule = QuadratureRule::gauss_legendre(n);
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 2.0 / (deg as f64) } else { 0.0 };
            // x^(2n-2) is even: integral 2/(2n-1)
            let got = rule.integrate(|x| x.powi(deg as i32 - 1));
            assert!((got - exact).abs() < 1e-13, "n={n}: {got} vs {exact}");
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let rule = QuadratureRule::gauss_legendre(7);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(rule.nodes[3], 0.0);
        assert!((rule.nodes[0] + rule.nodes[6]).abs() < 1e-16);
    }

    #[test]
    fn large_orders_stay_accurate() {
        let rule = QuadratureRule::on_interval(600, 0.0, 1.0);
        let got = rule.integrate(|x| (40.0 * x).cos());
        assert!((got - (40.0f64).sin() / 40.0).abs() < 1e-14);
    }

    #[test]
    fn composite_integrates_oscillation() {
        let rule = QuadratureRule::composite(-50.0, 50.0, 100, 16);
        let got = rule.integrate(|x| (3.0 * x).cos());
        assert!((got - 2.0 * (150.0f64).sin() / 3.0).abs() < 1e-12);
    }
}
