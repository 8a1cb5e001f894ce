//! Quadrature on the standard simplex in barycentric coordinates.
//!
//! Weights are normalized to sum to one, so `Σ wᵢ f(λᵢ)` approximates the
//! mean of `f`; multiply by the simplex volume for the integral.

/// Nodes (barycentric, `n+1` entries each) and normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `Σ wᵢ f(λᵢ)`.
    pub fn mean(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Grundmann–Möller rule on the `n`-simplex, exact for polynomials of degree
/// `2s+1` where `s = ⌊degree/2⌋`.
pub fn grundmann_moller(n: usize, degree: usize) -> Rule {
    let s = degree / 2;
    let d = 2 * s + 1;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=s {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let denom = (d + n - 2 * i) as f64;
        let w = sign * 2f64.powi(-(2 * s as i32)) * denom.powi(d as i32)
            / (factorial(i) * factorial(d + n - i))
            * factorial(n);
        let mut comps = Vec::new();
        compositions(s - i, n + 1, &mut Vec::new(), &mut comps);
        for beta in comps {
            nodes.push(beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect());
            weights.push(w);
        }
    }
    Rule { nodes, weights }
}

/// The symmetric `n+1`-point rule of degree 2.
pub fn degree_two(n: usize) -> Rule {
    let m = (n + 2) as f64;
    let b = (m - m.sqrt()) / ((n + 1) as f64 * m);
    let a = 1.0 - n as f64 * b;
    let nodes = (0..=n)
        .map(|i| (0..=n).map(|j| if i == j { a } else { b }).collect())
        .collect();
    Rule {
        nodes,
        weights: vec![1.0 / (n + 1) as f64; n + 1],
    }
}
