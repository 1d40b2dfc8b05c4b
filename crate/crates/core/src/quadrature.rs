//! Gauss–Legendre rules and the graded composite rules built from them.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Panel edges on `[a, b]` refined geometrically toward `a`: the first panel
/// is `[a, a + (b − a)·ratio^levels]`, each next one grows by `1/ratio`.
pub fn graded_edges_left(a: f64, b: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let mut edges = vec![a];
    for j in (0..levels).rev() {
        edges.push(a + (b - a) * ratio.powi(j as i32 + 1));
    }
    edges.push(b);
    edges
}

/// Panel edges refined geometrically toward both ends of `[a, b]`.
pub fn graded_edges_both(a: f64, b: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let mut left = graded_edges_left(a, mid, ratio, levels);
    let right = graded_edges_left(b, mid, ratio, levels);
    left.pop();
    left.extend(right.into_iter().rev());
    left
}

/// Composite rule over consecutive panels given by `edges`.
pub fn composite<F: FnMut(f64) -> f64>(rule: &GaussLegendre, edges: &[f64], mut f: F) -> f64 {
    edges
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], &mut f))
        .sum()
}

/// Adaptive Gauss–Legendre: each panel is accepted when an `n`-point and a
/// `2n`-point rule agree to `tol` relative to the running total, else bisected.
pub fn adaptive<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, n: usize) -> Result<f64> {
    let coarse = GaussLegendre::new(n);
    let fine = GaussLegendre::new(2 * n);
    let mut f = f;
    let mut stack = vec![(a, b, 0usize)];
    let mut total: f64 = 0.0;
    const MAX_DEPTH: usize = 60;
    while let Some((lo, hi, depth)) = stack.pop() {
        let c = coarse.integrate(lo, hi, &mut f);
        let q = fine.integrate(lo, hi, &mut f);
        let e = (q - c).abs();
        let scale = (b - a).abs().max(f64::MIN_POSITIVE);
        let local_tol = tol * ((hi - lo).abs() / scale).max(1e-3) * q.abs().max(total.abs()).max(1e-300);
        if e <= local_tol || e < 1e-300 {
            total += q;
        } else if depth >= MAX_DEPTH {
            return Err(Error::Quadrature { estimate: e, tolerance: local_tol });
        } else {
            let m = 0.5 * (lo + hi);
            stack.push((m, hi, depth + 1));
            stack.push((lo, m, depth + 1));
        }
    }
    Ok(total)
}
