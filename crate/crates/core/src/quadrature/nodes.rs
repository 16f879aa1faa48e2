//! Legendre-Gauss-Radau and Legendre-Gauss-Lobatto nodes and weights.
//!
//! Interior nodes are eigenvalues of the Jacobi matrix of the matching
//! Jacobi weight `(1-x)^a (1+x)^b`, polished with two Newton steps on the
//! defining Legendre expression.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::QuadratureError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    /// Radau points including -1 and excluding +1.
    Lgr,
    /// Lobatto points including both endpoints.
    Lgl,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    pub kind: NodeKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Apply the rule on `[-1, 1]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        let d2 = d0 + (2.0 * kf - 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// Zeros of the Jacobi polynomial of degree `m` for weight
/// `(1-x)^alpha (1+x)^beta`, ascending.
fn jacobi_zeros(m: usize, alpha: f64, beta: f64) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    let ab = alpha + beta;
    let mut t = DMatrix::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        t[(k, k)] = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        if k + 1 < m {
            let j = kf + 1.0;
            let num = 4.0 * j * (j + alpha) * (j + beta) * (j + ab);
            let den = (2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0);
            let b = (num / den).sqrt();
            t[(k, k + 1)] = b;
            t[(k + 1, k)] = b;
        }
    }
    let mut z: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    z
}

/// `n` Radau points: the roots of `P_{n-1} + P_n`.
pub fn lgr_nodes(n: usize) -> Result<NodeSet, QuadratureError> {
    if n == 0 {
        return Err(QuadratureError::InvalidCount { kind: "LGR", count: n, min: 1 });
    }
    let nf = n as f64;
    let mut nodes = vec![-1.0];
    for mut x in jacobi_zeros(n - 1, 0.0, 1.0) {
        for _ in 0..2 {
            let (pa, da) = legendre(n - 1, x);
            let (pb, db) = legendre(n, x);
            x -= (pa + pb) / (da + db);
        }
        nodes.push(x);
    }
    let weights = nodes
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            if j == 0 {
                2.0 / (nf * nf)
            } else {
                let (p, _) = legendre(n - 1, x);
                (1.0 - x) / (nf * nf * p * p)
            }
        })
        .collect();
    Ok(NodeSet { kind: NodeKind::Lgr, nodes, weights })
}

/// `m` Lobatto points: `+-1` and the roots of `P'_{m-1}`.
pub fn lgl_nodes(m: usize) -> Result<NodeSet, QuadratureError> {
    if m < 2 {
        return Err(QuadratureError::InvalidCount { kind: "LGL", count: m, min: 2 });
    }
    let deg = m - 1;
    let df = deg as f64;
    let mut nodes = vec![-1.0];
    for mut x in jacobi_zeros(m - 2, 1.0, 1.0) {
        for _ in 0..2 {
            let (p, dp) = legendre(deg, x);
            // (1 - x^2) P'' = 2 x P' - n (n + 1) P
            let d2p = (2.0 * x * dp - df * (df + 1.0) * p) / (1.0 - x * x);
            x -= dp / d2p;
        }
        nodes.push(x);
    }
    nodes.push(1.0);
    // exact symmetry
    for j in 0..m / 2 {
        let s = 0.5 * (nodes[m - 1 - j] - nodes[j]);
        nodes[j] = -s;
        nodes[m - 1 - j] = s;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(deg, x);
            2.0 / (df * (df + 1.0) * p * p)
        })
        .collect();
    Ok(NodeSet { kind: NodeKind::Lgl, nodes, weights })
}
