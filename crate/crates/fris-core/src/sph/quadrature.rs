//! Spherical quadrature: Gauss–Legendre in cos θ, uniform trapezoid in φ.
//!
//! Weights absorb the `sin θ` surface element, so `Σ w_n f(θ_n, φ_n)`
//! approximates `∫∫ f(θ, φ) sinθ dθ dφ` and the weights sum to `4π`.

use std::f64::consts::PI;

/// Default polar resolution; exact for polynomial integrands in cosθ up to
/// degree 127.
pub const DEFAULT_N_THETA: usize = 64;
/// Default azimuthal resolution; exact for Fourier modes `e^{jmφ}`, `|m| < 128`.
pub const DEFAULT_N_PHI: usize = 128;

/// One quadrature node with its surface weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureNode {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

/// Gauss–Legendre nodes and weights on `(-1, 1)`.
///
/// Newton iteration on `P_n` with the usual Chebyshev initial guesses;
/// converges to machine precision in a handful of steps.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node required");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(z) and P_{n-1}(z) by the three-term recurrence.
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z_prev = z;
            z -= p1 / dp;
            if (z - z_prev).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Full spherical grid of `n_theta × n_phi` nodes, θ-major.
///
/// Requires `n_theta ≥ 2` and `n_phi ≥ 2`.
pub fn quadrature_grid(n_theta: usize, n_phi: usize) -> Vec<QuadratureNode> {
    assert!(n_theta >= 2 && n_phi >= 2, "grid must be at least 2 x 2");
    let (x, w) = gauss_legendre(n_theta);
    let d_phi = 2.0 * PI / n_phi as f64;
    let mut grid = Vec::with_capacity(n_theta * n_phi);
    for (xi, wi) in x.iter().zip(&w) {
        let theta = xi.acos();
        for i_phi in 0..n_phi {
            grid.push(QuadratureNode {
                theta,
                phi: i_phi as f64 * d_phi,
                weight: wi * d_phi,
            });
        }
    }
    grid
}

/// The `64 × 128` grid used for normalization and acceptance checks.
pub fn default_grid() -> Vec<QuadratureNode> {
    quadrature_grid(DEFAULT_N_THETA, DEFAULT_N_PHI)
}
