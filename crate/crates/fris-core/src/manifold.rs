//! Riemannian conjugate gradient on a product of spheres.
//!
//! Points are lists of complex blocks, one per surface element, each
//! constrained to a fixed squared norm (4π for coefficient banks, 1 for
//! unit-modulus reflection phases). The tangent space at `x` consists of
//! blocks `d_m` with `Re⟨x_m, d_m⟩ = 0`; projection, retraction and the
//! Polak–Ribière update all act blockwise.
//!
//! [`rcg_maximize`] is an ascent: directions mix the projected previous
//! direction with the Riemannian gradient, the step comes from Armijo
//! backtracking, and the Polak–Ribière coefficient is clamped at zero so a
//! bad conjugate direction falls back to steepest ascent.

use crate::error::{Error, Result};
use nalgebra::DVector;
use num_complex::Complex64;

/// One point or tangent vector: a block per element.
pub type Blocks = Vec<DVector<Complex64>>;

/// `Σ_m Re⟨a_m, b_m⟩` under the real trace inner product.
pub fn real_inner(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dotc(y).re).sum()
}

/// `Σ_m ‖a_m‖²`.
pub fn norm_squared(a: &Blocks) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum()
}

/// Project `dir` onto the tangent space at `point`:
/// `d_m − x_m · Re⟨x_m, d_m⟩ / block_norm_sq`.
pub fn tangent_project(point: &Blocks, dir: &Blocks, block_norm_sq: f64) -> Blocks {
    point
        .iter()
        .zip(dir)
        .map(|(x, d)| {
            let radial = x.dotc(d).re / block_norm_sq;
            d - x * Complex64::new(radial, 0.0)
        })
        .collect()
}

/// Retraction: renormalize each updated block back to `√block_norm_sq`.
///
/// Returns the new point plus a flag marking any block whose update had zero
/// norm (that block is left unchanged).
pub fn retract(point: &Blocks, step: f64, dir: &Blocks, block_norm_sq: f64) -> (Blocks, bool) {
    let mut degenerate = false;
    let radius = block_norm_sq.sqrt();
    let next = point
        .iter()
        .zip(dir)
        .map(|(x, d)| {
            let moved = x + d * Complex64::new(step, 0.0);
            let norm = moved.norm();
            if norm <= f64::MIN_POSITIVE {
                degenerate = true;
                x.clone()
            } else {
                moved * Complex64::new(radius / norm, 0.0)
            }
        })
        .collect();
    (next, degenerate)
}

/// Polak–Ribière coefficient
/// `max(0, Re⟨g⁺, g⁺ − 𝒫g⟩ / ‖g‖²)`, where `𝒫g` is the previous gradient
/// projected at the current point and `‖g‖²` the previous gradient norm.
pub fn polak_ribiere(rgrad_new: &Blocks, rgrad_old_projected: &Blocks, old_norm_sq: f64) -> f64 {
    if old_norm_sq <= 0.0 {
        return 0.0;
    }
    let diff: Blocks = rgrad_new
        .iter()
        .zip(rgrad_old_projected)
        .map(|(g, p)| g - p)
        .collect();
    (real_inner(rgrad_new, &diff) / old_norm_sq).max(0.0)
}

/// Options for [`rcg_maximize`].
#[derive(Debug, Clone, Copy)]
pub struct RcgOptions {
    pub block_norm_sq: f64,
    /// Stop when the objective improves by less than this.
    pub tol: f64,
    pub max_iters: usize,
    pub armijo_c1: f64,
    pub armijo_contraction: f64,
    pub armijo_max_backtracks: usize,
}

impl Default for RcgOptions {
    fn default() -> Self {
        Self {
            block_norm_sq: 4.0 * std::f64::consts::PI,
            tol: 1e-6,
            max_iters: 200,
            armijo_c1: 1e-4,
            armijo_contraction: 0.5,
            armijo_max_backtracks: 30,
        }
    }
}

/// One line of the convergence trace.
#[derive(Debug, Clone, Copy)]
pub struct RcgIterate {
    pub iteration: usize,
    pub objective: f64,
    /// Accepted Armijo step (zero on the initial entry).
    pub step: f64,
    pub grad_norm: f64,
    /// Directional slope `Re⟨rgrad, 𝒟⟩` of the accepted search (zero on the
    /// initial entry); accepted steps satisfy
    /// `f_new ≥ f_old + c₁ · step · slope`.
    pub slope: f64,
}

/// Result of an ascent run.
#[derive(Debug, Clone)]
pub struct RcgOutcome {
    pub point: Blocks,
    pub trace: Vec<RcgIterate>,
    pub converged: bool,
}

// Gradients below this norm count as stationary.
const STATIONARY_GRAD: f64 = 1e-12;

/// Maximize `objective` over the product of spheres starting from `x0`.
///
/// `egrad` must return the Euclidean gradient under the convention that
/// `x + step · egrad` increases the objective to first order, i.e. twice the
/// conjugate Wirtinger derivative for a real objective.
pub fn rcg_maximize(
    x0: Blocks,
    opts: &RcgOptions,
    objective: impl Fn(&Blocks) -> f64,
    egrad: impl Fn(&Blocks) -> Blocks,
) -> Result<RcgOutcome> {
    let mut point = x0;
    let mut value = objective(&point);
    if !value.is_finite() {
        return Err(Error::Solver(format!(
            "objective is not finite at the starting point ({value})"
        )));
    }

    let mut rgrad = tangent_project(&point, &egrad(&point), opts.block_norm_sq);
    let mut grad_norm_sq = norm_squared(&rgrad);
    let mut direction = rgrad.clone();
    let mut trace = vec![RcgIterate {
        iteration: 0,
        objective: value,
        step: 0.0,
        grad_norm: grad_norm_sq.sqrt(),
        slope: 0.0,
    }];

    if grad_norm_sq.sqrt() <= STATIONARY_GRAD {
        return Ok(RcgOutcome {
            point,
            trace,
            converged: true,
        });
    }

    let mut converged = false;
    for iteration in 1..=opts.max_iters {
        // Ensure an ascent direction; restart on a failed conjugate mix.
        let mut slope = real_inner(&rgrad, &direction);
        if slope <= 0.0 {
            direction = rgrad.clone();
            slope = grad_norm_sq;
        }

        let mut accepted = None;
        let mut steepest_retry_done = false;
        loop {
            let dir_norm = norm_squared(&direction).sqrt();
            if dir_norm <= STATIONARY_GRAD {
                break;
            }
            let mut step = 1.0 / dir_norm;
            for _ in 0..opts.armijo_max_backtracks {
                let (candidate, _) = retract(&point, step, &direction, opts.block_norm_sq);
                let candidate_value = objective(&candidate);
                if !candidate_value.is_finite() {
                    return Err(Error::Solver(
                        "objective became non-finite during line search".into(),
                    ));
                }
                if candidate_value >= value + opts.armijo_c1 * step * slope {
                    accepted = Some((candidate, candidate_value, step));
                    break;
                }
                step *= opts.armijo_contraction;
            }
            if accepted.is_some() || steepest_retry_done {
                break;
            }
            // The conjugate direction failed the line search; retry once
            // along the plain Riemannian gradient.
            direction = rgrad.clone();
            slope = grad_norm_sq;
            steepest_retry_done = true;
        }

        let Some((next_point, next_value, taken)) = accepted else {
            // No acceptable step even along steepest ascent: numerically
            // stationary.
            converged = true;
            break;
        };

        let gain = next_value - value;
        point = next_point;
        value = next_value;

        let rgrad_next = tangent_project(&point, &egrad(&point), opts.block_norm_sq);
        let next_norm_sq = norm_squared(&rgrad_next);
        trace.push(RcgIterate {
            iteration,
            objective: value,
            step: taken,
            grad_norm: next_norm_sq.sqrt(),
            slope,
        });

        if gain.abs() <= opts.tol {
            converged = true;
            break;
        }
        if next_norm_sq.sqrt() <= STATIONARY_GRAD {
            converged = true;
            break;
        }

        // Transport by projecting at the new point.
        let old_projected = tangent_project(&point, &rgrad, opts.block_norm_sq);
        let beta = polak_ribiere(&rgrad_next, &old_projected, grad_norm_sq);
        let dir_projected = tangent_project(&point, &direction, opts.block_norm_sq);
        direction = rgrad_next
            .iter()
            .zip(&dir_projected)
            .map(|(g, d)| g + d * Complex64::new(beta, 0.0))
            .collect();
        rgrad = rgrad_next;
        grad_norm_sq = next_norm_sq;
    }

    Ok(RcgOutcome {
        point,
        trace,
        converged,
    })
}
