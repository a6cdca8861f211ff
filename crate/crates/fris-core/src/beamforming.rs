//! Active beamforming for a fixed pattern bank.
//!
//! The weighted sum rate `Σ ε_k log2(1 + SINR_k)` is maximized under the
//! total power constraint by the MMSE reformulation: closed-form auxiliaries
//! `(D_k, u_k)` make a concave surrogate tight at the current beams, the
//! surrogate collapses to a quadratic model in the beams, and its optimum for
//! a given dual variable `υ` is `w_k(υ) = (F + υI)† f_k`. Since the emitted
//! power `P(υ)` is nonincreasing in `υ`, the power constraint is met by
//! bisection on the dual.
//!
//! A solve is sequential; independent solves are freely parallel since all
//! inputs are immutable.

use crate::channel::EffectiveChannels;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::LN_2;

/// Per-UE composite channels `c_k = H^H h_k`, so the signal seen by UE `k`
/// from beam `w` is `c_k^H w`.
#[derive(Debug, Clone)]
pub struct UserChannels {
    pub composite: Vec<DVector<Complex64>>,
}

impl UserChannels {
    pub fn from_effective(eff: &EffectiveChannels) -> Self {
        let composite = eff.h_ru.iter().map(|h| eff.h_br.adjoint() * h).collect();
        Self { composite }
    }

    pub fn num_ues(&self) -> usize {
        self.composite.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.composite.first().map_or(0, |c| c.len())
    }
}

/// A set of per-UE beams plus the emitted power `Σ ‖w_k‖²`.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    pub vectors: Vec<DVector<Complex64>>,
    pub total_power: f64,
}

impl BeamformerSet {
    pub fn from_vectors(vectors: Vec<DVector<Complex64>>) -> Self {
        let total_power = vectors.iter().map(|w| w.norm_squared()).sum();
        Self {
            vectors,
            total_power,
        }
    }
}

/// Per-UE signal/interference terms shared by the rate and MMSE updates.
fn link_products(
    channels: &UserChannels,
    beams: &[DVector<Complex64>],
    k: usize,
) -> (Complex64, f64) {
    let c = &channels.composite[k];
    let mut total = 0.0;
    let mut signal = Complex64::new(0.0, 0.0);
    for (j, w) in beams.iter().enumerate() {
        let s = c.dotc(w);
        total += s.norm_sqr();
        if j == k {
            signal = s;
        }
    }
    (signal, total)
}

/// `Σ ε_k log2(1 + SINR_k)` with
/// `SINR_k = |c_k^H w_k|² / (Σ_{j≠k} |c_k^H w_j|² + σ_k²)`.
pub fn weighted_sum_rate(
    channels: &UserChannels,
    beams: &[DVector<Complex64>],
    weights: &[f64],
    noise: &[f64],
) -> f64 {
    let mut rate = 0.0;
    for k in 0..channels.num_ues() {
        let (signal, total) = link_products(channels, beams, k);
        let interference = total - signal.norm_sqr() + noise[k];
        rate += weights[k] * (1.0 + signal.norm_sqr() / interference).log2();
    }
    rate
}

/// Closed-form MMSE auxiliaries: `D_k = 1/E_k` and the receive scalar `u_k`.
#[derive(Debug, Clone)]
pub struct MmseAuxiliaries {
    /// `D_k > 0`, the inverse of the minimal mean-square error.
    pub mse_weights: Vec<f64>,
    /// `u_k`, the scalar MMSE receive coefficients.
    pub receivers: Vec<Complex64>,
}

/// Mean-square error `E_k` for arbitrary `(u, w)`:
/// `|u|²(Σ_{j≠k}|c^H w_j|² + σ²) + |u^* c^H w_k − 1|²`.
fn mse(
    channels: &UserChannels,
    beams: &[DVector<Complex64>],
    noise: &[f64],
    k: usize,
    u: Complex64,
) -> f64 {
    let (signal, total) = link_products(channels, beams, k);
    let interference = total - signal.norm_sqr() + noise[k];
    u.norm_sqr() * interference + (u.conj() * signal - Complex64::new(1.0, 0.0)).norm_sqr()
}

// E_k is floored before inversion; unreachable in practice with σ² > 0.
const MSE_FLOOR: f64 = 1e-300;

/// Optimal auxiliaries at the current beams:
/// `u_k = c_k^H w_k / (Σ_j |c_k^H w_j|² + σ²)`, `D_k = E_k⁻¹`.
pub fn mmse_update(
    channels: &UserChannels,
    beams: &[DVector<Complex64>],
    noise: &[f64],
) -> MmseAuxiliaries {
    let mut mse_weights = Vec::with_capacity(channels.num_ues());
    let mut receivers = Vec::with_capacity(channels.num_ues());
    for k in 0..channels.num_ues() {
        let (signal, total) = link_products(channels, beams, k);
        let u = signal / (total + noise[k]);
        let e = mse(channels, beams, noise, k, u).max(MSE_FLOOR);
        mse_weights.push(1.0 / e);
        receivers.push(u);
    }
    MmseAuxiliaries {
        mse_weights,
        receivers,
    }
}

/// The surrogate `R̃_k = (ln D_k − D_k E_k(u_k, w) + 1)/ln 2`, which equals
/// the true rate when the auxiliaries are optimal for `w`.
pub fn surrogate_rate(
    channels: &UserChannels,
    beams: &[DVector<Complex64>],
    aux: &MmseAuxiliaries,
    noise: &[f64],
    k: usize,
) -> f64 {
    let e = mse(channels, beams, noise, k, aux.receivers[k]);
    (aux.mse_weights[k].ln() - aux.mse_weights[k] * e + 1.0) / LN_2
}

/// Quadratic model of the surrogate in the beams:
/// maximize `Σ_k −w_k^H F w_k + 2 Re(f_k^H w_k) + G_k`.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    /// `f_k = (ε_k D_k / ln2) · c_k · u_k`.
    pub linear: Vec<DVector<Complex64>>,
    /// `F = Σ_j f_j f_j^H · ln2/(ε_j D_j)`, Hermitian PSD.
    pub quadratic: DMatrix<Complex64>,
    /// `G_k = ε_k (ln D_k − D_k(1 + σ_k²|u_k|²)) / ln2`.
    pub constants: Vec<f64>,
}

impl QuadraticModel {
    pub fn num_antennas(&self) -> usize {
        self.quadratic.nrows()
    }

    /// Largest Hermitian defect `|F − F^H|` entry, for validation.
    pub fn hermitian_defect(&self) -> f64 {
        let diff = &self.quadratic - self.quadratic.adjoint();
        diff.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Assemble the quadratic model from the channels and MMSE auxiliaries.
pub fn build_quadratic(
    channels: &UserChannels,
    aux: &MmseAuxiliaries,
    weights: &[f64],
    noise: &[f64],
) -> QuadraticModel {
    let n_t = channels.num_antennas();
    let mut linear = Vec::with_capacity(channels.num_ues());
    let mut quadratic = DMatrix::<Complex64>::zeros(n_t, n_t);
    let mut constants = Vec::with_capacity(channels.num_ues());
    for k in 0..channels.num_ues() {
        let d = aux.mse_weights[k];
        let u = aux.receivers[k];
        let scale = weights[k] * d / LN_2;
        let f_k = &channels.composite[k] * (Complex64::new(scale, 0.0) * u);
        // F_k = f_k f_k^H ln2 / (ε_k D_k)
        let back = LN_2 / (weights[k] * d);
        for row in 0..n_t {
            for col in 0..n_t {
                quadratic[(row, col)] += f_k[row] * f_k[col].conj() * back;
            }
        }
        constants.push(weights[k] * (d.ln() - d * (1.0 + noise[k] * u.norm_sqr())) / LN_2);
        linear.push(f_k);
    }
    // Clean off accumulated asymmetry noise.
    let hermitian = (quadratic.clone() + quadratic.adjoint()) * Complex64::new(0.5, 0.0);
    QuadraticModel {
        linear,
        quadratic: hermitian,
        constants,
    }
}

// Relative eigenvalue cutoff of the pseudo-inverse.
const PINV_CUTOFF: f64 = 1e-12;

struct ShiftedSolver {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl ShiftedSolver {
    fn new(hermitian: DMatrix<Complex64>) -> Self {
        let eig = nalgebra::SymmetricEigen::new(hermitian);
        Self {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    fn cutoff(&self, shift: f64) -> f64 {
        let max_shifted = self
            .eigenvalues
            .iter()
            .map(|l| l + shift)
            .fold(f64::NEG_INFINITY, f64::max);
        PINV_CUTOFF * max_shifted.max(f64::MIN_POSITIVE)
    }

    /// `(F + shift·I)† rhs`, discarding modes below the relative cutoff.
    fn solve(&self, rhs: &DVector<Complex64>, shift: f64) -> DVector<Complex64> {
        let cut = self.cutoff(shift);
        let mut out = DVector::zeros(rhs.len());
        for (i, lambda) in self.eigenvalues.iter().enumerate() {
            let shifted = lambda + shift;
            if shifted > cut {
                let q = self.eigenvectors.column(i);
                let coef = q.dotc(rhs) / Complex64::new(shifted, 0.0);
                out.axpy(coef, &q.clone_owned(), Complex64::new(1.0, 0.0));
            }
        }
        out
    }

    /// `Σ_k ‖(F + shift·I)† f_k‖²` using cached projections.
    fn emitted_power(&self, projections: &[DVector<Complex64>], shift: f64) -> f64 {
        let cut = self.cutoff(shift);
        let mut power = 0.0;
        for z in projections {
            for (i, lambda) in self.eigenvalues.iter().enumerate() {
                let shifted = lambda + shift;
                if shifted > cut {
                    power += z[i].norm_sqr() / (shifted * shifted);
                }
            }
        }
        power
    }
}

/// Solve `(F + υI) w = f` by Hermitian eigendecomposition, falling back to
/// the pseudo-inverse when the shifted matrix is singular.
pub fn solve_w(
    quadratic: &DMatrix<Complex64>,
    linear: &DVector<Complex64>,
    dual: f64,
) -> DVector<Complex64> {
    ShiftedSolver::new(quadratic.clone()).solve(linear, dual)
}

/// Outcome of the dual bisection.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// The dual variable the returned beams correspond to.
    pub dual: f64,
    pub beams: BeamformerSet,
    /// Sampled `(υ, P(υ))` pairs for diagnostics.
    pub trace: Vec<(f64, f64)>,
}

// The bisection keeps tightening past the requested bracket until the primal
// power gap is negligible, so a binding constraint is met to ~1e-11 relative.
const PRIMAL_GAP_REL: f64 = 1e-11;
const MAX_BISECTION_ITERS: usize = 500;

/// Maximize the quadratic model subject to `Σ ‖w_k‖² ≤ p_max`.
///
/// If the unconstrained solution (`υ = 0`) already fits the budget it is
/// returned as is; otherwise the dual is bracketed by doubling and bisected
/// until the bracket is below `tol` and the constraint is met tightly. The
/// returned beams always satisfy the budget.
pub fn dual_bisection(model: &QuadraticModel, p_max: f64, tol: f64) -> Result<DualSolution> {
    if p_max <= 0.0 {
        return Err(Error::Domain("power budget must be positive".into()));
    }
    if model
        .linear
        .iter()
        .any(|f| f.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()))
        || model
            .quadratic
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        return Err(Error::Solver(
            "quadratic model has non-finite entries".into(),
        ));
    }

    let solver = ShiftedSolver::new(model.quadratic.clone());
    let projections: Vec<DVector<Complex64>> = model
        .linear
        .iter()
        .map(|f| solver.eigenvectors.adjoint() * f)
        .collect();

    let mut trace = Vec::new();
    let p0 = solver.emitted_power(&projections, 0.0);
    trace.push((0.0, p0));
    if p0 <= p_max {
        let beams = BeamformerSet::from_vectors(
            model.linear.iter().map(|f| solver.solve(f, 0.0)).collect(),
        );
        return Ok(DualSolution {
            dual: 0.0,
            beams,
            trace,
        });
    }

    // Bracket: P(low) ≥ p_max > P(up).
    let mut low = 0.0;
    let mut up = 1.0;
    let mut p_up = solver.emitted_power(&projections, up);
    trace.push((up, p_up));
    let mut doublings = 0;
    while p_up >= p_max {
        low = up;
        up *= 2.0;
        p_up = solver.emitted_power(&projections, up);
        trace.push((up, p_up));
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Solver(
                "could not bracket the dual variable; emitted power never drops below the budget"
                    .into(),
            ));
        }
    }

    let mut iters = 0;
    loop {
        let width = up - low;
        let primal_ok = (p_max - p_up) <= PRIMAL_GAP_REL * p_max;
        if (width <= tol && primal_ok) || width <= f64::EPSILON * up || iters >= MAX_BISECTION_ITERS
        {
            break;
        }
        let mid = 0.5 * (low + up);
        let p_mid = solver.emitted_power(&projections, mid);
        if p_mid >= p_max {
            low = mid;
        } else {
            up = mid;
            p_up = p_mid;
        }
        iters += 1;
    }
    trace.push((up, p_up));

    let beams =
        BeamformerSet::from_vectors(model.linear.iter().map(|f| solver.solve(f, up)).collect());
    Ok(DualSolution {
        dual: up,
        beams,
        trace,
    })
}
