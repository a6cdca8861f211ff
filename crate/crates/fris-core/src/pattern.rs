//! Harmonic-coefficient bank optimization on the oblique manifold
//! `{Ω : ‖ω_m‖² = 4π}` for fixed beamformers.
//!
//! The objective is the weighted sum rate evaluated through the factorized
//! channels `H = Ω^H A`, `h_k = Ω^H b_k`. Its Euclidean gradient (twice the
//! conjugate Wirtinger derivative, so that `Ω + ψ∇f` ascends) is assembled
//! blockwise from effective-channel products; the cost per UE is
//! `O(I·M·N_t)` and nothing outside the block-diagonal mask is ever formed.

use crate::beamforming;
use crate::channel::{effective_channels, AssembledChannel};
use crate::error::{Error, Result};
use crate::manifold::{self, Blocks, RcgIterate, RcgOptions};
use crate::sph::{HarmonicCoefficients, SPHERE_ENERGY};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::LN_2;

/// The nonzero blocks of the block-diagonal coefficient matrix `Ω`:
/// one length-`I` vector per element, each of squared norm `4π`.
#[derive(Debug, Clone)]
pub struct PatternBank {
    pub omega: Blocks,
}

impl PatternBank {
    /// Every element radiating the isotropic fundamental mode.
    pub fn isotropic(num_elements: usize, trunc_len: usize) -> Self {
        let omega = (0..num_elements)
            .map(|_| {
                let mut w = DVector::zeros(trunc_len);
                w[0] = Complex64::new(SPHERE_ENERGY.sqrt(), 0.0);
                w
            })
            .collect();
        Self { omega }
    }

    /// Isotropic start plus a seeded complex perturbation, renormalized onto
    /// the manifold. Breaks the symmetry of the all-isotropic point while
    /// starting essentially at the fixed-pattern baseline.
    pub fn perturbed_isotropic(
        num_elements: usize,
        trunc_len: usize,
        relative_scale: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let radius = SPHERE_ENERGY.sqrt();
        let omega = (0..num_elements)
            .map(|_| {
                let mut w = DVector::from_fn(trunc_len, |_, _| {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                        * (relative_scale * radius)
                });
                w[0] += Complex64::new(radius, 0.0);
                let norm = w.norm();
                w * Complex64::new(radius / norm, 0.0)
            })
            .collect();
        Self { omega }
    }

    pub fn num_elements(&self) -> usize {
        self.omega.len()
    }

    pub fn trunc_len(&self) -> usize {
        self.omega.first().map_or(0, |w| w.len())
    }

    /// Coefficients of one element, tagged with its index.
    pub fn element(&self, element_id: usize) -> HarmonicCoefficients {
        HarmonicCoefficients::new(self.omega[element_id].clone(), element_id)
    }

    /// Largest deviation `|‖ω_m‖² − 4π|` over the bank.
    pub fn max_energy_deviation(&self) -> f64 {
        self.omega
            .iter()
            .map(|w| (w.norm_squared() - SPHERE_ENERGY).abs())
            .fold(0.0, f64::max)
    }
}

/// A tangent vector at a bank: blocks with `Re⟨ω_m, d_m⟩ = 0`.
#[derive(Debug, Clone)]
pub struct TangentDirection {
    pub blocks: Blocks,
}

impl TangentDirection {
    /// Largest normalized tangency defect `|Re⟨d_m, ω_m⟩| / (‖d_m‖‖ω_m‖)`.
    pub fn max_tangency_defect(&self, bank: &PatternBank) -> f64 {
        self.blocks
            .iter()
            .zip(&bank.omega)
            .map(|(d, w)| {
                let scale = d.norm() * w.norm();
                if scale <= f64::MIN_POSITIVE {
                    0.0
                } else {
                    d.dotc(w).re.abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Weighted sum rate of the bank under fixed beamformers; identical to
/// [`beamforming::weighted_sum_rate`] on the induced effective channels.
pub fn objective(
    bank: &PatternBank,
    assembled: &AssembledChannel,
    beams: &[DVector<Complex64>],
    weights: &[f64],
    noise: &[f64],
) -> Result<f64> {
    let eff = effective_channels(bank, assembled)?;
    let users = beamforming::UserChannels::from_effective(&eff);
    Ok(beamforming::weighted_sum_rate(
        &users, beams, weights, noise,
    ))
}

/// Euclidean gradient of the weighted sum rate with respect to the bank.
///
/// Per UE, with `v = H^H h`, `W = Σ_j w_j w_j^H` and `W₋ = W − w_k w_k^H`:
/// the block of the gradient at element `m` is
///
/// ```text
/// (2ε/ln2) · [ (A W v)_m h_m^* + (b)_m (H W v)_m^* ] / (Σ_j |v^H w_j|² + σ²)
///          − the same with W₋ and the interference denominator.
/// ```
pub fn euclidean_grad(
    bank: &PatternBank,
    assembled: &AssembledChannel,
    beams: &[DVector<Complex64>],
    weights: &[f64],
    noise: &[f64],
) -> Result<Blocks> {
    let eff = effective_channels(bank, assembled)?;
    let num_elements = assembled.num_elements;
    let trunc_len = assembled.trunc_len;
    if beams.len() != eff.h_ru.len() || beams.len() != weights.len() || beams.len() != noise.len() {
        return Err(Error::Dimension(format!(
            "{} beams, {} UE channels, {} weights, {} noise entries",
            beams.len(),
            eff.h_ru.len(),
            weights.len(),
            noise.len()
        )));
    }

    let mut grad: Blocks = (0..num_elements)
        .map(|_| DVector::zeros(trunc_len))
        .collect();
    for (k, h_k) in eff.h_ru.iter().enumerate() {
        // v = H^H h_k, per-beam inner products s_j = v^H w_j.
        let v = eff.h_br.adjoint() * h_k;
        let s: Vec<Complex64> = beams.iter().map(|w| v.dotc(w)).collect();
        let total: f64 = s.iter().map(|x| x.norm_sqr()).sum::<f64>() + noise[k];
        let interference = total - s[k].norm_sqr();

        // W v = Σ_j w_j (w_j^H v) = Σ_j w_j s_j^*, likewise without the k-th
        // term; W itself is never formed.
        let mut wv = DVector::<Complex64>::zeros(v.len());
        for (w, s_j) in beams.iter().zip(&s) {
            wv.axpy(s_j.conj(), w, Complex64::new(1.0, 0.0));
        }
        let wv_minus = &wv - beams[k].clone() * s[k].conj();

        let q_total = &assembled.a * &wv; // A W v        (I·M)
        let q_minus = &assembled.a * &wv_minus; // A W₋ v  (I·M)
        let r_total = &eff.h_br * &wv; // H W v            (M)
        let r_minus = &eff.h_br * &wv_minus; // H W₋ v      (M)

        let scale = 2.0 * weights[k] / LN_2;
        for elem in 0..num_elements {
            let h_conj = h_k[elem].conj();
            let b_block = assembled.b[k].rows(elem * trunc_len, trunc_len);
            let q_total_block = q_total.rows(elem * trunc_len, trunc_len);
            let q_minus_block = q_minus.rows(elem * trunc_len, trunc_len);
            let g = &mut grad[elem];
            let rt = r_total[elem].conj();
            let rm = r_minus[elem].conj();
            for i in 0..trunc_len {
                let signal_term = (q_total_block[i] * h_conj + b_block[i] * rt) / total;
                let interf_term = (q_minus_block[i] * h_conj + b_block[i] * rm) / interference;
                g[i] += scale * (signal_term - interf_term);
            }
        }
    }
    Ok(grad)
}

/// Project a Euclidean gradient onto the tangent space of the bank.
pub fn riemannian_grad(egrad: &Blocks, bank: &PatternBank) -> TangentDirection {
    TangentDirection {
        blocks: manifold::tangent_project(&bank.omega, egrad, SPHERE_ENERGY),
    }
}

/// Move along a tangent direction and renormalize every block back to the
/// manifold.
pub fn retract(bank: &PatternBank, step: f64, direction: &TangentDirection) -> PatternBank {
    let (omega, _) = manifold::retract(&bank.omega, step, &direction.blocks, SPHERE_ENERGY);
    PatternBank { omega }
}

/// Conjugate-gradient ascent of the weighted sum rate over the bank.
///
/// Returns the optimized bank and the per-iteration trace
/// (objective, accepted step, gradient norm).
pub fn rcg_optimize(
    bank0: PatternBank,
    assembled: &AssembledChannel,
    beams: &[DVector<Complex64>],
    weights: &[f64],
    noise: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<(PatternBank, Vec<RcgIterate>)> {
    rcg_optimize_with(
        bank0,
        assembled,
        beams,
        weights,
        noise,
        &RcgOptions {
            block_norm_sq: SPHERE_ENERGY,
            tol,
            max_iters,
            ..RcgOptions::default()
        },
    )
}

/// [`rcg_optimize`] with full control over the line-search constants.
pub fn rcg_optimize_with(
    bank0: PatternBank,
    assembled: &AssembledChannel,
    beams: &[DVector<Complex64>],
    weights: &[f64],
    noise: &[f64],
    opts: &RcgOptions,
) -> Result<(PatternBank, Vec<RcgIterate>)> {
    // Validate dimensions once; the inner closures then unwrap freely.
    objective(&bank0, assembled, beams, weights, noise)?;
    let outcome = manifold::rcg_maximize(
        bank0.omega,
        opts,
        |omega| {
            let bank = PatternBank {
                omega: omega.clone(),
            };
            objective(&bank, assembled, beams, weights, noise).expect("validated dimensions")
        },
        |omega| {
            let bank = PatternBank {
                omega: omega.clone(),
            };
            euclidean_grad(&bank, assembled, beams, weights, noise).expect("validated dimensions")
        },
    )?;
    Ok((
        PatternBank {
            omega: outcome.point,
        },
        outcome.trace,
    ))
}
