//! Shared oracles for the integration suites.

use fris_core::channel::{path_loss_amplitude, steering_bs, steering_ris, ChannelRealization};
use fris_core::pattern::PatternBank;
use fris_core::sph::pattern_gain;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Direct diagonal-pattern channel construction: per path, the per-element
/// complex gain `p_m(θ, φ)` multiplies the surface steering response, i.e.
/// `H = γ Σ ρ g Diag(p(θ,φ)) a_R a_B^H` and likewise for the UE vectors.
/// Independent of the factorized assembly it validates.
pub fn direct_channels(
    realization: &ChannelRealization,
    bank: &PatternBank,
) -> (DMatrix<Complex64>, Vec<DVector<Complex64>>) {
    let geo = &realization.geometry;
    let m = geo.num_elements();
    let mut h_br = DMatrix::<Complex64>::zeros(m, geo.n_t);
    let gamma = realization.bs_normalizer();
    for path in &realization.bs_ris_paths {
        let rho = path_loss_amplitude(
            path.distance,
            realization.reference_gain,
            realization.path_loss_exponent,
        )
        .unwrap();
        let a_r = steering_ris(path.ris_angle.theta, path.ris_angle.phi, geo.m_y, geo.m_z);
        let bs = path.bs_angle.expect("BS-side path");
        let a_b = steering_bs(bs.theta, bs.phi, geo.n_t);
        for elem in 0..m {
            let gain = pattern_gain(
                &bank.element(elem),
                path.ris_angle.theta,
                path.ris_angle.phi,
            )
            .unwrap();
            for col in 0..geo.n_t {
                h_br[(elem, col)] += gamma * rho * path.gain * gain * a_r[elem] * a_b[col].conj();
            }
        }
    }
    let mut h_ru = Vec::new();
    for (ue, paths) in realization.ris_ue_paths.iter().enumerate() {
        let gamma = realization.ue_normalizer(ue);
        let mut h_k = DVector::<Complex64>::zeros(m);
        for path in paths {
            let rho = path_loss_amplitude(
                path.distance,
                realization.reference_gain,
                realization.path_loss_exponent,
            )
            .unwrap();
            let a_r = steering_ris(path.ris_angle.theta, path.ris_angle.phi, geo.m_y, geo.m_z);
            for elem in 0..m {
                let gain = pattern_gain(
                    &bank.element(elem),
                    path.ris_angle.theta,
                    path.ris_angle.phi,
                )
                .unwrap();
                h_k[elem] += gamma * rho * path.gain * gain * a_r[elem];
            }
        }
        h_ru.push(h_k);
    }
    (h_br, h_ru)
}
