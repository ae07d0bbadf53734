//! Effective qubit maps induced by boosts.
//!
//! The decoherence channel
//! `ρ' = ρ(1 - Γ²/4) + (σ_x ρ σ_x + σ_y ρ σ_y) Γ²/8`
//! relates a spin-up packet's reduced matrix to the one seen by a boosted
//! observer, to leading order in the momentum spread. It is CPTP. Effective
//! maps on polarization states are not CP in general: when a frame change
//! lowers the error probability of a fixed pair, no CP map can do the same.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::pauli;
use crate::photon::{doppler_error, DopplerResult};
use crate::qmatrix::{
    apply_channel, helstrom_error, is_completely_positive, trace_distance, DensityMatrix, QubitChannel,
};
use crate::spin_half::{boost_packet, gaussian_spin_up, observer_transform, reduced_spin_density};
use crate::wavepacket::GaussianSpec;

type C = Complex64;

/// Choi eigenvalues above `-CP_TOL` count as non-negative.
pub const CP_TOL: f64 = 1e-12;
/// Error-probability decrease that triggers the non-CP verdict.
pub const WITNESS_TOL: f64 = 1e-9;
/// Observer speed used to tie `Δ/m` to `Γ` in consistency checks.
pub const DEFAULT_CONSISTENCY_BETA: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostChannelSpec {
    pub gamma: f64,
    /// Boost angle to the spin axis; carried along for reports.
    #[serde(default)]
    pub theta: f64,
}

impl BoostChannelSpec {
    pub fn new(gamma: f64, theta: f64) -> Result<Self> {
        let s = BoostChannelSpec { gamma, theta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return domain(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if self.gamma > 2.0 {
            return domain(format!("gamma = {} > 2 makes 1 - gamma²/4 negative", self.gamma));
        }
        if !self.theta.is_finite() {
            return domain("theta must be finite");
        }
        Ok(())
    }
}

/// Kraus form `{√(1-Γ²/4) I, (Γ/√8) σ_x, (Γ/√8) σ_y}`.
pub fn decoherence_channel(spec: &BoostChannelSpec) -> Result<QubitChannel> {
    spec.validate()?;
    let g2 = spec.gamma * spec.gamma;
    let [sx, sy, _] = pauli();
    let a = C::new((1.0 - g2 / 4.0).sqrt(), 0.0);
    let b = C::new(spec.gamma / 8f64.sqrt(), 0.0);
    QubitChannel::from_kraus(vec![Matrix2::identity() * a, sx * b, sy * b])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub is_cp: bool,
    pub is_tp: bool,
    pub min_choi_eigenvalue: f64,
}

pub fn certify_channel(ch: &QubitChannel) -> Certificate {
    let cp = is_completely_positive(ch, CP_TOL);
    Certificate { is_cp: cp.is_cp, is_tp: ch.is_trace_preserving(), min_choi_eigenvalue: cp.min_choi_eigenvalue }
}

pub fn certify(spec: &BoostChannelSpec) -> Result<Certificate> {
    Ok(certify_channel(&decoherence_channel(spec)?))
}

/// Channel output against the boosted packet at the same `(Γ, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub gamma: f64,
    pub theta: f64,
    pub beta: f64,
    pub delta_over_m: f64,
    pub trace_distance: f64,
    /// `trace_distance / Γ⁴`, or 0 at `Γ = 0`.
    pub scaled_distance: f64,
}

/// Compares the channel image of `|0⟩⟨0|` with the reduced matrix of a
/// boosted spin-up Gaussian.
///
/// The observer speed is fixed at `beta` and `Δ/m` is chosen so that the
/// packet realizes `Γ`; the spread then shrinks with `Γ` and the
/// comparison probes the leading-order regime.
pub fn consistency_check(spec: &BoostChannelSpec, beta: f64, nodes_per_axis: usize) -> Result<ConsistencyReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return domain(format!("consistency checks need 0 < beta < 1, got {beta}"));
    }
    let ch = decoherence_channel(spec)?;
    let up = DensityMatrix::pure(&[C::new(1.0, 0.0), C::new(0.0, 0.0)])?;
    let predicted = apply_channel(&ch, &up)?;
    let gamma = spec.gamma;
    let (delta_over_m, boosted) = if gamma == 0.0 {
        (0.0, up)
    } else {
        // Γ = (Δ/m)·β/(1 + √(1-β²))
        let d = gamma * (1.0 + (1.0 - beta * beta).sqrt()) / beta;
        let lambda = observer_transform(beta, spec.theta)?;
        let psi = boost_packet(&lambda, &gaussian_spin_up(d, 1.0, nodes_per_axis)?)?;
        (d, reduced_spin_density(&psi)?)
    };
    let dist = trace_distance(&predicted, &boosted)?;
    Ok(ConsistencyReport {
        gamma,
        theta: spec.theta,
        beta,
        delta_over_m,
        trace_distance: dist,
        scaled_distance: if gamma > 0.0 { dist / gamma.powi(4) } else { 0.0 },
    })
}

/// Which frame change, if any, lowered the pair's error probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessDirection {
    /// Alice's states mapped to Bob's became easier to tell apart.
    AliceToBob,
    /// The inverse map, Bob's states back to Alice's, did.
    BobToAlice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub v: f64,
    pub pe_before: f64,
    pub pe_after: f64,
    pub ratio: f64,
    pub closed_form_ratio: f64,
    pub direction: Option<WitnessDirection>,
    pub verdict: Option<String>,
}

const NOT_CP: &str = "no CP map on the 3x3 polarization state space can realize this pair transformation";

/// Applies the CP monotonicity theorem to the Doppler-shifted helicity pair.
///
/// The frame change is invertible, so a change of `P_E` in either direction
/// exhibits a map that improves distinguishability: the forward map when
/// `P'_E < P_E`, the inverse map when `P'_E > P_E`.
pub fn non_cp_witness(v: f64, beam: &GaussianSpec, nodes_per_axis: usize) -> Result<WitnessReport> {
    beam.validate()?;
    let c = beam.center();
    if c.x != 0.0 || c.y != 0.0 || !(c.z > 0.0) || beam.widths[0] != beam.widths[1] {
        return domain("the witness needs a beam along +z with equal transverse widths");
    }
    let DopplerResult { p_error, p_error_boosted, ratio, closed_form_ratio, .. } =
        doppler_error(c.z, beam.widths[2], beam.widths[0], v, nodes_per_axis)?;
    let direction = if p_error_boosted < p_error - WITNESS_TOL {
        Some(WitnessDirection::AliceToBob)
    } else if p_error_boosted > p_error + WITNESS_TOL {
        Some(WitnessDirection::BobToAlice)
    } else {
        None
    };
    Ok(WitnessReport {
        v,
        pe_before: p_error,
        pe_after: p_error_boosted,
        ratio,
        closed_form_ratio,
        direction,
        verdict: direction.map(|_| NOT_CP.to_string()),
    })
}

/// The combined audit emitted by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelAudit {
    pub gamma: f64,
    pub theta: f64,
    pub is_cp: bool,
    pub is_tp: bool,
    pub min_choi_eig: f64,
    pub trace_distance: f64,
    /// Error for `|0⟩` vs `|1⟩` before the channel.
    pub pe_before: f64,
    pub pe_after: f64,
    pub verdict: String,
}

pub fn channel_audit(spec: &BoostChannelSpec, beta: f64, nodes_per_axis: usize) -> Result<ChannelAudit> {
    let ch = decoherence_channel(spec)?;
    let cert = certify_channel(&ch);
    let up = DensityMatrix::pure(&[C::new(1.0, 0.0), C::new(0.0, 0.0)])?;
    let down = DensityMatrix::pure(&[C::new(0.0, 0.0), C::new(1.0, 0.0)])?;
    let pe_before = helstrom_error(&up, &down)?;
    let pe_after = helstrom_error(&apply_channel(&ch, &up)?, &apply_channel(&ch, &down)?)?;
    let consistency = consistency_check(spec, beta, nodes_per_axis)?;
    let verdict = match (cert.is_cp, cert.is_tp) {
        (true, true) => "completely positive and trace preserving",
        (true, false) => "completely positive, not trace preserving",
        (false, _) => "not completely positive",
    };
    Ok(ChannelAudit {
        gamma: spec.gamma,
        theta: spec.theta,
        is_cp: cert.is_cp,
        is_tp: cert.is_tp,
        min_choi_eig: cert.min_choi_eigenvalue,
        trace_distance: consistency.trace_distance,
        pe_before,
        pe_after,
        verdict: verdict.to_string(),
    })
}
