//! Massive spin-½ wave packets seen from a moving frame.
//!
//! A packet holds two amplitudes `a₁(p), a₂(p)` on a plain-measure grid,
//! normalized as `Σ_r ∫ |a_r(p)|² d³p = 1`. Under a Lorentz transformation
//! the amplitudes pick up the energy-ratio prefactor and the spin-½ image of
//! the Wigner rotation:
//!
//! `a'(Λp) = [p⁰/(Λp)⁰]^{1/2} D[W(Λ, p)] a(p)`.
//!
//! Boosts transport grid nodes instead of resampling, so no interpolation is
//! involved and the norm is conserved to rounding.

use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::geometry::{rotation_to_su2, wigner_rotation, LorentzTransform};
use crate::numeric::pairwise_sum_by;
use crate::qmatrix::{entropy, helstrom_error, DensityMatrix};
use crate::wavepacket::{gauss_grid, normalize, Amplitudes, GaussianSpec, MeasureConvention, MomentumGrid};

type C = Complex64;

/// Default `Δ/m` for entropy sweeps; large enough to reach `Γ = 0.5`.
pub const DEFAULT_SWEEP_DELTA_OVER_M: f64 = 0.6;
/// Default `Δ/m` for the small-Γ distinguishability regime.
pub const DEFAULT_SMALL_DELTA_OVER_M: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinorPacket {
    amps: Amplitudes,
    mass: f64,
}

impl SpinorPacket {
    /// Wraps two-component amplitudes on a plain grid of mass `m > 0`.
    pub fn new(amps: Amplitudes) -> Result<Self> {
        let grid = amps.grid();
        if grid.convention() != MeasureConvention::Plain {
            return Err(Error::GridMismatch("spinor packets use the plain measure".into()));
        }
        if !(grid.mass() > 0.0) {
            return domain("spinor packets need a positive mass");
        }
        if amps.components() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: amps.components() });
        }
        Ok(SpinorPacket { mass: grid.mass(), amps })
    }

    /// Momentum profile times a fixed spinor, normalized.
    pub fn product(grid: Arc<MomentumGrid>, profile: &GaussianSpec, spinor: [C; 2]) -> Result<Self> {
        let values = grid
            .nodes()
            .iter()
            .flat_map(|p| {
                let a = profile.amplitude(p);
                [spinor[0] * a, spinor[1] * a]
            })
            .collect();
        Self::new(normalize(&Amplitudes::new(grid, 2, values)?)?)
    }

    pub fn amplitudes(&self) -> &Amplitudes {
        &self.amps
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        self.amps.grid()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// Spinor `(a₁, a₂)` at node `i`.
    pub fn spinor(&self, i: usize) -> [C; 2] {
        let v = self.amps.at(i);
        [v[0], v[1]]
    }
}

fn isotropic_grid(delta: f64, m: f64, nodes_per_axis: usize) -> Result<(GaussianSpec, Arc<MomentumGrid>)> {
    if !(delta > 0.0) || !(m > 0.0) {
        return domain(format!("width and mass must be positive (delta = {delta}, m = {m})"));
    }
    let spec = GaussianSpec::isotropic(delta)?;
    let grid = gauss_grid(&spec, nodes_per_axis, MeasureConvention::Plain, m)?;
    Ok((spec, Arc::new(grid)))
}

/// `a₁ = N exp(-p²/2Δ²)`, `a₂ = 0` at rest.
pub fn gaussian_spin_up(delta: f64, m: f64, nodes_per_axis: usize) -> Result<SpinorPacket> {
    let (spec, grid) = isotropic_grid(delta, m, nodes_per_axis)?;
    SpinorPacket::product(grid, &spec, [C::new(1.0, 0.0), C::new(0.0, 0.0)])
}

/// Spin-down partner of [`gaussian_spin_up`] on the same grid.
pub fn gaussian_spin_down(delta: f64, m: f64, nodes_per_axis: usize) -> Result<SpinorPacket> {
    let (spec, grid) = isotropic_grid(delta, m, nodes_per_axis)?;
    SpinorPacket::product(grid, &spec, [C::new(0.0, 0.0), C::new(1.0, 0.0)])
}

/// Describes `psi` in the frame whose momenta are `Λp`.
pub fn boost_packet(lambda: &LorentzTransform, psi: &SpinorPacket) -> Result<SpinorPacket> {
    let grid = psi.grid();
    let m = psi.mass;
    let mut values = Vec::with_capacity(2 * grid.len());
    for i in 0..grid.len() {
        let p = grid.four_momentum(i);
        p.check_on_shell(m)?;
        let q = lambda.apply(&p);
        let d = rotation_to_su2(&wigner_rotation(lambda, &p, m)?);
        let s = (p.t / q.t).sqrt();
        let [a1, a2] = d.apply(&psi.spinor(i));
        values.push(a1 * s);
        values.push(a2 * s);
    }
    let moved = Arc::new(grid.transport(lambda));
    SpinorPacket::new(Amplitudes::new(moved, 2, values)?)
}

/// `τ = ∫ d³p ψ(p) ψ†(p)`.
pub fn reduced_spin_density(psi: &SpinorPacket) -> Result<DensityMatrix> {
    let w = psi.grid().weights();
    let entry = |r: usize, c: usize| {
        pairwise_sum_by(w.len(), &|i| {
            let s = psi.spinor(i);
            s[r] * s[c].conj() * w[i]
        })
    };
    let m = DMatrix::from_fn(2, 2, entry);
    DensityMatrix::new(m)
}

/// `Γ = (Δ/m)(1 - √(1 - β²))/β`, with the limit 0 at `β = 0`.
pub fn gamma_parameter(delta: f64, m: f64, beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return domain(format!("speed must satisfy 0 <= beta < 1, got {beta}"));
    }
    if !(delta > 0.0) || !(m > 0.0) {
        return domain("width and mass must be positive");
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    // (1 - √(1-β²))/β = β/(1 + √(1-β²)), stable for small β
    Ok(delta / m * beta / (1.0 + (1.0 - beta * beta).sqrt()))
}

/// Speed `β` at which `gamma_parameter(Δ, m, β) = Γ`.
///
/// `(1 - √(1-β²))/β = tanh(η/2)` for rapidity `η`, so the inverse is
/// `β = 2t/(1 + t²)` with `t = Γ/(Δ/m)`; requires `0 ≤ Γ < Δ/m`.
pub fn beta_for_gamma(gamma: f64, delta_over_m: f64) -> Result<f64> {
    if !(delta_over_m > 0.0) {
        return domain("delta/m must be positive");
    }
    if !(gamma >= 0.0) {
        return domain(format!("gamma must be non-negative, got {gamma}"));
    }
    let t = gamma / delta_over_m;
    if t >= 1.0 {
        return domain(format!("gamma = {gamma} is unreachable for delta/m = {delta_over_m} (needs gamma < delta/m)"));
    }
    let beta = 2.0 * t / (1.0 + t * t);
    if beta >= 1.0 - 1e-12 {
        return domain(format!("gamma = {gamma} needs a speed indistinguishable from 1"));
    }
    Ok(beta)
}

/// Transformation to the frame of an observer moving with speed `β` at
/// angle `θ` to the `z`-axis, in the x–z plane.
pub fn observer_transform(beta: f64, theta: f64) -> Result<LorentzTransform> {
    let dir = Vector3::new(theta.sin(), 0.0, theta.cos());
    LorentzTransform::boost_from_velocity(-beta * dir)
}

/// Spin observables of the boosted Gaussian pair at one `(θ, Γ)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinPoint {
    pub theta: f64,
    pub gamma: f64,
    pub beta: f64,
    pub delta_over_m: f64,
    /// Entropy of the boosted spin-up packet, bits.
    pub entropy_bits: f64,
    /// Minimum error for the boosted spin-up/spin-down pair.
    pub p_error: f64,
    pub grid_nodes: usize,
}

/// Boosted spin-up/down pair in units `m = 1`, with the speed chosen from `Γ`.
pub fn spin_point(theta: f64, gamma: f64, delta_over_m: f64, nodes_per_axis: usize) -> Result<SpinPoint> {
    let beta = beta_for_gamma(gamma, delta_over_m)?;
    let lambda = observer_transform(beta, theta)?;
    let up = gaussian_spin_up(delta_over_m, 1.0, nodes_per_axis)?;
    let down = gaussian_spin_down(delta_over_m, 1.0, nodes_per_axis)?;
    let tau_up = reduced_spin_density(&boost_packet(&lambda, &up)?)?;
    let tau_down = reduced_spin_density(&boost_packet(&lambda, &down)?)?;
    Ok(SpinPoint {
        theta,
        gamma,
        beta,
        delta_over_m,
        entropy_bits: entropy(&tau_up),
        p_error: helstrom_error(&tau_up, &tau_down)?,
        grid_nodes: up.grid().len(),
    })
}

/// `S(θ, Γ)` over a table, rows ordered θ-major. Unreachable `Γ` values give
/// per-row errors.
pub fn entropy_sweep(
    thetas: &[f64],
    gammas: &[f64],
    delta_over_m: f64,
    nodes_per_axis: usize,
) -> Vec<Result<SpinPoint>> {
    let cells: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| gammas.iter().map(move |&g| (t, g))).collect();
    cells
        .par_iter()
        .map(|&(t, g)| spin_point(t, g, delta_over_m, nodes_per_axis))
        .collect()
}

/// Minimum error probability for the boosted spin-up/spin-down pair.
pub fn boosted_pair_error(delta: f64, m: f64, beta: f64, theta: f64, nodes_per_axis: usize) -> Result<f64> {
    gamma_parameter(delta, m, beta)?;
    let lambda = observer_transform(beta, theta)?;
    let up = boost_packet(&lambda, &gaussian_spin_up(delta, m, nodes_per_axis)?)?;
    let down = boost_packet(&lambda, &gaussian_spin_down(delta, m, nodes_per_axis)?)?;
    helstrom_error(&reduced_spin_density(&up)?, &reduced_spin_density(&down)?)
}
