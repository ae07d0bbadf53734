//! Photon polarization seen through position-like measurements.
//!
//! A one-photon packet is `∫dμ f(k) [α₊(k)|k,+⟩ + α₋(k)|k,-⟩]` with the
//! invariant measure `dμ = d³k/((2π)³ 2k⁰)`. At each `k` the helicity pair
//! corresponds to the transverse 3-vector `𝛂(k) = α₊ε⁺_k + α₋ε⁻_k`.
//!
//! Polarization "along `m̂`" is the momentum-diagonal operator
//! `E_m = ∫dμ |k, b_m(k)⟩⟨k, b_m(k)|` where `b_m(k)` is the transverse part of
//! `m̂`. The three `E_m` sum to the identity on physical states, so
//! `ρ_mn = ∫dμ |f|² ⟨b_m|𝛂⟩⟨𝛂|b_n⟩` is a 3×3 density matrix whose `ρ_mz`
//! entries vanish only for a monochromatic beam along `z`.

use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::geometry::{standard_rotation, LorentzTransform};
use crate::numeric::pairwise_sum_by;
use crate::qmatrix::{helstrom_error, DensityMatrix};
use crate::wavepacket::{gauss_grid, normalize, Amplitudes, GaussianSpec, MeasureConvention, MomentumGrid};

type C = Complex64;

/// Complex polarization 3-vector.
pub type PolarizationVector = Vector3<C>;

const UNIT_TOL: f64 = 1e-10;
/// Nodes closer than this fraction of `k_A` to the origin have no direction.
const MIN_K_FRACTION: f64 = 1e-12;

fn check_unit(v: &Vector3<f64>, what: &str) -> Result<()> {
    if (v.norm() - 1.0).abs() > UNIT_TOL {
        return domain(format!("{what} must be a unit vector, norm = {}", v.norm()));
    }
    Ok(())
}

fn complexify(v: &Vector3<f64>) -> PolarizationVector {
    v.map(|x| C::new(x, 0.0))
}

/// `⟨a|b⟩`, antilinear in the first slot.
pub fn hermitian_dot(a: &PolarizationVector, b: &PolarizationVector) -> C {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `ε±_k = R(k̂)(1, ±i, 0)/√2`.
pub fn helicity_vectors(khat: &Vector3<f64>) -> Result<(PolarizationVector, PolarizationVector)> {
    check_unit(khat, "propagation direction")?;
    let r = standard_rotation(khat)?;
    let e1 = r.matrix().column(0).into_owned();
    let e2 = r.matrix().column(1).into_owned();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = PolarizationVector::from_fn(|i, _| C::new(e1[i], e2[i]) * s);
    let minus = PolarizationVector::from_fn(|i, _| C::new(e1[i], -e2[i]) * s);
    Ok((plus, minus))
}

/// Transverse and longitudinal parts of a polarization direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transversal {
    /// `b = x₊ε⁺ + x₋ε⁻`.
    pub b: PolarizationVector,
    /// `(x₊, x₋)`.
    pub helicity: [C; 2],
    /// `x_ℓ = m̂·k̂`.
    pub longitudinal: C,
}

/// Splits `direction` into helicity components at `k̂` and a longitudinal remainder.
///
/// `x± = ⟨ε±_k, m̂⟩`; for real `m̂` this makes `b` the real projection
/// `m̂ - (m̂·k̂)k̂`.
pub fn transversal_b(direction: &Vector3<f64>, khat: &Vector3<f64>) -> Result<Transversal> {
    check_unit(direction, "polarization direction")?;
    transversal_of(&complexify(direction), khat)
}

fn transversal_of(d: &PolarizationVector, khat: &Vector3<f64>) -> Result<Transversal> {
    let (ep, em) = helicity_vectors(khat)?;
    let xp = hermitian_dot(&ep, d);
    let xm = hermitian_dot(&em, d);
    let longitudinal = hermitian_dot(&complexify(khat), d);
    Ok(Transversal { b: ep * xp + em * xm, helicity: [xp, xm], longitudinal })
}

/// Helicity sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Helicity {
    Plus,
    Minus,
}

impl Helicity {
    fn amplitudes(self) -> [C; 2] {
        match self {
            Helicity::Plus => [C::new(1.0, 0.0), C::new(0.0, 0.0)],
            Helicity::Minus => [C::new(0.0, 0.0), C::new(1.0, 0.0)],
        }
    }
}

/// One-photon packet on an invariant-measure grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonPacket {
    profile: Amplitudes,
    helicity: Vec<[C; 2]>,
    directions: Vec<Vector3<f64>>,
}

impl PhotonPacket {
    /// Requires `∫dμ|f|² = 1` to 1e-8 and `|α₊|² + |α₋|² = 1` per node.
    pub fn new(profile: Amplitudes, helicity: Vec<[C; 2]>) -> Result<Self> {
        let grid = profile.grid();
        if grid.convention() != MeasureConvention::Invariant {
            return Err(Error::GridMismatch("photon packets use the invariant measure".into()));
        }
        if grid.mass() != 0.0 {
            return domain("photon grids must be massless");
        }
        if profile.components() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: profile.components() });
        }
        if helicity.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: helicity.len() });
        }
        let norm = profile.norm_squared();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("profile norm {norm} differs from 1")));
        }
        if let Some(i) = helicity.iter().position(|a| (a[0].norm_sqr() + a[1].norm_sqr() - 1.0).abs() > UNIT_TOL) {
            return Err(Error::InvalidState(format!("helicity amplitudes not normalized at node {i}")));
        }
        let directions = node_directions(grid)?;
        Ok(PhotonPacket { profile, helicity, directions })
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        self.profile.grid()
    }

    pub fn profile(&self) -> &Amplitudes {
        &self.profile
    }

    /// `(α₊, α₋)` per node.
    pub fn helicity(&self) -> &[[C; 2]] {
        &self.helicity
    }

    pub fn direction(&self, i: usize) -> Vector3<f64> {
        self.directions[i]
    }

    /// `|f(kᵢ)|²` times the quadrature weight.
    pub fn probability_weight(&self, i: usize) -> f64 {
        self.grid().weights()[i] * self.profile.at(i)[0].norm_sqr()
    }

    /// `𝛂(kᵢ) = α₊ε⁺ + α₋ε⁻`.
    pub fn polarization(&self, i: usize) -> PolarizationVector {
        let (ep, em) = helicity_vectors(&self.directions[i]).expect("directions are unit vectors");
        let [ap, am] = self.helicity[i];
        ep * ap + em * am
    }

    pub fn norm_squared(&self) -> f64 {
        self.profile.norm_squared()
    }
}

fn node_directions(grid: &MomentumGrid) -> Result<Vec<Vector3<f64>>> {
    let scale = grid.nodes().iter().map(|k| k.norm()).fold(0.0, f64::max);
    grid.nodes()
        .iter()
        .map(|k| {
            let n = k.norm();
            if !(n > MIN_K_FRACTION * scale) {
                return domain("a grid node sits at k = 0 where the direction is undefined");
            }
            Ok(k / n)
        })
        .collect()
}

/// Gaussian beam along `z` with a fixed helicity at every node.
///
/// `f(k) ∝ exp(-(k_z - k_A)²/2Δ_z² - k_r²/2Δ_r²)`; requires `k_A > 5Δ_z`.
pub fn gaussian_beam(
    k_a: f64,
    delta_z: f64,
    delta_r: f64,
    helicity: Helicity,
    nodes_per_axis: usize,
) -> Result<PhotonPacket> {
    let spec = GaussianSpec::beam(k_a, delta_z, delta_r)?;
    if !(k_a > 5.0 * delta_z) {
        return domain(format!("beam needs k_A > 5 delta_z (k_A = {k_a}, delta_z = {delta_z})"));
    }
    let grid = Arc::new(gauss_grid(&spec, nodes_per_axis, MeasureConvention::Invariant, 0.0)?);
    if grid.nodes().iter().any(|k| k.norm() < MIN_K_FRACTION * k_a) {
        return domain("a grid node sits at k = 0 where the direction is undefined");
    }
    let profile = normalize(&Amplitudes::gaussian(grid.clone(), &spec)?)?;
    PhotonPacket::new(profile, vec![helicity.amplitudes(); grid.len()])
}

/// Moves the packet to the frame with momenta `Λk`.
///
/// The invariant weights and `f` ride along with their nodes; the helicity
/// amplitudes are kept, so `𝛂(Λk) = R(k̂_Λ)R(k̂)⁻¹𝛂(k)`.
pub fn boost_photon(lambda: &LorentzTransform, psi: &PhotonPacket) -> Result<PhotonPacket> {
    let moved = Arc::new(psi.grid().transport(lambda));
    let profile = Amplitudes::new(moved, 1, psi.profile.values().to_vec())?;
    PhotonPacket::new(profile, psi.helicity.clone())
}

/// The operators `E_x, E_y, E_z`, stored as per-node transverse vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationPOVM {
    grid: Arc<MomentumGrid>,
    b: [Vec<PolarizationVector>; 3],
}

pub fn build_povm(grid: Arc<MomentumGrid>) -> Result<PolarizationPOVM> {
    if grid.convention() != MeasureConvention::Invariant {
        return Err(Error::GridMismatch("the polarization POVM needs an invariant-measure grid".into()));
    }
    let dirs = node_directions(&grid)?;
    let axis = |m: usize| -> Result<Vec<PolarizationVector>> {
        let e = Vector3::ith(m, 1.0);
        dirs.iter().map(|k| Ok(transversal_b(&e, k)?.b)).collect()
    };
    Ok(PolarizationPOVM { b: [axis(0)?, axis(1)?, axis(2)?], grid })
}

impl PolarizationPOVM {
    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    /// `b_m(kᵢ)` for `m ∈ {0, 1, 2}`.
    pub fn vector(&self, m: usize, i: usize) -> &PolarizationVector {
        &self.b[m][i]
    }

    fn check(&self, psi: &PhotonPacket) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, psi.grid()) && self.grid.nodes() != psi.grid().nodes() {
            return Err(Error::GridMismatch("POVM and packet live on different grids".into()));
        }
        Ok(())
    }

    /// `⟨Ψ|E_c|Ψ⟩` for the combination `b_c = Σ_m c_m b_m`, the transverse part
    /// of the complex direction `c`.
    pub fn combination_probability(&self, psi: &PhotonPacket, c: &[C; 3]) -> Result<f64> {
        self.check(psi)?;
        Ok(pairwise_sum_by(psi.grid().len(), &|i| {
            let b = self.b[0][i] * c[0] + self.b[1][i] * c[1] + self.b[2][i] * c[2];
            psi.probability_weight(i) * hermitian_dot(&b, &psi.polarization(i)).norm_sqr()
        }))
    }

    /// `⟨Ψ|E_m|Ψ⟩`.
    pub fn probability(&self, psi: &PhotonPacket, m: usize) -> Result<f64> {
        let mut c = [C::new(0.0, 0.0); 3];
        c[m] = C::new(1.0, 0.0);
        self.combination_probability(psi, &c)
    }

    pub fn probabilities(&self, psi: &PhotonPacket) -> Result<[f64; 3]> {
        Ok([self.probability(psi, 0)?, self.probability(psi, 1)?, self.probability(psi, 2)?])
    }

    /// `|Σ_m ⟨Ψ|E_m|Ψ⟩ - ⟨Ψ|Ψ⟩|`.
    pub fn completeness_residual(&self, psi: &PhotonPacket) -> Result<f64> {
        let p = self.probabilities(psi)?;
        Ok((p.iter().sum::<f64>() - psi.norm_squared()).abs())
    }

    /// `ρ_mn = ∫dμ |f|² ⟨b_m|𝛂⟩⟨𝛂|b_n⟩`.
    pub fn density(&self, psi: &PhotonPacket) -> Result<DMatrix<C>> {
        self.check(psi)?;
        let n = psi.grid().len();
        let proj: Vec<[C; 3]> = (0..n)
            .map(|i| {
                let a = psi.polarization(i);
                [0, 1, 2].map(|m| hermitian_dot(&self.b[m][i], &a))
            })
            .collect();
        Ok(DMatrix::from_fn(3, 3, |r, c| {
            pairwise_sum_by(n, &|i| proj[i][r] * proj[i][c].conj() * psi.probability_weight(i))
        }))
    }

    /// `ρ_mn` rebuilt from probabilities of the combinations
    /// `E_{(m+n)/√2}` and `E_{(m-in)/√2}`.
    pub fn tomographic_density(&self, psi: &PhotonPacket) -> Result<DMatrix<C>> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let diag = self.probabilities(psi)?;
        let mut rho = DMatrix::from_fn(3, 3, |r, c| if r == c { C::new(diag[r], 0.0) } else { C::new(0.0, 0.0) });
        for m in 0..3 {
            for n in (m + 1)..3 {
                let mut re = [C::new(0.0, 0.0); 3];
                re[m] = C::new(s, 0.0);
                re[n] = C::new(s, 0.0);
                let mut im = [C::new(0.0, 0.0); 3];
                im[m] = C::new(s, 0.0);
                im[n] = C::new(0.0, -s);
                let base = 0.5 * (diag[m] + diag[n]);
                let z = C::new(
                    self.combination_probability(psi, &re)? - base,
                    self.combination_probability(psi, &im)? - base,
                );
                rho[(m, n)] = z;
                rho[(n, m)] = z.conj();
            }
        }
        Ok(rho)
    }
}

/// `ρ^naive_mn = ∫dμ |f|² 𝛂_m 𝛂_n*`, evaluated without the POVM.
pub fn naive_density(psi: &PhotonPacket) -> DMatrix<C> {
    let n = psi.grid().len();
    let pol: Vec<PolarizationVector> = (0..n).map(|i| psi.polarization(i)).collect();
    DMatrix::from_fn(3, 3, |r, c| pairwise_sum_by(n, &|i| pol[i][r] * pol[i][c].conj() * psi.probability_weight(i)))
}

/// Effective 3×3 polarization density matrix through the POVM, normalized to
/// unit trace. Cross-checked against [`naive_density`] to 1e-10.
pub fn effective_density(psi: &PhotonPacket) -> Result<DensityMatrix> {
    let povm = build_povm(psi.grid().clone())?;
    let rho = povm.density(psi)?;
    let naive = naive_density(psi);
    let gap = (&rho - &naive).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if gap > 1e-10 {
        return Err(Error::InvalidState(format!("POVM and direct densities disagree by {gap:e}")));
    }
    let tr = rho.trace();
    DensityMatrix::new(rho / tr)
}

/// Minimum error for telling two packets apart by polarization measurements.
pub fn orthogonality_audit(psi1: &PhotonPacket, psi2: &PhotonPacket) -> Result<f64> {
    if psi1.grid().nodes() != psi2.grid().nodes() {
        return Err(Error::GridMismatch("packets must share a beam profile grid".into()));
    }
    helstrom_error(&effective_density(psi1)?, &effective_density(psi2)?)
}

/// Leading-order error `Δ_r²/4k_A²` for the opposite-helicity pair.
pub fn circular_pair_closed_form(k_a: f64, delta_r: f64) -> f64 {
    delta_r * delta_r / (4.0 * k_a * k_a)
}

/// Error probability for opposite-helicity Gaussian beams.
pub fn circular_pair_error(k_a: f64, delta_z: f64, delta_r: f64, nodes_per_axis: usize) -> Result<f64> {
    let plus = gaussian_beam(k_a, delta_z, delta_r, Helicity::Plus, nodes_per_axis)?;
    let minus = gaussian_beam(k_a, delta_z, delta_r, Helicity::Minus, nodes_per_axis)?;
    orthogonality_audit(&plus, &minus)
}

/// Transformation to an observer moving with velocity `v ẑ`.
pub fn doppler_transform(v: f64) -> Result<LorentzTransform> {
    if !(v.abs() < 1.0) {
        return domain(format!("speed must satisfy |v| < 1, got {v}"));
    }
    LorentzTransform::boost_from_velocity(Vector3::new(0.0, 0.0, -v))
}

/// Errors for the opposite-helicity pair before and after a boost along the beam.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DopplerResult {
    pub v: f64,
    pub p_error: f64,
    pub p_error_boosted: f64,
    pub ratio: f64,
    /// `(1 + v)/(1 - v)`.
    pub closed_form_ratio: f64,
}

pub fn doppler_error(k_a: f64, delta_z: f64, delta_r: f64, v: f64, nodes_per_axis: usize) -> Result<DopplerResult> {
    let lambda = doppler_transform(v)?;
    let plus = gaussian_beam(k_a, delta_z, delta_r, Helicity::Plus, nodes_per_axis)?;
    let minus = gaussian_beam(k_a, delta_z, delta_r, Helicity::Minus, nodes_per_axis)?;
    let p_error = orthogonality_audit(&plus, &minus)?;
    let p_error_boosted = orthogonality_audit(&boost_photon(&lambda, &plus)?, &boost_photon(&lambda, &minus)?)?;
    Ok(DopplerResult {
        v,
        p_error,
        p_error_boosted,
        ratio: p_error_boosted / p_error,
        closed_form_ratio: (1.0 + v) / (1.0 - v),
    })
}

/// One row of a distinguishability sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonRow {
    pub k_a: f64,
    pub delta_r: f64,
    pub delta_z: f64,
    pub v: f64,
    pub p_error: f64,
    pub p_error_closed_form: f64,
    pub grid_nodes: usize,
}

/// Error for the opposite-helicity pair seen by an observer with speed `v`
/// along the beam, with the leading-order prediction.
pub fn photon_row(k_a: f64, delta_z: f64, delta_r: f64, v: f64, nodes_per_axis: usize) -> Result<PhotonRow> {
    let p_error = if v == 0.0 {
        circular_pair_error(k_a, delta_z, delta_r, nodes_per_axis)?
    } else {
        doppler_error(k_a, delta_z, delta_r, v, nodes_per_axis)?.p_error_boosted
    };
    Ok(PhotonRow {
        k_a,
        delta_r,
        delta_z,
        v,
        p_error,
        p_error_closed_form: circular_pair_closed_form(k_a, delta_r) * (1.0 + v) / (1.0 - v),
        grid_nodes: nodes_per_axis.pow(3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;
    use crate::qmatrix::hermitian_eigenvalues;
    use crate::test_util::normal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn close(a: &PolarizationVector, b: &PolarizationVector, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    fn max_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Single-node packet at `k = (0, 0, k)` with polarization `(α₊, α₋)`.
    fn monochromatic(k: f64, helicity: [C; 2]) -> PhotonPacket {
        let spec = GaussianSpec::beam(k, 0.01 * k, 0.01 * k).unwrap();
        let grid = Arc::new(gauss_grid(&spec, 1, MeasureConvention::Invariant, 0.0).unwrap());
        let f = normalize(&Amplitudes::new(grid, 1, vec![c(1.0, 0.0)]).unwrap()).unwrap();
        PhotonPacket::new(f, vec![helicity]).unwrap()
    }

    fn random_packet(rng: &mut ChaCha8Rng, n: usize) -> PhotonPacket {
        let spec = GaussianSpec::new(
            [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-3.0..3.0)],
            [rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0)],
        )
        .unwrap();
        let grid = Arc::new(gauss_grid(&spec, n, MeasureConvention::Invariant, 0.0).unwrap());
        let values: Vec<C> = (0..grid.len()).map(|_| c(normal(rng), normal(rng))).collect();
        let f = normalize(&Amplitudes::new(grid.clone(), 1, values).unwrap()).unwrap();
        let hel = (0..grid.len())
            .map(|_| {
                let a = [c(normal(rng), normal(rng)), c(normal(rng), normal(rng))];
                let s = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
                [a[0] / s, a[1] / s]
            })
            .collect();
        PhotonPacket::new(f, hel).unwrap()
    }

    #[test]
    fn helicity_vectors_along_z() {
        let (p, m) = helicity_vectors(&Vector3::z()).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!(close(&p, &PolarizationVector::new(c(s, 0.0), c(0.0, s), c(0.0, 0.0)), 1e-15));
        assert!(close(&m, &PolarizationVector::new(c(s, 0.0), c(0.0, -s), c(0.0, 0.0)), 1e-15));
    }

    #[test]
    fn helicity_vectors_along_x() {
        let (p, m) = helicity_vectors(&Vector3::x()).unwrap();
        let r = Rotation::about_axis(Vector3::y(), PI / 2.0);
        let s = FRAC_1_SQRT_2;
        let expect = |sign: f64| {
            let re = r.apply(&Vector3::new(s, 0.0, 0.0));
            let im = r.apply(&Vector3::new(0.0, sign * s, 0.0));
            PolarizationVector::from_fn(|i, _| c(re[i], im[i]))
        };
        assert!(close(&p, &expect(1.0), 1e-14));
        assert!(close(&m, &expect(-1.0), 1e-14));
        assert!(helicity_vectors(&Vector3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn helicity_vectors_are_orthonormal_and_transverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let k = Vector3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng)).normalize();
            let (p, m) = helicity_vectors(&k).unwrap();
            let kc = complexify(&k);
            assert!(hermitian_dot(&kc, &p).norm() < 1e-12);
            assert!(hermitian_dot(&kc, &m).norm() < 1e-12);
            assert!(hermitian_dot(&p, &m).norm() < 1e-12);
            assert!((hermitian_dot(&p, &p).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transversal_examples() {
        let t = transversal_b(&Vector3::x(), &Vector3::z()).unwrap();
        assert!(close(&t.b, &complexify(&Vector3::x()), 1e-15));
        assert!(t.longitudinal.norm() < 1e-15);

        let k = Vector3::new(0.3, -0.4, 0.5).normalize();
        let t = transversal_b(&k, &k).unwrap();
        assert!(t.b.norm() < 1e-14);
        assert!((t.longitudinal.norm() - 1.0).abs() < 1e-14);

        let k = Vector3::new((PI / 4.0).sin(), 0.0, (PI / 4.0).cos());
        let t = transversal_b(&Vector3::x(), &k).unwrap();
        assert!((t.longitudinal.re - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((t.b.norm() - 0.5f64.sqrt()).abs() < 1e-14);
        let hel = (t.helicity[0].norm_sqr() + t.helicity[1].norm_sqr()).sqrt();
        assert!((hel - t.b.norm()).abs() < 1e-14);
    }

    #[test]
    fn transversal_completeness() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let k = Vector3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng)).normalize();
            let d = Vector3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng)).normalize();
            let t = transversal_b(&d, &k).unwrap();
            assert!((t.b.norm_squared() + t.longitudinal.norm_sqr() - 1.0).abs() < 1e-12);
            assert!(hermitian_dot(&complexify(&k), &t.b).norm() < 1e-12);
        }
    }

    #[test]
    fn monochromatic_probabilities() {
        let s = FRAC_1_SQRT_2;
        // x-polarized = (ε⁺ + ε⁻)/√2 along ẑ
        let x_pol = monochromatic(3.0, [c(s, 0.0), c(s, 0.0)]);
        let povm = build_povm(x_pol.grid().clone()).unwrap();
        let p = povm.probabilities(&x_pol).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12 && p[2].abs() < 1e-12);
        let rho = effective_density(&x_pol).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap()) < 1e-12);

        // 45° in the x-y plane: 𝛂 = (1, 1, 0)/√2
        let (ep, em) = helicity_vectors(&Vector3::z()).unwrap();
        let target = PolarizationVector::new(c(s, 0.0), c(s, 0.0), c(0.0, 0.0));
        let (ap, am) = (hermitian_dot(&ep, &target), hermitian_dot(&em, &target));
        let diag = monochromatic(3.0, [ap, am]);
        let p = povm.probabilities(&diag).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12 && p[2].abs() < 1e-12);
    }

    #[test]
    fn povm_completeness_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let psi = random_packet(&mut rng, 3);
            let povm = build_povm(psi.grid().clone()).unwrap();
            assert!(povm.completeness_residual(&psi).unwrap() < 1e-10);
        }
    }

    #[test]
    fn povm_and_naive_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let psi = random_packet(&mut rng, 3);
            let povm = build_povm(psi.grid().clone()).unwrap();
            let rho = povm.density(&psi).unwrap();
            assert!(max_diff(&rho, &naive_density(&psi)) < 1e-10);
            assert!(max_diff(&rho, &povm.tomographic_density(&psi).unwrap()) < 1e-10);
            assert!((rho.trace().re - 1.0).abs() < 1e-8);
        }
        let beam = gaussian_beam(10.0, 0.5, 1.0, Helicity::Plus, 8).unwrap();
        let povm = build_povm(beam.grid().clone()).unwrap();
        assert!(max_diff(&povm.density(&beam).unwrap(), &naive_density(&beam)) < 1e-10);
    }

    #[test]
    fn povm_elements_are_positive() {
        // E_m restricted to one node is |b_m⟩⟨b_m| ⊗ weight; check the 3×3 blocks
        let beam = gaussian_beam(5.0, 0.5, 1.0, Helicity::Plus, 4).unwrap();
        let povm = build_povm(beam.grid().clone()).unwrap();
        for m in 0..3 {
            for i in 0..beam.grid().len() {
                let b = povm.vector(m, i);
                let op = DMatrix::from_fn(3, 3, |r, c| b[r] * b[c].conj());
                assert!(hermitian_eigenvalues(&op)[0] > -1e-14);
            }
        }
    }

    #[test]
    fn beam_norm_and_direction() {
        let beam = gaussian_beam(50.0, 0.5, 0.5, Helicity::Minus, 8).unwrap();
        assert!((beam.norm_squared() - 1.0).abs() < 1e-8);
        let grid = beam.grid();
        let mean = (0..grid.len()).fold(Vector3::zeros(), |acc, i| acc + beam.direction(i) * beam.probability_weight(i));
        let mean = mean.normalize();
        assert!((mean - Vector3::z()).norm() < 1e-8);
        // ⟨θ²⟩ ≈ ⟨k_r²⟩/k_A² = Δ_r²/k_A²
        let theta2: f64 = (0..grid.len())
            .map(|i| beam.direction(i).z.acos().powi(2) * beam.probability_weight(i))
            .sum();
        let expect = 0.25 / 2500.0;
        assert!((theta2 / expect - 1.0).abs() < 0.02);
        assert!(gaussian_beam(1.0, 0.5, 0.1, Helicity::Plus, 4).is_err());
    }

    #[test]
    fn narrow_beam_has_no_longitudinal_entries() {
        let wide = effective_density(&gaussian_beam(10.0, 0.1, 1.0, Helicity::Plus, 8).unwrap()).unwrap();
        let narrow = effective_density(&gaussian_beam(10.0, 0.1, 1e-3, Helicity::Plus, 8).unwrap()).unwrap();
        let mono = DensityMatrix::pure(&[c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2), c(0.0, 0.0)]).unwrap();
        let z_entries = |r: &DensityMatrix| (0..3).map(|m| r.matrix()[(m, 2)].norm()).fold(0.0, f64::max);
        assert!(z_entries(&narrow) < 1e-6);
        assert!(z_entries(&narrow) < z_entries(&wide));
        assert!(narrow.max_abs_diff(&mono) < 1e-6);
        assert!(wide.eigenvalues()[2] < 1.0);
    }

    #[test]
    fn circular_pair_error_scaling() {
        let k_a = 100.0;
        let errs: Vec<f64> = [0.03, 0.01, 0.003]
            .iter()
            .map(|&r| circular_pair_error(k_a, 0.5 * r * k_a, r * k_a, 8).unwrap())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] > 0.0);
        let ratio = errs[1] / circular_pair_closed_form(k_a, 1.0);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn audit_limits() {
        let a = gaussian_beam(10.0, 0.5, 0.5, Helicity::Plus, 6).unwrap();
        assert!((orthogonality_audit(&a, &a).unwrap() - 0.5).abs() < 1e-12);
        let b = gaussian_beam(10.0, 0.5, 0.5, Helicity::Minus, 6).unwrap();
        let pe = orthogonality_audit(&a, &b).unwrap();
        assert!(pe > 0.0);
        assert!((pe - circular_pair_error(10.0, 0.5, 0.5, 6).unwrap()).abs() < 1e-15);
        assert!(circular_pair_error(1.0, 1e-4, 1e-4, 6).unwrap() < 1e-6);
    }

    #[test]
    fn boost_keeps_transversality_and_measure() {
        let beam = gaussian_beam(10.0, 0.5, 2.0, Helicity::Plus, 6).unwrap();
        let lambda = LorentzTransform::boost_from_velocity(Vector3::new(0.3, -0.2, 0.6)).unwrap();
        let moved = boost_photon(&lambda, &beam).unwrap();
        assert_eq!(moved.grid().weights(), beam.grid().weights());
        for i in 0..moved.grid().len() {
            let a = moved.polarization(i);
            assert!(hermitian_dot(&complexify(&moved.direction(i)), &a).norm() < 1e-10);
        }
        assert!((moved.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doppler_factor() {
        let r = doppler_error(100.0, 0.5, 1.0, 0.0, 8).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-10);
        for v in [0.5, -0.5] {
            let r = doppler_error(100.0, 0.5, 1.0, v, 8).unwrap();
            assert!((r.ratio / r.closed_form_ratio - 1.0).abs() < 0.05, "v = {v}: {r:?}");
        }
        assert!(doppler_error(100.0, 0.5, 1.0, 1.0, 8).is_err());
    }

    #[test]
    fn probabilities_invariant_under_global_rotation() {
        let beam = gaussian_beam(10.0, 0.5, 2.0, Helicity::Plus, 5).unwrap();
        let rot = Rotation::about_axis(Vector3::new(0.2, 0.7, -0.3).normalize(), 0.9);
        // rotating the packet and the measured axes together leaves E_{R m} unchanged
        let moved = boost_photon(&LorentzTransform::from_rotation(&rot), &beam).unwrap();
        let povm = build_povm(beam.grid().clone()).unwrap();
        let povm_r = build_povm(moved.grid().clone()).unwrap();
        for m in 0..3 {
            let axis = rot.apply(&Vector3::ith(m, 1.0)).map(|x| c(x, 0.0));
            let p = povm_r.combination_probability(&moved, &[axis[0], axis[1], axis[2]]).unwrap();
            assert!((p - povm.probability(&beam, m).unwrap()).abs() < 1e-10);
        }
    }
}
