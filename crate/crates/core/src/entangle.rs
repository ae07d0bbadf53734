//! Two spin-½ particles: `|Υ⟩ = Σ ∫∫ dμ₁dμ₂ g(σ₁,σ₂,k₁,k₂) |k₁σ₁⟩|k₂σ₂⟩`.
//!
//! States are stored as finite sums of product terms
//! `g = Σ_a c_a ψ¹_a(σ₁,k₁) ψ²_a(σ₂,k₂)`, each factor a spinor field on a
//! single-particle invariant-measure grid. A boost acts on each particle
//! separately, so it maps product terms to product terms and the cost stays
//! linear in the single-particle grid size.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::geometry::{rotation_to_su2, wigner_rotation, LorentzTransform, SpinHalfUnitary};
use crate::numeric::pairwise_sum_by;
use crate::qmatrix::{entropy, hermitian_eigen, partial_trace, DensityMatrix, Subsystem};
use crate::wavepacket::{gauss_grid, inner_product, normalize, Amplitudes, GaussianSpec, MeasureConvention};

type C = Complex64;

/// Default single-particle resolution for two-particle sweeps.
pub const DEFAULT_NODES_PER_AXIS: usize = 12;

/// `c · ψ¹ ⊗ ψ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub coefficient: C,
    pub first: Amplitudes,
    pub second: Amplitudes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleAmplitude {
    terms: Vec<ProductTerm>,
    mass: f64,
}

fn check_field(a: &Amplitudes, reference: &Amplitudes) -> Result<()> {
    let g = a.grid();
    if g.convention() != MeasureConvention::Invariant {
        return Err(Error::GridMismatch("two-particle states use the invariant measure".into()));
    }
    if a.components() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: a.components() });
    }
    let r = reference.grid();
    if !Arc::ptr_eq(g, r) && (g.nodes() != r.nodes() || g.weights() != r.weights()) {
        return Err(Error::GridMismatch("all factors of one particle must share a grid".into()));
    }
    Ok(())
}

impl TwoParticleAmplitude {
    /// Requires unit norm to 1e-8 and a common positive mass.
    pub fn new(terms: Vec<ProductTerm>) -> Result<Self> {
        let Some(t0) = terms.first() else {
            return Err(Error::InvalidState("a two-particle state needs at least one term".into()));
        };
        for t in &terms {
            check_field(&t.first, &t0.first)?;
            check_field(&t.second, &t0.second)?;
        }
        let mass = t0.first.grid().mass();
        if !(mass > 0.0) || t0.second.grid().mass() != mass {
            return domain("both particles need the same positive mass");
        }
        let state = TwoParticleAmplitude { terms, mass };
        let n = state.norm_squared()?;
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("two-particle norm {n} differs from 1")));
        }
        Ok(state)
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `Σ_ab c_a* c_b ⟨ψ¹_a|ψ¹_b⟩⟨ψ²_a|ψ²_b⟩`.
    pub fn norm_squared(&self) -> Result<f64> {
        let mut s = C::new(0.0, 0.0);
        for a in &self.terms {
            for b in &self.terms {
                s += a.coefficient.conj()
                    * b.coefficient
                    * inner_product(&a.first, &b.first)?
                    * inner_product(&a.second, &b.second)?;
            }
        }
        Ok(s.re)
    }

    /// `g(σ₁σ₂, k₁ᵢ, k₂ⱼ)` in the order `(↑↑, ↑↓, ↓↑, ↓↓)`.
    pub fn amplitude(&self, i: usize, j: usize) -> [C; 4] {
        let mut g = [C::new(0.0, 0.0); 4];
        for t in &self.terms {
            let (a, b) = (t.first.at(i), t.second.at(j));
            for s1 in 0..2 {
                for s2 in 0..2 {
                    g[2 * s1 + s2] += t.coefficient * a[s1] * b[s2];
                }
            }
        }
        g
    }

    /// Applies momentum-independent spin unitaries to each particle.
    pub fn local_unitary(&self, u1: &Matrix2<C>, u2: &Matrix2<C>) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(ProductTerm {
                    coefficient: t.coefficient,
                    first: map_spinors(&t.first, |_, s| apply2(u1, s))?,
                    second: map_spinors(&t.second, |_, s| apply2(u2, s))?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(TwoParticleAmplitude { terms, mass: self.mass })
    }
}

fn apply2(u: &Matrix2<C>, s: [C; 2]) -> [C; 2] {
    [u[(0, 0)] * s[0] + u[(0, 1)] * s[1], u[(1, 0)] * s[0] + u[(1, 1)] * s[1]]
}

fn map_spinors<F: Fn(usize, [C; 2]) -> [C; 2]>(a: &Amplitudes, f: F) -> Result<Amplitudes> {
    let values = (0..a.grid().len())
        .flat_map(|i| {
            let v = a.at(i);
            f(i, [v[0], v[1]])
        })
        .collect();
    Amplitudes::new(a.grid().clone(), 2, values)
}

/// Singlet spin factor times the same zero-centered Gaussian for both particles.
pub fn bell_gaussian(delta: f64, m: f64, nodes_per_axis: usize) -> Result<TwoParticleAmplitude> {
    if !(delta > 0.0) || !(m > 0.0) {
        return domain(format!("width and mass must be positive (delta = {delta}, m = {m})"));
    }
    let spec = GaussianSpec::isotropic(delta)?;
    let grid = Arc::new(gauss_grid(&spec, nodes_per_axis, MeasureConvention::Invariant, m)?);
    let f = normalize(&Amplitudes::gaussian(grid.clone(), &spec)?)?;
    let up = spinor_field(&f, [C::new(1.0, 0.0), C::new(0.0, 0.0)])?;
    let down = spinor_field(&f, [C::new(0.0, 0.0), C::new(1.0, 0.0)])?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    TwoParticleAmplitude::new(vec![
        ProductTerm { coefficient: C::new(s, 0.0), first: up.clone(), second: down.clone() },
        ProductTerm { coefficient: C::new(-s, 0.0), first: down, second: up },
    ])
}

/// Scalar profile times a fixed spinor.
pub fn spinor_field(profile: &Amplitudes, spinor: [C; 2]) -> Result<Amplitudes> {
    if profile.components() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: profile.components() });
    }
    let values = profile.values().iter().flat_map(|f| [spinor[0] * f, spinor[1] * f]).collect();
    Amplitudes::new(profile.grid().clone(), 2, values)
}

/// `ψ'(Λk) = D[W(Λ, k)] ψ(k)` on an invariant-measure grid.
pub fn boost_spinor_field(lambda: &LorentzTransform, field: &Amplitudes) -> Result<Amplitudes> {
    let grid = field.grid();
    let m = grid.mass();
    let d: Vec<SpinHalfUnitary> = (0..grid.len())
        .map(|i| {
            let p = grid.four_momentum(i);
            p.check_on_shell(m)?;
            Ok(rotation_to_su2(&wigner_rotation(lambda, &p, m)?))
        })
        .collect::<Result<_>>()?;
    let moved = Arc::new(grid.transport(lambda));
    let rotated = map_spinors(field, |i, s| d[i].apply(&s))?;
    Amplitudes::new(moved, 2, rotated.values().to_vec())
}

/// `U(Λ) ⊗ U(Λ)`, acting on each particle separately.
pub fn boost_pair(lambda: &LorentzTransform, state: &TwoParticleAmplitude) -> Result<TwoParticleAmplitude> {
    // distinct factors are boosted once and shared between terms
    let mut cache: Vec<(Amplitudes, Amplitudes)> = Vec::new();
    let mut boost = |a: &Amplitudes| -> Result<Amplitudes> {
        if let Some((_, b)) = cache.iter().find(|(orig, _)| orig == a) {
            return Ok(b.clone());
        }
        let b = boost_spinor_field(lambda, a)?;
        cache.push((a.clone(), b.clone()));
        Ok(b)
    };
    let mut terms = Vec::with_capacity(state.terms.len());
    for t in &state.terms {
        let first = boost(&t.first)?;
        let second = boost(&t.second)?;
        terms.push(ProductTerm { coefficient: t.coefficient, first, second });
    }
    let first_grid = terms[0].first.grid().clone();
    let second_grid = terms[0].second.grid().clone();
    for t in &mut terms {
        // keep one Arc per particle so grid checks are pointer comparisons
        t.first = Amplitudes::new(first_grid.clone(), 2, t.first.values().to_vec())?;
        t.second = Amplitudes::new(second_grid.clone(), 2, t.second.values().to_vec())?;
    }
    Ok(TwoParticleAmplitude { terms, mass: state.mass })
}

/// `Σᵢ wᵢ ψ_a(kᵢ) ψ_b(kᵢ)†`.
fn spin_overlap(a: &Amplitudes, b: &Amplitudes) -> Matrix2<C> {
    let w = a.grid().weights();
    Matrix2::from_fn(|r, c| pairwise_sum_by(w.len(), &|i| a.at(i)[r] * b.at(i)[c].conj() * w[i]))
}

/// Spin-spin density matrix after tracing out both momenta.
pub fn spin_spin_density(state: &TwoParticleAmplitude) -> Result<DensityMatrix> {
    let mut rho = DMatrix::<C>::zeros(4, 4);
    for a in &state.terms {
        for b in &state.terms {
            let c = a.coefficient * b.coefficient.conj();
            let o1 = spin_overlap(&a.first, &b.first);
            let o2 = spin_overlap(&a.second, &b.second);
            rho += o1.kronecker(&o2).map(|z| z * c);
        }
    }
    DensityMatrix::new(rho)
}

/// Wootters concurrence of a two-qubit state.
///
/// With `ρ = Σ_k v_k v_k†` (`v_k = √p_k e_k`), the singular values of
/// `τ_kl = v_kᵀ(σ_y⊗σ_y)v_l` are the `λᵢ` of the usual
/// `√(√ρ ρ̃ √ρ)` construction; `C = max(0, λ₁ - λ₂ - λ₃ - λ₄)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let v = DMatrix::from_fn(4, 4, |r, k| vecs[(r, k)] * vals[k].max(0.0).sqrt());
    // σ_y ⊗ σ_y is real, antidiagonal (-1, 1, 1, -1)
    let yy = DMatrix::from_fn(4, 4, |r, c| match (r, c) {
        (0, 3) | (3, 0) => C::new(-1.0, 0.0),
        (1, 2) | (2, 1) => C::new(1.0, 0.0),
        _ => C::new(0.0, 0.0),
    });
    let tau = v.transpose() * yy * &v;
    let mut s: Vec<f64> = tau.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok((s[0] - s[1] - s[2] - s[3]).clamp(0.0, 1.0))
}

/// Observer speed `β` along `z`; the singlet Gaussian is isotropic, so the
/// direction is immaterial.
pub fn pair_transform(beta: f64) -> Result<LorentzTransform> {
    if !(0.0..1.0).contains(&beta) {
        return domain(format!("speed must satisfy 0 <= beta < 1, got {beta}"));
    }
    LorentzTransform::boost_from_velocity(Vector3::new(0.0, 0.0, -beta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementRow {
    pub delta_over_m: f64,
    pub beta: f64,
    pub concurrence: f64,
    /// Entropy of either single-particle spin marginal.
    pub entropy_of_marginal_bits: f64,
    pub grid_nodes: usize,
}

/// Boosted singlet Gaussian in units `m = 1`.
pub fn entanglement_point(delta_over_m: f64, beta: f64, nodes_per_axis: usize) -> Result<EntanglementRow> {
    let lambda = pair_transform(beta)?;
    let state = bell_gaussian(delta_over_m, 1.0, nodes_per_axis)?;
    let rho = spin_spin_density(&boost_pair(&lambda, &state)?)?;
    let marginal = partial_trace(&rho, (2, 2), Subsystem::B)?;
    Ok(EntanglementRow {
        delta_over_m,
        beta,
        concurrence: concurrence(&rho)?,
        entropy_of_marginal_bits: entropy(&marginal),
        // single-particle nodes squared: the number of momentum pairs
        grid_nodes: state.terms[0].first.grid().len().pow(2),
    })
}

/// Rows ordered `Δ/m`-major, in input order.
pub fn entanglement_sweep(deltas_over_m: &[f64], betas: &[f64], nodes_per_axis: usize) -> Vec<Result<EntanglementRow>> {
    let cells: Vec<(f64, f64)> = deltas_over_m.iter().flat_map(|&d| betas.iter().map(move |&b| (d, b))).collect();
    cells.par_iter().map(|&(d, b)| entanglement_point(d, b, nodes_per_axis)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_density, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn singlet() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&[C::new(0.0, 0.0), C::new(s, 0.0), C::new(-s, 0.0), C::new(0.0, 0.0)]).unwrap()
    }

    /// `Σᵢⱼ wᵢwⱼ g(kᵢ,kⱼ) g(kᵢ,kⱼ)†` over every node pair.
    fn dense_oracle(state: &TwoParticleAmplitude) -> DMatrix<C> {
        let w1 = state.terms[0].first.grid().weights();
        let w2 = state.terms[0].second.grid().weights();
        let mut rho = DMatrix::<C>::zeros(4, 4);
        for i in 0..w1.len() {
            for j in 0..w2.len() {
                let g = state.amplitude(i, j);
                for r in 0..4 {
                    for c in 0..4 {
                        rho[(r, c)] += g[r] * g[c].conj() * (w1[i] * w2[j]);
                    }
                }
            }
        }
        rho
    }

    #[test]
    fn rest_frame_singlet() {
        let s = bell_gaussian(0.4, 1.0, 6).unwrap();
        assert!((s.norm_squared().unwrap() - 1.0).abs() < 1e-8);
        let rho = spin_spin_density(&s).unwrap();
        assert!(rho.max_abs_diff(&singlet()) < 1e-8);
        assert!((concurrence(&rho).unwrap() - 1.0).abs() < 1e-8);
        let marginal = partial_trace(&rho, (2, 2), Subsystem::A).unwrap();
        assert!(marginal.max_abs_diff(&DensityMatrix::maximally_mixed(2).unwrap()) < 1e-10);
    }

    #[test]
    fn product_of_spin_ups() {
        let spec = GaussianSpec::isotropic(0.3).unwrap();
        let grid = Arc::new(gauss_grid(&spec, 4, MeasureConvention::Invariant, 1.0).unwrap());
        let f = normalize(&Amplitudes::gaussian(grid, &spec).unwrap()).unwrap();
        let up = spinor_field(&f, [C::new(1.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        let s = TwoParticleAmplitude::new(vec![ProductTerm { coefficient: C::new(1.0, 0.0), first: up.clone(), second: up }]).unwrap();
        let rho = spin_spin_density(&s).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::diagonal(&[1.0, 0.0, 0.0, 0.0]).unwrap()) < 1e-12);
        assert!(concurrence(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn concurrence_fixtures() {
        assert!((concurrence(&singlet()).unwrap() - 1.0).abs() < 1e-12);
        let werner = |p: f64| {
            let m = singlet().matrix() * C::new(p, 0.0) + DMatrix::identity(4, 4) * C::new((1.0 - p) / 4.0, 0.0);
            DensityMatrix::new(m).unwrap()
        };
        assert!((concurrence(&werner(0.5)).unwrap() - 0.25).abs() < 1e-12);
        assert!(concurrence(&werner(0.3)).unwrap() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let a = random_density(&mut rng, 2);
            let b = random_density(&mut rng, 2);
            let prod = DensityMatrix::new(a.matrix().kronecker(b.matrix())).unwrap();
            assert!(concurrence(&prod).unwrap() < 1e-10);
        }
    }

    #[test]
    fn identity_boost_is_a_no_op() {
        let s = bell_gaussian(0.5, 1.0, 5).unwrap();
        let b = boost_pair(&LorentzTransform::identity(), &s).unwrap();
        for (t, u) in s.terms.iter().zip(&b.terms) {
            assert_eq!(t.first.grid().nodes(), u.first.grid().nodes());
            let d = t.first.values().iter().zip(u.first.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn boosted_density_matches_dense_oracle() {
        let s = bell_gaussian(0.5, 1.0, 6).unwrap();
        let b = boost_pair(&pair_transform(0.9).unwrap(), &s).unwrap();
        assert!((b.norm_squared().unwrap() - 1.0).abs() < 1e-8);
        let rho = spin_spin_density(&b).unwrap();
        let diff = (rho.matrix() - dense_oracle(&b)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff:e}");
    }

    #[test]
    fn sharp_singlet_keeps_entanglement() {
        let row = entanglement_point(1e-4, 0.9, 6).unwrap();
        assert!((row.concurrence - 1.0).abs() < 1e-4);
    }

    #[test]
    fn wide_singlet_loses_entanglement_monotonically() {
        let rows = entanglement_sweep(&[0.5], &[0.0, 0.3, 0.6, 0.9], 8);
        let c: Vec<f64> = rows.iter().map(|r| r.as_ref().unwrap().concurrence).collect();
        assert!((c[0] - 1.0).abs() < 1e-8);
        assert!(c[0] > c[1] && c[1] > c[2] && c[2] > c[3], "{c:?}");
    }

    #[test]
    fn inverse_boost_restores_concurrence() {
        let s = bell_gaussian(0.5, 1.0, 6).unwrap();
        let l = LorentzTransform::boost_from_velocity(Vector3::new(0.4, 0.2, -0.7)).unwrap();
        let back = boost_pair(&l.inverse(), &boost_pair(&l, &s).unwrap()).unwrap();
        let c0 = concurrence(&spin_spin_density(&s).unwrap()).unwrap();
        let c1 = concurrence(&spin_spin_density(&back).unwrap()).unwrap();
        assert!((c0 - c1).abs() < 1e-8);
    }

    #[test]
    fn local_unitaries_leave_concurrence_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = boost_pair(&pair_transform(0.8).unwrap(), &bell_gaussian(0.5, 1.0, 5).unwrap()).unwrap();
        let c0 = concurrence(&spin_spin_density(&s).unwrap()).unwrap();
        for _ in 0..10 {
            let u1 = random_unitary(&mut rng, 2);
            let u2 = random_unitary(&mut rng, 2);
            let u1 = Matrix2::from_fn(|r, c| u1[(r, c)]);
            let u2 = Matrix2::from_fn(|r, c| u2[(r, c)]);
            let t = s.local_unitary(&u1, &u2).unwrap();
            assert!((concurrence(&spin_spin_density(&t).unwrap()).unwrap() - c0).abs() < 1e-10);
        }
    }

    #[test]
    fn sweep_flags_bad_rows() {
        let rows = entanglement_sweep(&[0.3, -1.0], &[0.5, 1.0], 4);
        assert!(rows[0].is_ok());
        assert!(rows[1].is_err() && rows[2].is_err() && rows[3].is_err());
    }
}
