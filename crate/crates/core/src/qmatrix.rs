//! Finite-dimensional density-matrix algebra: partial traces, entropies,
//! minimum-error discrimination and qubit channels with Choi certificates.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Hermiticity and trace tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues at or above `-PSD_TOL` are accepted (and clipped for entropy).
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues below this contribute nothing to the entropy.
pub const ENTROPY_FLOOR: f64 = 1e-14;

type C = Complex64;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C>) -> (Vec<f64>, DMatrix<C>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &DMatrix<C>) -> Vec<f64> {
    hermitian_eigen(m).0
}

fn hermiticity_defect(m: &DMatrix<C>) -> f64 {
    (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// A d×d density matrix (d ∈ {2, 3, 4}).
///
/// A *subnormalized* matrix is allowed a trace in `(0, 1]`; the flag is set
/// explicitly at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C>,
    subnormalized: bool,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(m: DMatrix<C>) -> Result<Self> {
        Self::validated(m, false)
    }

    /// As [`DensityMatrix::new`] but accepts `0 < tr ρ ≤ 1`.
    pub fn new_subnormalized(m: DMatrix<C>) -> Result<Self> {
        Self::validated(m, true)
    }

    fn validated(m: DMatrix<C>, subnormalized: bool) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.ncols() });
        }
        if !(2..=4).contains(&d) {
            return Err(Error::InvalidState(format!("unsupported dimension {d}")));
        }
        if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = hermiticity_defect(&m);
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
        }
        let m = (&m + m.adjoint()).scale(0.5);
        let tr = m.trace().re;
        let trace_ok = if subnormalized {
            tr > 0.0 && tr <= 1.0 + STATE_TOL
        } else {
            (tr - 1.0).abs() <= STATE_TOL
        };
        if !trace_ok {
            return Err(Error::InvalidState(format!("trace {tr} out of range")));
        }
        let min = hermitian_eigenvalues(&m)[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix { m, subnormalized })
    }

    /// Hermitizes without validation; for results of exact algebra on
    /// already-valid inputs.
    pub(crate) fn from_raw(m: DMatrix<C>) -> Self {
        let m = (&m + m.adjoint()).scale(0.5);
        DensityMatrix { m, subnormalized: false }
    }

    /// `|v⟩⟨v| / ⟨v|v⟩`.
    pub fn pure(v: &[C]) -> Result<Self> {
        let v = DVector::from_column_slice(v);
        let n2 = v.norm_squared();
        if !(n2 > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Self::new(&v * v.adjoint() / C::new(n2, 0.0))
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, d) / C::new(d as f64, 0.0))
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let d = populations.len();
        Self::new(DMatrix::from_fn(d, d, |i, j| {
            if i == j { C::new(populations[i], 0.0) } else { C::new(0.0, 0.0) }
        }))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C> {
        &self.m
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &DMatrix<C>) -> Self {
        DensityMatrix { m: u * &self.m * u.adjoint(), subnormalized: self.subnormalized }
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.m - &other.m).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Which tensor factor of `H_A ⊗ H_B` to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Traces out one factor of a `d_a·d_b` dimensional state.
///
/// Basis ordering is `|a⟩ ⊗ |b⟩ ↦ a·d_b + b`.
pub fn partial_trace(rho: &DensityMatrix, dims: (usize, usize), traced: Subsystem) -> Result<DensityMatrix> {
    let (da, db) = dims;
    if da * db != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: da * db });
    }
    let m = rho.matrix();
    let out = match traced {
        Subsystem::A => (0..da).fold(DMatrix::zeros(db, db), |acc, a| {
            acc + m.view((a * db, a * db), (db, db))
        }),
        Subsystem::B => DMatrix::from_fn(da, da, |i, j| {
            m.view((i * db, j * db), (db, db)).trace()
        }),
    };
    if rho.is_subnormalized() {
        DensityMatrix::new_subnormalized(out)
    } else {
        DensityMatrix::new(out)
    }
}

/// Von Neumann entropy in bits.
pub fn entropy(rho: &DensityMatrix) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l > ENTROPY_FLOOR)
        .map(|l| -l * l.log2())
        .sum();
    s.max(0.0)
}

/// `‖ρ₁ - ρ₂‖₁`, the sum of absolute eigenvalues of the difference.
pub fn trace_norm_of_difference(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch { expected: rho1.dim(), found: rho2.dim() });
    }
    let diff = rho1.matrix() - rho2.matrix();
    Ok(hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum())
}

/// Trace distance `½‖ρ₁ - ρ₂‖₁`.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    Ok(0.5 * trace_norm_of_difference(rho1, rho2)?)
}

/// Minimum error probability for telling `ρ₁` from `ρ₂` with equal priors:
/// `½ - ¼ tr|ρ₁ - ρ₂|`.
pub fn helstrom_error(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    let p = 0.5 - 0.25 * trace_norm_of_difference(rho1, rho2)?;
    Ok(p.clamp(0.0, 0.5))
}

/// Internal form of a qubit channel.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ChannelForm {
    Kraus(Vec<Matrix2<C>>),
    /// Acts on row-major vectorizations: `vec(ρ)[2i + j] = ρ_ij`.
    Superoperator(Matrix4<C>),
}

/// A linear map on 2×2 matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitChannel {
    form: ChannelForm,
    trace_preserving: bool,
}

impl QubitChannel {
    pub fn identity() -> Self {
        QubitChannel { form: ChannelForm::Kraus(vec![Matrix2::identity()]), trace_preserving: true }
    }

    /// Operator-sum form; the trace-preserving flag is set when
    /// `Σ K†K = I` to `STATE_TOL`.
    pub fn from_kraus(ops: Vec<Matrix2<C>>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::Domain("a channel needs at least one Kraus operator".into()));
        }
        let sum = ops.iter().fold(Matrix2::zeros(), |acc, k| acc + k.adjoint() * k);
        let tp = (sum - Matrix2::identity()).iter().all(|c| c.norm() <= STATE_TOL);
        Ok(QubitChannel { form: ChannelForm::Kraus(ops), trace_preserving: tp })
    }

    pub fn from_superoperator(s: Matrix4<C>) -> Self {
        let tp = (0..2).all(|k| {
            (0..2).all(|l| {
                let t = s[(0, 2 * k + l)] + s[(3, 2 * k + l)];
                let target = if k == l { 1.0 } else { 0.0 };
                (t - C::new(target, 0.0)).norm() <= STATE_TOL
            })
        });
        QubitChannel { form: ChannelForm::Superoperator(s), trace_preserving: tp }
    }

    /// `ρ ↦ ρᵀ`: positive and trace-preserving but not completely positive.
    pub fn transpose() -> Self {
        let mut s = Matrix4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                s[(2 * i + j, 2 * j + i)] = C::new(1.0, 0.0);
            }
        }
        Self::from_superoperator(s)
    }

    /// Convex combination `p·A + (1 - p)·B` in superoperator form.
    pub fn mix(p: f64, a: &QubitChannel, b: &QubitChannel) -> Self {
        let s = a.superoperator() * C::new(p, 0.0) + b.superoperator() * C::new(1.0 - p, 0.0);
        Self::from_superoperator(s)
    }

    /// The completely depolarizing map `ρ ↦ tr(ρ)·I/2`.
    pub fn depolarize() -> Self {
        let half = C::new(0.5, 0.0);
        let mut s = Matrix4::zeros();
        for out in [0, 3] {
            for inp in [0, 3] {
                s[(out, inp)] = half;
            }
        }
        Self::from_superoperator(s)
    }

    pub fn form(&self) -> &ChannelForm {
        &self.form
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn superoperator(&self) -> Matrix4<C> {
        match &self.form {
            ChannelForm::Superoperator(s) => *s,
            ChannelForm::Kraus(ops) => ops.iter().fold(Matrix4::zeros(), |acc, k| {
                acc + k.kronecker(&k.map(|c| c.conj()))
            }),
        }
    }

    /// Applies the map to a 2×2 matrix.
    pub fn apply_matrix(&self, rho: &Matrix2<C>) -> Matrix2<C> {
        match &self.form {
            ChannelForm::Kraus(ops) => {
                ops.iter().fold(Matrix2::zeros(), |acc, k| acc + k * rho * k.adjoint())
            }
            ChannelForm::Superoperator(s) => {
                let v = s * nalgebra::Vector4::new(rho[(0, 0)], rho[(0, 1)], rho[(1, 0)], rho[(1, 1)]);
                Matrix2::new(v[0], v[1], v[2], v[3])
            }
        }
    }

    /// Same map, stored as a superoperator.
    pub fn to_superoperator_form(&self) -> Self {
        QubitChannel {
            form: ChannelForm::Superoperator(self.superoperator()),
            trace_preserving: self.trace_preserving,
        }
    }
}

/// Applies a qubit channel. The result is a valid state whenever the channel
/// is completely positive and trace preserving.
pub fn apply_channel(ch: &QubitChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho.dim() });
    }
    let m = rho.matrix();
    let r = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let out = ch.apply_matrix(&r);
    Ok(DensityMatrix::from_raw(DMatrix::from_fn(2, 2, |i, j| out[(i, j)])))
}

/// Choi matrix `Σᵢⱼ |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, built from the unnormalized
/// maximally entangled operator; trace 2 for trace-preserving maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix(Matrix4<C>);

impl ChoiMatrix {
    pub fn matrix(&self) -> &Matrix4<C> {
        &self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&DMatrix::from_fn(4, 4, |i, j| self.0[(i, j)]))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Kraus operators `√λₖ · unvec(vₖ)` from the non-negative part of the
    /// spectrum; eigenvalues at or below `cutoff` are dropped.
    pub fn kraus_operators(&self, cutoff: f64) -> Vec<Matrix2<C>> {
        let (values, vectors) = hermitian_eigen(&DMatrix::from_fn(4, 4, |i, j| self.0[(i, j)]));
        values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > cutoff)
            .map(|(k, &l)| {
                let s = l.sqrt();
                // column (2i + a) of the Choi matrix carries K_{a i}
                Matrix2::from_fn(|a, i| vectors[(2 * i + a, k)] * s)
            })
            .collect()
    }
}

pub fn choi_matrix(ch: &QubitChannel) -> ChoiMatrix {
    let mut c = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut e = Matrix2::zeros();
            e[(i, j)] = C::new(1.0, 0.0);
            let img = ch.apply_matrix(&e);
            for a in 0..2 {
                for b in 0..2 {
                    c[(2 * i + a, 2 * j + b)] = img[(a, b)];
                }
            }
        }
    }
    ChoiMatrix(c)
}

/// Complete-positivity verdict together with the certificate eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpCheck {
    pub is_cp: bool,
    pub min_choi_eigenvalue: f64,
}

pub fn is_completely_positive(ch: &QubitChannel, tol: f64) -> CpCheck {
    let min = choi_matrix(ch).min_eigenvalue();
    CpCheck { is_cp: min >= -tol, min_choi_eigenvalue: min }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    /// Element-wise `τ_{μν} = Σ_m ρ_{mμ,mν}` (and its mirror for side B).
    fn partial_trace_oracle(m: &DMatrix<C>, da: usize, db: usize, traced: Subsystem) -> DMatrix<C> {
        match traced {
            Subsystem::A => {
                let mut t = DMatrix::zeros(db, db);
                for mu in 0..db {
                    for nu in 0..db {
                        for a in 0..da {
                            t[(mu, nu)] += m[(a * db + mu, a * db + nu)];
                        }
                    }
                }
                t
            }
            Subsystem::B => {
                let mut t = DMatrix::zeros(da, da);
                for mu in 0..da {
                    for nu in 0..da {
                        for b in 0..db {
                            t[(mu, nu)] += m[(mu * db + b, nu * db + b)];
                        }
                    }
                }
                t
            }
        }
    }

    #[test]
    fn product_state_reduces_to_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_density(&mut rng, 2);
        let b = random_density(&mut rng, 2);
        let prod = DensityMatrix::new(a.matrix().kronecker(b.matrix())).unwrap();
        let tb = partial_trace(&prod, (2, 2), Subsystem::A).unwrap();
        assert!(tb.max_abs_diff(&b) < 1e-14);
        let ta = partial_trace(&prod, (2, 2), Subsystem::B).unwrap();
        assert!(ta.max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn bell_state_marginals_are_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = DensityMatrix::pure(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
        let half = DensityMatrix::maximally_mixed(2).unwrap();
        for side in [Subsystem::A, Subsystem::B] {
            assert!(partial_trace(&phi, (2, 2), side).unwrap().max_abs_diff(&half) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_matches_index_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let rho = random_density(&mut rng, 4);
            for side in [Subsystem::A, Subsystem::B] {
                let t = partial_trace(&rho, (2, 2), side).unwrap();
                let o = partial_trace_oracle(rho.matrix(), 2, 2, side);
                assert!((t.matrix() - o).iter().all(|z| z.norm() < 1e-12));
            }
        }
        let rho = random_density(&mut rng, 4);
        assert!(matches!(
            partial_trace(&rho, (3, 2), Subsystem::A),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn entropy_values() {
        let up = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(entropy(&up).abs() < 1e-15);
        assert!((entropy(&DensityMatrix::maximally_mixed(2).unwrap()) - 1.0).abs() < 1e-14);
        let s = entropy(&DensityMatrix::diagonal(&[0.9, 0.1]).unwrap());
        assert!((s - 0.4690).abs() < 1e-4);
        assert!((entropy(&DensityMatrix::maximally_mixed(4).unwrap()) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn helstrom_values() {
        let zero = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let one = DensityMatrix::pure(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let plus = DensityMatrix::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(helstrom_error(&zero, &zero).unwrap(), 0.5);
        assert!(helstrom_error(&zero, &one).unwrap().abs() < 1e-15);
        let expected = 0.5 - 2f64.sqrt() / 4.0;
        assert!((helstrom_error(&zero, &plus).unwrap() - expected).abs() < 1e-10);
        let three = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(helstrom_error(&zero, &three).is_err());
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(DensityMatrix::diagonal(&[1.2, -0.2]).is_err());
        assert!(DensityMatrix::diagonal(&[0.5, 0.4]).is_err());
        assert!(DensityMatrix::new_subnormalized(
            DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.0), c(0.4, 0.0)]))
        )
        .unwrap()
        .is_subnormalized());
        let non_herm = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(non_herm).is_err());
        assert!(DensityMatrix::maximally_mixed(5).is_err());
    }

    #[test]
    fn unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2, 3, 4] {
            for _ in 0..20 {
                let a = random_density(&mut rng, d);
                let b = random_density(&mut rng, d);
                let u = random_unitary(&mut rng, d);
                let p = helstrom_error(&a, &b).unwrap();
                assert!((p - helstrom_error(&b, &a).unwrap()).abs() < 1e-10);
                let pu = helstrom_error(&a.conjugate_by(&u), &b.conjugate_by(&u)).unwrap();
                assert!((p - pu).abs() < 1e-10);
                assert!((entropy(&a) - entropy(&a.conjugate_by(&u))).abs() < 1e-10);
                let s = entropy(&a);
                assert!(s >= 0.0 && s <= (d as f64).log2() + 1e-12);
            }
        }
    }

    #[test]
    fn identity_channel_and_dual_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(&mut rng, 2);
        let id = QubitChannel::identity();
        assert!(apply_channel(&id, &rho).unwrap().max_abs_diff(&rho) < 1e-15);
        for _ in 0..20 {
            let ch = random_cptp(&mut rng, 3);
            assert!(ch.is_trace_preserving());
            let sup = ch.to_superoperator_form();
            assert!(sup.is_trace_preserving());
            let rho = random_density(&mut rng, 2);
            let a = apply_channel(&ch, &rho).unwrap();
            let b = apply_channel(&sup, &rho).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
            assert!((a.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn choi_of_identity_is_bell_projector() {
        let choi = choi_matrix(&QubitChannel::identity());
        let mut expected = Matrix4::zeros();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expected[(i, j)] = c(1.0, 0.0);
        }
        assert!((choi.matrix() - expected).iter().all(|z| z.norm() < 1e-15));
        let eig = choi.eigenvalues();
        assert!((eig[3] - 2.0).abs() < 1e-12 && eig[..3].iter().all(|l| l.abs() < 1e-12));
        let cp = is_completely_positive(&QubitChannel::identity(), 1e-12);
        assert!(cp.is_cp && cp.min_choi_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn transpose_map_is_not_cp() {
        let t = QubitChannel::transpose();
        assert!(t.is_trace_preserving());
        let eig = choi_matrix(&t).eigenvalues();
        assert!((eig[0] + 1.0).abs() < 1e-12);
        assert!(eig[1..].iter().all(|l| (l - 1.0).abs() < 1e-12));
        let cp = is_completely_positive(&t, 1e-12);
        assert!(!cp.is_cp && cp.min_choi_eigenvalue < 0.0);
    }

    #[test]
    fn depolarizing_mixture_is_cp() {
        let ch = QubitChannel::mix(0.9, &QubitChannel::identity(), &QubitChannel::depolarize());
        assert!(ch.is_trace_preserving());
        let cp = is_completely_positive(&ch, 1e-12);
        assert!(cp.is_cp);
        // spectrum: 0.9·2 on the Bell vector plus 0.05 everywhere
        assert!((cp.min_choi_eigenvalue - 0.05).abs() < 1e-12);
    }

    #[test]
    fn cp_channels_never_improve_discrimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let k = 1 + rand::Rng::gen_range(&mut rng, 0..4);
            let ch = random_cptp(&mut rng, k);
            let a = random_density(&mut rng, 2);
            let b = random_density(&mut rng, 2);
            let before = helstrom_error(&a, &b).unwrap();
            let after = helstrom_error(&apply_channel(&ch, &a).unwrap(), &apply_channel(&ch, &b).unwrap()).unwrap();
            assert!(after >= before - 1e-9, "{after} < {before}");
        }
    }

    #[test]
    fn kraus_reconstruction_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let ch = random_cptp(&mut rng, 2);
            let choi = choi_matrix(&ch);
            assert!(choi.min_eigenvalue() > -1e-12);
            assert!((choi.matrix().trace().re - 2.0).abs() < 1e-12);
            let rebuilt = QubitChannel::from_kraus(choi.kraus_operators(1e-14)).unwrap();
            assert!(rebuilt.is_trace_preserving());
            let again = choi_matrix(&rebuilt);
            assert!((again.matrix() - choi.matrix()).iter().all(|z| z.norm() < 1e-10));
        }
    }
}
