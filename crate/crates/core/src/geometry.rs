//! Special-relativistic kinematics: four-vectors, Lorentz transformations,
//! rotations and the Wigner rotations induced on spin-½ particles.
//!
//! Units are `c = ħ = 1`; masses and momenta share one energy unit. The
//! metric is `η = diag(1, -1, -1, -1)`.
//!
//! A `LorentzTransform` is used passively throughout the crate: it maps the
//! momentum components measured by one observer onto those measured by
//! another. An observer moving with velocity `β` relative to the first one
//! sees momenta transformed by `LorentzTransform::boost_from_velocity(-β)`.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;

use crate::error::{domain, Result};

/// Relative tolerance for on-shell checks.
pub const ON_SHELL_TOL: f64 = 1e-10;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

fn metric() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0))
}

/// A contravariant four-vector `(t, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourVector {
    pub t: f64,
    pub spatial: Vector3<f64>,
}

impl FourVector {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        FourVector { t, spatial: Vector3::new(x, y, z) }
    }

    /// On-shell momentum of a particle of mass `m` with 3-momentum `p`.
    pub fn on_shell(m: f64, p: Vector3<f64>) -> Self {
        FourVector { t: (m * m + p.norm_squared()).sqrt(), spatial: p }
    }

    /// Null vector with spatial part `k` and `t = |k|`.
    pub fn lightlike(k: Vector3<f64>) -> Self {
        FourVector { t: k.norm(), spatial: k }
    }

    pub fn from_vector(v: Vector4<f64>) -> Self {
        FourVector { t: v[0], spatial: Vector3::new(v[1], v[2], v[3]) }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.t, self.spatial.x, self.spatial.y, self.spatial.z)
    }

    /// Minkowski square `t² - |x|²`.
    pub fn minkowski_sq(&self) -> f64 {
        self.t * self.t - self.spatial.norm_squared()
    }

    /// Checks `t > 0` and `t² - |x|² = m²` to relative `ON_SHELL_TOL`.
    pub fn check_on_shell(&self, m: f64) -> Result<()> {
        if !(m > 0.0) {
            return domain(format!("mass must be positive, got {m}"));
        }
        if !(self.t > 0.0) {
            return domain("four-momentum must have positive energy");
        }
        let defect = (self.minkowski_sq() - m * m).abs();
        if defect > ON_SHELL_TOL * self.t * self.t {
            return domain(format!(
                "off-shell momentum: p² - m² = {:e} for m = {m}",
                self.minkowski_sq() - m * m
            ));
        }
        Ok(())
    }
}

/// A proper orthochronous Lorentz transformation stored as a 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzTransform(Matrix4<f64>);

impl LorentzTransform {
    pub fn identity() -> Self {
        LorentzTransform(Matrix4::identity())
    }

    /// Wraps a matrix after checking `ΛᵀηΛ = η`, `det Λ = 1` and `Λ⁰⁰ ≥ 1`.
    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        let candidate = LorentzTransform(m);
        let defect = candidate.metric_defect();
        if defect > 1e-9 {
            return domain(format!("matrix does not preserve the metric (defect {defect:e})"));
        }
        if m[(0, 0)] < 1.0 - 1e-9 {
            return domain("transformation is not orthochronous");
        }
        if (m.determinant() - 1.0).abs() > 1e-9 {
            return domain("transformation is not proper");
        }
        Ok(candidate)
    }

    /// Pure boost taking the rest four-velocity to `(γ, γβ)`.
    pub fn boost_from_velocity(beta: Vector3<f64>) -> Result<Self> {
        let b2 = beta.norm_squared();
        if !(b2.sqrt() < 1.0 - 1e-12) {
            return domain(format!("superluminal velocity |beta| = {}", b2.sqrt()));
        }
        if b2 == 0.0 {
            return Ok(Self::identity());
        }
        let gamma = 1.0 / (1.0 - b2).sqrt();
        Ok(Self::boost_with_gamma(beta, gamma))
    }

    fn boost_with_gamma(beta: Vector3<f64>, gamma: f64) -> Self {
        // (γ - 1)/β² written as γ²/(γ + 1) to stay finite for tiny β
        let k = gamma * gamma / (gamma + 1.0);
        let mut m = Matrix4::identity();
        m[(0, 0)] = gamma;
        for i in 0..3 {
            m[(0, i + 1)] = gamma * beta[i];
            m[(i + 1, 0)] = gamma * beta[i];
            for j in 0..3 {
                m[(i + 1, j + 1)] += k * beta[i] * beta[j];
            }
        }
        LorentzTransform(m)
    }

    /// The pure boost `L(p)` with `L(p)·(m, 0, 0, 0) = p`.
    pub fn standard_boost(p: &FourVector, m: f64) -> Result<Self> {
        p.check_on_shell(m)?;
        let gamma = p.t / m;
        Ok(Self::boost_with_gamma(p.spatial / p.t, gamma))
    }

    /// Embeds a spatial rotation.
    pub fn from_rotation(r: &Rotation) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(r.matrix());
        LorentzTransform(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// `Λ⁻¹ = η Λᵀ η`.
    pub fn inverse(&self) -> Self {
        let eta = metric();
        LorentzTransform(eta * self.0.transpose() * eta)
    }

    pub fn apply(&self, v: &FourVector) -> FourVector {
        FourVector::from_vector(self.0 * v.to_vector())
    }

    /// `max |ΛᵀηΛ - η|`.
    pub fn metric_defect(&self) -> f64 {
        let eta = metric();
        (self.0.transpose() * eta * self.0 - eta).amax()
    }

    /// Polar decomposition `Λ = B·R` into a pure boost and a rotation.
    fn polar(&self) -> (Vector4<f64>, Rotation) {
        let u = self.0.column(0).into_owned();
        let b_inv = Self::boost_with_gamma(-Vector3::new(u[1], u[2], u[3]) / u[0], u[0]);
        let r = b_inv.0 * self.0;
        let block: Matrix3<f64> = r.fixed_view::<3, 3>(1, 1).into_owned();
        (u, Rotation(block))
    }

    /// The SL(2,C) image `A` with `A (x⁰ + x·σ) A† = (Λx)⁰ + (Λx)·σ`,
    /// defined up to an overall sign.
    fn sl2c(&self) -> Matrix2<Complex64> {
        let (u, r) = self.polar();
        boost_sl2c(u[0], Vector3::new(u[1], u[2], u[3]), 1.0) * rotation_to_su2(&r).0
    }
}

impl Mul for LorentzTransform {
    type Output = LorentzTransform;
    fn mul(self, rhs: LorentzTransform) -> LorentzTransform {
        LorentzTransform(self.0 * rhs.0)
    }
}

/// `((E + m) + p·σ) / sqrt(2m(E + m))`: the SL(2,C) image of the pure boost
/// taking `(m, 0)` to `(E, p)`.
fn boost_sl2c(e: f64, p: Vector3<f64>, m: f64) -> Matrix2<Complex64> {
    let norm = 1.0 / (2.0 * m * (e + m)).sqrt();
    let a = (e + m) * norm;
    pauli_combination(Complex64::new(a, 0.0), p * norm)
}

/// `a·I + v·σ` for real `v`.
fn pauli_combination(a: Complex64, v: Vector3<f64>) -> Matrix2<Complex64> {
    Matrix2::new(
        a + v.z,
        Complex64::new(v.x, -v.y),
        Complex64::new(v.x, v.y),
        a - v.z,
    )
}

/// Inverse of a determinant-one 2×2 matrix.
fn sl2_inverse(a: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    Matrix2::new(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)])
}

/// The Pauli matrices `σx, σy, σz`.
pub fn pauli() -> [Matrix2<Complex64>; 3] {
    [
        Matrix2::new(C0, C1, C1, C0),
        Matrix2::new(C0, -CI, CI, C0),
        Matrix2::new(C1, C0, C0, -C1),
    ]
}

/// A proper rotation of 3-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix after checking `RᵀR = I` and `det R = 1`.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let defect = (m.transpose() * m - Matrix3::identity()).amax();
        if defect > 1e-9 || (m.determinant() - 1.0).abs() > 1e-9 {
            return domain(format!("matrix is not a proper rotation (orthogonality defect {defect:e})"));
        }
        Ok(Rotation(m))
    }

    /// Right-handed rotation by `angle` about `axis` (normalized internally).
    pub fn about_axis(axis: Vector3<f64>, angle: f64) -> Self {
        let n = axis.normalize();
        let k = cross_matrix(&n);
        Rotation(Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos()))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let q = self.quaternion();
        2.0 * q[1..].iter().map(|c| c * c).sum::<f64>().sqrt().atan2(q[0])
    }

    /// Unit rotation axis; `None` for the identity.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        let q = self.quaternion();
        let v = Vector3::new(q[1], q[2], q[3]);
        let n = v.norm();
        (n > 1e-15).then(|| v / n)
    }

    /// Unit quaternion `(w, x, y, z)` with `w ≥ 0`.
    fn quaternion(&self) -> [f64; 4] {
        let r = &self.0;
        let tr = r.trace();
        let mut q = if tr > 0.0 {
            let s = 2.0 * (tr + 1.0).sqrt();
            [
                0.25 * s,
                (r[(2, 1)] - r[(1, 2)]) / s,
                (r[(0, 2)] - r[(2, 0)]) / s,
                (r[(1, 0)] - r[(0, 1)]) / s,
            ]
        } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
            let s = 2.0 * (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt();
            [
                (r[(2, 1)] - r[(1, 2)]) / s,
                0.25 * s,
                (r[(0, 1)] + r[(1, 0)]) / s,
                (r[(0, 2)] + r[(2, 0)]) / s,
            ]
        } else if r[(1, 1)] > r[(2, 2)] {
            let s = 2.0 * (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt();
            [
                (r[(0, 2)] - r[(2, 0)]) / s,
                (r[(0, 1)] + r[(1, 0)]) / s,
                0.25 * s,
                (r[(1, 2)] + r[(2, 1)]) / s,
            ]
        } else {
            let s = 2.0 * (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt();
            [
                (r[(1, 0)] - r[(0, 1)]) / s,
                (r[(0, 2)] + r[(2, 0)]) / s,
                (r[(1, 2)] + r[(2, 1)]) / s,
                0.25 * s,
            ]
        };
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
        for c in q.iter_mut() {
            *c *= sign / norm;
        }
        q
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

fn cross_matrix(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `R(k̂)`: rotation about `ẑ × k̂` by the polar angle of `k̂`, so that
/// `R(k̂)·ẑ = k̂`. Identity at `+ẑ`; rotation by π about `x̂` at `-ẑ`.
pub fn standard_rotation(khat: &Vector3<f64>) -> Result<Rotation> {
    if (khat.norm() - 1.0).abs() > 1e-10 {
        return domain(format!("direction must be a unit vector, |k| = {}", khat.norm()));
    }
    let c = khat.z;
    let v = Vector3::new(-khat.y, khat.x, 0.0);
    let s2 = v.norm_squared();
    if s2 < 1e-30 {
        return Ok(if c > 0.0 {
            Rotation::identity()
        } else {
            Rotation::about_axis(Vector3::x(), PI)
        });
    }
    let k = cross_matrix(&v);
    let m = if c > -0.5 {
        Matrix3::identity() + k + k * k / (1.0 + c)
    } else {
        // near -ẑ: use the explicit angle instead of 1/(1 + c)
        let s = s2.sqrt();
        let kn = k / s;
        Matrix3::identity() + kn * s + kn * kn * (1.0 - c)
    };
    Ok(Rotation(m))
}

/// A 2×2 unitary acting on spin-½ amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinHalfUnitary(pub(crate) Matrix2<Complex64>);

impl SpinHalfUnitary {
    pub fn identity() -> Self {
        SpinHalfUnitary(Matrix2::identity())
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    /// The rotation `R` with `U (v·σ) U† = (Rv)·σ`.
    pub fn to_rotation(&self) -> Rotation {
        su2_to_rotation(&self.0)
    }

    /// `max |U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix2::identity())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, spinor: &[Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[(0, 0)] * spinor[0] + m[(0, 1)] * spinor[1],
            m[(1, 0)] * spinor[0] + m[(1, 1)] * spinor[1],
        ]
    }
}

fn su2_to_rotation(u: &Matrix2<Complex64>) -> Rotation {
    let s = pauli();
    let ud = u.adjoint();
    let mut m = Matrix3::zeros();
    for j in 0..3 {
        let conj = u * s[j] * ud;
        for i in 0..3 {
            m[(i, j)] = 0.5 * (s[i] * conj).trace().re;
        }
    }
    Rotation(m)
}

/// The spin-½ image `exp(-iθ n̂·σ/2)` of a rotation, with `θ ∈ [0, π]`.
pub fn rotation_to_su2(r: &Rotation) -> SpinHalfUnitary {
    let [w, x, y, z] = r.quaternion();
    SpinHalfUnitary(Matrix2::new(
        Complex64::new(w, -z),
        Complex64::new(-y, -x),
        Complex64::new(y, -x),
        Complex64::new(w, z),
    ))
}

/// Spin-½ image of the Wigner rotation `W(Λ, p) = L(Λp)⁻¹ Λ L(p)`,
/// evaluated in SL(2,C) (the overall sign follows the SL(2,C) lift).
pub fn wigner_su2(lambda: &LorentzTransform, p: &FourVector, m: f64) -> Result<SpinHalfUnitary> {
    p.check_on_shell(m)?;
    let q = lambda.apply(p);
    let a_p = boost_sl2c(p.t, p.spatial, m);
    let a_q_inv = sl2_inverse(&boost_sl2c(q.t, q.spatial, m));
    Ok(SpinHalfUnitary(a_q_inv * lambda.sl2c() * a_p))
}

/// Wigner rotation `W(Λ, p) = L(Λp)⁻¹ Λ L(p)` for a particle of mass `m`.
pub fn wigner_rotation(lambda: &LorentzTransform, p: &FourVector, m: f64) -> Result<Rotation> {
    Ok(wigner_su2(lambda, p, m)?.to_rotation())
}
