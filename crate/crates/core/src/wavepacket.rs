//! Momentum-space discretization.
//!
//! Integrals over momentum are replaced by tensor-product Gauss–Hermite
//! sums mapped onto a Gaussian's center and widths. Grid weights absorb the
//! measure, so that `Σᵢ wᵢ g(pᵢ) ≈ ∫ g` under the grid's convention:
//!
//! * [`MeasureConvention::Plain`]: `∫ d³p`.
//! * [`MeasureConvention::Invariant`]: `∫ d³k / ((2π)³ 2k⁰)`, with
//!   `k⁰ = (m² + k²)^{1/2}` evaluated at each node.
//!
//! With `n` nodes per axis the rule is exact for `e^{-Σ(p-c)²/Δ²}` times a
//! polynomial of degree `≤ 2n - 1` in each coordinate (plain convention).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{FourVector, LorentzTransform};
use crate::numeric::pairwise_sum_by;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureConvention {
    Plain,
    Invariant,
}

/// Gauss–Hermite nodes and weights for `∫ e^{-x²} f(x) dx`.
///
/// Returns `(nodes, weights, scaled)` with `scaled[i] = weights[i]·e^{xᵢ²}`,
/// computed without forming the tiny weights first. Nodes are ascending and
/// exactly antisymmetric.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut scaled = vec![0.0; n];
    let half = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[n - 1],
            3 => 1.91 * z - 0.91 * x[n - 2],
            _ => 2.0 * z - x[n - i + 1],
        };
        let mut converged = false;
        for _ in 0..100 {
            let (p1, p2) = hermite_pair(n, z, pim4);
            let dz = p1 / ((2.0 * nf).sqrt() * p2);
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        debug_assert!(converged, "Gauss-Hermite Newton iteration stalled");
        if n % 2 == 1 && i == half - 1 {
            z = 0.0;
        }
        // ψ_{n-1}(z) = p_{n-1}(z) e^{-z²/2}
        let (_, psi) = hermite_pair(n, z, pim4 * (-0.5 * z * z).exp());
        let s = 1.0 / (nf * psi * psi);
        x[n - 1 - i] = z;
        x[i] = -z;
        scaled[n - 1 - i] = s;
        scaled[i] = s;
    }
    let weights = x.iter().zip(&scaled).map(|(xi, s)| s * (-xi * xi).exp()).collect();
    (x, weights, scaled)
}

/// Orthonormal Hermite recurrence started at `p₀ = start`; returns
/// `(p_n(z), p_{n-1}(z))`.
fn hermite_pair(n: usize, z: f64, start: f64) -> (f64, f64) {
    let mut p1 = start;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, p2)
}

/// A Gaussian target: center and per-axis widths `Δ` of the amplitude
/// `exp(-Σ (p - c)² / 2Δ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    #[serde(alias = "centers")]
    pub center: [f64; 3],
    pub widths: [f64; 3],
}

impl GaussianSpec {
    pub fn new(center: [f64; 3], widths: [f64; 3]) -> Result<Self> {
        let spec = GaussianSpec { center, widths };
        spec.validate()?;
        Ok(spec)
    }

    /// Isotropic packet centered at zero momentum.
    pub fn isotropic(delta: f64) -> Result<Self> {
        Self::new([0.0; 3], [delta; 3])
    }

    /// Beam along `ẑ`: mean momentum `k_A ẑ`, radial width `Δ_r` on x and y,
    /// longitudinal width `Δ_z`.
    pub fn beam(k_a: f64, delta_z: f64, delta_r: f64) -> Result<Self> {
        Self::new([0.0, 0.0, k_a], [delta_r, delta_r, delta_z])
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return domain(format!("Gaussian widths must be positive, got {:?}", self.widths));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return domain("Gaussian center must be finite");
        }
        Ok(())
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::from(self.center)
    }

    /// `Δ_z / Δ_r` for beams (axis 2 over axis 0).
    pub fn aspect_ratio(&self) -> f64 {
        self.widths[2] / self.widths[0]
    }

    /// `exp(-Σ (p - c)² / 2Δ²)`, unnormalized.
    pub fn amplitude(&self, p: &Vector3<f64>) -> f64 {
        let e: f64 = (0..3)
            .map(|a| {
                let d = (p[a] - self.center[a]) / self.widths[a];
                d * d
            })
            .sum();
        (-0.5 * e).exp()
    }

    /// `N` with `∫ d³p |N·amplitude|² = 1`.
    pub fn plain_normalization(&self) -> f64 {
        let vol: f64 = self.widths.iter().product();
        PI.powf(-0.75) / vol.sqrt()
    }
}

/// JSON-facing grid configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(flatten)]
    pub gaussian: GaussianSpec,
    pub nodes_per_axis: usize,
    pub convention: MeasureConvention,
    #[serde(default)]
    pub mass: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<MomentumGrid> {
        gauss_grid(&self.gaussian, self.nodes_per_axis, self.convention, self.mass)
    }
}

/// Quadrature nodes (3-momenta) and measure-absorbing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    nodes: Vec<Vector3<f64>>,
    weights: Vec<f64>,
    convention: MeasureConvention,
    mass: f64,
    nodes_per_axis: usize,
}

/// Tensor-product Gauss–Hermite grid targeting `spec`.
pub fn gauss_grid(
    spec: &GaussianSpec,
    nodes_per_axis: usize,
    convention: MeasureConvention,
    mass: f64,
) -> Result<MomentumGrid> {
    spec.validate()?;
    if nodes_per_axis < 1 {
        return domain("nodes_per_axis must be at least 1");
    }
    if !(mass >= 0.0) || !mass.is_finite() {
        return domain(format!("mass must be non-negative, got {mass}"));
    }
    let (x, _, scaled) = gauss_hermite(nodes_per_axis);
    let vol: f64 = spec.widths.iter().product();
    let n = nodes_per_axis;
    let mut nodes = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let p = Vector3::new(
                    spec.center[0] + spec.widths[0] * x[i],
                    spec.center[1] + spec.widths[1] * x[j],
                    spec.center[2] + spec.widths[2] * x[k],
                );
                let mut w = vol * scaled[i] * scaled[j] * scaled[k];
                if convention == MeasureConvention::Invariant {
                    let e = (mass * mass + p.norm_squared()).sqrt();
                    if !(e > 0.0) {
                        return domain("invariant measure is singular at a node with k⁰ = 0");
                    }
                    w /= (2.0 * PI).powi(3) * 2.0 * e;
                }
                nodes.push(p);
                weights.push(w);
            }
        }
    }
    Ok(MomentumGrid { nodes, weights, convention, mass, nodes_per_axis })
}

impl MomentumGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn convention(&self) -> MeasureConvention {
        self.convention
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Per-axis resolution the grid was built with (kept through transport).
    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    /// `(m² + p²)^{1/2}` at node `i`.
    pub fn energy(&self, i: usize) -> f64 {
        (self.mass * self.mass + self.nodes[i].norm_squared()).sqrt()
    }

    pub fn four_momentum(&self, i: usize) -> FourVector {
        FourVector { t: self.energy(i), spatial: self.nodes[i] }
    }

    /// `Σᵢ wᵢ g(pᵢ)` with a fixed pairwise reduction order.
    pub fn integrate<F: Fn(&Vector3<f64>) -> f64>(&self, g: F) -> f64 {
        pairwise_sum_by(self.len(), &|i| self.weights[i] * g(&self.nodes[i]))
    }

    /// Moves every node to the spatial part of `Λp`.
    ///
    /// Plain weights pick up the Jacobian `(Λp)⁰/p⁰` of `d³p`; invariant
    /// weights are unchanged.
    pub fn transport(&self, lambda: &LorentzTransform) -> MomentumGrid {
        let mut nodes = Vec::with_capacity(self.len());
        let mut weights = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let p = self.four_momentum(i);
            let q = lambda.apply(&p);
            nodes.push(q.spatial);
            weights.push(match self.convention {
                MeasureConvention::Plain => self.weights[i] * q.t / p.t,
                MeasureConvention::Invariant => self.weights[i],
            });
        }
        MomentumGrid { nodes, weights, convention: self.convention, mass: self.mass, nodes_per_axis: self.nodes_per_axis }
    }

    fn same_as(&self, other: &MomentumGrid) -> Result<()> {
        if self.convention != other.convention {
            return Err(Error::GridMismatch(format!(
                "measure conventions differ ({:?} vs {:?})",
                self.convention, other.convention
            )));
        }
        if self.nodes != other.nodes || self.weights != other.weights {
            return Err(Error::GridMismatch("amplitudes live on different nodes".into()));
        }
        Ok(())
    }
}

/// Complex amplitudes on a grid, `components` values per node (node-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitudes {
    grid: Arc<MomentumGrid>,
    components: usize,
    values: Vec<C>,
}

impl Amplitudes {
    pub fn new(grid: Arc<MomentumGrid>, components: usize, values: Vec<C>) -> Result<Self> {
        if components == 0 || values.len() != grid.len() * components {
            return Err(Error::DimensionMismatch { expected: grid.len() * components.max(1), found: values.len() });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return domain("amplitudes must be finite");
        }
        Ok(Amplitudes { grid, components, values })
    }

    /// Samples a scalar profile at every node.
    pub fn from_fn<F: Fn(&Vector3<f64>) -> C>(grid: Arc<MomentumGrid>, f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(&f).collect();
        Self::new(grid, 1, values)
    }

    /// Raw Gaussian `exp(-Σ (p - c)²/2Δ²)` on `grid`, not normalized.
    pub fn gaussian(grid: Arc<MomentumGrid>, spec: &GaussianSpec) -> Result<Self> {
        Self::from_fn(grid, |p| C::new(spec.amplitude(p), 0.0))
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[C] {
        &self.values
    }

    /// Values at node `i`.
    pub fn at(&self, i: usize) -> &[C] {
        &self.values[i * self.components..(i + 1) * self.components]
    }

    pub fn scaled(&self, s: C) -> Self {
        Amplitudes { grid: self.grid.clone(), components: self.components, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn norm_squared(&self) -> f64 {
        inner_product(self, self).map(|z| z.re).unwrap_or(f64::NAN)
    }
}

/// `Σᵢ wᵢ Σ_c conj(f_c(pᵢ)) g_c(pᵢ)`.
pub fn inner_product(f: &Amplitudes, g: &Amplitudes) -> Result<C> {
    if !Arc::ptr_eq(&f.grid, &g.grid) {
        f.grid.same_as(&g.grid)?;
    }
    if f.components != g.components {
        return Err(Error::DimensionMismatch { expected: f.components, found: g.components });
    }
    let k = f.components;
    let w = f.grid.weights();
    Ok(pairwise_sum_by(w.len(), &|i| {
        let s: C = (0..k).map(|c| f.values[i * k + c].conj() * g.values[i * k + c]).sum();
        s * w[i]
    }))
}

/// Rescales `f` to unit norm.
pub fn normalize(f: &Amplitudes) -> Result<Amplitudes> {
    let n2 = f.norm_squared();
    if !(n2 > 0.0) || !n2.is_finite() {
        return domain("cannot normalize a zero-norm amplitude");
    }
    Ok(f.scaled(C::new(1.0 / n2.sqrt(), 0.0)))
}
