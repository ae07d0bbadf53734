//! C interface to `relqi`.
//!
//! Every function returns a [`RelqiStatus`] and writes results through out
//! pointers. Packets and channels are opaque handles owned by the caller and
//! released with the matching `_free` function. After a failure,
//! [`relqi_last_error_message`] describes it.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use relqi::channel::{decoherence_channel, BoostChannelSpec};
use relqi::entangle::entanglement_point;
use relqi::photon::{circular_pair_error, doppler_error};
use relqi::qmatrix::{entropy, is_completely_positive, DensityMatrix, QubitChannel};
use relqi::spin_half::{
    beta_for_gamma, boost_packet, gamma_parameter, gaussian_spin_down, gaussian_spin_up, observer_transform,
    reduced_spin_density, spin_point, SpinorPacket,
};
use relqi::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelqiStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    DimensionMismatch = 3,
    GridMismatch = 4,
    InvalidState = 5,
    Panic = 6,
}

/// Opaque spin-½ wave packet.
pub struct RelqiSpinPacket(SpinorPacket);

/// Opaque qubit channel.
pub struct RelqiChannel(QubitChannel);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> RelqiStatus {
    match e {
        Error::Domain(_) => RelqiStatus::Domain,
        Error::DimensionMismatch { .. } => RelqiStatus::DimensionMismatch,
        Error::GridMismatch(_) => RelqiStatus::GridMismatch,
        Error::InvalidState(_) => RelqiStatus::InvalidState,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), RelqiStatus>>(f: F) -> RelqiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            RelqiStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            RelqiStatus::Panic
        }
    }
}

fn lib<T>(r: relqi::Result<T>) -> Result<T, RelqiStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> RelqiStatus {
    set_error("null pointer argument".into());
    RelqiStatus::NullPointer
}

/// Writes `v` through `out`.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn put<T>(out: *mut T, v: T) -> Result<(), RelqiStatus> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn relqi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `Γ = (Δ/m)(1 - √(1-β²))/β`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relqi_gamma_parameter(delta: f64, m: f64, beta: f64, out: *mut f64) -> RelqiStatus {
    guard(|| put(out, lib(gamma_parameter(delta, m, beta))?))
}

/// Speed at which a packet of width `Δ/m` reaches `Γ`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relqi_beta_for_gamma(gamma: f64, delta_over_m: f64, out: *mut f64) -> RelqiStatus {
    guard(|| put(out, lib(beta_for_gamma(gamma, delta_over_m))?))
}

/// Spin entropy (bits) and pair error at one `(θ, Γ)` point, `m = 1`.
///
/// # Safety
/// Both out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relqi_spin_point(
    theta: f64,
    gamma: f64,
    delta_over_m: f64,
    nodes_per_axis: usize,
    entropy_bits: *mut f64,
    p_error: *mut f64,
) -> RelqiStatus {
    guard(|| {
        if entropy_bits.is_null() || p_error.is_null() {
            return Err(null());
        }
        let p = lib(spin_point(theta, gamma, delta_over_m, nodes_per_axis))?;
        put(entropy_bits, p.entropy_bits)?;
        put(p_error, p.p_error)
    })
}

/// Creates a Gaussian packet at rest, spin up (`spin_up != 0`) or down.
///
/// # Safety
/// `out` must be valid for writes; the handle is released with
/// [`relqi_spin_packet_free`].
#[no_mangle]
pub unsafe extern "C" fn relqi_spin_packet_gaussian(
    delta: f64,
    m: f64,
    nodes_per_axis: usize,
    spin_up: i32,
    out: *mut *mut RelqiSpinPacket,
) -> RelqiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let p = lib(if spin_up != 0 {
            gaussian_spin_up(delta, m, nodes_per_axis)
        } else {
            gaussian_spin_down(delta, m, nodes_per_axis)
        })?;
        put(out, Box::into_raw(Box::new(RelqiSpinPacket(p))))
    })
}

/// The packet seen by an observer with speed `β` at angle `θ` to `z`.
///
/// # Safety
/// `packet` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relqi_spin_packet_boost(
    packet: *const RelqiSpinPacket,
    beta: f64,
    theta: f64,
    out: *mut *mut RelqiSpinPacket,
) -> RelqiStatus {
    guard(|| {
        let (Some(p), false) = (packet.as_ref(), out.is_null()) else {
            return Err(null());
        };
        let lambda = lib(observer_transform(beta, theta))?;
        let moved = lib(boost_packet(&lambda, &p.0))?;
        put(out, Box::into_raw(Box::new(RelqiSpinPacket(moved))))
    })
}

/// Reduced spin matrix, row-major real and imaginary parts (4 entries each).
///
/// # Safety
/// `packet` must be a live handle; `re` and `im` must hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn relqi_spin_packet_density(
    packet: *const RelqiSpinPacket,
    re: *mut f64,
    im: *mut f64,
) -> RelqiStatus {
    guard(|| {
        let (Some(p), false, false) = (packet.as_ref(), re.is_null(), im.is_null()) else {
            return Err(null());
        };
        let tau = lib(reduced_spin_density(&p.0))?;
        for r in 0..2 {
            for c in 0..2 {
                let z = tau.matrix()[(r, c)];
                re.add(2 * r + c).write(z.re);
                im.add(2 * r + c).write(z.im);
            }
        }
        Ok(())
    })
}

/// Von Neumann entropy (bits) of the packet's reduced spin matrix.
///
/// # Safety
/// `packet` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relqi_spin_packet_entropy(packet: *const RelqiSpinPacket, out: *mut f64) -> RelqiStatus {
    guard(|| {
        let Some(p) = packet.as_ref() else {
            return Err(null());
        };
        put(out, entropy(&lib(reduced_spin_density(&p.0))?))
    })
}

/// # Safety
/// `packet` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relqi_spin_packet_free(packet: *mut RelqiSpinPacket) {
    if !packet.is_null() {
        drop(Box::from_raw(packet));
    }
}

/// Error probability for opposite-helicity Gaussian beams.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relqi_circular_pair_error(
    k_a: f64,
    delta_z: f64,
    delta_r: f64,
    nodes_per_axis: usize,
    out: *mut f64,
) -> RelqiStatus {
    guard(|| put(out, lib(circular_pair_error(k_a, delta_z, delta_r, nodes_per_axis))?))
}

/// `P'_E/P_E` for an observer moving with speed `v` along the beam.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relqi_doppler_ratio(
    k_a: f64,
    delta_z: f64,
    delta_r: f64,
    v: f64,
    nodes_per_axis: usize,
    out: *mut f64,
) -> RelqiStatus {
    guard(|| put(out, lib(doppler_error(k_a, delta_z, delta_r, v, nodes_per_axis))?.ratio))
}

/// Concurrence of a singlet Gaussian pair seen at speed `β`, `m = 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relqi_singlet_concurrence(
    delta_over_m: f64,
    beta: f64,
    nodes_per_axis: usize,
    out: *mut f64,
) -> RelqiStatus {
    guard(|| put(out, lib(entanglement_point(delta_over_m, beta, nodes_per_axis))?.concurrence))
}

/// The decoherence channel of strength `Γ ∈ [0, 2]`.
///
/// # Safety
/// `out` must be valid for writes; release with [`relqi_channel_free`].
#[no_mangle]
pub unsafe extern "C" fn relqi_channel_decoherence(gamma: f64, out: *mut *mut RelqiChannel) -> RelqiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let spec = lib(BoostChannelSpec::new(gamma, 0.0))?;
        let ch = lib(decoherence_channel(&spec))?;
        put(out, Box::into_raw(Box::new(RelqiChannel(ch))))
    })
}

/// The transpose map, a positive but not completely positive reference.
///
/// # Safety
/// `out` must be valid for writes; release with [`relqi_channel_free`].
#[no_mangle]
pub unsafe extern "C" fn relqi_channel_transpose(out: *mut *mut RelqiChannel) -> RelqiStatus {
    guard(|| put(out, Box::into_raw(Box::new(RelqiChannel(QubitChannel::transpose())))))
}

/// Applies the channel to a 2×2 density matrix given row-major.
///
/// # Safety
/// `channel` must be a live handle; each array must hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn relqi_channel_apply(
    channel: *const RelqiChannel,
    in_re: *const f64,
    in_im: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> RelqiStatus {
    guard(|| {
        let Some(ch) = channel.as_ref() else {
            return Err(null());
        };
        if in_re.is_null() || in_im.is_null() || out_re.is_null() || out_im.is_null() {
            return Err(null());
        }
        let m = DMatrix::from_fn(2, 2, |r, c| Complex64::new(*in_re.add(2 * r + c), *in_im.add(2 * r + c)));
        let rho = lib(DensityMatrix::new(m))?;
        let rho = Matrix2::from_fn(|r, c| rho.matrix()[(r, c)]);
        let out = ch.0.apply_matrix(&rho);
        for r in 0..2 {
            for c in 0..2 {
                out_re.add(2 * r + c).write(out[(r, c)].re);
                out_im.add(2 * r + c).write(out[(r, c)].im);
            }
        }
        Ok(())
    })
}

/// Smallest Choi eigenvalue; non-negative (to 1e-12) for CP maps.
///
/// # Safety
/// `channel` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relqi_channel_min_choi_eigenvalue(channel: *const RelqiChannel, out: *mut f64) -> RelqiStatus {
    guard(|| {
        let Some(ch) = channel.as_ref() else {
            return Err(null());
        };
        put(out, is_completely_positive(&ch.0, 1e-12).min_choi_eigenvalue)
    })
}

/// # Safety
/// `channel` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relqi_channel_free(channel: *mut RelqiChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}
