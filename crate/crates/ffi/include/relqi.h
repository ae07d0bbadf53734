#ifndef RELQI_H
#define RELQI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum RelqiStatus {
  RELQI_STATUS_OK = 0,
  RELQI_STATUS_NULL_POINTER = 1,
  RELQI_STATUS_DOMAIN = 2,
  RELQI_STATUS_DIMENSION_MISMATCH = 3,
  RELQI_STATUS_GRID_MISMATCH = 4,
  RELQI_STATUS_INVALID_STATE = 5,
  RELQI_STATUS_PANIC = 6,
} RelqiStatus;

/**
 * Opaque qubit channel.
 */
typedef struct RelqiChannel RelqiChannel;

/**
 * Opaque spin-½ wave packet.
 */
typedef struct RelqiSpinPacket RelqiSpinPacket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t relqi_last_error_message(char *buf, uintptr_t len);

/**
 * `Γ = (Δ/m)(1 - √(1-β²))/β`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum RelqiStatus relqi_gamma_parameter(double delta, double m, double beta, double *out);

/**
 * Speed at which a packet of width `Δ/m` reaches `Γ`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum RelqiStatus relqi_beta_for_gamma(double gamma, double delta_over_m, double *out);

/**
 * Spin entropy (bits) and pair error at one `(θ, Γ)` point, `m = 1`.
 *
 * # Safety
 * Both out pointers must be valid for writes.
 */
enum RelqiStatus relqi_spin_point(double theta,
                                  double gamma,
                                  double delta_over_m,
                                  uintptr_t nodes_per_axis,
                                  double *entropy_bits,
                                  double *p_error);

/**
 * Creates a Gaussian packet at rest, spin up (`spin_up != 0`) or down.
 *
 * # Safety
 * `out` must be valid for writes; the handle is released with
 * [`relqi_spin_packet_free`].
 */
enum RelqiStatus relqi_spin_packet_gaussian(double delta,
                                            double m,
                                            uintptr_t nodes_per_axis,
                                            int32_t spin_up,
                                            struct RelqiSpinPacket **out);

/**
 * The packet seen by an observer with speed `β` at angle `θ` to `z`.
 *
 * # Safety
 * `packet` must be a live handle; `out` must be valid for writes.
 */
enum RelqiStatus relqi_spin_packet_boost(const struct RelqiSpinPacket *packet,
                                         double beta,
                                         double theta,
                                         struct RelqiSpinPacket **out);

/**
 * Reduced spin matrix, row-major real and imaginary parts (4 entries each).
 *
 * # Safety
 * `packet` must be a live handle; `re` and `im` must hold 4 doubles.
 */
enum RelqiStatus relqi_spin_packet_density(const struct RelqiSpinPacket *packet,
                                           double *re,
                                           double *im);

/**
 * Von Neumann entropy (bits) of the packet's reduced spin matrix.
 *
 * # Safety
 * `packet` must be a live handle; `out` must be valid for writes.
 */
enum RelqiStatus relqi_spin_packet_entropy(const struct RelqiSpinPacket *packet, double *out);

/**
 * # Safety
 * `packet` must be null or a handle not yet freed.
 */
void relqi_spin_packet_free(struct RelqiSpinPacket *packet);

/**
 * Error probability for opposite-helicity Gaussian beams.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum RelqiStatus relqi_circular_pair_error(double k_a,
                                           double delta_z,
                                           double delta_r,
                                           uintptr_t nodes_per_axis,
                                           double *out);

/**
 * `P'_E/P_E` for an observer moving with speed `v` along the beam.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum RelqiStatus relqi_doppler_ratio(double k_a,
                                     double delta_z,
                                     double delta_r,
                                     double v,
                                     uintptr_t nodes_per_axis,
                                     double *out);

/**
 * Concurrence of a singlet Gaussian pair seen at speed `β`, `m = 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum RelqiStatus relqi_singlet_concurrence(double delta_over_m,
                                           double beta,
                                           uintptr_t nodes_per_axis,
                                           double *out);

/**
 * The decoherence channel of strength `Γ ∈ [0, 2]`.
 *
 * # Safety
 * `out` must be valid for writes; release with [`relqi_channel_free`].
 */
enum RelqiStatus relqi_channel_decoherence(double gamma, struct RelqiChannel **out);

/**
 * The transpose map, a positive but not completely positive reference.
 *
 * # Safety
 * `out` must be valid for writes; release with [`relqi_channel_free`].
 */
enum RelqiStatus relqi_channel_transpose(struct RelqiChannel **out);

/**
 * Applies the channel to a 2×2 density matrix given row-major.
 *
 * # Safety
 * `channel` must be a live handle; each array must hold 4 doubles.
 */
enum RelqiStatus relqi_channel_apply(const struct RelqiChannel *channel,
                                     const double *in_re,
                                     const double *in_im,
                                     double *out_re,
                                     double *out_im);

/**
 * Smallest Choi eigenvalue; non-negative (to 1e-12) for CP maps.
 *
 * # Safety
 * `channel` must be a live handle; `out` must be valid for writes.
 */
enum RelqiStatus relqi_channel_min_choi_eigenvalue(const struct RelqiChannel *channel, double *out);

/**
 * # Safety
 * `channel` must be null or a handle not yet freed.
 */
void relqi_channel_free(struct RelqiChannel *channel);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELQI_H */
