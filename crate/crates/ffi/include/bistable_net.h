#ifndef BISTABLE_NET_H
#define BISTABLE_NET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BnStatus {
  BN_STATUS_OK = 0,
  BN_STATUS_NULL_POINTER = 1,
  BN_STATUS_INVALID_ARGUMENT = 2,
  BN_STATUS_INVALID_CONFIG = 3,
  BN_STATUS_UNSUPPORTED = 4,
  BN_STATUS_NUMERICAL = 5,
  BN_STATUS_IO = 6,
  BN_STATUS_PANIC = 7,
} BnStatus;

typedef enum BnTopology {
  BN_TOPOLOGY_ALL_TO_ALL = 0,
  BN_TOPOLOGY_STAR = 1,
  BN_TOPOLOGY_LOOP = 2,
  BN_TOPOLOGY_LINE = 3,
} BnTopology;

typedef enum BnStability {
  BN_STABILITY_STABLE = 0,
  BN_STABILITY_UNSTABLE = 1,
  BN_STABILITY_MARGINAL = 2,
} BnStability;

typedef enum BnMethod {
  BN_METHOD_RK4 = 0,
  BN_METHOD_RK45 = 1,
} BnMethod;

// Equilibria of a piecewise-affine network.
typedef struct BnEquilibria BnEquilibria;

// A coupled network: model parameters plus diffusion graph.
typedef struct BnNetwork BnNetwork;

// Sampled trajectory.
typedef struct BnTrajectory BnTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none failed.
// The pointer stays valid until the next failing call on the same thread.
const char *bn_last_error_message(void);

// Network of `n` compartments with a PWA activator `g₁`, identity `g₂` and
// one of the named topologies at uniform gain `k`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum BnStatus bn_network_new_pwa(double gamma1,
                                 double gamma2,
                                 double v1,
                                 double v2,
                                 double theta,
                                 double delta,
                                 enum BnTopology topology,
                                 size_t n,
                                 double k,
                                 struct BnNetwork **out);

// Network described by a JSON run configuration (the CLI's `--config` format).
//
// # Safety
// `json` must be a NUL-terminated string; `out` as in [`bn_network_new_pwa`].
enum BnStatus bn_network_from_json(const char *json, struct BnNetwork **out);

// # Safety
// `net` must come from a `bn_network_*` constructor and not be used afterwards.
void bn_network_free(struct BnNetwork *net);

// Number of compartments; the state dimension is twice this.
//
// # Safety
// `net` must be a live handle; `n` must be writable.
enum BnStatus bn_network_size(const struct BnNetwork *net, size_t *n);

// Vector field at `x` (`len` = 2N values, `[X₁; X₂]`) written to `dx`.
//
// # Safety
// `x` and `dx` must point to at least `len` doubles.
enum BnStatus bn_vector_field(const struct BnNetwork *net, const double *x, double *dx, size_t len);

// Every equilibrium of a piecewise-affine network, with domain membership
// tolerance `tol`.
//
// # Safety
// `net` must be a live handle; `out` as in [`bn_network_new_pwa`].
enum BnStatus bn_equilibria_enumerate(const struct BnNetwork *net,
                                      double tol,
                                      struct BnEquilibria **out);

// # Safety
// `eq` must come from [`bn_equilibria_enumerate`] and not be used afterwards.
void bn_equilibria_free(struct BnEquilibria *eq);

// # Safety
// `eq` must be a live handle or null (reported as zero).
size_t bn_equilibria_count(const struct BnEquilibria *eq);

// State, stability and domain code (`-1`, `0`, `1` per compartment) of
// equilibrium `index`. `state` needs 2N doubles and `domain` N bytes; either
// may be null to skip it.
//
// # Safety
// Non-null buffers must hold at least `state_len` doubles / `domain_len` bytes.
enum BnStatus bn_equilibria_get(const struct BnEquilibria *eq,
                                size_t index,
                                double *state,
                                size_t state_len,
                                int8_t *domain,
                                size_t domain_len,
                                enum BnStability *stability);

// Integrate from `x0` over `[0, t_end]`. `dt` is the fixed step for RK4 and
// the output stride for RK45.
//
// # Safety
// `x0` must point to `len` doubles; `out` as in [`bn_network_new_pwa`].
enum BnStatus bn_simulate(const struct BnNetwork *net,
                          const double *x0,
                          size_t len,
                          double t_end,
                          double dt,
                          enum BnMethod method,
                          struct BnTrajectory **out);

// # Safety
// `traj` must come from [`bn_simulate`] and not be used afterwards.
void bn_trajectory_free(struct BnTrajectory *traj);

// Number of samples and state dimension.
//
// # Safety
// `traj` must be a live handle; `samples` and `dim` must be writable.
enum BnStatus bn_trajectory_shape(const struct BnTrajectory *traj, size_t *samples, size_t *dim);

// Copy sample times (`samples` doubles) and row-major states
// (`samples * dim` doubles). Either buffer may be null to skip it.
//
// # Safety
// Non-null buffers must hold at least `times_len` / `states_len` doubles.
enum BnStatus bn_trajectory_copy(const struct BnTrajectory *traj,
                                 double *times,
                                 size_t times_len,
                                 double *states,
                                 size_t states_len);

// All-to-all gains `k^λ` (every equilibrium synchronized above it) and `k^s`
// (no mixed ON/OFF saturated equilibrium above it).
//
// # Safety
// `net` must be a live handle; outputs must be writable.
enum BnStatus bn_thresholds(const struct BnNetwork *net, double *k_lambda_out, double *k_s_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BISTABLE_NET_H */
