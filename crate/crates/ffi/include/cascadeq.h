#ifndef CASCADEQ_H
#define CASCADEQ_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum CqStatus {
  CQ_STATUS_OK = 0,
  CQ_STATUS_NULL_POINTER = 1,
  CQ_STATUS_INVALID_PARAMETER = 2,
  CQ_STATUS_SIMULATION = 3,
  CQ_STATUS_INSUFFICIENT_STATISTICS = 4,
  CQ_STATUS_PANIC = 5,
} CqStatus;

// Opaque conversion model.
typedef struct CqModel CqModel;

typedef struct CqO2MParams {
  double gamma_fe_s;
  double gamma_fg_t;
  double gamma_eg_t;
  double g_c;
  double kappa_c;
  double eta;
  double omega_0;
  double sigma;
  double t0;
  uint32_t cavity_dim;
  bool strict_herald;
} CqO2MParams;

// `omega_0` NaN selects the default drive `gamma_fg_t / 3`.
typedef struct CqM2OParams {
  double gamma_fg_t;
  double gamma_eg_t;
  double g_c;
  double kappa_c;
  double omega_0;
  uint32_t cavity_dim;
  bool strict_herald;
} CqM2OParams;

typedef struct CqEnsembleSummary {
  uint64_t n_traj;
  uint64_t n_failed;
  uint64_t herald_count;
  double efficiency;
  double efficiency_stderr;
  // NaN when too few heralds were seen.
  double rate_mhz;
} CqEnsembleSummary;

// Lengths in m, impedance in ohm, `f_c` in MHz.
typedef struct CqDeviceParams {
  double z_cav;
  double d;
  double d_prime;
  double l;
  double f_c;
  double a;
  double eps_gaas;
} CqDeviceParams;

typedef struct CqCouplingReport {
  // C m
  double p;
  double eps_eff;
  double enhancement;
  // V/m
  double e_rms;
  // MHz
  double g_c;
} CqCouplingReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *cq_last_error(void);

// Library version, static storage.
const char *cq_version(void);

struct CqO2MParams cq_o2m_params_default(void);

struct CqM2OParams cq_m2o_params_default(void);

// # Safety
// `params` must be NULL or point to a valid struct; `out` must be NULL or
// writable.
enum CqStatus cq_model_new_o2m(const struct CqO2MParams *params, struct CqModel **out);

// # Safety
// As [`cq_model_new_o2m`].
enum CqStatus cq_model_new_m2o(const struct CqM2OParams *params, struct CqModel **out);

// # Safety
// `model` must be NULL or a handle from `cq_model_new_*` not yet freed.
void cq_model_free(struct CqModel *model);

// Hilbert-space dimension, 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
uintptr_t cq_model_dim(const struct CqModel *model);

// Runs `n_traj` trajectories; trajectory `i` uses seed `seed + i`.
// `threads` 0 uses every core. Results do not depend on `threads`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum CqStatus cq_model_run(const struct CqModel *model,
                           uint64_t n_traj,
                           uint64_t seed,
                           uint32_t threads,
                           struct CqEnsembleSummary *out);

// Weak-input conversion efficiency.
//
// # Safety
// `out` must be writable.
enum CqStatus cq_analytic_efficiency(double gamma_fg_t, double gamma_eg_t, double g_c, double *out);

// `gamma_eg_t` maximizing the weak-input efficiency.
double cq_optimal_gamma_eg(double gamma_fg_t, double g_c);

struct CqDeviceParams cq_device_params_default(void);

// # Safety
// `dev` must point to a valid struct and `out` be writable.
enum CqStatus cq_coupling_strength(const struct CqDeviceParams *dev, struct CqCouplingReport *out);

// Probability that the which-bin erasure heralds. `detectors` is 1 or 2.
//
// # Safety
// `out` must be writable.
enum CqStatus cq_erasure_herald_prob(double early_re,
                                     double early_im,
                                     double late_re,
                                     double late_im,
                                     double detector_efficiency,
                                     uint32_t detectors,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASCADEQ_H */
