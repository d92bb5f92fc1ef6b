#ifndef RAMAN_PAIR_H
#define RAMAN_PAIR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RpStatus {
  RP_STATUS_OK = 0,
  RP_STATUS_NULL_POINTER = 1,
  RP_STATUS_INVALID_INPUT = 2,
  RP_STATUS_SINGULAR_DETUNING = 3,
  RP_STATUS_NEAR_RESONANCE = 4,
  RP_STATUS_EMPTY_STATE = 5,
  RP_STATUS_NOT_TWO_BY_TWO = 6,
  RP_STATUS_UNDEFINED_OVERLAP = 7,
  RP_STATUS_NUMERICAL = 8,
  RP_STATUS_BUFFER_TOO_SMALL = 9,
  RP_STATUS_PANIC = 10,
} RpStatus;

/**
 * Atom species handle.
 */
typedef struct RpAtomSpec RpAtomSpec;

/**
 * Joint atom-photon state handle.
 */
typedef struct RpPairState RpPairState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static NUL-terminated string.
 */
const char *rp_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * excluding the terminator.
 */
size_t rp_last_error(char *buf, size_t len);

/**
 * The built-in sodium D2 species. Never null.
 */
struct RpAtomSpec *rp_atom_spec_sodium(void);

/**
 * Parses an atom species from its JSON file format.
 */
enum RpStatus rp_atom_spec_from_json(const char *json, struct RpAtomSpec **out);

void rp_atom_spec_free(struct RpAtomSpec *spec);

/**
 * Resonance angular frequency in rad/s.
 */
enum RpStatus rp_atom_spec_resonance(const struct RpAtomSpec *spec, double *out);

/**
 * Builds the joint state for a condensate in the single sublevel
 * `(doubled_f, doubled_m)`.
 *
 * `pump_dir`, `k`: 3 doubles. `pump_pol`: 6 doubles, interleaved
 * `re, im` per Cartesian component. `laser`: rad/s.
 */
enum RpStatus rp_pair_state_build(const struct RpAtomSpec *spec,
                                  const double *pump_dir,
                                  const double *pump_pol,
                                  double laser,
                                  int32_t doubled_f,
                                  int32_t doubled_m,
                                  const double *k,
                                  struct RpPairState **out);

/**
 * Keeps only the photon channel of final level `doubled_level`.
 */
enum RpStatus rp_pair_state_filter(const struct RpPairState *state,
                                   int32_t doubled_level,
                                   struct RpPairState **out);

void rp_pair_state_free(struct RpPairState *state);

/**
 * Photon channels (rows) and atomic sublevels (columns).
 */
enum RpStatus rp_pair_state_shape(const struct RpPairState *state, size_t *rows, size_t *cols);

/**
 * Row-major amplitudes as interleaved `re, im`; `len` counts doubles and
 * must be at least `2 * rows * cols`.
 */
enum RpStatus rp_pair_state_amplitudes(const struct RpPairState *state, double *buf, size_t len);

/**
 * Entanglement entropy in bits.
 */
enum RpStatus rp_pair_state_entropy(const struct RpPairState *state, double *out);

/**
 * Concurrence; the state must have a 2×2 support.
 */
enum RpStatus rp_pair_state_concurrence(const struct RpPairState *state, double *out);

/**
 * Maximal CHSH value; `settings` (4 doubles, may be null) receives
 * `a, a′, b, b′`.
 */
enum RpStatus rp_chsh_optimum(const struct RpPairState *state, double *s, double *settings);

/**
 * Simulated CHSH run of `n` trials at `settings` (4 doubles).
 */
enum RpStatus rp_chsh_sample(const struct RpPairState *state,
                             const double *settings,
                             uint64_t n,
                             uint64_t seed,
                             double *s,
                             double *standard_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAMAN_PAIR_H */
