#ifndef ROMAN_H
#define ROMAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum RomanStatus {
  ROMAN_STATUS_OK = 0,
  ROMAN_STATUS_NULL_POINTER = 1,
  ROMAN_STATUS_INVALID_ARGUMENT = 2,
  ROMAN_STATUS_INVALID_PROFILE = 3,
  ROMAN_STATUS_NOT_FOUND = 4,
  ROMAN_STATUS_IO = 5,
  ROMAN_STATUS_ENCODING = 6,
  ROMAN_STATUS_SIMULATION = 7,
  ROMAN_STATUS_PANIC = 255,
} RomanStatus;

// Which template [`roman_profile_template`] builds.
typedef enum RomanTemplate {
  ROMAN_TEMPLATE_ENDLESS_ROTATION = 0,
  ROMAN_TEMPLATE_PERIODIC = 1,
  ROMAN_TEMPLATE_ONE_WAY = 2,
  ROMAN_TEMPLATE_TWO_WAY = 3,
} RomanTemplate;

typedef struct RomanChain RomanChain;

typedef struct RomanOutcome RomanOutcome;

typedef struct RomanProfile RomanProfile;

typedef struct RomanRegistry RomanRegistry;

typedef struct RomanScenario RomanScenario;

// One 20 ms telemetry sample of a simulated run.
typedef struct RomanSample {
  double t;
  double u;
  double motor_theta;
  double output_coord;
  double load;
  bool completed;
} RomanSample;

// Message for the last failing call on this thread, or NULL if none.
// The pointer stays valid until the next failing call on the same thread.
const char *roman_last_error_message(void);

void roman_clear_last_error(void);

// Library version as a static NUL-terminated string.
const char *roman_version(void);

// # Safety
// `s` must be NULL or a string returned by this library.
void roman_string_free(char *s);

// # Safety
// `data`/`len` must be NULL/0 or a buffer returned by this library.
void roman_bytes_free(uint8_t *data, size_t len);

// # Safety
// `json` must be a NUL-terminated string; `out_profile` must be writable.
enum RomanStatus roman_profile_from_json(const char *json, struct RomanProfile **out_profile);

// `kind` is a [`RomanTemplate`] value.
//
// # Safety
// `out_profile` must be writable.
enum RomanStatus roman_profile_template(uint32_t kind, struct RomanProfile **out_profile);

// # Safety
// `profile` must be a live handle; `out_json` must be writable.
enum RomanStatus roman_profile_to_json(const struct RomanProfile *profile, char **out_json);

// Command value at time `t` (seconds).
//
// # Safety
// `profile` must be a live handle; `out_u` must be writable.
enum RomanStatus roman_profile_evaluate(const struct RomanProfile *profile,
                                        double t,
                                        double *out_u);

// # Safety
// `profile` must be a live handle; the out pointers must be writable.
enum RomanStatus roman_profile_add_keypoint(const struct RomanProfile *profile,
                                            double t,
                                            double u,
                                            struct RomanProfile **out_profile);

// Compact device encoding; free the buffer with [`roman_bytes_free`].
//
// # Safety
// `profile` must be a live handle; the out pointers must be writable.
enum RomanStatus roman_profile_encode_device(const struct RomanProfile *profile,
                                             uint8_t **out_data,
                                             size_t *out_len);

// # Safety
// `data` must point to `len` readable bytes; `out_profile` must be writable.
enum RomanStatus roman_profile_decode_device(const uint8_t *data,
                                             size_t len,
                                             struct RomanProfile **out_profile);

// # Safety
// `profile` must be NULL or a live handle.
void roman_profile_free(struct RomanProfile *profile);

// Builds a transmission chain from its JSON stage list.
//
// # Safety
// `json` must be a NUL-terminated string; `out_chain` must be writable.
enum RomanStatus roman_chain_from_json(const char *json, struct RomanChain **out_chain);

// Output position for motor angle `theta` (rad); metres for linear chains.
//
// # Safety
// `chain` must be a live handle; `out_position` must be writable.
enum RomanStatus roman_chain_output(const struct RomanChain *chain,
                                    double theta,
                                    double *out_position);

// Output rate and effort for a motor shaft state at angle `theta`.
//
// # Safety
// `chain` must be a live handle; the out pointers must be writable.
enum RomanStatus roman_chain_transmit(const struct RomanChain *chain,
                                      double omega,
                                      double tau,
                                      double theta,
                                      double *out_rate,
                                      double *out_effort);

// Motor torque needed to hold `load` at the chain output.
//
// # Safety
// `chain` must be a live handle; `out_torque` must be writable.
enum RomanStatus roman_chain_reflect_load(const struct RomanChain *chain,
                                          double load,
                                          double theta,
                                          double *out_torque);

// # Safety
// `chain` must be NULL or a live handle.
void roman_chain_free(struct RomanChain *chain);

// Motor speed for command `u` against `load` (N·m) on the linear
// torque-speed curve.
//
// # Safety
// `out_omega` must be writable.
enum RomanStatus roman_motor_speed(double u,
                                   double load,
                                   double tau_stall,
                                   double omega_noload,
                                   double *out_omega);

// # Safety
// `out_scenario` must be writable.
enum RomanStatus roman_scenario_builtin(struct RomanScenario **out_scenario);

// # Safety
// `json` must be a NUL-terminated string; `out_scenario` must be writable.
enum RomanStatus roman_scenario_from_json(const char *json, struct RomanScenario **out_scenario);

// # Safety
// `scenario` must be a live handle; `out_count` must be writable.
enum RomanStatus roman_scenario_object_count(const struct RomanScenario *scenario,
                                             size_t *out_count);

// # Safety
// `scenario` must be NULL or a live handle.
void roman_scenario_free(struct RomanScenario *scenario);

// Runs `profile` for one profile duration on the object tagged `tag_id`.
//
// # Safety
// Handles must be live; `tag_id` NUL-terminated; `out_outcome` writable.
enum RomanStatus roman_simulate(const struct RomanScenario *scenario,
                                const char *tag_id,
                                const struct RomanProfile *profile,
                                struct RomanOutcome **out_outcome);

// `out_t_complete` receives the completion time, or NaN if the task did not
// complete.
//
// # Safety
// `outcome` must be a live handle; the out pointers must be writable.
enum RomanStatus roman_outcome_summary(const struct RomanOutcome *outcome,
                                       bool *out_completed,
                                       double *out_t_complete,
                                       size_t *out_sample_count);

// # Safety
// `outcome` must be a live handle; `out_sample` must be writable.
enum RomanStatus roman_outcome_sample(const struct RomanOutcome *outcome,
                                      size_t index,
                                      struct RomanSample *out_sample);

// # Safety
// `outcome` must be NULL or a live handle.
void roman_outcome_free(struct RomanOutcome *outcome);

// # Safety
// `dir` must be NUL-terminated; `out_registry` must be writable.
enum RomanStatus roman_registry_open(const char *dir, struct RomanRegistry **out_registry);

// Saves `profile` for the scenario object tagged `tag_id`.
//
// # Safety
// Handles must be live; `tag_id` NUL-terminated.
enum RomanStatus roman_registry_put(const struct RomanRegistry *registry,
                                    const struct RomanScenario *scenario,
                                    const char *tag_id,
                                    const struct RomanProfile *profile);

// # Safety
// `registry` must be live; `tag_id` NUL-terminated; `out_profile` writable.
enum RomanStatus roman_registry_get(const struct RomanRegistry *registry,
                                    const char *tag_id,
                                    struct RomanProfile **out_profile);

// # Safety
// `registry` must be NULL or a live handle.
void roman_registry_free(struct RomanRegistry *registry);

#endif  /* ROMAN_H */
