/* C interface to the blockage predictor: opaque handles and status codes.
 *
 * Every function returning lbp_status stores a message retrievable with
 * lbp_last_error() (thread-local, valid until the next call on that thread).
 * Strings returned through char** out-parameters are owned by the caller and
 * must be released with lbp_string_free().
 */
#ifndef LBP_LBP_H
#define LBP_LBP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LBP_BUILDING_LIBRARY)
#    define LBP_API __declspec(dllexport)
#  else
#    define LBP_API __declspec(dllimport)
#  endif
#else
#  define LBP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values equal the command-line exit codes. */
typedef enum lbp_status {
    LBP_OK = 0,
    LBP_ERR_INTERNAL = 1,
    LBP_ERR_CONFIG = 2,
    LBP_ERR_IO = 3,
    LBP_ERR_NUMERIC = 4
} lbp_status;

typedef struct lbp_config lbp_config;
typedef struct lbp_wiring lbp_wiring;
typedef struct lbp_model lbp_model;

LBP_API const char* lbp_version(void);
LBP_API const char* lbp_last_error(void);
LBP_API void lbp_string_free(char* s);

/* ---- run configuration ------------------------------------------------ */

/* A config starts with every default. */
LBP_API lbp_status lbp_config_create(lbp_config** out);
LBP_API void lbp_config_free(lbp_config* cfg);
/* Merges a JSON config file (or a run manifest) over the current values. */
LBP_API lbp_status lbp_config_load_file(lbp_config* cfg, const char* path);
/* Sets one key. `key` is dotted ("train.epochs", "paths.out_dir") and
 * `json_value` is JSON text ("40", "[1,5]", "\"runs/a\""). */
LBP_API lbp_status lbp_config_set(lbp_config* cfg, const char* key, const char* json_value);
/* Fully resolved configuration as JSON; fails if the config is invalid. */
LBP_API lbp_status lbp_config_to_json(const lbp_config* cfg, char** out_json);

/* Runs simulate | train | eval | gradcheck | wiring | pipeline. The human
 * summary goes to standard output. */
LBP_API lbp_status lbp_run(const lbp_config* cfg, const char* command);

/* ---- wiring ----------------------------------------------------------- */

LBP_API lbp_status lbp_wiring_build(int n_sensory, int n_inter, int n_command, int n_motor, uint64_t seed,
                                    lbp_wiring** out);
LBP_API lbp_status lbp_wiring_from_json(const char* json, lbp_wiring** out);
LBP_API void lbp_wiring_free(lbp_wiring* wiring);
LBP_API lbp_status lbp_wiring_synapse_count(const lbp_wiring* wiring, size_t* out);
/* LBP_OK when valid, LBP_ERR_CONFIG otherwise; the violation summary is the last error. */
LBP_API lbp_status lbp_wiring_validate(const lbp_wiring* wiring);
LBP_API lbp_status lbp_wiring_to_json(const lbp_wiring* wiring, char** out_json);
LBP_API lbp_status lbp_wiring_to_dot(const lbp_wiring* wiring, char** out_dot);

/* ---- trained models --------------------------------------------------- */

LBP_API lbp_status lbp_model_load(const char* checkpoint_path, lbp_model** out);
LBP_API void lbp_model_free(lbp_model* model);
LBP_API lbp_status lbp_model_info(const lbp_model* model, int* t_ob, int* horizon);
/* Blockage probability for the window ending at power[n - 1]. `power` holds
 * n normalized received-power samples; n must equal the model's T_ob. */
LBP_API lbp_status lbp_model_predict(const lbp_model* model, const double* power, size_t n, double* probability);

#ifdef __cplusplus
}
#endif

#endif /* LBP_LBP_H */
