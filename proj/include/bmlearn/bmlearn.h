/* bmlearn: training and evaluation of Boltzmann machines with an EM-like
 * method.
 *
 * Every function returns a bml_status. On failure the message is available
 * from bml_last_error() on the same thread until the next call. Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with bml_string_free(). Handles are released with their _free
 * function; passing NULL to a _free function is allowed.
 */
#ifndef BMLEARN_H
#define BMLEARN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BMLEARN_BUILDING)
#    define BML_API __declspec(dllexport)
#  else
#    define BML_API __declspec(dllimport)
#  endif
#else
#  define BML_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bml_status {
    BML_OK = 0,
    BML_INVALID_ARGUMENT = 1,
    BML_DIMENSION_MISMATCH = 2,
    BML_PARSE_ERROR = 3,
    BML_IO_ERROR = 4,
    BML_CAP_EXCEEDED = 5,
    BML_NOT_BIPARTITE = 6,
    BML_NON_FINITE = 7,
    BML_INTERNAL = 99
} bml_status;

typedef struct bml_machine bml_machine;
typedef struct bml_dataset bml_dataset;
typedef struct bml_config bml_config;

BML_API const char* bml_last_error(void);
BML_API const char* bml_status_name(bml_status status);
BML_API const char* bml_version(void);
BML_API const char* bml_rng_algorithm(void);
BML_API void bml_string_free(char* s);

/* ---- machines ---------------------------------------------------------- */

/* All-zero parameters. */
BML_API bml_status bml_machine_new(size_t units, size_t visible, bml_machine** out);
/* Gaussian(0, scale^2) couplings, symmetrized; zero biases. bipartite != 0
 * draws only visible-hidden couplings. */
BML_API bml_status bml_machine_init_random(size_t units, size_t visible, uint64_t seed, double scale, int bipartite,
                                           bml_machine** out);
BML_API bml_status bml_machine_load(const char* path, bml_machine** out);
BML_API bml_status bml_machine_save(const bml_machine* machine, const char* path);
BML_API bml_status bml_machine_from_text(const char* text, bml_machine** out);
BML_API bml_status bml_machine_to_text(const bml_machine* machine, char** out);
BML_API bml_status bml_machine_clone(const bml_machine* machine, bml_machine** out);
BML_API void bml_machine_free(bml_machine* machine);

BML_API size_t bml_machine_units(const bml_machine* machine);
BML_API size_t bml_machine_visible(const bml_machine* machine);
BML_API bml_status bml_machine_is_bipartite(const bml_machine* machine, int* out);
BML_API bml_status bml_machine_equal(const bml_machine* a, const bml_machine* b, int* out);

BML_API bml_status bml_machine_weight(const bml_machine* machine, size_t i, size_t j, double* out);
BML_API bml_status bml_machine_set_weight(bml_machine* machine, size_t i, size_t j, double value);
BML_API bml_status bml_machine_bias(const bml_machine* machine, size_t i, double* out);
BML_API bml_status bml_machine_set_bias(bml_machine* machine, size_t i, double value);

/* `state` holds `length` entries from {0, 1}. */
BML_API bml_status bml_machine_energy(const bml_machine* machine, const uint8_t* state, size_t length, double* out);
BML_API bml_status bml_machine_conditional(const bml_machine* machine, const uint8_t* state, size_t length, size_t i,
                                           double* out);

/* ---- exact oracle ------------------------------------------------------ */

BML_API size_t bml_enumeration_cap(void);
BML_API bml_status bml_set_enumeration_cap(size_t cap);

BML_API bml_status bml_oracle_log_z(const bml_machine* machine, double* out);
/* out has 2^visible entries, indexed with bit i = v_i. */
BML_API bml_status bml_oracle_visible_marginal(const bml_machine* machine, double* out, size_t length);
/* first has `limit` entries; pair has limit*limit entries, row-major, with
 * the diagonal holding the first moments. */
BML_API bml_status bml_oracle_moments(const bml_machine* machine, size_t limit, double* first, double* pair);
/* D(q || p); +infinity when q has mass where p has none. */
BML_API bml_status bml_kl_divergence(const double* q, const double* p, size_t length, double* out);

/* ---- data sets --------------------------------------------------------- */

BML_API bml_status bml_dataset_from_bits(size_t dim, const uint8_t* bits, size_t count, bml_dataset** out);
BML_API bml_status bml_dataset_load(const char* path, bml_dataset** out);
/* labels_path may be NULL. limit 0 keeps every image. */
BML_API bml_status bml_dataset_load_mnist(const char* images_path, const char* labels_path, int threshold,
                                          int inclusive, size_t limit, bml_dataset** out);
BML_API bml_status bml_dataset_save(const bml_dataset* data, const char* path);
BML_API void bml_dataset_free(bml_dataset* data);
BML_API size_t bml_dataset_size(const bml_dataset* data);
BML_API size_t bml_dataset_dim(const bml_dataset* data);
BML_API bml_status bml_dataset_row(const bml_dataset* data, size_t k, uint8_t* out, size_t length);
/* Empirical distribution over the 2^dim visible codes. */
BML_API bml_status bml_dataset_distribution(const bml_dataset* data, double* out, size_t length);

/* ---- run configuration ------------------------------------------------- */

BML_API bml_status bml_config_new(bml_config** out);
BML_API void bml_config_free(bml_config* config);
/* Keys accept dashes or underscores and an optional leading "--". */
BML_API bml_status bml_config_set(bml_config* config, const char* key, const char* value);
BML_API bml_status bml_config_get(const bml_config* config, const char* key, char** out);
/* Applies "key = value" lines; '#' starts a comment line. */
BML_API bml_status bml_config_load_text(bml_config* config, const char* text);
BML_API bml_status bml_config_load_file(bml_config* config, const char* path);
BML_API bml_status bml_config_to_text(const bml_config* config, char** out);
BML_API bml_status bml_config_validate(const bml_config* config);
/* Config echo with version and RNG comment lines; reloads as a config. */
BML_API bml_status bml_config_metadata(const bml_config* config, char** out);
BML_API size_t bml_config_key_count(void);
BML_API const char* bml_config_key_name(size_t index);
BML_API const char* bml_config_key_help(size_t index);

/* ---- runs -------------------------------------------------------------- */

/* Loads the configured data, builds the initial machine and trains.
 * initial_out may be NULL. trace_csv_out receives the trace CSV. */
BML_API bml_status bml_train(const bml_config* config, bml_machine** model_out, bml_machine** initial_out,
                             char** trace_csv_out);

/* One CSV row per split of the configured data (header included). exact
 * adds enumeration columns; ais adds log Z and average log-probabilities
 * (bipartite models only). */
BML_API bml_status bml_evaluate(const bml_machine* machine, const bml_config* config, int exact, int ais,
                                char** csv_out);

BML_API bml_status bml_ais(const bml_machine* machine, const bml_config* config, double* log_z, double* std_error,
                           double* log_z_base);

/* Draws the configured artificial train/test sets. test_out may be NULL and
 * is set to NULL when no test split is configured. */
BML_API bml_status bml_generate_data(const bml_config* config, bml_dataset** train_out, bml_dataset** test_out);

BML_API size_t bml_figdata_count(void);
BML_API const char* bml_figdata_name(size_t index);
/* Applies the experiment's starting settings to config. */
BML_API bml_status bml_figdata_defaults(bml_config* config, const char* experiment);
BML_API bml_status bml_figdata(const char* experiment, const bml_config* config, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif
