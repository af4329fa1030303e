#ifndef ADL_H
#define ADL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AdlCommand {
  ADL_COMMAND_GENERATE = 0,
  ADL_COMMAND_RUN = 1,
  ADL_COMMAND_GRID = 2,
} AdlCommand;

typedef enum AdlEncoder {
  ADL_ENCODER_TIME = 0,
  ADL_ENCODER_SPACE = 1,
  ADL_ENCODER_SPACE_TIME = 2,
  ADL_ENCODER_JOINT = 3,
  ADL_ENCODER_PREDICTED_LABEL = 4,
  ADL_ENCODER_TRUE_LABEL = 5,
} AdlEncoder;

typedef enum AdlStatus {
  ADL_STATUS_OK = 0,
  ADL_STATUS_NULL_POINTER = 1,
  ADL_STATUS_INVALID_INPUT = 2,
  ADL_STATUS_SHAPE_MISMATCH = 3,
  ADL_STATUS_NUMERICAL = 4,
  ADL_STATUS_DEGENERATE_CLUSTERING = 5,
  ADL_STATUS_CONFIG = 6,
  ADL_STATUS_FORMAT = 7,
  ADL_STATUS_VERSION = 8,
  ADL_STATUS_IO = 9,
  ADL_STATUS_INVARIANT = 10,
  ADL_STATUS_PANIC = 11,
} AdlStatus;

typedef enum AdlVariant {
  ADL_VARIANT_RND = 0,
  ADL_VARIANT_MAX = 1,
  ADL_VARIANT_MIN = 2,
  ADL_VARIANT_AVG = 3,
} AdlVariant;

typedef struct AdlDataset AdlDataset;

typedef struct AdlNetwork AdlNetwork;

/**
 * Network shape. `weather_steps` must divide `d_st`.
 */
typedef struct AdlNetworkConfig {
  size_t d_t;
  size_t d_s;
  size_t d_st;
  size_t d_y;
  size_t weather_steps;
  size_t hidden_width;
  size_t embedding_dim;
  size_t conv_filters;
  size_t conv_kernel;
} AdlNetworkConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *adl_last_error_message(void);

/**
 * Static, NUL-terminated library version.
 */
const char *adl_version(void);

/**
 * Synthesizes a dataset.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum AdlStatus adl_dataset_generate(size_t n_buildings,
                                    size_t n_timestamps,
                                    double noise_scale,
                                    double shift_strength,
                                    uint64_t seed,
                                    struct AdlDataset **out_dataset);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out_dataset` writable.
 */
enum AdlStatus adl_dataset_load(const char *path_utf8, struct AdlDataset **out_dataset);

/**
 * # Safety
 * `ds` must come from this library; `path` must be NUL-terminated.
 */
enum AdlStatus adl_dataset_save(const struct AdlDataset *ds, const char *path_utf8);

/**
 * Number of points and feature/label widths.
 *
 * # Safety
 * `ds` must come from this library; output pointers must be writable.
 */
enum AdlStatus adl_dataset_shape(const struct AdlDataset *ds,
                                 size_t *out_points,
                                 size_t *out_d_x,
                                 size_t *out_d_y);

/**
 * Copies one point's features and label.
 *
 * # Safety
 * Buffers must hold at least `features_len` and `label_len` doubles.
 */
enum AdlStatus adl_dataset_point(const struct AdlDataset *ds,
                                 size_t index,
                                 double *features,
                                 size_t features_len,
                                 double *label,
                                 size_t label_len);

/**
 * # Safety
 * `ds` must come from this library or be null; it must not be used afterwards.
 */
void adl_dataset_free(struct AdlDataset *ds);

/**
 * Default network shape for the standard feature schema.
 */
struct AdlNetworkConfig adl_network_config_default(void);

/**
 * Builds a freshly initialized network.
 *
 * # Safety
 * `config` must be readable and `out_network` writable.
 */
enum AdlStatus adl_network_new(const struct AdlNetworkConfig *config,
                               uint64_t seed,
                               struct AdlNetwork **out_network);

/**
 * # Safety
 * `path` must be NUL-terminated and `out_network` writable.
 */
enum AdlStatus adl_network_load(const char *path_utf8, struct AdlNetwork **out_network);

/**
 * # Safety
 * `net` must come from this library; `path` must be NUL-terminated.
 */
enum AdlStatus adl_network_save(const struct AdlNetwork *net, const char *path_utf8);

/**
 * # Safety
 * `net` must come from this library; `out_count` must be writable.
 */
enum AdlStatus adl_network_param_count(const struct AdlNetwork *net, size_t *out_count);

/**
 * Predicts a label vector for one feature vector.
 *
 * # Safety
 * `x` must hold `x_len` doubles and `y` must hold `y_len` doubles.
 */
enum AdlStatus adl_network_predict(const struct AdlNetwork *net,
                                   const double *x,
                                   size_t x_len,
                                   double *y,
                                   size_t y_len);

/**
 * Encodes one feature vector with the chosen encoder. `label` may be null
 * except for `ADL_ENCODER_TRUE_LABEL`. The embedding length is written to
 * `out_written`.
 *
 * # Safety
 * Buffers must hold the stated number of doubles; `out_written` may be null.
 */
enum AdlStatus adl_network_encode(const struct AdlNetwork *net,
                                  enum AdlEncoder encoder,
                                  const double *x,
                                  size_t x_len,
                                  const double *label,
                                  size_t label_len,
                                  double *embedding,
                                  size_t embedding_len,
                                  size_t *out_written);

/**
 * # Safety
 * `net` must come from this library or be null; it must not be used afterwards.
 */
void adl_network_free(struct AdlNetwork *net);

/**
 * K-means++ over `n` row-major vectors of length `dim`.
 *
 * # Safety
 * `vectors` holds `n * dim` doubles, `membership` holds `n` entries,
 * `centers` holds `k * dim` doubles; `out_sse` may be null.
 */
enum AdlStatus adl_kmeans(const double *vectors,
                          size_t n,
                          size_t dim,
                          size_t k,
                          uint64_t seed,
                          size_t *membership,
                          double *centers,
                          double *out_sse);

/**
 * `exp(-|v - center|_1 / n_e)`.
 *
 * # Safety
 * `v` and `center` hold `len` doubles; `out_similarity` is writable.
 */
enum AdlStatus adl_laplacian_similarity(const double *v,
                                        const double *center,
                                        size_t len,
                                        size_t n_e,
                                        double *out_similarity);

/**
 * One candidate index per cluster, written to `selected` in cluster order.
 *
 * # Safety
 * `membership` and `scores` hold `n` entries; `selected` holds `k` entries.
 */
enum AdlStatus adl_select_batch(enum AdlVariant variant,
                                const size_t *membership,
                                const double *scores,
                                size_t n,
                                size_t k,
                                uint64_t seed,
                                size_t *selected);

/**
 * `1 - min(1, model_loss / rf_loss)`.
 *
 * # Safety
 * `out_accuracy` must be writable.
 */
enum AdlStatus adl_accuracy(double model_loss, double rf_loss, double *out_accuracy);

/**
 * Runs a harness command from a configuration file, as the `adl` binary does.
 *
 * # Safety
 * Both strings must be NUL-terminated.
 */
enum AdlStatus adl_run_command(enum AdlCommand command,
                               const char *config_path,
                               const char *out_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADL_H */
