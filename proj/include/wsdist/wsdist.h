/*
 * wsdist C API.
 *
 * Opaque handles own their data; every create or read function hands out a
 * handle that the caller releases with the matching free function. Functions return
 * a wsdist_status; on failure wsdist_last_error() describes the problem
 * (thread-local, valid until the next failing call on the same thread).
 *
 * Grids are C-ordered over (row, col[, slab]). Multi-channel images are
 * channel-major, probability volumes class-major.
 */
#ifndef WSDIST_H
#define WSDIST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(WSDIST_BUILDING)
#    define WSDIST_API __declspec(dllexport)
#  else
#    define WSDIST_API __declspec(dllimport)
#  endif
#else
#  define WSDIST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wsdist_status {
    WSDIST_OK = 0,
    WSDIST_ERR_INVALID_ARGUMENT = 1,
    WSDIST_ERR_SHAPE_MISMATCH = 2,
    WSDIST_ERR_PARSE = 3,
    WSDIST_ERR_IO = 4,
    WSDIST_ERR_UNSUPPORTED = 5,
    WSDIST_ERR_NUMERIC = 6,
    WSDIST_ERR_PRECONDITION = 7,
    WSDIST_ERR_INTERNAL = 99
} wsdist_status;

typedef enum wsdist_kind {
    WSDIST_KIND_EUCLIDEAN = 0,
    WSDIST_KIND_GEODESIC = 1,
    WSDIST_KIND_INTENSITY = 2,
    WSDIST_KIND_MBD = 3
} wsdist_kind;

typedef enum wsdist_engine { WSDIST_ENGINE_EXACT = 0, WSDIST_ENGINE_RASTER = 1 } wsdist_engine;

typedef enum wsdist_connectivity { WSDIST_CONN_FACES = 0, WSDIST_CONN_FULL = 1 } wsdist_connectivity;

typedef enum wsdist_absent_mode {
    WSDIST_ABSENT_ZEROS = 0,
    WSDIST_ABSENT_ONES = 1,
    WSDIST_ABSENT_CONSTANT = 2
} wsdist_absent_mode;

typedef struct wsdist_image wsdist_image;
typedef struct wsdist_labels wsdist_labels;
typedef struct wsdist_probs wsdist_probs;
typedef struct wsdist_maps wsdist_maps;
typedef struct wsdist_report wsdist_report;

typedef struct wsdist_grid {
    int rank;         /* 2 or 3 */
    size_t dims[3];   /* dims[2] ignored for rank 2 */
    double spacing[3];
} wsdist_grid;

typedef struct wsdist_transform_options {
    int kind;             /* wsdist_kind */
    double mix;           /* intensity weight in [0,1]; NaN selects the kind's default */
    int connectivity;     /* wsdist_connectivity */
    size_t channel;
    int rescale_to_255;
    int engine;           /* wsdist_engine */
    int max_passes;
    double convergence_tol;
    int per_slice;        /* compute every slab as an independent 2D problem */
} wsdist_transform_options;

typedef struct wsdist_absent_policy {
    int mode;             /* wsdist_absent_mode */
    double value;         /* for WSDIST_ABSENT_CONSTANT */
} wsdist_absent_policy;

typedef struct wsdist_loss_config {
    double alpha;
    int foreground_only;
    double ce_clamp_eps;
} wsdist_loss_config;

typedef struct wsdist_bench_config {
    size_t size_2d[2];
    size_t size_3d[3];
    double spacing_3d[3];
    int foreground_classes;
    int repetitions;
    uint64_t seed;
    int additive_engine;  /* wsdist_engine */
    int max_passes;
} wsdist_bench_config;

/* library */
WSDIST_API const char* wsdist_version(void);
WSDIST_API const char* wsdist_last_error(void);
/* 0 = one worker per hardware thread. Initialized from WSDIST_THREADS. */
WSDIST_API void wsdist_set_threads(unsigned threads);
WSDIST_API unsigned wsdist_get_threads(void);
WSDIST_API void wsdist_string_free(char* s);

/* defaults */
WSDIST_API void wsdist_transform_options_init(wsdist_transform_options* opts, int kind);
WSDIST_API void wsdist_loss_config_init(wsdist_loss_config* cfg);
WSDIST_API void wsdist_bench_config_init(wsdist_bench_config* cfg);

/* images */
WSDIST_API wsdist_status wsdist_image_create(const wsdist_grid* grid, size_t channels, const double* data,
                                             wsdist_image** out);
WSDIST_API wsdist_status wsdist_image_read(const char* path, wsdist_image** out);
WSDIST_API wsdist_status wsdist_image_write(const wsdist_image* image, const char* path);
WSDIST_API wsdist_status wsdist_image_info(const wsdist_image* image, wsdist_grid* grid, size_t* channels);
WSDIST_API wsdist_status wsdist_image_copy(const wsdist_image* image, double* out, size_t count);
WSDIST_API wsdist_status wsdist_image_rescale(const wsdist_image* image, size_t channel, wsdist_image** out);
WSDIST_API void wsdist_image_free(wsdist_image* image);

/* label volumes */
WSDIST_API wsdist_status wsdist_labels_create(const wsdist_grid* grid, int num_classes, const int32_t* data,
                                              wsdist_labels** out);
/* num_classes <= 0 reads it from the sidecar or infers it from the data. */
WSDIST_API wsdist_status wsdist_labels_read(const char* path, int num_classes, wsdist_labels** out);
/* seed is recorded in the sidecar when has_seed is nonzero. */
WSDIST_API wsdist_status wsdist_labels_write(const wsdist_labels* labels, const char* path, int has_seed,
                                             uint64_t seed);
WSDIST_API wsdist_status wsdist_labels_info(const wsdist_labels* labels, wsdist_grid* grid, int* num_classes);
WSDIST_API wsdist_status wsdist_labels_copy(const wsdist_labels* labels, int32_t* out, size_t count);
/* Boundary voxels as flat indices; *count receives the total even when it
 * exceeds capacity. */
WSDIST_API wsdist_status wsdist_labels_boundary(const wsdist_labels* labels, int class_id, int connectivity,
                                                size_t* indices, size_t capacity, size_t* count);
WSDIST_API void wsdist_labels_free(wsdist_labels* labels);

/* probability volumes */
WSDIST_API wsdist_status wsdist_probs_create(const wsdist_grid* grid, int num_classes, const double* data,
                                             wsdist_probs** out);
WSDIST_API wsdist_status wsdist_probs_read(const char* path, wsdist_probs** out);
WSDIST_API wsdist_status wsdist_probs_write(const wsdist_probs* probs, const char* path);
WSDIST_API void wsdist_probs_free(wsdist_probs* probs);

/* distance maps */
/* Unsigned distance from the given flat source indices into out (grid size). */
WSDIST_API wsdist_status wsdist_distance_map(const wsdist_image* image, const size_t* sources, size_t num_sources,
                                             const wsdist_transform_options* opts, double* out, size_t count);
/* One signed map per foreground class. policy may be NULL (map of ones). */
WSDIST_API wsdist_status wsdist_signed_maps(const wsdist_image* image, const wsdist_labels* weak_labels,
                                            const wsdist_transform_options* opts,
                                            const wsdist_absent_policy* policy, wsdist_maps** out);
/* Wraps caller data: num_maps consecutive grids with their class ids. */
WSDIST_API wsdist_status wsdist_maps_create(const wsdist_grid* grid, size_t num_maps, const int* class_ids,
                                            const double* data, wsdist_maps** out);
WSDIST_API size_t wsdist_maps_count(const wsdist_maps* maps);
WSDIST_API wsdist_status wsdist_maps_class_id(const wsdist_maps* maps, size_t index, int* class_id);
WSDIST_API wsdist_status wsdist_maps_copy(const wsdist_maps* maps, size_t index, double* out, size_t count);
/* Writes class_<k>.npy (+ .json sidecars) into dir, creating it if needed.
 * opts (nullable) is recorded in the sidecars. */
WSDIST_API wsdist_status wsdist_maps_write(const wsdist_maps* maps, const char* dir,
                                           const wsdist_transform_options* opts);
WSDIST_API wsdist_status wsdist_maps_read(const char* dir, wsdist_maps** out);
WSDIST_API void wsdist_maps_free(wsdist_maps* maps);

/* weak labels */
WSDIST_API wsdist_status wsdist_generate_points(const wsdist_labels* full_labels, double semi_axis_cols,
                                                double semi_axis_rows, uint64_t seed, int per_slice,
                                                wsdist_labels** out);

/* losses */
WSDIST_API wsdist_status wsdist_boundary_loss(const wsdist_probs* probs, const wsdist_maps* maps,
                                              const wsdist_loss_config* cfg, double* out);
/* Gradient with respect to the probabilities of the index-th map's class. */
WSDIST_API wsdist_status wsdist_boundary_loss_grad(const wsdist_maps* maps, size_t index, double* out,
                                                   size_t count);
WSDIST_API wsdist_status wsdist_partial_cross_entropy(const wsdist_probs* probs, const wsdist_labels* weak_labels,
                                                      const wsdist_loss_config* cfg, double* out);
WSDIST_API wsdist_status wsdist_combined_objective(const wsdist_probs* probs, const wsdist_labels* weak_labels,
                                                   const wsdist_maps* maps, const wsdist_loss_config* cfg,
                                                   double* total, double* cross_entropy, double* boundary);

/* metrics */
WSDIST_API wsdist_status wsdist_dice(const wsdist_labels* gt, const wsdist_labels* pred, int class_id,
                                     double* out);
/* *defined is 0 (and *out untouched) when either surface is empty. */
WSDIST_API wsdist_status wsdist_hd95(const wsdist_labels* gt, const wsdist_labels* pred, int class_id,
                                     double* out, int* defined);
WSDIST_API wsdist_status wsdist_report_create(wsdist_report** out);
WSDIST_API wsdist_status wsdist_report_add(wsdist_report* report, const char* subject, const wsdist_labels* gt,
                                           const wsdist_labels* pred);
/* JSON report; release with wsdist_string_free. */
WSDIST_API wsdist_status wsdist_report_json(const wsdist_report* report, char** json);
WSDIST_API void wsdist_report_free(wsdist_report* report);

/* benchmark; JSON result released with wsdist_string_free */
WSDIST_API wsdist_status wsdist_bench_run(const wsdist_bench_config* cfg, char** json);

#ifdef __cplusplus
}
#endif

#endif /* WSDIST_H */
