#ifndef RISKNET_RISKNET_H
#define RISKNET_RISKNET_H

/* C interface to the risknet library. Every handle is opaque and owned by the
 * caller once returned; release it with the matching *_destroy function.
 * Functions returning rn_status leave a thread-local message for
 * rn_last_error() on failure. Strings returned by accessors live as long as
 * their handle. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(RISKNET_BUILDING_LIBRARY)
#define RISKNET_API __declspec(dllexport)
#else
#define RISKNET_API __declspec(dllimport)
#endif
#else
#define RISKNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rn_status {
    RN_OK = 0,
    RN_ERR_CONFIG = 1,
    RN_ERR_DATA = 2,
    RN_ERR_ESTIMATION = 3,
    RN_ERR_DOMAIN = 4,
    RN_ERR_IO = 5,
    RN_ERR_INVALID_ARGUMENT = 6,
    RN_ERR_INTERNAL = 7
} rn_status;

RISKNET_API const char* rn_version(void);
RISKNET_API const char* rn_last_error(void);
RISKNET_API const char* rn_status_name(rn_status status);

/* Run configuration ------------------------------------------------------ */

typedef struct rn_config rn_config;

RISKNET_API rn_status rn_config_create(rn_config** out);
RISKNET_API void rn_config_destroy(rn_config* config);
RISKNET_API rn_status rn_config_set_input(rn_config* config, const char* path);
RISKNET_API rn_status rn_config_set_output(rn_config* config, const char* dir);
RISKNET_API rn_status rn_config_set_cache_dir(rn_config* config, const char* dir);
RISKNET_API rn_status rn_config_set_seed(rn_config* config, uint64_t seed);
RISKNET_API rn_status rn_config_set_jobs(rn_config* config, int jobs);
RISKNET_API rn_status rn_config_set_bootstrap(rn_config* config, int replicates);
/* "normal" or "skewt" */
RISKNET_API rn_status rn_config_set_innovations(rn_config* config, const char* family);
RISKNET_API rn_status rn_config_set_dcc_order(rn_config* config, int m, int n);
RISKNET_API rn_status rn_config_set_optimizer(rn_config* config, double gradient_tolerance, int max_iterations);
/* Formats: "csv", "json", "dot", "svg". All four are enabled by default. */
RISKNET_API rn_status rn_config_clear_formats(rn_config* config);
RISKNET_API rn_status rn_config_add_format(rn_config* config, const char* format);
/* Period label of a tree to export as DOT. */
RISKNET_API rn_status rn_config_add_tree(rn_config* config, const char* period);
RISKNET_API rn_status rn_config_set_verbose(rn_config* config, int verbose);

/* Pipeline ---------------------------------------------------------------- */

typedef struct rn_manifest rn_manifest;

/* Full run from a price CSV. RN_OK means the run completed; estimation flags
 * are reported through rn_manifest_exit_code. */
RISKNET_API rn_status rn_run(const rn_config* config, rn_manifest** out);
/* Stage two from a cube.json input. */
RISKNET_API rn_status rn_run_indices(const rn_config* config, rn_manifest** out);
/* Re-export from a directory holding topology.json and trees.json. */
RISKNET_API rn_status rn_export(const rn_config* config, rn_manifest** out);

RISKNET_API int rn_manifest_exit_code(const rn_manifest* manifest);
RISKNET_API const char* rn_manifest_json(const rn_manifest* manifest);
RISKNET_API size_t rn_manifest_failure_count(const rn_manifest* manifest);
RISKNET_API const char* rn_manifest_failure(const rn_manifest* manifest, size_t index);
RISKNET_API size_t rn_manifest_artifact_count(const rn_manifest* manifest);
RISKNET_API const char* rn_manifest_artifact_path(const rn_manifest* manifest, size_t index);
/* NULL for run-specific files that are not content-hashed. */
RISKNET_API const char* rn_manifest_artifact_hash(const rn_manifest* manifest, size_t index);
RISKNET_API void rn_manifest_destroy(rn_manifest* manifest);

/* Synthetic panel from a JSON generator spec (NULL: defaults). Writes the
 * price CSV and, when truth_path is not NULL, the ground truth as JSON. */
RISKNET_API rn_status rn_simulate(const char* spec_json, uint64_t seed, const char* csv_path, const char* truth_path);

/* Price panels ------------------------------------------------------------ */

typedef struct rn_panel rn_panel;

RISKNET_API rn_status rn_panel_load(const char* path, rn_panel** out);
RISKNET_API size_t rn_panel_asset_count(const rn_panel* panel);
RISKNET_API size_t rn_panel_period_count(const rn_panel* panel);
RISKNET_API const char* rn_panel_asset(const rn_panel* panel, size_t index);
RISKNET_API const char* rn_panel_period(const rn_panel* panel, size_t index);
RISKNET_API double rn_panel_price(const rn_panel* panel, size_t period, size_t asset);
RISKNET_API rn_status rn_panel_write_returns(const rn_panel* panel, const char* path);
RISKNET_API void rn_panel_destroy(rn_panel* panel);

/* Trees and indices ------------------------------------------------------- */

typedef struct rn_tree rn_tree;

/* Minimum spanning tree of the Mantegna distances of a k x k row-major
 * correlation matrix. */
RISKNET_API rn_status rn_mst_from_correlation(const double* rho, size_t k, rn_tree** out);
RISKNET_API size_t rn_tree_node_count(const rn_tree* tree);
RISKNET_API size_t rn_tree_edge_count(const rn_tree* tree);
RISKNET_API rn_status rn_tree_edge(const rn_tree* tree, size_t index, size_t* a, size_t* b, double* weight);
RISKNET_API double rn_tree_apl(const rn_tree* tree);
RISKNET_API int rn_tree_max_degree(const rn_tree* tree);
/* Writes k values into out (capacity k). */
RISKNET_API rn_status rn_tree_betweenness(const rn_tree* tree, double* out, size_t capacity);
RISKNET_API void rn_tree_destroy(rn_tree* tree);

/* Discrete power-law fit with x_min = 1 and bootstrap KS p-value. */
RISKNET_API rn_status rn_fit_power_law(const int* values, size_t n, int replicates, uint64_t seed, double* alpha,
                                       double* pvalue, int* alpha_valid);

#ifdef __cplusplus
}
#endif

#endif
