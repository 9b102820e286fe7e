#ifndef DUALMAP_DUALMAP_H
#define DUALMAP_DUALMAP_H

/* C interface of the dualmap library. Every function returns a dm_status;
 * on failure dm_last_error() describes the problem. Strings returned through
 * char** out-parameters are owned by the caller and released with dm_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(DM_BUILDING_LIBRARY)
#define DM_API __attribute__((visibility("default")))
#else
#define DM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dm_status {
    DM_OK = 0,
    DM_ERR_USAGE = 1,
    DM_ERR_DATA = 2,
    DM_ERR_INTERNAL = 3
} dm_status;

typedef struct dm_config dm_config;
typedef struct dm_concrete_map dm_concrete_map;
typedef struct dm_abstract_map dm_abstract_map;

/* Message of the last failure on the calling thread ("" if none). */
DM_API const char* dm_last_error(void);
DM_API void dm_free(void* p);
DM_API const char* dm_version(void);

/* Run configuration: defaults < file < individual keys. */
DM_API dm_status dm_config_new(dm_config** out);
DM_API void dm_config_free(dm_config* c);
DM_API dm_status dm_config_load_file(dm_config* c, const char* path);
DM_API dm_status dm_config_merge_json(dm_config* c, const char* json);
DM_API dm_status dm_config_set(dm_config* c, const char* key, const char* value);
DM_API dm_status dm_config_get(const dm_config* c, const char* key, char** value);
/* Flat JSON object with sorted keys. */
DM_API dm_status dm_config_to_json(const dm_config* c, char** json);
/* Newline-separated list of accepted keys. */
DM_API dm_status dm_config_keys(char** keys);

/* Map handles. */
DM_API dm_status dm_concrete_map_load(const char* path, dm_concrete_map** out);
DM_API void dm_concrete_map_free(dm_concrete_map* m);
DM_API size_t dm_concrete_map_size(const dm_concrete_map* m);
DM_API dm_status dm_abstract_map_load(const char* path, dm_abstract_map** out);
DM_API void dm_abstract_map_free(dm_abstract_map* m);
DM_API size_t dm_abstract_map_anchor_count(const dm_abstract_map* m);
/* Ranks anchors for a unit-norm query feature. Writes up to `k` anchor ids
 * and scores, best first; `*written` receives the count. */
DM_API dm_status dm_abstract_map_rank(const dm_abstract_map* m, const double* feature, size_t dim,
                                      const uint64_t* excluded, size_t n_excluded, size_t k,
                                      uint64_t* ids, double* scores, size_t* written);

/* Commands. `report` receives the human-readable summary; it never holds
 * timing, so identical inputs give identical reports. Optional paths may be
 * NULL. Output files are written atomically. */

/* Scenario tour to a `.dmos` stream; optionally the labeled ground-truth cloud. */
DM_API dm_status dm_record(const dm_config* c, const char* scenario_path, const char* stream_out,
                           const char* gt_cloud_out, char** report);

/* Stream to `.dmcm` concrete map and `.dmsc` scene cloud. `seconds_per_frame`
 * (optional) receives the mean processing time per frame. */
DM_API dm_status dm_build(const dm_config* c, const char* stream_path, const char* map_out,
                          const char* scene_out, char** report, double* seconds_per_frame);

/* Concrete map and scene cloud to `.dmam`. The anchor template comes from a
 * scenario's vocabulary or from a feature file. `pgm_out` exports the layout. */
DM_API dm_status dm_abstract(const dm_config* c, const char* map_path, const char* scene_path,
                             const char* scenario_path, const char* template_path, const char* map_out,
                             const char* pgm_out, char** report);

/* Ranked anchors for a class name (needs a scenario) or a feature file. */
DM_API dm_status dm_query(const dm_config* c, const char* abstract_path, const char* scenario_path,
                          const char* class_name, const char* feature_path, size_t k, const uint64_t* excluded,
                          size_t n_excluded, char** report);

/* One navigation episode in the scenario's world after its relocations. */
DM_API dm_status dm_navigate(const dm_config* c, const char* abstract_path, const char* scenario_path,
                             size_t query_index, const char* strategy, uint64_t first_tick, const char* log_out,
                             char** report);

/* Benchmark over scenario files. `strategies` is a comma-separated list or NULL. */
DM_API dm_status dm_simulate(const dm_config* c, const char* const* scenario_paths, size_t n_scenarios,
                             const char* strategies, const char* report_out, const char* log_out, char** report);

/* Segmentation metrics of a concrete map against a labeled cloud, ODR when
 * `gt_objects` > 0, SR over an episode log. */
DM_API dm_status dm_eval(const dm_config* c, const char* pred_map, const char* gt_cloud, size_t gt_objects,
                         const char* log_path, const char* report_out, char** report);

/* Writes `count` generated apartment scenarios of a suite
 * ("static", "in_anchor" or "cross_anchor") into `dir`. */
DM_API dm_status dm_generate(const char* suite, uint64_t first_seed, size_t count, size_t queries, const char* dir,
                             char** report);

#ifdef __cplusplus
}
#endif

#endif
