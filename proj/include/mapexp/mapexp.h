/* C interface of the mapexp library.
 *
 * Every call that can fail returns a status code and leaves a message in
 * mapexp_last_error() (per thread). Option and config arguments are JSON
 * object texts; NULL means defaults. Results own their JSON text and their
 * artifacts (named byte blobs such as CSV tables and SVG plots).
 */
#ifndef MAPEXP_H
#define MAPEXP_H

#include <stddef.h>

#if defined(_WIN32)
#define MAPEXP_API __declspec(dllexport)
#else
#define MAPEXP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct mapexp_spec mapexp_spec;
typedef struct mapexp_result mapexp_result;

enum mapexp_status {
    MAPEXP_OK = 0,
    MAPEXP_EINVAL = 1,           /* bad argument or option */
    MAPEXP_EPARSE = 2,           /* malformed document */
    MAPEXP_EDOMAIN = 3,          /* invalid model, or an operation refused on it */
    MAPEXP_EUNKNOWN_SCENARIO = 4,
    MAPEXP_EINTERNAL = 5
};

MAPEXP_API const char* mapexp_version(void);
MAPEXP_API const char* mapexp_last_error(void);

MAPEXP_API int mapexp_spec_from_json(const char* text, mapexp_spec** out);
MAPEXP_API int mapexp_spec_from_scenario(const char* id, const char* params_json, mapexp_spec** out);
/* Canonical JSON of the model; free with mapexp_string_free. */
MAPEXP_API int mapexp_spec_to_json(const mapexp_spec* spec, char** out);
MAPEXP_API void mapexp_spec_free(mapexp_spec* spec);
MAPEXP_API void mapexp_string_free(char* s);

/* {ok, violations}. Returns MAPEXP_EDOMAIN (with *out set) when the model is invalid. */
MAPEXP_API int mapexp_validate(const mapexp_spec* spec, mapexp_result** out);

/* options: horizon, paths, mesh, seed, threads, keep_paths, format ("csv" | "json") */
MAPEXP_API int mapexp_simulate(const mapexp_spec* spec, const char* options_json, mapexp_result** out);

/* config: criterion config keys plus seed, threads, plots (bool) */
MAPEXP_API int mapexp_classify(const mapexp_spec* spec, const char* config_json, mapexp_result** out);

/* options: horizon, paths, mesh, seed, threads, format, check (bool), config (object).
 * With check set, a DivergesInProbability verdict returns MAPEXP_EDOMAIN and a result
 * holding the warning and the classification. */
MAPEXP_API int mapexp_estimate(const mapexp_spec* spec, const char* options_json, mapexp_result** out);

MAPEXP_API int mapexp_scenario_list(mapexp_result** out);
/* Returns MAPEXP_OK when the scenario ran; the pass flag is in the result JSON. */
MAPEXP_API int mapexp_scenario_run(const char* id, const char* params_json, const char* config_json,
                                   mapexp_result** out);

MAPEXP_API const char* mapexp_result_json(const mapexp_result* r);
MAPEXP_API size_t mapexp_artifact_count(const mapexp_result* r);
MAPEXP_API const char* mapexp_artifact_name(const mapexp_result* r, size_t i);
MAPEXP_API const char* mapexp_artifact_data(const mapexp_result* r, size_t i, size_t* len);
MAPEXP_API void mapexp_result_free(mapexp_result* r);

#ifdef __cplusplus
}
#endif

#endif
