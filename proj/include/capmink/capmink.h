#ifndef CAPMINK_H
#define CAPMINK_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every call returns one; CAPMINK_OK is zero. */
typedef enum capmink_status {
  CAPMINK_OK = 0,
  CAPMINK_E_DOMAIN = 1,
  CAPMINK_E_SCHEMA = 2,
  CAPMINK_E_NONCONVERGENCE = 3,
  CAPMINK_E_DEGENERATE_BODY = 4,
  CAPMINK_E_GRID_TOO_COARSE = 5,
  CAPMINK_E_UNBOUNDED = 6,
  CAPMINK_E_INADMISSIBLE = 7,
  CAPMINK_E_LEVEL_OUTSIDE_GRID = 8,
  CAPMINK_E_DEGENERATE_COLLAPSE = 9,
  CAPMINK_E_INTERNAL = 10,
  CAPMINK_E_ARGUMENT = 11
} capmink_status;

typedef struct capmink_structure capmink_structure;
typedef struct capmink_body capmink_body;
typedef struct capmink_result capmink_result;

const char* capmink_version(void);
const char* capmink_status_name(int status);
/* Message of the last failed call on this thread. */
const char* capmink_last_error(void);

int capmink_structure_from_json(const char* json, capmink_structure** out);
int capmink_structure_isotropic(int n, double p, capmink_structure** out);
void capmink_structure_free(capmink_structure* s);
/* Writes a validation report for the structure (homogeneity, ellipticity). */
int capmink_structure_validate(const capmink_structure* s, int samples, uint64_t seed, capmink_result** out);
int capmink_structure_describe(const capmink_structure* s, capmink_result** out);

int capmink_body_from_json(const char* json, capmink_body** out);
void capmink_body_free(capmink_body* b);

/*
 * Capacitary solve with diagnostics. config may be NULL or a JSON object
 * with optional keys "solver" (solver config), "levels" (convexity levels)
 * and "measure_offset".
 */
int capmink_capacity(const capmink_structure* s, const capmink_body* body, const char* config, capmink_result** out);

/* instance: directions, weights, structure. config: Minkowski config. */
int capmink_minkowski(const char* instance, const char* config, capmink_result** out);
/* Admissibility report; an inadmissible instance is not an error here. */
int capmink_validate_instance(const char* instance, capmink_result** out);

/* config keys: "solver", "lambdas" */
int capmink_verify_bm(const capmink_structure* s, const capmink_body* e1, const capmink_body* e2, const char* config,
                      capmink_result** out);
/* config keys: "solver", "t0", "deltas" */
int capmink_verify_hadamard(const capmink_structure* s, const capmink_body* e1, const capmink_body* e2,
                            const char* config, capmink_result** out);
/* config keys: "solver", "rhos" */
int capmink_verify_laws(const capmink_structure* s, const capmink_body* e, const char* config, uint64_t seed,
                        capmink_result** out);
int capmink_matrix_lemma(int trials, int dim, uint64_t seed, capmink_result** out);

/* Result JSON text, valid until the result is freed. */
const char* capmink_result_json(const capmink_result* r);
/* 1 when the result's own pass criterion holds, else 0. */
int capmink_result_pass(const capmink_result* r);
void capmink_result_free(capmink_result* r);

#ifdef __cplusplus
}
#endif

#endif
