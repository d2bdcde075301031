#ifndef FPWORK_FPWORK_H
#define FPWORK_FPWORK_H

/* C interface to the fpwork library. Structured inputs and outputs travel as
 * JSON text; strings returned through char** are owned by the caller and
 * released with fpw_string_free. On failure the message of the last error on
 * the calling thread is available from fpw_last_error. */

#include <stddef.h>
#include <stdint.h>

#if defined(FPW_BUILDING_LIBRARY)
#define FPW_API __attribute__((visibility("default")))
#else
#define FPW_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fpw_status {
  FPW_OK = 0,
  FPW_INVALID_ARGUMENT = 1,
  FPW_CONFIG = 2,
  FPW_BUDGET = 3,
  FPW_INFEASIBLE = 4,
  FPW_IO = 5,
  FPW_INTERNAL = 6
} fpw_status;

typedef struct fpw_codebook fpw_codebook;

FPW_API const char* fpw_last_error(void);
FPW_API const char* fpw_version(void);
FPW_API void fpw_string_free(char* s);

/* params_json: code parameters, optionally with "rp"/"rm" booleans that apply
 * the secret letter / user permutations. */
FPW_API fpw_status fpw_codebook_generate(const char* params_json, uint64_t seed, fpw_codebook** out);
/* Reads <prefix>.header.json, <prefix>.rows.jsonl and <prefix>.key.json. */
FPW_API fpw_status fpw_codebook_load(const char* prefix, fpw_codebook** out);
FPW_API fpw_status fpw_codebook_save(const fpw_codebook* cb, const char* prefix);
/* Header JSON (params, users, length, host, timeshare, composition). */
FPW_API fpw_status fpw_codebook_info(const fpw_codebook* cb, char** json_out);
FPW_API fpw_status fpw_codebook_row(const fpw_codebook* cb, size_t user, uint16_t* buf, size_t len);
FPW_API void fpw_codebook_free(fpw_codebook* cb);

/* attack_json: {"coalition": [...], "attack": {"name"|"channel", "exchangeable"}}.
 * Result: {"y", "coalition", "feasibility", "conditional_csv"}. */
FPW_API fpw_status fpw_attack(const fpw_codebook* cb, const char* attack_json, uint64_t seed, char** result_json);

/* y_json: {"alphabet", "symbols"}. decode_json: {"kind": "threshold"|"mpmi",
 * "delta", "k_max", "search", "rate"}. Result: outcome, guilt indices and the
 * significance check for MPMI. */
FPW_API fpw_status fpw_decode(const fpw_codebook* cb, const char* y_json, const char* decode_json,
                              char** result_json);

/* workers == 0 keeps the config's value. */
FPW_API fpw_status fpw_simulate(const char* config_json, uint64_t seed, size_t workers, char** csv_out,
                                char** report_json);

/* problem_json: game problem, optionally with "L_sweep": [..]. csv_out has
 * columns K,L,R,value,restarts,gap (R empty). */
FPW_API fpw_status fpw_capacity(const char* problem_json, uint64_t seed, size_t workers, char** csv_out,
                                char** solution_json);

/* request_json: {"problem", "input_law"?, "query", "R": x | [..], "memoryless"}.
 * csv_out has columns K,L,R,value,restarts,gap (restarts = starts,
 * gap = constraint violation). */
FPW_API fpw_status fpw_exponent(const char* request_json, uint64_t seed, char** csv_out, char** result_json);

#ifdef __cplusplus
}
#endif

#endif
