/* mimsi: multiple-IMSI pseudonymity over 3G AKA, as a C library. */
#ifndef MIMSI_H
#define MIMSI_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MIMSI_API __declspec(dllexport)
#else
#define MIMSI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mimsi_status {
    MIMSI_OK = 0,
    MIMSI_ERR_ARGUMENT = 1,    /* null pointer, bad flag value */
    MIMSI_ERR_IO = 2,          /* file missing or unreadable */
    MIMSI_ERR_PARSE = 3,       /* not JSON */
    MIMSI_ERR_VALIDATION = 4,  /* scenario rejected; see mimsi_last_error */
    MIMSI_ERR_INVARIANT = 5,   /* run stopped on an invariant violation */
    MIMSI_ERR_CONFORMANCE = 6, /* a conformance vector or ordering failed */
    MIMSI_ERR_INTERNAL = 7
} mimsi_status;

typedef struct mimsi_scenario mimsi_scenario;
typedef struct mimsi_result mimsi_result;

typedef struct mimsi_run_options {
    int has_seed;      /* nonzero: seed overrides the scenario's */
    uint64_t seed;
    int debug_keys;    /* nonzero: XRES/CK/IK appear in traces */
    const char* fault; /* NULL or "desync" */
} mimsi_run_options;

typedef enum mimsi_suite { MIMSI_SUITE_ALL = 0, MIMSI_SUITE_MILENAGE = 1, MIMSI_SUITE_SMALL_RUN = 2 } mimsi_suite;

MIMSI_API const char* mimsi_version(void);

/* Message for the last failing call on this thread; never NULL. */
MIMSI_API const char* mimsi_last_error(void);

MIMSI_API mimsi_status mimsi_scenario_load_file(const char* path, mimsi_scenario** out);
MIMSI_API mimsi_status mimsi_scenario_load_string(const char* json, mimsi_scenario** out);
/* Sets a dotted path to a JSON value, e.g. ("subscribers.0.change_threshold", "5"). */
MIMSI_API mimsi_status mimsi_scenario_set(mimsi_scenario* scenario, const char* path, const char* json_value);
/* Validates without running. */
MIMSI_API mimsi_status mimsi_scenario_validate(const mimsi_scenario* scenario);
MIMSI_API void mimsi_scenario_free(mimsi_scenario* scenario);

/* On MIMSI_OK and MIMSI_ERR_INVARIANT *out holds a result to free. */
MIMSI_API mimsi_status mimsi_run(const mimsi_scenario* scenario, const mimsi_run_options* options,
                                 mimsi_result** out);
MIMSI_API const char* mimsi_result_trace(const mimsi_result* result, size_t* length);
MIMSI_API const char* mimsi_result_metrics(const mimsi_result* result, size_t* length);
/* First violated invariant, or NULL. */
MIMSI_API const char* mimsi_result_violation(const mimsi_result* result);
MIMSI_API void mimsi_result_free(mimsi_result* result);

/* Seeds first..last inclusive. *out_json receives the aggregate document. */
MIMSI_API mimsi_status mimsi_sweep(const mimsi_scenario* scenario, uint64_t first, uint64_t last,
                                   const mimsi_run_options* options, char** out_json);

/* fault: NULL or "corrupt-opc". *out_report receives a JSON report. */
MIMSI_API mimsi_status mimsi_conformance(mimsi_suite suite, const char* fault, char** out_report);

MIMSI_API void mimsi_string_free(char* s);

typedef struct mimsi_milenage_output {
    uint8_t mac_a[8];
    uint8_t mac_s[8];
    uint8_t res[8];
    uint8_t ck[16];
    uint8_t ik[16];
    uint8_t ak[6];
    uint8_t ak_star[6];
} mimsi_milenage_output;

MIMSI_API mimsi_status mimsi_milenage(const uint8_t k[16], const uint8_t opc[16], const uint8_t rand[16],
                                      const uint8_t sqn[6], const uint8_t amf[2], mimsi_milenage_output* out);
MIMSI_API mimsi_status mimsi_derive_opc(const uint8_t k[16], const uint8_t op[16], uint8_t opc[16]);

/* 9 or 10 digit MSIN <-> 6-byte swapped-nibble BCD. decode writes up to 10
 * digits plus a terminator into out. */
MIMSI_API mimsi_status mimsi_msin_encode(const char* msin, uint8_t out[6]);
MIMSI_API mimsi_status mimsi_msin_decode(const uint8_t in[6], char out[11]);

#ifdef __cplusplus
}
#endif

#endif
