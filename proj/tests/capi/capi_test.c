/* Exercises the shared library through its C header only. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include <mimsi/mimsi.h>

static int failures = 0;

#define EXPECT(cond)                                                      \
    do {                                                                  \
        if (!(cond)) {                                                    \
            fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                   \
        }                                                                 \
    } while (0)

static void hex_to(const char* hex, uint8_t* out, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        unsigned v;
        sscanf(hex + 2 * i, "%2x", &v);
        out[i] = (uint8_t)v;
    }
}

static int equals_hex(const uint8_t* bytes, size_t n, const char* hex) {
    uint8_t want[32];
    hex_to(hex, want, n);
    return memcmp(bytes, want, n) == 0;
}

static const char* kScenario =
    "{\"format\":\"mimsi-scenario/1\",\"seed\":5,\"duration_ms\":3600000,"
    "\"operator\":{\"mcc\":\"001\",\"mnc\":\"01\"},"
    "\"networks\":[{\"id\":\"home\",\"batch_size\":3}],"
    "\"population\":{\"count\":3,\"scheme\":\"C\",\"policy\":{\"name\":\"every_n\",\"n\":2}},"
    "\"imsi_pool\":{\"msin_start\":700000,\"count\":20},"
    "\"workload\":{\"calls_per_hour\":6}}";

static void test_primitives(void) {
    uint8_t k[16], op[16], opc[16], rand[16], sqn[6], amf[2];
    mimsi_milenage_output out;
    hex_to("465b5ce8b199b49faa5f0a2ee238a6bc", k, 16);
    hex_to("cdc202d5123e20f62b6d676ac72cb318", op, 16);
    hex_to("23553cbe9637a89d218ae64dae47bf35", rand, 16);
    hex_to("ff9bb4d0b607", sqn, 6);
    hex_to("b9b9", amf, 2);
    EXPECT(mimsi_derive_opc(k, op, opc) == MIMSI_OK);
    EXPECT(equals_hex(opc, 16, "cd63cb71954a9f4e48a5994e37a02baf"));
    EXPECT(mimsi_milenage(k, opc, rand, sqn, amf, &out) == MIMSI_OK);
    EXPECT(equals_hex(out.mac_a, 8, "4a9ffac354dfafb3"));
    EXPECT(equals_hex(out.mac_s, 8, "01cfaf9ec4e871e9"));
    EXPECT(equals_hex(out.res, 8, "a54211d5e3ba50bf"));
    EXPECT(equals_hex(out.ak, 6, "aa689c648370"));
    EXPECT(equals_hex(out.ak_star, 6, "451e8beca43b"));
    EXPECT(mimsi_milenage(NULL, opc, rand, sqn, amf, &out) == MIMSI_ERR_ARGUMENT);

    uint8_t block[6];
    char digits[11];
    EXPECT(mimsi_msin_encode("123456789", block) == MIMSI_OK);
    EXPECT(equals_hex(block, 6, "21436587f9ff"));
    EXPECT(mimsi_msin_decode(block, digits) == MIMSI_OK);
    EXPECT(strcmp(digits, "123456789") == 0);
    EXPECT(mimsi_msin_encode("12345678", block) == MIMSI_ERR_ARGUMENT);
    hex_to("2a436587f9ff", block, 6);
    EXPECT(mimsi_msin_decode(block, digits) != MIMSI_OK);
    EXPECT(strlen(mimsi_last_error()) > 0);
}

static void test_scenarios(void) {
    mimsi_scenario* sc = NULL;
    EXPECT(mimsi_scenario_load_string("{not json", &sc) == MIMSI_ERR_PARSE);
    EXPECT(mimsi_scenario_load_file("/nonexistent/scenario.json", &sc) == MIMSI_ERR_IO);

    EXPECT(mimsi_scenario_load_string(kScenario, &sc) == MIMSI_OK);
    EXPECT(mimsi_scenario_validate(sc) == MIMSI_OK);
    EXPECT(mimsi_scenario_set(sc, "networks.0.batch_size", "0") == MIMSI_OK);
    EXPECT(mimsi_scenario_validate(sc) == MIMSI_ERR_VALIDATION);
    EXPECT(strstr(mimsi_last_error(), "networks[0].batch_size") != NULL);
    EXPECT(mimsi_scenario_set(sc, "networks.0.batch_size", "3") == MIMSI_OK);
    EXPECT(mimsi_scenario_validate(sc) == MIMSI_OK);

    mimsi_run_options opt = {0, 0, 0, NULL};
    mimsi_result* a = NULL;
    mimsi_result* b = NULL;
    EXPECT(mimsi_run(sc, &opt, &a) == MIMSI_OK);
    EXPECT(mimsi_run(sc, NULL, &b) == MIMSI_OK);
    size_t la = 0, lb = 0;
    const char* ta = mimsi_result_trace(a, &la);
    const char* tb = mimsi_result_trace(b, &lb);
    if (!ta || !tb) {
        fprintf(stderr, "run produced no result: %s\n", mimsi_last_error());
        exit(1);
    }
    EXPECT(la > 0 && la == lb && memcmp(ta, tb, la) == 0);
    EXPECT(strstr(ta, "\"format\":\"mimsi-trace/1\"") != NULL);
    EXPECT(strstr(mimsi_result_metrics(a, NULL), "mimsi-metrics/1") != NULL);
    EXPECT(mimsi_result_violation(a) == NULL);
    mimsi_result_free(a);
    mimsi_result_free(b);

    opt.has_seed = 1;
    opt.seed = 6;
    opt.fault = "desync";
    EXPECT(mimsi_run(sc, &opt, &a) == MIMSI_ERR_INVARIANT);
    EXPECT(a != NULL && mimsi_result_violation(a) != NULL);
    EXPECT(strstr(mimsi_last_error(), "conservation") != NULL);
    mimsi_result_free(a);

    char* sweep = NULL;
    EXPECT(mimsi_sweep(sc, 3, 2, NULL, &sweep) == MIMSI_ERR_ARGUMENT);
    EXPECT(mimsi_sweep(sc, 1, 2, NULL, &sweep) == MIMSI_OK);
    EXPECT(sweep != NULL && strstr(sweep, "mimsi-sweep/1") != NULL);
    mimsi_string_free(sweep);
    mimsi_scenario_free(sc);
}

static void test_conformance(void) {
    char* report = NULL;
    EXPECT(mimsi_conformance(MIMSI_SUITE_MILENAGE, NULL, &report) == MIMSI_OK);
    mimsi_string_free(report);
    EXPECT(mimsi_conformance(MIMSI_SUITE_MILENAGE, "corrupt-opc", &report) == MIMSI_ERR_CONFORMANCE);
    EXPECT(strstr(mimsi_last_error(), "f1") != NULL);
    mimsi_string_free(report);
    EXPECT(mimsi_conformance(MIMSI_SUITE_ALL, "bogus", &report) == MIMSI_ERR_ARGUMENT);
}

int main(void) {
    EXPECT(strcmp(mimsi_version(), "0.3.0") == 0);
    test_primitives();
    test_scenarios();
    test_conformance();
    if (failures) {
        fprintf(stderr, "%d check(s) failed\n", failures);
        return 1;
    }
    printf("c api: all checks passed\n");
    return 0;
}
