#include "mimsi/mimsi.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "conformance.hpp"
#include "sweep.hpp"

struct mimsi_scenario {
    nlohmann::json doc;
};

struct mimsi_result {
    std::string trace;
    std::string metrics;
    std::optional<std::string> violation;
};

namespace {

thread_local std::string last_error;

mimsi_status fail(mimsi_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

mimsi::RunOptions convert(const mimsi_run_options* o) {
    mimsi::RunOptions r;
    if (o == nullptr) return r;
    r.debug_keys = o->debug_keys != 0;
    if (o->fault) r.fault = o->fault;
    return r;
}

std::optional<std::uint64_t> seed_of(const mimsi_run_options* o) {
    if (o && o->has_seed) return o->seed;
    return std::nullopt;
}

template <typename F>
mimsi_status guarded(F&& body) {
    try {
        return body();
    } catch (const mimsi::ScenarioError& e) {
        return fail(MIMSI_ERR_VALIDATION, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(MIMSI_ERR_PARSE, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(MIMSI_ERR_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(MIMSI_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(MIMSI_ERR_INTERNAL, "unknown error");
    }
}

}  // namespace

extern "C" {

const char* mimsi_version(void) { return mimsi::kToolVersion.data(); }

const char* mimsi_last_error(void) { return last_error.c_str(); }

mimsi_status mimsi_scenario_load_string(const char* json, mimsi_scenario** out) {
    if (!json || !out) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        auto doc = nlohmann::json::parse(json);
        *out = new mimsi_scenario{std::move(doc)};
        return MIMSI_OK;
    });
}

mimsi_status mimsi_scenario_load_file(const char* path, mimsi_scenario** out) {
    if (!path || !out) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) return fail(MIMSI_ERR_IO, std::string("cannot open scenario file '") + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return guarded([&] {
        try {
            *out = new mimsi_scenario{nlohmann::json::parse(text.str())};
        } catch (const nlohmann::json::parse_error& e) {
            return fail(MIMSI_ERR_PARSE, std::string(path) + ": " + e.what());
        }
        return MIMSI_OK;
    });
}

mimsi_status mimsi_scenario_set(mimsi_scenario* scenario, const char* path, const char* json_value) {
    if (!scenario || !path || !json_value) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(json_value);
        } catch (const nlohmann::json::parse_error&) {
            value = json_value;  // bare words are strings
        }
        mimsi::apply_override(scenario->doc, path, value);
        return MIMSI_OK;
    });
}

mimsi_status mimsi_scenario_validate(const mimsi_scenario* scenario) {
    if (!scenario) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        mimsi::parse_scenario(scenario->doc);
        return MIMSI_OK;
    });
}

void mimsi_scenario_free(mimsi_scenario* scenario) { delete scenario; }

mimsi_status mimsi_run(const mimsi_scenario* scenario, const mimsi_run_options* options, mimsi_result** out) {
    if (!scenario || !out) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto sc = mimsi::parse_scenario(scenario->doc, seed_of(options));
        auto r = mimsi::run_scenario(sc, convert(options), mimsi::scenario_hash(scenario->doc));
        *out = new mimsi_result{std::move(r.trace_jsonl), std::move(r.metrics_json), r.violation};
        if (r.violation) return fail(MIMSI_ERR_INVARIANT, *r.violation);
        return MIMSI_OK;
    });
}

const char* mimsi_result_trace(const mimsi_result* result, size_t* length) {
    if (!result) return nullptr;
    if (length) *length = result->trace.size();
    return result->trace.c_str();
}

const char* mimsi_result_metrics(const mimsi_result* result, size_t* length) {
    if (!result) return nullptr;
    if (length) *length = result->metrics.size();
    return result->metrics.c_str();
}

const char* mimsi_result_violation(const mimsi_result* result) {
    return result && result->violation ? result->violation->c_str() : nullptr;
}

void mimsi_result_free(mimsi_result* result) { delete result; }

mimsi_status mimsi_sweep(const mimsi_scenario* scenario, uint64_t first, uint64_t last,
                         const mimsi_run_options* options, char** out_json) {
    if (!scenario || !out_json) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    *out_json = nullptr;
    if (last < first) return fail(MIMSI_ERR_ARGUMENT, "empty seed range");
    return guarded([&] {
        try {
            auto agg = mimsi::run_sweep(scenario->doc, first, last, convert(options));
            *out_json = dup(agg.dump(2) + "\n");
            return MIMSI_OK;
        } catch (const mimsi::SweepFailure& e) {
            bool invariant = std::string_view(e.what()).find("invariant violated") != std::string_view::npos;
            return fail(invariant ? MIMSI_ERR_INVARIANT : MIMSI_ERR_VALIDATION, e.what());
        }
    });
}

mimsi_status mimsi_conformance(mimsi_suite suite, const char* fault, char** out_report) {
    if (!out_report) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    *out_report = nullptr;
    bool corrupt = false;
    if (fault) {
        if (std::strcmp(fault, "corrupt-opc") != 0)
            return fail(MIMSI_ERR_ARGUMENT, std::string("unknown conformance fault '") + fault + "'");
        corrupt = true;
    }
    mimsi::Suite s = suite == MIMSI_SUITE_MILENAGE   ? mimsi::Suite::Milenage
                     : suite == MIMSI_SUITE_SMALL_RUN ? mimsi::Suite::SmallRun
                                                      : mimsi::Suite::All;
    return guarded([&] {
        auto report = mimsi::run_conformance(s, corrupt);
        *out_report = dup(report.to_json().dump(2) + "\n");
        if (!report.ok()) return fail(MIMSI_ERR_CONFORMANCE, *report.first_failure);
        return MIMSI_OK;
    });
}

void mimsi_string_free(char* s) { std::free(s); }

mimsi_status mimsi_milenage(const uint8_t k[16], const uint8_t opc[16], const uint8_t rand[16], const uint8_t sqn[6],
                            const uint8_t amf[2], mimsi_milenage_output* out) {
    if (!k || !opc || !rand || !sqn || !amf || !out) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        mimsi::SubscriberKey key;
        mimsi::Block128 o, r;
        mimsi::Block48 s;
        std::memcpy(key.bytes.data(), k, 16);
        std::memcpy(o.data(), opc, 16);
        std::memcpy(r.data(), rand, 16);
        std::memcpy(s.data(), sqn, 6);
        mimsi::Milenage m(key, o);
        mimsi::Amf a{static_cast<std::uint16_t>((amf[0] << 8) | amf[1])};
        auto q = mimsi::Sqn::from_bytes(s);
        auto mac_a = m.f1(r, q, a);
        auto mac_s = m.f1_star(r, q, a);
        auto f = m.f2345(r);
        auto ak_star = m.f5_star(r);
        std::memcpy(out->mac_a, mac_a.data(), 8);
        std::memcpy(out->mac_s, mac_s.data(), 8);
        std::memcpy(out->res, f.res.data(), 8);
        std::memcpy(out->ck, f.ck.data(), 16);
        std::memcpy(out->ik, f.ik.data(), 16);
        std::memcpy(out->ak, f.ak.data(), 6);
        std::memcpy(out->ak_star, ak_star.data(), 6);
        return MIMSI_OK;
    });
}

mimsi_status mimsi_derive_opc(const uint8_t k[16], const uint8_t op[16], uint8_t opc[16]) {
    if (!k || !op || !opc) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        mimsi::SubscriberKey key;
        mimsi::Block128 o;
        std::memcpy(key.bytes.data(), k, 16);
        std::memcpy(o.data(), op, 16);
        auto c = mimsi::derive_opc(key, o);
        std::memcpy(opc, c.data(), 16);
        return MIMSI_OK;
    });
}

mimsi_status mimsi_msin_encode(const char* msin, uint8_t out[6]) {
    if (!msin || !out) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    try {
        auto b = mimsi::encode_msin(msin);
        std::memcpy(out, b.data(), 6);
        return MIMSI_OK;
    } catch (const std::exception& e) {
        return fail(MIMSI_ERR_ARGUMENT, e.what());
    }
}

mimsi_status mimsi_msin_decode(const uint8_t in[6], char out[11]) {
    if (!in || !out) return fail(MIMSI_ERR_ARGUMENT, "null argument");
    try {
        mimsi::MsinBlock b;
        std::memcpy(b.data(), in, 6);
        auto s = mimsi::decode_msin(b);
        std::memcpy(out, s.c_str(), s.size() + 1);
        return MIMSI_OK;
    } catch (const std::exception& e) {
        return fail(MIMSI_ERR_ARGUMENT, e.what());
    }
}

}  // extern "C"
