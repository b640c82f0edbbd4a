// Command-line front end over the mimsi C API.
#include <cstdio>
#include <cstring>
#include <memory>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mimsi/mimsi.h"

namespace {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;  // bad flags, missing or unreadable file
constexpr int kExitInvalid = 3;
constexpr int kExitInvariant = 4;
constexpr int kExitConformance = 5;

int exit_code(mimsi_status s) {
    switch (s) {
        case MIMSI_OK: return kExitOk;
        case MIMSI_ERR_ARGUMENT:
        case MIMSI_ERR_IO: return kExitUsage;
        case MIMSI_ERR_PARSE:
        case MIMSI_ERR_VALIDATION: return kExitInvalid;
        case MIMSI_ERR_INVARIANT: return kExitInvariant;
        case MIMSI_ERR_CONFORMANCE: return kExitConformance;
        case MIMSI_ERR_INTERNAL: break;
    }
    return kExitInternal;
}

int report(mimsi_status s) {
    std::cerr << "mimsi: " << mimsi_last_error() << "\n";
    return exit_code(s);
}

bool write_file(const std::filesystem::path& path, const char* data, std::size_t len) {
    std::ofstream out(path, std::ios::binary);
    out.write(data, static_cast<std::streamsize>(len));
    return static_cast<bool>(out);
}

struct Options {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string sweep;
    bool conformance = false;
    std::string suite = "all";
    bool debug_keys = false;
    bool quiet = false;
    std::string fault;
    std::vector<std::string> overrides;
};

int cmd_conformance(const Options& o) {
    mimsi_suite suite = o.suite == "milenage"    ? MIMSI_SUITE_MILENAGE
                        : o.suite == "small-run" ? MIMSI_SUITE_SMALL_RUN
                                                 : MIMSI_SUITE_ALL;
    char* text = nullptr;
    mimsi_status s = mimsi_conformance(suite, o.fault.empty() ? nullptr : o.fault.c_str(), &text);
    if (text) {
        auto doc = nlohmann::json::parse(text);
        if (!o.quiet)
            for (const auto& line : doc["lines"]) std::cout << line.get<std::string>() << "\n";
        if (!o.out.empty()) {
            std::filesystem::create_directories(o.out);
            write_file(std::filesystem::path(o.out) / "conformance.json", text, std::strlen(text));
        }
        mimsi_string_free(text);
    }
    if (s != MIMSI_OK) return report(s);
    return kExitOk;
}

bool parse_range(const std::string& text, std::uint64_t& first, std::uint64_t& last) {
    auto dots = text.find("..");
    if (dots == std::string::npos) return false;
    try {
        std::size_t used = 0;
        first = std::stoull(text.substr(0, dots), &used);
        if (used != dots) return false;
        auto tail = text.substr(dots + 2);
        last = std::stoull(tail, &used);
        return used == tail.size();
    } catch (const std::exception&) {
        return false;
    }
}

int run(const Options& o) {
    if (o.conformance) return cmd_conformance(o);
    if (o.scenario.empty()) {
        std::cerr << "mimsi: --scenario is required (or use --conformance)\n";
        return kExitUsage;
    }

    mimsi_scenario* sc = nullptr;
    if (auto s = mimsi_scenario_load_file(o.scenario.c_str(), &sc); s != MIMSI_OK) return report(s);
    std::unique_ptr<mimsi_scenario, decltype(&mimsi_scenario_free)> guard(sc, mimsi_scenario_free);
    for (const auto& ov : o.overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos) {
            std::cerr << "mimsi: --set expects PATH=VALUE, got '" << ov << "'\n";
            return kExitUsage;
        }
        if (auto s = mimsi_scenario_set(sc, ov.substr(0, eq).c_str(), ov.substr(eq + 1).c_str()); s != MIMSI_OK)
            return report(s);
    }

    mimsi_run_options opts{};
    opts.has_seed = o.seed.has_value();
    opts.seed = o.seed.value_or(0);
    opts.debug_keys = o.debug_keys;
    opts.fault = o.fault.empty() ? nullptr : o.fault.c_str();

    if (!o.sweep.empty()) {
        std::uint64_t first = 0, last = 0;
        if (!parse_range(o.sweep, first, last)) {
            std::cerr << "mimsi: --sweep expects A..B, got '" << o.sweep << "'\n";
            return kExitUsage;
        }
        if (last < first) {
            std::cerr << "mimsi: empty seed range " << o.sweep << "\n";
            return kExitUsage;
        }
        char* text = nullptr;
        mimsi_status s = mimsi_sweep(sc, first, last, &opts, &text);
        if (s != MIMSI_OK) return report(s);
        std::unique_ptr<char, decltype(&mimsi_string_free)> owned(text, mimsi_string_free);
        if (o.out.empty()) {
            std::cout << text;
        } else {
            std::filesystem::create_directories(o.out);
            write_file(std::filesystem::path(o.out) / "sweep.json", text, std::strlen(text));
            if (!o.quiet) std::cout << "sweep " << first << ".." << last << " -> " << o.out << "/sweep.json\n";
        }
        return kExitOk;
    }

    if (auto s = mimsi_scenario_validate(sc); s != MIMSI_OK) return report(s);
    std::string out = o.out.empty() ? std::string("mimsi-out") : o.out;
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
        std::cerr << "mimsi: cannot create output directory '" << out << "': " << ec.message() << "\n";
        return kExitUsage;
    }

    mimsi_result* result = nullptr;
    mimsi_status s = mimsi_run(sc, &opts, &result);
    if (result == nullptr) return report(s);
    std::unique_ptr<mimsi_result, decltype(&mimsi_result_free)> rguard(result, mimsi_result_free);

    std::size_t tlen = 0, mlen = 0;
    const char* trace = mimsi_result_trace(result, &tlen);
    const char* metrics = mimsi_result_metrics(result, &mlen);
    auto dir = std::filesystem::path(out);
    if (!write_file(dir / "trace.jsonl", trace, tlen) || !write_file(dir / "metrics.json", metrics, mlen)) {
        std::cerr << "mimsi: cannot write to '" << out << "'\n";
        return kExitUsage;
    }
    if (s != MIMSI_OK) {
        std::cerr << "mimsi: invariant violated: " << mimsi_result_violation(result) << "\n";
        return exit_code(s);
    }
    if (!o.quiet) {
        auto m = nlohmann::json::parse(std::string(metrics, mlen));
        std::cout << "events " << m["events"]["scheduler"] << ", pseudonyms/subscriber "
                  << m["pseudonyms"]["mean"] << ", changes " << m["changes"]["on_card"] << ", promotions "
                  << m["promotions"]["count"] << " -> " << out << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"mimsi: multiple-IMSI pseudonymity simulator"};
    app.set_version_flag("--version", std::string("mimsi ") + mimsi_version());
    app.add_option("--scenario", o.scenario, "Scenario file (JSON)");
    app.add_option("--seed", o.seed, "Seed; overrides the scenario's");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--sweep", o.sweep, "Run seeds A..B inclusive and aggregate");
    app.add_flag("--conformance", o.conformance, "Run MILENAGE vectors and small-run enumerations");
    app.add_option("--suite", o.suite, "Conformance suite")->check(CLI::IsMember({"all", "milenage", "small-run"}));
    app.add_flag("--debug-keys", o.debug_keys, "Show XRES, CK and IK in traces");
    app.add_flag("--quiet", o.quiet, "Print nothing on success");
    app.add_option("--fault", o.fault, "Test hook: desync (runs) or corrupt-opc (conformance)");
    app.add_option("--set", o.overrides, "Override a scenario field, PATH=VALUE");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }
    try {
        return run(o);
    } catch (const std::exception& e) {
        std::cerr << "mimsi: " << e.what() << "\n";
        return kExitInternal;
    }
}
