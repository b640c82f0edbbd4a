#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adversary.hpp"
#include "scenario.hpp"
#include "trace.hpp"

namespace mimsi {

struct RunOptions {
    bool debug_keys = false;
    /// "desync" drops the first subscriber's current IMSI from the index
    /// half way through the run.
    std::optional<std::string> fault;
};

/// Summary statistics with raw latency samples; serialized into metrics.
struct RunStats {
    std::uint64_t scheduler_events = 0;
    std::uint64_t invariant_checks = 0;

    std::uint64_t batches = 0;
    std::uint64_t vectors_plain = 0;
    std::uint64_t vectors_signal_b = 0;
    std::uint64_t vectors_signal_c = 0;
    std::uint64_t vectors_received = 0;
    std::uint64_t vectors_consumed = 0;
    std::uint64_t vectors_discarded = 0;

    std::uint64_t false_detections = 0;
    std::uint64_t decode_failures = 0;
    std::uint64_t embed_checked = 0;
    std::uint64_t embed_violations = 0;
    std::uint64_t promotions = 0;
    std::uint64_t promotion_violations = 0;
    std::uint64_t abandon_violations = 0;

    std::uint64_t changes_decided = 0;
    std::uint64_t changes_on_card = 0;
    std::uint64_t attacker_changes = 0;
    std::vector<double> change_latency_ms;
    std::vector<double> effect_latency_ms;
    std::vector<double> promotion_latency_ms;

    std::uint64_t auth_requests = 0;
    std::uint64_t auth_replies = 0;
    std::uint64_t auth_request_drops = 0;
    std::uint64_t air_drops = 0;
    std::uint64_t air_duplicates = 0;
    std::uint64_t batch_duplicates = 0;

    InjectionTally random_injections;
    InjectionTally replay_injections;

    LinkabilityReport linkability;
};

struct RunResult {
    Trace trace;
    RunStats stats;
    Fields metrics;
    std::optional<std::string> violation;  // first invariant breach; the run stops there
    std::string trace_jsonl;
    std::string metrics_json;
};

RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {},
                       const std::string& scenario_hash = {});

struct LatencySummary {
    std::size_t count = 0;
    double mean = 0, p50 = 0, p90 = 0, p99 = 0, max = 0;
    Fields to_json() const;
};
LatencySummary summarize(std::vector<double> samples);

}  // namespace mimsi
