#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "home_network.hpp"

namespace mimsi {

inline constexpr std::string_view kToolVersion = "0.3.0";
inline constexpr std::string_view kTraceFormat = "mimsi-trace/1";
inline constexpr std::string_view kMetricsFormat = "mimsi-metrics/1";

using Fields = nlohmann::ordered_json;

/// One trace record. `visible` names the payload fields an eavesdropper on
/// the air interface can read; `truth` is the harness's ground truth (the
/// account behind the event) and is never consulted by adversary code.
struct TraceEvent {
    TimeMs time = 0;
    std::uint64_t seq = 0;
    std::string actor;
    std::string kind;
    Fields fields = Fields::object();
    std::vector<std::string> visible;
    std::optional<AccountId> truth;

    bool is_visible(std::string_view field) const;
};

struct TraceHeader {
    std::string scenario_sha256;
    std::uint64_t seed = 0;
    bool debug_keys = false;
};

class Trace {
public:
    explicit Trace(bool debug_keys = false) : debug_keys_(debug_keys) {}

    TraceEvent& emit(TimeMs time, std::string actor, std::string kind, Fields fields = Fields::object(),
                     std::vector<std::string> visible = {}, std::optional<AccountId> truth = std::nullopt);

    /// Hex-encodes key material, or replaces it with "redacted".
    std::string key_material(std::span<const std::uint8_t> bytes) const;

    const std::vector<TraceEvent>& events() const { return events_; }
    bool debug_keys() const { return debug_keys_; }

    std::string to_jsonl(const TraceHeader& header) const;

private:
    std::vector<TraceEvent> events_;
    bool debug_keys_;
};

Fields event_to_json(const TraceEvent& event);
TraceEvent event_from_json(const nlohmann::json& line);

/// Parses a JSONL trace; the header record is returned separately.
std::vector<TraceEvent> parse_trace(std::string_view jsonl, nlohmann::json* header = nullptr);

std::string sha256_hex(std::string_view data);

}  // namespace mimsi
