#include "trace.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "crypto.hpp"

namespace mimsi {

bool TraceEvent::is_visible(std::string_view field) const {
    return std::find(visible.begin(), visible.end(), field) != visible.end();
}

TraceEvent& Trace::emit(TimeMs time, std::string actor, std::string kind, Fields fields,
                        std::vector<std::string> visible, std::optional<AccountId> truth) {
    if (!events_.empty() && time < events_.back().time) throw std::logic_error("trace time went backwards");
    TraceEvent e;
    e.time = time;
    e.seq = events_.size();
    e.actor = std::move(actor);
    e.kind = std::move(kind);
    e.fields = std::move(fields);
    e.visible = std::move(visible);
    e.truth = std::move(truth);
    events_.push_back(std::move(e));
    return events_.back();
}

std::string Trace::key_material(std::span<const std::uint8_t> bytes) const {
    return debug_keys_ ? to_hex(bytes) : std::string("redacted");
}

Fields event_to_json(const TraceEvent& e) {
    Fields j;
    j["t"] = e.time;
    j["seq"] = e.seq;
    j["actor"] = e.actor;
    j["kind"] = e.kind;
    j["fields"] = e.fields;
    j["visible"] = e.visible;
    if (e.truth) j["truth"] = *e.truth;
    return j;
}

TraceEvent event_from_json(const nlohmann::json& line) {
    TraceEvent e;
    e.time = line.at("t").get<TimeMs>();
    e.seq = line.at("seq").get<std::uint64_t>();
    e.actor = line.at("actor").get<std::string>();
    e.kind = line.at("kind").get<std::string>();
    e.fields = Fields::parse(line.at("fields").dump());
    e.visible = line.at("visible").get<std::vector<std::string>>();
    if (line.contains("truth")) e.truth = line.at("truth").get<std::string>();
    return e;
}

std::string Trace::to_jsonl(const TraceHeader& header) const {
    std::string out;
    Fields h;
    h["format"] = kTraceFormat;
    h["tool_version"] = kToolVersion;
    h["scenario_sha256"] = header.scenario_sha256;
    h["seed"] = header.seed;
    h["debug_keys"] = header.debug_keys;
    out += h.dump();
    out += '\n';
    for (const auto& e : events_) {
        out += event_to_json(e).dump();
        out += '\n';
    }
    return out;
}

std::vector<TraceEvent> parse_trace(std::string_view jsonl, nlohmann::json* header) {
    std::vector<TraceEvent> events;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        if (first) {
            first = false;
            if (j.value("format", "") != kTraceFormat) throw std::runtime_error("not a mimsi trace");
            if (header) *header = j;
            continue;
        }
        events.push_back(event_from_json(j));
    }
    return events;
}

std::string sha256_hex(std::string_view data) {
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    return to_hex(std::span(digest.data(), len));
}

}  // namespace mimsi
