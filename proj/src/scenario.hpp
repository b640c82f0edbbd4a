#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "home_network.hpp"
#include "usim.hpp"

namespace mimsi {

/// Every problem found while validating a scenario, each prefixed with the
/// JSON path of the offending field.
class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct MeConfig {
    bool proactive = true;
    bool refresh = true;
    TimeMs restart_delay_mean_ms = 120'000;
};

struct SubscriberConfig {
    AccountId account;
    SubscriberKey key;
    Block128 opc{};
    Amf amf = kNormalAmf;
    Scheme scheme = Scheme::C;
    std::optional<Imsi> imsi;
    std::vector<Imsi> predefined;
    SelectionMode selection = SelectionMode::Cyclic;
    std::uint64_t selection_seed = 0;
    std::uint32_t change_threshold = 0;
    ChangePolicy policy;
    MeConfig me;
    NetworkId initial_network;
};

struct NetworkConfig {
    NetworkId id;
    std::size_t batch_size = 5;
};

struct WorkloadConfig {
    double calls_per_hour = 2.0;
    double power_cycles_per_day = 1.0;
    TimeMs off_duration_mean_ms = 600'000;
    double roams_per_day = 0.0;
    double identity_loss_probability = 0.0;
};

struct AirConfig {
    TimeMs delay_ms = 50;
    double loss_probability = 0.0;
    double duplicate_probability = 0.0;
};

struct CoreConfig {
    TimeMs min_delay_ms = 20;
    TimeMs max_delay_ms = 200;
    double duplicate_probability = 0.0;  // a batch is delivered twice
};

struct AttackConfig {
    enum class Kind { Catch, InjectRandom, InjectReplay };
    Kind kind = Kind::Catch;
    TimeMs at_ms = 0;
    NetworkId network;
    std::optional<AccountId> target;  // injections; empty means every subscriber
    std::uint32_t count = 1;
};

struct FaultConfig {
    enum class Kind { Desync };
    Kind kind = Kind::Desync;
    TimeMs at_ms = 0;
    AccountId account;
};

struct Scenario {
    std::uint64_t seed = 0;
    TimeMs duration_ms = 0;
    OperatorPrefix prefix;
    std::vector<NetworkConfig> networks;
    std::vector<SubscriberConfig> subscribers;
    std::vector<Imsi> pool;
    WorkloadConfig workload;
    AirConfig air;
    CoreConfig core;
    TimeMs policy_clock_ms = 60'000;
    std::vector<AttackConfig> attacks;
    std::vector<FaultConfig> faults;
};

/// Parses and validates a scenario document. `seed_override` replaces the
/// document's seed before any seed-derived material (generated populations)
/// is built.
Scenario parse_scenario(const nlohmann::json& doc, std::optional<std::uint64_t> seed_override = std::nullopt);

/// Applies `path=value` overrides (dotted path, JSON value) to a document.
void apply_override(nlohmann::json& doc, std::string_view path, const nlohmann::json& value);

}  // namespace mimsi
