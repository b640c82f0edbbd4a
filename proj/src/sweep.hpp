#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "simulator.hpp"

namespace mimsi {

class SweepFailure : public std::runtime_error {
public:
    SweepFailure(std::uint64_t seed, const std::string& what)
        : std::runtime_error("seed " + std::to_string(seed) + ": " + what), seed_(seed) {}
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

/// Runs seeds first..last inclusive and aggregates their metrics. A member
/// that fails validation or breaks an invariant aborts the sweep.
Fields run_sweep(const nlohmann::json& doc, std::uint64_t first, std::uint64_t last, const RunOptions& options = {});

/// Canonical hash of a scenario document (after overrides).
std::string scenario_hash(const nlohmann::json& doc);

}  // namespace mimsi
