#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aka.hpp"
#include "trace.hpp"

namespace mimsi {

/// Steps of a one-subscriber skeleton. Request fetches a batch under the
/// identity the ME presents; Deliver and Drop consume the head of the
/// serving network's buffer; Replay re-sends the last delivered challenge.
enum class Step { Trigger, Request, Deliver, Drop, Refresh, PowerCycle, Replay };

std::string_view to_string(Step step);

struct Skeleton {
    std::string name;
    Scheme scheme = Scheme::C;
    std::vector<Step> steps;
    std::size_t batch_size = 2;
    std::uint32_t change_threshold = 0;  // scheme A
    std::size_t predefined = 3;          // schemes A and B
    std::size_t pool = 3;                // scheme C
};

struct ExploreVerdict {
    std::string name;
    std::uint64_t nodes = 0;
    std::uint64_t leaves = 0;
    std::uint64_t dead_ends = 0;  // leaves where no remaining step was admissible
    std::vector<std::string> violations;
    bool ok = false;

    Fields to_json() const;
};

class StateSpaceExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxSkeletonSteps = 12;

/// Depth-first enumeration of every distinct ordering of the skeleton's
/// steps, checking the home-network invariants, that EF_IMSI and the
/// presented identity resolve to the account, that replays are refused,
/// and that promotions match history growth, at every node.
ExploreVerdict exhaustive_small_run(const Skeleton& skeleton, std::uint64_t node_limit = 5'000'000);

/// The built-in suite: scheme C single change, scheme C duplicate
/// deliveries, scheme B lost signal, scheme A threshold changes.
std::vector<Skeleton> standard_skeletons();

}  // namespace mimsi
