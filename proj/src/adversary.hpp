#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "air_interface.hpp"
#include "trace.hpp"
#include "usim.hpp"

namespace mimsi {

/// What an eavesdropper sees: one identity value read off the air.
struct Observation {
    TimeMs time = 0;
    NetworkId location;
    std::string identity;  // "imsi:<digits>" or "tmsi:<network>:<hex>"
    std::string message;
    std::uint64_t seq = 0;
    bool attacker_caused = false;

    bool is_imsi() const { return identity.starts_with("imsi:"); }
};

/// Built strictly from fields flagged visible in each trace event.
std::vector<Observation> passive_collect(const std::vector<TraceEvent>& trace);

/// Harness ground truth: trace sequence number -> account.
using GroundTruth = std::map<std::uint64_t, AccountId>;
GroundTruth ground_truth(const std::vector<TraceEvent>& trace);

struct Epoch {
    std::string identity;
    TimeMs first_seen = 0;
    TimeMs last_seen = 0;
    std::size_t observations = 0;
};

struct SubscriberLinkage {
    std::vector<Epoch> epochs;
    std::size_t pseudonym_count = 0;
    TimeMs max_epoch_ms = 0;
    std::size_t linkage_violations = 0;  // TMSIs carried across an IMSI change
};

struct LinkabilityReport {
    std::map<AccountId, SubscriberLinkage> subscribers;
    std::size_t linkage_violations = 0;
    double mean_pseudonyms = 0.0;

    Fields to_json() const;
};

/// Splits each subscriber's IMSI observations into epochs of one identity.
/// TMSI observations are attributed to the epoch they fall in and must not
/// reappear in the next one.
LinkabilityReport linkability_analyze(const std::vector<Observation>& observations, const GroundTruth& truth,
                                      const std::vector<AccountId>& accounts);

/// Drops every TMSI mapping at `sn`. Returns the TMSIs that were cleared.
std::vector<std::uint32_t> active_catch(ServingNetwork& sn);

air::AuthRequest random_auth_request(Rng& rng);

struct InjectionTally {
    std::uint64_t attempts = 0;
    std::uint64_t accepted = 0;
    std::uint64_t mac_failures = 0;
    std::uint64_t sqn_stale = 0;
    std::uint64_t imsi_changes = 0;

    void record(const CardAuthResult& r);
    Fields to_json() const;
};

/// Delivers a crafted or replayed challenge straight to the card.
CardAuthResult inject_rand(Usim& usim, const Block128& rand, const Autn& autn);

struct ClassifierScore {
    std::string name;
    double accuracy = 0.0;
};

struct DistinguishabilityResult {
    std::vector<ClassifierScore> classifiers;
    std::string best;
    double best_accuracy = 0.0;
    double sigma = 0.0;
    double permutation_p = 1.0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    bool pass = false;  // best accuracy within 0.5 +/- 3 sigma

    Fields to_json() const;
};

/// Trains per-bit, per-byte-frequency and repeated-prefix classifiers on
/// half of a labelled corpus and scores them on the other half. The
/// permutation p-value compares the best score with label-shuffled runs.
DistinguishabilityResult rand_distinguishability(const std::vector<Block128>& signal,
                                                 const std::vector<Block128>& plain, Rng& rng,
                                                 std::size_t permutations = 100);

}  // namespace mimsi
