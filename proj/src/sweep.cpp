#include "sweep.hpp"

#include <algorithm>

namespace mimsi {

std::string scenario_hash(const nlohmann::json& doc) { return sha256_hex(doc.dump()); }

Fields run_sweep(const nlohmann::json& doc, std::uint64_t first, std::uint64_t last, const RunOptions& options) {
    if (last < first) throw std::invalid_argument("empty seed range");
    const std::string hash = scenario_hash(doc);

    std::vector<double> change, effect, promotion, per_seed_mean;
    std::vector<std::size_t> counts;
    std::uint64_t false_detections = 0, decode_failures = 0, embed_checked = 0, embed_violations = 0;
    std::uint64_t promotions = 0, promotion_violations = 0, attacker_changes = 0, events = 0, changes = 0;
    Fields members = Fields::array();

    for (std::uint64_t seed = first;; ++seed) {
        RunResult r;
        try {
            r = run_scenario(parse_scenario(doc, seed), options, hash);
        } catch (const std::exception& e) {
            throw SweepFailure(seed, e.what());
        }
        if (r.violation) throw SweepFailure(seed, "invariant violated: " + *r.violation);
        const auto& s = r.stats;
        change.insert(change.end(), s.change_latency_ms.begin(), s.change_latency_ms.end());
        effect.insert(effect.end(), s.effect_latency_ms.begin(), s.effect_latency_ms.end());
        promotion.insert(promotion.end(), s.promotion_latency_ms.begin(), s.promotion_latency_ms.end());
        per_seed_mean.push_back(s.linkability.mean_pseudonyms);
        for (const auto& [_, sub] : s.linkability.subscribers) counts.push_back(sub.pseudonym_count);
        false_detections += s.false_detections;
        decode_failures += s.decode_failures;
        embed_checked += s.embed_checked;
        embed_violations += s.embed_violations;
        promotions += s.promotions;
        promotion_violations += s.promotion_violations;
        attacker_changes += s.attacker_changes;
        events += s.scheduler_events;
        changes += s.changes_on_card;
        members.push_back({{"seed", seed},
                           {"events", s.scheduler_events},
                           {"mean_pseudonyms", s.linkability.mean_pseudonyms},
                           {"changes", s.changes_on_card}});
        if (seed == last) break;
    }

    std::map<std::size_t, std::size_t> histogram;
    for (auto c : counts) ++histogram[c];
    Fields hist = Fields::object();
    for (const auto& [k, v] : histogram) hist[std::to_string(k)] = v;
    double mean = 0;
    for (auto c : counts) mean += static_cast<double>(c);
    if (!counts.empty()) mean /= static_cast<double>(counts.size());

    return {{"format", "mimsi-sweep/1"},
            {"tool_version", kToolVersion},
            {"scenario_sha256", hash},
            {"seeds", {{"first", first}, {"last", last}, {"count", last - first + 1}}},
            {"events", events},
            {"pseudonyms",
             {{"mean", mean},
              {"per_seed", summarize(per_seed_mean).to_json()},
              {"distribution", hist}}},
            {"changes", changes},
            {"change_latency_ms", summarize(change).to_json()},
            {"effect_latency_ms", summarize(effect).to_json()},
            {"promotion_latency_ms", summarize(promotion).to_json()},
            {"promotions", {{"count", promotions}, {"violations", promotion_violations}}},
            {"signals", {{"false_detections", false_detections}, {"decode_failures", decode_failures}}},
            {"embed_audit", {{"checked", embed_checked}, {"violations", embed_violations}}},
            {"attacker_changes", attacker_changes},
            {"members", members}};
}

}  // namespace mimsi
