// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adversary.hpp"
#include "conformance.hpp"
#include "explorer.hpp"
#include "home_network.hpp"
#include "simulator.hpp"
#include "usim.hpp"

#ifndef MIMSI_SCENARIO_DIR
#define MIMSI_SCENARIO_DIR "scenarios"
#endif

using namespace mimsi;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

json load(const std::string& dir, const std::string& name) {
    std::ifstream in(dir + "/" + name);
    if (!in) throw std::runtime_error("cannot open " + dir + "/" + name);
    return json::parse(in);
}

// Audit counters collected over every simulated run, for criteria 6 and 7.
struct Corpus {
    std::uint64_t runs = 0;
    std::uint64_t events = 0;
    std::uint64_t invariant_checks = 0;
    std::uint64_t violations = 0;
    std::uint64_t embed_checked = 0;
    std::uint64_t embed_violations = 0;
    std::uint64_t promotions = 0;
    std::uint64_t promotion_violations = 0;
    std::uint64_t conservation_failures = 0;
    std::vector<std::string> first_problems;

    void add(const RunResult& r, std::uint64_t seed) {
        ++runs;
        events += r.stats.scheduler_events;
        invariant_checks += r.stats.invariant_checks;
        embed_checked += r.stats.embed_checked;
        embed_violations += r.stats.embed_violations;
        promotions += r.stats.promotions;
        promotion_violations += r.stats.promotion_violations;
        if (r.metrics["auth"]["conservation_ok"] != true) ++conservation_failures;
        if (r.violation) {
            ++violations;
            if (first_problems.size() < 3) first_problems.push_back("seed " + std::to_string(seed) + ": " + *r.violation);
        }
    }
};

struct Subscriber {
    Provisioning prov;
    UsimPersonalization card;
};

Subscriber random_subscriber(Rng& rng, const OperatorPrefix& prefix, Scheme scheme, std::size_t index) {
    SubscriberKey key;
    fill_random(rng, key.bytes);
    Block128 opc;
    fill_random(rng, opc);
    char msin[11];
    std::snprintf(msin, sizeof msin, "%010zu", 100000 + index * 10);
    Imsi imsi = prefix.with_msin(msin);
    std::vector<Imsi> predefined;
    if (scheme != Scheme::C)
        for (std::size_t j = 0; j < 3; ++j) {
            std::snprintf(msin, sizeof msin, "%010zu", 100000 + index * 10 + j);
            predefined.push_back(prefix.with_msin(msin));
        }
    Sqn sqn(rng() & 0xFFFFFFFF);
    return {Provisioning{"acct-" + std::to_string(index), key, opc, kNormalAmf, sqn, scheme, imsi, predefined},
            UsimPersonalization{key, opc, sqn, scheme, imsi, predefined, SelectionMode::Cyclic, index, 0, prefix}};
}

Verdict criterion_conformance() {
    auto start = Clock::now();
    auto report = run_conformance(Suite::Milenage);
    double t = seconds_since(start);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu MILENAGE sets bit-exact, %.3f s (limit 1 s)", milenage_test_sets().size(), t);
    if (!report.ok()) return {false, *report.first_failure};
    return {t < 1.0, buf};
}

Verdict criterion_smac_false_positives() {
    const std::size_t subscribers = 100, per_subscriber = 10'000, batch = 100;
    OperatorPrefix prefix{"001", "01"};
    Rng rng = substream(2, "acceptance");
    HomeNetwork hn(substream(2, "hn"), prefix);
    std::vector<Usim> cards;
    std::vector<Imsi> identities;
    for (std::size_t i = 0; i < subscribers; ++i) {
        auto s = random_subscriber(rng, prefix, i % 2 ? Scheme::B : Scheme::C, i);
        hn.provision(s.prov);
        cards.emplace_back(s.card);
        identities.push_back(s.prov.initial_imsi);
    }
    auto start = Clock::now();
    std::uint64_t vectors = 0, accepted = 0, detections = 0, changes = 0;
    for (std::size_t i = 0; i < subscribers; ++i) {
        for (std::size_t n = 0; n < per_subscriber; n += batch) {
            auto b = hn.request_vectors(identities[i], batch, 0);
            for (const auto& v : b.vectors) {
                ++vectors;
                auto r = cards[i].handle_auth_request(v.rand, v.autn);
                if (std::holds_alternative<Accepted>(r.outcome)) ++accepted;
                const auto* none = std::get_if<NoSignal>(&r.signal);
                if (!none || none->decode_failed) ++detections;
                if (r.change) ++changes;
            }
        }
    }
    double t = seconds_since(start);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "%llu plain vectors over %zu subscribers (B and C cards), %llu accepted, %llu detections, "
                  "%llu changes, %.1f s (limit 120 s)",
                  (unsigned long long)vectors, subscribers, (unsigned long long)accepted,
                  (unsigned long long)detections, (unsigned long long)changes, t);
    return {vectors >= 1'000'000 && accepted == vectors && detections == 0 && changes == 0 && t < 120.0, buf};
}

Verdict criterion_injection() {
    const std::size_t subscribers = 100;
    OperatorPrefix prefix{"001", "01"};
    Rng rng = substream(3, "acceptance");
    Rng attacker = substream(3, "adversary");
    HomeNetwork hn(substream(3, "hn"), prefix);
    for (std::size_t i = 0; i < 400; ++i) {
        char msin[11];
        std::snprintf(msin, sizeof msin, "%010zu", 900000 + i);
        hn.add_free_imsi(prefix.with_msin(msin));
    }
    InjectionTally random, replay;
    for (std::size_t i = 0; i < subscribers; ++i) {
        Scheme scheme = std::array{Scheme::A, Scheme::B, Scheme::C}[i % 3];
        auto s = random_subscriber(rng, prefix, scheme, i);
        hn.provision(s.prov);
        Usim card(s.card);
        for (int k = 0; k < 1000; ++k) {
            auto req = random_auth_request(attacker);
            random.record(inject_rand(card, req.rand, req.autn));
        }
        // Ten genuine challenges, signal-carrying where the scheme allows,
        // each replayed after the card has moved past it.
        if (scheme != Scheme::A) hn.trigger_change(s.prov.account, 0);
        auto batch = hn.request_vectors(card.read_ef_imsi(), 10, 0);
        for (const auto& v : batch.vectors) card.handle_auth_request(v.rand, v.autn);
        for (const auto& v : batch.vectors) replay.record(inject_rand(card, v.rand, v.autn));
    }
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "random: %llu attempts, %llu accepted, %llu IMSI changes; replay: %llu attempts, %llu accepted, "
                  "%llu SqnStale, %llu IMSI changes",
                  (unsigned long long)random.attempts, (unsigned long long)random.accepted,
                  (unsigned long long)random.imsi_changes, (unsigned long long)replay.attempts,
                  (unsigned long long)replay.accepted, (unsigned long long)replay.sqn_stale,
                  (unsigned long long)replay.imsi_changes);
    bool ok = random.attempts >= 100'000 && replay.attempts >= 1'000 && random.accepted == 0 &&
              replay.accepted == 0 && random.imsi_changes == 0 && replay.imsi_changes == 0 &&
              replay.sqn_stale == replay.attempts;
    return {ok, buf};
}

Verdict criterion_desync_ab() {
    auto start = Clock::now();
    std::size_t skeletons = 0;
    std::uint64_t leaves = 0;
    std::string problem;
    for (const auto& sk : standard_skeletons()) {
        if (sk.scheme == Scheme::C) continue;
        ++skeletons;
        auto v = exhaustive_small_run(sk);
        leaves += v.leaves;
        if (!v.ok && problem.empty()) problem = sk.name + ": " + (v.violations.empty() ? "failed" : v.violations.front());
    }
    double t = seconds_since(start);
    if (!problem.empty()) return {false, problem};
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu scheme A/B skeletons, %llu interleavings, 0 violations, %.2f s (limit 60 s)",
                  skeletons, (unsigned long long)leaves, t);
    return {skeletons > 0 && t < 60.0, buf};
}

Verdict criterion_desync_c(const json& doc, Corpus& corpus) {
    const std::uint64_t seeds = 100;
    auto start = Clock::now();
    std::uint64_t min_events = UINT64_MAX, power_offs = 0, air_dups = 0, batch_dups = 0, signal_drops = 0;
    std::uint64_t abandon = 0, violations = 0;
    std::string first;
    std::string hash = sha256_hex(doc.dump());
    for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
        auto r = run_scenario(parse_scenario(doc, seed), {}, hash);
        corpus.add(r, seed);
        min_events = std::min(min_events, r.stats.scheduler_events);
        air_dups += r.stats.air_duplicates;
        batch_dups += r.stats.batch_duplicates;
        abandon += r.stats.abandon_violations;
        if (r.violation) {
            ++violations;
            if (first.empty()) first = "seed " + std::to_string(seed) + ": " + *r.violation;
        }
        for (const auto& e : r.trace.events()) {
            if (e.kind == "power_off") ++power_offs;
            if (e.kind == "air_drop" && e.fields.value("reason", "") == "lost" &&
                e.fields.value("message", "") == "auth_request")
                ++signal_drops;
        }
    }
    double t = seconds_since(start);
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "%llu seeds, min %llu events/seed, %llu power-offs, %llu duplicated air messages, "
                  "%llu duplicated batches, %llu lost challenges, %llu reachability breaches, "
                  "%llu never-abandon breaches, %.1f s (limit 300 s)",
                  (unsigned long long)seeds, (unsigned long long)min_events, (unsigned long long)power_offs,
                  (unsigned long long)air_dups, (unsigned long long)batch_dups, (unsigned long long)signal_drops,
                  (unsigned long long)violations, (unsigned long long)abandon, t);
    if (!first.empty()) return {false, first};
    bool ok = min_events >= 10'000 && violations == 0 && abandon == 0 && power_offs > 0 && air_dups > 0 &&
              batch_dups > 0 && signal_drops > 0 && t < 300.0;
    return {ok, buf};
}

Verdict criterion_embed(const Corpus& c) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "%llu runs: %llu flagged scheme-C vectors, %llu without embedding; %llu promotions, %llu faulty",
                  (unsigned long long)c.runs, (unsigned long long)c.embed_checked,
                  (unsigned long long)c.embed_violations, (unsigned long long)c.promotions,
                  (unsigned long long)c.promotion_violations);
    return {c.embed_checked > 0 && c.promotions > 0 && c.embed_violations == 0 && c.promotion_violations == 0, buf};
}

Verdict criterion_uniqueness(const Corpus& c) {
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "%llu runs, %llu events, %llu full index scans, %llu breaches, %llu auth conservation failures",
                  (unsigned long long)c.runs, (unsigned long long)c.events, (unsigned long long)c.invariant_checks,
                  (unsigned long long)c.violations, (unsigned long long)c.conservation_failures);
    if (!c.first_problems.empty()) return {false, c.first_problems.front()};
    return {c.runs > 0 && c.invariant_checks == c.events && c.violations == 0 && c.conservation_failures == 0, buf};
}

double sweep_mean_pseudonyms(json doc, std::uint64_t seeds, Corpus& corpus, bool* all_one = nullptr) {
    double total = 0;
    std::string hash = sha256_hex(doc.dump());
    for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
        auto r = run_scenario(parse_scenario(doc, seed), {}, hash);
        corpus.add(r, seed);
        total += r.stats.linkability.mean_pseudonyms;
        if (all_one)
            for (const auto& [account, link] : r.stats.linkability.subscribers)
                if (link.pseudonym_count != 1) *all_one = false;
    }
    return total / double(seeds);
}

Verdict criterion_trend(const json& scheme_a, const json& scheme_b, Corpus& corpus) {
    const std::uint64_t seeds = 100;
    std::vector<double> means;
    for (int threshold : {1, 5, 20}) {
        json doc = scheme_a;
        apply_override(doc, "population.change_threshold", threshold);
        means.push_back(sweep_mean_pseudonyms(doc, seeds, corpus));
    }
    bool all_one = true;
    double baseline = sweep_mean_pseudonyms(scheme_b, seeds, corpus, &all_one);
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "mean pseudonyms over %llu seeds: threshold 1 -> %.2f, 5 -> %.2f, 20 -> %.2f; fixed-IMSI baseline "
                  "%.2f (%s)",
                  (unsigned long long)seeds, means[0], means[1], means[2], baseline,
                  all_one ? "every subscriber exactly 1" : "some subscriber not 1");
    return {means[0] > means[1] && means[1] > means[2] && all_one, buf};
}

Verdict criterion_indistinguishability() {
    const std::size_t subscribers = 100, per_kind = 50;
    OperatorPrefix prefix{"001", "01"};
    Rng rng = substream(9, "acceptance");
    std::vector<Block128> signal, plain;
    for (std::size_t i = 0; i < subscribers; ++i) {
        auto s = random_subscriber(rng, prefix, Scheme::C, i);
        AucCredentials creds{Milenage(s.prov.key, s.prov.opc), s.prov.initial_sqn, kNormalAmf};
        for (std::size_t k = 0; k < per_kind; ++k) {
            char msin[11];
            std::snprintf(msin, sizeof msin, "%010zu", 500000 + i * per_kind + k);
            signal.push_back(generate_vector_signal_b(creds, rng).rand);
            signal.push_back(generate_vector_signal_c(creds, prefix.with_msin(msin), rng).rand);
            plain.push_back(generate_vector_plain(creds, rng).rand);
            plain.push_back(generate_vector_plain(creds, rng).rand);
        }
    }
    auto result = rand_distinguishability(signal, plain, rng, 100);
    std::string scores;
    for (const auto& c : result.classifiers) {
        char one[64];
        std::snprintf(one, sizeof one, "%s%s %.4f", scores.empty() ? "" : ", ", c.name.c_str(), c.accuracy);
        scores += one;
    }
    char buf[360];
    std::snprintf(buf, sizeof buf,
                  "%zu signal vs %zu plain RANDs; %s; best %.4f within 0.5 +/- %.4f (3 sigma), permutation p = %.2f",
                  signal.size(), plain.size(), scores.c_str(), result.best_accuracy, 3 * result.sigma,
                  result.permutation_p);
    return {signal.size() >= 10'000 && plain.size() >= 10'000 && result.pass, buf};
}

Verdict criterion_determinism(const std::vector<json>& docs) {
    std::size_t pairs = 0;
    for (const auto& doc : docs) {
        for (std::uint64_t seed : {3, 41}) {
            std::string hash = sha256_hex(doc.dump());
            auto a = run_scenario(parse_scenario(doc, seed), {}, hash);
            auto b = run_scenario(parse_scenario(doc, seed), {}, hash);
            if (a.trace_jsonl != b.trace_jsonl || a.metrics_json != b.metrics_json)
                return {false, "rerun differs at seed " + std::to_string(seed)};
            ++pairs;
        }
    }
    return {pairs > 0, std::to_string(pairs) + " (scenario, seed) pairs rerun; traces and metrics byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mimsi acceptance suite"};
    std::string dir = MIMSI_SCENARIO_DIR;
    std::vector<int> only;
    app.add_option("--scenarios", dir, "Directory holding the acceptance scenarios");
    app.add_option("--only", only, "Run only these criteria (1-10)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };
    // 6 and 7 audit the corpora produced by 5 and 8.
    if (wanted(6) || wanted(7)) {
        if (!wanted(5)) only.push_back(5);
        if (!wanted(8)) only.push_back(8);
    }

    json scheme_c, scheme_a, scheme_b;
    try {
        scheme_c = load(dir, "scheme_c_mixed.json");
        scheme_a = load(dir, "scheme_a_threshold.json");
        scheme_b = load(dir, "scheme_b_fixed.json");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: %s\n", e.what());
        return 2;
    }

    Corpus corpus;
    std::map<int, std::pair<const char*, Verdict>> verdicts;
    auto evaluate = [&](int n, const char* title, const std::function<Verdict()>& check) {
        if (!wanted(n)) return;
        std::fprintf(stderr, "criterion %d: %s...\n", n, title);
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        verdicts[n] = {title, v};
    };

    evaluate(1, "cryptographic conformance", criterion_conformance);
    evaluate(2, "SMAC false-positive bound", criterion_smac_false_positives);
    evaluate(3, "forgery and replay resistance", criterion_injection);
    evaluate(4, "desync freedom, schemes A/B", criterion_desync_ab);
    evaluate(5, "desync freedom, scheme C", [&] { return criterion_desync_c(scheme_c, corpus); });
    evaluate(8, "pseudonymity trend", [&] { return criterion_trend(scheme_a, scheme_b, corpus); });
    evaluate(6, "resend until acknowledged", [&] { return criterion_embed(corpus); });
    evaluate(7, "IMSI uniqueness and conservation", [&] { return criterion_uniqueness(corpus); });
    evaluate(9, "RAND indistinguishability", criterion_indistinguishability);
    evaluate(10, "determinism", [&] { return criterion_determinism({scheme_c, scheme_a, scheme_b}); });

    int failed = 0;
    for (const auto& [n, entry] : verdicts) {
        const auto& [title, v] = entry;
        if (!v.pass) ++failed;
        std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", n, title, v.detail.c_str());
    }
    return failed == 0 ? 0 : 1;
}
